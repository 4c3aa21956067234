//! Flat `key = value` run configuration with unit suffixes.
//!
//! ```text
//! # strong probe, three atoms
//! sweep = probe_ratio
//! grid = 0.4, 2.0
//! coupling_rabi = 6.06 MHz
//! c6 = 50 GHz·um6
//! temperature = 1 uK
//! ```

use std::collections::HashSet;
use std::path::Path;

use crate::hilbert::BasisMode;
use crate::params::{mhz, Detuning, DisorderMode, SimParams};
use crate::sweep::{ControlMode, SweepKind, SweepSpec};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dimension {
    Frequency,
    Dispersion,
    Length,
    Temperature,
    Time,
}

impl Dimension {
    fn describe(self) -> &'static str {
        match self {
            Self::Frequency => "a frequency (Hz, kHz, MHz, GHz)",
            Self::Dispersion => "a C6 coefficient (GHz·um6, MHz·um6)",
            Self::Length => "a length (um, nm)",
            Self::Temperature => "a temperature (uK, mK, nK)",
            Self::Time => "a time (us, ns, ms)",
        }
    }

    /// Factor to the internal unit: rad/μs, rad/μs·μm⁶, μm, μK, μs.
    fn factor(self, unit: &str) -> Option<f64> {
        let u: String =
            unit.chars().filter(|c| !matches!(c, ' ' | '·' | '*' | '⋅')).collect::<String>().replace('μ', "u");
        let freq = |u: &str| match u {
            "Hz" => Some(1e-6),
            "kHz" => Some(1e-3),
            "MHz" => Some(1.0),
            "GHz" => Some(1e3),
            _ => None,
        };
        match self {
            Self::Frequency => freq(&u).map(mhz),
            Self::Dispersion => u.strip_suffix("um6").and_then(freq).map(mhz),
            Self::Length => match u.as_str() {
                "um" => Some(1.0),
                "nm" => Some(1e-3),
                _ => None,
            },
            Self::Temperature => match u.as_str() {
                "uK" => Some(1.0),
                "mK" => Some(1e3),
                "nK" => Some(1e-3),
                _ => None,
            },
            Self::Time => match u.as_str() {
                "us" => Some(1.0),
                "ns" => Some(1e-3),
                "ms" => Some(1e3),
                _ => None,
            },
        }
    }
}

/// Splits `"6.06 MHz"` into the longest numeric prefix and the remainder.
fn split_number(value: &str) -> Option<(f64, &str)> {
    let value = value.trim();
    let mut ends: Vec<usize> = value.char_indices().map(|(i, _)| i).skip(1).collect();
    ends.push(value.len());
    ends.into_iter().rev().find_map(|end| value[..end].trim().parse::<f64>().ok().map(|x| (x, value[end..].trim())))
}

fn line_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line { line, message: message.into() }
}

fn quantity(line: usize, key: &str, value: &str, dim: Dimension) -> Result<f64, ConfigError> {
    let (x, unit) =
        split_number(value).ok_or_else(|| line_err(line, format!("{key}: expected a number, got {value:?}")))?;
    if unit.is_empty() {
        return Err(line_err(line, format!("{key}: missing unit, expected {}", dim.describe())));
    }
    let f =
        dim.factor(unit).ok_or_else(|| line_err(line, format!("{key}: unit {unit:?} is not {}", dim.describe())))?;
    Ok(x * f)
}

fn plain<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| line_err(line, format!("{key}: cannot parse {value:?}")))
}

fn grid_values(line: usize, value: &str, kind: SweepKind) -> Result<Vec<f64>, ConfigError> {
    let dim = match kind {
        SweepKind::Temperature => Some(Dimension::Temperature),
        SweepKind::Distance => Some(Dimension::Length),
        _ => None,
    };
    let item = |s: &str| -> Result<f64, ConfigError> {
        let (x, unit) = split_number(s).ok_or_else(|| line_err(line, format!("grid: cannot parse {s:?}")))?;
        match (unit.is_empty(), dim) {
            (true, _) => Ok(x),
            (false, Some(d)) => d
                .factor(unit)
                .map(|f| x * f)
                .ok_or_else(|| line_err(line, format!("grid: unit {unit:?} is not {}", d.describe()))),
            (false, None) => Err(line_err(line, format!("grid: {kind} values are dimensionless, got unit {unit:?}"))),
        }
    };
    let v = value.trim();
    if let Some(args) = v.strip_prefix("linspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<_> = args.split(',').collect();
        if parts.len() != 3 {
            return Err(line_err(line, "grid: linspace takes (start, stop, count)"));
        }
        let (a, b) = (item(parts[0])?, item(parts[1])?);
        let n: usize = plain(line, "grid count", parts[2])?;
        if n < 1 {
            return Err(line_err(line, "grid: linspace count must be at least 1"));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        return Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect());
    }
    v.split(',').map(item).collect()
}

const KEYS: &[&str] = &[
    "sweep",
    "grid",
    "control",
    "probe_rabi",
    "probe_ratio",
    "coupling_rabi",
    "intermediate_detuning",
    "rydberg_detuning",
    "decay_intermediate",
    "decay_rydberg",
    "dephasing_ge",
    "dephasing_er",
    "c6",
    "distance",
    "temperature",
    "trap_frequency",
    "sigma",
    "atoms",
    "trajectories",
    "dt",
    "t_final",
    "tail_fraction",
    "record_every",
    "seed",
    "basis",
    "pair_shift",
    "disorder",
    "max_doublings",
];

/// Parses configuration text. Every key is optional; omitted ones take the
/// defaults of [`SimParams::default`] and a single-point run.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| line_err(line, format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(line_err(line, format!("unknown key {key:?}")));
        }
        if !seen.insert(key.to_string()) {
            return Err(line_err(line, format!("duplicate key {key:?}")));
        }
        if value.is_empty() {
            return Err(line_err(line, format!("{key}: empty value")));
        }
        entries.push((line, key, value));
    }

    let mut p = SimParams::default();
    let mut kind = SweepKind::Single;
    let mut control = ControlMode::Both;
    let mut max_doublings = crate::sweep::MAX_DOUBLINGS;
    let mut grid = None;
    let mut probe_ratio = None;
    let mut probe_line = None;
    for &(line, key, value) in &entries {
        use Dimension::*;
        match key {
            "sweep" => {
                kind = SweepKind::parse(value).ok_or_else(|| {
                    line_err(
                        line,
                        format!(
                            "sweep: expected probe_ratio, atom_number, temperature, distance or single, got {value:?}"
                        ),
                    )
                })?
            }
            "grid" => grid = Some((line, value)),
            "control" => {
                control = match value {
                    "both" => ControlMode::Both,
                    "with" => ControlMode::With,
                    "without" => ControlMode::Without,
                    _ => return Err(line_err(line, format!("control: expected both, with or without, got {value:?}"))),
                }
            }
            "probe_rabi" => {
                p.probe_rabi = quantity(line, key, value, Frequency)?;
                probe_line = Some(line);
            }
            "probe_ratio" => probe_ratio = Some((line, plain::<f64>(line, key, value)?)),
            "coupling_rabi" => p.coupling_rabi = quantity(line, key, value, Frequency)?,
            "intermediate_detuning" => p.intermediate_detuning = quantity(line, key, value, Frequency)?,
            "rydberg_detuning" => {
                p.rydberg_detuning = if value == "auto" {
                    Detuning::AutoAntiblockade
                } else {
                    Detuning::Fixed(quantity(line, key, value, Frequency)?)
                }
            }
            "decay_intermediate" => p.decay_intermediate = quantity(line, key, value, Frequency)?,
            "decay_rydberg" => p.decay_rydberg = quantity(line, key, value, Frequency)?,
            "dephasing_ge" => p.dephasing_ge = quantity(line, key, value, Frequency)?,
            "dephasing_er" => p.dephasing_er = quantity(line, key, value, Frequency)?,
            "c6" => p.c6 = quantity(line, key, value, Dispersion)?,
            "distance" => p.distance = quantity(line, key, value, Length)?,
            "temperature" => p.temperature = quantity(line, key, value, Temperature)?,
            "trap_frequency" => p.trap_frequency = quantity(line, key, value, Frequency)?,
            "sigma" => p.sigma_override = Some(quantity(line, key, value, Length)?),
            "atoms" => p.atoms = plain(line, key, value)?,
            "trajectories" => p.trajectories = plain(line, key, value)?,
            "dt" => p.dt = quantity(line, key, value, Time)?,
            "t_final" => p.t_final = quantity(line, key, value, Time)?,
            "tail_fraction" => p.tail_fraction = plain(line, key, value)?,
            "record_every" => p.record_every = plain(line, key, value)?,
            "seed" => p.seed = plain(line, key, value)?,
            "basis" => {
                p.basis_mode = match value {
                    "full" => BasisMode::Full,
                    "blockade" => BasisMode::BlockadeConstrained,
                    _ => return Err(line_err(line, format!("basis: expected full or blockade, got {value:?}"))),
                }
            }
            "pair_shift" => p.pair_shift = quantity(line, key, value, Frequency)?,
            "disorder" => {
                p.disorder_mode = match value {
                    "first_order" => DisorderMode::FirstOrder,
                    "exact" => DisorderMode::ExactDistance,
                    _ => return Err(line_err(line, format!("disorder: expected first_order or exact, got {value:?}"))),
                }
            }
            "max_doublings" => max_doublings = plain(line, key, value)?,
            _ => unreachable!("key list checked above"),
        }
    }
    if let Some((line, ratio)) = probe_ratio {
        if let Some(other) = probe_line {
            return Err(line_err(line, format!("probe_ratio conflicts with probe_rabi on line {other}")));
        }
        p = p.with_probe_ratio(ratio);
    }
    p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let mut spec = SweepSpec::new(kind, p);
    spec.control = control;
    spec.max_doublings = max_doublings;
    if let Some((line, value)) = grid {
        spec.grid = grid_values(line, value, kind)?;
    }
    spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}
