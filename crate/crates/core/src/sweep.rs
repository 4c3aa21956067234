//! Parameter sweeps over the probe ratio, atom number, temperature and
//! control distance, with automatic horizon extension and CSV output.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::disorder::{self, DisorderRealization};
use crate::hilbert::{Basis, HilbertError, StateVector};
use crate::mcwf::{self, McwfError, SteadyState, TimeGrid};
use crate::model::{ModelError, ModelOperators};
use crate::observables::{ObservableSeries, ObservableSet, P_MULTI};
use crate::oracle::{self, OracleError};
use crate::params::{Detuning, ParamError, SimParams};

/// Horizon doublings attempted on an unconverged point (up to 4×).
pub const MAX_DOUBLINGS: u32 = 2;

pub const CSV_HEADER: &str =
    "param,fr_with,fr_with_err,fr_without,fr_without_err,converged_with,converged_without,pmulti_max";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    ProbeRatio,
    AtomNumber,
    /// μK
    Temperature,
    /// μm
    Distance,
    /// A single point at the base parameters; `param` is the probe ratio.
    Single,
}

impl SweepKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "probe_ratio" => Self::ProbeRatio,
            "atom_number" => Self::AtomNumber,
            "temperature" => Self::Temperature,
            "distance" => Self::Distance,
            "single" | "single_run" => Self::Single,
            _ => return None,
        })
    }

    pub fn default_grid(self, base: &SimParams) -> Vec<f64> {
        let steps = |start: f64, step: f64, n: usize| (0..n).map(|i| start + step * i as f64).collect();
        match self {
            Self::ProbeRatio => steps(0.1, 0.1, 25),
            Self::AtomNumber => steps(1.0, 1.0, 6),
            Self::Temperature => vec![1.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            Self::Distance => steps(2.0, 0.25, 29),
            Self::Single => vec![base.probe_ratio()],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ProbeRatio => "probe_ratio",
            Self::AtomNumber => "atom_number",
            Self::Temperature => "temperature",
            Self::Distance => "distance",
            Self::Single => "single",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlMode {
    Both,
    With,
    Without,
}

impl ControlMode {
    pub fn settings(self) -> &'static [bool] {
        match self {
            Self::Both => &[true, false],
            Self::With => &[true],
            Self::Without => &[false],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Trajectories,
    /// Density-matrix integration of one disorder realisation per point.
    Oracle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub base: SimParams,
    pub control: ControlMode,
    pub engine: Engine,
    pub max_doublings: u32,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid must be strictly increasing (at position {0})")]
    NotIncreasing(usize),
    #[error("point {param}: {source}")]
    Point { param: f64, source: PointError },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PointError {
    #[error(transparent)]
    Parameter(#[from] ParamError),
    #[error(transparent)]
    Mcwf(#[from] McwfError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

impl SweepSpec {
    pub fn new(kind: SweepKind, base: SimParams) -> Self {
        Self {
            kind,
            grid: kind.default_grid(&base),
            base,
            control: ControlMode::Both,
            engine: Engine::Trajectories,
            max_doublings: MAX_DOUBLINGS,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.grid.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if let Some(i) = self.grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SweepError::NotIncreasing(i + 1));
        }
        for (i, &v) in self.grid.iter().enumerate() {
            self.point_params(i).map_err(|source| SweepError::Point { param: v, source })?;
        }
        Ok(())
    }

    /// Parameters of grid point `i` with control present.
    pub fn point_params(&self, i: usize) -> Result<SimParams, PointError> {
        let v = self.grid[i];
        let bad = || PointError::Parameter(ParamError::NotFinite { name: "grid", value: v });
        let mut p = self.base.clone();
        match self.kind {
            SweepKind::ProbeRatio => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(bad());
                }
                p = p.with_probe_ratio(v);
            }
            SweepKind::AtomNumber => {
                if !(v >= 1.0 && v.fract() == 0.0 && v <= 64.0) {
                    return Err(bad());
                }
                p.atoms = v as usize;
            }
            SweepKind::Temperature => p.temperature = v,
            SweepKind::Distance => {
                p.distance = v;
                p.rydberg_detuning = Detuning::AutoAntiblockade;
            }
            SweepKind::Single => {}
        }
        p.control_present = true;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettingOutcome {
    pub steady: SteadyState,
    /// Horizon of the final attempt, μs.
    pub t_final: f64,
    pub pmulti_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub param: f64,
    pub with_control: Option<SettingOutcome>,
    pub without_control: Option<SettingOutcome>,
    /// `r0 < R_b`, outside the regime the model assumes.
    pub below_blockade_radius: bool,
}

impl PointResult {
    pub fn converged(&self) -> bool {
        [self.with_control, self.without_control].iter().flatten().all(|o| o.steady.converged)
    }

    pub fn pmulti_max(&self) -> f64 {
        [self.with_control, self.without_control].iter().flatten().map(|o| o.pmulti_max).fold(f64::NAN, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(PointResult::converged)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let num =
            |o: Option<SettingOutcome>, f: fn(&SettingOutcome) -> f64| o.map(|o| f(&o).to_string()).unwrap_or_default();
        let flag = |o: Option<SettingOutcome>| o.map(|o| o.steady.converged.to_string()).unwrap_or_default();
        for p in &self.points {
            let pm = p.pmulti_max();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.param,
                num(p.with_control, |o| o.steady.f_r),
                num(p.with_control, |o| o.steady.stderr),
                num(p.without_control, |o| o.steady.f_r),
                num(p.without_control, |o| o.steady.stderr),
                flag(p.with_control),
                flag(p.without_control),
                if pm.is_nan() { String::new() } else { pm.to_string() },
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Writes the CSV atomically enough for our purposes: all at once.
pub fn emit_csv(result: &SweepResult, path: &Path) -> io::Result<()> {
    std::fs::write(path, result.to_csv_string())
}

fn pmulti_max(series: &ObservableSeries) -> f64 {
    series.mean_of(P_MULTI).map(|m| m.iter().copied().fold(0.0, f64::max)).unwrap_or(f64::NAN)
}

fn run_setting(
    params: &SimParams,
    point: u64,
    engine: Engine,
    max_doublings: u32,
) -> Result<SettingOutcome, PointError> {
    let basis = Basis::new(params.atoms, params.basis_mode)?;
    let observables = ObservableSet::<f64>::standard(&basis);
    let mut p = params.clone();
    let mut attempt = 0;
    loop {
        let series = match engine {
            Engine::Trajectories => mcwf::simulate(&p, &basis, &observables, point)?,
            Engine::Oracle => oracle_series(&p, &basis, &observables, point)?,
        };
        let steady = mcwf::steady_state(&series, p.tail_fraction, p.control_present)?;
        if steady.converged || attempt >= max_doublings {
            return Ok(SettingOutcome { steady, t_final: p.t_final, pmulti_max: pmulti_max(&series) });
        }
        attempt += 1;
        p.t_final *= 2.0;
    }
}

/// Oracle run of one realisation: the ideal one at zero width, otherwise the
/// first trajectory stream's sample.
fn oracle_series(
    params: &SimParams,
    basis: &Basis,
    observables: &ObservableSet<f64>,
    point: u64,
) -> Result<ObservableSeries, PointError> {
    let realization = if mcwf::disorder_is_active(params) {
        disorder::sample(params, &mut mcwf::trajectory_rng(params.seed, point, 0))
    } else {
        DisorderRealization::ideal(params)
    };
    let ops = ModelOperators::build(params, basis, &realization)?;
    let rho0 = oracle::pure_state(&StateVector::basis_state(basis.dim(), basis.ground_index()));
    Ok(oracle::integrate(&ops, &rho0, &TimeGrid::from_params(params), observables)?.series)
}

fn run_point(spec: &SweepSpec, i: usize) -> Result<PointResult, PointError> {
    let p = spec.point_params(i)?;
    let mut result = PointResult {
        param: spec.grid[i],
        with_control: None,
        without_control: None,
        below_blockade_radius: p.distance < disorder::blockade_radius(&p),
    };
    for &with in spec.control.settings() {
        let setting = SimParams { control_present: with, ..p.clone() };
        let outcome = run_setting(&setting, i as u64, spec.engine, spec.max_doublings)?;
        if with {
            result.with_control = Some(outcome);
        } else {
            result.without_control = Some(outcome);
        }
    }
    Ok(result)
}

/// Runs every grid point on the current rayon pool. Trajectory `m` of point
/// `i` always uses stream `(seed, i, m)`, for both control settings, so
/// results are independent of the worker count.
pub fn run_sweep(spec: &SweepSpec, mut progress: impl FnMut(&PointResult)) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let wrap = |i: usize| move |source| SweepError::Point { param: spec.grid[i], source };
    let points = match spec.engine {
        Engine::Trajectories => {
            let mut points = Vec::with_capacity(spec.grid.len());
            for i in 0..spec.grid.len() {
                let r = run_point(spec, i).map_err(wrap(i))?;
                progress(&r);
                points.push(r);
            }
            points
        }
        Engine::Oracle => {
            let points = (0..spec.grid.len())
                .into_par_iter()
                .map(|i| run_point(spec, i).map_err(wrap(i)))
                .collect::<Result<Vec<_>, _>>()?;
            points.iter().for_each(&mut progress);
            points
        }
    };
    Ok(SweepResult { kind: spec.kind, points })
}
