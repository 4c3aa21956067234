//! Physical and numerical parameters.
//!
//! Frequencies and rates are angular, in rad/μs; lengths in μm; temperature
//! in μK; time in μs. A value quoted as "X MHz" enters as `2π·X`.

use std::f64::consts::TAU;

use crate::hilbert::BasisMode;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb, kg.
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

/// Angular frequency in rad/μs for an ordinary frequency in MHz.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Detuning {
    Fixed(f64),
    /// `δ = −C6/r0⁶`, cancelling the mean control-ensemble shift.
    AutoAntiblockade,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisorderMode {
    /// `U_j = U(r0) − 6·C6·|Δr_j|/r0⁷`.
    FirstOrder,
    /// `U_j = C6/|r_j|⁶` with the sampled 3-D position.
    ExactDistance,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamError {
    #[error("{name} must be finite and non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be finite and strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("tail_fraction must lie in (0, 1], got {0}")]
    TailFraction(f64),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    /// Probe Rabi frequency Ω_p on g↔e.
    pub probe_rabi: f64,
    /// Coupling Rabi frequency Ω_c on e↔r.
    pub coupling_rabi: f64,
    /// Intermediate-state detuning Δ.
    pub intermediate_detuning: f64,
    /// Control-atom Rydberg detuning δ.
    pub rydberg_detuning: Detuning,
    pub decay_intermediate: f64,
    pub decay_rydberg: f64,
    pub dephasing_ge: f64,
    pub dephasing_er: f64,
    /// Van der Waals coefficient, rad/μs · μm⁶.
    pub c6: f64,
    /// Control to ensemble-centre distance r0, μm.
    pub distance: f64,
    /// μK.
    pub temperature: f64,
    /// Trap angular frequency, rad/μs.
    pub trap_frequency: f64,
    /// kg.
    pub atom_mass: f64,
    pub atoms: usize,
    pub trajectories: usize,
    /// Integrator step, μs.
    pub dt: f64,
    /// Evolution horizon, μs.
    pub t_final: f64,
    pub tail_fraction: f64,
    /// Integrator steps between recorded points.
    pub record_every: usize,
    pub seed: u64,
    pub control_present: bool,
    pub basis_mode: BasisMode,
    /// Intra-ensemble `r-r` shift used in full-basis mode, rad/μs.
    pub pair_shift: f64,
    pub disorder_mode: DisorderMode,
    /// Positional width override, μm.
    pub sigma_override: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            probe_rabi: mhz(6.06),
            coupling_rabi: mhz(6.06),
            intermediate_detuning: mhz(121.2),
            rydberg_detuning: Detuning::AutoAntiblockade,
            decay_intermediate: mhz(6.06),
            decay_rydberg: mhz(2e-3),
            dephasing_ge: mhz(12.12e-3),
            dephasing_er: mhz(12.12e-3),
            c6: mhz(50e3),
            distance: 3.062,
            temperature: 1.0,
            trap_frequency: mhz(0.1),
            atom_mass: RB87_MASS,
            atoms: 3,
            trajectories: 300,
            dt: 1e-3,
            t_final: 50.0,
            tail_fraction: 0.2,
            record_every: 50,
            seed: 0x5eed,
            control_present: true,
            basis_mode: BasisMode::BlockadeConstrained,
            pair_shift: mhz(500.0),
            disorder_mode: DisorderMode::FirstOrder,
            sigma_override: None,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let non_negative = [
            ("probe_rabi", self.probe_rabi),
            ("coupling_rabi", self.coupling_rabi),
            ("decay_intermediate", self.decay_intermediate),
            ("decay_rydberg", self.decay_rydberg),
            ("dephasing_ge", self.dephasing_ge),
            ("dephasing_er", self.dephasing_er),
            ("temperature", self.temperature),
            ("pair_shift", self.pair_shift),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::Negative { name, value });
            }
        }
        let positive = [
            ("c6", self.c6),
            ("distance", self.distance),
            ("trap_frequency", self.trap_frequency),
            ("atom_mass", self.atom_mass),
            ("dt", self.dt),
            ("t_final", self.t_final),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        if !self.intermediate_detuning.is_finite() {
            return Err(ParamError::NotFinite { name: "intermediate_detuning", value: self.intermediate_detuning });
        }
        if let Detuning::Fixed(d) = self.rydberg_detuning {
            if !d.is_finite() {
                return Err(ParamError::NotFinite { name: "rydberg_detuning", value: d });
            }
        }
        if let Some(s) = self.sigma_override {
            if !(s.is_finite() && s >= 0.0) {
                return Err(ParamError::Negative { name: "sigma", value: s });
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(ParamError::TailFraction(self.tail_fraction));
        }
        if self.atoms == 0 {
            return Err(ParamError::Zero("atoms"));
        }
        if self.trajectories == 0 {
            return Err(ParamError::Zero("trajectories"));
        }
        if self.record_every == 0 {
            return Err(ParamError::Zero("record_every"));
        }
        Ok(())
    }

    /// `C6/r⁶`.
    pub fn interaction_at(&self, r: f64) -> f64 {
        self.c6 / r.powi(6)
    }

    /// Mean control-ensemble shift `U(r0)`.
    pub fn mean_interaction(&self) -> f64 {
        self.interaction_at(self.distance)
    }

    pub fn resolved_rydberg_detuning(&self) -> f64 {
        match self.rydberg_detuning {
            Detuning::Fixed(d) => d,
            Detuning::AutoAntiblockade => -self.mean_interaction(),
        }
    }

    pub fn probe_ratio(&self) -> f64 {
        self.probe_rabi / self.coupling_rabi
    }

    /// Sets Ω_p = ratio·Ω_c.
    pub fn with_probe_ratio(mut self, ratio: f64) -> Self {
        self.probe_rabi = ratio * self.coupling_rabi;
        self
    }
}
