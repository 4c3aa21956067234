//! Thermal position disorder of the ensemble atoms and the resulting
//! per-atom control-ensemble interaction.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::params::{DisorderMode, SimParams, BOLTZMANN};

#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    /// `|r_j − r0|` per atom, μm.
    pub displacements: Vec<f64>,
    /// Control-ensemble interaction `U_j` per atom, rad/μs.
    pub interactions: Vec<f64>,
    /// Positional standard deviation per axis, μm.
    pub sigma: f64,
}

impl DisorderRealization {
    pub fn atoms(&self) -> usize {
        self.interactions.len()
    }

    /// Frozen atoms sitting exactly at the ensemble centre.
    pub fn ideal(params: &SimParams) -> Self {
        Self {
            displacements: vec![0.0; params.atoms],
            interactions: vec![params.mean_interaction(); params.atoms],
            sigma: 0.0,
        }
    }

    /// Interaction shifts relative to `U(r0)`.
    pub fn shifts(&self, params: &SimParams) -> Vec<f64> {
        let u0 = params.mean_interaction();
        self.interactions.iter().map(|u| u - u0).collect()
    }
}

/// `σ = √(k_B T / (m ω²))` in μm, or the configured override.
pub fn sigma_of(params: &SimParams) -> f64 {
    if let Some(s) = params.sigma_override {
        return s;
    }
    let kelvin = params.temperature * 1e-6;
    let omega = params.trap_frequency * 1e6;
    (BOLTZMANN * kelvin / (params.atom_mass * omega * omega)).sqrt() * 1e6
}

/// First-order fluctuation `δU = −6·C6·|Δr|/r0⁷`.
pub fn first_order_shift(params: &SimParams, displacement: f64) -> f64 {
    -6.0 * params.c6 * displacement / params.distance.powi(7)
}

/// Draws one realisation. Always consumes exactly `3N` standard normals so
/// the stream position does not depend on temperature.
pub fn sample<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> DisorderRealization {
    let sigma = sigma_of(params);
    let u0 = params.mean_interaction();
    let mut displacements = Vec::with_capacity(params.atoms);
    let mut interactions = Vec::with_capacity(params.atoms);
    for _ in 0..params.atoms {
        let d: [f64; 3] = [
            sigma * rng.sample::<f64, _>(StandardNormal),
            sigma * rng.sample::<f64, _>(StandardNormal),
            sigma * rng.sample::<f64, _>(StandardNormal),
        ];
        let magnitude = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let u = match params.disorder_mode {
            DisorderMode::FirstOrder => u0 + first_order_shift(params, magnitude),
            DisorderMode::ExactDistance => {
                let x = params.distance + d[0];
                params.interaction_at((x * x + d[1] * d[1] + d[2] * d[2]).sqrt())
            }
        };
        displacements.push(magnitude);
        interactions.push(u);
    }
    DisorderRealization { displacements, interactions, sigma }
}

/// `R_b = (γ_ge·C6/Ω_c²)^{1/6}`.
pub fn blockade_radius(params: &SimParams) -> f64 {
    (params.dephasing_ge * params.c6 / (params.coupling_rabi * params.coupling_rabi)).powf(1.0 / 6.0)
}
