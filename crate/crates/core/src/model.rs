//! System Hamiltonian, jump operators and the effective non-Hermitian
//! generator for the control-atom plus ensemble system.

use std::fmt;

use num_complex::Complex;

use crate::disorder::DisorderRealization;
use crate::hilbert::{AtomLevel, AtomSelector, Basis, BasisMode, HilbertError, SparseOperator};
use crate::linalg::DenseMatrix;
use crate::params::SimParams;
use crate::scalar::{c, Real};

use AtomLevel::{Ground, Intermediate, Rydberg};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("basis has {basis} atoms but parameters specify {params}")]
    BasisMismatch { basis: usize, params: usize },
    #[error("disorder realisation has {disorder} atoms but parameters specify {params}")]
    DisorderMismatch { disorder: usize, params: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JumpChannel {
    /// `√Γ_e |g⟩⟨e|`
    DecayIntermediate,
    /// `√Γ_r |g⟩⟨r|`
    DecayRydberg,
    /// `√γ_ge (|e⟩⟨e| − |g⟩⟨g|)`
    DephasingGe,
    /// `√γ_er (|r⟩⟨r| − |e⟩⟨e|)`
    DephasingEr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JumpLabel {
    pub atom: AtomSelector,
    pub channel: JumpChannel,
}

impl fmt::Display for JumpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = match self.channel {
            JumpChannel::DecayIntermediate => "e",
            JumpChannel::DecayRydberg => "r",
            JumpChannel::DephasingGe => "z1",
            JumpChannel::DephasingEr => "z2",
        };
        write!(f, "L_{ch}^{}", self.atom)
    }
}

#[derive(Clone, Debug)]
pub struct JumpOperator<T: Real> {
    pub op: SparseOperator<T>,
    pub label: JumpLabel,
}

/// Atoms that carry drive and dissipation: ensemble `1..=N`, then the
/// control atom when present.
fn active_atoms(params: &SimParams) -> Vec<AtomSelector> {
    let mut atoms: Vec<_> = (1..=params.atoms).map(AtomSelector::Ensemble).collect();
    if params.control_present {
        atoms.push(AtomSelector::Control);
    }
    atoms
}

fn check_basis(params: &SimParams, basis: &Basis) -> Result<(), ModelError> {
    if basis.atoms() != params.atoms {
        return Err(ModelError::BasisMismatch { basis: basis.atoms(), params: params.atoms });
    }
    Ok(())
}

pub fn build_hamiltonian<T: Real>(
    params: &SimParams,
    basis: &Basis,
    disorder: &DisorderRealization,
) -> Result<SparseOperator<T>, ModelError> {
    check_basis(params, basis)?;
    if disorder.atoms() != params.atoms {
        return Err(ModelError::DisorderMismatch { disorder: disorder.atoms(), params: params.atoms });
    }
    let dim = basis.dim();
    let mut entries = Vec::new();

    for atom in active_atoms(params) {
        for (from, to, rabi) in
            [(Ground, Intermediate, params.probe_rabi), (Intermediate, Rydberg, params.coupling_rabi)]
        {
            let up = basis.transition_operator::<T>(atom, from, to)?;
            for &(r, col, _) in up.entries() {
                entries.push((r, col, c(rabi, 0.0)));
                entries.push((col, r, c(rabi, 0.0)));
            }
        }
    }

    let detuning = params.intermediate_detuning;
    let delta = params.resolved_rydberg_detuning();
    let full = basis.mode() == BasisMode::Full;
    for i in 0..dim {
        let (n_e, n_r) = basis.ensemble_counts(i);
        let control = basis.control_level(i);
        let mut energy = -detuning * n_e as f64;
        if params.control_present {
            match control {
                Intermediate => energy -= detuning,
                Rydberg => energy += delta,
                Ground => {}
            }
        }
        if control == Rydberg {
            for j in 1..=params.atoms {
                if basis.level(i, AtomSelector::Ensemble(j))? == Rydberg {
                    energy += disorder.interactions[j - 1];
                }
            }
        }
        if full && n_r >= 2 {
            energy += params.pair_shift * (n_r * (n_r - 1) / 2) as f64;
        }
        if energy != 0.0 {
            entries.push((i, i, c(energy, 0.0)));
        }
    }
    Ok(SparseOperator::from_triplets(dim, entries)?)
}

pub fn build_jumps<T: Real>(params: &SimParams, basis: &Basis) -> Result<Vec<JumpOperator<T>>, ModelError> {
    check_basis(params, basis)?;
    let mut jumps = Vec::with_capacity(4 * (params.atoms + 1));
    for atom in active_atoms(params) {
        let scaled = |op: SparseOperator<T>, rate: f64| op.scaled(c(rate.sqrt(), 0.0));
        let proj = |l: AtomLevel| basis.transition_operator::<T>(atom, l, l);
        let decay_e = scaled(basis.transition_operator(atom, Intermediate, Ground)?, params.decay_intermediate);
        let decay_r = scaled(basis.transition_operator(atom, Rydberg, Ground)?, params.decay_rydberg);
        let deph_ge = scaled(proj(Intermediate)?.add(&proj(Ground)?.scaled(c(-1.0, 0.0)))?, params.dephasing_ge);
        let deph_er = scaled(proj(Rydberg)?.add(&proj(Intermediate)?.scaled(c(-1.0, 0.0)))?, params.dephasing_er);
        for (op, channel) in [
            (decay_e, JumpChannel::DecayIntermediate),
            (decay_r, JumpChannel::DecayRydberg),
            (deph_ge, JumpChannel::DephasingGe),
            (deph_er, JumpChannel::DephasingEr),
        ] {
            jumps.push(JumpOperator { op, label: JumpLabel { atom, channel } });
        }
    }
    Ok(jumps)
}

/// `Σ_a L_a† L_a`.
pub fn decay_generator<T: Real>(dim: usize, jumps: &[JumpOperator<T>]) -> Result<SparseOperator<T>, HilbertError> {
    jumps.iter().try_fold(SparseOperator::zeros(dim), |acc, j| acc.add(&j.op.adjoint().compose(&j.op)?))
}

/// Sparse `H − (i/2) Σ L†L`.
pub fn effective_sparse<T: Real>(
    hamiltonian: &SparseOperator<T>,
    jumps: &[JumpOperator<T>],
) -> Result<SparseOperator<T>, HilbertError> {
    let decay = decay_generator(hamiltonian.dim(), jumps)?;
    hamiltonian.add(&decay.scaled(c(0.0, -0.5)))
}

/// Dense `H_eff = H − (i/2) Σ L†L`.
pub fn build_effective<T: Real>(
    hamiltonian: &SparseOperator<T>,
    jumps: &[JumpOperator<T>],
) -> Result<DenseMatrix<T>, HilbertError> {
    effective_sparse(hamiltonian, jumps)?.to_dense()
}

/// Everything the integrators need for one disorder realisation.
#[derive(Clone, Debug)]
pub struct ModelOperators<T: Real> {
    pub hamiltonian: SparseOperator<T>,
    pub jumps: Vec<JumpOperator<T>>,
    pub effective: SparseOperator<T>,
}

impl<T: Real> ModelOperators<T> {
    pub fn build(params: &SimParams, basis: &Basis, disorder: &DisorderRealization) -> Result<Self, ModelError> {
        let hamiltonian = build_hamiltonian(params, basis, disorder)?;
        let jumps = build_jumps(params, basis)?;
        let effective = effective_sparse(&hamiltonian, &jumps)?;
        Ok(Self { hamiltonian, jumps, effective })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn effective_dense(&self) -> Result<DenseMatrix<T>, HilbertError> {
        self.effective.to_dense()
    }

    /// `⟨ψ|Σ L†L|ψ⟩` for an unnormalised state.
    pub fn total_jump_rate(&self, psi: &[Complex<T>]) -> T {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        self.jumps
            .iter()
            .map(|j| {
                j.op.apply_into(psi, &mut buf);
                crate::hilbert::norm_sqr(&buf)
            })
            .fold(T::zero(), |a, b| a + b)
    }
}
