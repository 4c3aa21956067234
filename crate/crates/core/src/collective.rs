//! Symmetric Dicke states of the ensemble, reduced collective models and the
//! closed-form estimates built on them.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;

use crate::disorder::DisorderRealization;
use crate::hilbert::{AtomLevel, AtomSelector, Basis, HilbertError, SparseOperator, StateVector};
use crate::linalg::DenseMatrix;
use crate::model::{build_hamiltonian, ModelError};
use crate::observables::ObservableSet;
use crate::params::SimParams;
use crate::scalar::{c, Real};

use AtomLevel::{Ground, Intermediate, Rydberg};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CollectiveError {
    #[error("label {label} is invalid for {atoms} ensemble atoms")]
    InvalidLabel { label: DickeLabel, atoms: usize },
    #[error("label {0} has no configurations in this basis")]
    MissingConfigurations(DickeLabel),
    #[error("both Rabi frequencies are zero")]
    ZeroRabi,
    #[error("intermediate detuning must be {0}")]
    Detuning(&'static str),
    #[error("no sign change of the dip residual on (−Δ, 0)")]
    NoDipRoot,
    #[error("the 15-state collective set needs at least 2 ensemble atoms, got {0}")]
    TooFewAtoms(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// `|c E^{m_e} R^{m_r}⟩`: `m_e` ensemble atoms in `e`, `m_r ≤ 1` in `r`,
/// control in `control` (ground when absent).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DickeLabel {
    pub m_e: usize,
    pub m_r: usize,
    pub control: Option<AtomLevel>,
}

impl DickeLabel {
    pub fn new(control: AtomLevel, m_e: usize, m_r: usize) -> Self {
        Self { m_e, m_r, control: Some(control) }
    }

    pub fn control_level(&self) -> AtomLevel {
        self.control.unwrap_or(Ground)
    }

    pub fn is_valid(&self, atoms: usize) -> bool {
        self.m_r <= 1 && self.m_e + self.m_r <= atoms
    }
}

impl fmt::Display for DickeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.control {
            write!(f, "{}_c", c.symbol())?;
        }
        if self.m_e == 0 && self.m_r == 0 {
            write!(f, "G")
        } else {
            write!(f, "E{}R{}", self.m_e, self.m_r)
        }
    }
}

#[derive(Clone, Debug)]
pub struct DickeState<T: Real> {
    pub label: DickeLabel,
    pub vector: StateVector<T>,
}

/// Equal-amplitude superposition over every configuration with the label's
/// occupation counts.
pub fn dicke_state<T: Real>(basis: &Basis, label: DickeLabel) -> Result<DickeState<T>, CollectiveError> {
    if !label.is_valid(basis.atoms()) {
        return Err(CollectiveError::InvalidLabel { label, atoms: basis.atoms() });
    }
    let members = basis
        .select(|b, i| b.control_level(i) == label.control_level() && b.ensemble_counts(i) == (label.m_e, label.m_r));
    if members.is_empty() {
        return Err(CollectiveError::MissingConfigurations(label));
    }
    let amp = T::one() / T::lit(members.len() as f64).sqrt();
    let mut vector = StateVector::zeros(basis.dim());
    for i in members {
        vector.amplitudes_mut()[i] = Complex::new(amp, T::zero());
    }
    Ok(DickeState { label, vector })
}

/// `Σ_j |to_j⟩⟨from_j|` over the ensemble atoms.
pub fn collective_transition<T: Real>(
    basis: &Basis,
    from: AtomLevel,
    to: AtomLevel,
) -> Result<SparseOperator<T>, HilbertError> {
    (1..=basis.atoms()).try_fold(SparseOperator::zeros(basis.dim()), |acc, j| {
        acc.add(&basis.transition_operator(AtomSelector::Ensemble(j), from, to)?)
    })
}

/// `|g_cG⟩, |g_cE¹R⁰⟩, |g_cE⁰R¹⟩, |e_cE⁰R¹⟩, |r_cE⁰R¹⟩`.
pub fn resonant_labels() -> [DickeLabel; 5] {
    [
        DickeLabel::new(Ground, 0, 0),
        DickeLabel::new(Ground, 1, 0),
        DickeLabel::new(Ground, 0, 1),
        DickeLabel::new(Intermediate, 0, 1),
        DickeLabel::new(Rydberg, 0, 1),
    ]
}

/// `⟨a|H|b⟩` over the given collective states, with `H` built for frozen
/// atoms at the ensemble centre.
pub fn projected_hamiltonian(
    basis: &Basis,
    params: &SimParams,
    labels: &[DickeLabel],
) -> Result<DenseMatrix<f64>, CollectiveError> {
    let h = build_hamiltonian::<f64>(params, basis, &DisorderRealization::ideal(params))?;
    let states = labels.iter().map(|&l| dicke_state::<f64>(basis, l)).collect::<Result<Vec<_>, _>>()?;
    let images: Vec<_> = states.iter().map(|s| h.apply(&s.vector)).collect();
    Ok(DenseMatrix::from_fn(labels.len(), labels.len(), |a, b| states[a].vector.inner(&images[b])))
}

/// The full Hamiltonian projected onto [`resonant_labels`].
pub fn collective_couplings(basis: &Basis, params: &SimParams) -> Result<DenseMatrix<f64>, CollectiveError> {
    projected_hamiltonian(basis, params, &resonant_labels())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedVariant {
    /// Basis `|G⟩, |E¹R⁰⟩, |E⁰R¹⟩, |E¹R¹⟩`.
    FourState,
    /// Basis `|G⟩, |E¹R⁰⟩, |E⁰R¹⟩`, with `|E¹R¹⟩` eliminated into a shift
    /// `(N−1)Ω_p²/Δ` on `|E⁰R¹⟩`.
    ThreeState,
}

/// Single-ensemble Hamiltonian in the strong-probe collective picture.
pub fn reduced_ensemble_h(params: &SimParams, variant: ReducedVariant) -> Result<DenseMatrix<f64>, CollectiveError> {
    let n = params.atoms as f64;
    let (op, oc, d) = (params.probe_rabi, params.coupling_rabi, params.intermediate_detuning);
    let dim = match variant {
        ReducedVariant::FourState => 4,
        ReducedVariant::ThreeState => 3,
    };
    let mut h = DenseMatrix::zeros(dim, dim);
    let mut couple = |a: usize, b: usize, v: f64| {
        h[(a, b)] = c(v, 0.0);
        h[(b, a)] = c(v, 0.0);
    };
    couple(0, 1, n.sqrt() * op);
    couple(1, 2, oc);
    h[(1, 1)] = c(-d, 0.0);
    match variant {
        ReducedVariant::FourState => {
            h[(2, 3)] = c((n - 1.0).sqrt() * op, 0.0);
            h[(3, 2)] = c((n - 1.0).sqrt() * op, 0.0);
            h[(3, 3)] = c(-d, 0.0);
        }
        ReducedVariant::ThreeState => {
            if d == 0.0 {
                return Err(CollectiveError::Detuning("non-zero"));
            }
            h[(2, 2)] = c((n - 1.0) * op * op / d, 0.0);
        }
    }
    Ok(h)
}

/// `NΩ_p² / (NΩ_p² + Ω_c²)`.
pub fn superatom_fr(atoms: usize, probe_rabi: f64, coupling_rabi: f64) -> Result<f64, CollectiveError> {
    let num = atoms as f64 * probe_rabi * probe_rabi;
    let den = num + coupling_rabi * coupling_rabi;
    if den == 0.0 {
        return Err(CollectiveError::ZeroRabi);
    }
    if !num.is_finite() {
        return Ok(1.0);
    }
    Ok(num / den)
}

/// Effective detuning of `|r_cG⟩` at control detuning `delta_dip`:
/// `(Ω_c² − Ω_p²)/Δ + δ + NΩ_p²/(Δ − δ)`.
pub fn dip_residual(params: &SimParams, delta_dip: f64) -> f64 {
    let (op, oc, d) = (params.probe_rabi, params.coupling_rabi, params.intermediate_detuning);
    (oc * oc - op * op) / d + delta_dip + params.atoms as f64 * op * op / (d - delta_dip)
}

/// `r_dip ≈ (C6·Δ / (Ω_c² + (N−1)Ω_p²))^{1/6}` in μm.
pub fn dip_closed_form(params: &SimParams) -> Result<f64, CollectiveError> {
    let d = params.intermediate_detuning;
    if !(d > 0.0) {
        return Err(CollectiveError::Detuning("positive"));
    }
    let (op, oc) = (params.probe_rabi, params.coupling_rabi);
    let den = oc * oc + (params.atoms as f64 - 1.0) * op * op;
    if den == 0.0 {
        return Err(CollectiveError::ZeroRabi);
    }
    Ok((params.c6 * d / den).powf(1.0 / 6.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipEstimate {
    /// Closed-form position, μm.
    pub closed_form: f64,
    /// Root of [`dip_residual`] on `(−Δ, 0)`, rad/μs.
    pub exact_detuning: f64,
    /// `(C6/−δ_dip)^{1/6}`, μm.
    pub exact_position: f64,
}

pub fn dip_position(params: &SimParams) -> Result<DipEstimate, CollectiveError> {
    let closed_form = dip_closed_form(params)?;
    let d = params.intermediate_detuning;
    let (mut lo, mut hi) = (-d * (1.0 - 1e-12), -d * 1e-12);
    let (f_lo, f_hi) = (dip_residual(params, lo), dip_residual(params, hi));
    if f_lo.signum() == f_hi.signum() {
        return Err(CollectiveError::NoDipRoot);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dip_residual(params, mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * d {
            break;
        }
    }
    let exact_detuning = 0.5 * (lo + hi);
    Ok(DipEstimate { closed_form, exact_detuning, exact_position: (params.c6 / -exact_detuning).powf(1.0 / 6.0) })
}

/// Ensemble parts of the 15-state set: `G, E¹R⁰, E⁰R¹, E²R⁰, E¹R¹`.
pub const ENSEMBLE_COUNTS: [(usize, usize); 5] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)];

/// The 15 collective states: control `g, e, r` times [`ENSEMBLE_COUNTS`].
pub fn fifteen_labels() -> Vec<DickeLabel> {
    [Ground, Intermediate, Rydberg]
        .into_iter()
        .flat_map(|ctrl| ENSEMBLE_COUNTS.into_iter().map(move |(m_e, m_r)| DickeLabel::new(ctrl, m_e, m_r)))
        .collect()
}

/// Whether a label belongs to the five near-resonant states.
pub fn is_resonant(label: &DickeLabel) -> bool {
    resonant_labels().contains(label)
}

/// Projectors onto the 15 collective states, named by their labels.
pub fn collective_observables<T: Real>(basis: &Basis) -> Result<ObservableSet<T>, CollectiveError> {
    let mut set = ObservableSet::new();
    append_collective_observables(&mut set, basis)?;
    Ok(set)
}

pub fn append_collective_observables<T: Real>(
    set: &mut ObservableSet<T>,
    basis: &Basis,
) -> Result<(), CollectiveError> {
    if basis.atoms() < 2 {
        return Err(CollectiveError::TooFewAtoms(basis.atoms()));
    }
    for label in fifteen_labels() {
        set.push_projector(label.to_string(), dicke_state(basis, label)?.vector);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectivePopulations {
    pub labels: Vec<DickeLabel>,
    pub populations: Vec<f64>,
    /// Everything outside the 15 states.
    pub remainder: f64,
}

impl CollectivePopulations {
    fn from_values(values: Vec<f64>, total: f64) -> Self {
        let remainder = total - values.iter().sum::<f64>();
        Self { labels: fifteen_labels(), populations: values, remainder }
    }

    /// Total population on the ten off-resonant states.
    pub fn off_resonant(&self) -> f64 {
        self.labels.iter().zip(&self.populations).filter(|(l, _)| !is_resonant(l)).map(|(_, p)| p).sum()
    }

    pub fn get(&self, label: &DickeLabel) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.populations[i])
    }
}

pub fn project_state<T: Real>(basis: &Basis, psi: &StateVector<T>) -> Result<CollectivePopulations, CollectiveError> {
    let set = collective_observables::<T>(basis)?;
    let norm = psi.norm_sqr();
    let mut values = vec![0.0; set.len()];
    set.evaluate_state(psi.amplitudes(), norm, &mut values);
    Ok(CollectivePopulations::from_values(values, 1.0))
}

pub fn project_density<T: Real>(basis: &Basis, rho: &DenseMatrix<T>) -> Result<CollectivePopulations, CollectiveError> {
    let set = collective_observables::<T>(basis)?;
    let mut values = vec![0.0; set.len()];
    set.evaluate_density(rho, &mut values);
    Ok(CollectivePopulations::from_values(values, rho.trace().re.as_f64()))
}

/// Applies `op` to `psi` `times` times.
pub fn apply_power<T: Real>(op: &SparseOperator<T>, psi: &StateVector<T>, times: usize) -> StateVector<T> {
    let mut v = psi.clone();
    let mut buf = vec![Complex::zero(); psi.dim()];
    for _ in 0..times {
        op.apply_into(v.amplitudes(), &mut buf);
        v.amplitudes_mut().copy_from_slice(&buf);
    }
    v
}
