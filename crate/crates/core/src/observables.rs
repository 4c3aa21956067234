//! Population observables evaluated on trajectories and density matrices.

use num_complex::Complex;

use crate::hilbert::{AtomLevel, Basis, StateVector};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Control in `g`, exactly one ensemble atom in `r`, the rest in `g`.
pub const P_GC: &str = "P_gc";
/// Control in `r`, exactly one ensemble atom in `r`, the rest in `g`.
pub const P_RC: &str = "P_rc";
/// `P_gc + P_rc`.
pub const P_ENSEMBLE_R: &str = "P_gc+P_rc";
/// Every atom in `g`.
pub const P_GCG: &str = "P_gcG";
/// One `r` with at least two `e`, or at least three `e`, in the ensemble.
pub const P_MULTI: &str = "P_multi";

#[derive(Clone, Debug)]
pub enum Observable<T: Real> {
    /// Total population on a set of basis indices.
    Diagonal(Vec<usize>),
    /// `|⟨v|ψ⟩|²` for a normalised `v`.
    Projector(Vec<Complex<T>>),
}

#[derive(Clone, Debug)]
pub struct ObservableSet<T: Real> {
    names: Vec<String>,
    items: Vec<Observable<T>>,
}

impl<T: Real> Default for ObservableSet<T> {
    fn default() -> Self {
        Self { names: Vec::new(), items: Vec::new() }
    }
}

impl<T: Real> ObservableSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `P_gc`, `P_rc`, `P_gc+P_rc`, `P_gcG` and `P_multi`.
    pub fn standard(basis: &Basis) -> Self {
        let single_r =
            |b: &Basis, i: usize, ctrl: AtomLevel| b.ensemble_counts(i) == (0, 1) && b.control_level(i) == ctrl;
        let mut set = Self::new();
        set.push_diagonal(P_GC, basis.select(|b, i| single_r(b, i, AtomLevel::Ground)));
        set.push_diagonal(P_RC, basis.select(|b, i| single_r(b, i, AtomLevel::Rydberg)));
        set.push_diagonal(
            P_ENSEMBLE_R,
            basis.select(|b, i| single_r(b, i, AtomLevel::Ground) || single_r(b, i, AtomLevel::Rydberg)),
        );
        set.push_diagonal(
            P_GCG,
            basis.select(|b, i| b.control_level(i) == AtomLevel::Ground && b.ensemble_counts(i) == (0, 0)),
        );
        set.push_diagonal(
            P_MULTI,
            basis.select(|b, i| {
                let (n_e, n_r) = b.ensemble_counts(i);
                (n_e >= 2 && n_r == 1) || n_e >= 3
            }),
        );
        set
    }

    pub fn push_diagonal(&mut self, name: impl Into<String>, indices: Vec<usize>) {
        self.names.push(name.into());
        self.items.push(Observable::Diagonal(indices));
    }

    pub fn push_projector(&mut self, name: impl Into<String>, vector: StateVector<T>) {
        self.names.push(name.into());
        self.items.push(Observable::Projector(vector.into_amplitudes()));
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Writes normalised expectation values of an unnormalised state.
    pub fn evaluate_state(&self, psi: &[Complex<T>], norm_sqr: T, out: &mut [f64]) {
        let inv = T::one() / norm_sqr;
        for (o, item) in out.iter_mut().zip(&self.items) {
            let v = match item {
                Observable::Diagonal(idx) => idx.iter().map(|&i| psi[i].norm_sqr()).fold(T::zero(), |a, b| a + b),
                Observable::Projector(vec) => vec
                    .iter()
                    .zip(psi)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
                    .norm_sqr(),
            };
            *o = (v * inv).as_f64();
        }
    }

    /// Writes `Tr(ρ O)` for each observable.
    pub fn evaluate_density(&self, rho: &DenseMatrix<T>, out: &mut [f64]) {
        for (o, item) in out.iter_mut().zip(&self.items) {
            *o = match item {
                Observable::Diagonal(idx) => idx.iter().map(|&i| rho[(i, i)].re.as_f64()).sum(),
                Observable::Projector(vec) => {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (i, vi) in vec.iter().enumerate() {
                        if vi.re == T::zero() && vi.im == T::zero() {
                            continue;
                        }
                        for (j, vj) in vec.iter().enumerate() {
                            acc = acc + vi.conj() * rho[(i, j)] * vj;
                        }
                    }
                    acc.re.as_f64()
                }
            };
        }
    }
}

/// Trajectory-averaged (or exact) observables on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `mean[k][t]` for observable `k`.
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub trajectories: usize,
}

impl ObservableSeries {
    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn mean_of(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|k| self.mean[k].as_slice())
    }

    pub fn stderr_of(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|k| self.stderr[k].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
