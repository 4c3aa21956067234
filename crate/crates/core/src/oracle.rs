//! Dense Lindblad master-equation integrator for small instances, used to
//! cross-check the trajectory engine.

use num_complex::Complex;
use num_traits::Zero;

use crate::hilbert::{SparseOperator, StateVector};
use crate::linalg::DenseMatrix;
use crate::mcwf::TimeGrid;
use crate::model::ModelOperators;
use crate::observables::{ObservableSeries, ObservableSet};
use crate::scalar::Real;

/// Largest dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 256;
/// Integration substeps per trajectory step.
pub const SUBSTEPS: usize = 10;
/// Trace drift that aborts the integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("dimension {0} exceeds the oracle limit of {MAX_ORACLE_DIM}")]
    TooLarge(usize),
    #[error("initial density matrix is invalid: {0}")]
    InvalidState(String),
    #[error("trace drifted by {drift:e} at t = {time} μs; reduce the step")]
    TraceDrift { time: f64, drift: f64 },
}

/// Outcome of one integration together with the invariant diagnostics.
#[derive(Clone, Debug)]
pub struct OracleRun<T: Real> {
    pub series: ObservableSeries,
    /// Largest `|Tr ρ − 1|` over recorded times.
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// `ρ + 10⁻⁸·I` admitted a Cholesky factorisation at every recorded time.
    pub positive: bool,
    pub final_state: DenseMatrix<T>,
}

/// Positivity tolerance used for [`OracleRun::positive`].
pub const POSITIVITY_TOL: f64 = 1e-8;

pub fn pure_state<T: Real>(psi: &StateVector<T>) -> DenseMatrix<T> {
    let a = psi.amplitudes();
    DenseMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}

fn validate<T: Real>(rho: &DenseMatrix<T>, dim: usize) -> Result<(), OracleError> {
    if rho.rows() != dim || !rho.is_square() {
        return Err(OracleError::InvalidState(format!("shape {}×{}, expected {dim}×{dim}", rho.rows(), rho.cols())));
    }
    let trace = rho.trace().re.as_f64();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(OracleError::InvalidState(format!("trace {trace}")));
    }
    if rho.hermiticity_error().as_f64() > 1e-9 {
        return Err(OracleError::InvalidState("not Hermitian".into()));
    }
    if !rho.is_positive_definite_shifted(T::lit(POSITIVITY_TOL)) {
        return Err(OracleError::InvalidState("not positive semidefinite".into()));
    }
    Ok(())
}

struct Liouvillian<'a, T: Real> {
    effective: &'a SparseOperator<T>,
    /// Non-diagonal jump operators.
    jumps: Vec<&'a SparseOperator<T>>,
    /// `Σ_a l_a(i)·conj(l_a(j))` over diagonal jump operators.
    diagonal_kernel: Vec<Complex<T>>,
    dim: usize,
}

impl<'a, T: Real> Liouvillian<'a, T> {
    fn new(ops: &'a ModelOperators<T>) -> Self {
        let dim = ops.dim();
        let mut kernel = vec![Complex::zero(); dim * dim];
        let mut jumps = Vec::new();
        for j in &ops.jumps {
            if j.op.nnz() == 0 {
                continue;
            }
            if j.op.is_diagonal() {
                let d = j.op.diagonal();
                for r in 0..dim {
                    for col in 0..dim {
                        kernel[r * dim + col] = kernel[r * dim + col] + d[r] * d[col].conj();
                    }
                }
            } else {
                jumps.push(&j.op);
            }
        }
        Self { effective: &ops.effective, jumps, diagonal_kernel: kernel, dim }
    }

    /// `out ← −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†`.
    fn apply(&self, rho: &[Complex<T>], out: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        let n = self.dim;
        scratch.fill(Complex::zero());
        for &(r, col, v) in self.effective.entries() {
            let (dst, src) = (&mut scratch[r * n..(r + 1) * n], &rho[col * n..(col + 1) * n]);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d + v * s;
            }
        }
        // −i(A − A†) with A = H_eff ρ
        for r in 0..n {
            for col in 0..n {
                let a = scratch[r * n + col] - scratch[col * n + r].conj();
                out[r * n + col] = Complex::new(a.im, -a.re) + self.diagonal_kernel[r * n + col] * rho[r * n + col];
            }
        }
        for l in &self.jumps {
            // (L ρ L†)[r1, r2] = Σ v1·conj(v2)·ρ[c1, c2]
            for &(r1, c1, v1) in l.entries() {
                for &(r2, c2, v2) in l.entries() {
                    out[r1 * n + r2] = out[r1 * n + r2] + v1 * v2.conj() * rho[c1 * n + c2];
                }
            }
        }
    }
}

fn axpy<T: Real>(y: &mut [Complex<T>], x: &[Complex<T>], a: T, base: &[Complex<T>]) {
    for ((yi, xi), bi) in y.iter_mut().zip(x).zip(base) {
        *yi = bi + xi.scale(a);
    }
}

/// Integrates the master equation from `rho0` over `grid` with classical
/// fourth-order Runge–Kutta at step `grid.dt / substeps`.
pub fn integrate_with<T: Real>(
    ops: &ModelOperators<T>,
    rho0: &DenseMatrix<T>,
    grid: &TimeGrid,
    observables: &ObservableSet<T>,
    substeps: usize,
) -> Result<OracleRun<T>, OracleError> {
    let n = ops.dim();
    if n > MAX_ORACLE_DIM {
        return Err(OracleError::TooLarge(n));
    }
    validate(rho0, n)?;
    let lv = Liouvillian::new(ops);
    let h = T::lit(grid.dt / substeps as f64);
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);

    let mut rho: Vec<Complex<T>> = rho0.as_slice().to_vec();
    let zero = vec![Complex::<T>::zero(); n * n];
    let (mut k1, mut k2, mut k3, mut k4) = (zero.clone(), zero.clone(), zero.clone(), zero.clone());
    let (mut tmp, mut scratch) = (zero.clone(), zero);

    let k = observables.len();
    let mut mean = vec![vec![0.0; grid.len()]; k];
    let mut values = vec![0.0; k];
    let mut max_trace_error = 0.0f64;
    let mut max_herm = 0.0f64;
    let mut positive = true;
    let mut record = |rho: &[Complex<T>], idx: usize| -> Result<(), OracleError> {
        let m = DenseMatrix::from_fn(n, n, |i, j| rho[i * n + j]);
        let drift = (m.trace().re.as_f64() - 1.0).abs();
        if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
            return Err(OracleError::TraceDrift { time: grid.time(idx), drift });
        }
        max_trace_error = max_trace_error.max(drift);
        max_herm = max_herm.max(m.hermiticity_error().as_f64());
        positive &= m.is_positive_definite_shifted(T::lit(POSITIVITY_TOL));
        observables.evaluate_density(&m, &mut values);
        for (o, v) in values.iter().enumerate() {
            mean[o][idx] = *v;
        }
        Ok(())
    };

    record(&rho, 0)?;
    for idx in 1..grid.len() {
        for _ in 0..grid.steps_per_record * substeps {
            lv.apply(&rho, &mut k1, &mut scratch);
            axpy(&mut tmp, &k1, half, &rho);
            lv.apply(&tmp, &mut k2, &mut scratch);
            axpy(&mut tmp, &k2, half, &rho);
            lv.apply(&tmp, &mut k3, &mut scratch);
            axpy(&mut tmp, &k3, h, &rho);
            lv.apply(&tmp, &mut k4, &mut scratch);
            for i in 0..n * n {
                rho[i] = rho[i] + (k1[i] + k2[i].scale(T::lit(2.0)) + k3[i].scale(T::lit(2.0)) + k4[i]).scale(sixth);
            }
        }
        record(&rho, idx)?;
    }

    let stderr = vec![vec![0.0; grid.len()]; k];
    Ok(OracleRun {
        series: ObservableSeries {
            times: grid.times(),
            names: observables.names().to_vec(),
            mean,
            stderr,
            trajectories: 0,
        },
        max_trace_error,
        max_hermiticity_error: max_herm,
        positive,
        final_state: DenseMatrix::from_fn(n, n, |i, j| rho[i * n + j]),
    })
}

/// [`integrate_with`] at the default `dt/10` step.
pub fn integrate<T: Real>(
    ops: &ModelOperators<T>,
    rho0: &DenseMatrix<T>,
    grid: &TimeGrid,
    observables: &ObservableSet<T>,
) -> Result<OracleRun<T>, OracleError> {
    integrate_with(ops, rho0, grid, observables, SUBSTEPS)
}

/// Largest change of any observable at any recorded time when the step is
/// halved.
pub fn step_halving_error<T: Real>(
    ops: &ModelOperators<T>,
    rho0: &DenseMatrix<T>,
    grid: &TimeGrid,
    observables: &ObservableSet<T>,
) -> Result<f64, OracleError> {
    let a = integrate_with(ops, rho0, grid, observables, SUBSTEPS)?;
    let b = integrate_with(ops, rho0, grid, observables, 2 * SUBSTEPS)?;
    Ok(a.series
        .mean
        .iter()
        .zip(&b.series.mean)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::DisorderRealization;
    use crate::hilbert::{Basis, BasisMode};
    use crate::params::SimParams;
    use crate::scalar::c;

    fn small(p: &SimParams) -> (Basis, ModelOperators<f64>) {
        let b = Basis::new(p.atoms, BasisMode::Full).unwrap();
        let ops = ModelOperators::build(p, &b, &DisorderRealization::ideal(p)).unwrap();
        (b, ops)
    }

    /// `L(ρ)` by dense products, independent of the sparse kernel.
    fn dense_rhs(ops: &ModelOperators<f64>, rho: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        let h = ops.hamiltonian.to_dense().unwrap();
        let comm = h.matmul(rho).unwrap().add_scaled(&rho.matmul(&h).unwrap(), c(-1.0, 0.0));
        let mut out = comm.scale(c(0.0, -1.0));
        for j in &ops.jumps {
            let l = j.op.to_dense().unwrap();
            let ld = l.adjoint();
            let ldl = ld.matmul(&l).unwrap();
            let sandwich = l.matmul(rho).unwrap().matmul(&ld).unwrap();
            let anti = ldl.matmul(rho).unwrap().add_scaled(&rho.matmul(&ldl).unwrap(), c(1.0, 0.0));
            out = out.add_scaled(&sandwich, c(1.0, 0.0)).add_scaled(&anti, c(-0.5, 0.0));
        }
        out
    }

    #[test]
    fn sparse_rhs_matches_dense_formula() {
        let p = SimParams { atoms: 1, temperature: 0.0, ..SimParams::default() };
        let (b, ops) = small(&p);
        let n = b.dim();
        let mut psi =
            StateVector::from_amplitudes((0..n).map(|i| c((i as f64).cos(), (i as f64 * 0.7).sin())).collect());
        psi.normalize().unwrap();
        let rho = pure_state(&psi);
        let lv = Liouvillian::new(&ops);
        let mut out = vec![Complex::zero(); n * n];
        let mut scratch = out.clone();
        lv.apply(rho.as_slice(), &mut out, &mut scratch);
        let expect = dense_rhs(&ops, &rho);
        let got = DenseMatrix::from_fn(n, n, |i, j| out[i * n + j]);
        assert!(got.max_abs_diff(&expect) < 1e-9 * expect.norm1());
    }

    #[test]
    fn unitary_evolution_keeps_purity() {
        let p = SimParams {
            atoms: 1,
            decay_intermediate: 0.0,
            decay_rydberg: 0.0,
            dephasing_ge: 0.0,
            dephasing_er: 0.0,
            temperature: 0.0,
            ..SimParams::default()
        };
        let (b, ops) = small(&p);
        let rho0 = pure_state(&StateVector::basis_state(b.dim(), 0));
        let obs = ObservableSet::standard(&b);
        let purity = |substeps: usize| {
            let grid = TimeGrid::from_params(&SimParams { t_final: 0.5, ..p.clone() });
            let run = integrate_with(&ops, &rho0, &grid, &obs, substeps).unwrap();
            assert!(run.max_trace_error < 1e-12);
            let r = &run.final_state;
            r.matmul(r).unwrap().trace().re
        };
        // RK4 damps the fast 2Δ coherences by O((hΔ)⁶) per step.
        let default = purity(SUBSTEPS);
        assert!((default - 1.0).abs() < 1e-6, "{default}");
        let halved = purity(2 * SUBSTEPS);
        assert!((halved - 1.0).abs() < 1e-8, "{halved}");
    }

    #[test]
    fn dissipative_run_keeps_invariants() {
        let p = SimParams { atoms: 1, temperature: 0.0, t_final: 1.0, ..SimParams::default() };
        let (b, ops) = small(&p);
        let rho0 = pure_state(&StateVector::basis_state(b.dim(), 0));
        let run = integrate(&ops, &rho0, &TimeGrid::from_params(&p), &ObservableSet::standard(&b)).unwrap();
        assert!(run.max_trace_error < 1e-8);
        assert!(run.max_hermiticity_error < 1e-9);
        assert!(run.positive);
        assert!(run.final_state.min_eigenvalue_hermitian(1e-12) > -1e-8);
    }

    #[test]
    fn guards() {
        let p = SimParams { atoms: 5, ..SimParams::default() };
        let b = Basis::new(5, BasisMode::Full).unwrap();
        let ops = ModelOperators::<f64>::build(&p, &b, &DisorderRealization::ideal(&p)).unwrap();
        let rho = DenseMatrix::identity(b.dim());
        let grid = TimeGrid::from_params(&p);
        let obs = ObservableSet::standard(&b);
        assert_eq!(integrate(&ops, &rho, &grid, &obs).unwrap_err(), OracleError::TooLarge(729));

        let p = SimParams { atoms: 1, ..SimParams::default() };
        let (b, ops) = small(&p);
        let bad = DenseMatrix::identity(b.dim());
        assert!(matches!(integrate(&ops, &bad, &grid, &obs), Err(OracleError::InvalidState(_))));
    }

    #[test]
    fn oversized_step_reports_trace_drift() {
        let p =
            SimParams { atoms: 1, temperature: 0.0, dt: 0.2, record_every: 1, t_final: 2.0, ..SimParams::default() };
        let (b, ops) = small(&p);
        let rho0 = pure_state(&StateVector::basis_state(b.dim(), 0));
        let err = integrate_with(&ops, &rho0, &TimeGrid::from_params(&p), &ObservableSet::standard(&b), 1);
        assert!(matches!(err, Err(OracleError::TraceDrift { .. })));
    }
}
