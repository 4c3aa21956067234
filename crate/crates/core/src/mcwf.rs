//! Quantum-jump trajectories with the norm-threshold unraveling, trajectory
//! averaging and steady-state estimation.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::disorder::{self, DisorderRealization};
use crate::hilbert::{norm_sqr, Basis, HilbertError, StateVector};
use crate::linalg::{DenseMatrix, LinalgError};
use crate::model::{JumpLabel, ModelError, ModelOperators};
use crate::observables::{ObservableSeries, ObservableSet, P_ENSEMBLE_R, P_GC};
use crate::params::{ParamError, SimParams};
use crate::scalar::{c, Real};

/// Largest admissible `⟨ψ0|Σ L†L|ψ0⟩·dt`.
pub const MAX_RATE_DT: f64 = 0.01;
/// Tail windows shorter than this are rejected.
pub const MIN_TAIL_POINTS: usize = 10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum McwfError {
    #[error("initial state has norm² {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has dimension {state}, operators have {ops}")]
    Dimension { state: usize, ops: usize },
    #[error("total jump rate × dt = {0} exceeds {MAX_RATE_DT}; reduce dt")]
    StepTooLarge(f64),
    #[error("non-finite amplitude at t = {time} μs")]
    NonFinite { time: f64 },
    #[error("all jump weights vanish at t = {time} μs")]
    Degenerate { time: f64 },
    #[error("need at least 2 trajectories, got {0}")]
    TooFewRecords(usize),
    #[error("trajectory {0} has a different time grid or observable set")]
    GridMismatch(usize),
    #[error("tail window has {points} points, need at least {MIN_TAIL_POINTS}")]
    TailTooShort { points: usize },
    #[error("series lacks observable {0}")]
    MissingObservable(&'static str),
    #[error(transparent)]
    Parameter(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Uniform output grid: a record every `steps_per_record` steps of `dt`,
/// starting at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps_per_record: usize,
    /// Number of record intervals; the grid has `intervals + 1` points.
    pub intervals: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps_per_record: usize, t_final: f64) -> Self {
        let interval = dt * steps_per_record as f64;
        let intervals = ((t_final / interval).round() as usize).max(1);
        Self { dt, steps_per_record, intervals }
    }

    pub fn from_params(params: &SimParams) -> Self {
        Self::new(params.dt, params.record_every, params.t_final)
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        (i * self.steps_per_record) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.intervals)
    }
}

/// `exp(−i H_eff dt)` and its `steps_per_record`-th power.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    fine: DenseMatrix<T>,
    coarse: DenseMatrix<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(ops: &ModelOperators<T>, grid: &TimeGrid) -> Result<Self, McwfError> {
        let generator = ops.effective_dense()?.scale(c(0.0, -grid.dt));
        let fine = generator.expm()?;
        let coarse = fine.pow(grid.steps_per_record as u64)?;
        Ok(Self { fine, coarse })
    }

    pub fn fine(&self) -> &DenseMatrix<T> {
        &self.fine
    }

    pub fn coarse(&self) -> &DenseMatrix<T> {
        &self.coarse
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub label: JumpLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Row-major `[time][observable]`.
    pub values: Vec<f64>,
    pub observables: usize,
    pub jumps: Vec<JumpEvent>,
}

impl TrajectoryRecord {
    pub fn value(&self, t: usize, k: usize) -> f64 {
        self.values[t * self.observables + k]
    }
}

struct Stepper<'a, T: Real, R: Rng> {
    ops: &'a ModelOperators<T>,
    rng: &'a mut R,
    psi: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
    weights: Vec<T>,
    threshold: T,
    jumps: Vec<JumpEvent>,
}

impl<T: Real, R: Rng> Stepper<'_, T, R> {
    fn draw_threshold(&mut self) {
        // (0, 1]: a zero threshold would never trigger
        self.threshold = T::lit(1.0 - self.rng.random::<f64>());
    }

    fn step(&mut self, u: &DenseMatrix<T>, time: f64) -> Result<T, McwfError> {
        u.matvec_into(&self.psi, &mut self.buf);
        std::mem::swap(&mut self.psi, &mut self.buf);
        let n = norm_sqr(&self.psi);
        if !n.is_finite() {
            return Err(McwfError::NonFinite { time });
        }
        Ok(n)
    }

    fn jump(&mut self, time: f64) -> Result<(), McwfError> {
        let jumps = &self.ops.jumps;
        let mut total = T::zero();
        for (w, j) in self.weights.iter_mut().zip(jumps) {
            j.op.apply_into(&self.psi, &mut self.buf);
            *w = norm_sqr(&self.buf);
            total = total + *w;
        }
        if !(total > T::zero()) || !total.is_finite() {
            return Err(McwfError::Degenerate { time });
        }
        let target = T::lit(self.rng.random::<f64>()) * total;
        let mut acc = T::zero();
        let mut chosen = None;
        for (a, &w) in self.weights.iter().enumerate() {
            if w > T::zero() {
                chosen = Some(a);
                acc = acc + w;
                if target < acc {
                    break;
                }
            }
        }
        let a = chosen.ok_or(McwfError::Degenerate { time })?;
        jumps[a].op.apply_into(&self.psi, &mut self.buf);
        let inv = T::one() / self.weights[a].sqrt();
        for (p, b) in self.psi.iter_mut().zip(&self.buf) {
            *p = b.scale(inv);
        }
        self.jumps.push(JumpEvent { time, label: jumps[a].label });
        self.draw_threshold();
        Ok(())
    }

    /// Renormalises `ψ`, rescaling the threshold so the pending jump time is
    /// unchanged.
    fn renormalize(&mut self, n: T) {
        let inv = T::one() / n.sqrt();
        for p in &mut self.psi {
            *p = p.scale(inv);
        }
        self.threshold = self.threshold / n;
    }
}

/// One trajectory from `psi0` over `grid`.
///
/// Each record interval is first advanced with the coarse propagator; if the
/// norm falls below the threshold the interval is replayed in fine steps to
/// place the jump at the step boundary where it occurs. Because the norm is
/// non-increasing between jumps this is identical to fine stepping.
pub fn run_trajectory<T: Real, R: Rng>(
    ops: &ModelOperators<T>,
    prop: &Propagator<T>,
    psi0: &StateVector<T>,
    grid: &TimeGrid,
    observables: &ObservableSet<T>,
    rng: &mut R,
) -> Result<TrajectoryRecord, McwfError> {
    let dim = ops.dim();
    if psi0.dim() != dim {
        return Err(McwfError::Dimension { state: psi0.dim(), ops: dim });
    }
    let n0 = psi0.norm_sqr().as_f64();
    if (n0 - 1.0).abs() > 1e-8 {
        return Err(McwfError::NotNormalized(n0));
    }
    let rate_dt = ops.total_jump_rate(psi0.amplitudes()).as_f64() * grid.dt;
    if rate_dt > MAX_RATE_DT {
        return Err(McwfError::StepTooLarge(rate_dt));
    }

    let k = observables.len();
    let mut values = vec![0.0; grid.len() * k];
    let mut st = Stepper {
        ops,
        rng,
        psi: psi0.amplitudes().to_vec(),
        buf: vec![Complex::zero(); dim],
        weights: vec![T::zero(); ops.jumps.len()],
        threshold: T::zero(),
        jumps: Vec::new(),
    };
    st.draw_threshold();
    observables.evaluate_state(&st.psi, T::one(), &mut values[..k]);

    for rec in 1..grid.len() {
        let t_end = grid.time(rec);
        let saved = st.psi.clone();
        let mut n = st.step(&prop.coarse, t_end)?;
        if n <= st.threshold {
            st.psi.copy_from_slice(&saved);
            let t0 = grid.time(rec - 1);
            for s in 1..=grid.steps_per_record {
                let t = t0 + s as f64 * grid.dt;
                n = st.step(&prop.fine, t)?;
                if n <= st.threshold {
                    st.jump(t)?;
                    n = T::one();
                }
            }
        }
        if !(n > T::zero()) {
            return Err(McwfError::Degenerate { time: t_end });
        }
        st.renormalize(n);
        observables.evaluate_state(&st.psi, T::one(), &mut values[rec * k..(rec + 1) * k]);
    }

    Ok(TrajectoryRecord { times: grid.times(), values, observables: k, jumps: st.jumps })
}

/// Mean and standard error over trajectories, per observable and time.
pub fn average(records: &[TrajectoryRecord], names: &[String]) -> Result<ObservableSeries, McwfError> {
    if records.len() < 2 {
        return Err(McwfError::TooFewRecords(records.len()));
    }
    let first = &records[0];
    let k = names.len();
    for (i, r) in records.iter().enumerate() {
        if r.times != first.times || r.observables != k || r.values.len() != first.values.len() {
            return Err(McwfError::GridMismatch(i));
        }
    }
    let m = records.len() as f64;
    let points = first.times.len();
    let mut mean = vec![vec![0.0; points]; k];
    let mut stderr = vec![vec![0.0; points]; k];
    for obs in 0..k {
        for t in 0..points {
            let mu = records.iter().map(|r| r.value(t, obs)).sum::<f64>() / m;
            let var = records.iter().map(|r| (r.value(t, obs) - mu).powi(2)).sum::<f64>() / (m - 1.0);
            mean[obs][t] = mu;
            stderr[obs][t] = (var / m).sqrt();
        }
    }
    Ok(ObservableSeries {
        times: first.times.clone(),
        names: names.to_vec(),
        mean,
        stderr,
        trajectories: records.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub f_r: f64,
    /// Mean per-point standard error over the tail window.
    pub stderr: f64,
    pub converged: bool,
    /// Tail averages over the earlier and later half-windows.
    pub half_means: (f64, f64),
}

/// Time average of a named series over the final `tail_fraction` of the grid.
pub fn tail_average(
    series: &ObservableSeries,
    name: &'static str,
    tail_fraction: f64,
) -> Result<SteadyState, McwfError> {
    let k = series.position(name).ok_or(McwfError::MissingObservable(name))?;
    let len = series.len();
    let points = ((tail_fraction * (len.saturating_sub(1)) as f64).round() as usize).min(len);
    if points < MIN_TAIL_POINTS {
        return Err(McwfError::TailTooShort { points });
    }
    let window = len - points..len;
    let mean_of = |r: std::ops::Range<usize>| {
        let n = r.len() as f64;
        series.mean[k][r].iter().sum::<f64>() / n
    };
    let f_r = mean_of(window.clone());
    let stderr = series.stderr[k][window.clone()].iter().sum::<f64>() / points as f64;
    let mid = window.start + points / 2;
    let half_means = (mean_of(window.start..mid), mean_of(mid..len));
    let converged = (half_means.0 - half_means.1).abs() < 0.005 + 2.0 * stderr;
    Ok(SteadyState { f_r, stderr, converged, half_means })
}

/// `f_r` from `P_gc + P_rc` with the control atom, `P_gc` without.
pub fn steady_state(
    series: &ObservableSeries,
    tail_fraction: f64,
    control_present: bool,
) -> Result<SteadyState, McwfError> {
    tail_average(series, if control_present { P_ENSEMBLE_R } else { P_GC }, tail_fraction)
}

/// Private stream for one trajectory of one sweep point.
pub fn trajectory_rng(seed: u64, point: u64, trajectory: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trajectory);
    rng
}

/// Whether thermal disorder can change the dynamics: the sampled shifts
/// only enter through the control atom's Rydberg state.
pub fn disorder_is_active(params: &SimParams) -> bool {
    params.control_present && disorder::sigma_of(params) > 0.0
}

/// Runs `params.trajectories` trajectories from `|g_c; g…g⟩`, each with its
/// own disorder realisation, on the current rayon pool.
///
/// Trajectory `m` of sweep point `point` always draws from the same stream,
/// so results do not depend on the number of workers.
pub fn run_ensemble<T: Real>(
    params: &SimParams,
    basis: &Basis,
    observables: &ObservableSet<T>,
    point: u64,
) -> Result<Vec<TrajectoryRecord>, McwfError> {
    params.validate()?;
    let grid = TimeGrid::from_params(params);
    let psi0 = StateVector::<T>::basis_state(basis.dim(), basis.ground_index());
    let shared = if disorder_is_active(params) {
        None
    } else {
        let ops = ModelOperators::build(params, basis, &DisorderRealization::ideal(params))?;
        let prop = Propagator::new(&ops, &grid)?;
        Some((ops, prop))
    };
    (0..params.trajectories as u64)
        .into_par_iter()
        .map(|m| {
            let mut rng = trajectory_rng(params.seed, point, m);
            let realization = disorder::sample(params, &mut rng);
            match &shared {
                Some((ops, prop)) => run_trajectory(ops, prop, &psi0, &grid, observables, &mut rng),
                None => {
                    let ops = ModelOperators::build(params, basis, &realization)?;
                    let prop = Propagator::new(&ops, &grid)?;
                    run_trajectory(&ops, &prop, &psi0, &grid, observables, &mut rng)
                }
            }
        })
        .collect()
}

/// [`run_ensemble`] followed by [`average`].
pub fn simulate<T: Real>(
    params: &SimParams,
    basis: &Basis,
    observables: &ObservableSet<T>,
    point: u64,
) -> Result<ObservableSeries, McwfError> {
    let records = run_ensemble(params, basis, observables, point)?;
    average(&records, observables.names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisMode;
    use crate::observables::{P_GCG, P_RC};

    fn no_rates(atoms: usize) -> SimParams {
        SimParams {
            atoms,
            decay_intermediate: 0.0,
            decay_rydberg: 0.0,
            dephasing_ge: 0.0,
            dephasing_er: 0.0,
            temperature: 0.0,
            ..SimParams::default()
        }
    }

    fn setup(p: &SimParams, mode: BasisMode) -> (Basis, ModelOperators<f64>, Propagator<f64>, TimeGrid) {
        let b = Basis::new(p.atoms, mode).unwrap();
        let ops = ModelOperators::build(p, &b, &DisorderRealization::ideal(p)).unwrap();
        let grid = TimeGrid::from_params(p);
        let prop = Propagator::new(&ops, &grid).unwrap();
        (b, ops, prop, grid)
    }

    #[test]
    fn grid_layout() {
        let g = TimeGrid::new(1e-3, 50, 50.0);
        assert_eq!(g.len(), 1001);
        assert_eq!(g.time(0), 0.0);
        assert!((g.t_final() - 50.0).abs() < 1e-9);
        assert!(g.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn no_rates_means_no_jumps_and_unitarity() {
        let p = SimParams { t_final: 2.0, ..no_rates(2) };
        let (b, ops, prop, grid) = setup(&p, BasisMode::Full);
        let obs = ObservableSet::standard(&b);
        let psi0 = StateVector::basis_state(b.dim(), 0);
        let mut rng = trajectory_rng(1, 0, 0);
        let rec = run_trajectory(&ops, &prop, &psi0, &grid, &obs, &mut rng).unwrap();
        assert!(rec.jumps.is_empty());
        // unitary: the coarse propagator preserves the norm
        let out = prop.coarse().matvec(psi0.amplitudes());
        assert!((norm_sqr(&out) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = SimParams { atoms: 1, t_final: 1.0, ..SimParams::default() };
        let (b, ops, prop, grid) = setup(&p, BasisMode::Full);
        let obs = ObservableSet::standard(&b);
        let mut rng = trajectory_rng(0, 0, 0);
        let bad = StateVector::from_amplitudes(vec![c(2.0, 0.0); b.dim()]);
        assert!(matches!(run_trajectory(&ops, &prop, &bad, &grid, &obs, &mut rng), Err(McwfError::NotNormalized(_))));
        let short = StateVector::basis_state(3, 0);
        assert!(matches!(run_trajectory(&ops, &prop, &short, &grid, &obs, &mut rng), Err(McwfError::Dimension { .. })));
        let coarse = SimParams { dt: 1.0, record_every: 1, t_final: 10.0, ..p.clone() };
        let grid = TimeGrid::from_params(&coarse);
        let psi = StateVector::basis_state(b.dim(), 0);
        assert!(matches!(run_trajectory(&ops, &prop, &psi, &grid, &obs, &mut rng), Err(McwfError::StepTooLarge(_))));
    }

    #[test]
    fn jumps_are_logged_in_time_order() {
        let p = SimParams { atoms: 2, t_final: 10.0, temperature: 0.0, ..SimParams::default() };
        let (b, ops, prop, grid) = setup(&p, BasisMode::BlockadeConstrained);
        let obs = ObservableSet::standard(&b);
        let psi0 = StateVector::basis_state(b.dim(), 0);
        let mut rng = trajectory_rng(3, 0, 0);
        let rec = run_trajectory(&ops, &prop, &psi0, &grid, &obs, &mut rng).unwrap();
        assert!(!rec.jumps.is_empty());
        assert!(rec.jumps.windows(2).all(|w| w[1].time >= w[0].time));
        for t in 0..grid.len() {
            for o in 0..obs.len() {
                let v = rec.value(t, o);
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn coarse_stepping_matches_fine_stepping() {
        let p = SimParams { atoms: 2, t_final: 5.0, temperature: 0.0, ..SimParams::default() };
        let (b, ops, prop, grid) = setup(&p, BasisMode::BlockadeConstrained);
        let obs = ObservableSet::standard(&b);
        let psi0 = StateVector::basis_state(b.dim(), 0);
        let fine_grid = TimeGrid { steps_per_record: 1, intervals: grid.intervals * grid.steps_per_record, ..grid };
        let fine_prop = Propagator::new(&ops, &fine_grid).unwrap();
        for seed in 0..4 {
            let a = run_trajectory(&ops, &prop, &psi0, &grid, &obs, &mut trajectory_rng(seed, 0, 0)).unwrap();
            let f = run_trajectory(&ops, &fine_prop, &psi0, &fine_grid, &obs, &mut trajectory_rng(seed, 0, 0)).unwrap();
            assert_eq!(a.jumps.len(), f.jumps.len());
            for (x, y) in a.jumps.iter().zip(&f.jumps) {
                assert_eq!(x.label, y.label);
                assert!((x.time - y.time).abs() < 1e-9);
            }
            for t in 0..grid.len() {
                for o in 0..obs.len() {
                    let y = f.value(t * grid.steps_per_record, o);
                    assert!((a.value(t, o) - y).abs() < 1e-8);
                }
            }
        }
    }

    fn constant_record(v: f64, points: usize) -> TrajectoryRecord {
        TrajectoryRecord {
            times: (0..points).map(|i| i as f64).collect(),
            values: vec![v; points],
            observables: 1,
            jumps: Vec::new(),
        }
    }

    #[test]
    fn average_statistics() {
        let names = vec![P_GC.to_string()];
        let s = average(&[constant_record(0.0, 20), constant_record(1.0, 20)], &names).unwrap();
        assert!(s.mean[0].iter().all(|&m| m == 0.5));
        // sample std 1/√2, over √2
        assert!(s.stderr[0].iter().all(|&e| (e - 0.5).abs() < 1e-15));
        assert!(matches!(average(&[constant_record(0.0, 20)], &names), Err(McwfError::TooFewRecords(1))));
        assert!(matches!(
            average(&[constant_record(0.0, 20), constant_record(0.0, 21)], &names),
            Err(McwfError::GridMismatch(1))
        ));
    }

    #[test]
    fn steady_state_of_constant_series() {
        let names = vec![P_GC.to_string()];
        let s = average(&[constant_record(0.5, 101), constant_record(0.5, 101)], &names).unwrap();
        let ss = steady_state(&s, 0.2, false).unwrap();
        assert_eq!(ss.f_r, 0.5);
        assert_eq!(ss.stderr, 0.0);
        assert!(ss.converged);
        assert!(matches!(steady_state(&s, 0.05, false), Err(McwfError::TailTooShort { points: 5 })));
        assert!(matches!(steady_state(&s, 0.2, true), Err(McwfError::MissingObservable(_))));
    }

    #[test]
    fn drifting_series_is_not_converged() {
        let names = vec![P_GC.to_string()];
        let ramp = |off: f64| TrajectoryRecord {
            times: (0..101).map(|i| i as f64).collect(),
            values: (0..101).map(|i| off + i as f64 * 1e-3).collect(),
            observables: 1,
            jumps: Vec::new(),
        };
        let s = average(&[ramp(0.0), ramp(1e-6)], &names).unwrap();
        assert!(!steady_state(&s, 0.5, false).unwrap().converged);
    }

    #[test]
    fn ensemble_is_independent_of_worker_count() {
        let p = SimParams { atoms: 2, trajectories: 6, t_final: 2.0, temperature: 20.0, ..SimParams::default() };
        let b = Basis::new(2, BasisMode::BlockadeConstrained).unwrap();
        let obs = ObservableSet::<f64>::standard(&b);
        let run = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| simulate(&p, &b, &obs, 7).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn ensemble_series_respects_probability_bounds() {
        let p = SimParams { atoms: 2, trajectories: 20, t_final: 5.0, temperature: 0.0, ..SimParams::default() };
        let b = Basis::new(2, BasisMode::BlockadeConstrained).unwrap();
        let obs = ObservableSet::<f64>::standard(&b);
        let s = simulate(&p, &b, &obs, 0).unwrap();
        let (gc, rc, g) = (s.mean_of(P_GC).unwrap(), s.mean_of(P_RC).unwrap(), s.mean_of(P_GCG).unwrap());
        for t in 0..s.len() {
            assert!(gc[t] + rc[t] + g[t] <= 1.0 + 1e-12);
        }
        assert_eq!(g[0], 1.0);
    }
}
