//! Product-state basis for one control atom plus `N` ensemble atoms, with
//! sparse operators and state vectors on it.
//!
//! Configurations are encoded as base-3 integers with the control atom as
//! the most significant digit followed by ensemble atoms `1..=N`, so
//! ascending codes enumerate configurations lexicographically with
//! `g < e < r`.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Largest basis dimension that will be enumerated.
pub const MAX_BASIS_DIM: usize = 1 << 24;
/// Largest dimension accepted by [`SparseOperator::to_dense`].
pub const MAX_DENSE_DIM: usize = 1000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HilbertError {
    #[error("ensemble must contain at least one atom")]
    NoAtoms,
    #[error("basis for {atoms} ensemble atoms exceeds capacity of {MAX_BASIS_DIM} states")]
    Capacity { atoms: usize },
    #[error("ensemble atom index {index} outside 1..={atoms}")]
    InvalidAtom { index: usize, atoms: usize },
    #[error("operator entry ({row}, {col}) outside dimension {dim}")]
    OutOfBounds { row: usize, col: usize, dim: usize },
    #[error("dimension {dim} too large for dense conversion (limit {MAX_DENSE_DIM})")]
    TooLargeForDense { dim: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state has zero norm")]
    ZeroNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    Ground,
    Intermediate,
    Rydberg,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::Ground, AtomLevel::Intermediate, AtomLevel::Rydberg];

    pub fn digit(self) -> u64 {
        self as u64
    }

    pub fn from_digit(d: u64) -> Option<Self> {
        Self::ALL.get(d as usize).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            AtomLevel::Ground => 'g',
            AtomLevel::Intermediate => 'e',
            AtomLevel::Rydberg => 'r',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomSelector {
    Control,
    /// 1-based ensemble atom index.
    Ensemble(usize),
}

impl fmt::Display for AtomSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomSelector::Control => write!(f, "c"),
            AtomSelector::Ensemble(j) => write!(f, "{j}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub control: AtomLevel,
    pub ensemble: Vec<AtomLevel>,
}

impl Configuration {
    pub fn ground(atoms: usize) -> Self {
        Self { control: AtomLevel::Ground, ensemble: vec![AtomLevel::Ground; atoms] }
    }

    pub fn count(&self, level: AtomLevel) -> usize {
        self.ensemble.iter().filter(|&&l| l == level).count()
    }

    pub fn level(&self, atom: AtomSelector) -> Option<AtomLevel> {
        match atom {
            AtomSelector::Control => Some(self.control),
            AtomSelector::Ensemble(j) if j >= 1 => self.ensemble.get(j - 1).copied(),
            AtomSelector::Ensemble(_) => None,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{};", self.control.symbol())?;
        for l in &self.ensemble {
            write!(f, "{}", l.symbol())?;
        }
        write!(f, "⟩")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisMode {
    /// Every product configuration, `3^(N+1)` states.
    Full,
    /// Configurations with at most one ensemble atom in `r`.
    BlockadeConstrained,
}

#[derive(Clone, Debug)]
pub struct Basis {
    mode: BasisMode,
    atoms: usize,
    codes: Vec<u64>,
    /// `3^(N - j)` for ensemble atom `j`, control at index 0 (`3^N`).
    place: Vec<u64>,
}

impl Basis {
    pub fn new(atoms: usize, mode: BasisMode) -> Result<Self, HilbertError> {
        if atoms == 0 {
            return Err(HilbertError::NoAtoms);
        }
        let exponent = u32::try_from(atoms + 1).map_err(|_| HilbertError::Capacity { atoms })?;
        let total = 3u64.checked_pow(exponent).ok_or(HilbertError::Capacity { atoms })?;
        let expected = match mode {
            BasisMode::Full => total,
            // 3 · (2^N + N·2^(N-1))
            BasisMode::BlockadeConstrained => {
                let two = 2u64.checked_pow(atoms as u32 - 1).ok_or(HilbertError::Capacity { atoms })?;
                two.checked_mul(2 + atoms as u64)
                    .and_then(|x| x.checked_mul(3))
                    .ok_or(HilbertError::Capacity { atoms })?
            }
        };
        if expected > MAX_BASIS_DIM as u64 || total > (MAX_BASIS_DIM as u64) * 64 {
            return Err(HilbertError::Capacity { atoms });
        }
        let place: Vec<u64> = (0..=atoms).map(|k| 3u64.pow((atoms - k) as u32)).collect();
        let codes: Vec<u64> = match mode {
            BasisMode::Full => (0..total).collect(),
            BasisMode::BlockadeConstrained => (0..total)
                .filter(|&code| {
                    (1..=atoms).filter(|&j| (code / place[j]) % 3 == AtomLevel::Rydberg.digit()).count() < 2
                })
                .collect(),
        };
        debug_assert_eq!(codes.len() as u64, expected);
        Ok(Self { mode, atoms, codes, place })
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.codes.len()
    }

    pub fn code(&self, index: usize) -> u64 {
        self.codes[index]
    }

    pub fn index_of_code(&self, code: u64) -> Option<usize> {
        match self.mode {
            BasisMode::Full => (code < self.codes.len() as u64).then_some(code as usize),
            BasisMode::BlockadeConstrained => self.codes.binary_search(&code).ok(),
        }
    }

    pub fn encode(&self, config: &Configuration) -> Option<u64> {
        if config.ensemble.len() != self.atoms {
            return None;
        }
        let mut code = config.control.digit() * self.place[0];
        for (j, l) in config.ensemble.iter().enumerate() {
            code += l.digit() * self.place[j + 1];
        }
        Some(code)
    }

    pub fn index_of(&self, config: &Configuration) -> Option<usize> {
        self.encode(config).and_then(|code| self.index_of_code(code))
    }

    pub fn config(&self, index: usize) -> Configuration {
        let code = self.codes[index];
        Configuration {
            control: self.digit_level(code, 0),
            ensemble: (1..=self.atoms).map(|j| self.digit_level(code, j)).collect(),
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.dim()).map(|i| self.config(i))
    }

    fn slot(&self, atom: AtomSelector) -> Result<usize, HilbertError> {
        match atom {
            AtomSelector::Control => Ok(0),
            AtomSelector::Ensemble(j) if (1..=self.atoms).contains(&j) => Ok(j),
            AtomSelector::Ensemble(j) => Err(HilbertError::InvalidAtom { index: j, atoms: self.atoms }),
        }
    }

    #[inline]
    fn digit_level(&self, code: u64, slot: usize) -> AtomLevel {
        AtomLevel::from_digit((code / self.place[slot]) % 3).expect("base-3 digit")
    }

    /// Level of `atom` in configuration `index`.
    pub fn level(&self, index: usize, atom: AtomSelector) -> Result<AtomLevel, HilbertError> {
        Ok(self.digit_level(self.codes[index], self.slot(atom)?))
    }

    pub fn control_level(&self, index: usize) -> AtomLevel {
        self.digit_level(self.codes[index], 0)
    }

    /// `(#e, #r)` among ensemble atoms of configuration `index`.
    pub fn ensemble_counts(&self, index: usize) -> (usize, usize) {
        let code = self.codes[index];
        let mut counts = (0, 0);
        for j in 1..=self.atoms {
            match self.digit_level(code, j) {
                AtomLevel::Intermediate => counts.0 += 1,
                AtomLevel::Rydberg => counts.1 += 1,
                AtomLevel::Ground => {}
            }
        }
        counts
    }

    /// Index of the all-ground configuration `|g_c; g…g⟩`.
    pub fn ground_index(&self) -> usize {
        0
    }

    /// Indices of configurations satisfying `pred`.
    pub fn select(&self, mut pred: impl FnMut(&Self, usize) -> bool) -> Vec<usize> {
        (0..self.dim()).filter(|&i| pred(self, i)).collect()
    }

    /// Single-atom flip `|to⟩⟨from|` on `atom`, embedded in the product
    /// space and restricted to this basis.
    pub fn transition_operator<T: Real>(
        &self,
        atom: AtomSelector,
        from: AtomLevel,
        to: AtomLevel,
    ) -> Result<SparseOperator<T>, HilbertError> {
        let slot = self.slot(atom)?;
        let place = self.place[slot];
        let mut op = SparseOperator::zeros(self.dim());
        for (i, &code) in self.codes.iter().enumerate() {
            if self.digit_level(code, slot) != from {
                continue;
            }
            let target = code - from.digit() * place + to.digit() * place;
            if let Some(j) = self.index_of_code(target) {
                op.push(j, i, Complex::one());
            }
        }
        Ok(op)
    }
}

/// Sparse complex matrix in triplet form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T: Real> {
    dim: usize,
    entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, entries: (0..dim).map(|i| (i, i, Complex::one())).collect() }
    }

    pub fn from_triplets(dim: usize, entries: Vec<(usize, usize, Complex<T>)>) -> Result<Self, HilbertError> {
        if let Some(&(row, col, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(HilbertError::OutOfBounds { row, col, dim });
        }
        Ok(Self { dim, entries }.canonical())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex<T>)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn push(&mut self, row: usize, col: usize, value: Complex<T>) {
        assert!(row < self.dim && col < self.dim, "entry ({row}, {col}) outside dimension {}", self.dim);
        self.entries.push((row, col, value));
    }

    /// Sorted by (row, col) with duplicates summed and exact zeros dropped.
    pub fn canonical(mut self) -> Self {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex<T>)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 = last.2 + v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| !e.2.is_zero());
        Self { dim: self.dim, entries: merged }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries.iter().filter(|e| e.0 == row && e.1 == col).fold(Complex::zero(), |acc, e| acc + e.2)
    }

    pub fn adjoint(&self) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect() }.canonical()
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect() }.canonical()
    }

    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check_dim(other.dim)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(Self { dim: self.dim, entries }.canonical())
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check_dim(other.dim)?;
        let mut by_row: Vec<Vec<(usize, Complex<T>)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut entries = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(c, b) in &by_row[k] {
                entries.push((r, c, a * b));
            }
        }
        Ok(Self { dim: self.dim, entries }.canonical())
    }

    fn check_dim(&self, other: usize) -> Result<(), HilbertError> {
        if self.dim != other {
            return Err(HilbertError::DimensionMismatch { left: self.dim, right: other });
        }
        Ok(())
    }

    /// `y ← A x`.
    pub fn apply_into(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        y.iter_mut().for_each(|v| *v = Complex::zero());
        for &(r, c, v) in &self.entries {
            y[r] = y[r] + v * x[c];
        }
    }

    pub fn apply(&self, x: &StateVector<T>) -> StateVector<T> {
        let mut y = vec![Complex::zero(); self.dim];
        self.apply_into(x.amplitudes(), &mut y);
        StateVector::from_amplitudes(y)
    }

    /// `⟨ψ|A|ψ⟩` without normalisation.
    pub fn expectation(&self, psi: &[Complex<T>]) -> Complex<T> {
        self.entries.iter().fold(Complex::zero(), |acc, &(r, c, v)| acc + psi[r].conj() * v * psi[c])
    }

    pub fn to_dense(&self) -> Result<DenseMatrix<T>, HilbertError> {
        if self.dim > MAX_DENSE_DIM {
            return Err(HilbertError::TooLargeForDense { dim: self.dim });
        }
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = m[(r, c)] + v;
        }
        Ok(m)
    }

    /// Largest `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> T {
        let mut map: HashMap<(usize, usize), Complex<T>> = HashMap::new();
        for &(r, c, v) in &self.entries {
            let e = map.entry((r, c)).or_insert_with(Complex::zero);
            *e = *e + v;
        }
        map.iter()
            .map(|(&(r, c), &v)| (v - map.get(&(c, r)).copied().unwrap_or_else(Complex::zero).conj()).norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|e| e.0 == e.1)
    }

    /// Diagonal as a dense vector.
    pub fn diagonal(&self) -> Vec<Complex<T>> {
        let mut d = vec![Complex::zero(); self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = d[r] + v;
            }
        }
        d
    }

    /// Restriction of a full-basis operator to the configurations of
    /// `sub`, which must describe the same atoms.
    pub fn project_onto(&self, full: &Basis, sub: &Basis) -> Result<Self, HilbertError> {
        self.check_dim(full.dim())?;
        if full.atoms() != sub.atoms() {
            return Err(HilbertError::DimensionMismatch { left: full.atoms(), right: sub.atoms() });
        }
        let map: Vec<Option<usize>> = (0..full.dim()).map(|i| sub.index_of_code(full.code(i))).collect();
        let entries = self.entries.iter().filter_map(|&(r, c, v)| Some((map[r]?, map[c]?, v))).collect();
        Ok(Self { dim: sub.dim(), entries }.canonical())
    }
}

/// Complex amplitudes over a [`Basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![Complex::zero(); dim] }
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amps[index] = Complex::one();
        s
    }

    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<T, HilbertError> {
        let n = self.norm_sqr();
        if !(n > T::zero()) {
            return Err(HilbertError::ZeroNorm);
        }
        let inv = T::one() / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a = *a * inv);
        Ok(n)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps.iter().zip(&other.amps).fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Summed `|ψ_i|²` over `indices`.
    pub fn population(&self, indices: &[usize]) -> T {
        indices.iter().map(|&i| self.amps[i].norm_sqr()).fold(T::zero(), |a, b| a + b)
    }
}

#[inline]
pub(crate) fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AtomLevel::*;

    fn brute_force_count(atoms: usize) -> usize {
        // Independent enumeration through digit vectors.
        let mut count = 0;
        let total = 3usize.pow(atoms as u32 + 1);
        for code in 0..total {
            let mut x = code;
            let mut rydberg = 0;
            for _ in 0..atoms {
                if x % 3 == 2 {
                    rydberg += 1;
                }
                x /= 3;
            }
            if rydberg < 2 {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn dimensions() {
        assert_eq!(Basis::new(1, BasisMode::Full).unwrap().dim(), 9);
        assert_eq!(Basis::new(3, BasisMode::BlockadeConstrained).unwrap().dim(), 60);
        assert_eq!(Basis::new(5, BasisMode::BlockadeConstrained).unwrap().dim(), 336);
        for n in 1..=6 {
            let b = Basis::new(n, BasisMode::BlockadeConstrained).unwrap();
            assert_eq!(b.dim(), brute_force_count(n), "N = {n}");
            assert_eq!(b.dim(), 3 * (2usize.pow(n as u32) + n * 2usize.pow(n as u32 - 1)));
            assert!(b.configs().all(|c| c.count(Rydberg) < 2));
        }
    }

    #[test]
    fn rejects_empty_and_oversized() {
        assert_eq!(Basis::new(0, BasisMode::Full).unwrap_err(), HilbertError::NoAtoms);
        assert_eq!(Basis::new(40, BasisMode::Full).unwrap_err(), HilbertError::Capacity { atoms: 40 });
        assert_eq!(Basis::new(200, BasisMode::BlockadeConstrained).unwrap_err(), HilbertError::Capacity { atoms: 200 });
    }

    #[test]
    fn lexicographic_order() {
        let b = Basis::new(2, BasisMode::Full).unwrap();
        let cfgs: Vec<_> = b.configs().collect();
        assert_eq!(cfgs[0], Configuration { control: Ground, ensemble: vec![Ground, Ground] });
        assert_eq!(cfgs[1], Configuration { control: Ground, ensemble: vec![Ground, Intermediate] });
        assert_eq!(cfgs[3], Configuration { control: Ground, ensemble: vec![Intermediate, Ground] });
        assert_eq!(cfgs[26], Configuration { control: Rydberg, ensemble: vec![Rydberg, Rydberg] });
        let mut sorted = cfgs.clone();
        sorted.sort_by(|a, b| (a.control, &a.ensemble).cmp(&(b.control, &b.ensemble)));
        assert_eq!(cfgs, sorted);
    }

    #[test]
    fn control_projector_is_identity_on_ensemble() {
        let b = Basis::new(1, BasisMode::Full).unwrap();
        let p = b.transition_operator::<f64>(AtomSelector::Control, Ground, Ground).unwrap();
        assert!(p.is_diagonal());
        assert_eq!(p.nnz(), 3);
        assert!(p.entries().iter().all(|e| e.2 == Complex::one()));
    }

    #[test]
    fn constrained_flip_drops_double_rydberg() {
        let b = Basis::new(2, BasisMode::BlockadeConstrained).unwrap();
        let op = b.transition_operator::<f64>(AtomSelector::Ensemble(1), Ground, Rydberg).unwrap();
        let src = b.index_of(&Configuration { control: Ground, ensemble: vec![Ground, Rydberg] }).unwrap();
        let out = op.apply(&StateVector::basis_state(b.dim(), src));
        assert_eq!(out.norm_sqr(), 0.0);
    }

    #[test]
    fn full_flip_reaches_double_rydberg() {
        let b = Basis::new(2, BasisMode::Full).unwrap();
        let op = b.transition_operator::<f64>(AtomSelector::Ensemble(1), Ground, Rydberg).unwrap();
        let src = b.index_of(&Configuration { control: Ground, ensemble: vec![Ground, Rydberg] }).unwrap();
        let dst = b.index_of(&Configuration { control: Ground, ensemble: vec![Rydberg, Rydberg] }).unwrap();
        let out = op.apply(&StateVector::basis_state(b.dim(), src));
        assert_eq!(out.amplitudes()[dst], Complex::one());
        assert_eq!(out.norm_sqr(), 1.0);
    }

    #[test]
    fn invalid_selector() {
        let b = Basis::new(2, BasisMode::Full).unwrap();
        for j in [0, 3] {
            assert_eq!(
                b.transition_operator::<f64>(AtomSelector::Ensemble(j), Ground, Rydberg).unwrap_err(),
                HilbertError::InvalidAtom { index: j, atoms: 2 }
            );
        }
    }

    #[test]
    fn dense_guard() {
        let op = SparseOperator::<f64>::identity(MAX_DENSE_DIM + 1);
        assert!(matches!(op.to_dense(), Err(HilbertError::TooLargeForDense { .. })));
        assert!(SparseOperator::<f64>::from_triplets(3, vec![(3, 0, Complex::one())]).is_err());
    }

    fn level_strategy() -> impl Strategy<Value = AtomLevel> {
        prop_oneof![Just(Ground), Just(Intermediate), Just(Rydberg)]
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..=5, full in any::<bool>(), seed in any::<u64>()) {
            let mode = if full { BasisMode::Full } else { BasisMode::BlockadeConstrained };
            let b = Basis::new(n, mode).unwrap();
            let i = (seed % b.dim() as u64) as usize;
            let c = b.config(i);
            prop_assert_eq!(b.index_of(&c), Some(i));
            prop_assert_eq!(b.config(b.index_of(&c).unwrap()), c);
        }

        #[test]
        fn adjoint_swaps_transition(n in 1usize..=3, j in 0usize..=3, from in level_strategy(), to in level_strategy()) {
            let b = Basis::new(n, BasisMode::Full).unwrap();
            let atom = if j == 0 || j > n { AtomSelector::Control } else { AtomSelector::Ensemble(j) };
            let fwd = b.transition_operator::<f64>(atom, from, to).unwrap();
            let back = b.transition_operator::<f64>(atom, to, from).unwrap();
            prop_assert_eq!(fwd.adjoint(), back.canonical());
        }

        #[test]
        fn constrained_equals_projected_full(n in 1usize..=4, j in 0usize..=4, from in level_strategy(), to in level_strategy()) {
            let full = Basis::new(n, BasisMode::Full).unwrap();
            let sub = Basis::new(n, BasisMode::BlockadeConstrained).unwrap();
            let atom = if j == 0 || j > n { AtomSelector::Control } else { AtomSelector::Ensemble(j) };
            let on_full = full.transition_operator::<f64>(atom, from, to).unwrap();
            let on_sub = sub.transition_operator::<f64>(atom, from, to).unwrap();
            prop_assert_eq!(on_full.project_onto(&full, &sub).unwrap(), on_sub.canonical());
        }
    }
}
