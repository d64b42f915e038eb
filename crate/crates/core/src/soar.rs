//! Orthonormal bases of second-order Krylov subspaces.
//!
//! For an expansion point `s₀ = ik₀` the subspace is spanned by
//! `P₀ = −K̃⁻¹B`, `P₁ = A₁P₀`, `Pᵢ = A₁Pᵢ₋₁ + A₂Pᵢ₋₂` with `A₁ = −K̃⁻¹D̃` and
//! `A₂ = −K̃⁻¹M`. Each point runs its own second-order Arnoldi sequence
//! (orthonormal `q` vectors plus auxiliary `p` vectors, so the recurrence
//! never sees the exponentially growing raw blocks); every new `q` is then
//! orthonormalized against the shared basis `V`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::linalg::gram_schmidt::orthonormalize_full;
use crate::linalg::{dot_conj, factorize, norm2, DenseComplexBlock, Factorization, Op, SparseMatrixComplex, DEFAULT_DEFLATION_TOL};
use crate::system::SecondOrderSystem;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// One slot per point per round, in listed order.
    Interleaved,
    /// Exhaust each point's budget before moving to the next.
    Sequential { budgets: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Complex,
    /// Real and imaginary parts of each direction become separate real columns.
    RealSplit,
}

/// Which second-order Krylov subspace feeds the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovSide {
    /// Started from `−K̃⁻¹B`.
    Input,
    /// Started from `−K̃⁻ᵀCᵀ` with transposed operators.
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    /// Expansion wave numbers `k₀` (1/m); `s₀ = ik₀`.
    pub points: Vec<f64>,
    pub schedule: Schedule,
    pub mode: BasisMode,
    pub deflation_tol: f64,
    pub side: KrylovSide,
}

impl ExpansionPlan {
    pub fn interleaved(points: Vec<f64>) -> Self {
        Self {
            points,
            schedule: Schedule::Interleaved,
            mode: BasisMode::Complex,
            deflation_tol: DEFAULT_DEFLATION_TOL,
            side: KrylovSide::Input,
        }
    }

    pub fn sequential(points: Vec<f64>, budgets: Vec<usize>) -> Self {
        Self {
            schedule: Schedule::Sequential { budgets },
            ..Self::interleaved(points)
        }
    }

    pub fn single(k0: f64) -> Self {
        Self::interleaved(vec![k0])
    }

    pub fn with_mode(mut self, mode: BasisMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(MorError::InvalidPlan("no expansion points".into()));
        }
        for (i, &k0) in self.points.iter().enumerate() {
            if !(k0.is_finite() && k0 > 0.0) {
                return Err(MorError::InvalidPlan(format!("expansion point {k0} must be positive")));
            }
            if self.points[..i].contains(&k0) {
                return Err(MorError::InvalidPlan(format!("duplicate expansion point {k0}")));
            }
        }
        if let Schedule::Sequential { budgets } = &self.schedule {
            if budgets.len() != self.points.len() {
                return Err(MorError::InvalidPlan(format!(
                    "{} budgets for {} expansion points",
                    budgets.len(),
                    self.points.len()
                )));
            }
        }
        if !(self.deflation_tol >= 0.0 && self.deflation_tol < 1.0) {
            return Err(MorError::InvalidPlan(format!(
                "deflation tolerance {} outside [0, 1)",
                self.deflation_tol
            )));
        }
        Ok(())
    }

    /// Total dimension implied by sequential budgets.
    pub fn budget_total(&self) -> Option<usize> {
        match &self.schedule {
            Schedule::Sequential { budgets } => Some(budgets.iter().sum()),
            Schedule::Interleaved => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnPart {
    Complex,
    Real,
    Imag,
}

/// Where a basis column came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnTag {
    pub point: usize,
    pub k0: f64,
    /// Index `i` of the Krylov block `Pᵢ` that introduced the direction.
    pub krylov_index: usize,
    pub part: ColumnPart,
}

/// Orthonormal columns with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    n: usize,
    mode: BasisMode,
    columns: Vec<Vec<Complex64>>,
    tags: Vec<ColumnTag>,
}

impl ProjectionBasis {
    pub fn new(n: usize, mode: BasisMode) -> Self {
        Self {
            n,
            mode,
            columns: Vec::new(),
            tags: Vec::new(),
        }
    }

    /// Wraps given columns; they are assumed orthonormal.
    pub fn from_columns(n: usize, mode: BasisMode, columns: Vec<Vec<Complex64>>, tags: Vec<ColumnTag>) -> Result<Self> {
        if columns.len() != tags.len() || columns.iter().any(|c| c.len() != n) {
            return Err(MorError::ShapeError("basis columns and tags disagree".into()));
        }
        Ok(Self { n, mode, columns, tags })
    }

    /// First `n` unit vectors, tagged as a synthetic point.
    pub fn identity(n: usize) -> Self {
        let columns = (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        let tags = (0..n)
            .map(|j| ColumnTag {
                point: 0,
                k0: 0.0,
                krylov_index: j,
                part: ColumnPart::Real,
            })
            .collect();
        Self {
            n,
            mode: BasisMode::RealSplit,
            columns,
            tags,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn columns(&self) -> &[Vec<Complex64>] {
        &self.columns
    }

    pub fn tags(&self) -> &[ColumnTag] {
        &self.tags
    }

    /// Basis restricted to its first `r` columns.
    pub fn truncated(&self, r: usize) -> Self {
        let r = r.min(self.len());
        Self {
            n: self.n,
            mode: self.mode,
            columns: self.columns[..r].to_vec(),
            tags: self.tags[..r].to_vec(),
        }
    }

    pub fn to_dense(&self) -> DenseComplexBlock {
        DenseComplexBlock::from_columns(self.n, &self.columns).expect("columns have length n")
    }

    /// Orthonormalizes `candidate` against the current columns.
    pub fn orthonormalize(&self, candidate: &[Complex64], deflation_tol: f64) -> Result<Option<Vec<Complex64>>> {
        if candidate.len() != self.n {
            return Err(MorError::ShapeError(format!(
                "candidate length {} does not match basis rows {}",
                candidate.len(),
                self.n
            )));
        }
        Ok(orthonormalize_full(&self.columns, candidate, deflation_tol).column)
    }

    fn push(&mut self, column: Vec<Complex64>, tag: ColumnTag) {
        self.columns.push(column);
        self.tags.push(tag);
    }

    /// `max |VᴴV − I|` over all entries.
    pub fn orthogonality_error(&self) -> f64 {
        let r = self.len();
        (0..r)
            .into_par_iter()
            .map(|j| {
                (0..=j)
                    .map(|i| {
                        let g = dot_conj(&self.columns[i], &self.columns[j]);
                        let target = if i == j { 1.0 } else { 0.0 };
                        (g - target).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Number of columns contributed by each of `points` expansion points.
    pub fn columns_per_point(&self, points: usize) -> Vec<usize> {
        let mut counts = vec![0; points];
        for t in &self.tags {
            if t.point < points {
                counts[t.point] += 1;
            }
        }
        counts
    }

    /// Sidecar listing `column point k0 krylov_index part`.
    pub fn provenance_listing(&self) -> String {
        let mut out = String::from("column,point,k0,krylov_index,part\n");
        for (j, t) in self.tags.iter().enumerate() {
            let part = match t.part {
                ColumnPart::Complex => "complex",
                ColumnPart::Real => "real",
                ColumnPart::Imag => "imag",
            };
            let _ = writeln!(out, "{j},{},{:?},{},{part}", t.point, t.k0, t.krylov_index);
        }
        out
    }
}

/// Candidate direction queued by a point; `None` when it deflated locally.
#[derive(Debug, Clone)]
struct Candidate {
    vector: Option<Vec<Complex64>>,
    krylov_index: usize,
    part: ColumnPart,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PointCounters {
    /// Scheduling slots consumed.
    pub slots: usize,
    /// Columns that entered the basis.
    pub columns: usize,
    /// Candidates discarded as numerically dependent.
    pub deflated: usize,
}

struct PointState {
    k0: f64,
    factorization: Factorization,
    dtilde: SparseMatrixComplex,
    /// Local orthonormal sequence with auxiliary vectors and Krylov indices.
    local_q: Vec<Vec<Complex64>>,
    local_p: Vec<Vec<Complex64>>,
    local_index: Vec<usize>,
    next_source: usize,
    pending: VecDeque<Candidate>,
    exhausted: bool,
    counters: PointCounters,
}

/// Incrementally extensible basis construction state.
pub struct SoarState<'a> {
    sys: &'a SecondOrderSystem,
    plan: ExpansionPlan,
    points: Vec<PointState>,
    basis: ProjectionBasis,
    cursor: usize,
    total_slots: usize,
}

/// Summary of one `extend` call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtendReport {
    pub added: usize,
    pub deflated: usize,
}

impl<'a> SoarState<'a> {
    pub fn basis(&self) -> &ProjectionBasis {
        &self.basis
    }

    pub fn into_basis(self) -> ProjectionBasis {
        self.basis
    }

    pub fn plan(&self) -> &ExpansionPlan {
        &self.plan
    }

    pub fn system(&self) -> &'a SecondOrderSystem {
        self.sys
    }

    pub fn counters(&self) -> Vec<PointCounters> {
        self.points.iter().map(|p| p.counters).collect()
    }

    pub fn total_slots(&self) -> usize {
        self.total_slots
    }

    pub fn condition_estimates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.factorization.condition_estimate()).collect()
    }

    fn apply_inverse(&self, pt: &PointState, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let op = match self.plan.side {
            KrylovSide::Input => Op::NoTranspose,
            KrylovSide::Output => Op::Transpose,
        };
        pt.factorization.solve(rhs, op)
    }

    fn push_candidates(&mut self, idx: usize, vector: Option<Vec<Complex64>>, krylov_index: usize) {
        let pending = &mut self.points[idx].pending;
        match self.plan.mode {
            BasisMode::Complex => pending.push_back(Candidate {
                vector,
                krylov_index,
                part: ColumnPart::Complex,
            }),
            BasisMode::RealSplit => {
                let (re, im) = match vector {
                    Some(v) => (
                        Some(v.iter().map(|z| Complex64::new(z.re, 0.0)).collect()),
                        Some(v.iter().map(|z| Complex64::new(z.im, 0.0)).collect()),
                    ),
                    None => (None, None),
                };
                pending.push_back(Candidate {
                    vector: re,
                    krylov_index,
                    part: ColumnPart::Real,
                });
                pending.push_back(Candidate {
                    vector: im,
                    krylov_index,
                    part: ColumnPart::Imag,
                });
            }
        }
    }

    /// Forms the starting block and queues its columns.
    fn start_point(&mut self, idx: usize) -> Result<()> {
        let start: Vec<Vec<Complex64>> = match self.plan.side {
            KrylovSide::Input => (0..self.sys.inputs())
                .map(|j| (0..self.sys.n()).map(|i| Complex64::new(self.sys.b.get(i, j), 0.0)).collect())
                .collect(),
            KrylovSide::Output => (0..self.sys.outputs())
                .map(|j| self.sys.c.row(j).fold(vec![ZERO; self.sys.n()], |mut v, (i, x)| {
                    v[i] = Complex64::new(x, 0.0);
                    v
                }))
                .collect(),
        };
        let tol = self.plan.deflation_tol;
        for column in start {
            let pt = &self.points[idx];
            let mut p0 = self.apply_inverse(pt, &column)?;
            p0.iter_mut().for_each(|z| *z = -*z);
            let orth = orthonormalize_full(&pt.local_q, &p0, tol);
            let n = self.sys.n();
            let pt = &mut self.points[idx];
            if let Some(q) = &orth.column {
                pt.local_q.push(q.clone());
                pt.local_p.push(vec![ZERO; n]);
                pt.local_index.push(0);
            }
            self.push_candidates(idx, orth.column, 0);
        }
        Ok(())
    }

    /// One second-order Arnoldi step at point `idx`.
    fn advance_point(&mut self, idx: usize) -> Result<()> {
        let tol = self.plan.deflation_tol;
        let pt = &self.points[idx];
        let src = pt.next_source;
        if src >= pt.local_q.len() {
            self.points[idx].exhausted = true;
            return Ok(());
        }
        let (q, p) = (&pt.local_q[src], &pt.local_p[src]);
        let (dq, mp) = match self.plan.side {
            KrylovSide::Input => (pt.dtilde.mul_vec(q), self.sys.m.mul_vec(p)),
            KrylovSide::Output => (pt.dtilde.mul_vec_transpose(q), self.sys.m.mul_vec_transpose(p)),
        };
        let rhs: Vec<Complex64> = dq.iter().zip(&mp).map(|(a, b)| -(a + b)).collect();
        let r = self.apply_inverse(pt, &rhs)?;
        let orth = orthonormalize_full(&pt.local_q, &r, tol);
        // carry the projection coefficients over to the auxiliary vector
        let mut s = q.clone();
        for (pi, h) in pt.local_p.iter().zip(&orth.coefficients) {
            for (sk, pk) in s.iter_mut().zip(pi) {
                *sk -= pk * h;
            }
        }
        let krylov_index = pt.local_index[src] + 1;
        let n = self.sys.n();
        let pt = &mut self.points[idx];
        pt.next_source += 1;
        match orth.column {
            Some(qn) => {
                let scale = 1.0 / orth.residual_norm;
                s.iter_mut().for_each(|z| *z *= scale);
                pt.local_q.push(qn.clone());
                pt.local_p.push(s);
                pt.local_index.push(krylov_index);
                self.push_candidates(idx, Some(qn), krylov_index);
            }
            None => {
                if norm2(&s) > 0.0 {
                    // deflated direction: keep the auxiliary part alive
                    pt.local_q.push(vec![ZERO; n]);
                    pt.local_p.push(s);
                    pt.local_index.push(krylov_index);
                }
                self.push_candidates(idx, None, krylov_index);
            }
        }
        Ok(())
    }

    fn next_point(&mut self) -> Result<usize> {
        let npts = self.points.len();
        match &self.plan.schedule {
            Schedule::Interleaved => {
                for offset in 0..npts {
                    let idx = (self.cursor + offset) % npts;
                    let pt = &self.points[idx];
                    if !(pt.exhausted && pt.pending.is_empty()) {
                        self.cursor = (idx + 1) % npts;
                        return Ok(idx);
                    }
                }
                Err(MorError::BudgetExhausted(self.total_slots))
            }
            Schedule::Sequential { budgets } => budgets
                .iter()
                .zip(&self.points)
                .position(|(&b, pt)| pt.counters.slots < b && !(pt.exhausted && pt.pending.is_empty()))
                .ok_or(MorError::BudgetExhausted(self.total_slots)),
        }
    }

    /// Processes one scheduling slot; returns whether a column was added.
    fn step(&mut self) -> Result<bool> {
        if self.basis.len() >= self.sys.n() {
            return Err(MorError::BasisFull(self.sys.n()));
        }
        loop {
            let idx = self.next_point()?;
            while self.points[idx].pending.is_empty() && !self.points[idx].exhausted {
                self.advance_point(idx)?;
            }
            let Some(candidate) = self.points[idx].pending.pop_front() else {
                continue;
            };
            self.total_slots += 1;
            let k0 = self.points[idx].k0;
            let column = match &candidate.vector {
                Some(v) => self.basis.orthonormalize(v, self.plan.deflation_tol)?,
                None => None,
            };
            let counters = &mut self.points[idx].counters;
            counters.slots += 1;
            return Ok(match column {
                Some(col) => {
                    counters.columns += 1;
                    self.basis.push(
                        col,
                        ColumnTag {
                            point: idx,
                            k0,
                            krylov_index: candidate.krylov_index,
                            part: candidate.part,
                        },
                    );
                    true
                }
                None => {
                    counters.deflated += 1;
                    false
                }
            });
        }
    }

    /// Processes `slots` scheduling slots. Deflated candidates consume their
    /// slot without adding a column.
    pub fn extend(&mut self, slots: usize) -> Result<ExtendReport> {
        let mut report = ExtendReport::default();
        for _ in 0..slots {
            if self.step()? {
                report.added += 1;
            } else {
                report.deflated += 1;
            }
        }
        Ok(report)
    }

    /// Extends until the basis holds `dimension` columns.
    pub fn extend_to(&mut self, dimension: usize) -> Result<ExtendReport> {
        let mut report = ExtendReport::default();
        while self.basis.len() < dimension {
            if self.step()? {
                report.added += 1;
            } else {
                report.deflated += 1;
            }
        }
        Ok(report)
    }
}

/// Factorizes `K̃(ik₀)` for every planned point and forms the starting blocks.
pub fn init_state<'a>(sys: &'a SecondOrderSystem, plan: &ExpansionPlan) -> Result<SoarState<'a>> {
    plan.validate()?;
    let points: Vec<PointState> = plan
        .points
        .par_iter()
        .map(|&k0| {
            let s0 = Complex64::new(0.0, k0);
            let kt = sys.shifted_stiffness(s0)?;
            let factorization = factorize(&kt).map_err(|e| match e {
                MorError::SingularOperator(msg) => {
                    MorError::SingularOperator(format!("shifted stiffness at k0 = {k0}: {msg}"))
                }
                other => other,
            })?;
            Ok(PointState {
                k0,
                factorization,
                dtilde: sys.shifted_damping(s0)?,
                local_q: Vec::new(),
                local_p: Vec::new(),
                local_index: Vec::new(),
                next_source: 0,
                pending: VecDeque::new(),
                exhausted: false,
                counters: PointCounters::default(),
            })
        })
        .collect::<Result<_>>()?;
    let mut state = SoarState {
        sys,
        plan: plan.clone(),
        points,
        basis: ProjectionBasis::new(sys.n(), plan.mode),
        cursor: 0,
        total_slots: 0,
    };
    for idx in 0..state.points.len() {
        state.start_point(idx)?;
    }
    Ok(state)
}

/// Raw (unorthonormalized) blocks `P₀ … P_{count−1}` by direct recurrence.
///
/// Reference oracle only; the raw recurrence is meaningful for short runs.
pub fn raw_krylov_blocks(sys: &SecondOrderSystem, s0: Complex64, count: usize) -> Result<Vec<DenseComplexBlock>> {
    if count > 10 {
        return Err(MorError::InvalidConfig(format!(
            "raw recurrence limited to 10 blocks, {count} requested"
        )));
    }
    let n = sys.n();
    let f = factorize(&sys.shifted_stiffness(s0)?)?;
    let dt = sys.shifted_damping(s0)?;
    let mut blocks: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(count);
    for i in 0..count {
        let block: Vec<Vec<Complex64>> = (0..sys.inputs())
            .map(|j| {
                let rhs: Vec<Complex64> = if i == 0 {
                    (0..n).map(|row| Complex64::new(sys.b.get(row, j), 0.0)).collect()
                } else {
                    let mut v = dt.mul_vec(&blocks[i - 1][j]);
                    if i >= 2 {
                        let mp = sys.m.mul_vec(&blocks[i - 2][j]);
                        v.iter_mut().zip(&mp).for_each(|(a, b)| *a += b);
                    }
                    v
                };
                let mut x = f.solve(&rhs, Op::NoTranspose)?;
                x.iter_mut().for_each(|z| *z = -*z);
                Ok(x)
            })
            .collect::<Result<_>>()?;
        blocks.push(block);
    }
    blocks
        .iter()
        .map(|cols| DenseComplexBlock::from_columns(n, cols))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrixReal;

    fn chain_system(n: usize) -> SecondOrderSystem {
        // tridiagonal stiffness, lumped mass, damping at the last node
        let mut k = Vec::new();
        for i in 0..n {
            k.push((i, i, 2.0 + 0.1 * i as f64));
            if i + 1 < n {
                k.push((i, i + 1, -1.0));
                k.push((i + 1, i, -1.0));
            }
        }
        let k = SparseMatrixReal::from_triplets(&k, n, n).unwrap();
        let m = SparseMatrixReal::identity(n, 1.0);
        let d = SparseMatrixReal::from_triplets(&[(n - 1, n - 1, 0.5)], n, n).unwrap();
        let b = SparseMatrixReal::from_triplets(&[(0, 0, 1.0)], n, 1).unwrap();
        let c = SparseMatrixReal::from_triplets(&[(0, n - 1, 1.0), (1, n / 2, 1.0)], 2, n).unwrap();
        SecondOrderSystem::new(m, d, k, b, c).unwrap()
    }

    #[test]
    fn duplicate_points_rejected() {
        let plan = ExpansionPlan::interleaved(vec![2.0, 2.0]);
        assert!(matches!(plan.validate(), Err(MorError::InvalidPlan(_))));
    }

    #[test]
    fn budgets_must_match_points() {
        let plan = ExpansionPlan::sequential(vec![1.0, 2.0], vec![3]);
        assert!(matches!(plan.validate(), Err(MorError::InvalidPlan(_))));
    }

    #[test]
    fn singular_shift_reported() {
        // K̃ = s₀²M + K = −k₀² + k₀² = 0
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 4.0, 1.0, 1.0);
        let err = init_state(&sys, &ExpansionPlan::single(2.0)).err().unwrap();
        match err {
            MorError::SingularOperator(msg) => assert!(msg.contains("k0 = 2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_column_is_normalized_start_block() {
        let sys = chain_system(12);
        let mut state = init_state(&sys, &ExpansionPlan::single(0.7)).unwrap();
        state.extend(1).unwrap();
        let raw = raw_krylov_blocks(&sys, Complex64::new(0.0, 0.7), 1).unwrap();
        let p0 = raw[0].column(0);
        let scale = 1.0 / norm2(p0);
        let v = &state.basis().columns()[0];
        for (a, b) in v.iter().zip(p0) {
            assert!((a - b * scale).norm() < 1e-14);
        }
    }

    #[test]
    fn interleaved_counts_and_tags() {
        let sys = chain_system(60);
        let mut state = init_state(&sys, &ExpansionPlan::interleaved(vec![0.5, 1.0, 1.5])).unwrap();
        state.extend(10).unwrap();
        let per_point = state.basis().columns_per_point(3);
        assert_eq!(per_point, vec![4, 3, 3]);
        let order: Vec<usize> = state.basis().tags().iter().map(|t| t.point).collect();
        assert_eq!(order, vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0]);
        assert!(state.basis().orthogonality_error() < 1e-10);
    }

    #[test]
    fn real_split_gives_real_columns() {
        let sys = chain_system(30);
        let plan = ExpansionPlan::single(0.9).with_mode(BasisMode::RealSplit);
        let mut state = init_state(&sys, &plan).unwrap();
        state.extend(6).unwrap();
        let b = state.basis();
        assert!(b.columns().iter().flatten().all(|z| z.im == 0.0));
        assert_eq!(b.tags()[0].part, ColumnPart::Real);
        assert_eq!(b.tags()[1].part, ColumnPart::Imag);
        assert!(b.orthogonality_error() < 1e-10);
    }

    #[test]
    fn basis_full_is_reported() {
        let sys = chain_system(4);
        let mut state = init_state(&sys, &ExpansionPlan::interleaved(vec![0.3, 0.8])).unwrap();
        let mut added = 0;
        let err = loop {
            match state.extend(1) {
                Ok(r) => added += r.added,
                Err(e) => break e,
            }
        };
        assert!(matches!(err, MorError::BasisFull(4) | MorError::BudgetExhausted(_)), "{err:?}");
        assert!(added <= 4);
        let c = state.counters();
        let slots: usize = c.iter().map(|p| p.slots).sum();
        let deflated: usize = c.iter().map(|p| p.deflated).sum();
        assert_eq!(slots, state.basis().len() + deflated);
    }

    #[test]
    fn raw_blocks_limit() {
        let sys = chain_system(5);
        assert!(raw_krylov_blocks(&sys, Complex64::new(0.0, 1.0), 11).is_err());
        let blocks = raw_krylov_blocks(&sys, Complex64::new(0.0, 1.0), 2).unwrap();
        // P₁ = −K̃⁻¹D̃P₀
        let s0 = Complex64::new(0.0, 1.0);
        let kt = sys.shifted_stiffness(s0).unwrap();
        let dt = sys.shifted_damping(s0).unwrap();
        let lhs = kt.mul_vec(blocks[1].column(0));
        let rhs = dt.mul_vec(blocks[0].column(0));
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a + b).norm() < 1e-12);
        }
    }

    #[test]
    fn provenance_listing_has_row_per_column() {
        let sys = chain_system(20);
        let mut state = init_state(&sys, &ExpansionPlan::sequential(vec![0.5, 1.2], vec![3, 2])).unwrap();
        state.extend(5).unwrap();
        let listing = state.basis().provenance_listing();
        assert_eq!(listing.lines().count(), 6);
        assert!(listing.lines().nth(1).unwrap().starts_with("0,0,0.5,0,complex"));
        assert!(matches!(state.extend(1), Err(MorError::BudgetExhausted(5))));
    }
}
