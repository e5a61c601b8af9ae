//! Quantum probabilities on tensor products of qubits: trace-formula
//! evaluation, the singlet scenario behind the Clauser-Horne violation,
//! screening checks for selective-measurement partitions, and Bell-operator
//! bounds. All arithmetic is floating point with the tolerances below.

pub mod matrix;

pub use num::complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub use matrix::{ComplexMatrix, NORM_CONVERGENCE_TOL};

use crate::scenario::{CorrelationVector, Scenario, ScenarioError};

/// Validation tolerance for Hermiticity, idempotence, positivity, traces.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Eigenvalue-gap threshold selecting the intersection eigenspace in
/// noncommuting meets.
pub const MEET_KERNEL_TOL: f64 = 1e-8;
/// Agreement required between the closed-form singlet law and the trace
/// evaluation.
pub const CROSS_CHECK_TOL: f64 = 1e-12;
/// Pass threshold for screening residuals and vector comparisons.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not Hermitian within 1e-10")]
    NotHermitian,
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not a projection within 1e-10")]
    NotProjection,
    #[error("trace value has imaginary part {imaginary}")]
    TraceNotReal { imaginary: f64 },
    #[error("probability {value} lies outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },
    #[error("direction has norm {norm}, expected a unit vector")]
    NotUnitDirection { norm: f64 },
    #[error("operator norm {norm} exceeds 1")]
    NotContraction { norm: f64 },
    #[error("wing operators A{left} and B{right} do not commute")]
    NonCommutingWings { left: usize, right: usize },
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("partition cell {cell} has probability {prob}, cannot condition on it")]
    ZeroCellProbability { cell: usize, prob: f64 },
    #[error("closed form and trace evaluation disagree at {what}: delta {delta}")]
    CrossCheckFailed { what: String, delta: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A state: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        if !matrix.is_hermitian(VALIDATION_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        let (eigenvalues, _) = matrix.eigen_hermitian();
        let min = eigenvalues[0];
        if min < -VALIDATION_TOL {
            return Err(QuantumError::NotPositive { min_eigenvalue: min });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(QuantumError::TraceNotOne { trace: trace.re });
        }
        Ok(DensityOperator { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// A quantum event: an orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEvent {
    matrix: ComplexMatrix,
}

impl ProjectionEvent {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        if !matrix.is_hermitian(VALIDATION_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        if matrix.mul(&matrix).max_abs_diff(&matrix) > VALIDATION_TOL {
            return Err(QuantumError::NotProjection);
        }
        Ok(ProjectionEvent { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        ProjectionEvent { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        ProjectionEvent { matrix: ComplexMatrix::zeros(dim) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Dimension of the range (the trace, rounded).
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }
}

/// `Tr(ρP)`, verified real and inside `[0,1]` up to tolerance, then clipped.
pub fn trace_prob(rho: &DensityOperator, p: &ProjectionEvent) -> Result<f64, QuantumError> {
    if rho.dim() != p.dim() {
        return Err(QuantumError::DimensionMismatch { left: rho.dim(), right: p.dim() });
    }
    let t = rho.matrix().mul(p.matrix()).trace();
    if t.im.abs() > VALIDATION_TOL {
        return Err(QuantumError::TraceNotReal { imaginary: t.im });
    }
    if t.re < -VALIDATION_TOL || t.re > 1.0 + VALIDATION_TOL {
        return Err(QuantumError::ProbabilityOutOfRange { value: t.re });
    }
    Ok(t.re.clamp(0.0, 1.0))
}

/// Projection onto `range(P) ∩ range(Q)`. Commuting inputs multiply
/// directly; otherwise the intersection is the eigenspace of `P + Q` at
/// eigenvalue 2, read off the spectrum with the kernel threshold.
pub fn meet_projection(
    p: &ProjectionEvent,
    q: &ProjectionEvent,
) -> Result<ProjectionEvent, QuantumError> {
    if p.dim() != q.dim() {
        return Err(QuantumError::DimensionMismatch { left: p.dim(), right: q.dim() });
    }
    if p.matrix().commutes_with(q.matrix(), VALIDATION_TOL) {
        return ProjectionEvent::new(p.matrix().mul(q.matrix()));
    }
    let sum = p.matrix().add(q.matrix());
    let (values, vectors) = sum.eigen_hermitian();
    let n = sum.dim();
    let mut meet = ComplexMatrix::zeros(n);
    for (k, &value) in values.iter().enumerate() {
        if (2.0 - value).abs() <= MEET_KERNEL_TOL {
            let column: Vec<Complex64> = (0..n).map(|r| vectors.get(r, k)).collect();
            meet = meet.add(&ComplexMatrix::outer(&column, &column));
        }
    }
    ProjectionEvent::new(meet)
}

/// Pauli matrix for axis 1, 2, or 3.
pub fn pauli(axis: usize) -> ComplexMatrix {
    match axis {
        1 => ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]),
        2 => ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ]),
        3 => ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ]),
        other => panic!("no Pauli matrix for axis {other}"),
    }
}

/// `a⃗·σ⃗` for a unit 3-vector.
pub fn direction_observable(direction: [f64; 3]) -> Result<ComplexMatrix, QuantumError> {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > VALIDATION_TOL {
        return Err(QuantumError::NotUnitDirection { norm });
    }
    let mut m = ComplexMatrix::zeros(2);
    for (k, &a) in direction.iter().enumerate() {
        m = m.add(&pauli(k + 1).scale_re(a));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wing {
    Left,
    Right,
}

/// The two-qubit spin-up event along `direction` on one wing:
/// `(1/2)(1 + a⃗·σ⃗) ⊗ 1` on the left, mirrored on the right.
pub fn spin_projection(direction: [f64; 3], wing: Wing) -> Result<ProjectionEvent, QuantumError> {
    let half_up = ComplexMatrix::identity(2)
        .add(&direction_observable(direction)?)
        .scale_re(0.5);
    let full = match wing {
        Wing::Left => half_up.kron(&ComplexMatrix::identity(2)),
        Wing::Right => ComplexMatrix::identity(2).kron(&half_up),
    };
    ProjectionEvent::new(full)
}

/// `a⃗·σ⃗` acting on one tensor factor of the two-qubit space.
pub fn wing_observable(direction: [f64; 3], wing: Wing) -> Result<ComplexMatrix, QuantumError> {
    let obs = direction_observable(direction)?;
    Ok(match wing {
        Wing::Left => obs.kron(&ComplexMatrix::identity(2)),
        Wing::Right => ComplexMatrix::identity(2).kron(&obs),
    })
}

/// The singlet state `(1/4)(1⊗1 − Σ_k σ_k⊗σ_k)`.
pub fn singlet_state() -> DensityOperator {
    let mut m = ComplexMatrix::identity(4);
    for k in 1..=3 {
        let s = pauli(k);
        m = m.sub(&s.kron(&s));
    }
    DensityOperator::new(m.scale_re(0.25)).expect("the singlet is a valid state")
}

/// Both evaluation routes for a singlet pair probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProbability {
    /// `(1/2) sin²(θ/2) = (1 − a⃗·b⃗)/4`.
    pub closed_form: f64,
    /// `Tr(ρ^s (A_a ⊗ B_b))` evaluated on the 4×4 matrices.
    pub traced: f64,
    pub delta: f64,
}

/// Probability that both wings report "up" along `a` (left) and `b`
/// (right) in the singlet state, computed by closed form and by trace.
pub fn singlet_pair_probability(
    a: [f64; 3],
    b: [f64; 3],
) -> Result<PairProbability, QuantumError> {
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let closed_form = (1.0 - dot) / 4.0;
    let left = spin_projection(a, Wing::Left)?;
    let right = spin_projection(b, Wing::Right)?;
    let joint = ProjectionEvent::new(left.matrix().mul(right.matrix()))?;
    let traced = trace_prob(&singlet_state(), &joint)?;
    Ok(PairProbability { closed_form, traced, delta: (closed_form - traced).abs() })
}

/// The measurement scenario of the singlet experiment: four events, left
/// directions 1,2 paired against right directions 3,4.
pub fn epr_scenario() -> Scenario {
    Scenario::two_by_two()
}

/// Correlation vector of the singlet experiment for left directions
/// `a1, a2` and right directions `b3, b4`. Singles are all 1/2; every pair
/// entry is the closed-form law, cross-checked against the trace route
/// within 1e-12.
pub fn epr_correlation_vector(
    a1: [f64; 3],
    a2: [f64; 3],
    b3: [f64; 3],
    b4: [f64; 3],
) -> Result<CorrelationVector<f64>, QuantumError> {
    let scenario = epr_scenario();
    let rho = singlet_state();
    let left = [a1, a2];
    let right = [b3, b4];

    let mut singles = Vec::with_capacity(4);
    for (k, &dir) in left.iter().chain(right.iter()).enumerate() {
        let wing = if k < 2 { Wing::Left } else { Wing::Right };
        let traced = trace_prob(&rho, &spin_projection(dir, wing)?)?;
        let delta = (traced - 0.5).abs();
        if delta > CROSS_CHECK_TOL {
            return Err(QuantumError::CrossCheckFailed { what: format!("p{}", k + 1), delta });
        }
        singles.push(0.5);
    }

    let mut pairs = Vec::with_capacity(scenario.pairs().len());
    for &(i, j) in scenario.pairs() {
        let routes = singlet_pair_probability(left[i - 1], right[j - 3])?;
        if routes.delta > CROSS_CHECK_TOL {
            return Err(QuantumError::CrossCheckFailed {
                what: format!("p{i},{j}"),
                delta: routes.delta,
            });
        }
        pairs.push(routes.closed_form);
    }
    Ok(CorrelationVector::new(scenario, singles, pairs)?)
}

/// Directions realizing the Clauser-Horne violation −(1+√2)/2.
pub fn canonical_ch_directions() -> ([f64; 3], [f64; 3], [f64; 3], [f64; 3]) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [s, s, 0.0], [-s, s, 0.0])
}

/// Wing directions at which the Bell operator reaches modulus √2 on the
/// singlet: `(a1, a2, b1, b2)`.
pub fn canonical_chsh_directions() -> ([f64; 3], [f64; 3], [f64; 3], [f64; 3]) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ([s, s, 0.0], [s, -s, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
}

/// One factorization residual inside a partition cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCellCheck {
    pub pair: (usize, usize),
    pub cell: usize,
    pub joint: f64,
    pub left: f64,
    pub right: f64,
    pub residual: f64,
    pub ok: bool,
}

/// Whether every cell commutes with both events of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCommutation {
    pub pair: (usize, usize),
    pub commuting: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCommonCauseReport {
    pub cell_probs: Vec<f64>,
    pub cell_vectors: Vec<CorrelationVector<f64>>,
    pub checks: Vec<QuantumCellCheck>,
    pub pair_commutation: Vec<PairCommutation>,
    pub screens_off: bool,
    /// Vector of the input state.
    pub direct: CorrelationVector<f64>,
    /// Mixture of the cell vectors weighted by the cell probabilities.
    pub collapsed: CorrelationVector<f64>,
    pub max_delta: f64,
}

/// Tests a selective-measurement partition `{C_k}` as a common-cause
/// system for the given events: conditions the state on each cell, checks
/// the in-cell factorization of every pair, classifies each pair as
/// commuting or noncommuting with the partition, and compares the mixture
/// of cell vectors against the state's own vector.
pub fn quantum_common_cause_check(
    scenario: &Scenario,
    rho: &DensityOperator,
    events: &[ProjectionEvent],
    partition: &[ProjectionEvent],
) -> Result<QuantumCommonCauseReport, QuantumError> {
    let n = scenario.n();
    assert_eq!(events.len(), n, "one projection per scenario event");
    let dim = rho.dim();
    for e in events.iter().chain(partition.iter()) {
        if e.dim() != dim {
            return Err(QuantumError::DimensionMismatch { left: dim, right: e.dim() });
        }
    }
    if partition.is_empty() {
        return Err(QuantumError::NotAPartition("no cells given".into()));
    }
    for (k, ck) in partition.iter().enumerate() {
        for (l, cl) in partition.iter().enumerate().skip(k + 1) {
            if ck.matrix().mul(cl.matrix()).max_abs_diff(&ComplexMatrix::zeros(dim))
                > VALIDATION_TOL
            {
                return Err(QuantumError::NotAPartition(format!(
                    "cells {k} and {l} are not orthogonal"
                )));
            }
        }
    }
    let sum = partition
        .iter()
        .fold(ComplexMatrix::zeros(dim), |acc, p| acc.add(p.matrix()));
    if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > VALIDATION_TOL {
        return Err(QuantumError::NotAPartition("cells do not sum to the identity".into()));
    }

    let mut cell_probs = Vec::with_capacity(partition.len());
    let mut conditioned = Vec::with_capacity(partition.len());
    for (k, cell) in partition.iter().enumerate() {
        let prob = trace_prob(rho, cell)?;
        if prob <= CROSS_CHECK_TOL {
            return Err(QuantumError::ZeroCellProbability { cell: k, prob });
        }
        let compressed = cell.matrix().mul(rho.matrix()).mul(cell.matrix());
        conditioned.push(DensityOperator::new(compressed.scale_re(1.0 / prob))?);
        cell_probs.push(prob);
    }

    let meets: Vec<ProjectionEvent> = scenario
        .pairs()
        .iter()
        .map(|&(i, j)| meet_projection(&events[i - 1], &events[j - 1]))
        .collect::<Result<_, _>>()?;

    let vector_of = |state: &DensityOperator| -> Result<CorrelationVector<f64>, QuantumError> {
        let singles: Result<Vec<f64>, _> =
            events.iter().map(|e| trace_prob(state, e)).collect();
        let pairs: Result<Vec<f64>, _> =
            meets.iter().map(|m| trace_prob(state, m)).collect();
        Ok(CorrelationVector::new(scenario.clone(), singles?, pairs?)?)
    };

    let direct = vector_of(rho)?;
    let cell_vectors: Vec<CorrelationVector<f64>> = conditioned
        .iter()
        .map(|state| vector_of(state))
        .collect::<Result<_, _>>()?;

    let mut checks = Vec::new();
    for (pair_idx, &(i, j)) in scenario.pairs().iter().enumerate() {
        for (k, v) in cell_vectors.iter().enumerate() {
            let joint = v.pairs()[pair_idx];
            let left = *v.single(i);
            let right = *v.single(j);
            let residual = (joint - left * right).abs();
            checks.push(QuantumCellCheck {
                pair: (i, j),
                cell: k,
                joint,
                left,
                right,
                residual,
                ok: residual <= RESIDUAL_TOL,
            });
        }
    }

    let pair_commutation = scenario
        .pairs()
        .iter()
        .map(|&(i, j)| PairCommutation {
            pair: (i, j),
            commuting: partition.iter().all(|cell| {
                cell.matrix().commutes_with(events[i - 1].matrix(), VALIDATION_TOL)
                    && cell.matrix().commutes_with(events[j - 1].matrix(), VALIDATION_TOL)
            }),
        })
        .collect();

    let dim_v = scenario.dim();
    let mut mixed = vec![0.0; dim_v];
    for (prob, v) in cell_probs.iter().zip(&cell_vectors) {
        for (slot, coord) in mixed.iter_mut().zip(v.coordinates()) {
            *slot += prob * coord;
        }
    }
    let collapsed = CorrelationVector::new(
        scenario.clone(),
        mixed[..n].iter().map(|x| x.clamp(0.0, 1.0)).collect(),
        mixed[n..].iter().map(|x| x.clamp(0.0, 1.0)).collect(),
    )?;
    let max_delta = direct
        .coordinates()
        .iter()
        .zip(collapsed.coordinates())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let screens_off = checks.iter().all(|ch| ch.ok);

    Ok(QuantumCommonCauseReport {
        cell_probs,
        cell_vectors,
        checks,
        pair_commutation,
        screens_off,
        direct,
        collapsed,
        max_delta,
    })
}

/// `Tr(ρ · (1/2)(A1(B1+B2) + A2(B1−B2)))` after validating that the wing
/// operators are Hermitian contractions and that the wings commute.
pub fn bell_operator_value(
    state: &DensityOperator,
    a1: &ComplexMatrix,
    a2: &ComplexMatrix,
    b1: &ComplexMatrix,
    b2: &ComplexMatrix,
) -> Result<f64, QuantumError> {
    let dim = state.dim();
    for m in [a1, a2, b1, b2] {
        if m.dim() != dim {
            return Err(QuantumError::DimensionMismatch { left: dim, right: m.dim() });
        }
        if !m.is_hermitian(VALIDATION_TOL) {
            return Err(QuantumError::NotHermitian);
        }
        let norm = m.spectral_norm();
        if norm > 1.0 + VALIDATION_TOL {
            return Err(QuantumError::NotContraction { norm });
        }
    }
    for (i, a) in [a1, a2].into_iter().enumerate() {
        for (j, b) in [b1, b2].into_iter().enumerate() {
            if !a.commutes_with(b, VALIDATION_TOL) {
                return Err(QuantumError::NonCommutingWings { left: i + 1, right: j + 1 });
            }
        }
    }
    let r = a1
        .mul(&b1.add(b2))
        .add(&a2.mul(&b1.sub(b2)))
        .scale_re(0.5);
    let t = state.matrix().mul(&r).trace();
    if t.im.abs() > VALIDATION_TOL {
        return Err(QuantumError::TraceNotReal { imaginary: t.im });
    }
    Ok(t.re)
}

/// Standard normals via the Box-Muller transform.
fn gaussians<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        out.push(radius * c);
        out.push(radius * s);
    }
    out.truncate(count);
    out
}

/// A Haar-ish random unit vector from normalized complex Gaussians.
pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let parts = gaussians(rng, 2 * dim);
        let v: Vec<Complex64> = parts.chunks(2).map(|p| c(p[0], p[1])).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

pub fn random_pure_state<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let v = random_unit_vector(rng, dim);
    DensityOperator::new(ComplexMatrix::outer(&v, &v)).expect("unit vectors give valid states")
}

/// A pure product state on the two-qubit space from independent factors.
pub fn random_product_state<R: Rng>(rng: &mut R) -> DensityOperator {
    let v = random_unit_vector(rng, 2);
    let w = random_unit_vector(rng, 2);
    let mut joint = vec![c(0.0, 0.0); 4];
    for (i, a) in v.iter().enumerate() {
        for (j, b) in w.iter().enumerate() {
            joint[i * 2 + j] = a * b;
        }
    }
    DensityOperator::new(ComplexMatrix::outer(&joint, &joint))
        .expect("unit vectors give valid states")
}
