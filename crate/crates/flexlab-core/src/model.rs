//! Domain types shared by every analysis: frameworks, configurations,
//! flex fields and jets, curves of configurations, and sampled surface grids.
//!
//! All types are immutable after construction and validate their invariants
//! in the constructor. Geometric kernels are generic over the scalar so the
//! same formulas run in `f64` (default) and in exact rational arithmetic.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use num_traits::{One, Zero};
use thiserror::Error;

/// Scalar bound for the generic geometry kernels.
///
/// `f64` is the default precision policy; `num_rational::BigRational`
/// satisfies the same bound and gives exact arithmetic for oracle and
/// certification paths.
pub trait Ring:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + Zero
        + One
        + Neg<Output = Self>
        + Add<Output = Self>
        + Sub<Output = Self>
        + Mul<Output = Self>
        + AddAssign
        + SubAssign
        + MulAssign
        + 'static
{
}

pub(crate) fn two<S: Ring>() -> S {
    S::one() + S::one()
}

pub(crate) fn sub3<S: Ring>(a: &Vector3<S>, b: &Vector3<S>) -> Vector3<S> {
    Vector3::new(
        a.x.clone() - b.x.clone(),
        a.y.clone() - b.y.clone(),
        a.z.clone() - b.z.clone(),
    )
}

pub(crate) fn add3<S: Ring>(a: &Vector3<S>, b: &Vector3<S>) -> Vector3<S> {
    Vector3::new(
        a.x.clone() + b.x.clone(),
        a.y.clone() + b.y.clone(),
        a.z.clone() + b.z.clone(),
    )
}

pub(crate) fn scale3<S: Ring>(s: &S, a: &Vector3<S>) -> Vector3<S> {
    Vector3::new(
        s.clone() * a.x.clone(),
        s.clone() * a.y.clone(),
        s.clone() * a.z.clone(),
    )
}

pub(crate) fn dot3<S: Ring>(a: &Vector3<S>, b: &Vector3<S>) -> S {
    a.x.clone() * b.x.clone() + a.y.clone() * b.y.clone() + a.z.clone() * b.z.clone()
}

fn zero3<S: Ring>() -> Vector3<S> {
    Vector3::new(S::zero(), S::zero(), S::zero())
}

/// A violation found while checking a proposed edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameworkViolation {
    /// `vertex_count` must be positive.
    EmptyVertexSet,
    /// Edge joins a vertex to itself.
    SelfLoop { vertex: usize },
    /// Edge references a vertex index `>= vertex_count`.
    IndexOutOfRange { edge: (usize, usize) },
    /// The same unordered pair appears more than once.
    DuplicateEdge { edge: (usize, usize) },
}

impl fmt::Display for FrameworkViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyVertexSet => write!(f, "vertex count must be positive"),
            Self::SelfLoop { vertex } => write!(f, "self-loop at vertex {vertex}"),
            Self::IndexOutOfRange { edge } => {
                write!(
                    f,
                    "edge ({}, {}) references a vertex out of range",
                    edge.0, edge.1
                )
            }
            Self::DuplicateEdge { edge } => {
                write!(f, "duplicate edge ({}, {})", edge.0, edge.1)
            }
        }
    }
}

/// Report-style validation of a proposed framework; empty iff valid.
pub fn validate_framework(
    vertex_count: usize,
    edges: &[(usize, usize)],
) -> Vec<FrameworkViolation> {
    let mut violations = Vec::new();
    if vertex_count == 0 {
        violations.push(FrameworkViolation::EmptyVertexSet);
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in edges {
        if a == b {
            violations.push(FrameworkViolation::SelfLoop { vertex: a });
            continue;
        }
        if a >= vertex_count || b >= vertex_count {
            violations.push(FrameworkViolation::IndexOutOfRange { edge: (a, b) });
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            violations.push(FrameworkViolation::DuplicateEdge { edge: (a, b) });
        }
    }
    violations
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid framework: {}", format_violations(.0))]
    InvalidFramework(Vec<FrameworkViolation>),
    #[error("{what}: expected length {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("edge ({}, {}) has zero length", .0, .1)]
    DegenerateEdge(usize, usize),
    #[error("edge index {index} out of range for {edge_count} edges")]
    BadEdgeIndex { index: usize, edge_count: usize },
    #[error("flex jet must contain at least one field")]
    EmptyJet,
}

fn format_violations(v: &[FrameworkViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Combinatorics of a bar-joint structure: a vertex count and an edge list.
///
/// Edges are stored pair-internally ascending and sorted lexicographically,
/// so equality of frameworks is structural and per-edge indexing (used by
/// stresses) is stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Framework {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Framework {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        let violations = validate_framework(vertex_count, &edges);
        if !violations.is_empty() {
            return Err(ModelError::InvalidFramework(violations));
        }
        let mut canonical: Vec<(usize, usize)> =
            edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        canonical.sort_unstable();
        Ok(Self {
            vertex_count,
            edges: canonical,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// An embedding of a framework's vertices in 3-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<S: Ring = f64> {
    framework: Arc<Framework>,
    positions: Vec<Vector3<S>>,
}

impl<S: Ring> Configuration<S> {
    /// Builds a configuration, rejecting size mismatches and coincident
    /// edge endpoints (every edge must have strictly positive length).
    pub fn new(framework: Arc<Framework>, positions: Vec<Vector3<S>>) -> Result<Self, ModelError> {
        if positions.len() != framework.vertex_count() {
            return Err(ModelError::SizeMismatch {
                what: "positions",
                expected: framework.vertex_count(),
                got: positions.len(),
            });
        }
        for &(i, j) in framework.edges() {
            if positions[i] == positions[j] {
                return Err(ModelError::DegenerateEdge(i, j));
            }
        }
        Ok(Self {
            framework,
            positions,
        })
    }

    pub fn framework(&self) -> &Arc<Framework> {
        &self.framework
    }

    pub fn positions(&self) -> &[Vector3<S>] {
        &self.positions
    }

    pub fn vertex_count(&self) -> usize {
        self.framework.vertex_count()
    }

    /// Difference `x_i - x_j` for the edge with the given canonical index.
    pub fn edge_vector(&self, edge_index: usize) -> Result<Vector3<S>, ModelError> {
        let &(i, j) = self
            .framework
            .edges()
            .get(edge_index)
            .ok_or(ModelError::BadEdgeIndex {
                index: edge_index,
                edge_count: self.framework.edge_count(),
            })?;
        Ok(sub3(&self.positions[i], &self.positions[j]))
    }
}

impl Configuration<f64> {
    /// Largest pairwise vertex distance; the length scale for tolerances.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, p) in self.positions.iter().enumerate() {
            for q in &self.positions[i + 1..] {
                best = best.max((p - q).norm());
            }
        }
        best
    }

    /// Squared length of the edge with the given canonical index.
    pub fn edge_length_squared(&self, edge_index: usize) -> Result<f64, ModelError> {
        Ok(self.edge_vector(edge_index)?.norm_squared())
    }
}

/// One vector per vertex: a single order of a flex jet.
#[derive(Debug, Clone, PartialEq)]
pub struct FlexField<S: Ring = f64> {
    vectors: Vec<Vector3<S>>,
}

impl<S: Ring> FlexField<S> {
    pub fn new(vectors: Vec<Vector3<S>>) -> Self {
        Self { vectors }
    }

    pub fn zero(vertex_count: usize) -> Self {
        Self {
            vectors: vec![zero3(); vertex_count],
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector3<S>] {
        &self.vectors
    }

    pub fn vector(&self, vertex: usize) -> &Vector3<S> {
        &self.vectors[vertex]
    }

    /// `xi_i - xi_j` for an edge `(i, j)`.
    pub fn edge_difference(&self, i: usize, j: usize) -> Vector3<S> {
        sub3(&self.vectors[i], &self.vectors[j])
    }
}

impl FlexField<f64> {
    /// Stacks the field into a `3 * vertex_count` column vector.
    pub fn to_stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(3 * self.vectors.len());
        for (i, v) in self.vectors.iter().enumerate() {
            out[3 * i] = v.x;
            out[3 * i + 1] = v.y;
            out[3 * i + 2] = v.z;
        }
        out
    }

    pub fn from_stacked(stacked: &DVector<f64>) -> Self {
        assert_eq!(
            stacked.len() % 3,
            0,
            "stacked flex length must be 3 * vertices"
        );
        let vectors = (0..stacked.len() / 3)
            .map(|i| Vector3::new(stacked[3 * i], stacked[3 * i + 1], stacked[3 * i + 2]))
            .collect();
        Self { vectors }
    }

    pub fn norm(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Ordered fields `xi^(1) .. xi^(n)` defining the deformation
/// `x + 2 t xi^(1) + 2 t^2 xi^(2) + ... + 2 t^n xi^(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlexJet<S: Ring = f64> {
    fields: Vec<FlexField<S>>,
}

impl<S: Ring> FlexJet<S> {
    pub fn new(fields: Vec<FlexField<S>>) -> Result<Self, ModelError> {
        if fields.is_empty() {
            return Err(ModelError::EmptyJet);
        }
        let n = fields[0].len();
        for f in &fields {
            if f.len() != n {
                return Err(ModelError::SizeMismatch {
                    what: "jet field",
                    expected: n,
                    got: f.len(),
                });
            }
        }
        Ok(Self { fields })
    }

    pub fn from_first(field: FlexField<S>) -> Self {
        Self {
            fields: vec![field],
        }
    }

    pub fn order(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[FlexField<S>] {
        &self.fields
    }

    /// The field of the given order, 1-based.
    pub fn field(&self, order: usize) -> &FlexField<S> {
        &self.fields[order - 1]
    }

    pub fn vertex_count(&self) -> usize {
        self.fields[0].len()
    }

    /// Returns a jet with `field` appended as the next order.
    pub fn extended_with(&self, field: FlexField<S>) -> Result<Self, ModelError> {
        if field.len() != self.vertex_count() {
            return Err(ModelError::SizeMismatch {
                what: "jet field",
                expected: self.vertex_count(),
                got: field.len(),
            });
        }
        let mut fields = self.fields.clone();
        fields.push(field);
        Ok(Self { fields })
    }
}

fn check_jet_matches<S: Ring>(c: &Configuration<S>, jet: &FlexJet<S>) -> Result<(), ModelError> {
    if jet.vertex_count() != c.vertex_count() {
        return Err(ModelError::SizeMismatch {
            what: "jet field",
            expected: c.vertex_count(),
            got: jet.vertex_count(),
        });
    }
    Ok(())
}

/// Evaluates the deformation `x_i + sum_k 2 t^k xi^(k)_i` exactly.
pub fn evaluate_deformation<S: Ring>(
    c: &Configuration<S>,
    jet: &FlexJet<S>,
    t: &S,
) -> Result<Configuration<S>, ModelError> {
    check_jet_matches(c, jet)?;
    let mut positions = c.positions().to_vec();
    let mut power = S::one();
    for field in jet.fields() {
        power *= t.clone();
        let coeff = two::<S>() * power.clone();
        for (p, v) in positions.iter_mut().zip(field.vectors()) {
            *p = add3(p, &scale3(&coeff, v));
        }
    }
    // Bypass the degeneracy check: a deformation may legitimately pass
    // through a configuration with a collapsed edge.
    Ok(Configuration {
        framework: c.framework().clone(),
        positions,
    })
}

/// Coefficients of a polynomial in the deformation parameter `t`,
/// lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthPolynomial<S: Ring = f64> {
    coeffs: Vec<S>,
}

impl<S: Ring> LengthPolynomial<S> {
    /// Coefficient of `t^k`; zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation at `t`.
    pub fn eval(&self, t: &S) -> S {
        let mut acc = S::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t.clone() + c.clone();
        }
        acc
    }
}

/// Squared-length change of one edge under the jet's deformation, as an
/// exact polynomial `|x_i(t) - x_j(t)|^2 - |x_i - x_j|^2` of degree `2n`.
///
/// Computed by coefficient convolution of the per-component deformation
/// polynomials; independent of the per-order residual route in the flex
/// hierarchy, which it cross-checks.
pub fn edge_length_polynomial<S: Ring>(
    c: &Configuration<S>,
    jet: &FlexJet<S>,
    edge_index: usize,
) -> Result<LengthPolynomial<S>, ModelError> {
    check_jet_matches(c, jet)?;
    let &(i, j) = c
        .framework()
        .edges()
        .get(edge_index)
        .ok_or(ModelError::BadEdgeIndex {
            index: edge_index,
            edge_count: c.framework().edge_count(),
        })?;
    let n = jet.order();
    // Per-component polynomial of delta x(t): degree n.
    let mut comp_polys: [Vec<S>; 3] = [
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
    ];
    let dx = sub3(&c.positions()[i], &c.positions()[j]);
    for (axis, poly) in comp_polys.iter_mut().enumerate() {
        poly.push(dx[axis].clone());
    }
    for field in jet.fields() {
        let d = field.edge_difference(i, j);
        for (axis, poly) in comp_polys.iter_mut().enumerate() {
            poly.push(two::<S>() * d[axis].clone());
        }
    }
    // Sum over components of the self-convolution, degree 2n.
    let mut coeffs = vec![S::zero(); 2 * n + 1];
    for poly in &comp_polys {
        for (a, pa) in poly.iter().enumerate() {
            for (b, pb) in poly.iter().enumerate() {
                coeffs[a + b] += pa.clone() * pb.clone();
            }
        }
    }
    // Subtract the undeformed squared length: the constant term vanishes.
    coeffs[0] = S::zero();
    Ok(LengthPolynomial { coeffs })
}

/// How a curve's parameter samples are spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Uniform { h: f64 },
    Explicit,
}

/// One sample of a configuration curve: parameter value, configuration,
/// and the attached first-order flex.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub r: f64,
    pub configuration: Configuration<f64>,
    pub flex: FlexField<f64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CurveError {
    #[error("curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("curve has no base sample at r = 0")]
    MissingBaseSample,
    #[error("sample parameters must be strictly increasing (violated at index {index})")]
    NonIncreasingParameters { index: usize },
    #[error("sample {index} does not share the curve's framework")]
    MixedFrameworks { index: usize },
    #[error("sample {index}: flex sized {got}, framework has {expected} vertices")]
    FlexSizeMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("base sample needs neighbors on both sides of r = 0")]
    BaseNotInterior,
}

/// A sampled one-parameter family of configurations with attached
/// first-order flexes.
#[derive(Debug, Clone)]
pub struct ConfigCurve {
    samples: Vec<CurveSample>,
    step: StepPolicy,
}

impl ConfigCurve {
    /// Validates shared framework, strictly increasing parameters, and the
    /// presence of a base sample at exactly `r = 0`.
    pub fn new(samples: Vec<CurveSample>) -> Result<Self, CurveError> {
        if samples.len() < 3 {
            return Err(CurveError::TooFewSamples {
                needed: 3,
                got: samples.len(),
            });
        }
        for idx in 1..samples.len() {
            let increasing = samples[idx].r.partial_cmp(&samples[idx - 1].r)
                == Some(std::cmp::Ordering::Greater);
            if !increasing {
                return Err(CurveError::NonIncreasingParameters { index: idx });
            }
        }
        let fw = samples[0].configuration.framework().clone();
        for (idx, s) in samples.iter().enumerate() {
            if **s.configuration.framework() != *fw {
                return Err(CurveError::MixedFrameworks { index: idx });
            }
            if s.flex.len() != fw.vertex_count() {
                return Err(CurveError::FlexSizeMismatch {
                    index: idx,
                    expected: fw.vertex_count(),
                    got: s.flex.len(),
                });
            }
        }
        let base = samples
            .iter()
            .position(|s| s.r == 0.0)
            .ok_or(CurveError::MissingBaseSample)?;
        if base == 0 || base == samples.len() - 1 {
            return Err(CurveError::BaseNotInterior);
        }
        let step = Self::classify_step(&samples);
        Ok(Self { samples, step })
    }

    fn classify_step(samples: &[CurveSample]) -> StepPolicy {
        let h = samples[1].r - samples[0].r;
        let uniform = samples
            .windows(2)
            .all(|w| ((w[1].r - w[0].r) - h).abs() <= 1e-12 * h.abs().max(1.0));
        if uniform {
            StepPolicy::Uniform { h }
        } else {
            StepPolicy::Explicit
        }
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn step_policy(&self) -> StepPolicy {
        self.step
    }

    pub fn framework(&self) -> &Arc<Framework> {
        self.samples[0].configuration.framework()
    }

    /// Index of the sample with `r = 0`.
    pub fn base_index(&self) -> usize {
        self.samples
            .iter()
            .position(|s| s.r == 0.0)
            .expect("validated at construction")
    }

    pub fn base(&self) -> &CurveSample {
        &self.samples[self.base_index()]
    }

    /// Sample with parameter equal to `r` up to `1e-12` relative slack.
    pub fn sample_at(&self, r: f64) -> Option<&CurveSample> {
        let span = self.samples.last().unwrap().r - self.samples[0].r;
        self.samples
            .iter()
            .find(|s| (s.r - r).abs() <= 1e-12 * span.max(1.0))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GridError {
    #[error("grid axis {axis} needs at least 3 samples, got {got}")]
    TooFewSamples { axis: &'static str, got: usize },
    #[error("grid axis {axis} must be strictly increasing (violated at index {index})")]
    NonIncreasingAxis { axis: &'static str, index: usize },
    #[error("positions shaped {got_rows}x{got_cols}, expected {rows}x{cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("grid contains a non-finite entry at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("jet order {order} missing (jet has {available} orders)")]
    MissingJetOrder { order: usize, available: usize },
    #[error("immersion failure at {count} interior nodes (EG - F^2 <= 0), first at ({i}, {j})")]
    ImmersionFailure { count: usize, i: usize, j: usize },
}

/// Tensor-product sample of a parametric surface with optional attached
/// jet fields, one 2-D array of vectors per order.
#[derive(Debug, Clone)]
pub struct SurfaceGrid {
    u: Vec<f64>,
    v: Vec<f64>,
    positions: DMatrix<Vector3<f64>>,
    jets: Vec<DMatrix<Vector3<f64>>>,
}

impl SurfaceGrid {
    pub fn new(
        u: Vec<f64>,
        v: Vec<f64>,
        positions: DMatrix<Vector3<f64>>,
    ) -> Result<Self, GridError> {
        for (axis, vals) in [("u", &u), ("v", &v)] {
            if vals.len() < 3 {
                return Err(GridError::TooFewSamples {
                    axis,
                    got: vals.len(),
                });
            }
            for idx in 1..vals.len() {
                let increasing =
                    vals[idx].partial_cmp(&vals[idx - 1]) == Some(std::cmp::Ordering::Greater);
                if !increasing {
                    return Err(GridError::NonIncreasingAxis { axis, index: idx });
                }
            }
        }
        if positions.nrows() != u.len() || positions.ncols() != v.len() {
            return Err(GridError::ShapeMismatch {
                rows: u.len(),
                cols: v.len(),
                got_rows: positions.nrows(),
                got_cols: positions.ncols(),
            });
        }
        for i in 0..positions.nrows() {
            for j in 0..positions.ncols() {
                if !positions[(i, j)].iter().all(|x| x.is_finite()) {
                    return Err(GridError::NonFinite { i, j });
                }
            }
        }
        Ok(Self {
            u,
            v,
            positions,
            jets: Vec::new(),
        })
    }

    /// Appends the next-order jet field; must match the grid shape.
    pub fn attach_jet_field(&mut self, field: DMatrix<Vector3<f64>>) -> Result<(), GridError> {
        if field.nrows() != self.u.len() || field.ncols() != self.v.len() {
            return Err(GridError::ShapeMismatch {
                rows: self.u.len(),
                cols: self.v.len(),
                got_rows: field.nrows(),
                got_cols: field.ncols(),
            });
        }
        for i in 0..field.nrows() {
            for j in 0..field.ncols() {
                if !field[(i, j)].iter().all(|x| x.is_finite()) {
                    return Err(GridError::NonFinite { i, j });
                }
            }
        }
        self.jets.push(field);
        Ok(())
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    pub fn positions(&self) -> &DMatrix<Vector3<f64>> {
        &self.positions
    }

    /// Attached jet fields, lowest order first.
    pub fn jets(&self) -> &[DMatrix<Vector3<f64>>] {
        &self.jets
    }

    pub fn jet_order(&self) -> usize {
        self.jets.len()
    }
}

/// Edge weights in the cokernel of the rigidity operator, indexed like the
/// framework's canonical edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct Stress<S: Ring = f64> {
    weights: Vec<S>,
}

impl<S: Ring> Stress<S> {
    pub fn new(weights: Vec<S>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl Stress<f64> {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}
