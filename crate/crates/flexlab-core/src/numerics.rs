//! Dense linear-algebra kernel shared by every numeric caller: rank-revealing
//! SVD with an explicit tolerance policy, orthonormal nullspace and cokernel
//! bases, and minimum-norm least squares with Fredholm-style consistency
//! reporting.
//!
//! Every judgment carries the threshold that produced it, plus a gap ratio
//! between the smallest kept and largest dropped singular value. Rank
//! decisions with a narrow gap are flagged marginal so downstream reports can
//! surface them: whether a configuration counts as nonrigid hinges on them.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("{what} contains a non-finite entry")]
    NonFinite { what: &'static str },
    #[error("dimension mismatch: matrix has {rows} rows, vector has {len} entries")]
    DimensionMismatch { rows: usize, len: usize },
}

/// Thresholds used by every rank and solve decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Relative singular-value cutoff, scaled by the largest singular value
    /// and the larger matrix dimension.
    pub rel_tol: f64,
    /// Absolute floor for the singular-value cutoff.
    pub abs_tol: f64,
    /// Base for the least-squares consistency tolerance; the effective
    /// tolerance is `solve_tol_base * (1 + |b|)`.
    pub solve_tol_base: f64,
    /// Rank decisions with `gap_ratio` below this are flagged marginal.
    pub gap_warn_ratio: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            solve_tol_base: 1e-9,
            gap_warn_ratio: 100.0,
        }
    }
}

impl TolerancePolicy {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    /// Singular-value cutoff for a matrix with the given extremal singular
    /// value and shape.
    pub fn rank_threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        (self.rel_tol * sigma_max * rows.max(cols) as f64).max(self.abs_tol)
    }

    /// Residual tolerance for declaring a linear system consistent.
    pub fn solve_tolerance(&self, b_norm: f64) -> f64 {
        self.solve_tol_base * (1.0 + b_norm)
    }
}

/// Outcome of a numerical rank decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceJudgment {
    pub rank: usize,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub threshold_used: f64,
    /// Smallest kept over largest dropped singular value; infinite when
    /// nothing was dropped. When everything is dropped this is the clearance
    /// of the threshold over the largest dropped value.
    pub gap_ratio: f64,
    /// True when `gap_ratio` fell below the policy's warning ratio.
    pub marginal: bool,
}

impl ToleranceJudgment {
    fn new(singular_values: Vec<f64>, threshold: f64, policy: &TolerancePolicy) -> Self {
        let rank = singular_values.iter().filter(|&&s| s >= threshold).count();
        let gap_ratio = if rank == singular_values.len() {
            f64::INFINITY
        } else if rank == 0 {
            threshold / singular_values.first().copied().unwrap_or(0.0)
        } else {
            singular_values[rank - 1] / singular_values[rank]
        };
        Self {
            rank,
            singular_values,
            threshold_used: threshold,
            gap_ratio,
            marginal: gap_ratio < policy.gap_warn_ratio,
        }
    }
}

/// Consistency verdict of a least-squares solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Solvable,
    Obstructed,
}

/// Minimum-norm least-squares result with an obstruction certificate when
/// the right-hand side has a component in the cokernel.
#[derive(Debug, Clone)]
pub struct LinearSolveReport {
    /// Present iff the system is consistent within the solve tolerance.
    pub solution: Option<DVector<f64>>,
    /// `|m x* - b|` at the minimum-norm least-squares minimizer.
    pub residual_norm: f64,
    pub consistency: Consistency,
    /// Unit cokernel direction maximizing `|<w, b>|`; present iff obstructed.
    pub certificate: Option<DVector<f64>>,
    pub solve_tolerance: f64,
    pub judgment: ToleranceJudgment,
}

fn check_finite_matrix(m: &DMatrix<f64>, what: &'static str) -> Result<(), NumericsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite { what })
    }
}

fn check_finite_vector(v: &DVector<f64>, what: &'static str) -> Result<(), NumericsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite { what })
    }
}

/// Flips a vector's sign so its largest-magnitude entry is positive, making
/// SVD-derived bases deterministic up to the decomposition itself.
pub fn canonicalize_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        *v = -&*v;
    }
}

struct Decomposition {
    judgment: ToleranceJudgment,
    /// Columns of U (rows x min(rows, cols)).
    u: DMatrix<f64>,
    /// V transposed (min(rows, cols) x cols).
    v_t: DMatrix<f64>,
    singular_values: Vec<f64>,
}

fn decompose(m: &DMatrix<f64>, policy: &TolerancePolicy) -> Result<Decomposition, NumericsError> {
    check_finite_matrix(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        let judgment = ToleranceJudgment::new(Vec::new(), policy.abs_tol, policy);
        return Ok(Decomposition {
            judgment,
            u: DMatrix::zeros(m.nrows(), 0),
            v_t: DMatrix::zeros(0, m.ncols()),
            singular_values: Vec::new(),
        });
    }
    let svd = m.clone().svd(true, true);
    let singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let threshold = policy.rank_threshold(sigma_max, m.nrows(), m.ncols());
    let judgment = ToleranceJudgment::new(singular_values.clone(), threshold, policy);
    Ok(Decomposition {
        judgment,
        u: svd.u.expect("u requested"),
        v_t: svd.v_t.expect("v_t requested"),
        singular_values,
    })
}

/// Rank of `m` under the policy's singular-value threshold.
pub fn numerical_rank(
    m: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<ToleranceJudgment, NumericsError> {
    Ok(decompose(m, policy)?.judgment)
}

/// Orthonormal basis of the right nullspace `{v : m v = 0}`.
pub fn nullspace_basis(
    m: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(Vec<DVector<f64>>, ToleranceJudgment), NumericsError> {
    let dec = decompose(m, policy)?;
    let rank = dec.judgment.rank;
    let mut basis = Vec::with_capacity(m.ncols() - rank);
    // Rows of V^T beyond the rank span the nullspace; the SVD may not
    // produce them all when rows < cols, so complete with the orthogonal
    // complement of the row space in that case.
    if dec.v_t.nrows() == m.ncols() {
        for i in rank..dec.v_t.nrows() {
            let mut v = dec.v_t.row(i).transpose();
            canonicalize_sign(&mut v);
            basis.push(v);
        }
    } else {
        basis = complement_basis(&dec.v_t.rows(0, rank).transpose(), m.ncols());
    }
    Ok((basis, dec.judgment))
}

/// Orthonormal basis of the left nullspace `{w : w^T m = 0}`.
pub fn cokernel_basis(
    m: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(Vec<DVector<f64>>, ToleranceJudgment), NumericsError> {
    let dec = decompose(m, policy)?;
    let rank = dec.judgment.rank;
    let mut basis = Vec::with_capacity(m.nrows() - rank);
    if dec.u.ncols() == m.nrows() {
        for i in rank..dec.u.ncols() {
            let mut v = dec.u.column(i).into_owned();
            canonicalize_sign(&mut v);
            basis.push(v);
        }
    } else {
        basis = complement_basis(&dec.u.columns(0, rank).into_owned(), m.nrows());
    }
    Ok((basis, dec.judgment))
}

/// Completes an orthonormal set of columns `q` (dim x k) to an orthonormal
/// basis of the complement in R^dim.
fn complement_basis(q: &DMatrix<f64>, dim: usize) -> Vec<DVector<f64>> {
    let k = q.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim - k);
    for axis in 0..dim {
        if basis.len() == dim - k {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[axis] = 1.0;
        // Project off q and the accepted vectors, twice for stability.
        for _ in 0..2 {
            let coeffs = q.transpose() * &v;
            v -= q * coeffs;
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            canonicalize_sign(&mut v);
            basis.push(v);
        }
    }
    debug_assert_eq!(basis.len(), dim - k);
    basis
}

/// Minimum-norm least squares for `m x = b` with a cokernel certificate
/// when the system is obstructed.
pub fn least_squares_with_certificate(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: &TolerancePolicy,
) -> Result<LinearSolveReport, NumericsError> {
    check_finite_vector(b, "right-hand side")?;
    if b.len() != m.nrows() {
        return Err(NumericsError::DimensionMismatch {
            rows: m.nrows(),
            len: b.len(),
        });
    }
    let dec = decompose(m, policy)?;
    let rank = dec.judgment.rank;
    let threshold = dec.judgment.threshold_used;
    // x* = sum over kept singular triplets of (u_i^T b / s_i) v_i.
    let mut x = DVector::zeros(m.ncols());
    for i in 0..rank {
        let coeff = dec.u.column(i).dot(b) / dec.singular_values[i];
        x += dec.v_t.row(i).transpose() * coeff;
    }
    let residual_norm = (m * &x - b).norm();
    let solve_tolerance = policy.solve_tolerance(b.norm());
    let solvable = residual_norm <= solve_tolerance;

    let certificate = if solvable {
        None
    } else {
        // Projection of b onto the cokernel, normalized: the unit cokernel
        // direction with the largest pairing against b.
        let (cokernel, _) = cokernel_basis_from(&dec, m.nrows(), threshold);
        let mut proj = DVector::zeros(m.nrows());
        for w in &cokernel {
            proj += w * w.dot(b);
        }
        let norm = proj.norm();
        if norm > 0.0 {
            proj /= norm;
            canonicalize_sign(&mut proj);
            Some(proj)
        } else {
            None
        }
    };
    Ok(LinearSolveReport {
        solution: solvable.then_some(x),
        residual_norm,
        consistency: if solvable {
            Consistency::Solvable
        } else {
            Consistency::Obstructed
        },
        certificate,
        solve_tolerance,
        judgment: dec.judgment,
    })
}

fn cokernel_basis_from(
    dec: &Decomposition,
    rows: usize,
    _threshold: f64,
) -> (Vec<DVector<f64>>, usize) {
    let rank = dec.judgment.rank;
    let mut basis = Vec::new();
    if dec.u.ncols() == rows {
        for i in rank..dec.u.ncols() {
            basis.push(dec.u.column(i).into_owned());
        }
    } else {
        basis = complement_basis(&dec.u.columns(0, rank).into_owned(), rows);
    }
    (basis, rank)
}

/// Minimum-norm least-squares minimizer of `|m x - b|`, returned whether or
/// not the system is consistent.
pub fn min_norm_least_squares(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: &TolerancePolicy,
) -> Result<DVector<f64>, NumericsError> {
    check_finite_vector(b, "right-hand side")?;
    if b.len() != m.nrows() {
        return Err(NumericsError::DimensionMismatch {
            rows: m.nrows(),
            len: b.len(),
        });
    }
    let dec = decompose(m, policy)?;
    let mut x = DVector::zeros(m.ncols());
    for i in 0..dec.judgment.rank {
        let coeff = dec.u.column(i).dot(b) / dec.singular_values[i];
        x += dec.v_t.row(i).transpose() * coeff;
    }
    Ok(x)
}

/// Orthonormal basis of the column space of `m` (rank-revealing).
pub fn column_space_basis(
    m: &DMatrix<f64>,
    policy: &TolerancePolicy,
) -> Result<(Vec<DVector<f64>>, ToleranceJudgment), NumericsError> {
    let dec = decompose(m, policy)?;
    let mut basis = Vec::with_capacity(dec.judgment.rank);
    for i in 0..dec.judgment.rank {
        let mut v = dec.u.column(i).into_owned();
        canonicalize_sign(&mut v);
        basis.push(v);
    }
    Ok((basis, dec.judgment))
}

/// Largest principal angle (radians) between the spans of two orthonormal
/// sets, computed from the projection defect so tiny angles stay accurate.
///
/// Returns `None` when the spans have different dimensions.
pub fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let dim = a[0].len();
    let qa = DMatrix::from_columns(a);
    let qb = DMatrix::from_columns(b);
    debug_assert_eq!(qb.nrows(), dim);
    // sin(theta_max) = ||(I - Qa Qa^T) Qb||_2, bounded by the Frobenius norm.
    let defect = &qb - &qa * (qa.transpose() * &qb);
    let sin_theta = defect.norm().min(1.0);
    Some(sin_theta.asin())
}

/// Stacks vectors as the columns of a matrix.
pub fn columns_to_matrix(dim: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}
