//! Tangency to the nonrigid set, made executable: validates that a sampled
//! curve of configurations is a genuine curve of nonrigid configurations
//! carrying a family of first-order flexes whose base value is the curve's
//! velocity, then differentiates the flex family at the base to produce a
//! second-order extension.
//!
//! The key identity: along such a curve the first-order equation holds for
//! every parameter value, so its parameter derivative at the base yields the
//! second-order equation with `xi^(2)` equal to half the derivative of the
//! flex family. Numerically the derivative is a central difference, so the
//! order-2 residual of the extracted jet shrinks quadratically with the
//! stencil width.

use nalgebra::DVector;
use thiserror::Error;

use crate::hierarchy::{hierarchy_residuals, HierarchyError, RESIDUAL_GATE_REL};
use crate::model::{ConfigCurve, Configuration, CurveError, CurveSample, FlexField, FlexJet};
use crate::numerics::{min_norm_least_squares, nullspace_basis, NumericsError};
use crate::rigidity::{assemble_rigidity_operator, first_order_flex_space};
use crate::TolerancePolicy;

/// Velocity-match tolerance factor: the check allows `10 h^2` times the base
/// configuration diameter, matching the truncation error of the central
/// difference used to estimate the curve velocity.
pub const VELOCITY_TOL_FACTOR: f64 = 10.0;

/// Minimum overlap between transported flex directions on adjacent samples;
/// below this the continuation declares the flex branch lost.
pub const TRANSPORT_OVERLAP_MIN: f64 = 0.9;

/// Minimum fraction of the predicted step length the corrected step must
/// retain; below this the continuation declares that no finite motion exists.
pub const PROGRESS_RATIO_MIN: f64 = 0.5;

const NEWTON_MAX_ITERS: usize = 30;
const NEWTON_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Error)]
pub enum TangencyError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("curve failed validation: {}", format_failures(.0))]
    InvalidCurve(Vec<ValidationFailure>),
    #[error("curve has no symmetric sample pair around r = 0 and too few neighbors")]
    NoUsableStencil,
}

fn format_failures(f: &[ValidationFailure]) -> String {
    f.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One failed tangency condition.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationFailure {
    /// Condition (i): a sampled configuration is first-order rigid.
    RigidSample { index: usize, r: f64 },
    /// Condition (ii), flex family: an attached field is not a first-order
    /// flex of its configuration.
    NotAFlex {
        index: usize,
        r: f64,
        residual: f64,
        gate: f64,
    },
    /// Condition (ii), velocity match: the curve velocity at the base is not
    /// twice the attached base flex.
    VelocityMismatch { error: f64, tolerance: f64 },
}

impl ValidationFailure {
    /// Stable label used by reports: "(i) nonrigidity", "(ii) flex family",
    /// or "(ii) velocity match".
    pub fn label(&self) -> &'static str {
        match self {
            Self::RigidSample { .. } => "(i) nonrigidity",
            Self::NotAFlex { .. } => "(ii) flex family",
            Self::VelocityMismatch { .. } => "(ii) velocity match",
        }
    }
}

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::RigidSample { index, r } => {
                write!(f, "(i) nonrigidity: sample {index} (r = {r}) is first-order rigid")
            }
            Self::NotAFlex {
                index,
                r,
                residual,
                gate,
            } => write!(
                f,
                "(ii) flex family: attached field at sample {index} (r = {r}) has residual {residual:.3e} > {gate:.3e}"
            ),
            Self::VelocityMismatch { error, tolerance } => write!(
                f,
                "(ii) velocity match: |x'(0) - 2 xi(0)| = {error:.3e} > {tolerance:.3e}"
            ),
        }
    }
}

/// Per-sample tangency checks.
#[derive(Debug, Clone)]
pub struct SampleCheck {
    pub r: f64,
    pub nonrigid: bool,
    pub nontrivial_dim: usize,
    /// Norm of the attached field's first-order residual.
    pub flex_residual: f64,
    pub marginal_rank: bool,
}

/// Full validation record for a curve.
#[derive(Debug, Clone)]
pub struct CurveValidation {
    pub sample_checks: Vec<SampleCheck>,
    /// `|x'(0) - 2 xi(0)|` by the finest available central difference.
    pub velocity_match_error: f64,
    pub velocity_tolerance: f64,
    pub failures: Vec<ValidationFailure>,
    pub warnings: Vec<String>,
}

impl CurveValidation {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn nonrigid_at_each_sample(&self) -> Vec<bool> {
        self.sample_checks.iter().map(|s| s.nonrigid).collect()
    }

    pub fn flex_residuals_along_curve(&self) -> Vec<f64> {
        self.sample_checks.iter().map(|s| s.flex_residual).collect()
    }
}

fn stacked_positions(c: &Configuration) -> DVector<f64> {
    let mut out = DVector::zeros(3 * c.vertex_count());
    for (i, p) in c.positions().iter().enumerate() {
        out[3 * i] = p.x;
        out[3 * i + 1] = p.y;
        out[3 * i + 2] = p.z;
    }
    out
}

/// Symmetric stencil widths `h` with both `r = h` and `r = -h` sampled,
/// sorted descending.
fn symmetric_widths(curve: &ConfigCurve) -> Vec<f64> {
    let mut widths: Vec<f64> = curve
        .samples()
        .iter()
        .filter(|s| s.r > 0.0)
        .filter(|s| curve.sample_at(-s.r).is_some())
        .map(|s| s.r)
        .collect();
    widths.sort_by(|a, b| b.partial_cmp(a).unwrap());
    widths
}

/// Central-difference derivative of the stacked quantity `f` at r = 0.
///
/// Prefers the narrowest symmetric pair; falls back to the non-uniform
/// three-point formula on the base's nearest neighbors. Returns the
/// derivative estimate and the effective stencil width.
fn base_derivative(
    curve: &ConfigCurve,
    f: impl Fn(&CurveSample) -> DVector<f64>,
) -> Result<(DVector<f64>, f64), TangencyError> {
    if let Some(&h) = symmetric_widths(curve).last() {
        let plus = curve.sample_at(h).expect("width came from samples");
        let minus = curve.sample_at(-h).expect("width came from samples");
        return Ok(((f(plus) - f(minus)) / (2.0 * h), h));
    }
    nonuniform_base_derivative(curve, f)
}

fn nonuniform_base_derivative(
    curve: &ConfigCurve,
    f: impl Fn(&CurveSample) -> DVector<f64>,
) -> Result<(DVector<f64>, f64), TangencyError> {
    let base_idx = curve.base_index();
    let samples = curve.samples();
    let minus = &samples[base_idx - 1];
    let plus = &samples[base_idx + 1];
    let base = &samples[base_idx];
    let hm = -minus.r;
    let hp = plus.r;
    if hm <= 0.0 || hp <= 0.0 {
        return Err(TangencyError::NoUsableStencil);
    }
    // Three-point first derivative on the stencil {-hm, 0, hp}.
    let wm = -hp / (hm * (hm + hp));
    let w0 = (hp - hm) / (hm * hp);
    let wp = hm / (hp * (hm + hp));
    let d = f(minus) * wm + f(base) * w0 + f(plus) * wp;
    Ok((d, hm.max(hp)))
}

/// Checks the tangency conditions on a sampled curve: every configuration
/// first-order nonrigid, every attached field a first-order flex of its
/// configuration, and the base velocity equal to twice the base flex.
pub fn validate_curve(
    curve: &ConfigCurve,
    policy: &TolerancePolicy,
) -> Result<CurveValidation, TangencyError> {
    let base_diameter = curve.base().configuration.diameter();
    let mut sample_checks = Vec::with_capacity(curve.samples().len());
    let mut failures = Vec::new();
    let mut warnings = Vec::new();

    for (index, sample) in curve.samples().iter().enumerate() {
        let space = first_order_flex_space(&sample.configuration, policy)?;
        let jet = FlexJet::from_first(sample.flex.clone());
        let residual = hierarchy_residuals(&sample.configuration, &jet, 1)?.max_norm();
        let gate = RESIDUAL_GATE_REL * base_diameter * (1.0 + sample.flex.norm());
        if !space.is_nonrigid() {
            failures.push(ValidationFailure::RigidSample { index, r: sample.r });
        }
        if residual > gate {
            failures.push(ValidationFailure::NotAFlex {
                index,
                r: sample.r,
                residual,
                gate,
            });
        }
        if space.judgment.marginal {
            warnings.push(format!(
                "marginal rank decision at sample {index} (gap ratio {:.2})",
                space.judgment.gap_ratio
            ));
        }
        sample_checks.push(SampleCheck {
            r: sample.r,
            nonrigid: space.is_nonrigid(),
            nontrivial_dim: space.nontrivial_dim,
            flex_residual: residual,
            marginal_rank: space.judgment.marginal,
        });
    }

    let dims: Vec<usize> = sample_checks.iter().map(|s| s.nontrivial_dim).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        warnings.push(format!(
            "nontrivial flex dimension changes along the curve: {dims:?}"
        ));
    }

    let (velocity, h) = base_derivative(curve, |s| stacked_positions(&s.configuration))?;
    let base_flex = curve.base().flex.to_stacked();
    let velocity_match_error = (velocity - base_flex * 2.0).norm();
    let velocity_tolerance = VELOCITY_TOL_FACTOR * h * h * base_diameter;
    if velocity_match_error > velocity_tolerance {
        failures.push(ValidationFailure::VelocityMismatch {
            error: velocity_match_error,
            tolerance: velocity_tolerance,
        });
    }

    Ok(CurveValidation {
        sample_checks,
        velocity_match_error,
        velocity_tolerance,
        failures,
        warnings,
    })
}

/// Second-order extension extracted from a validated curve.
#[derive(Debug, Clone)]
pub struct TangentExtensionResult {
    /// Half the derivative of the flex family at the base.
    pub xi2: FlexField,
    /// Smallest stencil width used.
    pub fd_step: f64,
    /// 2 for a plain central difference, 4 with Richardson extrapolation.
    pub stencil_order: usize,
    /// Order-2 residual norm of the jet (base flex, xi2).
    pub second_order_residual: f64,
    /// (stencil width, order-2 residual) for every available width,
    /// widest first.
    pub convergence_table: Vec<(f64, f64)>,
    pub validation: CurveValidation,
}

fn order2_residual_norm(
    base: &Configuration,
    xi1: &FlexField,
    xi2: &FlexField,
) -> Result<f64, TangencyError> {
    let jet = FlexJet::new(vec![xi1.clone(), xi2.clone()]).map_err(HierarchyError::from)?;
    let res = hierarchy_residuals(base, &jet, 2)?;
    Ok(res.per_order[1].norm())
}

/// Differentiates the attached flex family at the base sample and certifies
/// the result as a second-order extension of the base flex.
///
/// Refuses curves that fail [`validate_curve`], citing the failed
/// conditions. With at least two symmetric stencil widths, the reported
/// field is Richardson-extrapolated from the two finest; the convergence
/// table always holds the plain central-difference residuals.
pub fn tangent_extension(
    curve: &ConfigCurve,
    policy: &TolerancePolicy,
) -> Result<TangentExtensionResult, TangencyError> {
    let validation = validate_curve(curve, policy)?;
    if !validation.is_valid() {
        return Err(TangencyError::InvalidCurve(validation.failures));
    }
    let base = &curve.base().configuration;
    let xi1 = &curve.base().flex;
    let widths = symmetric_widths(curve);

    let mut convergence_table = Vec::with_capacity(widths.len());
    let mut derivatives = Vec::with_capacity(widths.len());
    for &h in &widths {
        let plus = curve.sample_at(h).expect("width came from samples");
        let minus = curve.sample_at(-h).expect("width came from samples");
        let d = (plus.flex.to_stacked() - minus.flex.to_stacked()) / (2.0 * h);
        let xi2 = FlexField::from_stacked(&(d.clone() * 0.5));
        convergence_table.push((h, order2_residual_norm(base, xi1, &xi2)?));
        derivatives.push(d);
    }

    let (derivative, fd_step, stencil_order) = if derivatives.len() >= 2 {
        // Richardson on the two finest widths; exact for the usual 2:1
        // ratio, correct for any ratio rho.
        let h1 = widths[widths.len() - 2];
        let h2 = widths[widths.len() - 1];
        let rho = h1 / h2;
        let d = (&derivatives[derivatives.len() - 1] * (rho * rho)
            - &derivatives[derivatives.len() - 2])
            / (rho * rho - 1.0);
        (d, h2, 4)
    } else if derivatives.len() == 1 {
        (derivatives.pop().expect("one entry"), widths[0], 2)
    } else {
        let (d, h) = nonuniform_base_derivative(curve, |s| s.flex.to_stacked())?;
        (d, h, 2)
    };

    let xi2 = FlexField::from_stacked(&(derivative * 0.5));
    let second_order_residual = order2_residual_norm(base, xi1, &xi2)?;
    if convergence_table.is_empty() {
        convergence_table.push((fd_step, second_order_residual));
    }
    Ok(TangentExtensionResult {
        xi2,
        fd_step,
        stencil_order,
        second_order_residual,
        convergence_table,
        validation,
    })
}

/// Least-squares slope of `log residual` against `log h`; `None` with fewer
/// than two usable points.
pub fn loglog_slope(table: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|(h, r)| *h > 0.0 && *r > 0.0)
        .map(|(h, r)| (h.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[derive(Debug, Clone, Error)]
pub enum ContinuationError {
    #[error("initial field is not a first-order flex: residual {residual:.3e} > gate {gate:.3e}")]
    InputNotAFlex { residual: f64, gate: f64 },
    #[error("step size and step count must be positive")]
    BadStepPolicy,
    #[error("constraint correction stagnated at step {step}")]
    CorrectionStagnated { step: i64 },
    #[error("flex branch lost at step {step} (overlap {overlap:.3} < {TRANSPORT_OVERLAP_MIN})")]
    FlexBranchLost { step: i64, overlap: f64 },
    #[error("corrected step at {step} retained only {progress_ratio:.3} of the predicted length")]
    NoFiniteMotion { step: i64, progress_ratio: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

struct MotionState {
    positions: DVector<f64>,
    flex: DVector<f64>,
}

fn configuration_from_stacked(template: &Configuration, stacked: &DVector<f64>) -> Configuration {
    let field = FlexField::from_stacked(stacked);
    Configuration::new(template.framework().clone(), field.vectors().to_vec())
        .expect("continuation keeps edges nondegenerate")
}

fn rigidity_matrix_at(
    template: &Configuration,
    positions: &DVector<f64>,
) -> nalgebra::DMatrix<f64> {
    let c = configuration_from_stacked(template, positions);
    assemble_rigidity_operator(&c).matrix().clone()
}

/// Time derivative of the joint state (x, xi): the positions move with
/// velocity 2 xi, and xi changes minimally so it stays a flex, i.e. the
/// minimum-norm solution of `R(x) dxi = -2 q` with `q_e = |dxi_e|^2`.
fn state_derivative(
    template: &Configuration,
    state: &MotionState,
    policy: &TolerancePolicy,
) -> Result<MotionState, NumericsError> {
    let r = rigidity_matrix_at(template, &state.positions);
    let field = FlexField::from_stacked(&state.flex);
    let edges = template.framework().edges();
    let q = DVector::from_iterator(
        edges.len(),
        edges
            .iter()
            .map(|&(i, j)| field.edge_difference(i, j).norm_squared()),
    );
    let dxi = min_norm_least_squares(&r, &(q * -2.0), policy)?;
    Ok(MotionState {
        positions: &state.flex * 2.0,
        flex: dxi,
    })
}

fn rk4_step(
    template: &Configuration,
    state: &MotionState,
    h: f64,
    policy: &TolerancePolicy,
) -> Result<MotionState, NumericsError> {
    let k1 = state_derivative(template, state, policy)?;
    let mid1 = MotionState {
        positions: &state.positions + &k1.positions * (h / 2.0),
        flex: &state.flex + &k1.flex * (h / 2.0),
    };
    let k2 = state_derivative(template, &mid1, policy)?;
    let mid2 = MotionState {
        positions: &state.positions + &k2.positions * (h / 2.0),
        flex: &state.flex + &k2.flex * (h / 2.0),
    };
    let k3 = state_derivative(template, &mid2, policy)?;
    let end = MotionState {
        positions: &state.positions + &k3.positions * h,
        flex: &state.flex + &k3.flex * h,
    };
    let k4 = state_derivative(template, &end, policy)?;
    Ok(MotionState {
        positions: &state.positions
            + (&k1.positions + &k2.positions * 2.0 + &k3.positions * 2.0 + &k4.positions)
                * (h / 6.0),
        flex: &state.flex + (&k1.flex + &k2.flex * 2.0 + &k3.flex * 2.0 + &k4.flex) * (h / 6.0),
    })
}

/// Newton projection of the positions back onto the set of configurations
/// with the original edge lengths.
fn project_to_constraints(
    template: &Configuration,
    positions: &mut DVector<f64>,
    target_sq: &[f64],
    step: i64,
    policy: &TolerancePolicy,
) -> Result<(), ContinuationError> {
    let edges = template.framework().edges();
    let scale: f64 = target_sq.iter().cloned().fold(1.0, f64::max);
    for _ in 0..NEWTON_MAX_ITERS {
        let c = configuration_from_stacked(template, positions);
        let g = DVector::from_iterator(
            edges.len(),
            edges.iter().enumerate().map(|(e, &(i, j))| {
                (c.positions()[i] - c.positions()[j]).norm_squared() - target_sq[e]
            }),
        );
        if g.amax() <= NEWTON_REL_TOL * scale {
            return Ok(());
        }
        let r = assemble_rigidity_operator(&c);
        // d/dx of the squared lengths is twice the rigidity matrix.
        let correction = min_norm_least_squares(&(r.matrix() * 2.0), &(-&g), policy)?;
        *positions += correction;
    }
    Err(ContinuationError::CorrectionStagnated { step })
}

/// Transports the flex onto the nullspace at the new positions, keeping its
/// norm; fails when the overlap with the previous direction drops.
fn transport_flex(
    template: &Configuration,
    positions: &DVector<f64>,
    flex: &DVector<f64>,
    target_norm: f64,
    step: i64,
    policy: &TolerancePolicy,
) -> Result<DVector<f64>, ContinuationError> {
    let r = rigidity_matrix_at(template, positions);
    let (basis, _) = nullspace_basis(&r, policy)?;
    let mut projected = DVector::zeros(flex.len());
    for v in &basis {
        projected += v * v.dot(flex);
    }
    let overlap = projected.norm() / flex.norm();
    if overlap < TRANSPORT_OVERLAP_MIN {
        return Err(ContinuationError::FlexBranchLost { step, overlap });
    }
    Ok(&projected * (target_norm / projected.norm()))
}

/// Numerically continues an edge-length-preserving motion from `c` with
/// initial velocity `2 xi1`, stepping symmetrically in both parameter
/// directions, and returns it as a sampled curve with the transported flex
/// attached at every sample.
///
/// Fails with a "no finite motion" diagnostic when the constraint projection
/// undoes the predicted step: the hallmark of a flex that is not the
/// velocity of any finite motion.
pub fn make_flexible_motion_curve(
    c: &Configuration,
    xi1: &FlexField,
    steps: usize,
    h: f64,
    policy: &TolerancePolicy,
) -> Result<ConfigCurve, ContinuationError> {
    if steps == 0 || !h.is_finite() || h <= 0.0 {
        return Err(ContinuationError::BadStepPolicy);
    }
    let gate = RESIDUAL_GATE_REL * c.diameter() * (1.0 + xi1.norm());
    let residual = hierarchy_residuals(c, &FlexJet::from_first(xi1.clone()), 1)?.max_norm();
    if residual > gate {
        return Err(ContinuationError::InputNotAFlex { residual, gate });
    }
    let target_sq: Vec<f64> = (0..c.framework().edge_count())
        .map(|e| c.edge_length_squared(e).expect("edge index in range"))
        .collect();
    let target_norm = xi1.norm();

    let base_state = MotionState {
        positions: stacked_positions(c),
        flex: xi1.to_stacked(),
    };
    let mut forward = Vec::with_capacity(steps);
    let mut backward = Vec::with_capacity(steps);
    for (direction, out) in [(1.0, &mut forward), (-1.0, &mut backward)] {
        let mut state = MotionState {
            positions: base_state.positions.clone(),
            flex: base_state.flex.clone(),
        };
        for k in 1..=steps {
            let step_id = direction as i64 * k as i64;
            let predicted = rk4_step(c, &state, direction * h, policy)?;
            let mut positions = predicted.positions;
            project_to_constraints(c, &mut positions, &target_sq, step_id, policy)?;
            let progress = (&positions - &state.positions).norm();
            let predicted_length = 2.0 * h * target_norm;
            let progress_ratio = progress / predicted_length;
            if progress_ratio < PROGRESS_RATIO_MIN {
                return Err(ContinuationError::NoFiniteMotion {
                    step: step_id,
                    progress_ratio,
                });
            }
            let flex =
                transport_flex(c, &positions, &predicted.flex, target_norm, step_id, policy)?;
            state = MotionState { positions, flex };
            out.push(CurveSample {
                r: direction * h * k as f64,
                configuration: configuration_from_stacked(c, &state.positions),
                flex: FlexField::from_stacked(&state.flex),
            });
        }
    }

    let mut samples: Vec<CurveSample> = backward.into_iter().rev().collect();
    samples.push(CurveSample {
        r: 0.0,
        configuration: c.clone(),
        flex: xi1.clone(),
    });
    samples.extend(forward);
    Ok(ConfigCurve::new(samples)?)
}
