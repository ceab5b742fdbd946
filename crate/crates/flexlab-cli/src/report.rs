//! Machine-readable analysis reports: a stable JSON shape carrying the
//! input digest, the tolerance policy that produced every judgment, and the
//! per-command payload.

use serde::Serialize;

use flexlab_core::exact::ExactFlexCounts;
use flexlab_core::hierarchy::{ExtensionOutcome, ExtensionReport};
use flexlab_core::model::{FlexField, Stress};
use flexlab_core::numerics::ToleranceJudgment;
use flexlab_core::rigidity::FlexSpaceReport;
use flexlab_core::surface::ResidualGrid;
use flexlab_core::tangency::{CurveValidation, TangentExtensionResult};
use flexlab_core::TolerancePolicy;

use crate::io::REPORT_SCHEMA;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub input: InputEcho,
    pub policy: PolicyEcho,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub payload: Payload,
}

impl Report {
    pub fn new(
        command: &'static str,
        input: InputEcho,
        policy: PolicyEcho,
        payload: Payload,
    ) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            command,
            input,
            policy,
            warnings: Vec::new(),
            payload,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InputEcho {
    /// Path or `builtin:<name>`.
    pub source: String,
    /// SHA-256 of the canonical serialization of the parsed input.
    pub digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_shape: Option<[usize; 2]>,
}

impl InputEcho {
    pub fn new(source: String, digest: String) -> Self {
        Self {
            source,
            digest,
            vertex_count: None,
            edge_count: None,
            sample_count: None,
            grid_shape: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PolicyEcho {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub solve_tol_base: f64,
    pub gap_warn_ratio: f64,
    pub exact: bool,
}

impl PolicyEcho {
    pub fn new(policy: &TolerancePolicy, exact: bool) -> Self {
        Self {
            rel_tol: policy.rel_tol,
            abs_tol: policy.abs_tol,
            solve_tol_base: policy.solve_tol_base,
            gap_warn_ratio: policy.gap_warn_ratio,
            exact,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Analyze(AnalyzePayload),
    Extend(ExtendPayload),
    TangentExtend(TangentExtendPayload),
    Surface(SurfacePayload),
    MakeCurve(MakeCurvePayload),
}

#[derive(Debug, Serialize)]
pub struct JudgmentJson {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub threshold_used: f64,
    /// Serialized as null when infinite (nothing was dropped).
    pub gap_ratio: f64,
    pub marginal: bool,
}

impl From<&ToleranceJudgment> for JudgmentJson {
    fn from(j: &ToleranceJudgment) -> Self {
        Self {
            rank: j.rank,
            singular_values: j.singular_values.clone(),
            threshold_used: j.threshold_used,
            gap_ratio: j.gap_ratio,
            marginal: j.marginal,
        }
    }
}

fn field_json(f: &FlexField) -> Vec<[f64; 3]> {
    f.vectors().iter().map(|v| [v.x, v.y, v.z]).collect()
}

#[derive(Debug, Serialize)]
pub struct FlexSpaceJson {
    pub classification: String,
    pub trivial_dim: usize,
    pub total_flex_dim: usize,
    pub nontrivial_dim: usize,
    pub nontrivial_basis: Vec<Vec<[f64; 3]>>,
    pub judgment: JudgmentJson,
}

impl From<&FlexSpaceReport> for FlexSpaceJson {
    fn from(r: &FlexSpaceReport) -> Self {
        Self {
            classification: r.classification().to_string(),
            trivial_dim: r.trivial_dim,
            total_flex_dim: r.total_flex_dim,
            nontrivial_dim: r.nontrivial_dim,
            nontrivial_basis: r.nontrivial_basis.iter().map(field_json).collect(),
            judgment: (&r.judgment).into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StressSpaceJson {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

impl StressSpaceJson {
    pub fn new(stresses: &[Stress]) -> Self {
        Self {
            dim: stresses.len(),
            basis: stresses.iter().map(|s| s.weights().to_vec()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ExactCountsJson {
    pub rank: usize,
    pub flex_dim: usize,
    pub trivial_dim: usize,
    pub nontrivial_dim: usize,
    pub stress_dim: usize,
}

impl From<&ExactFlexCounts> for ExactCountsJson {
    fn from(c: &ExactFlexCounts) -> Self {
        Self {
            rank: c.rank,
            flex_dim: c.flex_dim,
            trivial_dim: c.trivial_dim,
            nontrivial_dim: c.nontrivial_dim,
            stress_dim: c.stress_dim,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalyzePayload {
    pub flex_space: FlexSpaceJson,
    pub stress_space: StressSpaceJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCountsJson>,
}

#[derive(Debug, Serialize)]
pub struct SolveJson {
    pub residual_norm: f64,
    pub solve_tolerance: f64,
    pub consistency: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ExtendPayload {
    pub flex_space: FlexSpaceJson,
    pub stress_space: StressSpaceJson,
    pub status: &'static str,
    /// Highest order the jet reached.
    pub order_reached: usize,
    pub requested_order: usize,
    /// All jet fields, first order onward.
    pub fields: Vec<Vec<[f64; 3]>>,
    /// Per-order residual norms of the final jet.
    pub residual_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_energy: Option<f64>,
    pub solve: SolveJson,
}

impl ExtendPayload {
    pub fn new(
        space: &FlexSpaceReport,
        stresses: &[Stress],
        jet_fields: &[FlexField],
        residual_norms: Vec<f64>,
        requested_order: usize,
        report: &ExtensionReport,
    ) -> Self {
        let (status, certificate, stress_energy) = match &report.outcome {
            ExtensionOutcome::Extended { .. } => ("extended", None, None),
            ExtensionOutcome::Obstructed {
                certificate,
                stress_energy,
            } => (
                "obstructed",
                Some(certificate.weights().to_vec()),
                Some(*stress_energy),
            ),
        };
        Self {
            flex_space: space.into(),
            stress_space: StressSpaceJson::new(stresses),
            status,
            order_reached: jet_fields.len(),
            requested_order,
            fields: jet_fields.iter().map(field_json).collect(),
            residual_norms,
            certificate,
            stress_energy,
            solve: SolveJson {
                residual_norm: report.solve_report.residual_norm,
                solve_tolerance: report.solve_report.solve_tolerance,
                consistency: match report.solve_report.consistency {
                    flexlab_core::Consistency::Solvable => "solvable",
                    flexlab_core::Consistency::Obstructed => "obstructed",
                },
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SampleCheckJson {
    pub r: f64,
    pub nonrigid: bool,
    pub nontrivial_dim: usize,
    pub flex_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct FailureJson {
    pub condition: &'static str,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ValidationJson {
    pub valid: bool,
    pub velocity_match_error: f64,
    pub velocity_tolerance: f64,
    pub samples: Vec<SampleCheckJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureJson>,
}

impl From<&CurveValidation> for ValidationJson {
    fn from(v: &CurveValidation) -> Self {
        Self {
            valid: v.is_valid(),
            velocity_match_error: v.velocity_match_error,
            velocity_tolerance: v.velocity_tolerance,
            samples: v
                .sample_checks
                .iter()
                .map(|s| SampleCheckJson {
                    r: s.r,
                    nonrigid: s.nonrigid,
                    nontrivial_dim: s.nontrivial_dim,
                    flex_residual: s.flex_residual,
                })
                .collect(),
            failures: v
                .failures
                .iter()
                .map(|f| FailureJson {
                    condition: f.label(),
                    detail: f.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TangentExtendPayload {
    pub validation: ValidationJson,
    pub xi2: Vec<[f64; 3]>,
    pub fd_step: f64,
    pub stencil_order: usize,
    pub second_order_residual: f64,
    /// Pairs (stencil width, order-2 residual), widest first.
    pub convergence_table: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

impl TangentExtendPayload {
    pub fn new(result: &TangentExtensionResult, slope: Option<f64>) -> Self {
        Self {
            validation: (&result.validation).into(),
            xi2: field_json(&result.xi2),
            fd_step: result.fd_step,
            stencil_order: result.stencil_order,
            second_order_residual: result.second_order_residual,
            convergence_table: result
                .convergence_table
                .iter()
                .map(|&(h, r)| [h, r])
                .collect(),
            slope,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SurfaceOrderJson {
    pub order: usize,
    /// Maxima of the du^2, du dv, dv^2 residual arrays.
    pub max_by_equation: [f64; 3],
    pub max_abs: f64,
}

impl From<&ResidualGrid> for SurfaceOrderJson {
    fn from(r: &ResidualGrid) -> Self {
        Self {
            order: r.order,
            max_by_equation: r.max_by_equation(),
            max_abs: r.max_abs(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SurfacePayload {
    pub orders: Vec<SurfaceOrderJson>,
    /// Range of E G - F^2 over interior nodes.
    pub immersion_det_range: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct MakeCurvePayload {
    pub flex_space: FlexSpaceJson,
    pub stress_space: StressSpaceJson,
    pub steps: usize,
    pub h: f64,
    pub sample_count: usize,
    /// Largest relative squared-length drift over all samples and edges.
    pub max_edge_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}
