//! Command implementations: input resolution (files or built-ins), analysis
//! dispatch, and report rendering in human-readable and JSON form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use flexlab_core::exact;
use flexlab_core::hierarchy::{extend_greedily, hierarchy_residuals, HierarchyError};
use flexlab_core::model::{ConfigCurve, Configuration, FlexField, SurfaceGrid};
use flexlab_core::rigidity::{equilibrium_stress_space, first_order_flex_space};
use flexlab_core::surface::{fundamental_form, hierarchy_residual_grid};
use flexlab_core::tangency::{
    loglog_slope, make_flexible_motion_curve, tangent_extension, ContinuationError, TangencyError,
};
use flexlab_core::{corpus, GridError, TolerancePolicy};

use crate::io::{self, CurveFile, FileError, FlexFieldFile, FrameworkFile, GridFile};
use crate::report::{
    AnalyzePayload, ExtendPayload, InputEcho, MakeCurvePayload, Payload, PolicyEcho, Report,
    StressSpaceJson, SurfaceOrderJson, SurfacePayload, TangentExtendPayload,
};

/// Process exit codes; a stable part of the command-line contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Internal = 1,
    Parse = 2,
    BadFlexInput = 3,
    InvalidCurve = 4,
    BadSurfaceGrid = 5,
    ContinuationFailure = 6,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn internal(err: impl std::fmt::Display) -> CliError {
    CliError::new(ExitCode::Internal, err.to_string())
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| {
        CliError::new(
            ExitCode::Parse,
            format!("cannot read {}: {e}", path.display()),
        )
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(source: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| {
        CliError::new(
            ExitCode::Parse,
            format!(
                "{source}: parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            ),
        )
    })
}

fn known_builtins(kind: &str) -> String {
    let names = match kind {
        "framework" => corpus::FRAMEWORK_NAMES,
        "curve" => corpus::CURVE_NAMES,
        _ => corpus::GRID_NAMES,
    };
    names.join(", ")
}

/// Resolves a framework input (path or `builtin:<name>`).
pub fn load_configuration(input: &str) -> CliResult<(Configuration, InputEcho)> {
    let config = if let Some(name) = input.strip_prefix("builtin:") {
        corpus::framework_configuration(name).ok_or_else(|| {
            CliError::new(
                ExitCode::Parse,
                format!(
                    "unknown builtin framework {name:?}; available: {}",
                    known_builtins("framework")
                ),
            )
        })?
    } else {
        let text = read_file(Path::new(input))?;
        let file: FrameworkFile = parse_json(input, &text)?;
        file.into_configuration()
            .map_err(|e| CliError::new(ExitCode::Parse, format!("{input}: {e}")))?
    };
    let canonical = FrameworkFile::from_configuration(&config);
    let mut echo = InputEcho::new(input.to_string(), io::digest(&canonical));
    echo.vertex_count = Some(config.vertex_count());
    echo.edge_count = Some(config.framework().edge_count());
    Ok((config, echo))
}

pub fn load_curve(input: &str) -> CliResult<(ConfigCurve, InputEcho)> {
    let curve = if let Some(name) = input.strip_prefix("builtin:") {
        corpus::curve(name).ok_or_else(|| {
            CliError::new(
                ExitCode::Parse,
                format!(
                    "unknown builtin curve {name:?}; available: {}",
                    known_builtins("curve")
                ),
            )
        })?
    } else {
        let text = read_file(Path::new(input))?;
        let file: CurveFile = parse_json(input, &text)?;
        file.into_curve().map_err(|e| match e {
            FileError::Curve(c) => CliError::new(ExitCode::InvalidCurve, format!("{input}: {c}")),
            other => CliError::new(ExitCode::Parse, format!("{input}: {other}")),
        })?
    };
    let canonical = CurveFile::from_curve(&curve);
    let mut echo = InputEcho::new(input.to_string(), io::digest(&canonical));
    echo.vertex_count = Some(curve.framework().vertex_count());
    echo.edge_count = Some(curve.framework().edge_count());
    echo.sample_count = Some(curve.samples().len());
    Ok((curve, echo))
}

pub fn load_grid(input: &str) -> CliResult<(SurfaceGrid, InputEcho)> {
    let grid = if let Some(name) = input.strip_prefix("builtin:") {
        corpus::grid(name).ok_or_else(|| {
            CliError::new(
                ExitCode::Parse,
                format!(
                    "unknown builtin grid {name:?}; available: {}",
                    known_builtins("grid")
                ),
            )
        })?
    } else {
        let text = read_file(Path::new(input))?;
        let file: GridFile = parse_json(input, &text)?;
        file.into_grid().map_err(|e| match e {
            FileError::Grid(g) => CliError::new(ExitCode::BadSurfaceGrid, format!("{input}: {g}")),
            other => CliError::new(ExitCode::Parse, format!("{input}: {other}")),
        })?
    };
    let canonical = GridFile::from_grid(&grid);
    let mut echo = InputEcho::new(input.to_string(), io::digest(&canonical));
    echo.grid_shape = Some([grid.nu(), grid.nv()]);
    Ok((grid, echo))
}

/// Picks the first-order flex to work with: a nontrivial-basis index or an
/// explicit field file.
fn resolve_flex(
    config: &Configuration,
    space: &flexlab_core::rigidity::FlexSpaceReport,
    flex_index: usize,
    flex_field: Option<&PathBuf>,
    require_nontrivial: bool,
) -> CliResult<FlexField> {
    if let Some(path) = flex_field {
        let text = read_file(path)?;
        let file: FlexFieldFile = parse_json(&path.display().to_string(), &text)?;
        let field = file
            .into_field()
            .map_err(|e| CliError::new(ExitCode::Parse, format!("{}: {e}", path.display())))?;
        if field.len() != config.vertex_count() {
            return Err(CliError::new(
                ExitCode::BadFlexInput,
                format!(
                    "flex field has {} vectors, framework has {} vertices",
                    field.len(),
                    config.vertex_count()
                ),
            ));
        }
        return Ok(field);
    }
    if space.nontrivial_dim == 0 && require_nontrivial {
        return Err(CliError::new(
            ExitCode::BadFlexInput,
            "no nontrivial flex to follow: configuration is first-order rigid",
        ));
    }
    space
        .nontrivial_basis
        .get(flex_index)
        .cloned()
        .ok_or_else(|| {
            CliError::new(
                ExitCode::BadFlexInput,
                format!(
                    "flex index {flex_index} out of range: nontrivial flex dim is {}",
                    space.nontrivial_dim
                ),
            )
        })
}

fn marginality_warning(judgment: &flexlab_core::ToleranceJudgment, what: &str) -> Option<String> {
    judgment.marginal.then(|| {
        format!(
            "marginal rank decision in {what}: gap ratio {:.2}",
            judgment.gap_ratio
        )
    })
}

fn emit(report: &Report, human: String, json: bool) {
    if json {
        print!("{}", io::to_json_string(report));
    } else {
        print!("{human}");
    }
}

fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_analyze(
    input: &str,
    policy: &TolerancePolicy,
    exact_mode: bool,
    json: bool,
) -> CliResult<()> {
    let (config, echo) = load_configuration(input)?;
    let space = first_order_flex_space(&config, policy).map_err(internal)?;
    let (stresses, _) = equilibrium_stress_space(&config, policy).map_err(internal)?;

    let exact_counts = if exact_mode {
        let rational = exact::configuration_to_rational(&config)
            .map_err(|e| CliError::new(ExitCode::Parse, e.to_string()))?;
        Some(exact::exact_flex_counts(&rational))
    } else {
        None
    };

    let mut warnings = Vec::new();
    if space.judgment.marginal {
        warnings.push(format!(
            "marginal rank decision: gap ratio {:.2} below {}",
            space.judgment.gap_ratio, policy.gap_warn_ratio
        ));
    }
    if let Some(counts) = &exact_counts {
        if counts.nontrivial_dim != space.nontrivial_dim || counts.stress_dim != stresses.len() {
            warnings.push(format!(
                "exact arithmetic disagrees with floating point: exact nontrivial dim {} / stress dim {}, floating {} / {}",
                counts.nontrivial_dim,
                counts.stress_dim,
                space.nontrivial_dim,
                stresses.len()
            ));
        }
    }

    let mut human = String::new();
    let _ = writeln!(
        human,
        "input: {} ({} vertices, {} edges)",
        echo.source,
        config.vertex_count(),
        config.framework().edge_count()
    );
    let _ = writeln!(human, "digest: {}", echo.digest);
    let _ = writeln!(
        human,
        "classification: {}, nontrivial flex dim {}, stress dim {}",
        space.classification(),
        space.nontrivial_dim,
        stresses.len()
    );
    let _ = writeln!(
        human,
        "flex space: total {} = trivial {} + nontrivial {}",
        space.total_flex_dim, space.trivial_dim, space.nontrivial_dim
    );
    let _ = writeln!(
        human,
        "rigidity operator rank {} (threshold {:.3e}, gap ratio {:.3})",
        space.judgment.rank, space.judgment.threshold_used, space.judgment.gap_ratio
    );
    if let Some(counts) = &exact_counts {
        let _ = writeln!(
            human,
            "exact: rank {}, nontrivial flex dim {}, stress dim {}",
            counts.rank, counts.nontrivial_dim, counts.stress_dim
        );
    }
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }

    let mut report = Report::new(
        "analyze",
        echo,
        PolicyEcho::new(policy, exact_mode),
        Payload::Analyze(AnalyzePayload {
            flex_space: (&space).into(),
            stress_space: StressSpaceJson::new(&stresses),
            exact: exact_counts.as_ref().map(Into::into),
        }),
    );
    report.warnings = warnings;
    emit(&report, human, json);
    Ok(())
}

fn map_hierarchy_error(err: HierarchyError) -> CliError {
    match err {
        HierarchyError::NotAFlex {
            order,
            residual_norm,
            gate,
        } => CliError::new(
            ExitCode::BadFlexInput,
            format!(
                "input field fails the order-{order} residual gate: {residual_norm:.3e} > {gate:.3e}"
            ),
        ),
        HierarchyError::OrderTooSmall(n) => CliError::new(
            ExitCode::BadFlexInput,
            format!("extension order must be at least 2, got {n}"),
        ),
        other => internal(other),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_extend(
    input: &str,
    order: usize,
    flex_index: usize,
    flex_field: Option<&PathBuf>,
    policy: &TolerancePolicy,
    json: bool,
) -> CliResult<()> {
    let (config, echo) = load_configuration(input)?;
    let space = first_order_flex_space(&config, policy).map_err(internal)?;
    let (stresses, _) = equilibrium_stress_space(&config, policy).map_err(internal)?;
    let first = resolve_flex(&config, &space, flex_index, flex_field, false)?;
    let (jet, last) =
        extend_greedily(&config, first, order, policy).map_err(map_hierarchy_error)?;
    let residual_norms = hierarchy_residuals(&config, &jet, jet.order())
        .map_err(internal)?
        .norms();
    let mut warnings = Vec::new();
    warnings.extend(marginality_warning(&space.judgment, "the flex space"));
    warnings.extend(marginality_warning(
        &last.solve_report.judgment,
        "the extension solve",
    ));

    let mut human = String::new();
    let _ = writeln!(human, "input: {} (digest {})", echo.source, echo.digest);
    match &last.outcome {
        flexlab_core::hierarchy::ExtensionOutcome::Extended { .. } => {
            let _ = writeln!(human, "extended to order {}", jet.order());
        }
        flexlab_core::hierarchy::ExtensionOutcome::Obstructed {
            certificate,
            stress_energy,
        } => {
            let _ = writeln!(human, "OBSTRUCTED at order {}", last.target_order);
            let weights: Vec<String> = certificate
                .weights()
                .iter()
                .map(|w| format!("{w:.6e}"))
                .collect();
            let _ = writeln!(
                human,
                "stress certificate (unit norm): [{}]",
                weights.join(", ")
            );
            let _ = writeln!(human, "stress energy: {stress_energy:.6e}");
            if last.target_order > 2 {
                // At order 2 the right-hand side depends only on the input
                // flex, so the obstruction is absolute; beyond that it is
                // relative to the minimum-norm choices made at lower orders.
                let _ = writeln!(
                    human,
                    "note: obstruction applies to the greedy minimum-norm chain; \
other lower-order completions are not searched"
                );
            }
        }
    }
    let _ = writeln!(
        human,
        "per-order residual norms: [{}]",
        residual_norms
            .iter()
            .map(|r| format!("{r:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );

    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }

    let mut report = Report::new(
        "extend",
        echo,
        PolicyEcho::new(policy, false),
        Payload::Extend(ExtendPayload::new(
            &space,
            &stresses,
            jet.fields(),
            residual_norms,
            order,
            &last,
        )),
    );
    report.warnings = warnings;
    emit(&report, human, json);
    Ok(())
}

pub fn cmd_tangent_extend(
    input: &str,
    policy: &TolerancePolicy,
    json: bool,
    csv: Option<&PathBuf>,
) -> CliResult<()> {
    let (curve, echo) = load_curve(input)?;
    let result = tangent_extension(&curve, policy).map_err(|e| match e {
        TangencyError::InvalidCurve(failures) => {
            let labels: Vec<String> = failures.iter().map(|f| f.to_string()).collect();
            CliError::new(
                ExitCode::InvalidCurve,
                format!("curve failed validation: {}", labels.join("; ")),
            )
        }
        TangencyError::Curve(c) => CliError::new(ExitCode::InvalidCurve, c.to_string()),
        other => internal(other),
    })?;
    let slope = loglog_slope(&result.convergence_table);

    if let Some(path) = csv {
        let mut text = String::from("h,residual\n");
        for (h, r) in &result.convergence_table {
            let _ = writeln!(text, "{h:.16e},{r:.16e}");
        }
        write_output(path, &text)?;
    }

    let mut human = String::new();
    let _ = writeln!(human, "input: {} (digest {})", echo.source, echo.digest);
    let _ = writeln!(
        human,
        "curve valid: velocity match error {:.3e} <= {:.3e}",
        result.validation.velocity_match_error, result.validation.velocity_tolerance
    );
    let _ = writeln!(human, "stencil width   order-2 residual");
    for (h, r) in &result.convergence_table {
        let _ = writeln!(human, "{h:>13.4e}   {r:.6e}");
    }
    if let Some(s) = slope {
        let _ = writeln!(human, "log-log slope: {s:.3}");
    }
    let _ = writeln!(
        human,
        "xi2 extracted (stencil order {}, fd step {:.3e}); order-2 residual {:.6e}",
        result.stencil_order, result.fd_step, result.second_order_residual
    );
    for w in &result.validation.warnings {
        let _ = writeln!(human, "warning: {w}");
    }

    let mut report = Report::new(
        "tangent-extend",
        echo,
        PolicyEcho::new(policy, false),
        Payload::TangentExtend(TangentExtendPayload::new(&result, slope)),
    );
    report.warnings = result.validation.warnings.clone();
    emit(&report, human, json);
    Ok(())
}

pub fn cmd_surface(
    input: &str,
    order: Option<usize>,
    policy: &TolerancePolicy,
    json: bool,
    csv: Option<&PathBuf>,
) -> CliResult<()> {
    let (grid, echo) = load_grid(input)?;
    let form = fundamental_form(&grid, policy).map_err(|e| match e {
        GridError::ImmersionFailure { .. } => {
            CliError::new(ExitCode::BadSurfaceGrid, e.to_string())
        }
        other => CliError::new(ExitCode::BadSurfaceGrid, other.to_string()),
    })?;
    let up_to = order.unwrap_or_else(|| grid.jet_order().max(1));
    let residuals = hierarchy_residual_grid(&grid, up_to)
        .map_err(|e| CliError::new(ExitCode::BadSurfaceGrid, e.to_string()))?;

    let mut det_range = [f64::INFINITY, f64::NEG_INFINITY];
    for i in 0..grid.nu() - 2 {
        for j in 0..grid.nv() - 2 {
            let d = form.det(i, j);
            det_range[0] = det_range[0].min(d);
            det_range[1] = det_range[1].max(d);
        }
    }

    if let Some(path) = csv {
        let mut text = String::from("order,i,j,u,v,res_uu,res_uv,res_vv\n");
        for res in &residuals {
            for i in 0..grid.nu() - 2 {
                for j in 0..grid.nv() - 2 {
                    let _ = writeln!(
                        text,
                        "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                        res.order,
                        i + 1,
                        j + 1,
                        grid.u()[i + 1],
                        grid.v()[j + 1],
                        res.uu[(i, j)],
                        res.uv[(i, j)],
                        res.vv[(i, j)]
                    );
                }
            }
        }
        write_output(path, &text)?;
    }

    let mut human = String::new();
    let _ = writeln!(
        human,
        "input: {} ({}x{} grid, jet order {})",
        echo.source,
        grid.nu(),
        grid.nv(),
        grid.jet_order()
    );
    let _ = writeln!(human, "digest: {}", echo.digest);
    let _ = writeln!(
        human,
        "immersion: E G - F^2 in [{:.6e}, {:.6e}] at interior nodes",
        det_range[0], det_range[1]
    );
    for res in &residuals {
        let m = res.max_by_equation();
        let _ = writeln!(
            human,
            "order {}: residual maxima du2 {:.6e}, dudv {:.6e}, dv2 {:.6e} (overall {:.6e})",
            res.order,
            m[0],
            m[1],
            m[2],
            res.max_abs()
        );
    }

    let report = Report::new(
        "surface",
        echo,
        PolicyEcho::new(policy, false),
        Payload::Surface(SurfacePayload {
            orders: residuals.iter().map(SurfaceOrderJson::from).collect(),
            immersion_det_range: det_range,
        }),
    );
    emit(&report, human, json);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_make_curve(
    input: &str,
    flex_index: usize,
    flex_field: Option<&PathBuf>,
    steps: usize,
    h: f64,
    out: Option<&PathBuf>,
    policy: &TolerancePolicy,
    json: bool,
) -> CliResult<()> {
    let (config, echo) = load_configuration(input)?;
    let space = first_order_flex_space(&config, policy).map_err(internal)?;
    let (stresses, _) = equilibrium_stress_space(&config, policy).map_err(internal)?;
    let first = resolve_flex(&config, &space, flex_index, flex_field, true)?;
    let curve =
        make_flexible_motion_curve(&config, &first, steps, h, policy).map_err(|e| match e {
            ContinuationError::InputNotAFlex { residual, gate } => CliError::new(
                ExitCode::BadFlexInput,
                format!("input field fails the flex residual gate: {residual:.3e} > {gate:.3e}"),
            ),
            ContinuationError::BadStepPolicy => {
                CliError::new(ExitCode::BadFlexInput, "steps and h must be positive")
            }
            other => CliError::new(
                ExitCode::ContinuationFailure,
                format!("no finite motion found along flex {flex_index}: {other}"),
            ),
        })?;

    let mut max_drift: f64 = 0.0;
    for sample in curve.samples() {
        for e in 0..config.framework().edge_count() {
            let a = config.edge_length_squared(e).map_err(internal)?;
            let b = sample
                .configuration
                .edge_length_squared(e)
                .map_err(internal)?;
            max_drift = max_drift.max((a - b).abs() / a);
        }
    }

    let curve_file = CurveFile::from_curve(&curve);
    let curve_json = io::to_json_string(&curve_file);
    if let Some(path) = out {
        write_output(path, &curve_json)?;
    }

    let mut human = String::new();
    let _ = writeln!(human, "input: {} (digest {})", echo.source, echo.digest);
    let _ = writeln!(
        human,
        "curve: {} samples, r in [{:.4e}, {:.4e}]",
        curve.samples().len(),
        curve.samples()[0].r,
        curve.samples().last().unwrap().r
    );
    let _ = writeln!(
        human,
        "edge-length preservation: max relative squared-length drift {max_drift:.3e}"
    );
    let warnings: Vec<String> =
        marginality_warning(&space.judgment, "the flex space").into_iter().collect();
    for w in &warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    match out {
        Some(path) => {
            let _ = writeln!(human, "wrote {}", path.display());
        }
        None => human = curve_json.clone(),
    }

    let mut report = Report::new(
        "make-curve",
        echo,
        PolicyEcho::new(policy, false),
        Payload::MakeCurve(MakeCurvePayload {
            flex_space: (&space).into(),
            stress_space: StressSpaceJson::new(&stresses),
            steps,
            h,
            sample_count: curve.samples().len(),
            max_edge_drift: max_drift,
            out: out.map(|p| p.display().to_string()),
        }),
    );
    report.warnings = warnings;
    emit(&report, human, json);
    Ok(())
}
