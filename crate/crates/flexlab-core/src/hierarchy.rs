//! Order-by-order flex machinery: residual verification of a jet against
//! the hierarchy equations, and greedy extension with stress obstruction
//! certificates.
//!
//! The order-k residual of a jet on edge (i, j) is
//! `(x_i - x_j).(xi^(k)_i - xi^(k)_j) + sum_{m=1}^{k-1} (dxi^(m)).(dxi^(k-m))`,
//! exactly one fourth of the degree-k coefficient of the edge's squared-length
//! polynomial. Extending a jet by one order solves the linear system whose
//! right-hand side collects the quadratic terms; an equilibrium stress with a
//! nonzero pairing against that right-hand side certifies that no extension
//! exists.

use nalgebra::DVector;

use crate::model::{dot3, Configuration, FlexField, FlexJet, ModelError, Ring, Stress};
use crate::numerics::{
    least_squares_with_certificate, Consistency, LinearSolveReport, NumericsError,
};
use crate::rigidity::assemble_rigidity_operator;
use crate::TolerancePolicy;
use thiserror::Error;

/// Relative precondition gate: a jet must satisfy the hierarchy up to its
/// order within `RESIDUAL_GATE_REL * diameter` before extension is attempted.
pub const RESIDUAL_GATE_REL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HierarchyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("requested order {requested} exceeds jet order {jet_order}")]
    OrderExceedsJet { requested: usize, jet_order: usize },
    #[error(
        "input jet is not a flex to order {order}: residual norm {residual_norm:.3e} exceeds gate {gate:.3e}"
    )]
    NotAFlex {
        order: usize,
        residual_norm: f64,
        gate: f64,
    },
    #[error("extension order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("solver reported an obstruction but produced no cokernel certificate")]
    MissingCertificate,
}

/// Residual vector of one hierarchy order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderResidual<S: Ring = f64> {
    pub order: usize,
    /// One residual per canonical edge.
    pub per_edge: Vec<S>,
}

impl OrderResidual<f64> {
    pub fn norm(&self) -> f64 {
        self.per_edge.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Residuals of all checked orders.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyResidual<S: Ring = f64> {
    pub per_order: Vec<OrderResidual<S>>,
    pub max_order_checked: usize,
}

impl HierarchyResidual<f64> {
    /// Largest per-order residual norm.
    pub fn max_norm(&self) -> f64 {
        self.per_order.iter().map(|o| o.norm()).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.per_order.iter().map(|o| o.norm()).collect()
    }
}

/// Evaluates the hierarchy residuals of a jet for orders `1..=up_to`.
pub fn hierarchy_residuals<S: Ring>(
    c: &Configuration<S>,
    jet: &FlexJet<S>,
    up_to: usize,
) -> Result<HierarchyResidual<S>, HierarchyError> {
    if jet.vertex_count() != c.vertex_count() {
        return Err(ModelError::SizeMismatch {
            what: "jet field",
            expected: c.vertex_count(),
            got: jet.vertex_count(),
        }
        .into());
    }
    if up_to > jet.order() {
        return Err(HierarchyError::OrderExceedsJet {
            requested: up_to,
            jet_order: jet.order(),
        });
    }
    let edges = c.framework().edges();
    let mut per_order = Vec::with_capacity(up_to);
    for k in 1..=up_to {
        let per_edge = edges
            .iter()
            .map(|&(i, j)| {
                let dx = crate::model::sub3(&c.positions()[i], &c.positions()[j]);
                let mut acc = dot3(&dx, &jet.field(k).edge_difference(i, j));
                for m in 1..k {
                    acc += dot3(
                        &jet.field(m).edge_difference(i, j),
                        &jet.field(k - m).edge_difference(i, j),
                    );
                }
                acc
            })
            .collect();
        per_order.push(OrderResidual { order: k, per_edge });
    }
    Ok(HierarchyResidual {
        per_order,
        max_order_checked: up_to,
    })
}

/// Right-hand side of the order-`(k+1)` extension solve for a jet of order
/// `k`: per edge, `sum_{m=1}^{k} (dxi^(m)).(dxi^(k+1-m))`.
fn quadratic_rhs(c: &Configuration, jet: &FlexJet) -> DVector<f64> {
    let edges = c.framework().edges();
    let next = jet.order() + 1;
    DVector::from_iterator(
        edges.len(),
        edges.iter().map(|&(i, j)| {
            (1..next)
                .map(|m| {
                    jet.field(m)
                        .edge_difference(i, j)
                        .dot(&jet.field(next - m).edge_difference(i, j))
                })
                .sum::<f64>()
        }),
    )
}

/// Outcome of a one-order extension attempt.
#[derive(Debug, Clone)]
pub enum ExtensionOutcome {
    /// The minimum-norm next-order field.
    Extended { new_field: FlexField },
    /// No next-order field exists; the unit-norm stress certificate pairs
    /// against the right-hand side with the reported energy.
    Obstructed {
        certificate: Stress,
        stress_energy: f64,
    },
}

/// Result of extending a jet by one order.
#[derive(Debug, Clone)]
pub struct ExtensionReport {
    /// The order the attempt tried to reach.
    pub target_order: usize,
    pub outcome: ExtensionOutcome,
    pub solve_report: LinearSolveReport,
}

impl ExtensionReport {
    pub fn is_extended(&self) -> bool {
        matches!(self.outcome, ExtensionOutcome::Extended { .. })
    }
}

/// Extends a jet satisfying the hierarchy up to its order by one more order,
/// or reports the stress obstruction.
///
/// The input jet is gated on its own residuals first: feeding a non-flex
/// into the solve would produce a meaningless right-hand side.
pub fn extend_one_order(
    c: &Configuration,
    jet: &FlexJet,
    policy: &TolerancePolicy,
) -> Result<ExtensionReport, HierarchyError> {
    let gate = RESIDUAL_GATE_REL * c.diameter();
    let residuals = hierarchy_residuals(c, jet, jet.order())?;
    for order in &residuals.per_order {
        let norm = order.norm();
        if norm > gate {
            return Err(HierarchyError::NotAFlex {
                order: order.order,
                residual_norm: norm,
                gate,
            });
        }
    }
    let operator = assemble_rigidity_operator(c);
    let b = quadratic_rhs(c, jet);
    let solve_report = least_squares_with_certificate(operator.matrix(), &(-&b), policy)?;
    let outcome = match solve_report.consistency {
        Consistency::Solvable => {
            let x = solve_report
                .solution
                .as_ref()
                .expect("solvable reports carry a solution");
            ExtensionOutcome::Extended {
                new_field: FlexField::from_stacked(x),
            }
        }
        Consistency::Obstructed => {
            let w = solve_report
                .certificate
                .as_ref()
                .ok_or(HierarchyError::MissingCertificate)?;
            // Pair the unit certificate with the quadratic term itself.
            let stress_energy = w.dot(&b);
            ExtensionOutcome::Obstructed {
                certificate: Stress::new(w.iter().copied().collect()),
                stress_energy,
            }
        }
    };
    Ok(ExtensionReport {
        target_order: jet.order() + 1,
        outcome,
        solve_report,
    })
}

/// Repeatedly extends a first-order flex until `max_order` is reached or an
/// obstruction appears; returns the longest jet achieved together with the
/// report of the final attempt.
pub fn extend_greedily(
    c: &Configuration,
    first: FlexField,
    max_order: usize,
    policy: &TolerancePolicy,
) -> Result<(FlexJet, ExtensionReport), HierarchyError> {
    if max_order < 2 {
        return Err(HierarchyError::OrderTooSmall(max_order));
    }
    let mut jet = FlexJet::from_first(first);
    loop {
        let report = extend_one_order(c, &jet, policy)?;
        match &report.outcome {
            ExtensionOutcome::Extended { new_field } => {
                jet = jet.extended_with(new_field.clone())?;
                if jet.order() == max_order {
                    return Ok((jet, report));
                }
            }
            ExtensionOutcome::Obstructed { .. } => {
                return Ok((jet, report));
            }
        }
    }
}
