//! First-order theory for frameworks: the rigidity operator, trivial
//! motions, flex-space classification, and equilibrium stresses.
//!
//! A velocity field is a first-order flex when every edge's projected
//! relative velocity vanishes, i.e. the stacked field lies in the nullspace
//! of the rigidity operator. Trivial flexes come from ambient isometries;
//! a configuration is first-order nonrigid when the nullspace is strictly
//! larger than the trivial-motion space.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::model::{Configuration, FlexField, Stress};
use crate::numerics::{
    self, columns_to_matrix, nullspace_basis, NumericsError, ToleranceJudgment, TolerancePolicy,
};

/// The linear map sending a stacked vertex-velocity field to per-edge values
/// `(x_i - x_j) . (xi_i - xi_j)`.
///
/// One row per edge, `3 * vertex_count` columns; the row for edge `(i, j)`
/// holds `x_i - x_j` in block `i` and the negative in block `j`, so each row
/// norm is `sqrt(2)` times the edge length.
#[derive(Debug, Clone)]
pub struct RigidityOperator {
    matrix: DMatrix<f64>,
    vertex_count: usize,
}

impl RigidityOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn edge_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Per-edge values `(x_i - x_j) . (xi_i - xi_j)` for a flex field.
    pub fn apply(&self, field: &FlexField) -> DVector<f64> {
        &self.matrix * field.to_stacked()
    }
}

/// Assembles the rigidity operator of a configuration.
pub fn assemble_rigidity_operator(c: &Configuration) -> RigidityOperator {
    let n = c.vertex_count();
    let edges = c.framework().edges();
    let mut m = DMatrix::zeros(edges.len(), 3 * n);
    for (row, &(i, j)) in edges.iter().enumerate() {
        let d = c.positions()[i] - c.positions()[j];
        for axis in 0..3 {
            m[(row, 3 * i + axis)] = d[axis];
            m[(row, 3 * j + axis)] = -d[axis];
        }
    }
    RigidityOperator {
        matrix: m,
        vertex_count: n,
    }
}

/// Stacks the six isometry generators (three translations, three linearized
/// rotations `omega x x_i`) as columns of a `3n x 6` matrix.
fn trivial_generators(c: &Configuration) -> DMatrix<f64> {
    let n = c.vertex_count();
    let mut m = DMatrix::zeros(3 * n, 6);
    for vertex in 0..n {
        let p = &c.positions()[vertex];
        for axis in 0..3 {
            m[(3 * vertex + axis, axis)] = 1.0;
        }
        let rotations = [
            Vector3::new(0.0, -p.z, p.y),
            Vector3::new(p.z, 0.0, -p.x),
            Vector3::new(-p.y, p.x, 0.0),
        ];
        for (gen, rot) in rotations.iter().enumerate() {
            for axis in 0..3 {
                m[(3 * vertex + axis, 3 + gen)] = rot[axis];
            }
        }
    }
    m
}

/// Orthonormal basis of the trivial-motion space.
///
/// Dimension 6 for generic configurations, 5 when all points are collinear,
/// 3 for a single point; detected by rank rather than assumed.
pub fn trivial_motion_basis(
    c: &Configuration,
    policy: &TolerancePolicy,
) -> Result<Vec<FlexField>, NumericsError> {
    let (cols, _) = numerics::column_space_basis(&trivial_generators(c), policy)?;
    Ok(cols.iter().map(FlexField::from_stacked).collect())
}

/// First-order flex space of a configuration, split into trivial and
/// nontrivial parts.
#[derive(Debug, Clone)]
pub struct FlexSpaceReport {
    pub trivial_dim: usize,
    /// Dimension of the full nullspace of the rigidity operator.
    pub total_flex_dim: usize,
    pub nontrivial_dim: usize,
    /// Orthonormal flexes spanning the orthogonal complement of the trivial
    /// motions inside the flex space.
    pub nontrivial_basis: Vec<FlexField>,
    /// Rank judgment of the rigidity operator.
    pub judgment: ToleranceJudgment,
}

impl FlexSpaceReport {
    /// A configuration is first-order nonrigid iff it has a nontrivial flex.
    pub fn is_nonrigid(&self) -> bool {
        self.nontrivial_dim > 0
    }

    pub fn classification(&self) -> &'static str {
        if self.is_nonrigid() {
            "first-order nonrigid"
        } else {
            "first-order rigid"
        }
    }
}

/// Computes the flex space and its canonical trivial/nontrivial split.
///
/// The nontrivial basis is the nullspace of the rigidity operator stacked
/// with the transposed trivial basis, i.e. the flexes orthogonal to every
/// trivial motion.
pub fn first_order_flex_space(
    c: &Configuration,
    policy: &TolerancePolicy,
) -> Result<FlexSpaceReport, NumericsError> {
    let operator = assemble_rigidity_operator(c);
    let (_, judgment) = nullspace_basis(operator.matrix(), policy)?;
    let total_flex_dim = 3 * c.vertex_count() - judgment.rank;

    let trivial = trivial_motion_basis(c, policy)?;
    let trivial_dim = trivial.len();

    let trivial_cols: Vec<DVector<f64>> = trivial.iter().map(|f| f.to_stacked()).collect();
    let t = columns_to_matrix(3 * c.vertex_count(), &trivial_cols);
    let mut stacked = DMatrix::zeros(operator.edge_count() + trivial_dim, 3 * c.vertex_count());
    stacked
        .rows_mut(0, operator.edge_count())
        .copy_from(operator.matrix());
    stacked
        .rows_mut(operator.edge_count(), trivial_dim)
        .copy_from(&t.transpose());
    let (nontrivial_cols, _) = nullspace_basis(&stacked, policy)?;

    Ok(FlexSpaceReport {
        trivial_dim,
        total_flex_dim,
        nontrivial_dim: nontrivial_cols.len(),
        nontrivial_basis: nontrivial_cols
            .iter()
            .map(FlexField::from_stacked)
            .collect(),
        judgment,
    })
}

/// Orthonormal basis of the equilibrium stresses: left-nullspace vectors of
/// the rigidity operator reindexed per edge. Each stress satisfies the
/// vertexwise balance `sum_j w_ij (x_j - x_i) = 0`.
pub fn equilibrium_stress_space(
    c: &Configuration,
    policy: &TolerancePolicy,
) -> Result<(Vec<Stress>, ToleranceJudgment), NumericsError> {
    let operator = assemble_rigidity_operator(c);
    let (basis, judgment) = numerics::cokernel_basis(operator.matrix(), policy)?;
    let stresses = basis
        .iter()
        .map(|w| Stress::new(w.iter().copied().collect()))
        .collect();
    Ok((stresses, judgment))
}

/// Residual of the vertexwise equilibrium condition for a stress; near zero
/// for genuine members of the stress space.
pub fn stress_equilibrium_defect(c: &Configuration, stress: &Stress) -> f64 {
    let mut worst: f64 = 0.0;
    let edges = c.framework().edges();
    for vertex in 0..c.vertex_count() {
        let mut sum = Vector3::zeros();
        for (e, &(i, j)) in edges.iter().enumerate() {
            if i == vertex {
                sum += stress.weights()[e] * (c.positions()[j] - c.positions()[i]);
            } else if j == vertex {
                sum += stress.weights()[e] * (c.positions()[i] - c.positions()[j]);
            }
        }
        worst = worst.max(sum.norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::exact::{self, rational_rigidity_matrix};
    use crate::model::Framework;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn segment() -> Configuration {
        let fw = Arc::new(Framework::new(2, vec![(0, 1)]).unwrap());
        Configuration::new(
            fw,
            vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn segment_operator_row() {
        // Edge (0, 1): x_0 - x_1 in block 0, the negative in block 1.
        let op = assemble_rigidity_operator(&segment());
        assert_eq!(op.matrix().nrows(), 1);
        assert_eq!(
            op.matrix().row(0).iter().copied().collect::<Vec<_>>(),
            vec![-1.0, 0.0, 0.0, 1.0, -0.0, -0.0]
        );
    }

    #[test]
    fn row_norm_is_sqrt2_times_edge_length() {
        let c = corpus::subdivided_tetrahedron();
        let op = assemble_rigidity_operator(&c);
        for (e, _) in c.framework().edges().iter().enumerate() {
            let row_norm = op.matrix().row(e).norm();
            let len = c.edge_length_squared(e).unwrap().sqrt();
            assert_abs_diff_eq!(row_norm, 2.0_f64.sqrt() * len, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_translation_is_annihilated() {
        let c = corpus::hinge();
        let op = assemble_rigidity_operator(&c);
        let field = FlexField::new(vec![Vector3::new(0.3, -1.2, 0.7); c.vertex_count()]);
        assert!(op.apply(&field).norm() < 1e-14);
    }

    #[test]
    fn tetrahedron_rank_matches_exact_oracle() {
        let op = assemble_rigidity_operator(&corpus::tetrahedron());
        let judgment = numerics::numerical_rank(op.matrix(), &policy()).unwrap();
        assert_eq!(judgment.rank, 6);
        assert_eq!(
            rational_rigidity_matrix(&corpus::tetrahedron_exact()).rank(),
            6
        );
    }

    #[test]
    fn trivial_dimension_by_degeneracy() {
        assert_eq!(
            trivial_motion_basis(&corpus::tetrahedron(), &policy())
                .unwrap()
                .len(),
            6
        );
        assert_eq!(
            trivial_motion_basis(&segment(), &policy()).unwrap().len(),
            5
        );
        let fw = Arc::new(Framework::new(1, vec![]).unwrap());
        let point = Configuration::new(fw, vec![Vector3::new(2.0, 3.0, 4.0)]).unwrap();
        assert_eq!(trivial_motion_basis(&point, &policy()).unwrap().len(), 3);
    }

    #[test]
    fn trivial_motions_lie_in_the_nullspace() {
        for c in [
            corpus::tetrahedron(),
            corpus::subdivided_tetrahedron(),
            corpus::hinge(),
        ] {
            let op = assemble_rigidity_operator(&c);
            for field in trivial_motion_basis(&c, &policy()).unwrap() {
                assert!(op.apply(&field).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tetrahedron_is_first_order_rigid() {
        let report = first_order_flex_space(&corpus::tetrahedron(), &policy()).unwrap();
        assert_eq!(report.total_flex_dim, 6);
        assert_eq!(report.trivial_dim, 6);
        assert_eq!(report.nontrivial_dim, 0);
        assert!(!report.is_nonrigid());
        let counts = exact::exact_flex_counts(&corpus::tetrahedron_exact());
        assert_eq!(counts.nontrivial_dim, 0);
    }

    #[test]
    fn subdivided_tetrahedron_has_the_perpendicular_flex() {
        let c = corpus::subdivided_tetrahedron();
        let report = first_order_flex_space(&c, &policy()).unwrap();
        assert_eq!(report.nontrivial_dim, 1);
        assert_eq!(report.total_flex_dim, 7);
        assert_eq!(report.trivial_dim, 6);

        let counts = exact::exact_flex_counts(&corpus::subdivided_tetrahedron_exact());
        assert_eq!(counts.rank, 8);
        assert_eq!(counts.nontrivial_dim, 1);

        // The interior-supported perpendicular field is itself a flex, and it
        // spans the same class as the reported basis modulo trivial motions:
        // removing each one's trivial component leaves parallel fields.
        let op = assemble_rigidity_operator(&c);
        let perp = corpus::subdivided_perpendicular_flex();
        assert!(op.apply(&perp).norm() < 1e-12);
        let reported = &report.nontrivial_basis[0];
        let trivial = trivial_motion_basis(&c, &policy()).unwrap();
        let project_off = |f: &FlexField| {
            let mut v = f.to_stacked();
            for t in &trivial {
                let t = t.to_stacked();
                let coeff = t.dot(&v);
                v -= t * coeff;
            }
            v
        };
        let a = project_off(&perp);
        let b = project_off(reported);
        let cosine = a.dot(&b).abs() / (a.norm() * b.norm());
        assert!(cosine > 1.0 - 1e-10, "cosine {cosine}");
    }

    #[test]
    fn hinge_has_the_dihedral_flex() {
        let report = first_order_flex_space(&corpus::hinge(), &policy()).unwrap();
        assert_eq!(report.nontrivial_dim, 1);
        assert_eq!(report.total_flex_dim, 7);
        let counts =
            exact::exact_flex_counts(&exact::configuration_to_rational(&corpus::hinge()).unwrap());
        assert_eq!(counts.nontrivial_dim, 1);
        assert_eq!(counts.stress_dim, 0);
    }

    #[test]
    fn stress_spaces_match_the_exact_oracle() {
        let (tet, _) = equilibrium_stress_space(&corpus::tetrahedron(), &policy()).unwrap();
        assert!(tet.is_empty());
        let (hinge, _) = equilibrium_stress_space(&corpus::hinge(), &policy()).unwrap();
        assert!(hinge.is_empty());

        let c = corpus::subdivided_tetrahedron();
        let (stresses, _) = equilibrium_stress_space(&c, &policy()).unwrap();
        assert_eq!(stresses.len(), 1);
        let exact_coker =
            rational_rigidity_matrix(&corpus::subdivided_tetrahedron_exact()).left_nullspace();
        assert_eq!(exact_coker.len(), 1);

        // Supported exactly on the six in-plane edges: the three apex edges
        // carry zero weight.
        let stress = &stresses[0];
        let edges = c.framework().edges();
        for (e, &(i, j)) in edges.iter().enumerate() {
            let apex_edge = i == 0 || j == 0;
            if apex_edge {
                assert!(stress.weights()[e].abs() < 1e-12, "edge {e}");
                assert!(exact_coker[0][e].eq(&exact::rat_int(0)), "exact edge {e}");
            } else {
                assert!(stress.weights()[e].abs() > 0.1, "edge {e}");
            }
        }
        assert!(stress_equilibrium_defect(&c, stress) < 1e-12);
    }

    #[test]
    fn stress_flex_pairing_vanishes() {
        let c = corpus::subdivided_tetrahedron();
        let op = assemble_rigidity_operator(&c);
        let report = first_order_flex_space(&c, &policy()).unwrap();
        let (stresses, _) = equilibrium_stress_space(&c, &policy()).unwrap();
        for stress in &stresses {
            let w = stress.to_vector();
            for flex in report
                .nontrivial_basis
                .iter()
                .chain(trivial_motion_basis(&c, &policy()).unwrap().iter())
            {
                assert!(w.dot(&op.apply(flex)).abs() < 1e-10);
            }
        }
    }
}
