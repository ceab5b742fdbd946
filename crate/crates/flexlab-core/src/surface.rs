//! Sampled parametric surfaces in local coordinates: the first fundamental
//! form and the per-order residual systems of the flex hierarchy, evaluated
//! by central differences.
//!
//! The order-k system in coordinates has three equations, the coefficients
//! of du^2, du dv, and dv^2:
//!
//! ```text
//! x_u.xi_u^(k) + sum_m xi_u^(m).xi_u^(k-m)                              = 0
//! x_u.xi_v^(k) + x_v.xi_u^(k) + sum_m (xi_u^(m).xi_v^(k-m) + xi_v^(m).xi_u^(k-m)) = 0
//! x_v.xi_v^(k) + sum_m xi_v^(m).xi_v^(k-m)                              = 0
//! ```
//!
//! Residuals are reported at interior nodes only; boundary nodes would need
//! one-sided stencils whose first-order truncation would pollute every
//! convergence measurement. Non-uniform grids use the standard three-point
//! formula, which reduces to the plain central difference on uniform spacing
//! and is exact for quadratics.

use nalgebra::{DMatrix, Vector3};

use crate::model::{Configuration, FlexField, Framework, GridError, SurfaceGrid};
use crate::TolerancePolicy;

/// First fundamental form coefficients on the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct FormGrid {
    /// x_u . x_u
    pub e: DMatrix<f64>,
    /// x_u . x_v
    pub f: DMatrix<f64>,
    /// x_v . x_v
    pub g: DMatrix<f64>,
}

impl FormGrid {
    /// Determinant E G - F^2 at an interior node.
    pub fn det(&self, i: usize, j: usize) -> f64 {
        self.e[(i, j)] * self.g[(i, j)] - self.f[(i, j)] * self.f[(i, j)]
    }
}

/// The three residual arrays (du^2, du dv, dv^2 coefficients) of one order,
/// on interior nodes.
#[derive(Debug, Clone)]
pub struct ResidualGrid {
    pub order: usize,
    pub uu: DMatrix<f64>,
    pub uv: DMatrix<f64>,
    pub vv: DMatrix<f64>,
}

impl ResidualGrid {
    /// Largest absolute residual over all three equations and nodes.
    pub fn max_abs(&self) -> f64 {
        [&self.uu, &self.uv, &self.vv]
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
    }

    /// Per-equation maxima (du^2, du dv, dv^2).
    pub fn max_by_equation(&self) -> [f64; 3] {
        [&self.uu, &self.uv, &self.vv].map(|m| m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs())))
    }
}

/// Partial derivatives of a grid-sampled vector field at interior nodes.
struct Partials {
    du: DMatrix<Vector3<f64>>,
    dv: DMatrix<Vector3<f64>>,
}

/// Three-point first-derivative weights for the forward and backward
/// differences `f(x+hp) - f(x)` and `f(x-hm) - f(x)`; exact for quadratics.
/// The difference form keeps constant fields at exactly zero derivative.
fn three_point_weights(hm: f64, hp: f64) -> (f64, f64) {
    let sum = hm + hp;
    (hm / (hp * sum), -hp / (hm * sum))
}

fn partials(u: &[f64], v: &[f64], field: &DMatrix<Vector3<f64>>) -> Partials {
    let nu = u.len();
    let nv = v.len();
    let mut du = DMatrix::from_element(nu - 2, nv - 2, Vector3::zeros());
    let mut dv = DMatrix::from_element(nu - 2, nv - 2, Vector3::zeros());
    for i in 1..nu - 1 {
        let (wp_u, wm_u) = three_point_weights(u[i] - u[i - 1], u[i + 1] - u[i]);
        for j in 1..nv - 1 {
            let (wp_v, wm_v) = three_point_weights(v[j] - v[j - 1], v[j + 1] - v[j]);
            let center = &field[(i, j)];
            du[(i - 1, j - 1)] =
                (field[(i + 1, j)] - center) * wp_u + (field[(i - 1, j)] - center) * wm_u;
            dv[(i - 1, j - 1)] =
                (field[(i, j + 1)] - center) * wp_v + (field[(i, j - 1)] - center) * wm_v;
        }
    }
    Partials { du, dv }
}

/// First fundamental form at interior nodes; fails when the sampled map is
/// not an immersion (E G - F^2 not positive beyond the absolute tolerance).
pub fn fundamental_form(
    grid: &SurfaceGrid,
    policy: &TolerancePolicy,
) -> Result<FormGrid, GridError> {
    let p = partials(grid.u(), grid.v(), grid.positions());
    let shape = (grid.nu() - 2, grid.nv() - 2);
    let mut e = DMatrix::zeros(shape.0, shape.1);
    let mut f = DMatrix::zeros(shape.0, shape.1);
    let mut g = DMatrix::zeros(shape.0, shape.1);
    let mut violations = 0usize;
    let mut first = None;
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            e[(i, j)] = p.du[(i, j)].dot(&p.du[(i, j)]);
            f[(i, j)] = p.du[(i, j)].dot(&p.dv[(i, j)]);
            g[(i, j)] = p.dv[(i, j)].dot(&p.dv[(i, j)]);
            let det = e[(i, j)] * g[(i, j)] - f[(i, j)] * f[(i, j)];
            if det <= policy.abs_tol * (1.0 + e[(i, j)] * g[(i, j)]) {
                violations += 1;
                // Report in full-grid node coordinates.
                first.get_or_insert((i + 1, j + 1));
            }
        }
    }
    if let Some((i, j)) = first {
        return Err(GridError::ImmersionFailure {
            count: violations,
            i,
            j,
        });
    }
    Ok(FormGrid { e, f, g })
}

/// First-order residual system for a sampled field: the three arrays
/// `x_u.xi_u`, `x_u.xi_v + x_v.xi_u`, and `x_v.xi_v` at interior nodes.
pub fn first_order_residual_grid(
    grid: &SurfaceGrid,
    field: &DMatrix<Vector3<f64>>,
) -> Result<ResidualGrid, GridError> {
    if field.nrows() != grid.nu() || field.ncols() != grid.nv() {
        return Err(GridError::ShapeMismatch {
            rows: grid.nu(),
            cols: grid.nv(),
            got_rows: field.nrows(),
            got_cols: field.ncols(),
        });
    }
    let x = partials(grid.u(), grid.v(), grid.positions());
    let xi = partials(grid.u(), grid.v(), field);
    let shape = (grid.nu() - 2, grid.nv() - 2);
    let mut out = ResidualGrid {
        order: 1,
        uu: DMatrix::zeros(shape.0, shape.1),
        uv: DMatrix::zeros(shape.0, shape.1),
        vv: DMatrix::zeros(shape.0, shape.1),
    };
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            out.uu[(i, j)] = x.du[(i, j)].dot(&xi.du[(i, j)]);
            out.uv[(i, j)] = x.du[(i, j)].dot(&xi.dv[(i, j)]) + x.dv[(i, j)].dot(&xi.du[(i, j)]);
            out.vv[(i, j)] = x.dv[(i, j)].dot(&xi.dv[(i, j)]);
        }
    }
    Ok(out)
}

/// Residual systems of all orders `1..=up_to` for the jet attached to the
/// grid.
pub fn hierarchy_residual_grid(
    grid: &SurfaceGrid,
    up_to: usize,
) -> Result<Vec<ResidualGrid>, GridError> {
    if up_to > grid.jet_order() {
        return Err(GridError::MissingJetOrder {
            order: up_to,
            available: grid.jet_order(),
        });
    }
    let x = partials(grid.u(), grid.v(), grid.positions());
    let jet: Vec<Partials> = grid
        .jets()
        .iter()
        .take(up_to)
        .map(|f| partials(grid.u(), grid.v(), f))
        .collect();
    let shape = (grid.nu() - 2, grid.nv() - 2);
    let mut out = Vec::with_capacity(up_to);
    for k in 1..=up_to {
        let mut res = ResidualGrid {
            order: k,
            uu: DMatrix::zeros(shape.0, shape.1),
            uv: DMatrix::zeros(shape.0, shape.1),
            vv: DMatrix::zeros(shape.0, shape.1),
        };
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let xk_u = &jet[k - 1].du[(i, j)];
                let xk_v = &jet[k - 1].dv[(i, j)];
                let mut uu = x.du[(i, j)].dot(xk_u);
                let mut uv = x.du[(i, j)].dot(xk_v) + x.dv[(i, j)].dot(xk_u);
                let mut vv = x.dv[(i, j)].dot(xk_v);
                for m in 1..k {
                    let a_u = &jet[m - 1].du[(i, j)];
                    let a_v = &jet[m - 1].dv[(i, j)];
                    let b_u = &jet[k - m - 1].du[(i, j)];
                    let b_v = &jet[k - m - 1].dv[(i, j)];
                    uu += a_u.dot(b_u);
                    uv += a_u.dot(b_v) + a_v.dot(b_u);
                    vv += a_v.dot(b_v);
                }
                res.uu[(i, j)] = uu;
                res.uv[(i, j)] = uv;
                res.vv[(i, j)] = vv;
            }
        }
        out.push(res);
    }
    Ok(out)
}

/// Reads a grid as a bar-joint framework: nodes become vertices (row-major),
/// axis neighbors become edges, and attached jet fields become flex fields.
pub fn framework_from_grid(
    grid: &SurfaceGrid,
) -> Result<(Configuration, Vec<FlexField>), crate::model::ModelError> {
    let nu = grid.nu();
    let nv = grid.nv();
    let index = |i: usize, j: usize| i * nv + j;
    let mut edges = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            if i + 1 < nu {
                edges.push((index(i, j), index(i + 1, j)));
            }
            if j + 1 < nv {
                edges.push((index(i, j), index(i, j + 1)));
            }
        }
    }
    let fw = std::sync::Arc::new(Framework::new(nu * nv, edges)?);
    let positions = (0..nu)
        .flat_map(|i| (0..nv).map(move |j| (i, j)))
        .map(|(i, j)| grid.positions()[(i, j)])
        .collect();
    let configuration = Configuration::new(fw, positions)?;
    let fields = grid
        .jets()
        .iter()
        .map(|f| {
            FlexField::new(
                (0..nu)
                    .flat_map(|i| (0..nv).map(move |j| (i, j)))
                    .map(|(i, j)| f[(i, j)])
                    .collect(),
            )
        })
        .collect();
    Ok((configuration, fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::tangency::loglog_slope;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn plane_form_is_exact() {
        let grid = corpus::plane_tilt_jet(9);
        let form = fundamental_form(&grid, &policy()).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(form.e[(i, j)], 1.0);
                assert_eq!(form.f[(i, j)], 0.0);
                assert_eq!(form.g[(i, j)], 1.0);
                assert_eq!(form.det(i, j), 1.0);
            }
        }
    }

    #[test]
    fn cylinder_form_converges_quadratically_in_e() {
        let mut errors = Vec::new();
        for n in [11, 21, 41] {
            let grid = corpus::cylinder_killing(n);
            let form = fundamental_form(&grid, &policy()).unwrap();
            let err = form
                .e
                .iter()
                .fold(0.0_f64, |acc, &e| acc.max((e - 1.0).abs()));
            let spacing = grid.u()[1] - grid.u()[0];
            errors.push((spacing, err));
            // G is exact: x is linear in v.
            assert!(form.g.iter().all(|&g| (g - 1.0).abs() < 1e-14));
        }
        let slope = loglog_slope(&errors).unwrap();
        assert!((1.7..=2.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn degenerate_map_fails_immersion_everywhere() {
        let grid = corpus::degenerate_grid(7);
        let err = fundamental_form(&grid, &policy()).unwrap_err();
        let GridError::ImmersionFailure { count, .. } = err else {
            panic!("expected immersion failure");
        };
        assert_eq!(count, 25);
    }

    #[test]
    fn constant_field_has_zero_residuals() {
        let grid = corpus::cylinder_killing(9);
        let field = DMatrix::from_element(9, 9, nalgebra::Vector3::new(0.3, -0.7, 0.2));
        let res = first_order_residual_grid(&grid, &field).unwrap();
        assert_eq!(res.max_abs(), 0.0);
    }

    #[test]
    fn normal_fields_on_the_plane_are_first_order_flexes() {
        let grid = corpus::plane_normal_bump(11);
        let res = first_order_residual_grid(&grid, &grid.jets()[0]).unwrap();
        assert!(res.max_abs() < 1e-14);
    }

    #[test]
    fn in_plane_shear_field_has_unit_uu_residual() {
        let grid = corpus::plane_tilt_jet(9);
        let field = DMatrix::from_fn(9, 9, |i, _j| nalgebra::Vector3::new(grid.u()[i], 0.0, 0.0));
        let res = first_order_residual_grid(&grid, &field).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(res.uu[(i, j)], 1.0);
                assert_eq!(res.uv[(i, j)], 0.0);
                assert_eq!(res.vv[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn tilt_jet_satisfies_both_orders() {
        let grid = corpus::plane_tilt_jet(21);
        let res = hierarchy_residual_grid(&grid, 2).unwrap();
        assert!(res[0].max_abs() < 1e-12);
        assert!(res[1].max_abs() < 1e-12);
    }

    #[test]
    fn dropping_the_second_field_exposes_the_quadratic_term() {
        let grid = corpus::plane_normal_bump(21);
        let res = hierarchy_residual_grid(&grid, 2).unwrap();
        assert!(res[0].max_abs() < 1e-14);
        // xi_u^(1).xi_u^(1) = 4 u^2 on the du^2 equation, maximal at the
        // last interior node.
        let u_max = grid.u()[grid.nu() - 2];
        assert!((res[1].max_by_equation()[0] - 4.0 * u_max * u_max).abs() < 1e-12);
        assert!(res[1].max_by_equation()[2] < 1e-14);
    }

    #[test]
    fn zero_jet_residuals_vanish_at_any_order() {
        let mut grid = corpus::plane_tilt_jet(9);
        // Replace jets with zero fields of order 3.
        grid = {
            let mut g = crate::model::SurfaceGrid::new(
                grid.u().to_vec(),
                grid.v().to_vec(),
                grid.positions().clone(),
            )
            .unwrap();
            for _ in 0..3 {
                g.attach_jet_field(DMatrix::from_element(9, 9, nalgebra::Vector3::zeros()))
                    .unwrap();
            }
            g
        };
        let res = hierarchy_residual_grid(&grid, 3).unwrap();
        assert!(res.iter().all(|r| r.max_abs() == 0.0));
    }

    #[test]
    fn killing_field_residuals_sit_at_the_rounding_floor() {
        // The stencil is linear, so differencing omega x p + c commutes with
        // the cross product and the triple products cancel identically: the
        // truncation term vanishes and only rounding noise remains, far
        // below C * spacing^2 for every refinement.
        for n in [11, 21, 41] {
            let grid = corpus::cylinder_killing(n);
            let res = hierarchy_residual_grid(&grid, 1).unwrap();
            let spacing = grid.u()[1] - grid.u()[0];
            assert!(res[0].max_abs() < 1e-13, "n = {n}: {}", res[0].max_abs());
            assert!(res[0].max_abs() < 1e-6 * spacing * spacing);
        }
    }

    #[test]
    fn smooth_field_residuals_converge_to_the_analytic_residuals() {
        // A curved (non-Killing) field on the cylinder: the finite-difference
        // residuals approach the closed-form ones at second order.
        let field_fn = |u: f64, v: f64| nalgebra::Vector3::new((u + v).sin(), (u - v).cos(), u * v);
        let analytic = |u: f64, v: f64| {
            let xu = nalgebra::Vector3::new(-u.sin(), u.cos(), 0.0);
            let xv = nalgebra::Vector3::new(0.0, 0.0, 1.0);
            let xiu = nalgebra::Vector3::new((u + v).cos(), -(u - v).sin(), v);
            let xiv = nalgebra::Vector3::new((u + v).cos(), (u - v).sin(), u);
            [xu.dot(&xiu), xu.dot(&xiv) + xv.dot(&xiu), xv.dot(&xiv)]
        };
        let mut table = Vec::new();
        for n in [11, 21, 41] {
            let base = corpus::cylinder_killing(n);
            let field = DMatrix::from_fn(n, n, |i, j| field_fn(base.u()[i], base.v()[j]));
            let res = first_order_residual_grid(&base, &field).unwrap();
            let mut err = 0.0_f64;
            for i in 0..n - 2 {
                for j in 0..n - 2 {
                    let truth = analytic(base.u()[i + 1], base.v()[j + 1]);
                    err = err
                        .max((res.uu[(i, j)] - truth[0]).abs())
                        .max((res.uv[(i, j)] - truth[1]).abs())
                        .max((res.vv[(i, j)] - truth[2]).abs());
                }
            }
            let spacing = base.u()[1] - base.u()[0];
            table.push((spacing, err));
        }
        let slope = loglog_slope(&table).unwrap();
        assert!((1.7..=2.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn non_uniform_grids_are_exact_for_quadratic_fields() {
        // Graded spacing; the three-point weights stay exact for quadratics,
        // so the du^2 residual of the in-plane field (u^2, 0, 0) equals the
        // closed form 2u at every interior node.
        let u = vec![0.0, 0.1, 0.25, 0.45, 0.7, 1.0];
        let v = vec![0.0, 0.2, 0.3, 0.65, 0.9, 1.4];
        let positions =
            DMatrix::from_fn(6, 6, |i, j| nalgebra::Vector3::new(u[i], v[j], 0.0));
        let grid = crate::model::SurfaceGrid::new(u.clone(), v, positions).unwrap();
        let field = DMatrix::from_fn(6, 6, |i, _j| {
            nalgebra::Vector3::new(u[i] * u[i], 0.0, 0.0)
        });
        let res = first_order_residual_grid(&grid, &field).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((res.uu[(i, j)] - 2.0 * u[i + 1]).abs() < 1e-14);
                assert!(res.uv[(i, j)].abs() < 1e-14);
                assert!(res.vv[(i, j)].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn missing_jet_order_is_reported() {
        let grid = corpus::cylinder_killing(9);
        assert!(matches!(
            hierarchy_residual_grid(&grid, 2),
            Err(GridError::MissingJetOrder {
                order: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn grid_framework_residuals_match_the_midpoint_directional_form() {
        // Plane with the curved in-plane field (u^2, 0, 0): the per-edge
        // framework residual equals the du^2 equation at the edge midpoint
        // times the squared spacing; both sides are polynomial, so the match
        // is exact up to rounding.
        let n = 9;
        let mut grid = corpus::plane_tilt_jet(n);
        grid = {
            let mut g = crate::model::SurfaceGrid::new(
                grid.u().to_vec(),
                grid.v().to_vec(),
                grid.positions().clone(),
            )
            .unwrap();
            g.attach_jet_field(DMatrix::from_fn(n, n, |i, _j| {
                nalgebra::Vector3::new(grid.u()[i] * grid.u()[i], 0.0, 0.0)
            }))
            .unwrap();
            g
        };
        let res = hierarchy_residual_grid(&grid, 1).unwrap();
        let (config, fields) = framework_from_grid(&grid).unwrap();
        let jet = crate::model::FlexJet::from_first(fields[0].clone());
        let framework_res = crate::hierarchy::hierarchy_residuals(&config, &jet, 1).unwrap();
        let spacing = grid.u()[1] - grid.u()[0];
        let nv = grid.nv();
        for (e, &(a, b)) in config.framework().edges().iter().enumerate() {
            let (ia, ja) = (a / nv, a % nv);
            let (ib, jb) = (b / nv, b % nv);
            // Interior u-directed edges only.
            let u_edge = ja == jb;
            let interior =
                |i: usize, j: usize| i >= 1 && i + 1 < grid.nu() && j >= 1 && j + 1 < grid.nv();
            if !(u_edge && interior(ia, ja) && interior(ib, jb)) {
                continue;
            }
            let midpoint_uu = 0.5 * (res[0].uu[(ia - 1, ja - 1)] + res[0].uu[(ib - 1, jb - 1)]);
            let lhs = framework_res.per_order[0].per_edge[e];
            assert!(
                (lhs - midpoint_uu * spacing * spacing).abs() < 1e-13,
                "edge {e}: {lhs} vs {}",
                midpoint_uu * spacing * spacing
            );
        }
    }
}
