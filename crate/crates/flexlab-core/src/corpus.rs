//! Built-in example corpus: frameworks, configuration curves, and surface
//! grids compiled into the library so analyses and tests run without any
//! file-system dependency.
//!
//! Coordinates are chosen exactly representable in double precision wherever
//! an exact-rational cross-check exists, so the `f64` pipeline and the
//! rational certification path see literally the same configuration.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};

use crate::exact::{rat_int, Rat};
use crate::model::{ConfigCurve, Configuration, CurveSample, FlexField, Framework, SurfaceGrid};

pub const FRAMEWORK_NAMES: &[&str] = &["tetrahedron", "subdivided-tetrahedron", "hinge"];
pub const CURVE_NAMES: &[&str] = &["hinge-fold-curve", "inplane-slide-curve"];
pub const GRID_NAMES: &[&str] = &["plane-tilt-jet", "plane-normal-bump", "cylinder-killing"];

/// Looks up a built-in framework configuration by name.
pub fn framework_configuration(name: &str) -> Option<Configuration> {
    match name {
        "tetrahedron" => Some(tetrahedron()),
        "subdivided-tetrahedron" => Some(subdivided_tetrahedron()),
        "hinge" => Some(hinge()),
        _ => None,
    }
}

/// Looks up a built-in configuration curve by name.
pub fn curve(name: &str) -> Option<ConfigCurve> {
    match name {
        "hinge-fold-curve" => Some(hinge_fold_curve(HINGE_CURVE_PARAMS)),
        "inplane-slide-curve" => Some(inplane_slide_curve(&[-0.1, -0.05, 0.0, 0.05, 0.1])),
        _ => None,
    }
}

/// Looks up a built-in surface grid (with attached jet) by name.
pub fn grid(name: &str) -> Option<SurfaceGrid> {
    match name {
        "plane-tilt-jet" => Some(plane_tilt_jet(21)),
        "plane-normal-bump" => Some(plane_normal_bump(21)),
        "cylinder-killing" => Some(cylinder_killing(21)),
        _ => None,
    }
}

fn config_f64(vertex_count: usize, edges: &[(usize, usize)], pos: &[[f64; 3]]) -> Configuration {
    let fw = Arc::new(Framework::new(vertex_count, edges.to_vec()).expect("corpus framework"));
    Configuration::new(
        fw,
        pos.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect(),
    )
    .expect("corpus configuration")
}

fn config_rat(
    vertex_count: usize,
    edges: &[(usize, usize)],
    pos: &[[i64; 3]],
) -> Configuration<Rat> {
    let fw = Arc::new(Framework::new(vertex_count, edges.to_vec()).expect("corpus framework"));
    Configuration::new(
        fw,
        pos.iter()
            .map(|p| Vector3::new(rat_int(p[0]), rat_int(p[1]), rat_int(p[2])))
            .collect(),
    )
    .expect("corpus configuration")
}

const TETRA_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const TETRA_POS: [[i64; 3]; 4] = [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]];

/// Regular tetrahedron on alternate cube vertices: integer coordinates,
/// every edge of length sqrt(2).
pub fn tetrahedron() -> Configuration {
    let pos: Vec<[f64; 3]> = TETRA_POS
        .iter()
        .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
        .collect();
    config_f64(4, &TETRA_EDGES, &pos)
}

/// Exact-rational twin of [`tetrahedron`].
pub fn tetrahedron_exact() -> Configuration<Rat> {
    config_rat(4, &TETRA_EDGES, &TETRA_POS)
}

const SUBDIV_EDGES: [(usize, usize); 9] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 4),
];
/// Tetrahedron scaled by 3 so the centroid of the face {1, 2, 3} has the
/// integer coordinates (2, 2, 2); vertex 4 sits at that centroid and is
/// joined to the face's three vertices.
const SUBDIV_POS: [[i64; 3]; 5] = [[0, 0, 0], [3, 3, 0], [3, 0, 3], [0, 3, 3], [2, 2, 2]];

/// Tetrahedron with one face additionally triangulated from its centroid.
///
/// The centroid vertex is coplanar with the face, which makes the framework
/// first-order nonrigid (the interior vertex can move perpendicular to the
/// face) while carrying a one-dimensional equilibrium stress.
pub fn subdivided_tetrahedron() -> Configuration {
    let pos: Vec<[f64; 3]> = SUBDIV_POS
        .iter()
        .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
        .collect();
    config_f64(5, &SUBDIV_EDGES, &pos)
}

/// Exact-rational twin of [`subdivided_tetrahedron`].
pub fn subdivided_tetrahedron_exact() -> Configuration<Rat> {
    config_rat(5, &SUBDIV_EDGES, &SUBDIV_POS)
}

/// Index of the subdivided tetrahedron's interior (centroid) vertex.
pub const SUBDIV_INTERIOR_VERTEX: usize = 4;

/// Unit normal of the subdivided face's plane x + y + z = 6.
pub fn subdivided_face_normal() -> Vector3<f64> {
    Vector3::new(1.0, 1.0, 1.0) / 3.0_f64.sqrt()
}

/// The interior-supported first-order flex of the subdivided tetrahedron:
/// unit normal velocity on the centroid vertex, zero elsewhere.
pub fn subdivided_perpendicular_flex() -> FlexField {
    let mut vectors = vec![Vector3::zeros(); 5];
    vectors[SUBDIV_INTERIOR_VERTEX] = subdivided_face_normal();
    FlexField::new(vectors)
}

/// Same flex with exact integer components (1, 1, 1), unnormalized.
pub fn subdivided_perpendicular_flex_exact() -> FlexField<Rat> {
    let zero = || Vector3::new(rat_int(0), rat_int(0), rat_int(0));
    let mut vectors = vec![zero(); 5];
    vectors[SUBDIV_INTERIOR_VERTEX] = Vector3::new(rat_int(1), rat_int(1), rat_int(1));
    FlexField::new(vectors)
}

const HINGE_EDGES: [(usize, usize); 5] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)];

/// Two triangles sharing the edge (0, 1) along the z-axis: vertices
/// A = (0,0,0), B = (0,0,1), C = (1,0,0), D = (0.6, 0.8, 0). The dihedral
/// fold about the shared edge is a genuine one-parameter motion.
pub fn hinge() -> Configuration {
    config_f64(
        4,
        &HINGE_EDGES,
        &[
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.6, 0.8, 0.0],
        ],
    )
}

/// Index of the hinge vertex that moves under the analytic fold.
pub const HINGE_FOLD_VERTEX: usize = 3;

/// Base fold angle of the built-in hinge (atan2(0.8, 0.6)).
pub fn hinge_base_angle() -> f64 {
    0.8_f64.atan2(0.6)
}

/// Hinge configuration folded to angle `phi`: vertex 3 at
/// (cos phi, sin phi, 0), everything else fixed. All five edge lengths are
/// independent of `phi`.
pub fn hinge_fold_configuration(phi: f64) -> Configuration {
    config_f64(
        4,
        &HINGE_EDGES,
        &[
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [phi.cos(), phi.sin(), 0.0],
        ],
    )
}

/// Velocity field of the fold at angle `phi` (d/dphi of the positions).
pub fn hinge_fold_velocity(phi: f64) -> FlexField {
    let mut vectors = vec![Vector3::zeros(); 4];
    vectors[HINGE_FOLD_VERTEX] = Vector3::new(-phi.sin(), phi.cos(), 0.0);
    FlexField::new(vectors)
}

/// The default parameter samples of the built-in fold curve: symmetric
/// stencils at widths 1e-2, 5e-3, 2.5e-3, and 1.25e-3 around the base.
pub const HINGE_CURVE_PARAMS: &[f64] = &[
    -1e-2, -5e-3, -2.5e-3, -1.25e-3, 0.0, 1.25e-3, 2.5e-3, 5e-3, 1e-2,
];

/// Analytic fold curve of the hinge with fold angle phi(r) = phi0 + r.
///
/// Positions are the folded configurations and the attached flexes are half
/// the exact parameter velocities, so the curve satisfies the tangency
/// conditions by construction.
pub fn hinge_fold_curve(rs: &[f64]) -> ConfigCurve {
    hinge_fold_curve_with(rs, |r| hinge_base_angle() + r, |_| 1.0)
}

/// Fold curve with an arbitrary smooth angle schedule `phi(r)` and its
/// derivative `dphi(r)`.
pub fn hinge_fold_curve_with(
    rs: &[f64],
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
) -> ConfigCurve {
    let samples = rs
        .iter()
        .map(|&r| {
            let angle = phi(r);
            let mut velocity = hinge_fold_velocity(angle);
            velocity = velocity.scaled(dphi(r));
            CurveSample {
                r,
                configuration: hinge_fold_configuration(angle),
                flex: velocity.scaled(0.5),
            }
        })
        .collect();
    ConfigCurve::new(samples).expect("corpus curve")
}

/// Curve that slides the subdivided tetrahedron's interior vertex inside the
/// face plane while carrying the perpendicular flex at every sample.
///
/// Every sampled configuration stays first-order nonrigid and the attached
/// fields are genuine flexes, but the curve's velocity is the in-plane slide,
/// not twice the attached flex: the curve is tangent to the nonrigid set
/// without the attached flex being its velocity.
pub fn inplane_slide_curve(rs: &[f64]) -> ConfigCurve {
    let slide = Vector3::new(1.0, -1.0, 0.0);
    let samples = rs
        .iter()
        .map(|&r| {
            let mut pos: Vec<[f64; 3]> = SUBDIV_POS
                .iter()
                .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
                .collect();
            pos[SUBDIV_INTERIOR_VERTEX][0] += r * slide[0];
            pos[SUBDIV_INTERIOR_VERTEX][1] += r * slide[1];
            pos[SUBDIV_INTERIOR_VERTEX][2] += r * slide[2];
            CurveSample {
                r,
                configuration: config_f64(5, &SUBDIV_EDGES, &pos),
                flex: subdivided_perpendicular_flex().scaled(0.5),
            }
        })
        .collect();
    ConfigCurve::new(samples).expect("corpus curve")
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn grid_from(
    u: Vec<f64>,
    v: Vec<f64>,
    position: impl Fn(f64, f64) -> Vector3<f64>,
    jets: &[&dyn Fn(f64, f64) -> Vector3<f64>],
) -> SurfaceGrid {
    let positions = DMatrix::from_fn(u.len(), v.len(), |i, j| position(u[i], v[j]));
    let mut grid = SurfaceGrid::new(u.clone(), v.clone(), positions).expect("corpus grid");
    for jet in jets {
        let field = DMatrix::from_fn(u.len(), v.len(), |i, j| jet(u[i], v[j]));
        grid.attach_jet_field(field).expect("corpus jet");
    }
    grid
}

/// Flat grid with the order-2 jet of the linearized tilt about the v-axis:
/// xi1 = u e_z, xi2 = -u e_x. Both residual orders vanish identically.
pub fn plane_tilt_jet(n: usize) -> SurfaceGrid {
    grid_from(
        linspace(0.0, 1.0, n),
        linspace(0.0, 1.0, n),
        |u, v| Vector3::new(u, v, 0.0),
        &[&|u, _v| Vector3::new(0.0, 0.0, u), &|u, _v| {
            Vector3::new(-u, 0.0, 0.0)
        }],
    )
}

/// Flat grid with xi1 = u^2 e_z and xi2 = 0: first-order residuals vanish,
/// the order-2 residual does not (the normal bump needs a tangential
/// correction that the zero field fails to provide).
pub fn plane_normal_bump(n: usize) -> SurfaceGrid {
    grid_from(
        linspace(0.0, 1.0, n),
        linspace(0.0, 1.0, n),
        |u, v| Vector3::new(u, v, 0.0),
        &[&|u, _v| Vector3::new(0.0, 0.0, u * u), &|_u, _v| {
            Vector3::zeros()
        }],
    )
}

/// Cylinder patch carrying a sampled rigid-motion (Killing) field
/// omega x p + c; its exact first-order residuals vanish, so the grid
/// residuals are pure finite-difference truncation.
pub fn cylinder_killing(n: usize) -> SurfaceGrid {
    let omega = Vector3::new(0.4, -0.3, 0.8);
    let shift = Vector3::new(0.1, 0.2, -0.3);
    grid_from(
        linspace(0.2, 1.7, n),
        linspace(-0.5, 0.5, n),
        |u, v| Vector3::new(u.cos(), u.sin(), v),
        &[&move |u, v| {
            let p = Vector3::new(u.cos(), u.sin(), v);
            omega.cross(&p) + shift
        }],
    )
}

/// Degenerate map (u, u, 0): x_v vanishes identically, so the first
/// fundamental form fails the immersion check everywhere.
pub fn degenerate_grid(n: usize) -> SurfaceGrid {
    grid_from(
        linspace(0.0, 1.0, n),
        linspace(0.0, 1.0, n),
        |u, _v| Vector3::new(u, u, 0.0),
        &[],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_lookup_matches_name_lists() {
        for name in FRAMEWORK_NAMES {
            assert!(framework_configuration(name).is_some(), "{name}");
        }
        for name in CURVE_NAMES {
            assert!(curve(name).is_some(), "{name}");
        }
        for name in GRID_NAMES {
            assert!(grid(name).is_some(), "{name}");
        }
        assert!(framework_configuration("unknown").is_none());
    }

    #[test]
    fn tetrahedron_is_regular() {
        let c = tetrahedron();
        for e in 0..6 {
            assert_eq!(c.edge_length_squared(e).unwrap(), 2.0);
        }
    }

    #[test]
    fn subdivided_interior_vertex_is_the_face_centroid() {
        let c = subdivided_tetrahedron();
        let p = c.positions()[SUBDIV_INTERIOR_VERTEX];
        assert_eq!(p, Vector3::new(2.0, 2.0, 2.0));
        // Exactly in the face plane x + y + z = 6, even in doubles.
        assert_eq!(p.x + p.y + p.z, 6.0);
    }

    #[test]
    fn hinge_fold_preserves_edge_lengths() {
        let base = hinge();
        for phi in [hinge_base_angle(), 0.3, 1.2, 2.5] {
            let folded = hinge_fold_configuration(phi);
            for e in 0..5 {
                let a = base.edge_length_squared(e).unwrap();
                let b = folded.edge_length_squared(e).unwrap();
                assert!((a - b).abs() < 1e-14, "edge {e} at phi {phi}");
            }
        }
    }

    #[test]
    fn builtin_fold_curve_has_the_documented_stencils() {
        let c = curve("hinge-fold-curve").unwrap();
        assert_eq!(c.samples().len(), 9);
        assert_eq!(c.base_index(), 4);
        for h in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
            assert!(c.sample_at(h).is_some() && c.sample_at(-h).is_some());
        }
    }

    #[test]
    fn slide_curve_velocity_is_in_plane() {
        let c = curve("inplane-slide-curve").unwrap();
        let normal = subdivided_face_normal();
        let lo = c.sample_at(-0.05).unwrap();
        let hi = c.sample_at(0.05).unwrap();
        let velocity = (hi.configuration.positions()[SUBDIV_INTERIOR_VERTEX]
            - lo.configuration.positions()[SUBDIV_INTERIOR_VERTEX])
            / 0.1;
        assert!(velocity.dot(&normal).abs() < 1e-12);
        assert!(velocity.norm() > 1.0);
    }
}
