//! Exact rational linear algebra: rank, reduced row echelon form, nullspace
//! bases, and consistency checks over `BigRational`.
//!
//! This is the certification path behind `--exact` and the independent oracle
//! the floating-point rank decisions are cross-checked against. Matrices here
//! are tiny (tens of rows), so plain fraction arithmetic with first-nonzero
//! pivoting is both exact and fast enough.

use nalgebra::Vector3;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use thiserror::Error;

use crate::model::{Configuration, FlexField, FlexJet, Framework, ModelError};

pub type Rat = BigRational;

/// `n / d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// `n` as an exact rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExactError {
    #[error("cannot convert non-finite value to a rational")]
    NonFinite,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Dense row-major matrix of exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rat) {
        self.data[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// Appends `b` as an extra column.
    pub fn augmented(&self, b: &[Rat]) -> Self {
        assert_eq!(b.len(), self.rows);
        let mut out = Self::zeros(self.rows, self.cols + 1);
        for (i, extra) in b.iter().enumerate() {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            out.set(i, self.cols, extra.clone());
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for (j, x) in v.iter().enumerate() {
                    acc += self.get(i, j).clone() * x.clone();
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form together with the pivot column indices.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            // Largest-magnitude pivot keeps intermediate fractions tame.
            let pivot_row = (row..m.rows)
                .filter(|&r| !m.get(r, col).is_zero())
                .max_by(|&a, &b| {
                    m.get(a, col)
                        .abs()
                        .partial_cmp(&m.get(b, col).abs())
                        .unwrap()
                });
            let Some(pivot_row) = pivot_row else {
                continue;
            };
            if pivot_row != row {
                for j in 0..m.cols {
                    let a = m.get(row, j).clone();
                    let b = m.get(pivot_row, j).clone();
                    m.set(row, j, b);
                    m.set(pivot_row, j, a);
                }
            }
            let pivot = m.get(row, col).clone();
            for j in col..m.cols {
                let val = m.get(row, j).clone() / pivot.clone();
                m.set(row, j, val);
            }
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let factor = m.get(r, col).clone();
                    for j in col..m.cols {
                        let val = m.get(r, j).clone() - factor.clone() * m.get(row, j).clone();
                        m.set(r, j, val);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Exact rank via Gaussian elimination.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Exact basis of the right nullspace, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        let (r, pivots) = self.rref();
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_set.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![Rat::zero(); self.cols];
            v[f] = Rat::one();
            for (row_idx, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row_idx, f).clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Exact basis of the left nullspace.
    pub fn left_nullspace(&self) -> Vec<Vec<Rat>> {
        self.transpose().nullspace()
    }

    /// True iff `m x = b` has an exact solution.
    pub fn is_consistent(&self, b: &[Rat]) -> bool {
        self.rank() == self.augmented(b).rank()
    }
}

/// Exact configuration from double-precision coordinates: each double maps
/// to the dyadic rational it represents, so the certified object is exactly
/// the parsed input.
pub fn configuration_to_rational(c: &Configuration<f64>) -> Result<Configuration<Rat>, ExactError> {
    let positions = c
        .positions()
        .iter()
        .map(|p| {
            Ok(Vector3::new(
                Rat::from_f64(p.x).ok_or(ExactError::NonFinite)?,
                Rat::from_f64(p.y).ok_or(ExactError::NonFinite)?,
                Rat::from_f64(p.z).ok_or(ExactError::NonFinite)?,
            ))
        })
        .collect::<Result<Vec<_>, ExactError>>()?;
    Ok(Configuration::new(c.framework().clone(), positions)?)
}

/// Exact rigidity matrix: one row per edge, `x_i - x_j` in block `i` and its
/// negative in block `j`.
pub fn rational_rigidity_matrix(c: &Configuration<Rat>) -> RatMatrix {
    let n = c.vertex_count();
    let edges = c.framework().edges();
    let mut m = RatMatrix::zeros(edges.len(), 3 * n);
    for (row, &(i, j)) in edges.iter().enumerate() {
        let d = crate::model::sub3(&c.positions()[i], &c.positions()[j]);
        for axis in 0..3 {
            m.set(row, 3 * i + axis, d[axis].clone());
            m.set(row, 3 * j + axis, -d[axis].clone());
        }
    }
    m
}

/// Generators of the trivial motions (3 translations, 3 linearized
/// rotations) stacked as columns of a `3n x 6` matrix.
pub fn rational_trivial_generators(c: &Configuration<Rat>) -> RatMatrix {
    let n = c.vertex_count();
    let mut m = RatMatrix::zeros(3 * n, 6);
    for vertex in 0..n {
        for axis in 0..3 {
            m.set(3 * vertex + axis, axis, Rat::one());
        }
        let p = &c.positions()[vertex];
        // omega x p for omega = e_x, e_y, e_z.
        let rotations = [
            [Rat::zero(), -p.z.clone(), p.y.clone()],
            [p.z.clone(), Rat::zero(), -p.x.clone()],
            [-p.y.clone(), p.x.clone(), Rat::zero()],
        ];
        for (gen, rot) in rotations.iter().enumerate() {
            for (axis, value) in rot.iter().enumerate() {
                m.set(3 * vertex + axis, 3 + gen, value.clone());
            }
        }
    }
    m
}

/// Exact first-order counts for a rational configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactFlexCounts {
    pub rank: usize,
    pub flex_dim: usize,
    pub trivial_dim: usize,
    pub nontrivial_dim: usize,
    pub stress_dim: usize,
}

/// Computes rank, flex-space, trivial, nontrivial, and stress dimensions by
/// exact elimination.
pub fn exact_flex_counts(c: &Configuration<Rat>) -> ExactFlexCounts {
    let r = rational_rigidity_matrix(c);
    let rank = r.rank();
    let flex_dim = 3 * c.vertex_count() - rank;
    let trivial_dim = rational_trivial_generators(c).rank();
    ExactFlexCounts {
        rank,
        flex_dim,
        trivial_dim,
        nontrivial_dim: flex_dim - trivial_dim,
        stress_dim: c.framework().edge_count() - rank,
    }
}

/// Exact per-edge quadratic terms `|delta xi_e|^2` feeding the next-order
/// right-hand side of the flex hierarchy.
pub fn rational_quadratic_term(
    c: &Configuration<Rat>,
    jet: &FlexJet<Rat>,
    next_order: usize,
) -> Vec<Rat> {
    let edges = c.framework().edges();
    edges
        .iter()
        .map(|&(i, j)| {
            let mut acc = Rat::zero();
            for m in 1..next_order {
                let k = next_order - m;
                if m <= jet.order() && k <= jet.order() {
                    let dm = jet.field(m).edge_difference(i, j);
                    let dk = jet.field(k).edge_difference(i, j);
                    acc += crate::model::dot3(&dm, &dk);
                }
            }
            acc
        })
        .collect()
}

/// Builds a rational flex field from integer numerator/denominator triples.
pub fn flex_field_from_i64(vectors: &[[i64; 3]]) -> FlexField<Rat> {
    FlexField::new(
        vectors
            .iter()
            .map(|v| Vector3::new(rat_int(v[0]), rat_int(v[1]), rat_int(v[2])))
            .collect(),
    )
}

/// Exact configuration from integer coordinates.
pub fn configuration_from_i64(
    framework: std::sync::Arc<Framework>,
    positions: &[[i64; 3]],
) -> Result<Configuration<Rat>, ModelError> {
    Configuration::new(
        framework,
        positions
            .iter()
            .map(|p| Vector3::new(rat_int(p[0]), rat_int(p[1]), rat_int(p[2])))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn rank_of_identity_and_singular() {
        let id = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
        ]);
        assert_eq!(id.rank(), 2);
        let ones = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
        ]);
        assert_eq!(ones.rank(), 1);
    }

    #[test]
    fn nullspace_vectors_annihilate() {
        let m = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(3)],
            vec![rat_int(2), rat_int(4), rat_int(6)],
        ]);
        let basis = m.nullspace();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn consistency_detects_obstruction() {
        let m = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(0)],
        ]);
        assert!(m.is_consistent(&[rat_int(3), rat_int(0)]));
        assert!(!m.is_consistent(&[rat_int(0), rat_int(1)]));
    }

    #[test]
    fn dyadic_conversion_is_exact() {
        let fw = Arc::new(Framework::new(2, vec![(0, 1)]).unwrap());
        let c = Configuration::new(
            fw,
            vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.5, 0.25, -0.125)],
        )
        .unwrap();
        let rc = configuration_to_rational(&c).unwrap();
        assert_eq!(rc.positions()[1].x, rat(1, 2));
        assert_eq!(rc.positions()[1].z, rat(-1, 8));
    }

    #[test]
    fn trivial_generators_have_rank_six_for_generic_points() {
        let fw = Arc::new(Framework::new(4, vec![(0, 1)]).unwrap());
        let c = configuration_from_i64(fw, &[[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]]).unwrap();
        assert_eq!(rational_trivial_generators(&c).rank(), 6);
    }

    #[test]
    fn trivial_generators_degenerate_for_collinear_points() {
        let fw = Arc::new(Framework::new(2, vec![(0, 1)]).unwrap());
        let c = configuration_from_i64(fw, &[[0, 0, 0], [1, 0, 0]]).unwrap();
        assert_eq!(rational_trivial_generators(&c).rank(), 5);
        let fw1 = Arc::new(Framework::new(1, vec![]).unwrap());
        let c1 = configuration_from_i64(fw1, &[[2, 3, 4]]).unwrap();
        assert_eq!(rational_trivial_generators(&c1).rank(), 3);
    }
}
