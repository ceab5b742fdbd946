//! Computes, extends, and certifies infinitesimal flexes of bar-joint
//! frameworks and of sampled smooth surfaces.
//!
//! The crate is organized around the order-by-order flex equations: a
//! first-order flex solves the linearized length-preservation system, and a
//! jet of higher-order fields is a flex when every order's bilinear residual
//! vanishes. [`rigidity`] builds first-order flex and stress spaces,
//! [`hierarchy`] verifies and extends jets order by order (reporting stress
//! obstruction certificates when extension fails), [`tangency`] validates
//! sampled curves of nonrigid configurations and differentiates their flex
//! families into second-order extensions, and [`surface`] evaluates the same
//! residual systems for parametric grids in local coordinates. [`exact`]
//! provides rational-arithmetic rank and nullspace computations used both
//! for certification and as test oracles, and [`corpus`] holds the built-in
//! examples.

pub mod corpus;
pub mod exact;
pub mod hierarchy;
pub mod model;
pub mod numerics;
pub mod rigidity;
pub mod surface;
pub mod tangency;

pub use model::{
    edge_length_polynomial, evaluate_deformation, validate_framework, ConfigCurve, Configuration,
    CurveError, CurveSample, FlexField, FlexJet, Framework, FrameworkViolation, GridError,
    LengthPolynomial, ModelError, Ring, StepPolicy, Stress, SurfaceGrid,
};
pub use numerics::{
    cokernel_basis, least_squares_with_certificate, nullspace_basis, numerical_rank, Consistency,
    LinearSolveReport, NumericsError, ToleranceJudgment, TolerancePolicy,
};
