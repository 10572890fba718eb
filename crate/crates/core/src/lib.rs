//! Linking numbers of curves and flow lines on S³, the linking form `Lk_ω` of
//! invariant measures, and contact-type certification of volume-preserving flows.
//!
//! Numerical code is generic over [`num::Real`] (`f32` or `f64`); the aliases below
//! fix the common double-precision types. The Ulam discretization is `f64` only.

// Range checks are written `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod contact;
pub mod fields;
pub mod flow;
pub mod geometry;
pub mod linking;
pub mod num;
pub mod templates;
pub mod ulam;

use thiserror::Error;

pub type Point = geometry::PointS3<f64>;
pub type Point32 = geometry::PointS3<f32>;
pub type EuclideanPoint = geometry::PointR3<f64>;
pub type Curve = geometry::Polyline<f64>;
pub type Curve32 = geometry::Polyline<f32>;
pub type Field = fields::FieldSpec<f64>;
pub type Field32 = fields::FieldSpec<f32>;
pub type Trajectory = flow::Trajectory<f64>;
pub type Measure = asymptotic::MeasureSample<f64>;
pub type Linking = linking::LinkingResult<f64>;

/// Any error of the crate, for callers that drive several modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Field(#[from] fields::FieldError),
    #[error(transparent)]
    Flow(#[from] flow::FlowError),
    #[error(transparent)]
    Linking(#[from] linking::LinkingError),
    #[error(transparent)]
    Asymptotic(#[from] asymptotic::AsymptoticError),
    #[error(transparent)]
    Contact(#[from] contact::ContactError),
    #[error(transparent)]
    Ulam(#[from] ulam::UlamError),
}

impl Error {
    /// True when the inputs were valid but a computation broke down (step underflow,
    /// unresolvable near-singular kernel, degenerate projections, missing recurrences,
    /// solver failures). Everything else is a domain error in the inputs.
    pub fn is_numerical(&self) -> bool {
        use asymptotic::AsymptoticError as A;
        use flow::FlowError as F;
        use linking::LinkingError as L;
        use ulam::UlamError as U;

        let flow = |e: &F| matches!(e, F::StepUnderflow | F::EmbeddingFailure);
        let link = |e: &L| matches!(e, L::NearSingular | L::DegenerateProjection);
        match self {
            Error::Flow(e) => flow(e),
            Error::Linking(e) => link(e),
            Error::Asymptotic(A::NoRecurrence) => true,
            Error::Asymptotic(A::Flow(e)) => flow(e),
            Error::Asymptotic(A::Linking(e)) => link(e),
            Error::Ulam(U::NumericalFailure(_) | U::Infeasible) => true,
            Error::Ulam(U::Flow(e)) => flow(e),
            _ => false,
        }
    }
}
