//! Gain analysis, state-feedback synthesis and robust analysis of linear
//! positive systems, all reduced to linear programs solved by an embedded
//! dense simplex.
//!
//! Every algorithm is generic over [`Scalar`], implemented for `f32`, `f64`
//! and exact rationals. The aliases below fix the common choices.

pub mod error;
pub mod lp;
pub mod numlin;
pub mod scalar;
mod simplex;
pub mod system;
pub mod gains;
pub mod synthesis;
pub mod poly;
pub mod lft;
pub mod ilc;
pub mod robust;
pub mod handelman;
pub mod data;
pub mod io;
pub mod report;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};

pub type System = system::PositiveLtiSystem<f64>;
pub type SystemF32 = system::PositiveLtiSystem<f32>;
pub type ExactSystem = system::PositiveLtiSystem<Rational>;
pub type Matrix = numlin::Mat<f64>;
pub type ExactMatrix = numlin::Mat<Rational>;
pub type Lp = lp::LinearProgram<f64>;
pub type ExactLp = lp::LinearProgram<Rational>;
pub type Policy = lp::StrictnessPolicy<f64>;
pub type ExactPolicy = lp::StrictnessPolicy<Rational>;
pub type Lft = lft::LftSystem<f64>;
pub type ExactLft = lft::LftSystem<Rational>;
pub type UncertainSystem = lft::PolySystem<f64>;
pub type RobustLp = robust::RobustLinearProgram<f64>;
