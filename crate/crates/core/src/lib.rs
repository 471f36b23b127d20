//! Self-similar collapsing-cavity and converging-shock solutions for
//! generalized equations of state.

pub mod eos;
pub mod error;
pub mod interp;
pub mod ode;
pub mod roots;
pub mod serde_num;

pub use eos::{ConstraintSet, DensityLaw, EosModel, Family, LinearRelation, ProblemKind};
pub use error::{Error, Result};
pub mod eigen;
pub mod reconstruct;
pub mod similarity;
pub mod verify;

pub use similarity::{Exponents, FreeParam, JumpState, Parameterization, ProblemSpec, SimilarityState};
pub use eigen::{EigenProblem, EigenResult, IntegrationMode, ShootReport, SolverOptions, StopReason};
pub use reconstruct::{PhysicalSample, Region, SolutionProfile};
pub use verify::{VerificationReport, VerifyOptions};
