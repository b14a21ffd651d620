//! Spectral analysis and mistuning design for bidirectionally controlled
//! vehicle platoons.
//!
//! The crate models a string of double-integrator vehicles regulating their
//! spacing with front and back position feedback plus velocity damping. It
//! provides the exact closed-loop state-space matrices, a continuum (damped
//! wave equation) approximation solved by a Galerkin method, closed-form
//! asymptotic predictors for the least stable eigenvalue, time-domain
//! simulation and H-infinity disturbance gains.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The [`f64`] and
//! [`f32`] modules fix the precision of the domain types.

pub mod asymptotics;
pub mod error;
pub mod format;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod pde;
pub mod robustness;
pub mod scalar;
pub mod sim;
pub mod statespace;
pub mod sweep;

pub use error::{Error, Result};
pub use linalg::eigenvalues_dense;
pub use matrix::Matrix;
pub use model::{build_gain_schedule, evaluate_profile, Boundary, MistuningProfile, Scenario};
pub use scalar::Real;
pub use statespace::{analyze_spectrum, build_closed_loop, symmetric_spectrum_analytic};

macro_rules! precision_aliases {
    ($t:ty) => {
        pub type Matrix = crate::matrix::Matrix<$t>;
        pub type PlatoonConfig = crate::model::PlatoonConfig<$t>;
        pub type MistuningProfile = crate::model::MistuningProfile<$t>;
        pub type GainSchedule = crate::model::GainSchedule<$t>;
        pub type ClosedLoopModel = crate::statespace::ClosedLoopModel<$t>;
        pub type Spectrum = crate::statespace::Spectrum<$t>;
        pub type PdeDiscretization = crate::pde::PdeDiscretization<$t>;
        pub type Coefficient = crate::pde::Coefficient<$t>;
        pub type AsymptoticPrediction = crate::asymptotics::AsymptoticPrediction<$t>;
        pub type SimulationSetup = crate::sim::SimulationSetup<$t>;
        pub type TrajectoryResult = crate::sim::TrajectoryResult<$t>;
        pub type HinfResult = crate::robustness::HinfResult<$t>;
        pub type SweepSpec = crate::sweep::SweepSpec<$t>;
    };
}

/// Domain types in double precision.
pub mod f64 {
    precision_aliases!(f64);
}

/// Domain types in single precision.
pub mod f32 {
    precision_aliases!(f32);
}
