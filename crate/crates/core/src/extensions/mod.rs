//! Variable-density and buoyancy-driven extensions of the planar solver,
//! with the scalar contraction check shared by both uniqueness pipelines.

mod boussinesq;
mod contraction;
mod inhom;
mod transport;

pub use boussinesq::{
    boussinesq_solve, boussinesq_uniqueness_experiment, BoussinesqReport, BoussinesqState,
    BoussinesqTrajectory,
};
pub use contraction::{density_contraction_check, ContractionReport, ContractionSeries, ScalarRunView};
pub use inhom::{
    inhom_solve, inhom_uniqueness_experiment, InhomReport, InhomState,
    InhomTrajectory, PCG_MAX_ITERATIONS, PCG_TOLERANCE,
};
pub use transport::transport_step;
pub use crate::uniqueness::weighted_relative_energy;
