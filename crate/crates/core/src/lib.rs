//! Numerical toolkit for incompressible Euler weak solutions on the periodic
//! box: spectral calculus, mollification, Besov regularity estimates,
//! commutator scaling, a pseudo-spectral solver and relative-energy
//! uniqueness certificates.

pub mod besov;
pub mod calculus;
pub mod commutator;
pub mod error;
pub mod extensions;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod mollify;
pub mod rng;
pub mod snapshot;
pub mod solver;
pub mod synth;
pub mod uniqueness;

pub use error::{Error, Result};
pub use field::{lp_norm, resample_scalar, resample_velocity, Field, ScalarField, TensorField, VelocityField};
pub use grid::{make_grid, PeriodicGrid};
pub use mollify::{make_kernel, mollify, MollifierKernel, Mollify};
pub use besov::{besov_seminorm, fit_regularity_exponent, translation_difference_norm, BesovEstimate, ShiftPolicy};
pub use synth::{lacunary_field, random_divfree, shear_flow, synthesize, synthesize_scalar, taylor_green, ScalarSpec, SynthKind, SynthSpec};
pub use commutator::{cet_trilinear, convective_commutator, scaling_experiment, Quantity, ScalingFields, ScalingReport};
pub use solver::{admissibility_check, recover_pressure, solve, step, weak_residual, SolverConfig, SolverState, Trajectory, WeakTestFunction};
pub use uniqueness::{analyze_pair, gronwall_certify, one_sided_lipschitz, one_sided_lipschitz_of_gradient, relative_energy, uniqueness_experiment, BudgetPath, GronwallCertificate, UniquenessConfig, UniquenessReport, Verdict};
pub use extensions::{boussinesq_solve, boussinesq_uniqueness_experiment, inhom_solve, inhom_uniqueness_experiment, transport_step};
pub use snapshot::{read_snapshot, read_velocity, write_snapshot, write_velocity, SnapshotManifest};
