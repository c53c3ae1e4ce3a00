//! Ground states of linearly coupled nonlinear Schrodinger systems
//!
//! ```text
//! -Lap u + V1(x) u = mu |u|^(p-2) u + lambda(x) v
//! -Lap v + V2(x) v =    |v|^(q-2) v + lambda(x) u
//! ```
//!
//! computed by minimizing the energy over the Nehari manifold on a truncated
//! grid, together with checks of the structural assumptions on the
//! potentials, the critical-threshold sweep, the periodic versus asymptotic
//! comparison and the Pohozaev residual.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fingerprint;
pub mod functional;
pub mod grid;
pub mod io;
pub mod nehari;
pub mod potentials;
pub mod solver;

pub use diagnostics::{
    bubble_pair, nonexistence_certificate, pohozaev_residual, potential_form, NonexistenceCertificate, PohozaevOptions, PohozaevReport,
};
pub use error::{Error, Result};
pub use field::FieldPair;
pub use functional::{energy, energy_gradient, nehari_value, quadratic_form, EnergyBreakdown, ProblemSpec, Regime};
pub use grid::{build_grid, Boundary, Grid, GridShape, GridSpec, LaplacianMode};
pub use nehari::{fibering_scale, nehari_project, FiberingDiagnostics};
pub use potentials::{
    estimate_nu, sample_potentials, validate_assumptions, PotentialDef, PotentialDefs, PotentialSet,
    ValidationMode, ValidationOptions, ValidationReport,
};
pub use solver::{
    compare_energies, estimate_sobolev_constant, minimize_from, minimize_ground_state, sweep_mu, ComparisonReport,
    InitKind, MuSweep, SobolevEstimate, SobolevOptions, SolveOptions, SolveReport, SweepOptions,
};
