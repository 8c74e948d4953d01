//! Outer minimization of the free boundary functional: energy evaluation,
//! the free boundary residual, level-set descent and a parametric oracle.

mod bruteforce;
mod energy;
mod levelset;
mod minimize;
mod residual;

pub use bruteforce::{parametric_bruteforce, BruteForceResult, FamilyEntry, ShapeFamily};
pub use energy::{total_energy, EnergyTerms};
pub use minimize::{minimize, MinimizeConfig, MinimizerReport, ResidualStats, TraceRow};
pub use residual::{fb_residual, fb_residual_of, FbResidual, ResidualSample};
pub use crate::plap::radial_optimal_radius;
