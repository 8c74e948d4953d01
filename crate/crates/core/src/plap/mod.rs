//! p-capacitary potentials of ring domains and the analytic checks built on
//! them.

mod barrier;
mod discrete;
mod energy;
mod extension;
mod hopf;
mod qlap;
mod radial;
mod solver;
mod sparse;
mod stencil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use barrier::{
    barrier_subsolution_check, barrier_subsolution_check_with, construct_barrier, fit_zeta_envelope, BarrierProfile,
};
pub use energy::p_energy;
pub use extension::{extension_inequality_report, extension_terms, ExtensionTerms};
pub use hopf::hopf_growth_fit;
pub use qlap::q_laplacian_sign_check;
pub use radial::{
    radial_capacity, radial_extension_terms, radial_gradient, radial_optimal_radius, radial_potential, sphere_area,
};
pub(crate) use solver::solve_p_capacitary_warm;
pub use solver::{solve_p_capacitary, solve_p_capacitary_from, CapacitaryPotential, Scheme, SweepOrder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PLapConfig {
    pub p: f64,
    /// Gradient regularization; `None` means `1e-6 / h`.
    pub eps_reg: Option<f64>,
    pub tol_rel_energy: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
}

impl Default for PLapConfig {
    fn default() -> Self {
        PLapConfig {
            p: 2.0,
            eps_reg: None,
            tol_rel_energy: 1e-12,
            max_iter: 200,
            scheme: Scheme::Newton,
        }
    }
}

impl PLapConfig {
    pub fn with_p(p: f64) -> Self {
        PLapConfig { p, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid("p", format!("{} must satisfy 1 < p < inf", self.p)));
        }
        if let Some(e) = self.eps_reg {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::invalid("eps_reg", "must be positive"));
            }
        }
        if !(self.tol_rel_energy > 0.0) {
            return Err(Error::invalid("tol_rel_energy", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}
