use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{measure, Region, ScalarField};
use crate::plap::{solve_p_capacitary_from, solve_p_capacitary_warm, CapacitaryPotential, PLapConfig};

/// The two terms of the free boundary functional and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub dirichlet: f64,
    pub perimeter: f64,
    pub total: f64,
}

/// p-Dirichlet energy of the capacitary potential of `(k, omega)` plus the
/// perimeter of `omega`.
pub fn total_energy(k: &Region, omega: &Region, p: f64) -> Result<EnergyTerms> {
    Ok(energy_with_potential(k, omega, &PLapConfig::with_p(p), None)?.0)
}

pub(crate) fn energy_with_potential(
    k: &Region,
    omega: &Region,
    cfg: &PLapConfig,
    guess: Option<&ScalarField>,
) -> Result<(EnergyTerms, CapacitaryPotential)> {
    let pot = match guess {
        Some(g) => solve_p_capacitary_warm(k, omega, cfg, g)?,
        None => solve_p_capacitary_from(k, omega, cfg, None)?,
    };
    let perimeter = measure(omega).1;
    let terms = EnergyTerms {
        dirichlet: pot.energy,
        perimeter,
        total: pot.energy + perimeter,
    };
    Ok((terms, pot))
}
