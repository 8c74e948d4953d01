use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{rasterize, Region, Shape};
use crate::plap::PLapConfig;

use super::energy::{energy_with_potential, EnergyTerms};

/// A finite parametric family of candidate free boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    /// Centered ellipses with semi-axes from the two lists.
    Ellipses { a: Vec<f64>, b: Vec<f64> },
    /// Disks of the listed radii centered at `(cx, 0)`.
    OffsetDisks { radius: Vec<f64>, cx: Vec<f64> },
}

impl ShapeFamily {
    /// Evenly spaced values from `lo` to `hi` inclusive.
    pub fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let m = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=m).map(|i| lo + i as f64 * step).collect()
    }

    pub fn members(&self) -> Vec<(Vec<f64>, Shape)> {
        match self {
            ShapeFamily::Ellipses { a, b } => a
                .iter()
                .flat_map(|&a| b.iter().map(move |&b| (vec![a, b], Shape::ellipse(a, b))))
                .collect(),
            ShapeFamily::OffsetDisks { radius, cx } => radius
                .iter()
                .flat_map(|&r| cx.iter().map(move |&c| (vec![r, c], Shape::disk_at([c, 0.0], r))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub params: Vec<f64>,
    pub shape: Shape,
    /// `None` when the member does not contain `K` or leaves the box.
    pub energy: Option<EnergyTerms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub entries: Vec<FamilyEntry>,
    /// Index of the feasible entry with the least total energy.
    pub best: Option<usize>,
}

impl BruteForceResult {
    pub fn best_entry(&self) -> Option<&FamilyEntry> {
        self.best.map(|i| &self.entries[i])
    }
}

/// Evaluates the total energy on every member of `family`.
pub fn parametric_bruteforce(k: &Region, p: f64, family: &ShapeFamily) -> Result<BruteForceResult> {
    let cfg = PLapConfig::with_p(p);
    cfg.validate()?;
    let grid = *k.grid();
    let entries = family
        .members()
        .into_par_iter()
        .map(|(params, shape)| {
            let evaluated = rasterize(&shape, &grid).and_then(|omega| energy_with_potential(k, &omega, &cfg, None));
            let (energy, infeasible) = match evaluated {
                Ok((terms, _)) => (Some(terms), None),
                Err(e @ (Error::Precondition(_) | Error::ShapeOutsideBox { .. } | Error::EmptyRegion)) => {
                    (None, Some(e.to_string()))
                }
                Err(Error::DegenerateShape(msg)) => (None, Some(msg)),
                Err(e) => return Err(e),
            };
            Ok(FamilyEntry {
                params,
                shape,
                energy,
                infeasible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.energy.map(|t| (i, t.total)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(BruteForceResult { entries, best })
}
