use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tolerance used by the suites. Lengths given in cells are multiplied
/// by the grid spacing of the check that uses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub convexity_deficit: f64,
    pub hausdorff_cells: f64,
    pub fb_residual: f64,
    pub graph_curvature: f64,
    pub extension_relative: f64,
    pub q_laplacian: f64,
    pub hopf_relative: f64,
    pub barrier: f64,
    pub barrier_identity: f64,
    pub block_reduction: f64,
    pub concavity: f64,
    pub affine: f64,
    pub inf_convolution: f64,
    pub harmonic_identity: f64,
    pub trace_equality: f64,
    pub inclusion_slack_cells: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            convexity_deficit: 1e-2,
            hausdorff_cells: 2.0,
            fb_residual: 0.1,
            graph_curvature: 0.1,
            extension_relative: 0.03,
            q_laplacian: 0.05,
            hopf_relative: 0.05,
            barrier: 0.05,
            barrier_identity: 1e-8,
            block_reduction: 0.05,
            concavity: 1e-6,
            affine: 1e-6,
            inf_convolution: 1e-6,
            harmonic_identity: 1e-10,
            trace_equality: 1e-10,
            inclusion_slack_cells: 2.0,
        }
    }
}

impl Tolerances {
    /// Overrides one entry by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::invalid(name, "tolerances must be finite and non-negative"));
        }
        let mut map = match serde_json::to_value(&*self)? {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("tolerances serialize to a map"),
        };
        if !map.contains_key(name) {
            return Err(Error::invalid(name, "unknown tolerance"));
        }
        map.insert(name.to_string(), value.into());
        *self = serde_json::from_value(serde_json::Value::Object(map))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self)?;
        for (k, v) in value.as_object().into_iter().flatten() {
            let v = v.as_f64().unwrap_or(f64::NAN);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(k.as_str(), "tolerances must be finite and non-negative"));
            }
        }
        Ok(())
    }
}
