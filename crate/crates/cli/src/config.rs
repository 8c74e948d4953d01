//! Config file ingestion and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use fbconvex::grid::Shape;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Flags shared by every command. Unset flags fall back to the config file,
/// then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Cells per side of the grid.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half width of the computational box.
    #[arg(long = "radius-R")]
    pub radius_r: Option<f64>,
    /// Core shape, e.g. `disk:1`, `square:2`, `lshape:2,2,1`.
    #[arg(long)]
    pub k: Option<String>,
    /// Initial region shape.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long = "tol-fb")]
    pub tol_fb: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run every check on one thread in a fixed order.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "radius_R")]
    pub radius_r: Option<f64>,
    pub k: Option<String>,
    pub init: Option<String>,
    pub tol_fb: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub deterministic: Option<bool>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub lab: LabSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub step_scale: Option<f64>,
    pub smoothing_length: Option<f64>,
    pub max_move_cells: Option<f64>,
    pub coarse_levels: Option<usize>,
    pub reinit_every: Option<usize>,
    pub tol_energy_stall: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub a: Option<f64>,
    pub dim: Option<u32>,
    pub sweep_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSection {
    pub matrix_trials: Option<usize>,
    pub inf_convolution_trials: Option<usize>,
    pub max_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub suite: Option<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Settings common to all commands after merging file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub p: Option<f64>,
    pub n: Option<usize>,
    pub radius_r: Option<f64>,
    pub k: Option<Shape>,
    pub init: Option<Shape>,
    pub tol_fb: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub out_dir: PathBuf,
}

fn parse_shape(key: &str, spec: Option<String>) -> Result<Option<Shape>, CliError> {
    spec.map(|s| s.parse::<Shape>().map_err(|e| CliError::Usage(format!("`{key}`: {e}"))))
        .transpose()
}

impl RunConfig {
    pub fn resolve(command: &str, args: &CommonArgs) -> Result<(Self, FileConfig), CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            command: command.to_string(),
            p: args.p.or(file.p),
            n: args.n.or(file.n),
            radius_r: args.radius_r.or(file.radius_r),
            k: parse_shape("k", args.k.clone().or(file.k.clone()))?,
            init: parse_shape("init", args.init.clone().or(file.init.clone()))?,
            tol_fb: args.tol_fb.or(file.tol_fb),
            max_iter: args.max_iter.or(file.max_iter),
            seed: args.seed.or(file.seed),
            threads: args.threads.or(file.threads),
            deterministic: args.deterministic || file.deterministic.unwrap_or(false),
            out_dir: args
                .out_dir
                .clone()
                .or(file.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("fbconvex-out")),
        };
        if cfg.threads == Some(0) {
            return Err(CliError::Usage("`threads` must be at least 1".into()));
        }
        Ok((cfg, file))
    }

    /// Worker pool size: one thread in deterministic mode.
    pub fn pool_size(&self) -> Option<usize> {
        if self.deterministic {
            Some(1)
        } else {
            self.threads
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("fbconvex-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "p = 3.0\nn = 64\nk = \"square:2\"\n[oracle]\na = 2.0\n").unwrap();
        let args = CommonArgs {
            config: Some(path.clone()),
            n: Some(96),
            ..Default::default()
        };
        let (cfg, file) = RunConfig::resolve("solve", &args).unwrap();
        assert_eq!(cfg.p, Some(3.0));
        assert_eq!(cfg.n, Some(96));
        assert_eq!(cfg.k, Some(Shape::square(2.0)));
        assert_eq!(file.oracle.a, Some(2.0));
        std::fs::write(&path, "p = 3.0\nspeed = 1\n").unwrap();
        let err = RunConfig::resolve("solve", &args).unwrap_err().to_string();
        assert!(err.contains("speed"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }
}
