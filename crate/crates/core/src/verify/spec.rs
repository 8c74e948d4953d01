use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Tolerances;
use crate::error::{Error, Result};
use crate::grid::Shape;

/// Which suites to run and with what inputs. Sections left out are not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Per-check artifacts go below this directory when set.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub main_theorem: Option<MainTheoremSpec>,
    #[serde(default)]
    pub inclusion: Option<InclusionSpec>,
    #[serde(default)]
    pub lemmas: Option<LemmasSpec>,
    #[serde(default)]
    pub lab: Option<LabSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MainTheoremSpec {
    pub shapes: Vec<Shape>,
    pub p: Vec<f64>,
    pub n: usize,
    pub half_width: f64,
    pub max_outer_iter: usize,
}

impl Default for MainTheoremSpec {
    fn default() -> Self {
        MainTheoremSpec {
            shapes: vec![Shape::disk(1.0)],
            p: vec![2.0],
            n: 128,
            half_width: 4.0,
            max_outer_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InclusionSpec {
    pub shapes: Vec<Shape>,
    pub p: f64,
    pub n: usize,
    pub half_width: f64,
    pub max_outer_iter: usize,
}

impl Default for InclusionSpec {
    fn default() -> Self {
        InclusionSpec {
            shapes: vec![Shape::lshape(2.0, 2.0, 1.0), two_squares()],
            p: 2.0,
            n: 128,
            half_width: 4.0,
            max_outer_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmasSpec {
    pub n: usize,
    pub half_width: f64,
    pub p: Vec<f64>,
    pub random_triples: usize,
    /// Grid of the descent runs whose free boundaries feed the graph
    /// curvature check.
    pub curvature_n: usize,
}

impl Default for LemmasSpec {
    fn default() -> Self {
        LemmasSpec {
            n: 256,
            half_width: 4.0,
            p: vec![1.5, 2.0, 3.0],
            random_triples: 5,
            curvature_n: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabSpec {
    pub matrix_trials: usize,
    pub max_dim: usize,
    pub inf_convolution_trials: usize,
    pub profile_samples: usize,
}

impl Default for LabSpec {
    fn default() -> Self {
        LabSpec {
            matrix_trials: 1000,
            max_dim: 6,
            inf_convolution_trials: 500,
            profile_samples: 64,
        }
    }
}

/// Two unit squares meeting only through their hull.
pub fn two_squares() -> Shape {
    Shape::Union(vec![
        Shape::Square { center: [-0.7, -0.4], side: 1.0 },
        Shape::Square { center: [0.7, 0.4], side: 1.0 },
    ])
}

/// Names accepted by [`SuiteSpec::builtin`].
pub const BUILTIN_SUITES: [&str; 6] = ["main", "convexity", "inclusion", "lemmas", "lab", "full"];

impl SuiteSpec {
    fn empty(name: &str) -> Self {
        SuiteSpec {
            name: name.to_string(),
            seed: 0,
            out_dir: None,
            tolerances: Tolerances::default(),
            main_theorem: None,
            inclusion: None,
            lemmas: None,
            lab: None,
        }
    }

    /// `main` runs the convexity and uniqueness checks on a disk core;
    /// `convexity` widens that to square and ellipse cores and three exponents;
    /// `full` runs every section.
    pub fn builtin(name: &str) -> Result<Self> {
        let mut s = Self::empty(name);
        let wide = MainTheoremSpec {
            shapes: vec![Shape::disk(1.0), Shape::square(2.0), Shape::ellipse(1.2, 0.8)],
            p: vec![1.5, 2.0, 3.0],
            n: 256,
            ..Default::default()
        };
        match name {
            "main" => s.main_theorem = Some(MainTheoremSpec::default()),
            "convexity" => s.main_theorem = Some(wide),
            "inclusion" => s.inclusion = Some(InclusionSpec::default()),
            "lemmas" => s.lemmas = Some(LemmasSpec::default()),
            "lab" => s.lab = Some(LabSpec::default()),
            "full" => {
                s.main_theorem = Some(wide);
                s.inclusion = Some(InclusionSpec::default());
                s.lemmas = Some(LemmasSpec::default());
                s.lab = Some(LabSpec::default());
            }
            _ => {
                return Err(Error::invalid(
                    "suite",
                    format!("unknown suite `{name}`; expected a file or one of {}", BUILTIN_SUITES.join(", ")),
                ))
            }
        }
        if name == "lab" || name == "full" {
            s.seed = 7;
        }
        Ok(s)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SuiteSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// A builtin name or the path of a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if BUILTIN_SUITES.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        if path.extension().is_some() || path.components().count() > 1 {
            return Self::load(path);
        }
        Self::builtin(name_or_path)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        let p_ok = |p: f64| p > 1.0 && p.is_finite();
        if let Some(m) = &self.main_theorem {
            if m.shapes.is_empty() || m.p.is_empty() {
                return Err(Error::invalid("main_theorem", "needs at least one shape and one p"));
            }
            if let Some(p) = m.p.iter().find(|&&p| !p_ok(p)) {
                return Err(Error::invalid("main_theorem.p", format!("{p} must exceed 1")));
            }
            for s in &m.shapes {
                s.validate()?;
            }
        }
        if let Some(i) = &self.inclusion {
            if !p_ok(i.p) {
                return Err(Error::invalid("inclusion.p", format!("{} must exceed 1", i.p)));
            }
            for s in &i.shapes {
                s.validate()?;
            }
        }
        if let Some(l) = &self.lemmas {
            if let Some(p) = l.p.iter().find(|&&p| !p_ok(p)) {
                return Err(Error::invalid("lemmas.p", format!("{p} must exceed 1")));
            }
        }
        if let Some(l) = &self.lab {
            if l.max_dim == 0 {
                return Err(Error::invalid("lab.max_dim", "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let s = SuiteSpec::from_toml_str(
            r#"
            name = "custom"
            seed = 3
            [tolerances]
            convexity_deficit = 0.02
            [main_theorem]
            shapes = ["disk:1", "square:2"]
            p = [2.0]
            n = 64
            "#,
        )
        .unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.tolerances.convexity_deficit, 0.02);
        let m = s.main_theorem.unwrap();
        assert_eq!(m.shapes[1], Shape::square(2.0));
        assert_eq!(m.half_width, 4.0);
        assert!(s.lab.is_none());
        assert!(SuiteSpec::from_toml_str("name = \"x\"\nbogus = 1\n").is_err());
        assert!(SuiteSpec::from_toml_str("name = \"x\"\n[lab]\nmatrix_trial = 1\n").is_err());
        assert!(SuiteSpec::from_toml_str("name = \"x\"\n[main_theorem]\np = [1.0]\n").is_err());
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_SUITES {
            assert!(SuiteSpec::resolve(name).unwrap().validate().is_ok());
        }
        assert!(SuiteSpec::resolve("nope").is_err());
        assert!(matches!(SuiteSpec::resolve("missing/suite.toml"), Err(Error::Io(_))));
    }
}
