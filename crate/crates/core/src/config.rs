//! Experiment configuration files.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::ConvergenceTolerances;
use crate::boucwen::BoucWenParams;
use crate::error::{DuhemError, Result};
use crate::families::PowerLawSpec;
use crate::integrator::{product_grid, IntegratorConfig};
use crate::model::{DuhemSystem, State, ValidationGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SystemSpec {
    BoucWen { params: BoucWenParams },
    PowerLaw(PowerLawSpec),
}

impl SystemSpec {
    pub fn build(&self) -> Result<DuhemSystem> {
        match self {
            SystemSpec::BoucWen { params } => params.to_duhem(),
            SystemSpec::PowerLaw(spec) => spec.build(),
        }
    }

    pub fn boucwen(&self) -> Option<&BoucWenParams> {
        match self {
            SystemSpec::BoucWen { params } => Some(params),
            SystemSpec::PowerLaw(_) => None,
        }
    }
}

/// Initial conditions, in the simulation coordinates (rescaled `z` for
/// Bouc-Wen systems).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Single {
        state: [f64; 3],
    },
    Grid {
        lo: [f64; 3],
        hi: [f64; 3],
        counts: [usize; 3],
    },
    Random {
        lo: [f64; 3],
        hi: [f64; 3],
        count: usize,
        seed: u64,
    },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Single { state: [1.0, 1.0, 0.0] }
    }
}

impl InitialSpec {
    /// The seed actually used, with `seed_override` taking precedence.
    pub fn seed(&self, seed_override: Option<u64>) -> Option<u64> {
        match self {
            InitialSpec::Random { seed, .. } => Some(seed_override.unwrap_or(*seed)),
            _ => None,
        }
    }

    pub fn states(&self, seed_override: Option<u64>) -> Result<Vec<State>> {
        let out = match self {
            InitialSpec::Single { state } => vec![State::from(*state)],
            InitialSpec::Grid { lo, hi, counts } => product_grid(State::from(*lo), State::from(*hi), *counts),
            InitialSpec::Random { lo, hi, count, seed } => {
                if (0..3).any(|i| !(lo[i] < hi[i])) {
                    return Err(DuhemError::Config(
                        "random initial box needs lo < hi in every coordinate".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed_override.unwrap_or(*seed));
                (0..*count)
                    .map(|_| {
                        State::new(
                            rng.random_range(lo[0]..hi[0]),
                            rng.random_range(lo[1]..hi[1]),
                            rng.random_range(lo[2]..hi[2]),
                        )
                    })
                    .collect()
            }
        };
        if out.is_empty() {
            return Err(DuhemError::EmptyGrid);
        }
        if let Some(s) = out.iter().find(|s| !s.is_finite()) {
            return Err(DuhemError::Config(format!("initial state {s:?} is not finite")));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveRange {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for CurveRange {
    fn default() -> Self {
        CurveRange {
            lo: -5.0,
            hi: 5.0,
            samples: 200,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquilibriaSpec {
    /// Offsets `L = z∞ − x∞` for which to predict rest points.
    pub limits: Vec<f64>,
    pub curve: CurveRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: ConvergenceTolerances,
    #[serde(default)]
    pub validation: ValidationGrid,
    #[serde(default)]
    pub equilibria: EquilibriaSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn new(system: SystemSpec) -> Self {
        ExperimentConfig {
            system,
            initial: InitialSpec::default(),
            integrator: IntegratorConfig::default(),
            analysis: ConvergenceTolerances::default(),
            validation: ValidationGrid::default(),
            equilibria: EquilibriaSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DuhemError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            DuhemError::Config(m) => DuhemError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn check(&self) -> Result<()> {
        self.integrator.check()?;
        self.analysis.check()?;
        let v = &self.validation;
        if !(v.half_width > 0.0 && v.step > 0.0 && v.step <= v.half_width) || v.damping_stride == 0 {
            return Err(DuhemError::Config(
                "validation grid needs 0 < step ≤ half_width and stride ≥ 1".into(),
            ));
        }
        let c = &self.equilibria.curve;
        if !(c.lo < c.hi) || c.samples == 0 {
            return Err(DuhemError::Config(
                "equilibria curve range needs lo < hi and samples ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Reads a bare Bouc-Wen parameter file `{"A": …, "beta": …, …}`.
pub fn load_boucwen(path: &Path) -> Result<BoucWenParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DuhemError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| DuhemError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_boucwen_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"family": "bouc_wen", "params":
                {"A": 1, "beta": 0.5, "gamma": 0.5, "n": 2, "alpha": 0.5, "k": 1, "D": 1, "m": 1, "b": 0.2}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.system.boucwen().unwrap().b, 0.2);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert_eq!(cfg.initial.states(None).unwrap(), vec![State::new(1.0, 1.0, 0.0)]);
    }

    #[test]
    fn power_law_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"family": "power_law", "h1": {"kappa": 1, "p": 3}, "h2": {"kappa": 1, "p": 1},
                "damping": {"kind": "linear", "coef": 0.4}},
                "initial": {"kind": "grid", "lo": [-1, -1, -1], "hi": [1, 1, 1], "counts": [2, 2, 2]}}"#,
        )
        .unwrap();
        assert!(cfg.system.boucwen().is_none());
        assert_eq!(cfg.initial.states(None).unwrap().len(), 8);
        cfg.system.build().unwrap();
    }

    #[test]
    fn random_initials_follow_the_seed() {
        let spec = InitialSpec::Random {
            lo: [-1.0; 3],
            hi: [1.0; 3],
            count: 5,
            seed: 3,
        };
        assert_eq!(spec.states(None).unwrap(), spec.states(Some(3)).unwrap());
        assert_ne!(spec.states(None).unwrap(), spec.states(Some(4)).unwrap());
        assert_eq!(spec.seed(Some(9)), Some(9));
        assert_eq!(InitialSpec::default().seed(Some(9)), None);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            "{",
            r#"{"system": {"family": "duffing"}}"#,
            r#"{"system": {"family": "power_law", "h1": {"kappa": 1, "p": 3}, "h2": {"kappa": 1, "p": 1}, "damping": {"kind": "none"}}, "typo": 1}"#,
            r#"{"system": {"family": "power_law", "h1": {"kappa": 1, "p": 3}, "h2": {"kappa": 1, "p": 1}, "damping": {"kind": "none"}}, "integrator": {"rtol": -1}}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(DuhemError::Config(_))),
                "{text}"
            );
        }
        let empty = InitialSpec::Random {
            lo: [0.0; 3],
            hi: [1.0; 3],
            count: 0,
            seed: 1,
        };
        assert!(matches!(empty.states(None), Err(DuhemError::EmptyGrid)));
    }
}
