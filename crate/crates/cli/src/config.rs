//! JSON experiment configurations. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};
use tempered_ld::ldp::{ScalingSpec, ThetaLimit};
use tempered_ld::{LevyExponent, ParamSet};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// Rate function values on a grid.
    Rate {
        params: ParamSet<f64>,
        kind: RateKindConfig,
        x: Grid,
        #[serde(default)]
        output_path: Option<String>,
    },
    /// Closed-form against numeric Legendre transform of the cumulant.
    Conjugate {
        params: ParamSet<f64>,
        x: Grid,
        #[serde(default)]
        output_path: Option<String>,
    },
    /// `log E_γ(x)` on a grid.
    Mlf {
        gamma: f64,
        x: Grid,
        #[serde(default)]
        output_path: Option<String>,
    },
    Simulate {
        params: ParamSet<f64>,
        task: SimTask,
        n: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        output_path: Option<String>,
    },
    Verify {
        experiment: Experiment,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        output_path: Option<String>,
    },
    /// Rate function `H` of `X(T(t))/t`.
    Timechange {
        params: ParamSet<f64>,
        levy: LevyConfig,
        x: Grid,
        #[serde(default)]
        output_path: Option<String>,
    },
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    pub fn command(&self) -> &'static str {
        match self {
            ExperimentConfig::Rate { .. } => "rate",
            ExperimentConfig::Conjugate { .. } => "conjugate",
            ExperimentConfig::Mlf { .. } => "mlf",
            ExperimentConfig::Simulate { .. } => "simulate",
            ExperimentConfig::Verify { .. } => "verify",
            ExperimentConfig::Timechange { .. } => "timechange",
        }
    }

    pub fn output_path(&self) -> Option<&str> {
        match self {
            ExperimentConfig::Rate { output_path, .. }
            | ExperimentConfig::Conjugate { output_path, .. }
            | ExperimentConfig::Mlf { output_path, .. }
            | ExperimentConfig::Simulate { output_path, .. }
            | ExperimentConfig::Verify { output_path, .. }
            | ExperimentConfig::Timechange { output_path, .. } => output_path.as_deref(),
        }
    }

    pub fn set_output_path(&mut self, path: String) {
        match self {
            ExperimentConfig::Rate { output_path, .. }
            | ExperimentConfig::Conjugate { output_path, .. }
            | ExperimentConfig::Mlf { output_path, .. }
            | ExperimentConfig::Simulate { output_path, .. }
            | ExperimentConfig::Verify { output_path, .. }
            | ExperimentConfig::Timechange { output_path, .. } => *output_path = Some(path),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Simulate { seed, .. } | ExperimentConfig::Verify { seed, .. } => {
                *seed
            }
            _ => None,
        }
    }

    /// Overrides the seed; ignored by deterministic commands.
    pub fn set_seed(&mut self, s: u64) {
        if let ExperimentConfig::Simulate { seed, .. } | ExperimentConfig::Verify { seed, .. } =
            self
        {
            *seed = Some(s);
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match self {
            ExperimentConfig::Simulate { .. } => true,
            ExperimentConfig::Verify { experiment, .. } => {
                matches!(experiment, Experiment::Tail { .. })
            }
            _ => false,
        }
    }

    /// Checks that need more than the JSON shape.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if self.is_stochastic() && self.seed().is_none() {
            return bad(format!(
                "'{}' needs a seed (config \"seed\" or --seed)",
                self.command()
            ));
        }
        match self {
            ExperimentConfig::Rate { x, .. }
            | ExperimentConfig::Conjugate { x, .. }
            | ExperimentConfig::Mlf { x, .. }
            | ExperimentConfig::Timechange { x, .. } => {
                x.points()?;
            }
            ExperimentConfig::Simulate { n, .. } if *n == 0 => {
                return bad("n must be positive".into())
            }
            ExperimentConfig::Verify {
                experiment: Experiment::Tail { n, .. },
                ..
            } if *n == 0 => return bad("n must be positive".into()),
            _ => {}
        }
        Ok(())
    }
}

/// Either explicit points or `n` equally spaced points from `start` to `stop`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            Grid::Points(v) => v.clone(),
            Grid::Range(r) => {
                if r.n == 0 {
                    return Err(CliError::ConfigInvalid("grid needs n ≥ 1".into()));
                }
                tempered_ld::conjugate::lin_grid(r.start, r.stop, r.n)
            }
        };
        if pts.is_empty() || pts.iter().any(|x| !x.is_finite()) {
            return Err(CliError::ConfigInvalid(
                "grid must be nonempty and finite".into(),
            ));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKindConfig {
    /// `κ*`, rate of `S(t)/t`.
    KappaStar,
    /// `Ψ`, rate of `T(t)/t`.
    Psi,
    /// `Λ`, limiting scaled log-MGF of `T(t)/t`.
    LambdaInv,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyConfig {
    Drift { mu: f64 },
    BrownianDrift { mu: f64, sigma: f64 },
    CompoundPoissonExp { rate: f64, mean: f64 },
}

impl LevyConfig {
    pub fn exponent(&self) -> LevyExponent<f64> {
        match *self {
            LevyConfig::Drift { mu } => LevyExponent::Drift { mu },
            LevyConfig::BrownianDrift { mu, sigma } => LevyExponent::BrownianDrift { mu, sigma },
            LevyConfig::CompoundPoissonExp { rate, mean } => {
                LevyExponent::CompoundPoissonExp { rate, mean }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimTask {
    /// Draws of `S(dt)`; CSV.
    Increments { dt: f64 },
    /// Whole paths; NDJSON.
    Path { horizon: f64, step: f64 },
    /// First-passage times `T(t)`; NDJSON.
    Passage {
        t: f64,
        step: f64,
        #[serde(default)]
        horizon_factor: Option<f64>,
    },
    /// `X(T(t))`; CSV.
    TimeChanged {
        levy: LevyConfig,
        t: f64,
        step: f64,
        #[serde(default)]
        horizon_factor: Option<f64>,
    },
    /// Scaled increment vectors at a given θ; CSV, one column per time.
    Scaled {
        scaling: ScalingConfig,
        theta: f64,
        times: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingConfig {
    Identical,
    Scaled {
        g: f64,
        theta_limit: ThetaLimit,
    },
    Moderate {
        g: f64,
        a_power: f64,
        theta_limit: ThetaLimit,
    },
}

impl ScalingConfig {
    pub fn resolve(&self, gamma: f64) -> Result<ScalingSpec, CliError> {
        let spec = match *self {
            ScalingConfig::Identical => Ok(ScalingSpec::identical(gamma)),
            ScalingConfig::Scaled { g, theta_limit } => ScalingSpec::scaled(gamma, g, theta_limit),
            ScalingConfig::Moderate {
                g,
                a_power,
                theta_limit,
            } => ScalingSpec::moderate(gamma, g, a_power, theta_limit),
        };
        spec.map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Tilted,
    Plain,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Residual of the θ-invariance identity.
    Invariance {
        gamma: f64,
        lambda: f64,
        thetas: Vec<f64>,
        ys: Vec<Vec<f64>>,
        times: Vec<f64>,
    },
    /// `I` and `J` at the given vectors.
    RateI {
        gamma: f64,
        lambda: f64,
        times: Vec<f64>,
        xs: Vec<Vec<f64>>,
    },
    /// `−(1/t) log P(S(t)/t ≥ x)` by Monte Carlo, compared with `κ*(x)`.
    Tail {
        params: ParamSet<f64>,
        t: f64,
        x: f64,
        n: usize,
        method: TailMethod,
    },
    /// Scaled log-MGF against the unit-θ limit, per θ and y-vector.
    Moderate {
        params: ParamSet<f64>,
        scaling: ScalingConfig,
        thetas: Vec<f64>,
        ys: Vec<Vec<f64>>,
        times: Vec<f64>,
    },
}
