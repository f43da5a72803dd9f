use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clock used for the recency term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Elapsed time is counted in logical turns.
    #[default]
    Turns,
    /// Elapsed time is counted in wall-clock seconds.
    WallClock,
}

/// Where the current task vector comes from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "text")]
pub enum TaskSource {
    /// Embedding of the most recent user message in the episodic store.
    #[default]
    LatestUserMessage,
    /// Embedding of a fixed task charter.
    Charter(String),
}

/// Hyperparameters of the utility score and the decay pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDecayConfig")]
pub struct DecayConfig {
    /// Weight of recency.
    pub alpha: f64,
    /// Weight of relevance.
    pub beta: f64,
    /// Weight of normalized user utility.
    pub gamma: f64,
    /// Decay rate per turn (or per second in wall-clock mode).
    pub lambda: f64,
    /// Entries scoring strictly below this are decayed.
    pub theta_decay: f64,
    /// Top of the user-utility scale; `n_max` means "retain permanently".
    pub n_max: u32,
    /// Automatic decay runs every `cadence_turns` turns.
    pub cadence_turns: u64,
    pub time_mode: TimeMode,
    pub task_source: TaskSource,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.5,
            gamma: 0.2,
            lambda: 0.05,
            theta_decay: 0.35,
            n_max: 2,
            cadence_turns: 10,
            time_mode: TimeMode::Turns,
            task_source: TaskSource::LatestUserMessage,
        }
    }
}

impl DecayConfig {
    /// Builds a config from the three weights, the decay rate and the
    /// threshold, keeping the remaining defaults.
    pub fn new(alpha: f64, beta: f64, gamma: f64, lambda: f64, theta_decay: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            beta,
            gamma,
            lambda,
            theta_decay,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be a finite nonnegative number")));
            }
        }
        if self.alpha + self.beta + self.gamma <= 0.0 {
            return Err(Error::InvalidConfig("alpha + beta + gamma must be positive".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be a finite nonnegative number".into()));
        }
        if self.theta_decay.is_nan() {
            return Err(Error::InvalidConfig("theta_decay must be a number".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if self.cadence_turns < 1 {
            return Err(Error::InvalidConfig("cadence_turns must be at least 1".into()));
        }
        if let TaskSource::Charter(text) = &self.task_source {
            if text.trim().is_empty() {
                return Err(Error::InvalidConfig("task charter must be nonempty".into()));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawDecayConfig {
    alpha: f64,
    beta: f64,
    gamma: f64,
    lambda: f64,
    theta_decay: f64,
    #[serde(default = "default_n_max")]
    n_max: u32,
    #[serde(default = "default_cadence")]
    cadence_turns: u64,
    #[serde(default)]
    time_mode: TimeMode,
    #[serde(default)]
    task_source: TaskSource,
}

fn default_n_max() -> u32 {
    2
}

fn default_cadence() -> u64 {
    10
}

impl TryFrom<RawDecayConfig> for DecayConfig {
    type Error = Error;

    fn try_from(raw: RawDecayConfig) -> Result<Self> {
        let cfg = DecayConfig {
            alpha: raw.alpha,
            beta: raw.beta,
            gamma: raw.gamma,
            lambda: raw.lambda,
            theta_decay: raw.theta_decay,
            n_max: raw.n_max,
            cadence_turns: raw.cadence_turns,
            time_mode: raw.time_mode,
            task_source: raw.task_source,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DecayConfig::default().validate().unwrap();
    }

    #[test]
    fn all_zero_weights_rejected() {
        assert!(matches!(DecayConfig::new(0.0, 0.0, 0.0, 0.1, 0.35), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn negative_weight_and_lambda_rejected() {
        assert!(DecayConfig::new(-0.1, 0.5, 0.2, 0.1, 0.35).is_err());
        assert!(DecayConfig::new(0.3, 0.5, 0.2, -1.0, 0.35).is_err());
    }

    #[test]
    fn zero_cadence_and_n_max_rejected() {
        let mut c = DecayConfig::default();
        c.cadence_turns = 0;
        assert!(c.validate().is_err());
        let mut c = DecayConfig::default();
        c.n_max = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = DecayConfig::default();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DecayConfig>(&json).unwrap(), c);

        let bad = r#"{"alpha":0,"beta":0,"gamma":0,"lambda":0.1,"theta_decay":0.3}"#;
        assert!(serde_json::from_str::<DecayConfig>(bad).is_err());
    }

    #[test]
    fn charter_source_serializes_tagged() {
        let mut c = DecayConfig::default();
        c.task_source = TaskSource::Charter("ship the plan".into());
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["task_source"]["mode"], "charter");
        assert_eq!(v["task_source"]["text"], "ship the plan");
    }
}
