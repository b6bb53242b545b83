use super::config::{BetaSchedule, TransferConfig};
use super::selection::SelectionRule;
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::rollout::{Budget, GaeConfig};

/// Named default hyperparameters for the benchmark families the method was
/// originally tuned on.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub ppo: PpoConfig,
    pub transfer: TransferConfig,
}

pub const PRESET_NAMES: [&str; 4] = ["reacher", "deepracer-single", "deepracer-multi", "starcraft"];

fn transfer(beta0: f64, zeta: f64, iterations: u64, teacher_budget: Budget) -> TransferConfig {
    let mut t = TransferConfig::new(
        vec![BetaSchedule { beta0, decay: 0.95 }],
        SelectionRule::Threshold { zeta },
        teacher_budget,
    );
    t.repaint_iterations = iterations;
    t
}

pub fn preset(name: &str) -> Result<Preset> {
    let deepracer = |iterations| Preset {
        name: if iterations == 4 { "deepracer-single" } else { "deepracer-multi" },
        ppo: PpoConfig {
            epochs: 8,
            entropy_coef: 1e-3,
            gae: GaeConfig {
                gamma: 0.999,
                lambda: 0.95,
            },
            rollout_steps: None,
            rollout_episodes: Some(20),
            ..PpoConfig::default()
        },
        transfer: transfer(0.2, 0.2, iterations, Budget::Episodes(2)),
    };
    match name {
        "reacher" => Ok(Preset {
            name: "reacher",
            ppo: PpoConfig::default(),
            transfer: transfer(0.2, 0.8, 15, Budget::Steps(2048)),
        }),
        "deepracer-single" => Ok(deepracer(4)),
        "deepracer-multi" => Ok(deepracer(20)),
        "starcraft" => Ok(Preset {
            name: "starcraft",
            ppo: PpoConfig {
                epochs: 6,
                actor_lr: 3e-5,
                critic_lr: 3e-5,
                entropy_coef: 0.01,
                rollout_steps: None,
                rollout_episodes: Some(2),
                ..PpoConfig::default()
            },
            transfer: transfer(0.1, 0.2, 25, Budget::Episodes(2)),
        }),
        other => Err(Error::config(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
