use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::Arm;
use super::run::EvalRecord;
use crate::error::{Error, Result};

pub const NOT_ACHIEVED: &str = "Not achieved";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetScore {
    /// Best seed-averaged score of the baseline arm.
    Auto,
    Value(f64),
}

/// First iteration at which a curve reaches the target; serialised as the
/// iteration number or `"Not achieved"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationsToTarget(pub Option<u64>);

impl Serialize for IterationsToTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(k) => s.serialize_u64(k),
            None => s.serialize_str(NOT_ACHIEVED),
        }
    }
}

impl<'de> Deserialize<'de> for IterationsToTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            K(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::K(k) => Ok(Self(Some(k))),
            Raw::S(s) if s == NOT_ACHIEVED => Ok(Self(None)),
            Raw::S(s) => Err(serde::de::Error::custom(format!("unexpected value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    pub iterations: Vec<u64>,
    pub returns: Vec<f64>,
    pub iterations_to_target: IterationsToTarget,
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: Arm,
    pub iterations_to_target: IterationsToTarget,
    /// `100 * (K_baseline - K_arm) / K_baseline`, when both reach the target.
    pub percent_reduction: Option<f64>,
    /// `percent_reduction` rounded to a whole percent, or `"Not achieved"`.
    pub reduction: String,
    pub best_score: f64,
    pub iterations: Vec<u64>,
    pub mean_curve: Vec<f64>,
    pub per_seed: Vec<SeedCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub target_score: f64,
    pub target_is_auto: bool,
    pub arms: Vec<ArmReport>,
}

impl ExperimentReport {
    pub fn arm(&self, arm: Arm) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.arm == arm)
    }
}

/// First iteration whose score is at least `target`.
pub fn iterations_to_target(iterations: &[u64], scores: &[f64], target: f64) -> Option<u64> {
    iterations.iter().zip(scores).find(|(_, s)| **s >= target).map(|(k, _)| *k)
}

/// Seed-averaged curve over the iterations every seed reported.
pub fn mean_curve(records: &[EvalRecord]) -> (Vec<u64>, Vec<f64>) {
    let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    let mut by_iter: BTreeMap<u64, BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records {
        by_iter.entry(r.iteration).or_default().insert(r.seed, r.mean_return);
    }
    let mut iterations = Vec::new();
    let mut means = Vec::new();
    for (k, per_seed) in by_iter {
        if per_seed.len() == seeds.len() {
            iterations.push(k);
            means.push(per_seed.values().sum::<f64>() / per_seed.len() as f64);
        }
    }
    (iterations, means)
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `(K_baseline - K_arm) / K_baseline` in percent.
pub fn percent_reduction(k_baseline: u64, k_arm: u64) -> f64 {
    100.0 * (k_baseline as f64 - k_arm as f64) / k_baseline as f64
}

/// Iterations-to-target, reduction against the baseline and best score for
/// every arm.
pub fn compute_report(arms: &[(Arm, Vec<EvalRecord>)], target: TargetScore) -> Result<ExperimentReport> {
    let baseline = arms.iter().find(|(a, _)| *a == Arm::Baseline);
    let (target_score, target_is_auto) = match target {
        TargetScore::Value(v) => (v, false),
        TargetScore::Auto => {
            let (_, records) =
                baseline.ok_or_else(|| Error::config("an automatic target needs baseline records"))?;
            let (_, curve) = mean_curve(records);
            if curve.is_empty() {
                return Err(Error::config("baseline records are empty"));
            }
            (max_of(&curve), true)
        }
    };
    let k_baseline = baseline.and_then(|(_, records)| {
        let (its, curve) = mean_curve(records);
        iterations_to_target(&its, &curve, target_score)
    });
    let mut reports = Vec::with_capacity(arms.len());
    for (arm, records) in arms {
        if records.is_empty() {
            return Err(Error::config(format!("no records for arm {arm}")));
        }
        let (iterations, curve) = mean_curve(records);
        let k = iterations_to_target(&iterations, &curve, target_score);
        let percent = match (k_baseline, k) {
            (Some(kb), Some(ka)) => Some(percent_reduction(kb, ka)),
            _ => None,
        };
        let reduction = match (percent, k) {
            (Some(p), _) => format!("{}%", p.round() as i64),
            (None, None) => NOT_ACHIEVED.to_string(),
            (None, Some(_)) => "n/a".to_string(),
        };
        let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
        let per_seed = seeds
            .into_iter()
            .map(|seed| {
                let mut rs: Vec<&EvalRecord> = records.iter().filter(|r| r.seed == seed).collect();
                rs.sort_by_key(|r| r.iteration);
                let its: Vec<u64> = rs.iter().map(|r| r.iteration).collect();
                let returns: Vec<f64> = rs.iter().map(|r| r.mean_return).collect();
                SeedCurve {
                    seed,
                    iterations_to_target: IterationsToTarget(iterations_to_target(&its, &returns, target_score)),
                    best_score: max_of(&returns),
                    iterations: its,
                    returns,
                }
            })
            .collect();
        reports.push(ArmReport {
            arm: *arm,
            iterations_to_target: IterationsToTarget(k),
            percent_reduction: percent,
            reduction,
            best_score: max_of(&curve),
            iterations,
            mean_curve: curve,
            per_seed,
        });
    }
    Ok(ExperimentReport {
        target_score,
        target_is_auto,
        arms: reports,
    })
}
