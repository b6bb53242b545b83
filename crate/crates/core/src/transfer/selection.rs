use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rollout::{Teacher, TrajectoryBuffer};

/// Offset added to clipped advantages before prioritised sampling, so
/// non-positive advantages keep a small chance of being drawn.
pub const PRIORITY_OFFSET: f64 = 1e-6;

/// Rule deciding which teacher transitions feed the instance update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Keep `A' >= zeta`; a transition is removed when `A' < zeta`.
    Threshold { zeta: f64 },
    /// Keep `|A'| > zeta`.
    AbsThreshold { zeta: f64 },
    /// Keep the `ceil(fraction * T')` highest advantages; ties go to the
    /// earlier transition.
    TopFraction { fraction: f64 },
    /// Draw `samples` transitions with replacement, with probability
    /// proportional to `(max(A', 0) + PRIORITY_OFFSET)^exponent`. No importance
    /// weights are attached.
    Prioritized { exponent: f64, samples: usize },
}

impl SelectionRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::Threshold { zeta } | SelectionRule::AbsThreshold { zeta } => {
                if zeta.is_nan() || zeta == f64::INFINITY {
                    return Err(Error::config("selection threshold must be finite or -inf"));
                }
            }
            SelectionRule::TopFraction { fraction } => {
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::config("top fraction must lie in (0, 1]"));
                }
            }
            SelectionRule::Prioritized { exponent, .. } => {
                if !(exponent >= 0.0 && exponent.is_finite()) {
                    return Err(Error::config("priority exponent must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            SelectionRule::Threshold { zeta } => format!("threshold-{zeta}"),
            SelectionRule::AbsThreshold { zeta } => format!("abs-threshold-{zeta}"),
            SelectionRule::TopFraction { fraction } => format!("top-fraction-{fraction}"),
            SelectionRule::Prioritized { exponent, samples } => format!("prioritized-{exponent}-{samples}"),
        }
    }
}

impl std::str::FromStr for SelectionRule {
    type Err = Error;

    /// `threshold:ZETA`, `abs-threshold:ZETA`, `top-fraction:P` or
    /// `prioritized:EXPONENT:SAMPLES`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::config(format!("cannot parse selection rule {s:?}"));
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
        let rule = match parts.as_slice() {
            ["threshold", z] => SelectionRule::Threshold { zeta: num(z)? },
            ["abs-threshold", z] => SelectionRule::AbsThreshold { zeta: num(z)? },
            ["top-fraction", p] => SelectionRule::TopFraction { fraction: num(p)? },
            ["prioritized", e, n] => SelectionRule::Prioritized {
                exponent: num(e)?,
                samples: n.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Indices kept by `rule`. Deterministic rules return ascending indices;
/// `Prioritized` returns draws in sampling order (possibly repeated). Only
/// the prioritised rule consumes randomness.
pub fn selected_indices<R: Rng>(advantages: &[f64], rule: SelectionRule, rng: &mut R) -> Result<Vec<usize>> {
    rule.validate()?;
    if advantages.iter().any(|a| a.is_nan()) {
        return Err(Error::NonFinite("advantages"));
    }
    let kept = match rule {
        SelectionRule::Threshold { zeta } => (0..advantages.len()).filter(|&i| advantages[i] >= zeta).collect(),
        SelectionRule::AbsThreshold { zeta } => {
            (0..advantages.len()).filter(|&i| advantages[i].abs() > zeta).collect()
        }
        SelectionRule::TopFraction { fraction } => {
            let count = ((fraction * advantages.len() as f64) - 1e-9).ceil().max(0.0) as usize;
            let mut order: Vec<usize> = (0..advantages.len()).collect();
            // Stable: equal advantages (including 0.0 and -0.0) keep index
            // order. NaN was rejected above.
            order.sort_by(|&a, &b| advantages[b].partial_cmp(&advantages[a]).expect("no NaN"));
            let mut top: Vec<usize> = order.into_iter().take(count).collect();
            top.sort_unstable();
            top
        }
        SelectionRule::Prioritized { exponent, samples } => {
            if advantages.is_empty() {
                return Ok(Vec::new());
            }
            let weights: Vec<f64> = advantages
                .iter()
                .map(|a| (a.max(0.0) + PRIORITY_OFFSET).powf(exponent))
                .collect();
            let mut cumulative = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for w in &weights {
                acc += w;
                cumulative.push(acc);
            }
            (0..samples)
                .map(|_| {
                    let u = rng.random::<f64>() * acc;
                    cumulative.partition_point(|c| *c <= u).min(weights.len() - 1)
                })
                .collect()
        }
    };
    Ok(kept)
}

/// Experience selection on a teacher buffer whose advantages were computed
/// under the student task. Returns the filtered buffer and the kept indices.
pub fn select_experiences<R: Rng>(
    buffer: &TrajectoryBuffer<Teacher>,
    rule: SelectionRule,
    rng: &mut R,
) -> Result<(TrajectoryBuffer<Teacher>, Vec<usize>)> {
    let adv = buffer
        .advantages()
        .ok_or_else(|| Error::contract("teacher advantages have not been computed"))?;
    let kept = selected_indices(adv, rule, rng)?;
    Ok((buffer.select(&kept), kept))
}
