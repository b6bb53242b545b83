use std::fmt::Write as _;
use std::io::Write;
use std::marker::PhantomData;
use std::path::Path;

use crate::approximator::Action;
use crate::error::{Error, Result};

/// Which policy generated a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Student,
    Teacher,
}

/// Type-level tag carried by a [`TrajectoryBuffer`].
pub trait BufferSource: Send + Sync + 'static {
    const SOURCE: Source;
}

/// Samples collected by the policy being trained.
#[derive(Debug, Clone, Copy)]
pub struct Student;

/// Samples collected by a frozen teacher policy.
#[derive(Debug, Clone, Copy)]
pub struct Teacher;

impl BufferSource for Student {
    const SOURCE: Source = Source::Student;
}

impl BufferSource for Teacher {
    const SOURCE: Source = Source::Teacher;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// `log pi_b(action | state)` under the policy that acted.
    pub log_prob_behavior: f64,
    /// Last transition of an episode in this buffer (terminal, horizon, or
    /// cut by the collection budget).
    pub done: bool,
    /// `next_state` is terminal; its value is taken as zero.
    pub terminal: bool,
}

/// Ordered transitions from one source, with optional aligned advantage and
/// return estimates.
#[derive(Debug, Clone)]
pub struct TrajectoryBuffer<S: BufferSource> {
    transitions: Vec<Transition>,
    advantages: Option<Vec<f64>>,
    returns: Option<Vec<f64>>,
    episode_returns: Vec<f64>,
    _source: PhantomData<S>,
}

impl<S: BufferSource> Default for TrajectoryBuffer<S> {
    fn default() -> Self {
        Self {
            transitions: Vec::new(),
            advantages: None,
            returns: None,
            episode_returns: Vec::new(),
            _source: PhantomData,
        }
    }
}

impl<S: BufferSource> TrajectoryBuffer<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_transitions(transitions: Vec<Transition>) -> Result<Self> {
        for t in &transitions {
            if !t.log_prob_behavior.is_finite() || !t.reward.is_finite() {
                return Err(Error::NonFinite("transition"));
            }
        }
        Ok(Self {
            transitions,
            ..Self::default()
        })
    }

    pub fn source(&self) -> Source {
        S::SOURCE
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn advantages(&self) -> Option<&[f64]> {
        self.advantages.as_deref()
    }

    pub fn returns(&self) -> Option<&[f64]> {
        self.returns.as_deref()
    }

    /// Undiscounted returns of the episodes that ended inside the
    /// environment (not cut by the budget).
    pub fn episode_returns(&self) -> &[f64] {
        &self.episode_returns
    }

    pub fn mean_episode_return(&self) -> Option<f64> {
        (!self.episode_returns.is_empty())
            .then(|| self.episode_returns.iter().sum::<f64>() / self.episode_returns.len() as f64)
    }

    pub(crate) fn push(&mut self, t: Transition) {
        self.advantages = None;
        self.returns = None;
        self.transitions.push(t);
    }

    pub(crate) fn record_episode_return(&mut self, ret: f64) {
        self.episode_returns.push(ret);
    }

    pub fn set_estimates(&mut self, advantages: Vec<f64>, returns: Vec<f64>) -> Result<()> {
        if advantages.len() != self.len() || returns.len() != self.len() {
            return Err(Error::contract("advantages and returns must align with transitions"));
        }
        self.advantages = Some(advantages);
        self.returns = Some(returns);
        Ok(())
    }

    /// Indices of the first transition of each episode.
    pub fn episode_starts(&self) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut fresh = true;
        for (i, t) in self.transitions.iter().enumerate() {
            if fresh {
                starts.push(i);
            }
            fresh = t.done;
        }
        starts
    }

    /// Appends `other`, marking the current tail as an episode boundary.
    /// Estimates are kept only when both sides have them.
    pub fn append(&mut self, mut other: TrajectoryBuffer<S>) {
        if let Some(last) = self.transitions.last_mut() {
            last.done = true;
        }
        let estimates = if self.transitions.is_empty() {
            other.advantages.take().zip(other.returns.take())
        } else {
            match (self.advantages.take(), self.returns.take(), other.advantages.take(), other.returns.take()) {
                (Some(mut a), Some(mut r), Some(oa), Some(or)) => {
                    a.extend(oa);
                    r.extend(or);
                    Some((a, r))
                }
                _ => None,
            }
        };
        self.transitions.append(&mut other.transitions);
        self.episode_returns.append(&mut other.episode_returns);
        if let Some((a, r)) = estimates {
            self.advantages = Some(a);
            self.returns = Some(r);
        }
    }

    /// Sub-buffer with the transitions at `indices`, in that order, carrying
    /// the matching estimates.
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick = |v: &Vec<f64>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            transitions: indices.iter().map(|&i| self.transitions[i].clone()).collect(),
            advantages: self.advantages.as_ref().map(pick),
            returns: self.returns.as_ref().map(pick),
            episode_returns: Vec::new(),
            _source: PhantomData,
        }
    }

    /// Writes `state_*, action_*, reward, logp, done, advantage` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let state_dim = self.transitions.first().map_or(0, |t| t.state.len());
        let action_dim = match self.transitions.first().map(|t| &t.action) {
            Some(Action::Continuous(v)) => v.len(),
            _ => 1,
        };
        let mut header: Vec<String> = (0..state_dim).map(|i| format!("state_{i}")).collect();
        header.extend((0..action_dim).map(|i| format!("action_{i}")));
        header.extend(["reward", "logp", "done", "advantage"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.transitions.iter().enumerate() {
            let mut line = String::new();
            for s in &t.state {
                write!(line, "{s},").unwrap();
            }
            match &t.action {
                Action::Discrete(a) => write!(line, "{a},").unwrap(),
                Action::Continuous(v) => v.iter().for_each(|a| write!(line, "{a},").unwrap()),
            }
            let adv = self.advantages.as_ref().map_or(String::new(), |a| a[i].to_string());
            writeln!(
                out,
                "{line}{},{},{},{adv}",
                t.reward, t.log_prob_behavior, t.done as u8
            )?;
        }
        out.flush()?;
        Ok(())
    }
}
