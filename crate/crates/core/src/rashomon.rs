//! Best-model selection and the epsilon-Rashomon set.
//!
//! A model belongs to the set when its score is at most
//! `best_score * (1 + epsilon)`. The tolerance is multiplicative and the
//! bound inclusive. When the best score is exactly zero the threshold is zero
//! and only perfect models qualify.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::TrainedModel;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Something with an id and a loss-like score (lower is better).
pub trait Scored {
    fn id(&self) -> usize;
    fn score(&self) -> f64;
}

impl Scored for TrainedModel {
    fn id(&self) -> usize {
        self.id
    }
    fn score(&self) -> f64 {
        self.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScore {
    pub id: usize,
    pub score: f64,
}

impl Scored for ModelScore {
    fn id(&self) -> usize {
        self.id
    }
    fn score(&self) -> f64 {
        self.score
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonSet {
    pub epsilon: f64,
    pub best_id: usize,
    pub best_score: f64,
    pub threshold: f64,
    /// Sorted by score, then id.
    pub member_ids: Vec<usize>,
    pub rss: usize,
    /// Size of the pool the set was drawn from.
    pub pool_size: usize,
    pub rr: f64,
}

impl RashomonSet {
    pub fn contains(&self, id: usize) -> bool {
        self.member_ids.contains(&id)
    }

    pub fn is_singleton(&self) -> bool {
        self.rss == 1
    }
}

fn check_scores<M: Scored>(pool: &[M]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::invalid("empty model pool"));
    }
    if let Some(m) = pool
        .iter()
        .find(|m| !m.score().is_finite() || m.score() < 0.0)
    {
        return Err(Error::invalid(format!(
            "model {} has invalid score {}",
            m.id(),
            m.score()
        )));
    }
    Ok(())
}

/// Id of the lowest-scoring model; ties go to the smallest id.
pub fn select_best<M: Scored>(pool: &[M]) -> Result<usize> {
    check_scores(pool)?;
    let best = pool
        .iter()
        .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.id().cmp(&b.id())))
        .expect("non-empty");
    Ok(best.id())
}

pub fn form_set<M: Scored>(pool: &[M], epsilon: f64) -> Result<RashomonSet> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let best_id = select_best(pool)?;
    let best_score = pool
        .iter()
        .find(|m| m.id() == best_id)
        .map(Scored::score)
        .expect("best is in pool");
    let threshold = best_score * (1.0 + epsilon);

    let mut members: Vec<(f64, usize)> = pool
        .iter()
        .filter(|m| m.score() <= threshold)
        .map(|m| (m.score(), m.id()))
        .collect();
    members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let member_ids: Vec<usize> = members.into_iter().map(|(_, id)| id).collect();
    let rss = member_ids.len();
    Ok(RashomonSet {
        epsilon,
        best_id,
        best_score,
        threshold,
        member_ids,
        rss,
        pool_size: pool.len(),
        rr: rss as f64 / pool.len() as f64,
    })
}
