//! Ensemble voting and the deferral rules that decide whether an example
//! leaves the cascade at the current tier.

use crate::dataset::Label;
use crate::error::{Error, Result};

/// Outcome of majority voting inside one ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleVote {
    pub majority_label: Label,
    /// Number of members that predicted `majority_label`.
    pub agreeing: usize,
    pub ensemble_size: usize,
    /// Mean score of the members that predicted `majority_label`.
    pub mean_majority_score: Option<f64>,
}

impl EnsembleVote {
    /// Share of the ensemble that agrees with the majority label.
    pub fn vote_fraction(&self) -> f64 {
        self.agreeing as f64 / self.ensemble_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Exit(Label),
    Defer,
}

impl Decision {
    pub fn is_exit(self) -> bool {
        matches!(self, Decision::Exit(_))
    }
}

/// Majority vote with ties broken toward the smallest label.
pub fn majority_vote(labels: &[Label], scores: Option<&[f64]>) -> Result<EnsembleVote> {
    if labels.is_empty() {
        return Err(Error::validation("majority vote over an empty ensemble"));
    }
    if let Some(s) = scores {
        if s.len() != labels.len() {
            return Err(Error::validation(format!(
                "{} scores for {} labels",
                s.len(),
                labels.len()
            )));
        }
    }
    let (majority_label, agreeing) = modal_label(labels);
    let mean_majority_score = scores.map(|s| {
        let total: f64 = labels
            .iter()
            .zip(s)
            .filter(|(l, _)| **l == majority_label)
            .map(|(_, v)| v)
            .sum();
        total / agreeing as f64
    });
    Ok(EnsembleVote {
        majority_label,
        agreeing,
        ensemble_size: labels.len(),
        mean_majority_score,
    })
}

/// Ensembles are small, so a quadratic count beats allocating a histogram.
fn modal_label(labels: &[Label]) -> (Label, usize) {
    let mut best = (labels[0], 0usize);
    for &candidate in labels {
        let count = labels.iter().filter(|&&l| l == candidate).count();
        if count > best.1 || (count == best.1 && candidate < best.0) {
            best = (candidate, count);
        }
    }
    best
}

/// Exit with the majority label iff the vote fraction reaches `theta_v`.
///
/// `theta_v` is a fraction of the ensemble size. The comparison uses the
/// integer agreement count so that thresholds such as 2/3 are exact.
pub fn vote_deferral(vote: &EnsembleVote, theta_v: f64) -> Decision {
    if meets_threshold(vote.agreeing, vote.ensemble_size, theta_v) {
        Decision::Exit(vote.majority_label)
    } else {
        Decision::Defer
    }
}

/// `agreeing / size >= theta`, with a 1e-9 allowance so that a threshold
/// computed as `2.0 / 3.0` and a count of 2 out of 3 compare equal.
pub(crate) fn meets_threshold(agreeing: usize, size: usize, theta: f64) -> bool {
    agreeing as f64 / size as f64 + 1e-9 >= theta
}

/// Confidence rule: exit with the model's own label iff `score >= theta`.
pub fn confidence_deferral(label: Label, score: Option<f64>, theta: f64) -> Result<Decision> {
    let score =
        score.ok_or_else(|| Error::validation("confidence deferral needs a score channel"))?;
    Ok(if score >= theta {
        Decision::Exit(label)
    } else {
        Decision::Defer
    })
}

/// Idealized rule that keeps the first model exactly when it is right.
pub fn oracle_deferral(h1_label: Label, true_label: Label) -> Decision {
    if h1_label == true_label {
        Decision::Exit(h1_label)
    } else {
        Decision::Defer
    }
}
