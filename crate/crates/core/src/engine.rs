//! Cascade execution: the vote-threshold cascade of ensembles, the
//! confidence-threshold single-model cascade, and the two-model oracle.
//!
//! Examples are evaluated with rayon and collected in table order, so the
//! traces do not depend on the size of the thread pool the caller installs.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{csv_write_err, Label, PredictionTable};
use crate::deferral::{
    confidence_deferral, majority_vote, oracle_deferral, vote_deferral, Decision, EnsembleVote,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TierSpec {
    pub model_ids: Vec<String>,
    /// Required vote fraction in `[0, 1]`. Ignored on the final tier.
    pub theta_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    /// Tier members run side by side; a tier costs as much as its slowest member.
    #[default]
    Parallel,
    /// Tier members run one after another; a tier costs the sum of its members.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    /// An example is charged only for the tier it exits at.
    #[default]
    ExitTier,
    /// An example is charged for every tier it visited.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    pub tiers: Vec<TierSpec>,
    pub execution_mode: ExecutionMode,
    pub attribution_mode: Attribution,
}

impl CascadeSpec {
    /// Same threshold on every tier, parallel execution, exit-tier attribution.
    pub fn uniform<S: AsRef<str>>(tiers: &[Vec<S>], theta_v: f64) -> Self {
        Self {
            tiers: tiers
                .iter()
                .map(|t| TierSpec {
                    model_ids: t.iter().map(|s| s.as_ref().to_string()).collect(),
                    theta_v,
                })
                .collect(),
            execution_mode: ExecutionMode::Parallel,
            attribution_mode: Attribution::ExitTier,
        }
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// Resolves model ids to table columns, checking every tier invariant.
    pub fn resolve(&self, table: &PredictionTable) -> Result<Vec<Vec<usize>>> {
        if self.tiers.is_empty() {
            return Err(Error::validation("cascade needs at least one tier"));
        }
        self.tiers
            .iter()
            .enumerate()
            .map(|(t, tier)| {
                if tier.model_ids.is_empty() {
                    return Err(Error::validation(format!("tier {t} is empty")));
                }
                if !(0.0..=1.0).contains(&tier.theta_v) {
                    return Err(Error::validation(format!(
                        "tier {t}: theta_v {} outside [0,1]",
                        tier.theta_v
                    )));
                }
                let mut cols = Vec::with_capacity(tier.model_ids.len());
                for id in &tier.model_ids {
                    let col = table.require_model(id).map_err(|_| {
                        Error::validation(format!("tier {t} references unknown model {id}"))
                    })?;
                    if cols.contains(&col) {
                        return Err(Error::validation(format!(
                            "tier {t} lists model {id} twice"
                        )));
                    }
                    cols.push(col);
                }
                Ok(cols)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierVisit {
    pub tier: usize,
    pub vote: EnsembleVote,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleTrace {
    pub example_id: String,
    /// Tiers `0..=exit_tier` in order; all but the last deferred.
    pub visited: Vec<TierVisit>,
    pub exit_tier: usize,
    pub final_label: Label,
    pub correct: bool,
}

/// Traces of one cascade run over a whole table.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRun {
    pub traces: Vec<ExampleTrace>,
    pub exit_fractions: Vec<f64>,
    pub num_tiers: usize,
}

impl CascadeRun {
    fn from_traces(traces: Vec<ExampleTrace>, num_tiers: usize) -> Self {
        let counts = exit_counts(&traces, num_tiers);
        let n = traces.len().max(1) as f64;
        Self {
            exit_fractions: counts.iter().map(|&c| c as f64 / n).collect(),
            traces,
            num_tiers,
        }
    }

    pub fn exit_counts(&self) -> Vec<usize> {
        exit_counts(&self.traces, self.num_tiers)
    }

    pub fn accuracy(&self) -> f64 {
        if self.traces.is_empty() {
            return 0.0;
        }
        self.traces.iter().filter(|t| t.correct).count() as f64 / self.traces.len() as f64
    }

    /// Total number of deferrals taken across all examples.
    pub fn deferrals(&self) -> usize {
        self.traces.iter().map(|t| t.exit_tier).sum()
    }
}

fn exit_counts(traces: &[ExampleTrace], num_tiers: usize) -> Vec<usize> {
    let mut counts = vec![0; num_tiers];
    for t in traces {
        counts[t.exit_tier] += 1;
    }
    counts
}

/// Majority votes of every tier for every example, `votes[tier][example]`.
///
/// Votes do not depend on thresholds, so one cache serves a whole threshold
/// sweep.
#[derive(Debug, Clone)]
pub struct TierVotes {
    votes: Vec<Vec<EnsembleVote>>,
}

impl TierVotes {
    pub fn compute(table: &PredictionTable, tiers: &[Vec<usize>]) -> Result<Self> {
        let votes = tiers
            .iter()
            .map(|cols| {
                let all_scored = cols.iter().all(|&m| table.scores(m).is_some());
                (0..table.num_examples())
                    .into_par_iter()
                    .map(|i| {
                        let labels: Vec<Label> =
                            cols.iter().map(|&m| table.prediction(i, m)).collect();
                        let scores: Option<Vec<f64>> = all_scored
                            .then(|| cols.iter().map(|&m| table.scores(m).unwrap()[i]).collect());
                        majority_vote(&labels, scores.as_deref())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { votes })
    }

    pub fn num_tiers(&self) -> usize {
        self.votes.len()
    }

    pub fn vote(&self, tier: usize, example: usize) -> &EnsembleVote {
        &self.votes[tier][example]
    }

    /// Applies per-tier thresholds to the cached votes.
    pub fn run(&self, table: &PredictionTable, thetas: &[f64]) -> Result<CascadeRun> {
        let k = self.votes.len();
        if thetas.len() != k {
            return Err(Error::validation(format!(
                "{} thresholds for {k} tiers",
                thetas.len()
            )));
        }
        let traces = (0..table.num_examples())
            .into_par_iter()
            .map(|i| {
                let mut visited = Vec::with_capacity(k);
                for (t, &theta) in thetas.iter().enumerate() {
                    let vote = self.votes[t][i];
                    let decision = if t + 1 == k {
                        Decision::Exit(vote.majority_label)
                    } else {
                        vote_deferral(&vote, theta)
                    };
                    visited.push(TierVisit {
                        tier: t,
                        vote,
                        decision,
                    });
                    if let Decision::Exit(label) = decision {
                        return finish(table, i, visited, label);
                    }
                }
                unreachable!("final tier always exits")
            })
            .collect();
        Ok(CascadeRun::from_traces(traces, k))
    }
}

fn finish(
    table: &PredictionTable,
    i: usize,
    visited: Vec<TierVisit>,
    label: Label,
) -> ExampleTrace {
    ExampleTrace {
        example_id: table.example_ids()[i].clone(),
        exit_tier: visited.len() - 1,
        final_label: label,
        correct: label == table.true_labels()[i],
        visited,
    }
}

/// Runs the cascade of ensembles: at each tier the ensemble votes, and the
/// example exits with the majority label once the vote fraction reaches the
/// tier's threshold. The last tier always exits.
pub fn run_cascade(table: &PredictionTable, spec: &CascadeSpec) -> Result<CascadeRun> {
    let cols = spec.resolve(table)?;
    let votes = TierVotes::compute(table, &cols)?;
    let thetas: Vec<f64> = spec.tiers.iter().map(|t| t.theta_v).collect();
    votes.run(table, &thetas)
}

fn single_vote(label: Label, score: Option<f64>) -> EnsembleVote {
    EnsembleVote {
        majority_label: label,
        agreeing: 1,
        ensemble_size: 1,
        mean_majority_score: score,
    }
}

/// Confidence cascade over single models: tier `i` exits with its model's
/// label iff that model's score is at least `theta`.
pub fn run_woc(table: &PredictionTable, tiers: &[&str], theta: f64) -> Result<CascadeRun> {
    if tiers.is_empty() {
        return Err(Error::validation("cascade needs at least one tier"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::validation(format!("theta {theta} outside [0,1]")));
    }
    let cols = tiers
        .iter()
        .map(|m| table.require_model(m))
        .collect::<Result<Vec<_>>>()?;
    let k = cols.len();
    for (t, &m) in cols.iter().enumerate().take(k - 1) {
        if table.scores(m).is_none() {
            return Err(Error::validation(format!(
                "confidence cascade: model {} at tier {t} has no scores",
                tiers[t]
            )));
        }
    }
    let traces = (0..table.num_examples())
        .into_par_iter()
        .map(|i| {
            let mut visited = Vec::with_capacity(k);
            for (t, &m) in cols.iter().enumerate() {
                let label = table.prediction(i, m);
                let score = table.scores(m).map(|s| s[i]);
                let decision = if t + 1 == k {
                    Decision::Exit(label)
                } else {
                    confidence_deferral(label, score, theta)?
                };
                visited.push(TierVisit {
                    tier: t,
                    vote: single_vote(label, score),
                    decision,
                });
                if let Decision::Exit(label) = decision {
                    return Ok(finish(table, i, visited, label));
                }
            }
            unreachable!("final tier always exits")
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CascadeRun::from_traces(traces, k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub run: CascadeRun,
    /// Fraction of examples whose final label is wrong.
    pub risk: f64,
}

/// Two-model cascade that keeps `h1` exactly on the examples it gets right.
pub fn run_oracle_two_model(table: &PredictionTable, h1: &str, h2: &str) -> Result<OracleRun> {
    let m1 = table.require_model(h1)?;
    let m2 = table.require_model(h2)?;
    let truth = table.true_labels();
    let traces: Vec<ExampleTrace> = (0..table.num_examples())
        .into_par_iter()
        .map(|i| {
            let l1 = table.prediction(i, m1);
            let decision = oracle_deferral(l1, truth[i]);
            let mut visited = vec![TierVisit {
                tier: 0,
                vote: single_vote(l1, None),
                decision,
            }];
            if let Decision::Exit(label) = decision {
                return finish(table, i, visited, label);
            }
            let l2 = table.prediction(i, m2);
            visited.push(TierVisit {
                tier: 1,
                vote: single_vote(l2, None),
                decision: Decision::Exit(l2),
            });
            finish(table, i, visited, l2)
        })
        .collect();
    let run = CascadeRun::from_traces(traces, 2);
    let wrong = run.traces.iter().filter(|t| !t.correct).count();
    let risk = if run.traces.is_empty() {
        0.0
    } else {
        wrong as f64 / run.traces.len() as f64
    };
    Ok(OracleRun { run, risk })
}

/// Largest table [`brute_force_min_risk`] accepts.
pub const BRUTE_FORCE_MAX_EXAMPLES: usize = 20;

/// Minimum two-model risk over every per-example rule `r ∈ {0,1}^n`, found
/// by enumerating all `2^n` rules.
pub fn brute_force_min_risk(table: &PredictionTable, h1: &str, h2: &str) -> Result<f64> {
    let n = table.num_examples();
    if n > BRUTE_FORCE_MAX_EXAMPLES {
        return Err(Error::validation(format!(
            "brute force needs at most {BRUTE_FORCE_MAX_EXAMPLES} examples, table has {n}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let p1 = table.predictions(table.require_model(h1)?);
    let p2 = table.predictions(table.require_model(h2)?);
    let truth = table.true_labels();
    let mut best = usize::MAX;
    for rule in 0u32..(1u32 << n) {
        // bit i set: keep h1 on example i
        let wrong = (0..n)
            .filter(|&i| {
                let label = if rule >> i & 1 == 1 { p1[i] } else { p2[i] };
                label != truth[i]
            })
            .count();
        best = best.min(wrong);
    }
    Ok(best as f64 / n as f64)
}

/// Flat trace row as written to and read from trace CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub example_id: String,
    pub exit_tier: usize,
    pub final_label: Label,
    pub correct: bool,
    pub vote_fractions: Vec<f64>,
}

impl From<&ExampleTrace> for TraceRecord {
    fn from(t: &ExampleTrace) -> Self {
        Self {
            example_id: t.example_id.clone(),
            exit_tier: t.exit_tier,
            final_label: t.final_label,
            correct: t.correct,
            vote_fractions: t.visited.iter().map(|v| v.vote.vote_fraction()).collect(),
        }
    }
}

const TRACE_HEADER: [&str; 5] = [
    "example_id",
    "exit_tier",
    "final_label",
    "correct",
    "vote_fractions",
];

/// Writes `example_id,exit_tier,final_label,correct,vote_fractions`, with the
/// vote fractions of the visited tiers joined by `;`.
pub fn write_traces<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_write_err)?;
    for r in records {
        let fractions = r
            .vote_fractions
            .iter()
            .map(|f| format!("{f}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.example_id.as_str(),
            &r.exit_tier.to_string(),
            &r.final_label.to_string(),
            if r.correct { "true" } else { "false" },
            &fractions,
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io("<traces>", e))?;
    Ok(())
}

pub fn traces_to_records(run: &CascadeRun) -> Vec<TraceRecord> {
    run.traces.iter().map(TraceRecord::from).collect()
}

pub fn load_traces(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_traces_str(&text)
}

pub fn read_traces_str(text: &str) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::cell(
            1,
            "-",
            format!("expected header {}", TRACE_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != TRACE_HEADER.len() {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let bad =
            |c: usize| Error::cell(row, TRACE_HEADER[c], format!("invalid value {:?}", &rec[c]));
        let exit_tier: usize = rec[1].parse().map_err(|_| bad(1))?;
        let final_label = Label(rec[2].parse().map_err(|_| bad(2))?);
        let correct = match &rec[3] {
            "true" => true,
            "false" => false,
            _ => return Err(bad(3)),
        };
        let vote_fractions = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4]
                .split(';')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(4))?
        };
        if vote_fractions.len() != exit_tier + 1 {
            return Err(Error::cell(
                row,
                "vote_fractions",
                format!(
                    "{} fractions for exit tier {exit_tier}",
                    vote_fractions.len()
                ),
            ));
        }
        out.push(TraceRecord {
            example_id: rec[0].to_string(),
            exit_tier,
            final_label,
            correct,
            vote_fractions,
        });
    }
    Ok(out)
}
