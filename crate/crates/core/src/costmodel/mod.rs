//! Efficiency accounting for cascades: per-tier cost, exit-fraction
//! weighted aggregates, GPU rental dollars and simulated edge-to-cloud
//! communication delay.
//!
//! Two attribution schemes are supported. Under [`Attribution::ExitTier`] an
//! example is charged only for the tier it leaves at, so the cascade's cost
//! is `Σ f_i · c_i`. Under [`Attribution::Cumulative`] it pays for every tier
//! it passed through, `Σ f_i · Σ_{j≤i} c_j`.

mod fixture;
mod pareto;
mod report;

use crate::dataset::ModelProfile;
use crate::engine::{Attribution, CascadeSpec, ExecutionMode};
use crate::error::{Error, Result};

pub use fixture::{load_tier_fixture, parse_tier_fixture, TierFixture};
pub use pareto::{pareto_frontier, ParetoPoint};
pub use report::{read_cost_report_str, write_cost_report, CostReportRow, ReportMetric};

/// Tolerance on `Σ exit_fractions = 1`.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-9;

/// Smallest-to-largest edge-to-cloud delays in milliseconds.
pub const DEFAULT_CANONICAL_DELAYS_MS: [f64; 4] = [0.001, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TierCost {
    pub flops: f64,
    pub latency_ms: f64,
    pub dollars_per_hour: f64,
}

impl TierCost {
    fn scale(self, k: f64) -> Self {
        Self {
            flops: self.flops * k,
            latency_ms: self.latency_ms * k,
            dollars_per_hour: self.dollars_per_hour * k,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            flops: self.flops + o.flops,
            latency_ms: self.latency_ms + o.latency_ms,
            dollars_per_hour: self.dollars_per_hour + o.dollars_per_hour,
        }
    }

    /// True when every field of `self` is at most the matching field of `other`.
    pub fn le_fieldwise(&self, other: &Self) -> bool {
        self.flops <= other.flops
            && self.latency_ms <= other.latency_ms
            && self.dollars_per_hour <= other.dollars_per_hour
    }
}

/// Cost of one tier. Parallel execution charges the slowest member, sequential
/// charges the sum. All members must share a GPU type.
pub fn tier_cost(profiles: &[&ModelProfile], mode: ExecutionMode) -> Result<TierCost> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::validation("tier cost of an empty tier"))?;
    if let Some(p) = profiles.iter().find(|p| p.gpu_tier != first.gpu_tier) {
        return Err(Error::validation(format!(
            "models {} ({}) and {} ({}) share a tier but not a gpu tier",
            first.model_id, first.gpu_tier, p.model_id, p.gpu_tier
        )));
    }
    let (flops, latency_ms) = match mode {
        ExecutionMode::Parallel => profiles.iter().fold((0.0f64, 0.0f64), |(f, l), p| {
            (f.max(p.flops_per_example), l.max(p.latency_ms))
        }),
        ExecutionMode::Sequential => profiles.iter().fold((0.0, 0.0), |(f, l), p| {
            (f + p.flops_per_example, l + p.latency_ms)
        }),
    };
    Ok(TierCost {
        flops,
        latency_ms,
        dollars_per_hour: first.dollars_per_hour,
    })
}

pub(crate) fn find_profile<'a>(
    profiles: &'a [ModelProfile],
    model_id: &str,
) -> Result<&'a ModelProfile> {
    profiles
        .iter()
        .find(|p| p.model_id == model_id)
        .ok_or_else(|| Error::validation(format!("no cost profile for model {model_id}")))
}

/// Per-tier costs of a cascade under its execution mode.
pub fn cascade_tier_costs(spec: &CascadeSpec, profiles: &[ModelProfile]) -> Result<Vec<TierCost>> {
    spec.tiers
        .iter()
        .map(|t| {
            let members = t
                .model_ids
                .iter()
                .map(|m| find_profile(profiles, m))
                .collect::<Result<Vec<_>>>()?;
            tier_cost(&members, spec.execution_mode)
        })
        .collect()
}

/// Largest ratio between the FLOPs of adjacent tiers, and whether tier cost
/// is nondecreasing. Cascades assume each tier is at most as expensive as the
/// next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostOrdering {
    pub gamma: f64,
    pub nondecreasing: bool,
}

pub fn cost_ordering(per_tier: &[TierCost]) -> CostOrdering {
    let mut gamma = 1.0f64;
    let mut nondecreasing = true;
    for w in per_tier.windows(2) {
        if w[1].flops < w[0].flops || w[1].latency_ms < w[0].latency_ms {
            nondecreasing = false;
        }
        if w[1].flops > 0.0 {
            gamma = gamma.max(w[0].flops / w[1].flops);
        }
    }
    if !nondecreasing {
        log::warn!("tier costs are not nondecreasing; gamma = {gamma:.3}");
    }
    CostOrdering {
        gamma,
        nondecreasing,
    }
}

/// Best single model: cost card and, when known, accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSingle {
    pub model_id: Option<String>,
    pub cost: TierCost,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub per_tier: Vec<(f64, TierCost)>,
    pub coe_row: TierCost,
    pub attribution: Attribution,
    pub accuracy: Option<f64>,
    pub best_single: Option<BestSingle>,
}

impl AggregateReport {
    pub fn with_accuracy(mut self, accuracy: f64) -> Self {
        self.accuracy = Some(accuracy);
        self
    }

    pub fn with_best_single(mut self, best: BestSingle) -> Self {
        self.best_single = Some(best);
        self
    }

    pub fn exit_fractions(&self) -> Vec<f64> {
        self.per_tier.iter().map(|t| t.0).collect()
    }
}

fn check_fractions(fractions: &[f64], n: usize) -> Result<()> {
    if fractions.len() != n {
        return Err(Error::validation(format!(
            "{} exit fractions for {n} tiers",
            fractions.len()
        )));
    }
    if fractions.is_empty() {
        return Err(Error::validation("no tiers"));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::validation("exit fractions must lie in [0,1]"));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > FRACTION_SUM_TOLERANCE {
        return Err(Error::validation(format!(
            "exit fractions sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Weights per-tier costs by exit fractions.
pub fn aggregate(
    fractions: &[f64],
    per_tier: &[TierCost],
    attribution: Attribution,
) -> Result<AggregateReport> {
    check_fractions(fractions, per_tier.len())?;
    let mut coe = TierCost::default();
    let mut visited = TierCost::default();
    for (&f, &c) in fractions.iter().zip(per_tier) {
        visited = visited.add(c);
        let charged = match attribution {
            Attribution::ExitTier => c,
            Attribution::Cumulative => visited,
        };
        coe = coe.add(charged.scale(f));
    }
    Ok(AggregateReport {
        per_tier: fractions
            .iter()
            .copied()
            .zip(per_tier.iter().copied())
            .collect(),
        coe_row: coe,
        attribution,
        accuracy: None,
        best_single: None,
    })
}

/// Hourly GPU spend with each example charged its exit tier's price.
pub fn gpu_dollar_total(fractions: &[f64], tier_prices: &[f64]) -> Result<f64> {
    if fractions.len() != tier_prices.len() {
        return Err(Error::validation(format!(
            "{} exit fractions for {} tier prices",
            fractions.len(),
            tier_prices.len()
        )));
    }
    Ok(fractions.iter().zip(tier_prices).map(|(f, p)| f * p).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub delays_ms: Vec<f64>,
}

/// Assigns canonical delays to tiers: the first tier gets the smallest, the
/// last tier the largest, interior tiers the next smallest in order.
pub fn make_delay_profile(num_tiers: usize, canonical: &[f64]) -> Result<DelayProfile> {
    if canonical.len() < 2 {
        return Err(Error::validation(
            "canonical delay list needs at least two entries",
        ));
    }
    if canonical.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::validation("delays must be finite and nonnegative"));
    }
    if canonical.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("canonical delays must be nondecreasing"));
    }
    if num_tiers == 0 {
        return Err(Error::validation("delay profile for zero tiers"));
    }
    if num_tiers > canonical.len() {
        return Err(Error::validation(format!(
            "{num_tiers} tiers but only {} canonical delays",
            canonical.len()
        )));
    }
    let delays_ms = if num_tiers == 1 {
        vec![canonical[0]]
    } else {
        let mut d = canonical[..num_tiers - 1].to_vec();
        d.push(canonical[canonical.len() - 1]);
        d
    };
    Ok(DelayProfile { delays_ms })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommReport {
    pub coe_ms: f64,
    pub best_single_ms: f64,
    pub reduction_ratio: f64,
}

/// Expected per-example latency including the communication delay of the
/// exit tier, against running only the final tier.
pub fn comm_latency(
    fractions: &[f64],
    tier_latencies: &[f64],
    delays: &DelayProfile,
) -> Result<CommReport> {
    let k = tier_latencies.len();
    if fractions.len() != k || delays.delays_ms.len() != k || k == 0 {
        return Err(Error::validation(format!(
            "length mismatch: {} fractions, {k} latencies, {} delays",
            fractions.len(),
            delays.delays_ms.len()
        )));
    }
    let coe_ms = fractions
        .iter()
        .zip(tier_latencies)
        .zip(&delays.delays_ms)
        .map(|((f, l), d)| f * (l + d))
        .sum();
    let best_single_ms = tier_latencies[k - 1] + delays.delays_ms[k - 1];
    Ok(CommReport {
        coe_ms,
        best_single_ms,
        reduction_ratio: best_single_ms / coe_ms,
    })
}
