//! Configuration sweeps, exit-depth histograms, wrong-agreement counts and
//! reduction ratios.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::costmodel::{
    aggregate, find_profile, tier_cost, AggregateReport, ParetoPoint, TierCost,
};
use crate::dataset::{csv_write_err, Label, ModelProfile, PredictionTable};
use crate::engine::{
    run_woc, Attribution, CascadeRun, ExampleTrace, ExecutionMode, TierVotes, TraceRecord,
};
use crate::error::{Error, Result};

/// Grid of cascade configurations to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Ensemble sizes; tier `i` of a size-`k` cascade uses the first
    /// `min(k, |tier_pool[i]|)` models of `tier_pool[i]`.
    pub ensemble_sizes: Vec<usize>,
    pub thresholds: Vec<f64>,
    /// Candidate models per performance tier, cheapest tier first.
    pub tier_pool: Vec<Vec<String>>,
    /// Confidence thresholds for the single-model confidence cascade baseline.
    pub woc_thresholds: Option<Vec<f64>>,
}

/// Confidence grid searched for the baseline when none is given.
pub fn default_woc_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
    grid.push(0.99);
    grid
}

impl SweepSpec {
    fn validate(&self, table: &PredictionTable) -> Result<()> {
        if self.ensemble_sizes.is_empty() || self.thresholds.is_empty() || self.tier_pool.is_empty()
        {
            return Err(Error::validation(
                "sweep needs ensemble sizes, thresholds and a tier pool",
            ));
        }
        if self.ensemble_sizes.contains(&0) {
            return Err(Error::validation("ensemble sizes must be at least 1"));
        }
        if let Some(t) = self
            .thresholds
            .iter()
            .chain(self.woc_thresholds.iter().flatten())
            .find(|t| !(0.0..=1.0).contains(*t))
        {
            return Err(Error::validation(format!("threshold {t} outside [0,1]")));
        }
        for (i, group) in self.tier_pool.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::validation(format!("tier pool group {i} is empty")));
            }
            for m in group {
                table.require_model(m)?;
            }
        }
        Ok(())
    }

    /// Tier membership for one ensemble size.
    pub fn tiers_for_size(&self, size: usize) -> Vec<Vec<String>> {
        self.tier_pool
            .iter()
            .map(|g| g.iter().take(size).cloned().collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepConfig {
    Coe { ensemble_size: usize, theta_v: f64 },
    Woc { theta: f64 },
    Single { model_id: String },
}

impl SweepConfig {
    pub fn label(&self) -> String {
        match self {
            SweepConfig::Coe { .. } => "coe".into(),
            SweepConfig::Woc { .. } => "woc".into(),
            SweepConfig::Single { model_id } => format!("single:{model_id}"),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            SweepConfig::Coe { theta_v, .. } => Some(*theta_v),
            SweepConfig::Woc { theta } => Some(*theta),
            SweepConfig::Single { .. } => None,
        }
    }

    pub fn ensemble_size(&self) -> Option<usize> {
        match self {
            SweepConfig::Coe { ensemble_size, .. } => Some(*ensemble_size),
            _ => None,
        }
    }
}

/// Runs every vote-threshold cascade of the grid, in declaration order
/// (sizes outer, thresholds inner).
pub fn sweep_runs(
    table: &PredictionTable,
    spec: &SweepSpec,
) -> Result<Vec<(SweepConfig, CascadeRun)>> {
    spec.validate(table)?;
    let per_size: Vec<Vec<(SweepConfig, CascadeRun)>> = spec
        .ensemble_sizes
        .par_iter()
        .map(|&size| {
            let cols: Vec<Vec<usize>> = spec
                .tiers_for_size(size)
                .iter()
                .map(|t| t.iter().map(|m| table.require_model(m)).collect())
                .collect::<Result<_>>()?;
            let votes = TierVotes::compute(table, &cols)?;
            spec.thresholds
                .iter()
                .map(|&theta| {
                    let run = votes.run(table, &vec![theta; cols.len()])?;
                    Ok((
                        SweepConfig::Coe {
                            ensemble_size: size,
                            theta_v: theta,
                        },
                        run,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_size.into_iter().flatten().collect())
}

/// One point of the accuracy/cost cloud. Costs use exit-tier attribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: SweepConfig,
    pub accuracy: f64,
    pub cost: TierCost,
    pub exit_fractions: Vec<f64>,
}

impl SweepPoint {
    pub fn to_pareto(&self) -> ParetoPoint {
        let tag = match &self.config {
            SweepConfig::Coe {
                ensemble_size,
                theta_v,
            } => format!("coe:size={ensemble_size}:theta={theta_v}"),
            SweepConfig::Woc { theta } => format!("woc:theta={theta}"),
            SweepConfig::Single { model_id } => format!("single:{model_id}"),
        };
        ParetoPoint::new(self.cost.flops, self.accuracy, tag)
    }
}

fn tier_costs_for(
    tiers: &[Vec<String>],
    profiles: &[ModelProfile],
    mode: ExecutionMode,
) -> Result<Vec<TierCost>> {
    tiers
        .iter()
        .map(|t| {
            let members = t
                .iter()
                .map(|m| find_profile(profiles, m))
                .collect::<Result<Vec<_>>>()?;
            tier_cost(&members, mode)
        })
        .collect()
}

/// Most accurate model of a group; ties go to the earlier model.
fn best_model<'a>(table: &PredictionTable, group: &'a [String]) -> Result<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for m in group {
        let acc = table.accuracy(table.require_model(m)?);
        if best.is_none_or(|(_, a)| acc > a) {
            best = Some((m, acc));
        }
    }
    Ok(best.expect("nonempty group").0)
}

/// Evaluates the grid, the confidence-cascade baseline when requested, and a
/// reference point for every model in the table.
pub fn sweep(
    table: &PredictionTable,
    profiles: &[ModelProfile],
    spec: &SweepSpec,
    mode: ExecutionMode,
) -> Result<Vec<SweepPoint>> {
    let runs = sweep_runs(table, spec)?;
    let mut points = Vec::with_capacity(runs.len() + table.model_ids().len());
    for (config, run) in runs {
        let size = config.ensemble_size().expect("coe config");
        let costs = tier_costs_for(&spec.tiers_for_size(size), profiles, mode)?;
        let agg = aggregate(&run.exit_fractions, &costs, Attribution::ExitTier)?;
        points.push(SweepPoint {
            config,
            accuracy: run.accuracy(),
            cost: agg.coe_row,
            exit_fractions: run.exit_fractions,
        });
    }
    if let Some(grid) = &spec.woc_thresholds {
        let chain = spec
            .tier_pool
            .iter()
            .map(|g| best_model(table, g))
            .collect::<Result<Vec<_>>>()?;
        let chain_tiers: Vec<Vec<String>> = chain.iter().map(|m| vec![m.to_string()]).collect();
        let costs = tier_costs_for(&chain_tiers, profiles, mode)?;
        let woc = grid
            .par_iter()
            .map(|&theta| {
                let run = run_woc(table, &chain, theta)?;
                let agg = aggregate(&run.exit_fractions, &costs, Attribution::ExitTier)?;
                Ok(SweepPoint {
                    config: SweepConfig::Woc { theta },
                    accuracy: run.accuracy(),
                    cost: agg.coe_row,
                    exit_fractions: run.exit_fractions,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        points.extend(woc);
    }
    for (m, id) in table.model_ids().iter().enumerate() {
        let cost = tier_cost(&[find_profile(profiles, id)?], mode)?;
        points.push(SweepPoint {
            config: SweepConfig::Single {
                model_id: id.clone(),
            },
            accuracy: table.accuracy(m),
            cost,
            exit_fractions: vec![1.0],
        });
    }
    Ok(points)
}

/// Flat sweep row as stored in sweep CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub config: String,
    pub theta_v: Option<f64>,
    pub ensemble_size: Option<usize>,
    pub accuracy: f64,
    pub avg_flops: f64,
    pub avg_latency_ms: f64,
    pub gpu_dollars: f64,
}

impl From<&SweepPoint> for SweepRecord {
    fn from(p: &SweepPoint) -> Self {
        Self {
            config: p.config.label(),
            theta_v: p.config.theta(),
            ensemble_size: p.config.ensemble_size(),
            accuracy: p.accuracy,
            avg_flops: p.cost.flops,
            avg_latency_ms: p.cost.latency_ms,
            gpu_dollars: p.cost.dollars_per_hour,
        }
    }
}

const SWEEP_HEADER: [&str; 7] = [
    "config",
    "theta_v",
    "ensemble_size",
    "accuracy",
    "avg_flops",
    "avg_latency_ms",
    "gpu_dollars",
];

pub fn write_sweep<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_write_err)?;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    for r in records {
        w.write_record([
            r.config.clone(),
            opt(r.theta_v.map(|t| format!("{t}"))),
            opt(r.ensemble_size.map(|s| s.to_string())),
            format!("{}", r.accuracy),
            format!("{}", r.avg_flops),
            format!("{}", r.avg_latency_ms),
            format!("{}", r.gpu_dollars),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    Ok(())
}

pub fn read_sweep_str(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::cell(
            1,
            "-",
            format!("expected header {}", SWEEP_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != SWEEP_HEADER.len() {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let bad =
            |c: usize| Error::cell(row, SWEEP_HEADER[c], format!("invalid value {:?}", &rec[c]));
        let num = |c: usize| rec[c].parse::<f64>().map_err(|_| bad(c));
        let theta_v = match &rec[1] {
            "-" => None,
            s => Some(s.parse().map_err(|_| bad(1))?),
        };
        let ensemble_size = match &rec[2] {
            "-" => None,
            s => Some(s.parse().map_err(|_| bad(2))?),
        };
        out.push(SweepRecord {
            config: rec[0].to_string(),
            theta_v,
            ensemble_size,
            accuracy: num(3)?,
            avg_flops: num(4)?,
            avg_latency_ms: num(5)?,
            gpu_dollars: num(6)?,
        });
    }
    Ok(out)
}

/// Anything that records the tier an example exited at.
pub trait ExitTier {
    fn exit_tier(&self) -> usize;
}

impl ExitTier for ExampleTrace {
    fn exit_tier(&self) -> usize {
        self.exit_tier
    }
}

impl ExitTier for TraceRecord {
    fn exit_tier(&self) -> usize {
        self.exit_tier
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitHistogram {
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
}

/// Histogram of exit tiers, sized to the deepest exit observed.
pub fn exit_distribution<T: ExitTier>(traces: &[T]) -> ExitHistogram {
    let depth = traces.iter().map(|t| t.exit_tier() + 1).max().unwrap_or(0);
    exit_distribution_with_tiers(traces, depth)
}

/// Histogram over a fixed number of tiers.
pub fn exit_distribution_with_tiers<T: ExitTier>(traces: &[T], num_tiers: usize) -> ExitHistogram {
    let mut counts = vec![0usize; num_tiers];
    for t in traces {
        counts[t.exit_tier()] += 1;
    }
    let n = traces.len().max(1) as f64;
    ExitHistogram {
        fractions: counts.iter().map(|&c| c as f64 / n).collect(),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrongAgreementRow {
    pub config_label: String,
    /// Examples that left before the final tier with a wrong label.
    pub wrong_agreements: usize,
    /// Of those, how many the big model also gets wrong.
    pub big_model_wrong: usize,
    /// `100 · big_model_wrong / wrong_agreements`; absent when there are none.
    pub rate_percent: Option<f64>,
}

pub fn wrong_agreements(
    config_label: &str,
    run: &CascadeRun,
    table: &PredictionTable,
    big_model: &str,
) -> Result<WrongAgreementRow> {
    let big = table.require_model(big_model)?;
    let index: HashMap<&str, usize> = table
        .example_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let last = run.num_tiers.saturating_sub(1);
    let mut wrong = 0;
    let mut big_wrong = 0;
    for t in &run.traces {
        if t.exit_tier < last && !t.correct {
            wrong += 1;
            let i = *index.get(t.example_id.as_str()).ok_or_else(|| {
                Error::validation(format!("trace for unknown example {}", t.example_id))
            })?;
            let truth: Label = table.true_labels()[i];
            if table.prediction(i, big) != truth {
                big_wrong += 1;
            }
        }
    }
    Ok(WrongAgreementRow {
        config_label: config_label.to_string(),
        wrong_agreements: wrong,
        big_model_wrong: big_wrong,
        rate_percent: (wrong > 0).then(|| 100.0 * big_wrong as f64 / wrong as f64),
    })
}

/// Writes `config,wrong_agreement,big_model,rate_percent`.
pub fn write_wrong_agreements<W: Write>(out: W, rows: &[WrongAgreementRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "wrong_agreement", "big_model", "rate_percent"])
        .map_err(csv_write_err)?;
    for r in rows {
        w.write_record([
            r.config_label.clone(),
            r.wrong_agreements.to_string(),
            r.big_model_wrong.to_string(),
            r.rate_percent
                .map_or_else(|| "-".into(), |v| format!("{v:.2}")),
        ])
        .map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io("<errors>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reductions {
    pub flops: f64,
    pub latency: f64,
    pub dollars: f64,
}

/// Best-single cost divided by cascade cost, per metric. A zero cascade cost
/// gives an infinite ratio.
pub fn reduction_summary(report: &AggregateReport) -> Result<Reductions> {
    let best = report
        .best_single
        .as_ref()
        .ok_or_else(|| Error::validation("reduction summary needs a best single model"))?
        .cost;
    let ratio = |b: f64, c: f64| if c == 0.0 { f64::INFINITY } else { b / c };
    Ok(Reductions {
        flops: ratio(best.flops, report.coe_row.flops),
        latency: ratio(best.latency_ms, report.coe_row.latency_ms),
        dollars: ratio(best.dollars_per_hour, report.coe_row.dollars_per_hour),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::BestSingle;
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::engine::{run_cascade, CascadeSpec};

    fn profiles(table: &PredictionTable) -> Vec<ModelProfile> {
        table
            .model_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| ModelProfile {
                model_id: id.clone(),
                flops_per_example: 10f64.powi(i as i32 + 6),
                latency_ms: 1.0 + i as f64,
                gpu_tier: "V100".into(),
                dollars_per_hour: 0.5,
            })
            .collect()
    }

    fn synth(acc: Vec<f64>, corr: f64, n: usize) -> PredictionTable {
        generate_synthetic(&SyntheticSpec {
            num_examples: n,
            label_space_size: 4,
            model_accuracies: acc,
            correlation: corr,
            seed: 11,
        })
        .unwrap()
    }

    fn pool() -> Vec<Vec<String>> {
        vec![
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec!["m4".into()],
        ]
    }

    #[test]
    fn sweep_cardinality() {
        let t = synth(vec![0.6, 0.6, 0.6, 0.9], 0.3, 200);
        let spec = SweepSpec {
            ensemble_sizes: vec![2],
            thresholds: vec![1.0],
            tier_pool: pool(),
            woc_thresholds: None,
        };
        let pts = sweep(&t, &profiles(&t), &spec, ExecutionMode::Parallel).unwrap();
        assert_eq!(pts.len(), 1 + 4);
        assert!(matches!(
            pts[0].config,
            SweepConfig::Coe {
                ensemble_size: 2,
                ..
            }
        ));
    }

    #[test]
    fn zero_threshold_equals_first_tier_ensemble() {
        let t = synth(vec![0.6, 0.7, 0.65, 0.9], 0.3, 300);
        let spec = SweepSpec {
            ensemble_sizes: vec![1, 2, 3],
            thresholds: vec![0.0],
            tier_pool: pool(),
            woc_thresholds: None,
        };
        for (config, run) in sweep_runs(&t, &spec).unwrap() {
            let size = config.ensemble_size().unwrap();
            let first: Vec<String> = spec.tiers_for_size(size)[0].clone();
            let single = run_cascade(&t, &CascadeSpec::uniform(&[first], 1.0)).unwrap();
            assert_eq!(run.accuracy(), single.accuracy());
        }
    }

    #[test]
    fn unanimity_defers_at_least_as_often() {
        let t = synth(vec![0.6, 0.7, 0.65, 0.9], 0.3, 500);
        let spec = SweepSpec {
            ensemble_sizes: vec![2, 3],
            thresholds: vec![0.66, 1.0],
            tier_pool: pool(),
            woc_thresholds: None,
        };
        let runs = sweep_runs(&t, &spec).unwrap();
        for pair in runs.chunks(2) {
            let deferred = |r: &CascadeRun| r.exit_counts()[1];
            assert!(deferred(&pair[1].1) >= deferred(&pair[0].1));
        }
    }

    #[test]
    fn woc_points_and_csv_round_trip() {
        let t = synth(vec![0.6, 0.7, 0.65, 0.9], 0.3, 100);
        let spec = SweepSpec {
            ensemble_sizes: vec![2, 3],
            thresholds: vec![2.0 / 3.0, 1.0],
            tier_pool: pool(),
            woc_thresholds: Some(default_woc_grid()),
        };
        let pts = sweep(&t, &profiles(&t), &spec, ExecutionMode::Sequential).unwrap();
        assert_eq!(pts.len(), 4 + 11 + 4);
        let recs: Vec<SweepRecord> = pts.iter().map(SweepRecord::from).collect();
        let mut buf = Vec::new();
        write_sweep(&mut buf, &recs).unwrap();
        let back = read_sweep_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn histogram_of_single_tier_run() {
        let t = synth(vec![0.6, 0.7], 0.3, 50);
        let run = run_cascade(&t, &CascadeSpec::uniform(&[vec!["m1", "m2"]], 1.0)).unwrap();
        let h = exit_distribution(&run.traces);
        assert_eq!(h.fractions, vec![1.0]);
        assert_eq!(h.counts, vec![50]);
    }

    #[test]
    fn identical_models_are_unanimous() {
        let t = synth(vec![0.7, 0.7, 0.7, 0.9], 1.0, 400);
        // correlation 1 shares correctness but wrong labels are drawn per model,
        // so build exact copies of m1 instead
        let same = PredictionTable::new(
            t.label_space_size(),
            t.example_ids().to_vec(),
            t.true_labels().to_vec(),
            vec!["a".into(), "b".into(), "c".into(), "big".into()],
            vec![
                t.predictions(0).to_vec(),
                t.predictions(0).to_vec(),
                t.predictions(0).to_vec(),
                t.predictions(3).to_vec(),
            ],
            vec![None; 4],
        )
        .unwrap();
        let run = run_cascade(
            &same,
            &CascadeSpec::uniform(&[vec!["a", "b", "c"], vec!["big"]], 1.0),
        )
        .unwrap();
        assert_eq!(
            exit_distribution_with_tiers(&run.traces, 2).fractions,
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn wrong_agreement_fixture() {
        // 10 examples agree on a wrong label at tier 0, the big model misses 6
        // of them; 5 more agree correctly; 3 defer.
        let n = 18;
        let truth: Vec<Label> = vec![Label(0); n];
        let mut small = vec![Label(1); 10];
        small.extend(vec![Label(0); 5]);
        small.extend(vec![Label(2); 3]);
        let mut other = small.clone();
        for l in other.iter_mut().skip(15) {
            *l = Label(3);
        }
        let mut big = vec![Label(1); 6];
        big.extend(vec![Label(0); 12]);
        let t = PredictionTable::new(
            4,
            (0..n).map(|i| i.to_string()).collect(),
            truth,
            vec!["s1".into(), "s2".into(), "big".into()],
            vec![small, other, big],
            vec![None; 3],
        )
        .unwrap();
        let run = run_cascade(
            &t,
            &CascadeSpec::uniform(&[vec!["s1", "s2"], vec!["big"]], 1.0),
        )
        .unwrap();
        let row = wrong_agreements("2 models, threshold=1.0", &run, &t, "big").unwrap();
        assert_eq!(row.wrong_agreements, 10);
        assert_eq!(row.big_model_wrong, 6);
        assert_eq!(row.rate_percent, Some(60.0));
    }

    #[test]
    fn perfect_first_tier_has_no_wrong_agreements() {
        let t = synth(vec![1.0, 1.0, 0.9], 0.0, 100);
        let run = run_cascade(
            &t,
            &CascadeSpec::uniform(&[vec!["m1", "m2"], vec!["m3"]], 1.0),
        )
        .unwrap();
        let row = wrong_agreements("x", &run, &t, "m3").unwrap();
        assert_eq!(row.wrong_agreements, 0);
        assert_eq!(row.rate_percent, None);
    }

    fn report(coe: TierCost, best: TierCost) -> AggregateReport {
        aggregate(&[1.0], &[coe], Attribution::ExitTier)
            .unwrap()
            .with_best_single(BestSingle {
                model_id: None,
                cost: best,
                accuracy: None,
            })
    }

    #[test]
    fn reductions() {
        let coe = TierCost {
            flops: 3.97e7,
            latency_ms: 4.13,
            dollars_per_hour: 0.79,
        };
        let best = TierCost {
            flops: 2.48e8,
            latency_ms: 9.07,
            dollars_per_hour: 2.49,
        };
        let r = reduction_summary(&report(coe, best)).unwrap();
        assert!((r.dollars - 3.15).abs() < 0.01);
        assert!((r.flops - 6.247).abs() < 0.01);
        let same = reduction_summary(&report(coe, coe)).unwrap();
        assert_eq!((same.flops, same.latency, same.dollars), (1.0, 1.0, 1.0));
        let zero = TierCost::default();
        assert!(reduction_summary(&report(zero, best))
            .unwrap()
            .flops
            .is_infinite());
        let bare = aggregate(&[1.0], &[coe], Attribution::ExitTier).unwrap();
        assert!(reduction_summary(&bare).is_err());
    }
}
