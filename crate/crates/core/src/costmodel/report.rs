//! Per-dataset cost report CSV: four metric rows per dataset with one column
//! per tier, then the cascade aggregate and the best single model.

use std::io::Write;

use super::AggregateReport;
use crate::dataset::csv_write_err;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportMetric {
    /// Share of examples exiting at each tier.
    Fraction,
    /// Exit fraction times hourly GPU price.
    GpuDollars,
    LatencyMs,
    Flops,
}

impl ReportMetric {
    pub const ALL: [ReportMetric; 4] = [
        ReportMetric::Fraction,
        ReportMetric::GpuDollars,
        ReportMetric::LatencyMs,
        ReportMetric::Flops,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReportMetric::Fraction => "frac_samples",
            ReportMetric::GpuDollars => "gpu_dollars_per_hour",
            ReportMetric::LatencyMs => "avg_latency_ms",
            ReportMetric::Flops => "avg_flops",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Dollars and latency to 2 decimals, FLOPs to 3 significant figures.
    pub fn format(self, v: f64) -> String {
        match self {
            ReportMetric::Flops => format!("{v:.2e}"),
            _ => format!("{v:.2}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReportRow {
    pub dataset: String,
    pub metric: ReportMetric,
    /// One entry per tier column; `None` past the cascade's last tier.
    pub tiers: Vec<Option<f64>>,
    pub coe: f64,
    pub best_single: Option<f64>,
}

impl CostReportRow {
    /// The four metric rows of one report.
    pub fn from_report(dataset: &str, report: &AggregateReport) -> Vec<Self> {
        let best = report.best_single.as_ref().map(|b| b.cost);
        ReportMetric::ALL
            .into_iter()
            .map(|metric| {
                let (tiers, coe, best_single) = match metric {
                    ReportMetric::Fraction => (
                        report.per_tier.iter().map(|(f, _)| *f).collect::<Vec<_>>(),
                        report.per_tier.iter().map(|(f, _)| f).sum(),
                        best.map(|_| 1.0),
                    ),
                    ReportMetric::GpuDollars => (
                        report
                            .per_tier
                            .iter()
                            .map(|(f, c)| f * c.dollars_per_hour)
                            .collect(),
                        report.coe_row.dollars_per_hour,
                        best.map(|b| b.dollars_per_hour),
                    ),
                    ReportMetric::LatencyMs => (
                        report.per_tier.iter().map(|(_, c)| c.latency_ms).collect(),
                        report.coe_row.latency_ms,
                        best.map(|b| b.latency_ms),
                    ),
                    ReportMetric::Flops => (
                        report.per_tier.iter().map(|(_, c)| c.flops).collect(),
                        report.coe_row.flops,
                        best.map(|b| b.flops),
                    ),
                };
                CostReportRow {
                    dataset: dataset.to_string(),
                    metric,
                    tiers: tiers.into_iter().map(Some).collect(),
                    coe,
                    best_single,
                }
            })
            .collect()
    }
}

/// Writes `dataset,metric,tier_1..tier_K,coe,best_single`, padding shorter
/// cascades with `-`.
pub fn write_cost_report<W: Write>(out: W, rows: &[CostReportRow]) -> Result<()> {
    let width = rows.iter().map(|r| r.tiers.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["dataset".to_string(), "metric".to_string()];
    header.extend((1..=width).map(|i| format!("tier_{i}")));
    header.push("coe".into());
    header.push("best_single".into());
    w.write_record(&header).map_err(csv_write_err)?;
    let cell = |m: ReportMetric, v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| m.format(v));
    for r in rows {
        let mut rec = vec![r.dataset.clone(), r.metric.name().to_string()];
        rec.extend((0..width).map(|i| cell(r.metric, r.tiers.get(i).copied().flatten())));
        rec.push(r.metric.format(r.coe));
        rec.push(cell(r.metric, r.best_single));
        w.write_record(&rec).map_err(csv_write_err)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

pub fn read_cost_report_str(text: &str) -> Result<Vec<CostReportRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    let n = headers.len();
    if n < 4
        || &headers[0] != "dataset"
        || &headers[1] != "metric"
        || &headers[n - 2] != "coe"
        || &headers[n - 1] != "best_single"
    {
        return Err(Error::cell(1, "-", "not a cost report header"));
    }
    let width = n - 4;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != n {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let metric = ReportMetric::from_name(&rec[1])
            .ok_or_else(|| Error::cell(row, "metric", format!("unknown metric {:?}", &rec[1])))?;
        let parse = |c: usize| -> Result<Option<f64>> {
            if &rec[c] == "-" {
                return Ok(None);
            }
            rec[c]
                .parse()
                .map(Some)
                .map_err(|_| Error::cell(row, &headers[c], format!("invalid value {:?}", &rec[c])))
        };
        let mut tiers = (0..width)
            .map(|c| parse(c + 2))
            .collect::<Result<Vec<_>>>()?;
        while tiers.last() == Some(&None) {
            tiers.pop();
        }
        let coe = parse(n - 2)?.ok_or_else(|| Error::cell(row, "coe", "missing value"))?;
        rows.push(CostReportRow {
            dataset: rec[0].to_string(),
            metric,
            tiers,
            coe,
            best_single: parse(n - 1)?,
        });
    }
    Ok(rows)
}
