use std::path::Path;

use super::TierCost;
use crate::error::{Error, Result};

/// Per-tier exit fractions and cost metrics of a finished cascade run,
/// recorded without the underlying predictions.
///
/// ```text
/// # comment lines start with '#'
/// row,fraction,dollars_per_hour,latency_ms,flops
/// tier_1,0.73,0.50,3.11,5.42e6
/// ...
/// best_single,1.00,2.49,9.07,2.48e8
/// reference_coe,1.00,0.79,4.13,3.97e7     (optional reference row)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TierFixture {
    pub name: String,
    pub tiers: Vec<(f64, TierCost)>,
    pub best_single: TierCost,
    /// Aggregate row as originally reported, for comparison.
    pub reference_coe: Option<TierCost>,
}

impl TierFixture {
    pub fn fractions(&self) -> Vec<f64> {
        self.tiers.iter().map(|t| t.0).collect()
    }

    pub fn costs(&self) -> Vec<TierCost> {
        self.tiers.iter().map(|t| t.1).collect()
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.tiers.iter().map(|t| t.1.latency_ms).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.tiers.iter().map(|t| t.1.dollars_per_hour).collect()
    }
}

/// Loads a fixture; its name is the file stem.
pub fn load_tier_fixture(path: &Path) -> Result<TierFixture> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_tier_fixture(&name, &text)
}

pub fn parse_tier_fixture(name: &str, text: &str) -> Result<TierFixture> {
    const HEADER: [&str; 5] = ["row", "fraction", "dollars_per_hour", "latency_ms", "flops"];
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::cell(
            1,
            "-",
            format!("expected header {}", HEADER.join(",")),
        ));
    }
    let mut tiers = Vec::new();
    let mut best_single = None;
    let mut reference_coe = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::cell(i + 2, "-", e.to_string()))?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        if rec.len() != HEADER.len() {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let mut vals = [0.0f64; 4];
        for (c, v) in vals.iter_mut().enumerate() {
            *v = rec[c + 1]
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| {
                    Error::cell(
                        row,
                        HEADER[c + 1],
                        format!("invalid value {:?}", &rec[c + 1]),
                    )
                })?;
        }
        let cost = TierCost {
            dollars_per_hour: vals[1],
            latency_ms: vals[2],
            flops: vals[3],
        };
        match &rec[0] {
            "best_single" => best_single = Some(cost),
            "reference_coe" => reference_coe = Some(cost),
            label => {
                let expected = format!("tier_{}", tiers.len() + 1);
                if label != expected {
                    return Err(Error::cell(
                        row,
                        "row",
                        format!("expected {expected}, got {label}"),
                    ));
                }
                tiers.push((vals[0], cost));
            }
        }
    }
    if tiers.is_empty() {
        return Err(Error::validation(format!("fixture {name}: no tier rows")));
    }
    let best_single = best_single
        .ok_or_else(|| Error::validation(format!("fixture {name}: missing best_single row")))?;
    Ok(TierFixture {
        name: name.to_string(),
        tiers,
        best_single,
        reference_coe,
    })
}
