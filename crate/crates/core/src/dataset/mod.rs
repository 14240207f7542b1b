//! Prediction tables, model cost cards and GPU price lists.
//!
//! A [`PredictionTable`] holds the true label of every example together with
//! the label each model predicted for it, and optionally each model's
//! confidence score. Everything downstream (voting, cascades, cost reports)
//! reads from an immutable table, so a loaded or generated table can be
//! shared freely between threads.
//!
//! File formats:
//!
//! ```text
//! predictions: example_id,true_label,pred:<model_id>[,score:<model_id>]...
//! profiles:    model_id,flops_per_example,latency_ms,gpu_tier
//! prices:      gpu_tier,dollars_per_hour
//! label map:   label_index,label_name
//! ```

mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Dense class index in `[0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Per-example true labels and per-model predictions.
///
/// Predictions and scores are stored model-major: `predictions[m][i]` is the
/// label model `m` gave example `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    label_space_size: usize,
    example_ids: Vec<String>,
    true_labels: Vec<Label>,
    model_ids: Vec<String>,
    predictions: Vec<Vec<Label>>,
    scores: Vec<Option<Vec<f64>>>,
}

impl PredictionTable {
    /// Builds a table and checks every invariant: unique ids, rectangular
    /// prediction matrix, labels below `label_space_size`, scores in `[0, 1]`.
    pub fn new(
        label_space_size: usize,
        example_ids: Vec<String>,
        true_labels: Vec<Label>,
        model_ids: Vec<String>,
        predictions: Vec<Vec<Label>>,
        scores: Vec<Option<Vec<f64>>>,
    ) -> Result<Self> {
        if label_space_size == 0 {
            return Err(Error::validation("label space size must be positive"));
        }
        if example_ids.len() != true_labels.len() {
            return Err(Error::validation(format!(
                "{} example ids but {} true labels",
                example_ids.len(),
                true_labels.len()
            )));
        }
        if predictions.len() != model_ids.len() || scores.len() != model_ids.len() {
            return Err(Error::validation(
                "predictions and scores must have one entry per model",
            ));
        }
        check_unique(&example_ids, "example_id")?;
        check_unique(&model_ids, "model_id")?;
        let n = example_ids.len();
        let in_range = |l: &Label| l.index() < label_space_size;
        if let Some(pos) = true_labels.iter().position(|l| !in_range(l)) {
            return Err(Error::validation(format!(
                "example {}: true label {} out of range (L = {label_space_size})",
                example_ids[pos], true_labels[pos]
            )));
        }
        for (m, preds) in predictions.iter().enumerate() {
            if preds.len() != n {
                return Err(Error::validation(format!(
                    "model {} has {} predictions for {n} examples",
                    model_ids[m],
                    preds.len()
                )));
            }
            if let Some(pos) = preds.iter().position(|l| !in_range(l)) {
                return Err(Error::validation(format!(
                    "example {}, model {}: label {} out of range (L = {label_space_size})",
                    example_ids[pos], model_ids[m], preds[pos]
                )));
            }
        }
        for (m, s) in scores.iter().enumerate() {
            let Some(s) = s else { continue };
            if s.len() != n {
                return Err(Error::validation(format!(
                    "model {} has {} scores for {n} examples",
                    model_ids[m],
                    s.len()
                )));
            }
            if let Some(pos) = s.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::validation(format!(
                    "example {}, model {}: score {} outside [0,1]",
                    example_ids[pos], model_ids[m], s[pos]
                )));
            }
        }
        Ok(Self {
            label_space_size,
            example_ids,
            true_labels,
            model_ids,
            predictions,
            scores,
        })
    }

    pub fn label_space_size(&self) -> usize {
        self.label_space_size
    }

    pub fn num_examples(&self) -> usize {
        self.example_ids.len()
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn true_labels(&self) -> &[Label] {
        &self.true_labels
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn model_index(&self, model_id: &str) -> Option<usize> {
        self.model_ids.iter().position(|m| m == model_id)
    }

    pub(crate) fn require_model(&self, model_id: &str) -> Result<usize> {
        self.model_index(model_id)
            .ok_or_else(|| Error::validation(format!("unknown model {model_id}")))
    }

    pub fn predictions(&self, model: usize) -> &[Label] {
        &self.predictions[model]
    }

    pub fn scores(&self, model: usize) -> Option<&[f64]> {
        self.scores[model].as_deref()
    }

    pub fn prediction(&self, example: usize, model: usize) -> Label {
        self.predictions[model][example]
    }

    /// Fraction of examples the model labels correctly.
    pub fn accuracy(&self, model: usize) -> f64 {
        if self.num_examples() == 0 {
            return 0.0;
        }
        let hits = self.predictions[model]
            .iter()
            .zip(&self.true_labels)
            .filter(|(p, t)| p == t)
            .count();
        hits as f64 / self.num_examples() as f64
    }

    /// Writes the canonical CSV form: fixed leading columns, remaining headers
    /// sorted, floats in shortest round-trip notation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut columns: Vec<(String, usize, bool)> = Vec::new();
        for (m, id) in self.model_ids.iter().enumerate() {
            columns.push((format!("pred:{id}"), m, false));
            if self.scores[m].is_some() {
                columns.push((format!("score:{id}"), m, true));
            }
        }
        columns.sort_by(|a, b| a.0.cmp(&b.0));

        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["example_id".to_string(), "true_label".to_string()];
        header.extend(columns.iter().map(|c| c.0.clone()));
        w.write_record(&header).map_err(csv_write_err)?;
        for i in 0..self.num_examples() {
            let mut rec = vec![self.example_ids[i].clone(), self.true_labels[i].to_string()];
            for (_, m, is_score) in &columns {
                if *is_score {
                    let s = self.scores[*m].as_ref().expect("score column")[i];
                    rec.push(format!("{s}"));
                } else {
                    rec.push(self.predictions[*m][i].to_string());
                }
            }
            w.write_record(&rec).map_err(csv_write_err)?;
        }
        w.flush().map_err(|e| Error::io("<predictions>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Returns a copy keeping only the listed models, in the given order.
    pub fn select_models(&self, model_ids: &[&str]) -> Result<Self> {
        let idx = model_ids
            .iter()
            .map(|m| self.require_model(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            self.label_space_size,
            self.example_ids.clone(),
            self.true_labels.clone(),
            idx.iter().map(|&m| self.model_ids[m].clone()).collect(),
            idx.iter().map(|&m| self.predictions[m].clone()).collect(),
            idx.iter().map(|&m| self.scores[m].clone()).collect(),
        )
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::validation(format!("duplicate {what} {id}")));
        }
    }
    Ok(())
}

pub(crate) fn csv_write_err(e: csv::Error) -> Error {
    Error::validation(format!("csv write failed: {e}"))
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Class index to class name mapping read from a sidecar file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        check_unique(&names, "label_name")?;
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, label: Label) -> Option<&str> {
        self.names.get(label.index()).map(String::as_str)
    }

    pub fn lookup(&self, name: &str) -> Option<Label> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Label(i as u32))
    }
}

/// Reads a `label_index,label_name` file. Indices must cover `0..n` exactly once.
pub fn load_label_map(path: &Path) -> Result<LabelMap> {
    let mut rdr = open_csv(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::io(path, e.into()))?
        .clone();
    expect_header(&headers, &["label_index", "label_name"])?;
    let mut entries: Vec<(usize, String)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let idx: usize = rec[0].parse().map_err(|_| {
            Error::cell(row, "label_index", format!("not an integer: {:?}", &rec[0]))
        })?;
        entries.push((idx, rec[1].to_string()));
    }
    entries.sort_by_key(|e| e.0);
    for (expect, (idx, _)) in entries.iter().enumerate() {
        if *idx != expect {
            return Err(Error::validation(format!(
                "label map indices must be dense from 0; missing or repeated index near {expect}"
            )));
        }
    }
    LabelMap::from_names(entries.into_iter().map(|e| e.1).collect())
}

fn expect_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, name) in expected.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *name => {}
            _ => return Err(Error::cell(1, *name, "missing column")),
        }
    }
    if headers.len() != expected.len() {
        return Err(Error::cell(
            1,
            headers.get(expected.len()).unwrap_or("-"),
            "unexpected column",
        ));
    }
    Ok(())
}

/// How labels in a predictions file are interpreted.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Declared label space size. Inferred as `max label + 1` when absent.
    pub label_space_size: Option<usize>,
    /// Class names; when present, cells may hold names instead of indices.
    pub label_map: Option<LabelMap>,
}

/// Loads a predictions file with labels inferred from the data.
pub fn load_predictions(path: &Path) -> Result<PredictionTable> {
    load_predictions_with(path, &LoadOptions::default())
}

pub fn load_predictions_with(path: &Path, opts: &LoadOptions) -> Result<PredictionTable> {
    let rdr = open_csv(path)?;
    read_predictions(rdr, opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_predictions_str(text: &str, opts: &LoadOptions) -> Result<PredictionTable> {
    let rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    read_predictions(rdr, opts)
}

enum Column {
    Pred(usize),
    Score(usize),
}

fn read_predictions<R: std::io::Read>(
    mut rdr: csv::Reader<R>,
    opts: &LoadOptions,
) -> Result<PredictionTable> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.get(0) != Some("example_id") {
        return Err(Error::cell(1, "example_id", "missing column"));
    }
    if headers.get(1) != Some("true_label") {
        return Err(Error::cell(1, "true_label", "missing column"));
    }
    let mut model_ids: Vec<String> = Vec::new();
    for h in headers.iter().skip(2) {
        if let Some(id) = h.strip_prefix("pred:") {
            if id.is_empty() {
                return Err(Error::cell(1, h, "empty model id"));
            }
            if model_ids.iter().any(|m| m == id) {
                return Err(Error::cell(1, h, "duplicate model column"));
            }
            model_ids.push(id.to_string());
        }
    }
    let mut columns = Vec::new();
    let mut has_score = vec![false; model_ids.len()];
    for h in headers.iter().skip(2) {
        if let Some(id) = h.strip_prefix("pred:") {
            columns.push(Column::Pred(
                model_ids.iter().position(|m| m == id).unwrap(),
            ));
        } else if let Some(id) = h.strip_prefix("score:") {
            let Some(m) = model_ids.iter().position(|x| x == id) else {
                return Err(Error::cell(1, h, format!("missing column pred:{id}")));
            };
            if has_score[m] {
                return Err(Error::cell(1, h, "duplicate score column"));
            }
            has_score[m] = true;
            columns.push(Column::Score(m));
        } else {
            return Err(Error::cell(1, h, "unexpected column"));
        }
    }
    if model_ids.is_empty() {
        return Err(Error::cell(1, "pred:<model_id>", "missing column"));
    }

    let declared = match (&opts.label_map, opts.label_space_size) {
        (Some(map), Some(l)) if map.len() != l => {
            return Err(Error::validation(format!(
                "label map has {} entries but label space size is {l}",
                map.len()
            )))
        }
        (Some(map), _) => Some(map.len()),
        (None, l) => l,
    };
    let parse_label = |row: usize, col: &str, cell: &str| -> Result<Label> {
        let label = match cell.parse::<u32>() {
            Ok(v) => Label(v),
            Err(_) => match opts.label_map.as_ref().and_then(|m| m.lookup(cell)) {
                Some(l) => l,
                None => {
                    return Err(Error::cell(row, col, format!("invalid label {cell:?}")));
                }
            },
        };
        if let Some(l) = declared {
            if label.index() >= l {
                return Err(Error::cell(
                    row,
                    col,
                    format!("label out of range: {label} (L = {l})"),
                ));
            }
        }
        Ok(label)
    };

    let mut example_ids = Vec::new();
    let mut true_labels = Vec::new();
    let mut predictions: Vec<Vec<Label>> = vec![Vec::new(); model_ids.len()];
    let mut scores: Vec<Vec<f64>> = vec![Vec::new(); model_ids.len()];
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(Error::cell(
                row,
                headers
                    .get(rec.len().min(headers.len().saturating_sub(1)))
                    .unwrap_or("-"),
                format!(
                    "ragged row: {} fields, expected {}",
                    rec.len(),
                    headers.len()
                ),
            ));
        }
        let id = rec[0].to_string();
        if let Some(prev) = seen.insert(id.clone(), row) {
            return Err(Error::cell(
                row,
                "example_id",
                format!("duplicate example_id {id:?} (first at row {prev})"),
            ));
        }
        example_ids.push(id);
        true_labels.push(parse_label(row, "true_label", &rec[1])?);
        for (c, col) in columns.iter().enumerate() {
            let name = &headers[c + 2];
            let cell = &rec[c + 2];
            match *col {
                Column::Pred(m) => predictions[m].push(parse_label(row, name, cell)?),
                Column::Score(m) => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::cell(row, name, format!("invalid score {cell:?}")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::cell(
                            row,
                            name,
                            format!("score {cell} outside [0,1]"),
                        ));
                    }
                    scores[m].push(v);
                }
            }
        }
    }

    let label_space_size = declared.unwrap_or_else(|| {
        true_labels
            .iter()
            .chain(predictions.iter().flatten())
            .map(|l| l.index() + 1)
            .max()
            .unwrap_or(1)
    });
    let scores = scores
        .into_iter()
        .zip(&has_score)
        .map(|(s, &has)| has.then_some(s))
        .collect();
    PredictionTable::new(
        label_space_size,
        example_ids,
        true_labels,
        model_ids,
        predictions,
        scores,
    )
}

/// Hourly rental price per GPU type.
#[derive(Debug, Clone, PartialEq)]
pub struct GpuPriceList {
    entries: Vec<(String, f64)>,
}

impl GpuPriceList {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (tier, price) in &entries {
            if !(price.is_finite() && *price > 0.0) {
                return Err(Error::validation(format!(
                    "gpu tier {tier}: price must be positive, got {price}"
                )));
            }
            if !seen.insert(tier.as_str()) {
                return Err(Error::validation(format!("duplicate gpu tier {tier}")));
            }
        }
        Ok(Self { entries })
    }

    /// Lambda Cloud hourly prices: V100, A6000, A100, H100.
    pub fn lambda_cloud() -> Self {
        Self::new(vec![
            ("V100".into(), 0.50),
            ("A6000".into(), 0.80),
            ("A100".into(), 1.29),
            ("H100".into(), 2.49),
        ])
        .expect("static price list")
    }

    pub fn price(&self, gpu_tier: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == gpu_tier).map(|e| e.1)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }
}

#[derive(Debug, Deserialize)]
struct PriceRow {
    gpu_tier: String,
    dollars_per_hour: f64,
}

pub fn load_prices(path: &Path) -> Result<GpuPriceList> {
    let mut rdr = open_csv(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    expect_header(&headers, &["gpu_tier", "dollars_per_hour"])?;
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<PriceRow>().enumerate() {
        let row = rec.map_err(|e| Error::cell(i + 2, "-", e.to_string()))?;
        if !(row.dollars_per_hour.is_finite() && row.dollars_per_hour > 0.0) {
            return Err(Error::cell(i + 2, "dollars_per_hour", "must be positive"));
        }
        entries.push((row.gpu_tier, row.dollars_per_hour));
    }
    GpuPriceList::new(entries)
}

/// Cost card of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    pub model_id: String,
    pub flops_per_example: f64,
    pub latency_ms: f64,
    pub gpu_tier: String,
    pub dollars_per_hour: f64,
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    model_id: String,
    flops_per_example: f64,
    latency_ms: f64,
    gpu_tier: String,
}

pub fn load_profiles(path: &Path, prices: &GpuPriceList) -> Result<Vec<ModelProfile>> {
    let rdr = open_csv(path)?;
    read_profiles(rdr, prices)
}

pub fn read_profiles_str(text: &str, prices: &GpuPriceList) -> Result<Vec<ModelProfile>> {
    let rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    read_profiles(rdr, prices)
}

fn read_profiles<R: std::io::Read>(
    mut rdr: csv::Reader<R>,
    prices: &GpuPriceList,
) -> Result<Vec<ModelProfile>> {
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    expect_header(
        &headers,
        &["model_id", "flops_per_example", "latency_ms", "gpu_tier"],
    )?;
    let mut out: Vec<ModelProfile> = Vec::new();
    for (i, rec) in rdr.deserialize::<ProfileRow>().enumerate() {
        let row = i + 2;
        let p = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        for (col, v) in [
            ("flops_per_example", p.flops_per_example),
            ("latency_ms", p.latency_ms),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::cell(row, col, format!("must be positive, got {v}")));
            }
        }
        let Some(price) = prices.price(&p.gpu_tier) else {
            return Err(Error::cell(
                row,
                "gpu_tier",
                format!("unknown gpu tier {}", p.gpu_tier),
            ));
        };
        if out.iter().any(|q| q.model_id == p.model_id) {
            return Err(Error::cell(
                row,
                "model_id",
                format!("duplicate model {}", p.model_id),
            ));
        }
        out.push(ModelProfile {
            model_id: p.model_id,
            flops_per_example: p.flops_per_example,
            latency_ms: p.latency_ms,
            gpu_tier: p.gpu_tier,
            dollars_per_hour: price,
        });
    }
    Ok(out)
}
