//! Client for a remote prediction provider.
//!
//! Protocol: `POST {base_url}/v1/predict` with body
//! `{"model_id": "...", "example_ids": ["...", ...]}`; a 200 response carries
//! `{"predictions": [{"example_id": "...", "label": 3, "score": 0.91}, ...]}`
//! where `score` is optional. Anything other than 200 is a remote error.

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, PredictionTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteProviderEndpoint {
    pub base_url: String,
    pub timeout_ms: u64,
}

impl RemoteProviderEndpoint {
    pub fn new(base_url: &str, timeout_ms: u64) -> Result<Self> {
        let parsed = url::Url::parse(base_url)
            .map_err(|e| Error::validation(format!("endpoint {base_url:?}: {e}")))?;
        if !matches!(parsed.scheme(), "http" | "https") || parsed.host().is_none() {
            return Err(Error::validation(format!(
                "endpoint {base_url:?}: expected an http(s) URL with a host"
            )));
        }
        if timeout_ms == 0 {
            return Err(Error::validation("endpoint timeout must be positive"));
        }
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            timeout_ms,
        })
    }

    fn predict_url(&self) -> String {
        format!("{}/v1/predict", self.base_url)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictRequest {
    pub model_id: String,
    pub example_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictResponse {
    pub predictions: Vec<RemotePrediction>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RemotePrediction {
    pub example_id: String,
    pub label: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// One model's labels and, if it sent any, its scores.
type ModelColumn = (Vec<Label>, Option<Vec<f64>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchOptions {
    pub batch_size: usize,
    /// Fetch different models on separate threads.
    pub concurrent: bool,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            concurrent: true,
        }
    }
}

/// Predictions for a set of models, without true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RemotePredictions {
    pub example_ids: Vec<String>,
    pub model_ids: Vec<String>,
    pub labels: Vec<Vec<Label>>,
    pub scores: Vec<Option<Vec<f64>>>,
}

impl RemotePredictions {
    /// Attaches true labels (in `example_ids` order) to form a full table.
    pub fn into_table(
        self,
        label_space_size: usize,
        true_labels: Vec<Label>,
    ) -> Result<PredictionTable> {
        PredictionTable::new(
            label_space_size,
            self.example_ids,
            true_labels,
            self.model_ids,
            self.labels,
            self.scores,
        )
    }
}

/// Fetches every model's predictions for `example_ids`, in batches. The merged
/// result is ordered by `model_ids` and `example_ids` whatever order the
/// responses arrive in.
pub fn fetch_remote_predictions(
    endpoint: &RemoteProviderEndpoint,
    model_ids: &[String],
    example_ids: &[String],
    label_space_size: usize,
    opts: FetchOptions,
) -> Result<RemotePredictions> {
    if opts.batch_size == 0 {
        return Err(Error::validation("batch size must be positive"));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();
    let fetch = |model: &String| {
        fetch_model(
            &agent,
            endpoint,
            model,
            example_ids,
            label_space_size,
            opts.batch_size,
        )
    };
    let per_model: Vec<Result<ModelColumn>> = if opts.concurrent {
        std::thread::scope(|s| {
            let handles: Vec<_> = model_ids
                .iter()
                .map(|m| s.spawn(move || fetch(m)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fetch thread panicked"))
                .collect()
        })
    } else {
        model_ids.iter().map(fetch).collect()
    };
    let mut labels = Vec::with_capacity(model_ids.len());
    let mut scores = Vec::with_capacity(model_ids.len());
    for r in per_model {
        let (l, s) = r?;
        labels.push(l);
        scores.push(s);
    }
    Ok(RemotePredictions {
        example_ids: example_ids.to_vec(),
        model_ids: model_ids.to_vec(),
        labels,
        scores,
    })
}

fn fetch_model(
    agent: &ureq::Agent,
    endpoint: &RemoteProviderEndpoint,
    model: &str,
    example_ids: &[String],
    label_space_size: usize,
    batch_size: usize,
) -> Result<ModelColumn> {
    let mut labels = Vec::with_capacity(example_ids.len());
    let mut scores: Vec<Option<f64>> = Vec::with_capacity(example_ids.len());
    for (batch, ids) in example_ids.chunks(batch_size).enumerate() {
        let err = |message: String| Error::Remote {
            model: model.to_string(),
            batch,
            message,
        };
        let request = PredictRequest {
            model_id: model.to_string(),
            example_ids: ids.to_vec(),
        };
        let mut resp = agent
            .post(&endpoint.predict_url())
            .header("Content-Type", "application/json")
            .send_json(&request)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => err("timeout".into()),
                other => err(other.to_string()),
            })?;
        if resp.status() != 200 {
            return Err(err(format!("HTTP status {}", resp.status().as_u16())));
        }
        let body: PredictResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| err(format!("malformed response: {e}")))?;
        let mut by_id: HashMap<&str, &RemotePrediction> = HashMap::with_capacity(ids.len());
        for p in &body.predictions {
            if by_id.insert(p.example_id.as_str(), p).is_some() {
                return Err(err(format!("example {} returned twice", p.example_id)));
            }
        }
        for id in ids {
            let p = by_id
                .remove(id.as_str())
                .ok_or_else(|| err(format!("missing prediction for example {id}")))?;
            if p.label as usize >= label_space_size {
                return Err(err(format!(
                    "example {id}: label out of range: {} (L = {label_space_size})",
                    p.label
                )));
            }
            if let Some(s) = p.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(err(format!("example {id}: score {s} outside [0,1]")));
                }
            }
            labels.push(Label(p.label));
            scores.push(p.score);
        }
        if let Some(extra) = by_id.keys().next() {
            return Err(err(format!("unrequested example {extra} in response")));
        }
    }
    let scored = scores.iter().filter(|s| s.is_some()).count();
    let scores = if scored == 0 {
        None
    } else if scored == scores.len() {
        Some(scores.into_iter().map(Option::unwrap).collect())
    } else {
        return Err(Error::Remote {
            model: model.to_string(),
            batch: 0,
            message: "scores present for some examples but not others".into(),
        });
    };
    Ok((labels, scores))
}
