//! Run configuration: a TOML file with `[inputs]`, `[cascade]` and `[output]`
//! sections, overridden key by key by command-line flags.
//!
//! ```toml
//! [inputs]
//! predictions = "predictions.csv"   # relative to the config file
//! profiles = "profiles.csv"
//! prices = "prices.csv"             # optional, defaults to the built-in list
//! labels = 10                       # optional label space size
//!
//! [cascade]
//! tiers = "m1,m2,m3|m4,m5,m6|m7"
//! theta = "1.0"                     # or one per tier: "0.66|1.0|1.0"
//! mode = "parallel"                 # parallel | sequential
//! attribution = "exit"              # exit | cumulative
//! delays = "0.001,10,100,1000"
//!
//! [output]
//! out = "results"
//! seed = 7
//! threads = 4
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::dataset::{
    load_label_map, load_predictions_with, load_prices, load_profiles, GpuPriceList, LoadOptions,
    ModelProfile, PredictionTable,
};
use crate::engine::{Attribution, CascadeSpec, ExecutionMode, TierSpec};
use crate::error::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    inputs: InputsSection,
    #[serde(default)]
    cascade: CascadeSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputsSection {
    predictions: Option<PathBuf>,
    profiles: Option<PathBuf>,
    prices: Option<PathBuf>,
    labels: Option<usize>,
    label_map: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CascadeSection {
    tiers: Option<String>,
    theta: Option<String>,
    mode: Option<String>,
    attribution: Option<String>,
    delays: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
}

/// Flags shared by the commands that read predictions and profiles.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// GPU price list; defaults to V100/A6000/A100/H100 hourly rates
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Label space size
    #[arg(long)]
    pub labels: Option<usize>,
    /// Sidecar `label_index,label_name` file
    #[arg(long)]
    pub label_map: Option<PathBuf>,
    /// Tiers as comma-separated model ids, tiers separated by '|'
    #[arg(long)]
    pub tiers: Option<String>,
    /// Vote threshold: one value, or one per tier separated by '|'
    #[arg(long)]
    pub theta: Option<String>,
    /// parallel | sequential
    #[arg(long)]
    pub mode: Option<String>,
    /// exit | cumulative
    #[arg(long)]
    pub attribution: Option<String>,
    /// Canonical communication delays in ms, comma-separated
    #[arg(long)]
    pub delays: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Fully merged configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub predictions_path: Option<PathBuf>,
    pub profiles_path: Option<PathBuf>,
    pub prices_path: Option<PathBuf>,
    pub label_space_size: Option<usize>,
    pub label_map_path: Option<PathBuf>,
    pub tiers: Option<Vec<Vec<String>>>,
    pub theta: Option<Vec<f64>>,
    pub execution_mode: ExecutionMode,
    pub attribution_mode: Attribution,
    pub delays: Option<Vec<f64>>,
    pub outputs_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs, threads: Option<usize>) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let parsed: ConfigFile = toml::from_str(&text).map_err(|e| {
                    Error::validation(format!("{}: {}", path.display(), e.message()))
                })?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (parsed, base)
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

        let tiers = args.tiers.clone().or(file.cascade.tiers);
        let theta = args.theta.clone().or(file.cascade.theta);
        let mode = args.mode.clone().or(file.cascade.mode);
        let attribution = args.attribution.clone().or(file.cascade.attribution);
        let delays = args.delays.clone().or(file.cascade.delays);
        Ok(Self {
            predictions_path: args.predictions.clone().or(rel(file.inputs.predictions)),
            profiles_path: args.profiles.clone().or(rel(file.inputs.profiles)),
            prices_path: args.prices.clone().or(rel(file.inputs.prices)),
            label_space_size: args.labels.or(file.inputs.labels),
            label_map_path: args.label_map.clone().or(rel(file.inputs.label_map)),
            tiers: tiers.as_deref().map(parse_tiers).transpose()?,
            theta: theta.as_deref().map(parse_reals).transpose()?,
            execution_mode: mode
                .as_deref()
                .map(parse_mode)
                .transpose()?
                .unwrap_or_default(),
            attribution_mode: attribution
                .as_deref()
                .map(parse_attribution)
                .transpose()?
                .unwrap_or_default(),
            delays: delays.as_deref().map(parse_reals).transpose()?,
            outputs_dir: args
                .out
                .clone()
                .or(rel(file.output.out))
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.or(file.output.seed),
            threads: threads.or(file.output.threads),
        })
    }

    fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        let p = p
            .as_deref()
            .ok_or_else(|| Error::validation(format!("missing --{flag}")))?;
        if !p.exists() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            ));
        }
        Ok(p)
    }

    pub fn load_table(&self) -> Result<PredictionTable> {
        let path = Self::require(&self.predictions_path, "predictions")?;
        let label_map = match &self.label_map_path {
            Some(p) => Some(load_label_map(p)?),
            None => None,
        };
        load_predictions_with(
            path,
            &LoadOptions {
                label_space_size: self.label_space_size,
                label_map,
            },
        )
    }

    pub fn load_prices(&self) -> Result<GpuPriceList> {
        match &self.prices_path {
            Some(p) => load_prices(p),
            None => Ok(GpuPriceList::lambda_cloud()),
        }
    }

    pub fn load_profiles(&self) -> Result<Vec<ModelProfile>> {
        let path = Self::require(&self.profiles_path, "profiles")?;
        load_profiles(path, &self.load_prices()?)
    }

    pub fn tier_models(&self) -> Result<&[Vec<String>]> {
        self.tiers
            .as_deref()
            .ok_or_else(|| Error::validation("missing --tiers"))
    }

    /// Builds the cascade. A single threshold applies to every tier; a list
    /// gives one per tier (the final tier's may be omitted).
    pub fn cascade_spec(&self) -> Result<CascadeSpec> {
        let tiers = self.tier_models()?;
        let k = tiers.len();
        let thetas = match self.theta.as_deref() {
            None => vec![1.0; k],
            Some([one]) => vec![*one; k],
            Some(list) if list.len() == k => list.to_vec(),
            Some(list) if list.len() + 1 == k => {
                let mut v = list.to_vec();
                v.push(1.0);
                v
            }
            Some(list) => {
                return Err(Error::validation(format!(
                    "{} thresholds for {k} tiers",
                    list.len()
                )))
            }
        };
        Ok(CascadeSpec {
            tiers: tiers
                .iter()
                .zip(thetas)
                .map(|(m, theta_v)| TierSpec {
                    model_ids: m.clone(),
                    theta_v,
                })
                .collect(),
            execution_mode: self.execution_mode,
            attribution_mode: self.attribution_mode,
        })
    }
}

pub fn parse_tiers(s: &str) -> Result<Vec<Vec<String>>> {
    let tiers: Vec<Vec<String>> = s
        .split('|')
        .map(|t| {
            t.split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .map(String::from)
                .collect()
        })
        .collect();
    if tiers.iter().any(Vec::is_empty) {
        return Err(Error::validation(format!(
            "--tiers {s:?} has an empty tier"
        )));
    }
    Ok(tiers)
}

/// Reals separated by ',' or '|'.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split([',', '|'])
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::validation(format!("not a number: {x:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::validation("empty number list"))
            } else {
                Ok(v)
            }
        })
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split([',', '|'])
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<usize>()
                .map_err(|_| Error::validation(format!("not a size: {x:?}")))
        })
        .collect()
}

pub fn parse_mode(s: &str) -> Result<ExecutionMode> {
    match s {
        "parallel" => Ok(ExecutionMode::Parallel),
        "sequential" => Ok(ExecutionMode::Sequential),
        _ => Err(Error::validation(format!(
            "--mode must be parallel or sequential, got {s:?}"
        ))),
    }
}

pub fn parse_attribution(s: &str) -> Result<Attribution> {
    match s {
        "exit" | "exit_tier" => Ok(Attribution::ExitTier),
        "cumulative" => Ok(Attribution::Cumulative),
        _ => Err(Error::validation(format!(
            "--attribution must be exit or cumulative, got {s:?}"
        ))),
    }
}
