//! Run configuration: a flat `key=value` file plus same-named flags.
//!
//! Values from a config file that look like relative paths are resolved
//! against the file's directory; flag values are taken as given. Flags win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::Args;
use hypogen::corpus::parse_date;
use hypogen::evaluation::WaitResolution;
use hypogen::ranker::DEFAULT_TOP_K;
use hypogen::CorpusSchema;
use sha2::{Digest, Sha256};

use crate::CliError;

macro_rules! run_keys {
    ($( $field:ident => $help:literal, )*) => {
        /// Settings shared by the pipeline subcommands.
        #[derive(Debug, Clone, Default, Args)]
        pub struct RunArgs {
            /// Flat key=value file; flags override its entries.
            #[arg(long, value_name = "FILE")]
            pub config: Option<PathBuf>,
            $(
                #[arg(long = stringify!($field), value_name = "VALUE", help = $help, allow_hyphen_values = true)]
                pub $field: Option<String>,
            )*
        }

        impl RunArgs {
            pub fn overrides(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $(
                    if let Some(x) = &self.$field {
                        v.push((stringify!($field), x.as_str()));
                    }
                )*
                v
            }
        }

        /// Every recognised configuration key.
        pub const RUN_KEYS: &[&str] = &[$(stringify!($field)),*];
    };
}

run_keys! {
    corpus_path => "Newline-delimited JSON corpus",
    embeddings_path => "word2vec text-format embeddings",
    graph_cache_path => "Binary hypergraph cache",
    alias_path => "CSV alias,canonical table applied to concepts",
    property => "Property concept token",
    prediction_date => "Cutoff date, YYYY or YYYY-MM-DD",
    horizon_date => "Last day counted as a discovery",
    window_years => "Candidate window in years [default: 5]",
    min_mentions => "Minimum papers mentioning a candidate [default: 1]",
    top_k => "Predictions per beta [default: 50]",
    beta => "Mixing coefficient for predict/evaluate",
    beta_grid => "Sweep grid: comma list or start..end:step [default: -1..1:0.2]",
    ground_truth_path => "CSV material,discovery_date (else scanned from the corpus)",
    theory_scores_path => "CSV material,tau",
    predictions_path => "Predictions CSV read by evaluate",
    wait_resolution => "year or month [default: year]",
    output_dir => "Directory for reports and CSVs",
    threads => "Worker threads for sweeps, 0 = all cores [default: 0]",
    alienness => "Alienness signal name [default: spd]",
    plausibility => "Plausibility signal name [default: cosine]",
    id_field => "Corpus field holding the paper id [default: id]",
    date_field => "Corpus field holding the date [default: date]",
    authors_field => "Corpus field holding authors [default: authors]",
    concepts_field => "Corpus field holding concepts [default: concepts]",
}

const PATH_KEYS: &[&str] = &[
    "corpus_path",
    "embeddings_path",
    "graph_cache_path",
    "alias_path",
    "ground_truth_path",
    "theory_scores_path",
    "predictions_path",
    "output_dir",
];

/// Keys that do not change any output byte and so stay out of the hash.
const UNHASHED_KEYS: &[&str] = &["output_dir", "threads"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub embeddings_path: Option<PathBuf>,
    pub graph_cache_path: Option<PathBuf>,
    pub alias_path: Option<PathBuf>,
    pub ground_truth_path: Option<PathBuf>,
    pub theory_scores_path: Option<PathBuf>,
    pub predictions_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub property: Option<String>,
    pub prediction_date: Option<NaiveDate>,
    pub horizon_date: Option<NaiveDate>,
    pub window_years: u32,
    pub min_mentions: u32,
    pub top_k: usize,
    pub beta: Option<f64>,
    pub beta_grid: Vec<f64>,
    pub wait_resolution: WaitResolution,
    pub threads: usize,
    pub alienness: String,
    pub plausibility: String,
    pub schema: CorpusSchema,
    /// SHA-256 over the effective settings, hex encoded.
    pub hash: String,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<RunConfig, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            let base = path.parent().unwrap_or(Path::new(""));
            for (k, v) in parse_config(&text)? {
                let v = if PATH_KEYS.contains(&k.as_str()) {
                    resolve(base, &v)
                } else {
                    v
                };
                values.insert(k, v);
            }
        }
        for (k, v) in args.overrides() {
            values.insert(k.to_owned(), v.to_owned());
        }
        Self::from_map(&values)
    }

    pub fn from_map(values: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
        for k in values.keys() {
            if !RUN_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown config key `{k}`")));
            }
        }
        let get = |k: &str| values.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let path = |k: &str| get(k).map(PathBuf::from);
        let date = |k: &str| -> Result<Option<NaiveDate>, CliError> {
            get(k)
                .map(|v| parse_date(v).ok_or_else(|| invalid(k, v, "expected YYYY or YYYY-MM-DD")))
                .transpose()
        };
        let num = |k: &str, default: usize| -> Result<usize, CliError> {
            get(k).map_or(Ok(default), |v| {
                v.parse().map_err(|_| invalid(k, v, "expected a non-negative integer"))
            })
        };

        let beta = get("beta")
            .map(|v| parse_beta(v).map_err(|m| invalid("beta", v, &m)))
            .transpose()?;
        let beta_grid = match get("beta_grid") {
            Some(v) => parse_grid(v).map_err(|m| invalid("beta_grid", v, &m))?,
            None => parse_grid("-1..1:0.2").expect("default grid"),
        };
        let top_k = num("top_k", DEFAULT_TOP_K)?;
        if top_k == 0 {
            return Err(invalid("top_k", "0", "must be positive"));
        }
        let window_years = num("window_years", 5)?;
        let window_years = u32::try_from(window_years)
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| invalid("window_years", &window_years.to_string(), "must be positive"))?;
        let wait_resolution = match get("wait_resolution") {
            Some(v) => v.parse().map_err(|m: String| invalid("wait_resolution", v, &m))?,
            None => WaitResolution::Year,
        };
        let defaults = CorpusSchema::default();
        let field = |k: &str, d: &str| get(k).unwrap_or(d).to_owned();

        Ok(RunConfig {
            corpus_path: path("corpus_path"),
            embeddings_path: path("embeddings_path"),
            graph_cache_path: path("graph_cache_path"),
            alias_path: path("alias_path"),
            ground_truth_path: path("ground_truth_path"),
            theory_scores_path: path("theory_scores_path"),
            predictions_path: path("predictions_path"),
            output_dir: path("output_dir"),
            property: get("property").map(str::to_owned),
            prediction_date: date("prediction_date")?,
            horizon_date: date("horizon_date")?,
            window_years,
            min_mentions: u32::try_from(num("min_mentions", 1)?)
                .ok()
                .filter(|&m| m > 0)
                .ok_or_else(|| invalid("min_mentions", get("min_mentions").unwrap_or(""), "must be a positive integer"))?,
            top_k,
            beta,
            beta_grid,
            wait_resolution,
            threads: num("threads", 0)?,
            alienness: field("alienness", "spd"),
            plausibility: field("plausibility", "cosine"),
            schema: CorpusSchema {
                id_field: field("id_field", &defaults.id_field),
                date_field: field("date_field", &defaults.date_field),
                authors_field: field("authors_field", &defaults.authors_field),
                concepts_field: field("concepts_field", &defaults.concepts_field),
            },
            hash: config_hash(values),
        })
    }

    /// A path setting that must be present and must exist.
    pub fn existing_path(&self, key: &'static str) -> Result<&Path, CliError> {
        let p = self.path(key).ok_or_else(|| missing(key))?;
        if !p.exists() {
            return Err(CliError::Usage(format!(
                "`{key}` points to {} which does not exist (set --{key})",
                p.display()
            )));
        }
        Ok(p)
    }

    /// An optional path setting; when present it must exist.
    pub fn optional_path(&self, key: &'static str) -> Result<Option<&Path>, CliError> {
        match self.path(key) {
            Some(_) => self.existing_path(key).map(Some),
            None => Ok(None),
        }
    }

    fn path(&self, key: &str) -> Option<&Path> {
        match key {
            "corpus_path" => self.corpus_path.as_deref(),
            "embeddings_path" => self.embeddings_path.as_deref(),
            "graph_cache_path" => self.graph_cache_path.as_deref(),
            "alias_path" => self.alias_path.as_deref(),
            "ground_truth_path" => self.ground_truth_path.as_deref(),
            "theory_scores_path" => self.theory_scores_path.as_deref(),
            "predictions_path" => self.predictions_path.as_deref(),
            "output_dir" => self.output_dir.as_deref(),
            _ => None,
        }
    }

    pub fn output_dir(&self) -> Result<&Path, CliError> {
        self.output_dir.as_deref().ok_or_else(|| missing("output_dir"))
    }

    pub fn property(&self) -> Result<&str, CliError> {
        self.property.as_deref().ok_or_else(|| missing("property"))
    }

    pub fn prediction_date(&self) -> Result<NaiveDate, CliError> {
        self.prediction_date.ok_or_else(|| missing("prediction_date"))
    }

    pub fn horizon_date(&self) -> Result<NaiveDate, CliError> {
        self.horizon_date.ok_or_else(|| missing("horizon_date"))
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        self.beta.ok_or_else(|| missing("beta"))
    }
}

pub fn missing(key: &str) -> CliError {
    CliError::Usage(format!("missing required setting `{key}` (pass --{key} or set it in --config)"))
}

fn invalid(key: &str, value: &str, why: &str) -> CliError {
    CliError::Usage(format!("invalid value {value:?} for `{key}`: {why}"))
}

fn resolve(base: &Path, value: &str) -> String {
    let p = Path::new(value);
    if value.is_empty() || p.is_absolute() {
        value.to_owned()
    } else {
        base.join(p).to_string_lossy().into_owned()
    }
}

/// Parses `key=value` lines. `#` starts a comment line; blank lines are
/// ignored; surrounding whitespace is trimmed.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn config_hash(values: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in values {
        if !UNHASHED_KEYS.contains(&k.as_str()) {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
    }
    hex::encode(h.finalize())
}

fn parse_beta(s: &str) -> Result<f64, String> {
    let b: f64 = s.trim().parse().map_err(|_| "not a number".to_owned())?;
    if !(-1.0..=1.0).contains(&b) {
        return Err("must lie in [-1, 1]".into());
    }
    Ok(b)
}

fn round9(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `-0.8,0,0.8` or `-1..1:0.2` (both ends included).
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let grid = if let Some((range, step)) = s.split_once(':') {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| "expected start..end:step".to_owned())?;
        let a = parse_beta(a)?;
        let b = parse_beta(b)?;
        let step: f64 = step.trim().parse().map_err(|_| "bad step".to_owned())?;
        if !(step.is_finite() && step > 0.0) || b < a {
            return Err("need start <= end and a positive step".into());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| round9(a + i as f64 * step)).collect()
    } else {
        s.split(',')
            .map(|x| parse_beta(x).map(round9))
            .collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    let mut sorted = grid.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err("duplicate grid values".into());
    }
    Ok(grid)
}
