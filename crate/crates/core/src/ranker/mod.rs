//! Candidate ranking by mixed alienness and plausibility.
//!
//! Each raw signal column is replaced by Van der Waerden normal scores,
//! then z-scored, then mixed as `beta * s1_hat + (1 - |beta|) * s2_hat`.
//! Candidates are sorted by the mixed score, highest first, with ties
//! broken by ascending token.

mod signal;
mod transform;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use log::warn;
use thiserror::Error;

use crate::corpus::{CandidateSet, CorpusSlice};
use crate::embedding::{EmbeddingError, EmbeddingTable};
use crate::format::sig9;
use crate::hypergraph::{GraphError, Hypergraph};

pub use signal::{EmbeddingCosine, HypergraphDistance, Signal, SignalInputs, SignalRegistry};
pub use transform::{mix, van_der_waerden, zscore};

pub const DEFAULT_TOP_K: usize = 50;
pub const PREDICTIONS_HEADER: &str = "rank,material,s_final,s1_hat,s2_hat,spd,cosine";

#[derive(Debug, Error)]
pub enum RankError {
    #[error("beta {0} is outside [-1, 1]")]
    BetaOutOfRange(f64),
    #[error("top_k must be positive")]
    InvalidTopK,
    #[error("empty input")]
    EmptyInput,
    #[error("{0}")]
    NonFinite(String),
    #[error("candidate pool is empty after filtering")]
    EmptyPool,
    #[error("property {property:?} is missing from the {origin}")]
    PropertyMissing {
        origin: &'static str,
        property: String,
    },
    #[error("unknown signal {0:?}")]
    UnknownSignal(String),
    #[error("signal {name:?} returned {got} scores for {want} candidates")]
    SignalLength {
        name: String,
        got: usize,
        want: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("predictions csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerConfig {
    pub beta: f64,
    pub top_k: usize,
    /// Registry name of the alienness signal.
    pub alienness: String,
    /// Registry name of the plausibility signal.
    pub plausibility: String,
}

impl RankerConfig {
    pub fn new(beta: f64) -> Self {
        RankerConfig {
            beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RankError> {
        transform::check_beta(self.beta)?;
        if self.top_k == 0 {
            return Err(RankError::InvalidTopK);
        }
        Ok(())
    }
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            beta: 0.0,
            top_k: DEFAULT_TOP_K,
            alienness: "spd".into(),
            plausibility: "cosine".into(),
        }
    }
}

/// One candidate's raw and standardized signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRow {
    pub candidate: String,
    pub s1: f64,
    pub s2: f64,
    pub s1_tilde: f64,
    pub s2_tilde: f64,
    pub s1_hat: f64,
    pub s2_hat: f64,
}

/// Standardized signals for a whole candidate pool. Independent of beta,
/// so one table serves every point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    property: String,
    prediction_date: Option<NaiveDate>,
    rows: Vec<SignalRow>,
    pool_size: usize,
    dropped: BTreeMap<String, usize>,
}

impl SignalTable {
    /// Scores every candidate with the configured signals and standardizes
    /// both columns over the surviving pool.
    pub fn compute(
        inputs: &SignalInputs<'_>,
        candidates: &CandidateSet,
        registry: &SignalRegistry,
        config: &RankerConfig,
    ) -> Result<SignalTable, RankError> {
        let alien = registry.get(&config.alienness)?;
        let plaus = registry.get(&config.plausibility)?;
        let names: Vec<&str> = candidates.candidates.iter().map(String::as_str).collect();
        let s1 = run_signal(alien.as_ref(), inputs, &names)?;
        let s2 = run_signal(plaus.as_ref(), inputs, &names)?;

        let mut dropped = BTreeMap::new();
        let mut raw = Vec::with_capacity(names.len());
        for ((name, a), b) in names.iter().zip(s1).zip(s2) {
            match (a, b) {
                (Some(a), Some(b)) => raw.push(((*name).to_owned(), a, b)),
                (a, b) => {
                    if a.is_none() {
                        *dropped.entry(alien.name().to_owned()).or_insert(0) += 1;
                    }
                    if b.is_none() {
                        *dropped.entry(plaus.name().to_owned()).or_insert(0) += 1;
                    }
                }
            }
        }
        for (signal, n) in &dropped {
            warn!("dropped {n} candidate(s) lacking a `{signal}` score");
        }
        let mut table = Self::from_raw(inputs.property, raw)?;
        table.pool_size = names.len();
        table.dropped = dropped;
        Ok(table)
    }

    /// Builds a table from raw `(candidate, s1, s2)` triples.
    pub fn from_raw(
        property: &str,
        mut raw: Vec<(String, f64, f64)>,
    ) -> Result<SignalTable, RankError> {
        if raw.is_empty() {
            return Err(RankError::EmptyPool);
        }
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let s1: Vec<f64> = raw.iter().map(|r| r.1).collect();
        let s2: Vec<f64> = raw.iter().map(|r| r.2).collect();
        let s1_tilde = van_der_waerden(&s1)?;
        let s2_tilde = van_der_waerden(&s2)?;
        let s1_hat = zscore(&s1_tilde)?;
        let s2_hat = zscore(&s2_tilde)?;
        let pool_size = raw.len();
        let rows = raw
            .into_iter()
            .enumerate()
            .map(|(i, (candidate, a, b))| SignalRow {
                candidate,
                s1: a,
                s2: b,
                s1_tilde: s1_tilde[i],
                s2_tilde: s2_tilde[i],
                s1_hat: s1_hat[i],
                s2_hat: s2_hat[i],
            })
            .collect();
        Ok(SignalTable {
            property: property.to_owned(),
            prediction_date: None,
            rows,
            pool_size,
            dropped: BTreeMap::new(),
        })
    }

    pub fn with_prediction_date(mut self, date: NaiveDate) -> Self {
        self.prediction_date = Some(date);
        self
    }

    pub fn property(&self) -> &str {
        &self.property
    }

    /// Rows in ascending candidate order.
    pub fn rows(&self) -> &[SignalRow] {
        &self.rows
    }

    /// Candidates offered before any were dropped.
    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Dropped candidates per signal name.
    pub fn dropped(&self) -> &BTreeMap<String, usize> {
        &self.dropped
    }

    /// Top `top_k` candidates for one beta.
    pub fn rank(&self, beta: f64, top_k: usize) -> Result<PredictionSet, RankError> {
        transform::check_beta(beta)?;
        if top_k == 0 {
            return Err(RankError::InvalidTopK);
        }
        let scores: Vec<f64> = self
            .rows
            .iter()
            .map(|r| mix(r.s1_hat, r.s2_hat, beta))
            .collect::<Result<_, _>>()?;
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        // rows are already in token order, so index order breaks ties
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let entries = order
            .into_iter()
            .take(top_k)
            .enumerate()
            .map(|(i, idx)| {
                let r = &self.rows[idx];
                Prediction {
                    rank: i + 1,
                    material: r.candidate.clone(),
                    s_final: scores[idx],
                    s1_hat: r.s1_hat,
                    s2_hat: r.s2_hat,
                    s1: r.s1,
                    s2: r.s2,
                }
            })
            .collect();
        Ok(PredictionSet {
            property: self.property.clone(),
            prediction_date: self.prediction_date,
            beta,
            entries,
        })
    }
}

fn run_signal(
    signal: &dyn Signal,
    inputs: &SignalInputs<'_>,
    names: &[&str],
) -> Result<Vec<Option<f64>>, RankError> {
    let scores = signal.score(inputs, names)?;
    if scores.len() != names.len() {
        return Err(RankError::SignalLength {
            name: signal.name().to_owned(),
            got: scores.len(),
            want: names.len(),
        });
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub rank: usize,
    pub material: String,
    pub s_final: f64,
    pub s1_hat: f64,
    pub s2_hat: f64,
    /// Raw alienness (hop distance for the default signal).
    pub s1: f64,
    /// Raw plausibility (cosine for the default signal).
    pub s2: f64,
}

/// Ranked predictions for one property, prediction date and beta.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub property: String,
    pub prediction_date: Option<NaiveDate>,
    pub beta: f64,
    pub entries: Vec<Prediction>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn materials(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|p| p.material.as_str())
    }

    /// Writes `rank,material,s_final,s1_hat,s2_hat,spd,cosine` rows with
    /// nine significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{PREDICTIONS_HEADER}")?;
        for p in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.rank,
                p.material,
                sig9(p.s_final),
                sig9(p.s1_hat),
                sig9(p.s2_hat),
                sig9(p.s1),
                sig9(p.s2)
            )?;
        }
        Ok(())
    }

    /// Reads a predictions CSV written by [`PredictionSet::write_csv`].
    /// Lines starting with `#` are ignored.
    pub fn read_csv<R: BufRead>(
        input: R,
        property: &str,
        beta: f64,
    ) -> Result<PredictionSet, RankError> {
        let csv_err = |line: usize, message: String| RankError::Csv { line, message };
        let mut entries = Vec::new();
        let mut saw_header = false;
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| csv_err(line_no, e.to_string()))?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if line.trim() != PREDICTIONS_HEADER {
                    return Err(csv_err(line_no, format!("expected header `{PREDICTIONS_HEADER}`")));
                }
                saw_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(csv_err(line_no, format!("expected 7 fields, found {}", f.len())));
            }
            let num = |s: &str| -> Result<f64, RankError> {
                s.parse::<f64>()
                    .map_err(|_| csv_err(line_no, format!("bad number {s:?}")))
            };
            entries.push(Prediction {
                rank: f[0]
                    .parse()
                    .map_err(|_| csv_err(line_no, format!("bad rank {:?}", f[0])))?,
                material: f[1].to_owned(),
                s_final: num(f[2])?,
                s1_hat: num(f[3])?,
                s2_hat: num(f[4])?,
                s1: num(f[5])?,
                s2: num(f[6])?,
            });
        }
        Ok(PredictionSet {
            property: property.to_owned(),
            prediction_date: None,
            beta,
            entries,
        })
    }
}

/// Full pipeline with the default signal registry: hop distance and
/// cosine per candidate, standardize, mix, sort, keep the top `k`.
pub fn generate_predictions(
    slice: &CorpusSlice,
    graph: &Hypergraph,
    embeddings: &EmbeddingTable,
    candidates: &CandidateSet,
    config: &RankerConfig,
) -> Result<PredictionSet, RankError> {
    config.validate()?;
    let inputs = SignalInputs {
        graph,
        embeddings,
        property: &candidates.property,
    };
    SignalTable::compute(&inputs, candidates, &SignalRegistry::with_defaults(), config)?
        .with_prediction_date(slice.cutoff())
        .rank(config.beta, config.top_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn five() -> SignalTable {
        SignalTable::from_raw(
            "prop",
            vec![
                ("a".into(), 2.0, 0.5),
                ("b".into(), 6.0, 0.5),
                ("c".into(), 1.0, 0.9),
                ("d".into(), 3.0, 0.1),
                ("e".into(), f64::INFINITY, 0.3),
            ],
        )
        .unwrap()
    }

    fn order(p: &PredictionSet) -> Vec<&str> {
        p.materials().collect()
    }

    fn position(p: &PredictionSet, m: &str) -> usize {
        p.materials().position(|x| x == m).unwrap()
    }

    #[test]
    fn sign_of_beta_flips_equal_plausibility_pair() {
        let t = five();
        let a = &t.rows()[0];
        let b = &t.rows()[1];
        assert_eq!(a.s2_hat, b.s2_hat);
        let pos = t.rank(0.4, 5).unwrap();
        assert!(position(&pos, "b") < position(&pos, "a"));
        let neg = t.rank(-0.4, 5).unwrap();
        assert!(position(&neg, "a") < position(&neg, "b"));
    }

    #[test]
    fn boundary_betas() {
        let t = five();
        for p in [t.rank(0.0, 5).unwrap(), t.rank(1.0, 5).unwrap(), t.rank(-1.0, 5).unwrap()] {
            for e in &p.entries {
                let want = if p.beta == 0.0 {
                    e.s2_hat
                } else if p.beta == 1.0 {
                    e.s1_hat
                } else {
                    -e.s1_hat
                };
                assert_eq!(e.s_final, want);
            }
        }
        // beta = 0: by cosine, a/b tie broken by token
        assert_eq!(order(&t.rank(0.0, 5).unwrap()), vec!["c", "a", "b", "e", "d"]);
        // beta = 1: most distant first, unreachable on top
        assert_eq!(order(&t.rank(1.0, 5).unwrap()), vec!["e", "b", "d", "a", "c"]);
        assert_eq!(order(&t.rank(-1.0, 5).unwrap()), vec!["c", "a", "d", "b", "e"]);
    }

    #[test]
    fn ranks_and_truncation() {
        let p = five().rank(0.3, 3).unwrap();
        assert_eq!(p.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(p.entries.windows(2).all(|w| w[0].s_final >= w[1].s_final));
        assert_eq!(five().rank(0.3, 100).unwrap().len(), 5);
        assert!(matches!(five().rank(0.3, 0), Err(RankError::InvalidTopK)));
        assert!(matches!(five().rank(-1.5, 3), Err(RankError::BetaOutOfRange(_))));
    }

    #[test]
    fn empty_pool_is_an_error() {
        assert!(matches!(SignalTable::from_raw("p", vec![]), Err(RankError::EmptyPool)));
    }

    #[test]
    fn csv_round_trip_keeps_materials() {
        let p = five().rank(0.2, 5).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(PREDICTIONS_HEADER));
        assert!(text.contains(",inf,"));
        buf.extend_from_slice(b"# trailer\n");
        let back = PredictionSet::read_csv(buf.as_slice(), "prop", 0.2).unwrap();
        assert_eq!(back.materials().collect::<Vec<_>>(), order(&p));
        assert!(PredictionSet::read_csv("x,y\n".as_bytes(), "p", 0.0).is_err());
    }

    proptest! {
        #[test]
        fn strictly_increasing_transform_of_s1_leaves_predictions(
            raw in prop::collection::vec((0u32..8, -100i32..100), 1..40),
            beta in -1.0f64..=1.0,
        ) {
            let rows: Vec<(String, f64, f64)> = raw
                .iter()
                .enumerate()
                .map(|(i, &(d, c))| (format!("m{i:03}"), f64::from(d), f64::from(c) / 100.0))
                .collect();
            let warped: Vec<(String, f64, f64)> = rows
                .iter()
                .map(|(n, d, c)| (n.clone(), (d * 0.7).exp() + 3.0 * d, *c))
                .collect();
            let a = SignalTable::from_raw("p", rows).unwrap().rank(beta, 10).unwrap();
            let b = SignalTable::from_raw("p", warped).unwrap().rank(beta, 10).unwrap();
            prop_assert_eq!(order(&a), order(&b));
            let sa: Vec<f64> = a.entries.iter().map(|e| e.s_final).collect();
            let sb: Vec<f64> = b.entries.iter().map(|e| e.s_final).collect();
            prop_assert_eq!(sa, sb);
        }

        #[test]
        fn extreme_betas_order_by_distance(
            raw in prop::collection::vec((0u32..1000, -100i32..100), 1..40),
        ) {
            let rows: Vec<(String, f64, f64)> = raw
                .iter()
                .enumerate()
                .map(|(i, &(d, c))| (format!("m{i:03}"), f64::from(d), f64::from(c)))
                .collect();
            let t = SignalTable::from_raw("p", rows).unwrap();
            let up = t.rank(1.0, 40).unwrap();
            prop_assert!(up.entries.windows(2).all(|w| w[0].s1 >= w[1].s1));
            let down = t.rank(-1.0, 40).unwrap();
            prop_assert!(down.entries.windows(2).all(|w| w[0].s1 <= w[1].s1));
        }
    }
}
