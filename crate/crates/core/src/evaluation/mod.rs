//! Evaluating prediction sets.
//!
//! Discoverability is measured against later publications (precision and
//! discovery wait times). Plausibility is measured against theoretical
//! merit scores `tau`, mapped to probabilities by [`TauTransform`] and
//! combined with confidence weights. Across a beta grid the two give
//! posteriors over beta, their expectation gap, and the joint probability
//! of a prediction being both undiscovered and plausible.

mod tau;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{parse_date, Corpus};
use crate::format::{beta_label, opt9, sig9};
use crate::ranker::PredictionSet;
use crate::stats::{mean, pearson, percentile};

pub use tau::{fit_tau_transform, TauTransform};

pub const EVAL_HEADER: &str =
    "beta,precision,mean_wait,p_plausible,p_not_discovered,posterior_disc,posterior_plaus,joint";

/// Posteriors must sum to one within this tolerance to be compared.
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Csv {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("prediction set is empty")]
    EmptyPredictions,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("theory scores need at least two distinct values")]
    DegenerateScores,
    #[error("no discovered material has a theory score")]
    NoDiscoveredScores,
    #[error("tau_mid {tau_mid} is not strictly inside ({tau_min}, {tau_max})")]
    MidOutOfRange {
        tau_mid: f64,
        tau_min: f64,
        tau_max: f64,
    },
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("no prediction has a theory score")]
    NoTheoryScores,
    #[error("all likelihoods are zero; posterior undefined")]
    AllZero,
    #[error("likelihood for beta {0} is negative or non-finite")]
    InvalidLikelihood(f64),
    #[error("posteriors are over different beta grids")]
    GridMismatch,
    #[error("posterior sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("correlation undefined: {0}")]
    Correlation(&'static str),
}

// ---------------------------------------------------------------------------
// Ground truth and theory scores

/// Material -> earliest discovery date.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    dates: BTreeMap<String, NaiveDate>,
}

impl GroundTruth {
    /// First post-cutoff co-mention of each material with `property`.
    /// Materials already co-mentioned before `after` are excluded.
    pub fn from_cooccurrence(corpus: &Corpus, property: &str, after: NaiveDate) -> Self {
        let mut studied = std::collections::HashSet::new();
        let mut dates: BTreeMap<String, NaiveDate> = BTreeMap::new();
        for r in corpus.records().iter().filter(|r| r.mentions(property)) {
            for c in r.concepts.iter().filter(|c| *c != property) {
                if r.date < after {
                    studied.insert(c.as_str());
                } else {
                    dates
                        .entry(c.clone())
                        .and_modify(|d| *d = (*d).min(r.date))
                        .or_insert(r.date);
                }
            }
        }
        dates.retain(|m, _| !studied.contains(m.as_str()));
        GroundTruth { dates }
    }

    /// Test helper style constructor; panics on unparseable dates.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut gt = GroundTruth::default();
        for (m, d) in pairs {
            gt.insert(m, parse_date(d).expect("valid date"));
        }
        gt
    }

    /// Keeps the earliest date when a material is inserted twice.
    pub fn insert(&mut self, material: &str, date: NaiveDate) {
        self.dates
            .entry(material.to_owned())
            .and_modify(|d| *d = (*d).min(date))
            .or_insert(date);
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse(open(path)?)
    }

    /// CSV with header `material,discovery_date`.
    pub fn parse<R: Read>(input: R) -> Result<Self, EvalError> {
        let mut gt = GroundTruth::default();
        for (line, row) in read_two_columns(input, "ground truth", ["material", "discovery_date"])? {
            let date = parse_date(&row[1]).ok_or_else(|| EvalError::Csv {
                file: "ground truth",
                line,
                message: format!("unparseable date {:?}", row[1]),
            })?;
            gt.insert(&row[0], date);
        }
        Ok(gt)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "material,discovery_date")?;
        for (m, d) in &self.dates {
            writeln!(out, "{m},{}", d.format("%Y-%m-%d"))?;
        }
        Ok(())
    }

    /// Discoveries dated on or before `horizon`.
    pub fn until(&self, horizon: NaiveDate) -> GroundTruth {
        GroundTruth {
            dates: self
                .dates
                .iter()
                .filter(|(_, d)| **d <= horizon)
                .map(|(m, d)| (m.clone(), *d))
                .collect(),
        }
    }

    pub fn get(&self, material: &str) -> Option<NaiveDate> {
        self.dates.get(material).copied()
    }

    pub fn contains(&self, material: &str) -> bool {
        self.dates.contains_key(material)
    }

    pub fn materials(&self) -> impl Iterator<Item = &str> {
        self.dates.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NaiveDate)> {
        self.dates.iter().map(|(m, d)| (m.as_str(), *d))
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// See [`GroundTruth::from_cooccurrence`].
pub fn discovery_from_cooccurrence(corpus: &Corpus, property: &str, after: NaiveDate) -> GroundTruth {
    GroundTruth::from_cooccurrence(corpus, property, after)
}

/// Material -> theoretical merit score.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TheoryScores {
    scores: BTreeMap<String, f64>,
}

impl TheoryScores {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self, EvalError> {
        let mut scores = BTreeMap::new();
        for (m, t) in pairs {
            if !t.is_finite() {
                return Err(EvalError::NonFinite(format!("tau for {m:?}")));
            }
            scores.insert(m.to_owned(), t);
        }
        Ok(TheoryScores { scores })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse(open(path)?)
    }

    /// CSV with header `material,tau`. Duplicate materials are rejected.
    pub fn parse<R: Read>(input: R) -> Result<Self, EvalError> {
        let mut scores = BTreeMap::new();
        for (line, row) in read_two_columns(input, "theory scores", ["material", "tau"])? {
            let err = |message: String| EvalError::Csv {
                file: "theory scores",
                line,
                message,
            };
            let tau: f64 = row[1]
                .parse()
                .map_err(|_| err(format!("bad tau {:?}", row[1])))?;
            if !tau.is_finite() {
                return Err(err(format!("non-finite tau {:?}", row[1])));
            }
            if scores.insert(row[0].clone(), tau).is_some() {
                return Err(err(format!("duplicate material {:?}", row[0])));
            }
        }
        Ok(TheoryScores { scores })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "material,tau")?;
        for (m, t) in &self.scores {
            writeln!(out, "{m},{}", sig9(*t))?;
        }
        Ok(())
    }

    pub fn get(&self, material: &str) -> Option<f64> {
        self.scores.get(material).copied()
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.scores.values().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn open(path: &Path) -> Result<BufReader<File>, EvalError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn read_two_columns<R: Read>(
    input: R,
    file: &'static str,
    header: [&str; 2],
) -> Result<Vec<(usize, Vec<String>)>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let bad_header = || EvalError::Csv {
        file,
        line: 1,
        message: format!("expected header `{}`", header.join(",")),
    };
    let h = rdr.headers().map_err(|_| bad_header())?;
    if h.len() != 2 || h[0] != *header[0] || h[1] != *header[1] {
        return Err(bad_header());
    }
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| EvalError::Csv {
            file,
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 2 || row[0].is_empty() {
            return Err(EvalError::Csv {
                file,
                line,
                message: "expected two fields".into(),
            });
        }
        rows.push((line, vec![row[0].to_owned(), row[1].to_owned()]));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Discoverability

/// Fraction of predictions discovered on or before `horizon`.
pub fn precision(preds: &PredictionSet, gt: &GroundTruth, horizon: NaiveDate) -> Result<f64, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let hits = preds
        .materials()
        .filter(|m| gt.get(m).is_some_and(|d| d <= horizon))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaitResolution {
    #[default]
    Year,
    Month,
}

impl WaitResolution {
    pub fn as_str(self) -> &'static str {
        match self {
            WaitResolution::Year => "year",
            WaitResolution::Month => "month",
        }
    }
}

impl std::str::FromStr for WaitResolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "year" | "years" => Ok(WaitResolution::Year),
            "month" | "months" => Ok(WaitResolution::Month),
            other => Err(format!("unknown wait resolution {other:?} (year|month)")),
        }
    }
}

/// Whole periods elapsed from `from` to `to`.
pub fn elapsed_periods(from: NaiveDate, to: NaiveDate, res: WaitResolution) -> i64 {
    let months = i64::from(to.year() - from.year()) * 12 + i64::from(to.month()) - i64::from(from.month())
        - i64::from(to.day() < from.day());
    match res {
        WaitResolution::Month => months,
        WaitResolution::Year => months.div_euclid(12),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitTimes {
    pub resolution: WaitResolution,
    /// Wait of each discovered prediction, in rank order.
    pub waits: Vec<i64>,
    /// Wait -> fraction of all predictions discovered after that wait.
    pub per_period: BTreeMap<i64, f64>,
    pub mean: Option<f64>,
    pub n_predictions: usize,
}

impl WaitTimes {
    pub fn percentile(&self, q: f64) -> Option<f64> {
        let w: Vec<f64> = self.waits.iter().map(|&x| x as f64).collect();
        percentile(&w, q)
    }
}

/// Discovery wait times of predictions found in `gt` on or after the
/// prediction date.
pub fn wait_times(
    preds: &PredictionSet,
    gt: &GroundTruth,
    prediction_date: NaiveDate,
    resolution: WaitResolution,
) -> WaitTimes {
    let waits: Vec<i64> = preds
        .materials()
        .filter_map(|m| gt.get(m))
        .filter(|d| *d >= prediction_date)
        .map(|d| elapsed_periods(prediction_date, d, resolution))
        .collect();
    let mut per_period = BTreeMap::new();
    if !preds.is_empty() {
        for &w in &waits {
            *per_period.entry(w).or_insert(0.0) += 1.0;
        }
        for v in per_period.values_mut() {
            *v /= preds.len() as f64;
        }
    }
    let as_f64: Vec<f64> = waits.iter().map(|&w| w as f64).collect();
    WaitTimes {
        resolution,
        mean: mean(&as_f64),
        waits,
        per_period,
        n_predictions: preds.len(),
    }
}

// ---------------------------------------------------------------------------
// Plausibility

/// Confidence of a plausibility decision: `t` if `t >= 1/2`, else `1 - t`.
pub fn confidence(t: f64) -> Result<f64, EvalError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(EvalError::OutOfRange(t));
    }
    Ok(if t >= 0.5 { t } else { 1.0 - t })
}

/// Confidence-weighted fraction of `T` values at or above 1/2.
pub fn weighted_plausibility(t_values: &[f64]) -> Result<f64, EvalError> {
    if t_values.is_empty() {
        return Err(EvalError::NoTheoryScores);
    }
    let (mut plausible, mut total) = (0.0, 0.0);
    for &t in t_values {
        let c = confidence(t)?;
        total += c;
        if t >= 0.5 {
            plausible += c;
        }
    }
    Ok(plausible / total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plausibility {
    pub value: f64,
    /// Materials that contributed.
    pub scored: usize,
    /// Materials skipped for lack of a theory score.
    pub missing_tau: usize,
}

/// Weighted estimate of the probability that a material drawn from
/// `materials` is plausible. Materials without a score are skipped.
pub fn plausibility_of<'a>(
    materials: impl IntoIterator<Item = &'a str>,
    transform: &TauTransform,
    scores: &TheoryScores,
) -> Result<Plausibility, EvalError> {
    let mut t_values = Vec::new();
    let mut missing = 0;
    for m in materials {
        match scores.get(m) {
            Some(tau) => t_values.push(transform.apply(tau)),
            None => missing += 1,
        }
    }
    Ok(Plausibility {
        value: weighted_plausibility(&t_values)?,
        scored: t_values.len(),
        missing_tau: missing,
    })
}

pub fn plausibility_given_beta(
    preds: &PredictionSet,
    transform: &TauTransform,
    scores: &TheoryScores,
) -> Result<Plausibility, EvalError> {
    plausibility_of(preds.materials(), transform, scores)
}

/// Normalizes per-beta likelihoods into a posterior under a uniform prior.
pub fn posterior_over_beta(values: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, EvalError> {
    for &(beta, v) in values {
        if !v.is_finite() || v < 0.0 {
            return Err(EvalError::InvalidLikelihood(beta));
        }
    }
    let total: f64 = values.iter().map(|(_, v)| v).sum();
    if total == 0.0 {
        return Err(EvalError::AllZero);
    }
    Ok(values.iter().map(|&(b, v)| (b, v / total)).collect())
}

/// `E[beta | plausible] - E[beta | discovered]`.
pub fn expectation_gap(p_plaus: &[(f64, f64)], p_disc: &[(f64, f64)]) -> Result<f64, EvalError> {
    if p_plaus.len() != p_disc.len() || p_plaus.iter().zip(p_disc).any(|(a, b)| a.0 != b.0) {
        return Err(EvalError::GridMismatch);
    }
    for p in [p_plaus, p_disc] {
        let s: f64 = p.iter().map(|(_, v)| v).sum();
        if (s - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(EvalError::NotNormalized(s));
        }
    }
    let expect = |p: &[(f64, f64)]| p.iter().map(|(b, v)| b * v).sum::<f64>();
    Ok(expect(p_plaus) - expect(p_disc))
}

/// `(1 - precision) * P(plausible | undiscovered)`.
pub fn joint_from_parts(precision: f64, plausibility_undiscovered: f64) -> f64 {
    (1.0 - precision) * plausibility_undiscovered
}

/// Probability that a prediction is both undiscovered by `horizon` and
/// plausible. `None` when every prediction was discovered or no
/// undiscovered prediction has a theory score.
pub fn joint_probability(
    preds: &PredictionSet,
    gt: &GroundTruth,
    transform: &TauTransform,
    scores: &TheoryScores,
    horizon: NaiveDate,
) -> Result<Option<f64>, EvalError> {
    let p = precision(preds, gt, horizon)?;
    let undiscovered = preds
        .materials()
        .filter(|m| !gt.get(m).is_some_and(|d| d <= horizon));
    match plausibility_of(undiscovered, transform, scores) {
        Ok(pl) => Ok(Some(joint_from_parts(p, pl.value))),
        Err(EvalError::NoTheoryScores) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Pearson correlation between beta and precision over a grid.
pub fn precision_beta_correlation(points: &[(f64, f64)]) -> Result<f64, EvalError> {
    if points.len() < 2 {
        return Err(EvalError::Correlation("fewer than two grid points"));
    }
    let betas: Vec<f64> = points.iter().map(|p| p.0).collect();
    let precs: Vec<f64> = points.iter().map(|p| p.1).collect();
    pearson(&betas, &precs).ok_or(EvalError::Correlation("constant series"))
}

// ---------------------------------------------------------------------------
// Sweep report

#[derive(Debug, Clone, PartialEq)]
pub struct BetaEval {
    pub beta: f64,
    pub n_predictions: usize,
    pub n_discovered: usize,
    pub precision: f64,
    pub waits: WaitTimes,
    pub p_plausible: Option<f64>,
    pub p_not_discovered: f64,
    pub posterior_disc: Option<f64>,
    pub posterior_plaus: Option<f64>,
    pub joint: Option<f64>,
    /// Average theory score of the predictions that have one.
    pub mean_tau: Option<f64>,
    pub missing_tau: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub property: String,
    pub rows: Vec<BetaEval>,
    pub expectation_gap: Option<f64>,
    pub precision_correlation: Option<f64>,
    pub tau_transform: Option<TauTransform>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSettings {
    pub prediction_date: NaiveDate,
    pub horizon: NaiveDate,
    pub resolution: WaitResolution,
}

/// Evaluates one prediction set per beta. Rows keep the input order, so
/// the result does not depend on how the per-beta work is scheduled.
pub fn evaluate_sweep(
    predictions: &[PredictionSet],
    gt: &GroundTruth,
    scores: Option<&TheoryScores>,
    settings: EvalSettings,
) -> Result<EvalReport, EvalError> {
    let gt = gt.until(settings.horizon);
    let transform = scores.map(|s| fit_tau_transform(s, &gt)).transpose()?;
    let scored = scores.zip(transform);

    let mut rows = predictions
        .par_iter()
        .map(|preds| evaluate_one(preds, &gt, scored, settings))
        .collect::<Result<Vec<_>, _>>()?;

    let disc: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta, r.precision)).collect();
    let post_disc = posterior_over_beta(&disc).ok();
    let plaus: Option<Vec<(f64, f64)>> = rows
        .iter()
        .map(|r| r.p_plausible.map(|p| (r.beta, p)))
        .collect();
    let post_plaus = plaus.and_then(|p| posterior_over_beta(&p).ok());
    for (i, row) in rows.iter_mut().enumerate() {
        row.posterior_disc = post_disc.as_ref().map(|p| p[i].1);
        row.posterior_plaus = post_plaus.as_ref().map(|p| p[i].1);
    }
    let gap = match (&post_plaus, &post_disc) {
        (Some(pp), Some(pd)) => Some(expectation_gap(pp, pd)?),
        _ => None,
    };
    Ok(EvalReport {
        property: predictions
            .first()
            .map(|p| p.property.clone())
            .unwrap_or_default(),
        rows,
        expectation_gap: gap,
        precision_correlation: precision_beta_correlation(&disc).ok(),
        tau_transform: transform,
    })
}

fn evaluate_one(
    preds: &PredictionSet,
    gt: &GroundTruth,
    scored: Option<(&TheoryScores, TauTransform)>,
    settings: EvalSettings,
) -> Result<BetaEval, EvalError> {
    let p = precision(preds, gt, settings.horizon)?;
    let waits = wait_times(preds, gt, settings.prediction_date, settings.resolution);
    let (p_plausible, joint, mean_tau, missing_tau) = match scored {
        Some((scores, t)) => {
            let pl = match plausibility_given_beta(preds, &t, scores) {
                Ok(pl) => Some(pl),
                Err(EvalError::NoTheoryScores) => None,
                Err(e) => return Err(e),
            };
            let joint = joint_probability(preds, gt, &t, scores, settings.horizon)?;
            let taus: Vec<f64> = preds.materials().filter_map(|m| scores.get(m)).collect();
            let missing = preds.len() - taus.len();
            (pl.map(|x| x.value), joint, mean(&taus), missing)
        }
        None => (None, None, None, 0),
    };
    Ok(BetaEval {
        beta: preds.beta,
        n_predictions: preds.len(),
        n_discovered: waits.waits.len(),
        precision: p,
        waits,
        p_plausible,
        p_not_discovered: 1.0 - p,
        posterior_disc: None,
        posterior_plaus: None,
        joint,
        mean_tau,
        missing_tau,
    })
}

impl EvalReport {
    /// `beta,precision,mean_wait,p_plausible,p_not_discovered,posterior_disc,posterior_plaus,joint`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{EVAL_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                beta_label(r.beta),
                sig9(r.precision),
                opt9(r.waits.mean),
                opt9(r.p_plausible),
                sig9(r.p_not_discovered),
                opt9(r.posterior_disc),
                opt9(r.posterior_plaus),
                opt9(r.joint)
            )?;
        }
        Ok(())
    }

    /// `expectation_gap=<value>` or `expectation_gap=NA`.
    pub fn gap_line(&self) -> String {
        format!("expectation_gap={}", opt9(self.expectation_gap))
    }

    /// One row per property with an overlap percentage and mean theory
    /// score column pair per beta.
    pub fn write_overlap_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["property".to_owned()];
        for r in &self.rows {
            let b = beta_label(r.beta);
            header.push(format!("overlap_pct[beta={b}]"));
            header.push(format!("mean_tau[beta={b}]"));
        }
        writeln!(out, "{}", header.join(","))?;
        let mut cells = vec![self.property.clone()];
        for r in &self.rows {
            cells.push(format!("{:.0}", r.precision * 100.0));
            cells.push(r.mean_tau.map_or_else(|| "NA".into(), |t| format!("{t:.3}")));
        }
        writeln!(out, "{}", cells.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusSchema, PaperRecord};
    use crate::ranker::Prediction;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn preds(beta: f64, materials: &[&str]) -> PredictionSet {
        PredictionSet {
            property: "prop".into(),
            prediction_date: Some(d("2001")),
            beta,
            entries: materials
                .iter()
                .enumerate()
                .map(|(i, m)| Prediction {
                    rank: i + 1,
                    material: (*m).into(),
                    s_final: -(i as f64),
                    s1_hat: 0.0,
                    s2_hat: 0.0,
                    s1: 0.0,
                    s2: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn cooccurrence_ground_truth() {
        let recs = vec![
            PaperRecord::new("1", d("2003"), ["a"], ["prop", "m1"]),
            PaperRecord::new("2", d("2005"), ["a"], ["prop", "m1"]),
            PaperRecord::new("3", d("2000"), ["a"], ["prop", "m2"]),
            PaperRecord::new("4", d("2004"), ["a"], ["prop", "m2"]),
            PaperRecord::new("5", d("2004"), ["a"], ["m3"]),
        ];
        let corpus = Corpus::from_records(recs).unwrap();
        let gt = discovery_from_cooccurrence(&corpus, "prop", d("2001"));
        assert_eq!(gt.get("m1"), Some(d("2003")));
        assert!(!gt.contains("m2"));
        assert!(!gt.contains("m3"));
        assert_eq!(gt.len(), 1);
        let _ = CorpusSchema::default();
    }

    #[test]
    fn ground_truth_csv() {
        let gt = GroundTruth::parse("material,discovery_date\nb,2004\na,2003-05-01\nb,2002\n".as_bytes()).unwrap();
        assert_eq!(gt.get("b"), Some(d("2002")));
        let mut buf = Vec::new();
        gt.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "material,discovery_date\na,2003-05-01\nb,2002-01-01\n"
        );
        assert!(GroundTruth::parse("material,date\n".as_bytes()).is_err());
        assert!(GroundTruth::parse("material,discovery_date\nx,soon\n".as_bytes()).is_err());
    }

    #[test]
    fn theory_scores_csv() {
        let s = TheoryScores::parse("material,tau\na,0.5\nb,-1\n".as_bytes()).unwrap();
        assert_eq!(s.range(), Some((-1.0, 0.5)));
        assert!(TheoryScores::parse("material,tau\na,0.5\na,1\n".as_bytes()).is_err());
        assert!(TheoryScores::parse("material,tau\na,NaN\n".as_bytes()).is_err());
        assert!(TheoryScores::parse("material,tau\na,x\n".as_bytes()).is_err());
    }

    #[test]
    fn precision_fixtures() {
        let gt = GroundTruth::from_pairs([("b", "2003"), ("d", "2004"), ("e", "2002")]);
        let p = preds(0.0, &["a", "b", "c", "d"]);
        assert_eq!(precision(&p, &gt, d("2010")).unwrap(), 0.5);
        assert_eq!(precision(&p, &gt, d("2003-06-01")).unwrap(), 0.25);
        assert_eq!(precision(&preds(0.0, &["x"]), &gt, d("2010")).unwrap(), 0.0);
        assert!(matches!(precision(&preds(0.0, &[]), &gt, d("2010")), Err(EvalError::EmptyPredictions)));
    }

    #[test]
    fn wait_time_fixtures() {
        let gt = GroundTruth::from_pairs([("a", "2003"), ("b", "2005"), ("c", "2001")]);
        let w = wait_times(&preds(0.0, &["a", "b", "z", "q"]), &gt, d("2001"), WaitResolution::Year);
        assert_eq!(w.waits, vec![2, 4]);
        assert_eq!(w.mean, Some(3.0));
        assert_eq!(w.per_period, BTreeMap::from([(2, 0.25), (4, 0.25)]));
        let none = wait_times(&preds(0.0, &["z"]), &gt, d("2001"), WaitResolution::Year);
        assert!(none.waits.is_empty() && none.mean.is_none() && none.per_period.is_empty());
        let zero = wait_times(&preds(0.0, &["c"]), &gt, d("2001"), WaitResolution::Year);
        assert_eq!((zero.waits.clone(), zero.mean), (vec![0], Some(0.0)));
    }

    #[test]
    fn elapsed_periods_counts_whole_periods() {
        let y = WaitResolution::Year;
        let m = WaitResolution::Month;
        assert_eq!(elapsed_periods(d("2001-01-01"), d("2003-12-31"), y), 2);
        assert_eq!(elapsed_periods(d("2020-01-01"), d("2020-07-15"), m), 6);
        assert_eq!(elapsed_periods(d("2020-01-20"), d("2020-02-19"), m), 0);
        assert_eq!(elapsed_periods(d("2020-01-20"), d("2020-02-20"), m), 1);
    }

    #[test]
    fn confidence_branches() {
        assert_eq!(confidence(0.8).unwrap(), 0.8);
        assert_eq!(confidence(0.3).unwrap(), 0.7);
        assert_eq!(confidence(0.5).unwrap(), 0.5);
        assert!(confidence(1.2).is_err());
        assert!(confidence(-0.1).is_err());
    }

    #[test]
    fn weighted_plausibility_fixtures() {
        let v = weighted_plausibility(&[0.8, 0.6, 0.3]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(weighted_plausibility(&[0.9, 0.5]).unwrap(), 1.0);
        assert_eq!(weighted_plausibility(&[0.1, 0.2]).unwrap(), 0.0);
        assert!(weighted_plausibility(&[]).is_err());
    }

    #[test]
    fn plausibility_skips_missing_tau() {
        let t = TauTransform::new(0.0, 1.0, 0.5).unwrap();
        let s = TheoryScores::from_pairs([("a", 0.9), ("b", 0.2)]).unwrap();
        let p = plausibility_given_beta(&preds(0.0, &["a", "b", "c"]), &t, &s).unwrap();
        assert_eq!((p.scored, p.missing_tau), (2, 1));
        let ta = t.apply(0.9);
        let tb = t.apply(0.2);
        assert!((p.value - ta / (ta + 1.0 - tb)).abs() < 1e-15);
        assert!(matches!(
            plausibility_given_beta(&preds(0.0, &["c"]), &t, &s),
            Err(EvalError::NoTheoryScores)
        ));
    }

    #[test]
    fn posterior_fixtures() {
        let p = posterior_over_beta(&[(0.0, 0.5), (0.5, 0.25)]).unwrap();
        assert!((p[0].1 - 2.0 / 3.0).abs() < 1e-15 && (p[1].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(posterior_over_beta(&[(0.3, 0.2)]).unwrap(), vec![(0.3, 1.0)]);
        let u = posterior_over_beta(&[(0.0, 0.1), (0.2, 0.1), (0.4, 0.1), (0.6, 0.1)]).unwrap();
        assert!(u.iter().all(|(_, v)| *v == 0.25));
        assert!(matches!(posterior_over_beta(&[(0.0, 0.0)]), Err(EvalError::AllZero)));
        assert!(posterior_over_beta(&[(0.0, -0.1), (0.2, 1.0)]).is_err());
    }

    #[test]
    fn gap_fixtures() {
        let disc = [(0.0, 2.0 / 3.0), (0.5, 1.0 / 3.0)];
        let plaus = [(0.0, 0.5), (0.5, 0.5)];
        let g = expectation_gap(&plaus, &disc).unwrap();
        assert!((g - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(expectation_gap(&disc, &disc).unwrap(), 0.0);
        assert!((expectation_gap(&disc, &plaus).unwrap() + g).abs() < 1e-15);
        let right = [(0.0, 0.0), (0.5, 1.0)];
        let left = [(0.0, 1.0), (0.5, 0.0)];
        assert!(expectation_gap(&right, &left).unwrap() > 0.0);
        assert!(matches!(expectation_gap(&plaus, &[(0.0, 1.0)]), Err(EvalError::GridMismatch)));
        assert!(matches!(
            expectation_gap(&[(0.0, 0.5), (0.5, 0.4)], &disc),
            Err(EvalError::NotNormalized(_))
        ));
    }

    #[test]
    fn joint_fixtures() {
        assert_eq!(joint_from_parts(0.25, 0.6), 0.75 * 0.6);
        let t = TauTransform::new(0.0, 1.0, 0.5).unwrap();
        let s = TheoryScores::from_pairs([("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.95)]).unwrap();
        let gt = GroundTruth::from_pairs([("d", "2003")]);
        let p = preds(0.0, &["a", "b", "c", "d"]);
        let j = joint_probability(&p, &gt, &t, &s, d("2010")).unwrap().unwrap();
        // all undiscovered T >= 1/2, so only the precision term remains
        assert_eq!(j, 0.75);
        let p0 = preds(0.0, &["a", "b"]);
        assert_eq!(joint_probability(&p0, &gt, &t, &s, d("2010")).unwrap(), Some(1.0));
        let all = GroundTruth::from_pairs([("a", "2003"), ("b", "2004")]);
        assert_eq!(joint_probability(&p0, &all, &t, &s, d("2010")).unwrap(), None);
    }

    #[test]
    fn correlation_fixtures() {
        let r = precision_beta_correlation(&[(0.0, 0.4), (0.5, 0.1), (1.0, 0.4)]).unwrap();
        assert_eq!(r, 0.0);
        let r = precision_beta_correlation(&[(-1.0, 0.5), (0.0, 0.3), (1.0, 0.1)]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
        assert!(precision_beta_correlation(&[(0.0, 0.2), (1.0, 0.2)]).is_err());
        assert!(precision_beta_correlation(&[(0.0, 0.2)]).is_err());
    }

    #[test]
    fn sweep_report_layout() {
        let gt = GroundTruth::from_pairs([("a", "2003"), ("b", "2005"), ("c", "2004")]);
        let s = TheoryScores::from_pairs([("a", 0.2), ("b", 0.6), ("c", 0.4), ("x", 0.9), ("y", 0.0)]).unwrap();
        let sets = vec![
            preds(0.0, &["a", "b", "x", "y"]),
            preds(0.2, &["a", "x", "y", "z"]),
            preds(0.4, &["x", "y", "z", "w"]),
        ];
        let settings = EvalSettings {
            prediction_date: d("2001"),
            horizon: d("2010"),
            resolution: WaitResolution::Year,
        };
        let rep = evaluate_sweep(&sets, &gt, Some(&s), settings).unwrap();
        assert_eq!(rep.rows.len(), 3);
        let sum: f64 = rep.rows.iter().filter_map(|r| r.posterior_disc).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(rep.rows[2].posterior_disc, Some(0.0));
        assert!(rep.expectation_gap.is_some());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(EVAL_HEADER));
        assert!(text.lines().nth(1).unwrap().starts_with("0,0.5,3,"));
        let mut buf = Vec::new();
        rep.write_overlap_table(&mut buf).unwrap();
        let table = String::from_utf8(buf).unwrap();
        let mut lines = table.lines();
        assert_eq!(
            lines.next().unwrap(),
            "property,overlap_pct[beta=0],mean_tau[beta=0],overlap_pct[beta=0.2],mean_tau[beta=0.2],overlap_pct[beta=0.4],mean_tau[beta=0.4]"
        );
        assert_eq!(lines.next().unwrap(), "prop,50,0.425,25,0.367,0,0.450");

        let no_tau = evaluate_sweep(&sets, &gt, None, settings).unwrap();
        assert_eq!(no_tau.gap_line(), "expectation_gap=NA");
        assert!(no_tau.rows.iter().all(|r| r.joint.is_none() && r.p_plausible.is_none()));
    }
}
