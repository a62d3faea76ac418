//! Deterministic synthetic corpora with planted structure.
//!
//! Authors and concepts are split into communities laid out on a chain
//! (community `k` borders `k - 1` and `k + 1`). Papers draw their authors
//! and concepts mostly from one community, occasionally from a neighbour,
//! so hop distance from the property grows with community distance.
//!
//! Every concept carries a latent quality in `[0, 1]`. Its embedding leans
//! towards the property vector in proportion to that quality, and its
//! theory score is the quality plus bounded noise. After the cutoff,
//! discovery papers pair the property with candidates drawn with weight
//! `discovery_bias^(-distance)`, so nearby candidates are found first.
//!
//! All randomness comes from one ChaCha8 stream seeded with `seed`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use thiserror::Error;

use crate::corpus::{add_years, Corpus, PaperRecord};
use crate::evaluation::GroundTruth;
use crate::format::sig9;
use crate::hypergraph::Hypergraph;

pub const PROPERTY_TOKEN: &str = "property";
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const THEORY_SCORES_FILE: &str = "theory_scores.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth parameters: {0}")]
    Params(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("generated corpus is inconsistent: {0}")]
    Internal(String),
}

/// How latent concept quality relates to community layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlausibilityField {
    /// Uniform on `[0, 1]`, independent of community.
    #[default]
    Independent,
    /// Decreases with distance from the property's community.
    CommunityGradient,
}

impl PlausibilityField {
    pub fn as_str(self) -> &'static str {
        match self {
            PlausibilityField::Independent => "independent",
            PlausibilityField::CommunityGradient => "gradient",
        }
    }
}

impl std::str::FromStr for PlausibilityField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(PlausibilityField::Independent),
            "gradient" => Ok(PlausibilityField::CommunityGradient),
            other => Err(format!("unknown plausibility field {other:?} (independent|gradient)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_authors: usize,
    pub n_communities: usize,
    pub n_concepts: usize,
    pub n_papers_pre: usize,
    pub n_papers_post: usize,
    pub property_community: usize,
    /// Odds multiplier per hop of closeness for discoveries; 1 is neutral.
    pub discovery_bias: f64,
    pub embedding_dim: usize,
    pub plausibility_field: PlausibilityField,
    /// Share of post-cutoff papers that are discovery papers.
    pub discovery_fraction: f64,
    /// Chance that an author or concept slot is filled from a neighbouring community.
    pub cross_community_rate: f64,
    /// Chance that a pre-cutoff paper of the property community mentions the property.
    pub property_rate: f64,
    pub tau_noise: f64,
    pub cutoff_year: i32,
    pub pre_years: u32,
    pub post_years: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            n_authors: 500,
            n_communities: 5,
            n_concepts: 2000,
            n_papers_pre: 10_000,
            n_papers_post: 2_000,
            property_community: 0,
            discovery_bias: 4.0,
            embedding_dim: 32,
            plausibility_field: PlausibilityField::Independent,
            discovery_fraction: 0.1,
            cross_community_rate: 0.05,
            property_rate: 0.03,
            tau_noise: 0.1,
            cutoff_year: 2001,
            pre_years: 10,
            post_years: 10,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: &str| Err(SynthError::Params(m.to_owned()));
        if self.n_authors == 0
            || self.n_communities == 0
            || self.n_concepts == 0
            || self.n_papers_pre == 0
            || self.n_papers_post == 0
            || self.embedding_dim == 0
            || self.pre_years == 0
            || self.post_years == 0
        {
            return fail("all counts must be positive");
        }
        if self.property_community >= self.n_communities {
            return fail("property_community must be below n_communities");
        }
        if self.n_authors < self.n_communities || self.n_concepts < self.n_communities {
            return fail("every community needs at least one author and one concept");
        }
        if !(self.discovery_bias.is_finite() && self.discovery_bias >= 1.0) {
            return fail("discovery_bias must be at least 1");
        }
        for (name, v) in [
            ("discovery_fraction", self.discovery_fraction),
            ("cross_community_rate", self.cross_community_rate),
            ("property_rate", self.property_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::Params(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.tau_noise.is_finite() && self.tau_noise >= 0.0) {
            return fail("tau_noise must be non-negative");
        }
        if self.n_discoveries() == 0 {
            return fail("no discovery papers: raise n_papers_post or discovery_fraction");
        }
        if NaiveDate::from_ymd_opt(self.cutoff_year, 1, 1).is_none() {
            return fail("cutoff_year out of range");
        }
        Ok(())
    }

    pub fn n_discoveries(&self) -> usize {
        (self.n_papers_post as f64 * self.discovery_fraction).round() as usize
    }

    pub fn cutoff(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.cutoff_year, 1, 1).expect("validated cutoff year")
    }

    /// Last day of the post-cutoff period.
    pub fn horizon(&self) -> NaiveDate {
        add_years(self.cutoff(), self.post_years as i32) - Duration::days(1)
    }

    /// `key=value` lines, one per parameter, in a fixed order.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "n_authors={}", self.n_authors);
        let _ = writeln!(s, "n_communities={}", self.n_communities);
        let _ = writeln!(s, "n_concepts={}", self.n_concepts);
        let _ = writeln!(s, "n_papers_pre={}", self.n_papers_pre);
        let _ = writeln!(s, "n_papers_post={}", self.n_papers_post);
        let _ = writeln!(s, "property_community={}", self.property_community);
        let _ = writeln!(s, "discovery_bias={}", self.discovery_bias);
        let _ = writeln!(s, "embedding_dim={}", self.embedding_dim);
        let _ = writeln!(s, "plausibility_field={}", self.plausibility_field.as_str());
        let _ = writeln!(s, "discovery_fraction={}", self.discovery_fraction);
        let _ = writeln!(s, "cross_community_rate={}", self.cross_community_rate);
        let _ = writeln!(s, "property_rate={}", self.property_rate);
        let _ = writeln!(s, "tau_noise={}", self.tau_noise);
        let _ = writeln!(s, "cutoff_year={}", self.cutoff_year);
        let _ = writeln!(s, "pre_years={}", self.pre_years);
        let _ = writeln!(s, "post_years={}", self.post_years);
        s
    }
}

/// Generated files plus the planted quantities behind them.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub params: SynthParams,
    pub corpus: Corpus,
    pub ground_truth: GroundTruth,
    /// Latent quality per concept.
    pub quality: BTreeMap<String, f64>,
    /// Community index per concept.
    pub concept_community: BTreeMap<String, usize>,
    pub corpus_text: String,
    pub embeddings_text: String,
    pub ground_truth_text: String,
    pub theory_scores_text: String,
    pub manifest_text: String,
}

impl SynthBundle {
    pub fn property(&self) -> &str {
        PROPERTY_TOKEN
    }

    /// Writes the five bundle files into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SynthError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io(&path))?;
        }
        Ok(())
    }

    pub fn files(&self) -> [(&'static str, &str); 5] {
        [
            (CORPUS_FILE, &self.corpus_text),
            (EMBEDDINGS_FILE, &self.embeddings_text),
            (GROUND_TRUTH_FILE, &self.ground_truth_text),
            (THEORY_SCORES_FILE, &self.theory_scores_text),
            (MANIFEST_FILE, &self.manifest_text),
        ]
    }
}

struct Layout {
    authors: Vec<Vec<String>>,
    concepts: Vec<Vec<String>>,
    n_communities: usize,
}

impl Layout {
    fn new(p: &SynthParams) -> Self {
        let width = |n: usize| n.to_string().len();
        let (wa, wc) = (width(p.n_authors), width(p.n_concepts));
        let mut authors = vec![Vec::new(); p.n_communities];
        for i in 0..p.n_authors {
            authors[i * p.n_communities / p.n_authors].push(format!("auth{i:0wa$}"));
        }
        let mut concepts = vec![Vec::new(); p.n_communities];
        for i in 0..p.n_concepts {
            concepts[i * p.n_communities / p.n_concepts].push(format!("mat{i:0wc$}"));
        }
        Layout {
            authors,
            concepts,
            n_communities: p.n_communities,
        }
    }

    fn neighbour(&self, k: usize, rng: &mut ChaCha8Rng) -> usize {
        match (k > 0, k + 1 < self.n_communities) {
            (true, true) => {
                if rng.random_bool(0.5) {
                    k - 1
                } else {
                    k + 1
                }
            }
            (true, false) => k - 1,
            (false, true) => k + 1,
            (false, false) => k,
        }
    }

    fn pick<'a>(&self, pool: &'a [Vec<String>], k: usize, cross: f64, rng: &mut ChaCha8Rng) -> &'a str {
        let home = if rng.random_bool(cross) {
            self.neighbour(k, rng)
        } else {
            k
        };
        let members = &pool[home];
        &members[rng.random_range(0..members.len())]
    }
}

fn random_date(start: NaiveDate, end: NaiveDate, rng: &mut ChaCha8Rng) -> NaiveDate {
    let span = (end - start).num_days().max(1);
    start + Duration::days(rng.random_range(0..span))
}

fn community_paper(
    id: String,
    k: usize,
    date: NaiveDate,
    layout: &Layout,
    p: &SynthParams,
    rng: &mut ChaCha8Rng,
) -> PaperRecord {
    let n_auth = rng.random_range(1..=3);
    let n_conc = rng.random_range(1..=3);
    let authors: Vec<&str> = (0..n_auth)
        .map(|_| layout.pick(&layout.authors, k, p.cross_community_rate, rng))
        .collect();
    let concepts: Vec<&str> = (0..n_conc)
        .map(|_| layout.pick(&layout.concepts, k, p.cross_community_rate, rng))
        .collect();
    PaperRecord::new(id, date, authors, concepts)
}

fn record_json(r: &PaperRecord) -> String {
    json!({
        "id": r.paper_id,
        "date": r.date.format("%Y-%m-%d").to_string(),
        "authors": r.authors,
        "concepts": r.concepts,
    })
    .to_string()
}

/// Generates a bundle. Identical parameters give byte-identical files.
pub fn gen_corpus(p: &SynthParams) -> Result<SynthBundle, SynthError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let layout = Layout::new(p);
    let cutoff = p.cutoff();
    let pre_start = add_years(cutoff, -(p.pre_years as i32));
    let post_end = add_years(cutoff, p.post_years as i32);

    // Latent quality per concept.
    let mut quality = BTreeMap::new();
    let mut concept_community = BTreeMap::new();
    for (k, members) in layout.concepts.iter().enumerate() {
        let dist = k.abs_diff(p.property_community) as f64;
        let span = p.n_communities.max(2) as f64 - 1.0;
        for c in members {
            let q = match p.plausibility_field {
                PlausibilityField::Independent => rng.random::<f64>(),
                PlausibilityField::CommunityGradient => {
                    (1.0 - dist / span + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0)
                }
            };
            quality.insert(c.clone(), q);
            concept_community.insert(c.clone(), k);
        }
    }

    // Pre-cutoff literature.
    let mut pre = Vec::with_capacity(p.n_papers_pre);
    for i in 0..p.n_papers_pre {
        let k = rng.random_range(0..p.n_communities);
        let date = random_date(pre_start, cutoff, &mut rng);
        let mut r = community_paper(format!("pre{i:06}"), k, date, &layout, p, &mut rng);
        if k == p.property_community && rng.random_bool(p.property_rate) {
            r.concepts.push(PROPERTY_TOKEN.to_owned());
        }
        pre.push(r);
    }
    // The property must exist before the cutoff.
    if !pre.iter().any(|r| r.mentions(PROPERTY_TOKEN)) {
        let k = p.property_community;
        let date = random_date(pre_start, cutoff, &mut rng);
        let mut r = community_paper(format!("pre{:06}", p.n_papers_pre), k, date, &layout, p, &mut rng);
        r.concepts.push(PROPERTY_TOKEN.to_owned());
        pre.push(r);
    }

    // Candidate distances on the pre-cutoff graph.
    let pre_corpus = Corpus::from_records(pre.clone()).map_err(|e| SynthError::Internal(e.to_string()))?;
    let slice = pre_corpus.slice_before(cutoff);
    let candidates = slice
        .extract_candidates(PROPERTY_TOKEN, p.pre_years, 1)
        .map_err(|e| SynthError::Internal(e.to_string()))?;
    let graph = Hypergraph::build(&slice);
    let dv = graph
        .spd_from_token(PROPERTY_TOKEN)
        .map_err(|e| SynthError::Internal(e.to_string()))?;
    let pool: Vec<&String> = candidates.candidates.iter().collect();
    let weights: Vec<f64> = pool
        .iter()
        .map(|c| {
            let d = graph.node_id(c).map_or(f64::INFINITY, |id| dv.get(id).as_f64());
            p.discovery_bias.powf(-d)
        })
        .collect();

    // Post-cutoff literature: ordinary papers plus discovery papers.
    let n_disc = p.n_discoveries();
    let mut post = Vec::with_capacity(p.n_papers_post);
    for i in 0..p.n_papers_post - n_disc.min(p.n_papers_post) {
        let k = rng.random_range(0..p.n_communities);
        let date = random_date(cutoff, post_end, &mut rng);
        post.push(community_paper(format!("post{i:06}"), k, date, &layout, p, &mut rng));
    }
    if !pool.is_empty() {
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| SynthError::Internal(format!("discovery weights: {e}")))?;
        for i in 0..n_disc {
            let material = pool[sampler.sample(&mut rng)];
            let date = random_date(cutoff, post_end, &mut rng);
            let n_auth = rng.random_range(1..=2);
            let authors: Vec<&str> = (0..n_auth)
                .map(|_| layout.pick(&layout.authors, p.property_community, 0.0, &mut rng))
                .collect();
            post.push(PaperRecord::new(
                format!("disc{i:06}"),
                date,
                authors,
                [PROPERTY_TOKEN, material.as_str()],
            ));
        }
    }

    let mut records = pre;
    records.extend(post);
    records.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.paper_id.cmp(&b.paper_id)));
    let corpus = Corpus::from_records(records).map_err(|e| SynthError::Internal(e.to_string()))?;
    let ground_truth = GroundTruth::from_cooccurrence(&corpus, PROPERTY_TOKEN, cutoff);

    let mut corpus_text = String::new();
    for r in corpus.records() {
        corpus_text.push_str(&record_json(r));
        corpus_text.push('\n');
    }

    // Embeddings: the first axis carries quality, the rest is noise.
    let dim = p.embedding_dim;
    let signal = 3.0;
    let mut embeddings_text = format!("{} {dim}\n", quality.len() + 1);
    let mut push_vec = |token: &str, v: &[f64]| {
        embeddings_text.push_str(token);
        for x in v {
            let _ = write!(embeddings_text, " {x:.6}");
        }
        embeddings_text.push('\n');
    };
    let mut prop_vec = vec![0.0; dim];
    prop_vec[0] = 1.0;
    for x in prop_vec.iter_mut().skip(1) {
        *x = 0.05 * rng.sample::<f64, _>(StandardNormal);
    }
    push_vec(PROPERTY_TOKEN, &prop_vec);
    for (c, q) in &quality {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        v[0] = signal * (2.0 * q - 1.0) + 0.5 * v[0];
        push_vec(c, &v);
    }

    let mut theory_scores_text = String::from("material,tau\n");
    for (c, q) in &quality {
        let noise = if p.tau_noise > 0.0 {
            rng.random_range(-p.tau_noise..p.tau_noise)
        } else {
            0.0
        };
        let _ = writeln!(theory_scores_text, "{c},{}", sig9(q + noise));
    }

    let mut gt_buf = Vec::new();
    ground_truth
        .write_csv(&mut gt_buf)
        .map_err(|e| SynthError::Internal(e.to_string()))?;
    let ground_truth_text = String::from_utf8(gt_buf).expect("ascii csv");

    let mut manifest_text = p.to_manifest();
    let _ = writeln!(manifest_text, "property={PROPERTY_TOKEN}");
    let _ = writeln!(manifest_text, "prediction_date={}", cutoff.format("%Y-%m-%d"));
    let _ = writeln!(manifest_text, "horizon_date={}", p.horizon().format("%Y-%m-%d"));
    let _ = writeln!(manifest_text, "records={}", corpus.len());
    let _ = writeln!(manifest_text, "candidates={}", pool.len());
    let _ = writeln!(manifest_text, "discoveries={}", ground_truth.len());

    Ok(SynthBundle {
        params: p.clone(),
        corpus,
        ground_truth,
        quality,
        concept_community,
        corpus_text,
        embeddings_text,
        ground_truth_text,
        theory_scores_text,
        manifest_text,
    })
}
