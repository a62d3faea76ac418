//! One function per subcommand. Every file written carries a trailing
//! `# config_sha256=<hex>` line so it can be traced to its settings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hypogen::corpus::AliasTable;
use hypogen::evaluation::{evaluate_sweep, EvalReport, EvalSettings, GroundTruth, TheoryScores};
use hypogen::format::{beta_label, opt9, sig9};
use hypogen::hypergraph::{read_cache, write_cache};
use hypogen::ranker::{PredictionSet, RankerConfig, SignalInputs, SignalRegistry, SignalTable};
use hypogen::stats::mean;
use hypogen::synth::{self, SynthParams};
use hypogen::{CandidateSet, Corpus, CorpusSlice, Distance, EmbeddingTable, Hypergraph};
use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{missing, RunConfig};
use crate::{CliError, SynthArgs};

pub const RUN_CONF_FILE: &str = "run.conf";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Renders `body` into memory, appends the hash trailer and writes the file.
fn write_output(
    dir: &Path,
    name: &str,
    hash: &str,
    body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let mut buf = Vec::new();
    body(&mut buf).map_err(io_err(&path))?;
    writeln!(buf, "# config_sha256={hash}").map_err(io_err(&path))?;
    fs::write(&path, buf).map_err(io_err(&path))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let path = cfg.existing_path("corpus_path")?;
    let aliases = cfg
        .optional_path("alias_path")?
        .map(AliasTable::load)
        .transpose()?;
    let t = Instant::now();
    let corpus = Corpus::load(path, &cfg.schema, aliases.as_ref())?;
    info!("loaded {} records in {:.3}s", corpus.len(), t.elapsed().as_secs_f64());
    Ok(corpus)
}

fn load_embeddings(cfg: &RunConfig) -> Result<EmbeddingTable, CliError> {
    let path = cfg.existing_path("embeddings_path")?;
    let t = Instant::now();
    let table = EmbeddingTable::load(path)?;
    info!("loaded {} vectors in {:.3}s", table.len(), t.elapsed().as_secs_f64());
    Ok(table)
}

/// Reads the graph cache when one is configured and present, otherwise
/// builds the graph from the slice.
fn load_graph(cfg: &RunConfig, slice: &CorpusSlice) -> Result<Hypergraph, CliError> {
    let t = Instant::now();
    if let Some(path) = cfg.graph_cache_path.as_deref().filter(|p| p.exists()) {
        let file = File::open(path).map_err(io_err(path))?;
        let graph = read_cache(BufReader::new(file))?;
        if graph.cutoff() != Some(slice.cutoff()) {
            return Err(CliError::Data(format!(
                "graph cache {} was built for cutoff {}, but prediction_date is {}; rerun build-graph",
                path.display(),
                graph.cutoff().map_or_else(|| "none".into(), |d| d.to_string()),
                slice.cutoff()
            )));
        }
        info!("read graph cache in {:.3}s", t.elapsed().as_secs_f64());
        return Ok(graph);
    }
    let graph = Hypergraph::build(slice);
    info!(
        "built graph ({} nodes, {} hyperedges) in {:.3}s",
        graph.node_count(),
        graph.edge_count(),
        t.elapsed().as_secs_f64()
    );
    Ok(graph)
}

fn ground_truth(cfg: &RunConfig, corpus: Option<&Corpus>) -> Result<GroundTruth, CliError> {
    if let Some(path) = cfg.optional_path("ground_truth_path")? {
        return Ok(GroundTruth::load(path)?);
    }
    let corpus = match corpus {
        Some(c) => c,
        None => {
            return Err(CliError::Usage(
                "no ground truth: set `ground_truth_path`, or `corpus_path` to scan co-occurrences".into(),
            ))
        }
    };
    Ok(GroundTruth::from_cooccurrence(corpus, cfg.property()?, cfg.prediction_date()?))
}

fn theory_scores(cfg: &RunConfig) -> Result<Option<TheoryScores>, CliError> {
    Ok(cfg
        .optional_path("theory_scores_path")?
        .map(TheoryScores::load)
        .transpose()?)
}

struct Prepared {
    corpus: Corpus,
    candidates: CandidateSet,
    table: SignalTable,
}

/// Corpus, candidates and standardized signals: everything beta-independent.
fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let property = cfg.property()?;
    let cutoff = cfg.prediction_date()?;
    let embeddings = load_embeddings(cfg)?;
    let corpus = load_corpus(cfg)?;
    let slice = corpus.slice_before(cutoff);
    let candidates = slice.extract_candidates(property, cfg.window_years, cfg.min_mentions)?;
    let graph = load_graph(cfg, &slice)?;
    let t = Instant::now();
    let inputs = SignalInputs {
        graph: &graph,
        embeddings: &embeddings,
        property,
    };
    let ranker = RankerConfig {
        beta: 0.0,
        top_k: cfg.top_k,
        alienness: cfg.alienness.clone(),
        plausibility: cfg.plausibility.clone(),
    };
    let table = SignalTable::compute(&inputs, &candidates, &SignalRegistry::with_defaults(), &ranker)?
        .with_prediction_date(cutoff);
    info!(
        "scored {} of {} candidates in {:.3}s",
        table.rows().len(),
        table.pool_size(),
        t.elapsed().as_secs_f64()
    );
    Ok(Prepared {
        corpus,
        candidates,
        table,
    })
}

fn report_header(cfg: &RunConfig, p: &Prepared) -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "property={}", cfg.property()?);
    let _ = writeln!(s, "prediction_date={}", cfg.prediction_date()?);
    let _ = writeln!(s, "window_years={}", cfg.window_years);
    let _ = writeln!(s, "min_mentions={}", cfg.min_mentions);
    let _ = writeln!(s, "pool_size={}", p.candidates.len());
    for name in [&cfg.alienness, &cfg.plausibility] {
        let n = p.table.dropped().get(name.as_str()).copied().unwrap_or(0);
        let _ = writeln!(s, "dropped[{name}]={n}");
    }
    let _ = writeln!(s, "ranked_pool={}", p.table.rows().len());
    let _ = writeln!(s, "top_k={}", cfg.top_k);
    Ok(s)
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let corpus = load_corpus(cfg)?;
    let vocab = corpus.vocabulary();
    let mut s = String::new();
    let _ = writeln!(s, "records={}", corpus.len());
    let _ = writeln!(s, "authors={}", vocab.count(hypogen::corpus::EntityKind::Author));
    let _ = writeln!(s, "concepts={}", vocab.count(hypogen::corpus::EntityKind::Concept));
    match corpus.date_range() {
        Some((a, b)) => {
            let _ = writeln!(s, "first_date={a}\nlast_date={b}");
        }
        None => s.push_str("first_date=NA\nlast_date=NA\n"),
    }
    if let (Some(p), Some(d)) = (&cfg.property, cfg.prediction_date) {
        let slice = corpus.slice_before(d);
        let _ = writeln!(s, "records_before_cutoff={}", slice.len());
        let cands = slice.extract_candidates(p, cfg.window_years, cfg.min_mentions)?;
        let _ = writeln!(s, "candidates={}", cands.len());
    }
    print!("{s}");
    write_output(out, "corpus_stats.txt", &cfg.hash, |w| w.write_all(s.as_bytes()))?;
    Ok(())
}

pub fn build_graph(cfg: &RunConfig) -> Result<(), CliError> {
    let cache = cfg
        .graph_cache_path
        .as_deref()
        .ok_or_else(|| missing("graph_cache_path"))?;
    let cutoff = cfg.prediction_date()?;
    let corpus = load_corpus(cfg)?;
    let t = Instant::now();
    let graph = Hypergraph::build(&corpus.slice_before(cutoff));
    info!("built graph in {:.3}s", t.elapsed().as_secs_f64());
    if let Some(dir) = cache.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(cache).map_err(io_err(cache))?;
    let mut w = io::BufWriter::new(file);
    write_cache(&graph, &mut w)?;
    w.flush().map_err(io_err(cache))?;
    let stats = graph.stats().to_string();
    print!("{stats}");
    if let Some(out) = &cfg.output_dir {
        write_output(out, "graph_stats.txt", &cfg.hash, |w| w.write_all(stats.as_bytes()))?;
    }
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let beta = cfg.beta()?;
    let prepared = prepare(cfg)?;
    let preds = prepared.table.rank(beta, cfg.top_k)?;
    write_output(out, "predictions.csv", &cfg.hash, |w| preds.write_csv(w))?;
    let mut report = report_header(cfg, &prepared)?;
    let _ = writeln!(report, "beta={}", beta_label(beta));
    let _ = writeln!(report, "predictions={}", preds.len());
    write_output(out, "run_report.txt", &cfg.hash, |w| w.write_all(report.as_bytes()))?;
    Ok(())
}

fn settings(cfg: &RunConfig) -> Result<EvalSettings, CliError> {
    Ok(EvalSettings {
        prediction_date: cfg.prediction_date()?,
        horizon: cfg.horizon_date()?,
        resolution: cfg.wait_resolution,
    })
}

fn write_summary(out: &Path, cfg: &RunConfig, report: &EvalReport) -> Result<(), CliError> {
    let mut s = report.gap_line();
    s.push('\n');
    let _ = writeln!(s, "precision_beta_pearson={}", opt9(report.precision_correlation));
    if let Some(t) = &report.tau_transform {
        let _ = writeln!(
            s,
            "tau_min={}\ntau_max={}\ntau_mid={}\ntau_shift={}",
            sig9(t.tau_min),
            sig9(t.tau_max),
            sig9(t.tau_mid),
            sig9(t.b)
        );
    }
    let missing: usize = report.rows.iter().map(|r| r.missing_tau).sum();
    let _ = writeln!(s, "predictions_without_tau={missing}");
    write_output(out, "summary.txt", &cfg.hash, |w| w.write_all(s.as_bytes()))?;
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let property = cfg.property()?;
    let beta = cfg.beta()?;
    let settings = settings(cfg)?;
    let path = cfg.existing_path("predictions_path")?;
    let file = File::open(path).map_err(io_err(path))?;
    let mut preds = PredictionSet::read_csv(BufReader::new(file), property, beta)?;
    preds.prediction_date = Some(settings.prediction_date);
    let corpus = match cfg.ground_truth_path {
        Some(_) => None,
        None => Some(load_corpus(cfg)?),
    };
    let gt = ground_truth(cfg, corpus.as_ref())?;
    let scores = theory_scores(cfg)?;
    let report = evaluate_sweep(std::slice::from_ref(&preds), &gt, scores.as_ref(), settings)?;
    write_output(out, "eval.csv", &cfg.hash, |w| report.write_csv(w))?;
    write_summary(out, cfg, &report)?;
    Ok(())
}

fn thread_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))
}

pub fn prediction_file_name(beta: f64) -> String {
    format!("predictions_beta_{}.csv", beta_label(beta))
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let settings = settings(cfg)?;
    let start = Instant::now();
    let prepared = prepare(cfg)?;
    let gt = ground_truth(cfg, Some(&prepared.corpus))?;
    let scores = theory_scores(cfg)?;

    let pool = thread_pool(cfg)?;
    let (all_preds, report) = pool.install(|| -> Result<_, CliError> {
        let preds = cfg
            .beta_grid
            .par_iter()
            .map(|&b| prepared.table.rank(b, cfg.top_k))
            .collect::<Result<Vec<_>, _>>()?;
        let report = evaluate_sweep(&preds, &gt, scores.as_ref(), settings)?;
        Ok((preds, report))
    })?;

    for p in &all_preds {
        write_output(out, &prediction_file_name(p.beta), &cfg.hash, |w| p.write_csv(w))?;
    }
    write_output(out, "eval.csv", &cfg.hash, |w| report.write_csv(w))?;
    write_summary(out, cfg, &report)?;
    write_output(out, "overlap_table.csv", &cfg.hash, |w| report.write_overlap_table(w))?;
    write_output(out, "plot_precision.csv", &cfg.hash, |w| {
        writeln!(w, "beta,precision,posterior_disc")?;
        for r in &report.rows {
            writeln!(w, "{},{},{}", beta_label(r.beta), sig9(r.precision), opt9(r.posterior_disc))?;
        }
        Ok(())
    })?;
    write_output(out, "plot_wait.csv", &cfg.hash, |w| {
        writeln!(w, "beta,mean_wait,median_wait,n_discovered,resolution")?;
        for r in &report.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                beta_label(r.beta),
                opt9(r.waits.mean),
                opt9(r.waits.percentile(50.0)),
                r.n_discovered,
                r.waits.resolution.as_str()
            )?;
        }
        Ok(())
    })?;
    write_output(out, "plot_joint.csv", &cfg.hash, |w| {
        writeln!(w, "beta,joint,p_plausible")?;
        for r in &report.rows {
            writeln!(w, "{},{},{}", beta_label(r.beta), opt9(r.joint), opt9(r.p_plausible))?;
        }
        Ok(())
    })?;
    let mut run = report_header(cfg, &prepared)?;
    let grid: Vec<String> = cfg.beta_grid.iter().map(|&b| beta_label(b)).collect();
    let _ = writeln!(run, "beta_grid={}", grid.join(","));
    let _ = writeln!(run, "horizon_date={}", settings.horizon);
    let _ = writeln!(run, "ground_truth_materials={}", gt.len());
    write_output(out, "run_report.txt", &cfg.hash, |w| w.write_all(run.as_bytes()))?;
    info!("sweep finished in {:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

pub const HISTOGRAM_HEADER: &str = "spd_bin,discovery_fraction,mean_tau";

pub fn histogram(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.output_dir()?;
    let property = cfg.property()?;
    let cutoff = cfg.prediction_date()?;
    let horizon = cfg.horizon_date()?;
    let corpus = load_corpus(cfg)?;
    let slice = corpus.slice_before(cutoff);
    let graph = load_graph(cfg, &slice)?;
    let gt = ground_truth(cfg, Some(&corpus))?.until(horizon);
    let scores = theory_scores(cfg)?;
    let dv = graph.spd_from_token(property)?;

    // None marks materials absent from the pre-cutoff graph.
    let mut bins: BTreeMap<Option<Distance>, Vec<Option<f64>>> = BTreeMap::new();
    for m in gt.materials() {
        let d = graph.node_id(m).map(|id| dv.get(id));
        let tau = scores.as_ref().and_then(|s| s.get(m));
        bins.entry(d).or_default().push(tau);
    }
    let total = gt.len();
    write_output(out, "histogram.csv", &cfg.hash, |w| {
        writeln!(w, "{HISTOGRAM_HEADER}")?;
        // present bins in distance order, then absent materials
        let ordered = bins.iter().filter(|(d, _)| d.is_some()).chain(bins.iter().filter(|(d, _)| d.is_none()));
        for (d, taus) in ordered {
            let label = match d {
                Some(Distance::Hops(h)) => h.to_string(),
                Some(Distance::Unreachable) => "unreachable".into(),
                None => "absent".into(),
            };
            let known: Vec<f64> = taus.iter().flatten().copied().collect();
            writeln!(
                w,
                "{label},{},{}",
                sig9(taus.len() as f64 / total as f64),
                opt9(mean(&known))
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn synth_params(a: &SynthArgs) -> Result<SynthParams, CliError> {
    let d = SynthParams::default();
    let field = match &a.plausibility_field {
        Some(s) => s.parse().map_err(CliError::Usage)?,
        None => d.plausibility_field,
    };
    Ok(SynthParams {
        seed: a.seed.unwrap_or(d.seed),
        n_authors: a.n_authors.unwrap_or(d.n_authors),
        n_communities: a.n_communities.unwrap_or(d.n_communities),
        n_concepts: a.n_concepts.unwrap_or(d.n_concepts),
        n_papers_pre: a.n_papers_pre.unwrap_or(d.n_papers_pre),
        n_papers_post: a.n_papers_post.unwrap_or(d.n_papers_post),
        property_community: a.property_community.unwrap_or(d.property_community),
        discovery_bias: a.discovery_bias.unwrap_or(d.discovery_bias),
        embedding_dim: a.embedding_dim.unwrap_or(d.embedding_dim),
        plausibility_field: field,
        discovery_fraction: a.discovery_fraction.unwrap_or(d.discovery_fraction),
        ..d
    })
}

/// Writes the bundle plus a `run.conf` pointing at it.
pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let out = a.output_dir.as_deref().ok_or_else(|| missing("output_dir"))?;
    let params = synth_params(a)?;
    let t = Instant::now();
    let bundle = synth::gen_corpus(&params)?;
    info!("generated {} records in {:.3}s", bundle.corpus.len(), t.elapsed().as_secs_f64());
    let hash = hex::encode(Sha256::digest(params.to_manifest().as_bytes()));
    fs::create_dir_all(out).map_err(io_err(out))?;
    for (name, text) in bundle.files() {
        if name.ends_with(".csv") {
            write_output(out, name, &hash, |w| w.write_all(text.as_bytes()))?;
        } else {
            let path = out.join(name);
            fs::write(&path, text).map_err(io_err(&path))?;
        }
    }
    let conf = format!(
        "corpus_path={}\nembeddings_path={}\nground_truth_path={}\ntheory_scores_path={}\n\
         graph_cache_path=graph.hcg\nproperty={}\nprediction_date={}\nhorizon_date={}\n",
        synth::CORPUS_FILE,
        synth::EMBEDDINGS_FILE,
        synth::GROUND_TRUTH_FILE,
        synth::THEORY_SCORES_FILE,
        bundle.property(),
        params.cutoff(),
        params.horizon(),
    );
    let path = out.join(RUN_CONF_FILE);
    fs::write(&path, conf).map_err(io_err(&path))?;
    Ok(())
}
