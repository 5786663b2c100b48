//! Command-line front end. Each subcommand runs one pipeline stage and
//! writes its outputs, plus the exact configuration used (`config.json`),
//! into an output directory.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::artifact::{sha256_hex, Checkpoint, Index, IndexArtifact};
use crate::corpus::{load_corpus_with, DEFAULT_MIN_DOC_LEN};
use crate::dictionary::{load_dictionary, load_test_set, most_frequent_pairing};
use crate::eval::{self, SyntheticSpec, SystemRankings};
use crate::sampler::{links_for, HyperParams, Lang, ModelKind, SamplerState};
use crate::similarity::{format_score, rank_candidates, Measure};
use crate::tfidf::{TfidfModel, DEFAULT_WINDOW};

pub const INDEX_FILE: &str = "index.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Parser)]
#[command(name = "lexitopic", version, about = "Bilingual lexicon extraction with inverted-index topic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build vocabularies and pseudo-documents from two corpora.
    BuildIndex(BuildIndexArgs),
    /// Train a bilingual topic model on an index.
    Train(TrainArgs),
    /// Rank candidate translations for query words.
    Rank(RankArgs),
    /// Score models (and optionally the TF-IDF baseline) on a test set.
    Eval(EvalArgs),
    /// Generate a synthetic corpus pair with known translations.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildIndexArgs {
    /// Source corpus, one pre-tokenized document per line.
    #[arg(long)]
    pub source_corpus: PathBuf,
    #[arg(long)]
    pub target_corpus: PathBuf,
    #[arg(long, default_value = "source")]
    pub source_lang: String,
    #[arg(long, default_value = "target")]
    pub target_lang: String,
    /// Documents with fewer tokens are discarded.
    #[arg(long, default_value_t = DEFAULT_MIN_DOC_LEN)]
    pub min_doc_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Index file written by `build-index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Seed dictionary, `source<TAB>target` per line.
    #[arg(long)]
    pub seed_dict: PathBuf,
    #[arg(long, default_value = "blockprobbilda")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 50)]
    pub topics: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_psi: f64,
    #[arg(long, default_value_t = 1500)]
    pub iterations: usize,
    /// Defaults to two thirds of the iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub sample_lag: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn hyperparams(&self) -> HyperParams {
        HyperParams {
            topics: self.topics,
            alpha: self.alpha,
            beta: self.beta,
            alpha_psi: self.alpha_psi,
            iterations: self.iterations,
            burn_in: self.burn_in.unwrap_or(self.iterations * 2 / 3),
            sample_lag: self.sample_lag,
            rng_seed: self.seed,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub index: PathBuf,
    /// Source word to translate; repeatable.
    #[arg(long)]
    pub query: Vec<String>,
    /// File with one query word per line.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value = "selprob")]
    pub measure: Measure,
    /// Maximum rows per query.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Output directory; rankings go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Trained checkpoint; repeat to compare models.
    #[arg(long, required = true)]
    pub checkpoint: Vec<PathBuf>,
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub seed_dict: PathBuf,
    #[arg(long)]
    pub test_set: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [Measure::Cosine, Measure::Kl, Measure::SelProb])]
    pub measure: Vec<Measure>,
    /// Also score the TF-IDF context-vector baseline (needs both corpora).
    #[arg(long, requires_all = ["source_corpus", "target_corpus"])]
    pub tfidf: bool,
    #[arg(long)]
    pub source_corpus: Option<PathBuf>,
    #[arg(long)]
    pub target_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Rows per query kept in the persisted rankings.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub topics: usize,
    #[arg(long, default_value_t = 500)]
    pub docs: usize,
    #[arg(long, default_value_t = 20)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 100)]
    pub vocab: usize,
    #[arg(long, default_value_t = 60)]
    pub seed_pairs: usize,
    #[arg(long, default_value_t = 40)]
    pub held_out: usize,
    #[arg(long, default_value_t = 0.4)]
    pub noise: f64,
}

impl SynthArgs {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            topics: self.topics,
            docs_per_language: self.docs,
            mean_doc_len: self.doc_len,
            source_vocab: self.vocab,
            target_vocab: self.vocab,
            seed_pairs: self.seed_pairs,
            held_out_pairs: self.held_out,
            noise_rate: self.noise,
            rng_seed: self.seed,
            ..SyntheticSpec::default()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::BuildIndex(a) => build_index(a),
        Command::Train(a) => train(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => evaluate(a),
        Command::Synth(a) => synthesize(a),
    }
    .and_then(|()| {
        if let Some(dir) = output_dir(&cli.command) {
            write_config(dir, &cli.command)?;
        }
        Ok(())
    })
}

fn output_dir(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::BuildIndex(a) => Some(&a.out),
        Command::Train(a) => Some(&a.out),
        Command::Rank(a) => a.out.as_deref(),
        Command::Eval(a) => Some(&a.out),
        Command::Synth(a) => Some(&a.out),
    }
}

fn write_config(dir: &Path, cmd: &Command) -> Result<()> {
    let mut json = serde_json::to_string_pretty(cmd)?;
    json.push('\n');
    write_file(&dir.join(CONFIG_FILE), json.as_bytes())
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("input file not found: {}", p.display());
        }
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn build_index(a: &BuildIndexArgs) -> Result<()> {
    require_files(&[&a.source_corpus, &a.target_corpus])?;
    let source = load_corpus_with(&a.source_corpus, &a.source_lang, a.min_doc_len)?;
    let target = load_corpus_with(&a.target_corpus, &a.target_lang, a.min_doc_len)?;
    let artifact = IndexArtifact::build(&source, &target, a.min_doc_len)?;
    create_dir(&a.out)?;
    artifact.save(a.out.join(INDEX_FILE))?;

    let mut stats = String::from("language\tdocuments\ttokens\twords\n");
    for li in [&artifact.source, &artifact.target] {
        stats.push_str(&format!("{}\t{}\t{}\t{}\n", li.language, li.num_docs, li.num_tokens, li.words.len()));
    }
    write_file(&a.out.join("stats.tsv"), stats.as_bytes())?;
    info!(
        "indexed {} + {} documents, {} + {} words",
        artifact.source.num_docs,
        artifact.target.num_docs,
        artifact.source.words.len(),
        artifact.target.words.len()
    );
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    require_files(&[&a.index, &a.seed_dict])?;
    let hp = a.hyperparams();
    hp.validate()?;
    let index = IndexArtifact::load(&a.index)?;
    let dict = load_dictionary(&a.seed_dict, index.vocab(Lang::Source), index.vocab(Lang::Target))?;
    let links = links_for(a.model, &dict, index.vocab(Lang::Target));
    let mut state = SamplerState::init(
        index.pseudo_docs(Lang::Source),
        index.pseudo_docs(Lang::Target),
        &links,
        a.model,
        &hp,
    )?;
    create_dir(&a.out)?;

    let mut log = create_file(&a.out.join("train_log.tsv"))?;
    writeln!(log, "sweep\tsource_tokens\ttarget_tokens\tretained\telapsed_ms")?;
    let start = Instant::now();
    let mut log_err = None;
    let est = state.train(|t, st| {
        let row = writeln!(
            log,
            "{t}\t{}\t{}\t{}\t{}",
            st.num_tokens(Lang::Source),
            st.num_tokens(Lang::Target),
            u8::from(hp.retains(t)),
            start.elapsed().as_millis()
        );
        if let Err(e) = row {
            log_err.get_or_insert(e);
        }
        if t % 100 == 0 {
            info!("sweep {t}/{}", hp.iterations);
        }
    });
    if let Some(e) = log_err {
        return Err(e).context("cannot write the training log");
    }
    log.flush()?;

    Checkpoint::new(&index, Some(&state), Some(est), a.model, &hp).save(a.out.join(CHECKPOINT_FILE))?;
    info!("trained {} in {:.1}s", a.model, start.elapsed().as_secs_f64());
    Ok(())
}

fn open_model(checkpoint: &Path, index: &Path) -> Result<(Checkpoint, Index)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let index = IndexArtifact::load(index)?;
    ckpt.check_compatible(&index)
        .with_context(|| format!("{} was not trained on this index", checkpoint.display()))?;
    if ckpt.estimates.is_none() {
        bail!("{} holds no posterior estimates", checkpoint.display());
    }
    Ok((ckpt, index))
}

fn rank(a: &RankArgs) -> Result<()> {
    let mut inputs = vec![a.checkpoint.as_path(), a.index.as_path()];
    if let Some(q) = &a.queries {
        inputs.push(q);
    }
    require_files(&inputs)?;
    let (ckpt, index) = open_model(&a.checkpoint, &a.index)?;
    let est = ckpt.estimates.as_ref().expect("checked in open_model");

    let mut queries = a.query.clone();
    if let Some(path) = &a.queries {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        queries.extend(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if queries.is_empty() {
        bail!("no queries given (use --query or --queries)");
    }

    let sv = index.vocab(Lang::Source);
    let tv = index.vocab(Lang::Target);
    let mut out: Box<dyn Write> = match &a.out {
        Some(dir) => {
            create_dir(dir)?;
            Box::new(create_file(&dir.join("rankings.tsv"))?)
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "query\trank\tcandidate\tscore")?;
    for q in &queries {
        let Some(id) = sv.id(q) else {
            warn!("query `{q}` is not in the source vocabulary");
            writeln!(out, "{q}\tNA\tNA\tOOV")?;
            continue;
        };
        let r = rank_candidates(est, Lang::Source, id, index.pseudo_docs(Lang::Source).doc(id), None, a.measure)?;
        for (i, (c, s)) in r.entries.iter().take(a.top).enumerate() {
            writeln!(out, "{q}\t{}\t{}\t{}", i + 1, tv.word(*c), format_score(*s))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct InputHash {
    file: String,
    sha256: String,
}

fn evaluate(a: &EvalArgs) -> Result<()> {
    let mut inputs: Vec<&Path> = a.checkpoint.iter().map(PathBuf::as_path).collect();
    inputs.extend([a.index.as_path(), &a.seed_dict, &a.test_set]);
    if a.tfidf {
        inputs.extend(a.source_corpus.as_deref());
        inputs.extend(a.target_corpus.as_deref());
    }
    require_files(&inputs)?;
    if a.measure.is_empty() {
        bail!("no measures given");
    }

    let index = IndexArtifact::load(&a.index)?;
    let sv = index.vocab(Lang::Source);
    let tv = index.vocab(Lang::Target);
    let seed = load_dictionary(&a.seed_dict, sv, tv)?;
    let test = load_test_set(&a.test_set, &seed, sv, tv)?;
    if test.dropped() > 0 {
        warn!("{} test pairs dropped as out of vocabulary", test.dropped());
    }

    let mut runs = Vec::new();
    let mut models = Vec::new();
    for path in &a.checkpoint {
        let (ckpt, _) = open_model(path, &a.index)?;
        let est = ckpt.estimates.as_ref().expect("checked in open_model");
        for &m in &a.measure {
            info!("ranking with {} / {m}", ckpt.model);
            runs.push(SystemRankings {
                system: ckpt.model.to_string(),
                measure: m,
                rankings: eval::rank_test_queries(est, index.pseudo_docs(Lang::Source), &test, m)?,
            });
        }
        models.push(serde_json::json!({ "model": ckpt.model, "hyperparams": ckpt.hyperparams }));
    }
    if a.tfidf {
        let min_len = index.artifact.min_doc_len;
        let source = load_corpus_with(a.source_corpus.as_ref().expect("required by clap"), &index.artifact.source.language, min_len)?;
        let target = load_corpus_with(a.target_corpus.as_ref().expect("required by clap"), &index.artifact.target.language, min_len)?;
        let sv2 = crate::corpus::build_vocabulary(&source);
        let tv2 = crate::corpus::build_vocabulary(&target);
        if sv2.words() != sv.words() || tv2.words() != tv.words() {
            bail!("the corpora given for --tfidf are not the ones the index was built from");
        }
        let pairs = most_frequent_pairing(&seed, tv);
        let model = TfidfModel::build((&source, sv), (&target, tv), &pairs, a.window)?;
        runs.push(SystemRankings {
            system: "tfidf".into(),
            measure: Measure::Cosine,
            rankings: eval::rank_test_queries_tfidf(&model, &test)?,
        });
    }

    let hashes = inputs
        .iter()
        .map(|p| Ok(InputHash { file: file_name(p), sha256: hash_file(p)? }))
        .collect::<Result<Vec<_>>>()?;
    let fingerprint = serde_json::json!({
        "inputs": hashes,
        "models": models,
        "measures": a.measure,
        "tfidf_window": a.tfidf.then_some(a.window),
    });
    let report = eval::evaluate(&runs, &test, fingerprint)?;

    create_dir(&a.out)?;
    write_file(&a.out.join("report.tsv"), report.to_tsv().as_bytes())?;
    write_file(&a.out.join("report.meta.json"), report.meta_json().as_bytes())?;
    let mut out = create_file(&a.out.join("rankings.tsv"))?;
    eval::write_system_rankings(&mut out, &runs, sv, tv, a.top.max(10))?;
    out.flush()?;
    print!("{}", report.to_tsv());
    Ok(())
}

fn synthesize(a: &SynthArgs) -> Result<()> {
    let data = eval::generate_synthetic(&a.spec())?;
    data.write(&a.out)?;
    let mut spec = serde_json::to_string_pretty(&a.spec())?;
    spec.push('\n');
    write_file(&a.out.join("spec.json"), spec.as_bytes())?;
    info!(
        "wrote {} + {} documents and {} seed pairs to {}",
        data.source.num_docs(),
        data.target.num_docs(),
        data.seed_pairs.len(),
        a.out.display()
    );
    Ok(())
}
