//! The `vocabweave` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::compat::{
    corpus_lemmas, corpus_revisitation, load_graph, load_lengths, load_page_texts, session_stream, simulate_sessions,
    CoverageConfig, SyntheticSpec, WalkConfig,
};
use crate::config::Config;
use crate::guess::{ConstantScorer, NGramModel};
use crate::service::{bind, serve, AppState};
use crate::store::{read_record, LearnerRecord, Store};
use crate::translate::{AlignedFixture, AlignedProvider, DictionaryProvider};
use crate::tutor::{LearnerState, Timestamp};

#[derive(Debug, Parser)]
#[command(name = "vocabweave", version, about = "Weave target-language vocabulary into native-language text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate a text file (or stdin) and print the document as JSON.
    Annotate(AnnotateArgs),
    /// Train an n-gram guessability model.
    TrainLm(TrainArgs),
    /// Revisitation statistics for books or simulated browsing.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Input text; `-` or absent reads stdin.
    pub input: Option<PathBuf>,
    /// Config file supplying defaults, providers and the model.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fraction of word tokens to translate, in [0, 1].
    #[arg(long)]
    pub density: Option<f64>,
    /// Dictionary TSV (`source_lemma<TAB>target`), registered under --profile.
    #[arg(long, conflicts_with = "aligned")]
    pub dict: Option<PathBuf>,
    /// Aligned sentence fixture TSV, registered under --profile.
    #[arg(long)]
    pub aligned: Option<PathBuf>,
    /// Target profile name.
    #[arg(long)]
    pub profile: Option<String>,
    /// Trained n-gram model file.
    #[arg(long, conflicts_with = "lm_constant")]
    pub lm: Option<PathBuf>,
    /// Score every word with this guessability instead of a model.
    #[arg(long)]
    pub lm_constant: Option<f64>,
    /// Learner directory (with `snapshot` and `events.log`). A missing
    /// directory means a fresh learner.
    #[arg(long)]
    pub learner_state: Option<PathBuf>,
    /// Scoring time, seconds since the epoch. Defaults to now.
    #[arg(long)]
    pub now: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Plain-text corpus files.
    #[arg(required = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Add-k smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Coverage levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    pub alpha: Vec<f64>,
    /// Reading speed, words per minute.
    #[arg(long, default_value_t = 200.0)]
    pub speed: f64,
    /// Reading hours per day.
    #[arg(long, default_value_t = 3.0)]
    pub hours: f64,
    #[arg(long, default_value_t = 90.0)]
    pub percentile: f64,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// One row per book and coverage level.
    Books {
        #[command(flatten)]
        coverage: CoverageArgs,
        /// Skip books with fewer word tokens.
        #[arg(long, default_value_t = 0)]
        min_tokens: usize,
        files: Vec<PathBuf>,
    },
    /// One row per session length and coverage level.
    Clickstream {
        #[command(flatten)]
        coverage: CoverageArgs,
        /// Session lengths N in tokens, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        session_tokens: Vec<usize>,
        #[arg(long, default_value_t = 2_000_000)]
        total_tokens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `prev<TAB>curr<TAB>count` transitions.
        #[arg(long, required_unless_present = "synthetic", requires = "texts")]
        graph: Option<PathBuf>,
        /// `page<TAB>token_count`; defaults to the lengths of the page texts.
        #[arg(long)]
        lengths: Option<PathBuf>,
        /// Directory of page texts named `<page>.txt`.
        #[arg(long)]
        texts: Option<PathBuf>,
        /// Optional `page<TAB>probability` stop probabilities.
        #[arg(long)]
        no_click: Option<PathBuf>,
        /// Use the built-in clustered synthetic graph instead of files.
        #[arg(long, conflicts_with_all = ["graph", "lengths", "texts", "no_click"])]
        synthetic: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `server.listen`.
    #[arg(long)]
    pub listen: Option<String>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("vocabweave: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Annotate(a) => annotate(a),
        Command::TrainLm(t) => train_lm(t),
        Command::Analyze(AnalyzeCommand::Books { coverage, min_tokens, files }) => {
            analyze_books(&coverage, min_tokens, &files)
        }
        Command::Analyze(AnalyzeCommand::Clickstream {
            coverage,
            session_tokens,
            total_tokens,
            seed,
            graph,
            lengths,
            texts,
            no_click,
            synthetic,
        }) => analyze_clickstream(
            &coverage,
            &session_tokens,
            total_tokens,
            seed,
            ClickstreamSource { graph, lengths, texts, no_click, synthetic },
        ),
        Command::Serve(s) => serve_cmd(s),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p).map_err(usage),
        None => Config::from_env().map_err(usage),
    }
}

fn annotate(a: AnnotateArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let mut annotator = cfg.annotator().map_err(usage)?;
    if let Some(p) = &a.lm {
        annotator.scorer = Arc::new(NGramModel::load(p).map_err(|e| usage(format!("{}: {e}", p.display())))?);
    }
    if let Some(c) = a.lm_constant {
        annotator.scorer = Arc::new(ConstantScorer::new(c).map_err(usage)?);
    }
    let profile =
        a.profile.clone().or_else(|| cfg.translation.default_profile.clone()).unwrap_or_else(|| "default".to_string());
    if let Some(p) = &a.dict {
        let d = DictionaryProvider::load(p).map_err(usage)?;
        annotator.providers.insert(profile.clone(), Arc::new(d));
    }
    if let Some(p) = &a.aligned {
        let f = AlignedFixture::load(p).map_err(usage)?;
        annotator.providers.insert(profile.clone(), Arc::new(AlignedProvider::new(f)));
    }
    if annotator.providers.get(&profile).is_none() {
        return Err(usage(format!("no translation provider for profile {profile:?}; pass --dict or --config")));
    }
    let density = a.density.unwrap_or(cfg.selection.density);
    if !(0.0..=1.0).contains(&density) {
        return Err(usage(format!("--density must lie in [0, 1], got {density}")));
    }

    let text = match a.input.as_deref() {
        None => read_stdin()?,
        Some(p) if p == Path::new("-") => read_stdin()?,
        Some(p) => std::fs::read_to_string(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?,
    };
    let learner = match &a.learner_state {
        Some(dir) if dir.join("snapshot").exists() => {
            let rec: LearnerRecord = read_record(dir, cfg.store_options()).map_err(runtime)?;
            rec.state
        }
        Some(dir) => {
            let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            LearnerState::new(id, cfg.tutor)
        }
        None => LearnerState::new("anonymous", cfg.tutor),
    };
    let now = a.now.map(Timestamp).unwrap_or_else(Timestamp::now);
    let doc = annotator.annotate(&learner, &text, density, &profile, now).map_err(runtime)?;
    let mut out = std::io::stdout().lock();
    let body = serde_json::to_string(&doc).map_err(runtime)?;
    writeln!(out, "{body}").map_err(runtime)?;
    Ok(())
}

fn read_stdin() -> Result<String, CliError> {
    let mut s = String::new();
    std::io::stdin().read_to_string(&mut s).map_err(|e| runtime(format!("stdin: {e}")))?;
    Ok(s)
}

fn train_lm(t: TrainArgs) -> Result<(), CliError> {
    if t.order == 0 {
        return Err(usage("--order must be at least 1"));
    }
    if !(t.k.is_finite() && t.k >= 0.0) {
        return Err(usage(format!("--k must be finite and non-negative, got {}", t.k)));
    }
    let mut texts = Vec::with_capacity(t.corpus.len());
    for p in &t.corpus {
        texts.push(std::fs::read_to_string(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?);
    }
    let model = NGramModel::train_texts(&texts, t.order, t.k).map_err(runtime)?;
    model.save(&t.out).map_err(|e| runtime(format!("{}: {e}", t.out.display())))?;
    log::info!("wrote {} (vocabulary {})", t.out.display(), model.vocab_size());
    Ok(())
}

const CSV_HEADER: &str = "corpus,alpha,N,revisitation_days,vocab_size,tokens,excluded";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn coverage_configs(c: &CoverageArgs) -> Result<Vec<CoverageConfig>, CliError> {
    c.alpha.iter().map(|&a| CoverageConfig::new(a, c.speed, c.hours, c.percentile).map_err(usage)).collect()
}

fn csv_row(corpus: &str, alpha: f64, n: Option<usize>, r: &crate::compat::CorpusRevisitation) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        csv_field(corpus),
        alpha,
        n.map(|n| n.to_string()).unwrap_or_default(),
        r.days.map(|d| d.to_string()).unwrap_or_default(),
        r.vocab_size,
        r.tokens,
        r.excluded
    )
}

fn analyze_books(c: &CoverageArgs, min_tokens: usize, files: &[PathBuf]) -> Result<(), CliError> {
    let cfgs = coverage_configs(c)?;
    let results: Vec<Result<Vec<String>, String>> = files
        .par_iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let lemmas = corpus_lemmas(&text);
            if lemmas.len() < min_tokens {
                log::info!("{}: {} tokens, below --min-tokens", p.display(), lemmas.len());
                return Ok(Vec::new());
            }
            let name = p.display().to_string();
            Ok(cfgs.iter().map(|cfg| csv_row(&name, cfg.alpha(), None, &corpus_revisitation(&lemmas, cfg))).collect())
        })
        .collect();
    let mut out = std::io::stdout().lock();
    writeln!(out, "{CSV_HEADER}").map_err(runtime)?;
    let mut failed = 0;
    for r in results {
        match r {
            Ok(rows) => {
                for row in rows {
                    writeln!(out, "{row}").map_err(runtime)?;
                }
            }
            Err(e) => {
                eprintln!("vocabweave: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(runtime(format!("{failed} of {} inputs could not be read", files.len())));
    }
    Ok(())
}

struct ClickstreamSource {
    graph: Option<PathBuf>,
    lengths: Option<PathBuf>,
    texts: Option<PathBuf>,
    no_click: Option<PathBuf>,
    synthetic: bool,
}

fn analyze_clickstream(
    c: &CoverageArgs,
    session_tokens: &[usize],
    total_tokens: usize,
    seed: u64,
    src: ClickstreamSource,
) -> Result<(), CliError> {
    let cfgs = coverage_configs(c)?;
    let walks: Vec<WalkConfig> = session_tokens
        .iter()
        .map(|&n| WalkConfig::new(n, total_tokens, seed).map_err(usage))
        .collect::<Result<_, _>>()?;
    let (name, graph, texts) = if src.synthetic {
        let s = SyntheticSpec { seed, ..SyntheticSpec::default() }.generate().map_err(runtime)?;
        ("synthetic".to_string(), s.graph, s.texts)
    } else {
        let graph_path = src.graph.expect("clap requires --graph");
        let texts_dir = src.texts.expect("clap requires --texts");
        let by_page = load_page_texts(&texts_dir).map_err(runtime)?;
        let lengths = match &src.lengths {
            Some(p) => load_lengths(p).map_err(runtime)?,
            None => by_page.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        };
        let lengths: std::collections::HashMap<String, usize> =
            lengths.into_iter().filter(|(k, _)| by_page.contains_key(k)).collect();
        let graph = load_graph(&graph_path, &lengths, src.no_click.as_deref()).map_err(runtime)?;
        let texts = (0..graph.len()).map(|i| by_page[graph.name(i)].clone()).collect();
        let name = graph_path.display().to_string();
        (name, graph, texts)
    };
    let rows: Vec<Result<Vec<String>, String>> = walks
        .par_iter()
        .map(|w| {
            let walk = simulate_sessions(&graph, w).map_err(|e| e.to_string())?;
            if walk.stalls > 0 {
                log::warn!("N={}: {} stalled sessions", w.session_tokens, walk.stalls);
            }
            let stream = session_stream(&walk, &texts, w.total_tokens);
            Ok(cfgs
                .iter()
                .map(|cfg| csv_row(&name, cfg.alpha(), Some(w.session_tokens), &corpus_revisitation(&stream, cfg)))
                .collect())
        })
        .collect();
    let mut out = std::io::stdout().lock();
    writeln!(out, "{CSV_HEADER}").map_err(runtime)?;
    for r in rows {
        for row in r.map_err(runtime)? {
            writeln!(out, "{row}").map_err(runtime)?;
        }
    }
    Ok(())
}

fn serve_cmd(s: ServeArgs) -> Result<(), CliError> {
    let mut cfg = load_config(s.config.as_deref())?;
    if let Some(l) = s.listen {
        cfg.server.listen = l;
    }
    let annotator = cfg.annotator().map_err(usage)?;
    let store = Store::new(&cfg.server.state_dir, cfg.tutor, cfg.store_options()).map_err(usage)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(runtime)?;
    rt.block_on(async move {
        let listener =
            bind(&cfg.server.listen).await.map_err(|e| runtime(format!("cannot bind {}: {e}", cfg.server.listen)))?;
        if let Ok(addr) = listener.local_addr() {
            eprintln!("vocabweave: listening on {addr}");
        }
        let app = AppState { annotator: Arc::new(annotator), store: Arc::new(store) };
        serve(listener, app).await.map_err(runtime)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_field("a.txt"), "a.txt");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }

    #[test]
    fn parse_flags() {
        let cli = Cli::try_parse_from(["vocabweave", "analyze", "books", "--alpha", "0.5,0.9", "a.txt"]).unwrap();
        match cli.command {
            Command::Analyze(AnalyzeCommand::Books { coverage, files, .. }) => {
                assert_eq!(coverage.alpha, vec![0.5, 0.9]);
                assert_eq!(coverage.speed, 200.0);
                assert_eq!(files.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["vocabweave", "analyze", "clickstream", "--session-tokens", "5"]).is_err());
        assert!(Cli::try_parse_from(["vocabweave", "analyze", "clickstream", "--session-tokens", "5", "--synthetic"])
            .is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["vocabweave", "train-lm", "--order", "0", "--out", "/dev/null", "x.txt"]), 2);
        assert_eq!(run(["vocabweave", "bogus"]), 2);
        assert_eq!(run(["vocabweave", "analyze", "books"]), 0);
    }
}
