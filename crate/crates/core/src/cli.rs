//! Command-line driver: `stats`, `build`, `encode`, `sweep`.
//!
//! Settings come from flags, then from an optional `--config` file of
//! `key=value` lines (keys are the long flag names), then defaults.
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::encoding::Mode;
use crate::pipeline::{
    build_bundle, prepare_corpus, read_bundle, read_corpus, read_env, sweep, sweep_table, write_bundle, write_encoded,
    BundleParams, CorpusStats, PipelineError, SweepParam, DEFAULT_MERGES, DEFAULT_THRESHOLD,
};
use crate::subword::UnseenChars;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "identenc", version, about = "Enrich and encode identifiers in serialized term ASTs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-category identifier counts and occurrence histograms.
    Stats(Common),
    /// Build vocabularies, the subword model, and a manifest into --out.
    Build(Common),
    /// Encode the corpus with a bundle into --out/encoded.jsonl.
    Encode(Common),
    /// Vary one parameter and report vocabulary size and unknown rate.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// threshold-global | threshold-local | threshold-ctor | threshold-path | bpe-merges
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<u64>,
    },
}

#[derive(Debug, Args, Default)]
struct Common {
    /// key=value settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file or directory (repeatable).
    #[arg(long)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bundle directory for `encode` (defaults to --out).
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    threshold_global: Option<u64>,
    #[arg(long)]
    threshold_local: Option<u64>,
    #[arg(long)]
    threshold_ctor: Option<u64>,
    #[arg(long)]
    threshold_path: Option<u64>,
    #[arg(long)]
    merges: Option<usize>,
    /// drop | unknown
    #[arg(long)]
    unseen_char: Option<String>,
    /// train | test
    #[arg(long)]
    mode: Option<String>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Vec<PathBuf>,
    pub env: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub params: BundleParams,
    pub mode: Mode,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(PipelineError),
    Internal(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Input(e)
    }
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Failure::Input(PipelineError::Io { path: path.to_owned(), source }))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

impl Common {
    fn resolve(self) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        const KNOWN: [&str; 11] = [
            "corpus",
            "env",
            "out",
            "bundle",
            "threshold-global",
            "threshold-local",
            "threshold-ctor",
            "threshold-path",
            "merges",
            "unseen-char",
            "mode",
        ];
        if let Some(k) = file.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Failure::Usage(format!("unknown config key `{k}`")));
        }
        let num = |flag: Option<u64>, key: &str, default: u64| -> Result<u64, Failure> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(s)) => s.parse().map_err(|_| Failure::Usage(format!("config `{key}`: bad number `{s}`"))),
                (None, None) => Ok(default),
            }
        };
        let text = |flag: Option<String>, key: &str| flag.or_else(|| file.get(key).cloned());
        let path = |flag: Option<PathBuf>, key: &str| flag.or_else(|| file.get(key).map(PathBuf::from));

        let params = BundleParams {
            threshold_global: num(self.threshold_global, "threshold-global", DEFAULT_THRESHOLD)?,
            threshold_local: num(self.threshold_local, "threshold-local", DEFAULT_THRESHOLD)?,
            threshold_ctor: num(self.threshold_ctor, "threshold-ctor", DEFAULT_THRESHOLD)?,
            threshold_path: num(self.threshold_path, "threshold-path", DEFAULT_THRESHOLD)?,
            merges: num(self.merges.map(|m| m as u64), "merges", DEFAULT_MERGES as u64)? as usize,
            unseen: match text(self.unseen_char, "unseen-char") {
                None => UnseenChars::Drop,
                Some(s) => UnseenChars::parse(&s)
                    .ok_or_else(|| Failure::Usage(format!("--unseen-char must be drop or unknown, got `{s}`")))?,
            },
        };
        for (name, t) in [
            ("threshold-global", params.threshold_global),
            ("threshold-local", params.threshold_local),
            ("threshold-ctor", params.threshold_ctor),
            ("threshold-path", params.threshold_path),
        ] {
            if t == 0 {
                return Err(Failure::Usage(format!("--{name} must be at least 1")));
            }
        }
        let mode = match text(self.mode, "mode") {
            None => Mode::Train,
            Some(s) => {
                Mode::parse(&s).ok_or_else(|| Failure::Usage(format!("--mode must be train or test, got `{s}`")))?
            }
        };
        let corpus = if self.corpus.is_empty() {
            file.get("corpus").map(|s| s.split(',').map(|p| PathBuf::from(p.trim())).collect()).unwrap_or_default()
        } else {
            self.corpus
        };
        Ok(RunConfig {
            corpus,
            env: path(self.env, "env"),
            out: path(self.out, "out"),
            bundle: path(self.bundle, "bundle"),
            params,
            mode,
        })
    }
}

impl RunConfig {
    fn require_corpus(&self) -> Result<(), Failure> {
        if self.corpus.is_empty() {
            return Err(Failure::Usage("--corpus is required".into()));
        }
        Ok(())
    }

    fn require_out(&self) -> Result<&Path, Failure> {
        self.out.as_deref().ok_or_else(|| Failure::Usage("--out is required".into()))
    }

    fn load_stats(&self) -> Result<(Vec<crate::term::Term>, CorpusStats), Failure> {
        self.require_corpus()?;
        let env = read_env(self.env.as_deref())?;
        let terms = prepare_corpus(read_corpus(&self.corpus)?, &env)?;
        let stats = CorpusStats::collect(&terms)?;
        Ok((terms, stats))
    }
}

pub fn cmd_stats(config: &RunConfig, out: &mut dyn Write) -> Result<(), PipelineError> {
    let env = read_env(config.env.as_deref())?;
    let terms = prepare_corpus(read_corpus(&config.corpus)?, &env)?;
    let stats = CorpusStats::collect(&terms)?;
    write_stdout(out, &stats.to_table())
}

fn write_stdout(out: &mut dyn Write, s: &str) -> Result<(), PipelineError> {
    out.write_all(s.as_bytes()).map_err(|source| PipelineError::Io { path: PathBuf::from("<stdout>"), source })
}

fn run_command(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Stats(common) => {
            let config = common.resolve()?;
            config.require_corpus()?;
            cmd_stats(&config, out)?;
        }
        Command::Build(common) => {
            let config = common.resolve()?;
            let dir = config.require_out()?.to_owned();
            let (_, stats) = config.load_stats()?;
            let bundle = build_bundle(&stats, &config.params, config.mode);
            write_bundle(&bundle, &dir)?;
            let summary = format!(
                "terms\t{}\nglobal\t{}\nlocal\t{}\nconstructor\t{}\npath\t{}\nsubwords\t{}\n",
                stats.terms,
                bundle.vocab(crate::IdentCategory::Global).len(),
                bundle.vocab(crate::IdentCategory::Local).len(),
                bundle.vocab(crate::IdentCategory::Constructor).len(),
                bundle.path_vocab().len(),
                bundle.bpe().vocab_size(),
            );
            write_stdout(out, &summary)?;
        }
        Command::Encode(common) => {
            let config = common.resolve()?;
            let dir = config.require_out()?.to_owned();
            let bundle_dir = config.bundle.clone().unwrap_or_else(|| dir.clone());
            config.require_corpus()?;
            let bundle = read_bundle(&bundle_dir, config.mode)?;
            let env = read_env(config.env.as_deref())?;
            let terms = prepare_corpus(read_corpus(&config.corpus)?, &env)?;
            let n = write_encoded(terms, &bundle, &bundle_dir, &dir)?;
            write_stdout(out, &format!("{n}\n"))?;
        }
        Command::Sweep { common, param, values } => {
            let config = common.resolve()?;
            let param = param.ok_or_else(|| Failure::Usage("--param is required".into()))?;
            let param = SweepParam::parse(&param)
                .ok_or_else(|| Failure::Usage(format!("unknown sweep parameter `{param}`")))?;
            if values.is_empty() {
                return Err(Failure::Usage("--values must list at least one value".into()));
            }
            if param != SweepParam::BpeMerges && values.contains(&0) {
                return Err(Failure::Usage("threshold values must be at least 1".into()));
            }
            let (_, stats) = config.load_stats()?;
            let rows = sweep(&stats, param, &values, config.params.unseen);
            write_stdout(out, &sweep_table(param, &rows))?;
        }
    }
    Ok(())
}

/// Runs the driver with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_command(cli.command, out)))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(Failure::Internal(msg))
        });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Input(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
        Err(Failure::Internal(m)) => {
            let _ = writeln!(err, "internal error: {m}");
            EXIT_INTERNAL
        }
    }
}
