//! Corpus-level plumbing shared by the command-line driver: reading term
//! files, counting identifiers, building and persisting encoder bundles,
//! and parameter sweeps.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoding::{encode_corpus, EncoderBundle, Mode};
use crate::enrich::{collect_idents, prepare};
use crate::env::{load_env, GlobalEnv};
use crate::error::{EncodeError, EnrichError, EnvError, FormatError, ParseError};
use crate::par;
use crate::path_elab::PathVocabulary;
use crate::subword::{train_bpe_counts, BpeModel, UnseenChars};
use crate::term::{parse_terms, IdentCategory, Term};
use crate::vocab::{Counts, Vocabulary};

pub const GLOBAL_VOCAB_FILE: &str = "global.vocab";
pub const LOCAL_VOCAB_FILE: &str = "local.vocab";
pub const CONSTRUCTOR_VOCAB_FILE: &str = "constructor.vocab";
pub const PATH_VOCAB_FILE: &str = "path.vocab";
pub const BPE_MODEL_FILE: &str = "bpe.model";
pub const MANIFEST_FILE: &str = "MANIFEST";
pub const ENCODED_FILE: &str = "encoded.jsonl";
pub const ENCODED_MANIFEST_FILE: &str = "encoded.manifest";

/// Bundle files covered by the manifest, in manifest order.
pub const BUNDLE_FILES: [&str; 5] =
    [GLOBAL_VOCAB_FILE, LOCAL_VOCAB_FILE, CONSTRUCTOR_VOCAB_FILE, PATH_VOCAB_FILE, BPE_MODEL_FILE];

pub const DEFAULT_THRESHOLD: u64 = 200;
pub const DEFAULT_MERGES: usize = 1000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{}: {source}", path.display())]
    Env {
        path: PathBuf,
        #[source]
        source: EnvError,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("term {ordinal}: {source}")]
    Term {
        ordinal: usize,
        #[source]
        source: EnrichError,
    },
    #[error("manifest mismatch for {file}: expected {expected}, found {found}")]
    ManifestMismatch { file: String, expected: String, found: String },
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("invalid bundle: {0}")]
    Bundle(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_owned(), source }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Expands files and directories into a sorted, de-duplicated file list.
/// Hidden entries are skipped when walking directories.
pub fn corpus_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let entry = entry.map_err(io_err(dir))?;
            let path = entry.path();
            if entry.file_name().to_string_lossy().starts_with('.') {
                continue;
            }
            if path.is_dir() {
                walk(&path, out)?;
            } else {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            walk(p, &mut files)?;
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// Parses every term of every corpus file, in sorted file order.
pub fn read_corpus(inputs: &[PathBuf]) -> Result<Vec<Term>, PipelineError> {
    let mut terms = Vec::new();
    for path in corpus_files(inputs)? {
        let text = read(&path)?;
        terms.extend(parse_terms(&text).map_err(|source| PipelineError::Parse { path: path.clone(), source })?);
    }
    Ok(terms)
}

pub fn read_env(path: Option<&Path>) -> Result<GlobalEnv, PipelineError> {
    match path {
        None => Ok(GlobalEnv::new()),
        Some(p) => load_env(&read(p)?).map_err(|source| PipelineError::Env { path: p.to_owned(), source }),
    }
}

/// Enriches raw terms (and validates enriched ones) in parallel.
pub fn prepare_corpus(terms: Vec<Term>, env: &GlobalEnv) -> Result<Vec<Term>, PipelineError> {
    let prepared = par::map(&terms, |t| prepare(t.clone(), env));
    prepared
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|source| PipelineError::Term { ordinal: i + 1, source }))
        .collect()
}

/// Occurrence counts for each vocabulary a bundle is built from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub terms: usize,
    pub global: Counts,
    pub local: Counts,
    pub constructor: Counts,
    pub path_segments: Counts,
}

impl CorpusStats {
    /// Counts identifiers over enriched terms.
    pub fn collect(terms: &[Term]) -> Result<Self, PipelineError> {
        let mut per_term = Vec::with_capacity(terms.len());
        for (i, r) in par::map(terms, collect_idents).into_iter().enumerate() {
            per_term.push(r.map_err(|source| PipelineError::Term { ordinal: i + 1, source })?);
        }
        let stats = par::fold_merge(
            &per_term,
            CorpusStats::default,
            |mut acc, idents| {
                acc.terms += 1;
                for ci in idents {
                    if let Some(p) = &ci.path {
                        for seg in p.segments() {
                            acc.path_segments.add(seg, 1);
                        }
                    }
                    acc.counts_mut(ci.category).add(&ci.name, 1);
                }
                acc
            },
            CorpusStats::merge,
        );
        Ok(stats)
    }

    pub fn merge(self, other: CorpusStats) -> CorpusStats {
        CorpusStats {
            terms: self.terms + other.terms,
            global: self.global.merge(other.global),
            local: self.local.merge(other.local),
            constructor: self.constructor.merge(other.constructor),
            path_segments: self.path_segments.merge(other.path_segments),
        }
    }

    pub fn counts(&self, category: IdentCategory) -> &Counts {
        match category {
            IdentCategory::Global => &self.global,
            IdentCategory::Local => &self.local,
            IdentCategory::Constructor => &self.constructor,
        }
    }

    fn counts_mut(&mut self, category: IdentCategory) -> &mut Counts {
        match category {
            IdentCategory::Global => &mut self.global,
            IdentCategory::Local => &mut self.local,
            IdentCategory::Constructor => &mut self.constructor,
        }
    }

    /// Tab-separated summary: per-vocabulary totals, then occurrence histograms.
    pub fn to_table(&self) -> String {
        let rows: [(&str, &Counts); 4] = [
            ("global", &self.global),
            ("local", &self.local),
            ("constructor", &self.constructor),
            ("path", &self.path_segments),
        ];
        let mut s = format!("terms\t{}\n", self.terms);
        s.push_str("category\tdistinct\toccurrences\n");
        for (name, c) in rows {
            let _ = writeln!(s, "{name}\t{}\t{}", c.len(), c.total());
        }
        s.push_str("histogram\tcategory\tcount\tidentifiers\n");
        for (name, c) in rows {
            for (count, n) in c.histogram() {
                let _ = writeln!(s, "histogram\t{name}\t{count}\t{n}");
            }
        }
        s
    }
}

/// Vocabulary thresholds and subword settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleParams {
    pub threshold_global: u64,
    pub threshold_local: u64,
    pub threshold_ctor: u64,
    pub threshold_path: u64,
    pub merges: usize,
    pub unseen: UnseenChars,
}

impl Default for BundleParams {
    fn default() -> Self {
        Self {
            threshold_global: DEFAULT_THRESHOLD,
            threshold_local: DEFAULT_THRESHOLD,
            threshold_ctor: DEFAULT_THRESHOLD,
            threshold_path: DEFAULT_THRESHOLD,
            merges: DEFAULT_MERGES,
            unseen: UnseenChars::Drop,
        }
    }
}

impl BundleParams {
    pub fn threshold(&self, category: IdentCategory) -> u64 {
        match category {
            IdentCategory::Global => self.threshold_global,
            IdentCategory::Local => self.threshold_local,
            IdentCategory::Constructor => self.threshold_ctor,
        }
    }
}

/// Builds all vocabularies and the subword model. The subword model is
/// trained on global identifier occurrences only and shared by all categories.
pub fn build_bundle(stats: &CorpusStats, params: &BundleParams, mode: Mode) -> EncoderBundle {
    let vocab = |c: IdentCategory| Vocabulary::from_counts(c, stats.counts(c), params.threshold(c));
    EncoderBundle::new(
        vocab(IdentCategory::Global),
        vocab(IdentCategory::Local),
        vocab(IdentCategory::Constructor),
        PathVocabulary::from_counts(&stats.path_segments, params.threshold_path),
        train_bpe_counts(&stats.global, params.merges).with_unseen(params.unseen),
        mode,
    )
    .expect("categories are fixed")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Renders bundle file contents keyed by file name, in manifest order.
pub fn bundle_files(b: &EncoderBundle) -> Vec<(&'static str, String)> {
    vec![
        (GLOBAL_VOCAB_FILE, b.vocab(IdentCategory::Global).to_text()),
        (LOCAL_VOCAB_FILE, b.vocab(IdentCategory::Local).to_text()),
        (CONSTRUCTOR_VOCAB_FILE, b.vocab(IdentCategory::Constructor).to_text()),
        (PATH_VOCAB_FILE, b.path_vocab().to_text()),
        (BPE_MODEL_FILE, b.bpe().to_text()),
    ]
}

fn manifest_text(files: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (name, body) in files {
        let _ = writeln!(s, "{}  {name}", sha256_hex(body.as_bytes()));
    }
    s
}

/// Writes the five bundle files and a `MANIFEST` of their SHA-256 digests.
pub fn write_bundle(b: &EncoderBundle, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = bundle_files(b);
    for (name, body) in &files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))?;
    }
    let p = dir.join(MANIFEST_FILE);
    fs::write(&p, manifest_text(&files)).map_err(io_err(&p))
}

fn parse_manifest(text: &str) -> Result<Vec<(String, String)>, PipelineError> {
    let entries: Vec<(String, String)> = text
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once("  ")
                .map(|(h, f)| (f.to_owned(), h.to_owned()))
                .ok_or_else(|| PipelineError::Manifest(format!("malformed line `{l}`")))
        })
        .collect::<Result<_, _>>()?;
    let names: Vec<&str> = entries.iter().map(|(f, _)| f.as_str()).collect();
    if names != BUNDLE_FILES {
        return Err(PipelineError::Manifest(format!("expected entries {BUNDLE_FILES:?}, found {names:?}")));
    }
    Ok(entries)
}

/// Loads a bundle, verifying every file against the manifest first.
pub fn read_bundle(dir: &Path, mode: Mode) -> Result<EncoderBundle, PipelineError> {
    let manifest = parse_manifest(&read(&dir.join(MANIFEST_FILE))?)?;
    let mut bodies = Vec::with_capacity(manifest.len());
    for (name, expected) in &manifest {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(io_err(&p))?;
        let found = sha256_hex(&bytes);
        if &found != expected {
            return Err(PipelineError::ManifestMismatch { file: name.clone(), expected: expected.clone(), found });
        }
        let body = String::from_utf8(bytes).map_err(|e| PipelineError::Io {
            path: p.clone(),
            source: io::Error::new(io::ErrorKind::InvalidData, e),
        })?;
        bodies.push((p, body));
    }
    let fmt = |p: &Path| {
        let path = p.to_owned();
        move |source| PipelineError::Format { path, source }
    };
    let vocab = |i: usize| Vocabulary::from_text(&bodies[i].1).map_err(fmt(&bodies[i].0));
    let (global, local, constructor) = (vocab(0)?, vocab(1)?, vocab(2)?);
    let path = PathVocabulary::from_text(&bodies[3].1).map_err(fmt(&bodies[3].0))?;
    let bpe = BpeModel::from_text(&bodies[4].1).map_err(fmt(&bodies[4].0))?;
    EncoderBundle::new(global, local, constructor, path, bpe, mode).map_err(PipelineError::Bundle)
}

/// Encodes prepared terms into `out_dir/encoded.jsonl`, plus a sidecar
/// manifest tying the records to the bundle digests.
pub fn write_encoded(
    terms: Vec<Term>,
    bundle: &EncoderBundle,
    bundle_dir: &Path,
    out_dir: &Path,
) -> Result<usize, PipelineError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let p = out_dir.join(ENCODED_FILE);
    let file = fs::File::create(&p).map_err(io_err(&p))?;
    let count = encode_corpus(terms, bundle, BufWriter::new(file))?;
    let bundle_manifest = read(&bundle_dir.join(MANIFEST_FILE))?;
    let sidecar = format!(
        "# mode={} records={count} {ENCODED_FILE}={}\n{bundle_manifest}",
        bundle.mode().as_str(),
        sha256_hex(&fs::read(&p).map_err(io_err(&p))?)
    );
    let m = out_dir.join(ENCODED_MANIFEST_FILE);
    fs::write(&m, sidecar).map_err(io_err(&m))?;
    Ok(count)
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    ThresholdGlobal,
    ThresholdLocal,
    ThresholdCtor,
    ThresholdPath,
    BpeMerges,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "threshold-global" => Some(Self::ThresholdGlobal),
            "threshold-local" => Some(Self::ThresholdLocal),
            "threshold-ctor" => Some(Self::ThresholdCtor),
            "threshold-path" => Some(Self::ThresholdPath),
            "bpe-merges" => Some(Self::BpeMerges),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ThresholdGlobal => "threshold-global",
            Self::ThresholdLocal => "threshold-local",
            Self::ThresholdCtor => "threshold-ctor",
            Self::ThresholdPath => "threshold-path",
            Self::BpeMerges => "bpe-merges",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: u64,
    pub vocab_size: usize,
    /// Fraction of occurrences mapping to unknown. For `bpe-merges`, the
    /// fraction of identifier occurrences (all categories) containing a
    /// character outside the subword base vocabulary.
    pub unknown_rate: f64,
}

/// One row per value. Threshold values must be at least 1.
pub fn sweep(stats: &CorpusStats, param: SweepParam, values: &[u64], unseen: UnseenChars) -> Vec<SweepRow> {
    par::map(values, |&value| {
        let (vocab_size, unknown_rate) = match param {
            SweepParam::ThresholdGlobal | SweepParam::ThresholdLocal | SweepParam::ThresholdCtor => {
                let cat = match param {
                    SweepParam::ThresholdGlobal => IdentCategory::Global,
                    SweepParam::ThresholdLocal => IdentCategory::Local,
                    _ => IdentCategory::Constructor,
                };
                let v = Vocabulary::from_counts(cat, stats.counts(cat), value);
                (v.len(), v.unknown_rate(stats.counts(cat)))
            }
            SweepParam::ThresholdPath => {
                let v = PathVocabulary::from_counts(&stats.path_segments, value);
                (v.len(), v.unknown_rate(&stats.path_segments))
            }
            SweepParam::BpeMerges => {
                let m = train_bpe_counts(&stats.global, value as usize).with_unseen(unseen);
                let (mut total, mut unseen_occ) = (0u64, 0u64);
                for cat in IdentCategory::ALL {
                    for (name, c) in stats.counts(cat).iter() {
                        total += c;
                        if m.has_unseen(name) {
                            unseen_occ += c;
                        }
                    }
                }
                let rate = if total == 0 { 0.0 } else { unseen_occ as f64 / total as f64 };
                (m.vocab_size(), rate)
            }
        };
        SweepRow { value, vocab_size, unknown_rate }
    })
}

pub fn sweep_table(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = String::from("parameter\tvalue\tvocab_size\tunknown_rate\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}\t{:.6}", param.as_str(), r.value, r.vocab_size, r.unknown_rate);
    }
    s
}
