//! Encoded trees: per-node integer streams for a downstream model.
//!
//! Every node gets a node-kind id. Identifier nodes additionally carry their
//! category, common-vocabulary index, subword ids, and (for globals and
//! constructors) path-segment ids. Records serialize as one JSON object per
//! line with fields `kind`, `cat`, `vocab`, `sub`, `path`, `children`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::enrich::{node_ident, CategorizedIdent};
use crate::error::{EncodeError, EnrichError};
use crate::par;
use crate::path_elab::PathVocabulary;
use crate::subword::BpeModel;
use crate::term::{BinderKind, IdentCategory, Term};
use crate::vocab::Vocabulary;

/// Node kinds and their dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    GlobalRef,
    LocalRef,
    Constructor,
    Lambda,
    Forall,
    Let,
    App,
    Sort,
    Case,
    Ident,
}

impl NodeKind {
    pub const ALL: [NodeKind; 10] = [
        Self::GlobalRef,
        Self::LocalRef,
        Self::Constructor,
        Self::Lambda,
        Self::Forall,
        Self::Let,
        Self::App,
        Self::Sort,
        Self::Case,
        Self::Ident,
    ];

    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GlobalRef => "global_ref",
            Self::LocalRef => "local_ref",
            Self::Constructor => "constructor",
            Self::Lambda => "lambda",
            Self::Forall => "forall",
            Self::Let => "let",
            Self::App => "app",
            Self::Sort => "sort",
            Self::Case => "case",
            Self::Ident => "ident",
        }
    }

    pub fn of(t: &Term) -> Self {
        match t {
            Term::GlobalRef { .. } => Self::GlobalRef,
            Term::LocalRef { .. } => Self::LocalRef,
            Term::ConstructorRef { .. } => Self::Constructor,
            Term::Binder { kind: BinderKind::Lambda, .. } => Self::Lambda,
            Term::Binder { kind: BinderKind::Forall, .. } => Self::Forall,
            Term::Binder { kind: BinderKind::Let, .. } => Self::Let,
            Term::App { .. } => Self::App,
            Term::Sort(_) => Self::Sort,
            Term::Case { .. } => Self::Case,
            Term::Ident(_) => Self::Ident,
        }
    }
}

/// Which subword cap applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Train,
    Test,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "test" => Some(Self::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedNode {
    #[serde(rename = "kind")]
    pub node_kind: u32,
    #[serde(rename = "cat", default, skip_serializing_if = "Option::is_none")]
    pub category: Option<u32>,
    #[serde(rename = "vocab", default, skip_serializing_if = "Option::is_none")]
    pub vocab_index: Option<u32>,
    #[serde(rename = "sub", default, skip_serializing_if = "Option::is_none")]
    pub subword_ids: Option<Vec<u32>>,
    #[serde(rename = "path", default, skip_serializing_if = "Option::is_none")]
    pub path_ids: Option<Vec<u32>>,
    #[serde(default)]
    pub children: Vec<EncodedNode>,
}

impl EncodedNode {
    pub fn arity(&self) -> usize {
        self.children.len()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(EncodedNode::node_count).sum::<usize>()
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Vec<&EncodedNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("encoded nodes always serialize")
    }
}

/// Everything needed to encode enriched terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderBundle {
    global: Vocabulary,
    local: Vocabulary,
    constructor: Vocabulary,
    path: PathVocabulary,
    bpe: BpeModel,
    mode: Mode,
}

impl EncoderBundle {
    /// Fails if the three vocabularies are not Global, Local and Constructor
    /// respectively.
    pub fn new(
        global: Vocabulary,
        local: Vocabulary,
        constructor: Vocabulary,
        path: PathVocabulary,
        bpe: BpeModel,
        mode: Mode,
    ) -> Result<Self, String> {
        for (v, want) in [
            (&global, IdentCategory::Global),
            (&local, IdentCategory::Local),
            (&constructor, IdentCategory::Constructor),
        ] {
            if v.category() != want {
                return Err(format!("expected a {want} vocabulary, got {}", v.category()));
            }
        }
        Ok(Self { global, local, constructor, path, bpe, mode })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn vocab(&self, category: IdentCategory) -> &Vocabulary {
        match category {
            IdentCategory::Global => &self.global,
            IdentCategory::Local => &self.local,
            IdentCategory::Constructor => &self.constructor,
        }
    }

    pub fn path_vocab(&self) -> &PathVocabulary {
        &self.path
    }

    pub fn bpe(&self) -> &BpeModel {
        &self.bpe
    }

    /// Node tag → node-kind id.
    pub fn nonterminal_table(&self) -> BTreeMap<&'static str, u32> {
        NodeKind::ALL.iter().map(|k| (k.name(), k.id())).collect()
    }

    fn subword_cap(&self) -> usize {
        match self.mode {
            Mode::Train => self.bpe.train_cap(),
            Mode::Test => self.bpe.test_cap(),
        }
    }

    /// Encodes a single identifier node.
    pub fn encode_ident(&self, ci: &CategorizedIdent) -> EncodedNode {
        EncodedNode {
            node_kind: NodeKind::Ident.id(),
            category: Some(ci.category.code()),
            vocab_index: Some(self.vocab(ci.category).lookup(&ci.name)),
            subword_ids: Some(self.bpe.token_ids(&ci.name, self.subword_cap())),
            path_ids: ci.path.as_ref().map(|p| self.path.encode_path(p)),
            children: Vec::new(),
        }
    }
}

/// Encodes an enriched term into a shape-isomorphic tree of id records.
pub fn encode_tree(t: &Term, b: &EncoderBundle) -> Result<EncodedNode, EnrichError> {
    let ident = node_ident(t)?;
    if let Term::Ident(_) = t {
        return Ok(b.encode_ident(&ident.expect("ident nodes carry an identifier")));
    }
    let mut children = Vec::with_capacity(t.arity());
    if let Some(ci) = ident {
        children.push(b.encode_ident(&ci));
    }
    for sub in t.subterms() {
        children.push(encode_tree(sub, b)?);
    }
    Ok(EncodedNode {
        node_kind: NodeKind::of(t).id(),
        category: None,
        vocab_index: None,
        subword_ids: None,
        path_ids: None,
        children,
    })
}

const BATCH: usize = 4096;

/// Writes one JSON record per term, in input order, and returns the count.
/// Terms are encoded in parallel batches; a failure reports the 1-based
/// ordinal of the first bad term.
pub fn encode_corpus<W: Write>(
    terms: impl IntoIterator<Item = Term>,
    b: &EncoderBundle,
    mut sink: W,
) -> Result<usize, EncodeError> {
    let mut written = 0;
    let mut batch = Vec::with_capacity(BATCH);
    let mut terms = terms.into_iter().peekable();
    while terms.peek().is_some() {
        batch.clear();
        batch.extend(terms.by_ref().take(BATCH));
        let encoded = par::map(&batch, |t| encode_tree(t, b).map(|n| n.to_json()));
        for line in encoded {
            let line = line.map_err(|source| EncodeError::AtTerm { ordinal: written + 1, source })?;
            sink.write_all(line.as_bytes())?;
            sink.write_all(b"\n")?;
            written += 1;
        }
    }
    sink.flush()?;
    Ok(written)
}
