//! Identifier enrichment and encoding for serialized proof-assistant terms.
//!
//! The pipeline parses s-expression terms ([`term`]), attaches categorized
//! identifier nodes using a global environment ([`enrich`], [`env`]), and
//! encodes every identifier three ways: an index into a per-category common
//! vocabulary ([`vocab`]), a sequence of BPE subwords ([`subword`]), and a
//! sequence of path-segment indices ([`path_elab`]). [`encoding`] assembles
//! the per-node id streams.

pub mod cli;
pub mod encoding;
pub mod enrich;
pub mod env;
pub mod error;
pub mod par;
pub mod path_elab;
pub mod pipeline;
pub mod subword;
pub mod term;
pub mod vocab;

pub use encoding::{encode_corpus, encode_tree, EncodedNode, EncoderBundle, Mode, NodeKind};
pub use enrich::{collect_idents, enrich, CategorizedIdent};
pub use env::{load_env, GlobalEnv, InductiveDecl};
pub use path_elab::{build_path_vocab, PathVocabulary};
pub use subword::{train_bpe, BpeModel, UnseenChars};
pub use term::{parse_term, parse_terms, print_term, BinderKind, Ident, IdentCategory, QualifiedPath, Term};
pub use vocab::{build_vocab, Counts, Vocabulary};
