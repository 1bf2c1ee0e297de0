//! Shared generators and independent oracles for integration tests.
//!
//! The oracles here deliberately avoid the library's internals: they work on
//! plain strings with naive enumeration instead of tries, interned symbols,
//! or parallel counting.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use identenc::{BinderKind, GlobalEnv, InductiveDecl, QualifiedPath, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Random identifier over `alphabet`, length in `1..=max_len`.
pub fn random_ident(rng: &mut impl Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// At each position, enumerate every vocabulary element and take the
/// longest one that prefixes the remainder. Characters with no match are
/// dropped or replaced by `unknown`.
pub fn longest_match_oracle(vocab: &[String], name: &str, unknown: Option<&str>) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let rest: String = chars[i..].iter().collect();
        let best = vocab.iter().filter(|e| rest.starts_with(e.as_str())).max_by_key(|e| e.chars().count());
        match best {
            Some(e) => {
                out.push(e.clone());
                i += e.chars().count();
            }
            None => {
                if let Some(u) = unknown {
                    out.push(u.to_owned());
                }
                i += 1;
            }
        }
    }
    out
}

/// Textbook BPE over a word list: words are lists of string symbols, pair
/// counts are recomputed from scratch each round in a sorted map, and the
/// first pair (in `(left, right)` order) with the highest count wins.
pub fn textbook_bpe(words: &[String], num_merges: usize) -> Vec<(String, String)> {
    let mut corpus: Vec<Vec<String>> = words.iter().map(|w| w.chars().map(|c| c.to_string()).collect()).collect();
    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
        for w in &corpus {
            for i in 1..w.len() {
                *pairs.entry((w[i - 1].clone(), w[i].clone())).or_default() += 1;
            }
        }
        let mut best: Option<(&(String, String), u64)> = None;
        for (p, &c) in &pairs {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((p, c));
            }
        }
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let pair = pair.clone();
        for w in corpus.iter_mut() {
            let mut merged = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    merged.push(format!("{}{}", pair.0, pair.1));
                    i += 2;
                } else {
                    merged.push(w[i].clone());
                    i += 1;
                }
            }
            *w = merged;
        }
        merges.push(pair);
    }
    merges
}

/// Brute-force count and filter: (kept names with counts, below-threshold names with counts).
pub fn count_filter(names: &[String], threshold: u64) -> (BTreeMap<String, u64>, BTreeMap<String, u64>) {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for n in names {
        *counts.entry(n.clone()).or_default() += 1;
    }
    counts.into_iter().partition(|(_, c)| *c >= threshold)
}

/// Counts reference nodes and named binders by walking the tree directly.
pub fn count_reference_nodes(t: &Term) -> usize {
    match t {
        Term::GlobalRef { .. } | Term::LocalRef { .. } | Term::ConstructorRef { .. } => 1,
        Term::Binder { name, annotation, body, .. } => {
            usize::from(name.is_some()) + count_reference_nodes(annotation) + count_reference_nodes(body)
        }
        Term::App { head, args } => count_reference_nodes(head) + args.iter().map(count_reference_nodes).sum::<usize>(),
        Term::Case { scrutinee, branches } => {
            count_reference_nodes(scrutinee) + branches.iter().map(count_reference_nodes).sum::<usize>()
        }
        Term::Sort(_) | Term::Ident(_) => 0,
    }
}

/// Pre-order arity sequence of a term, treating an attached identifier as a leaf child.
pub fn term_arities(t: &Term, out: &mut Vec<usize>) {
    let ident = usize::from(t.ident().is_some());
    let subs = t.subterms();
    out.push(ident + subs.len());
    if ident == 1 {
        out.push(0);
    }
    for s in subs {
        term_arities(s, out);
    }
}

pub fn encoded_arities(n: &identenc::EncodedNode, out: &mut Vec<usize>) {
    out.push(n.children.len());
    for c in &n.children {
        encoded_arities(c, out);
    }
}

/// A small environment plus a generator of raw (un-enriched) terms over it.
pub struct TermGen {
    pub env: GlobalEnv,
    inductives: Vec<(QualifiedPath, u32)>,
    globals: Vec<QualifiedPath>,
    locals: Vec<&'static str>,
}

impl TermGen {
    pub fn new() -> Self {
        let mut env = GlobalEnv::new();
        let decls = [
            ("Coq.Init.Datatypes.option", &["Some", "None"][..]),
            ("Coq.Init.Datatypes.nat", &["O", "S"][..]),
            ("Coq.Init.Datatypes.list", &["nil", "cons"][..]),
            ("Coq.Init.Specif.sig", &["exist"][..]),
            ("Top.Five.five", &["c1", "c2", "c3", "c4", "c5"][..]),
        ];
        let mut inductives = Vec::new();
        for (name, ctors) in decls {
            let p = QualifiedPath::from_dotted(name).unwrap();
            env.add_inductive(InductiveDecl::new(p.clone(), ctors.iter().map(|s| s.to_string()).collect()).unwrap())
                .unwrap();
            inductives.push((p, ctors.len() as u32));
        }
        let globals = [
            "Coq.Init.Nat.mul",
            "Coq.Init.Nat.add",
            "Coq.Init.Peano.gt",
            "Coq.Arith.Mult.mult_gt_0",
            "Top.posnatEq",
            "Top.posnatMult",
            "Coq.Reals.Rdefinitions.Rplus",
        ]
        .iter()
        .map(|s| QualifiedPath::from_dotted(s).unwrap())
        .collect();
        Self { env, inductives, globals, locals: vec!["x", "x0", "n", "g", "g0", "p1", "p2", "A", "H"] }
    }

    pub fn term(&self, rng: &mut impl Rng, depth: u32) -> Term {
        let leaf = depth == 0 || rng.gen_bool(0.3);
        if leaf {
            return match rng.gen_range(0..4) {
                0 => Term::global(self.globals.choose(rng).unwrap().clone()),
                1 => Term::local(*self.locals.choose(rng).unwrap()),
                2 => {
                    let (p, n) = self.inductives.choose(rng).unwrap();
                    Term::constructor(p.clone(), rng.gen_range(1..=*n))
                }
                _ => Term::sort(*["Prop", "Set", "Type"].choose(rng).unwrap()),
            };
        }
        match rng.gen_range(0..3) {
            0 => {
                let kind = *[BinderKind::Lambda, BinderKind::Forall, BinderKind::Let].choose(rng).unwrap();
                let name = if rng.gen_bool(0.2) { None } else { Some(*self.locals.choose(rng).unwrap()) };
                Term::binder(kind, name, self.term(rng, depth - 1), self.term(rng, depth - 1))
            }
            1 => {
                let n = rng.gen_range(1..=3);
                Term::app(self.term(rng, depth - 1), (0..n).map(|_| self.term(rng, depth - 1)).collect())
            }
            _ => {
                let n = rng.gen_range(0..=2);
                Term::case(self.term(rng, depth - 1), (0..n).map(|_| self.term(rng, depth - 1)).collect())
            }
        }
    }

    pub fn corpus(&self, seed: u64, n: usize, depth: u32) -> Vec<Term> {
        let mut r = rng(seed);
        (0..n).map(|_| self.term(&mut r, depth)).collect()
    }
}

/// Random fully-qualified path over a small segment pool.
pub fn random_path(rng: &mut impl Rng, pool: &[&str]) -> QualifiedPath {
    let n = rng.gen_range(1..=4);
    let segs: Vec<&str> = (0..n).map(|_| *pool.choose(rng).unwrap()).collect();
    QualifiedPath::new(segs, "leaf").unwrap()
}

pub fn distinct<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}
