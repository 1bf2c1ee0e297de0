//! Byte-pair-encoding subword vocabulary over characters, and greedy
//! longest-match tokenization.
//!
//! Training starts from the characters present in the corpus and repeatedly
//! merges the most frequent adjacent pair, counting pairs within each
//! identifier weighted by its number of occurrences. Ties go to the
//! lexicographically smallest `(left, right)`. Training stops after the
//! requested number of merges or once no pair occurs at least twice.
//!
//! Tokenization does not replay merges; at each position it consumes the
//! longest vocabulary element that prefixes the rest of the identifier.
//! Characters never seen in training are dropped or replaced by
//! [`UNKNOWN_ELEMENT`], depending on [`UnseenChars`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use crate::error::FormatError;
use crate::par;
use crate::vocab::Counts;

/// Reserved element emitted for unseen characters in [`UnseenChars::Unknown`] mode.
pub const UNKNOWN_ELEMENT: &str = "<unknown>";

pub const DEFAULT_TRAIN_CAP: usize = 4;
pub const DEFAULT_TEST_CAP: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum UnseenChars {
    #[default]
    Drop,
    Unknown,
}

impl UnseenChars {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Drop => "drop",
            Self::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drop" => Some(Self::Drop),
            "unknown" => Some(Self::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for UnseenChars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One segmentation step: a vocabulary element id or an unseen character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Element(u32),
    Unseen(char),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    element: Option<u32>,
}

/// Character trie over vocabulary elements.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Trie {
    nodes: Vec<TrieNode>,
}

impl Trie {
    fn new() -> Self {
        Self { nodes: vec![TrieNode::default()] }
    }

    fn insert(&mut self, s: &str, id: u32) {
        let mut at = 0;
        for c in s.chars() {
            at = match self.nodes[at].children.get(&c) {
                Some(&n) => n,
                None => {
                    self.nodes.push(TrieNode::default());
                    let n = self.nodes.len() - 1;
                    self.nodes[at].children.insert(c, n);
                    n
                }
            };
        }
        self.nodes[at].element.get_or_insert(id);
    }

    /// Longest element prefixing `s`: `(id, length in bytes)`.
    fn longest_prefix(&self, s: &str) -> Option<(u32, usize)> {
        let mut at = 0;
        let mut best = None;
        for (i, c) in s.char_indices() {
            match self.nodes[at].children.get(&c) {
                Some(&n) => at = n,
                None => break,
            }
            if let Some(id) = self.nodes[at].element {
                best = Some((id, i + c.len_utf8()));
            }
        }
        best
    }
}

/// A trained subword model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    base_chars: BTreeSet<char>,
    merges: Vec<(String, String)>,
    /// Elements in id order: base chars by code point, then one per merge
    /// in application order.
    elements: Vec<String>,
    ids: HashMap<String, u32>,
    trie: Trie,
    unseen: UnseenChars,
    train_cap: usize,
    test_cap: usize,
}

impl BpeModel {
    /// Assembles a model from its base characters and ordered merges.
    /// Each merge's operands must already be elements when it is applied.
    pub fn from_parts(
        base_chars: impl IntoIterator<Item = char>,
        merges: Vec<(String, String)>,
        unseen: UnseenChars,
    ) -> Result<Self, String> {
        let base_chars: BTreeSet<char> = base_chars.into_iter().collect();
        let mut elements: Vec<String> = base_chars.iter().map(|c| c.to_string()).collect();
        let mut ids: HashMap<String, u32> = elements.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();
        for (i, (l, r)) in merges.iter().enumerate() {
            for operand in [l, r] {
                if !ids.contains_key(operand) {
                    return Err(format!("merge {} uses `{operand}` before it exists", i + 1));
                }
            }
            // A concatenation reached by two merge paths keeps its first id;
            // the later id is reserved but never emitted.
            let joined = format!("{l}{r}");
            ids.entry(joined.clone()).or_insert(elements.len() as u32);
            elements.push(joined);
        }
        let mut trie = Trie::new();
        for (i, e) in elements.iter().enumerate() {
            trie.insert(e, i as u32);
        }
        Ok(Self {
            base_chars,
            merges,
            elements,
            ids,
            trie,
            unseen,
            train_cap: DEFAULT_TRAIN_CAP,
            test_cap: DEFAULT_TEST_CAP,
        })
    }

    pub fn with_unseen(mut self, unseen: UnseenChars) -> Self {
        self.unseen = unseen;
        self
    }

    /// Panics if either cap is zero.
    pub fn with_caps(mut self, train_cap: usize, test_cap: usize) -> Self {
        assert!(train_cap >= 1 && test_cap >= 1, "token caps must be positive");
        self.train_cap = train_cap;
        self.test_cap = test_cap;
        self
    }

    pub fn base_chars(&self) -> &BTreeSet<char> {
        &self.base_chars
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Vocabulary elements in id order. A string produced by two merges
    /// appears twice; tokenization only emits its first id.
    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn contains(&self, element: &str) -> bool {
        self.ids.contains_key(element)
    }

    pub fn element_id(&self, element: &str) -> Option<u32> {
        self.ids.get(element).copied()
    }

    pub fn unseen(&self) -> UnseenChars {
        self.unseen
    }

    pub fn train_cap(&self) -> usize {
        self.train_cap
    }

    pub fn test_cap(&self) -> usize {
        self.test_cap
    }

    /// Id emitted for unseen characters in `Unknown` mode.
    pub fn unknown_id(&self) -> u32 {
        self.elements.len() as u32
    }

    /// Number of distinct subword ids this model can emit.
    pub fn vocab_size(&self) -> usize {
        self.elements.len() + usize::from(self.unseen == UnseenChars::Unknown)
    }

    /// Uncapped greedy longest-match segmentation.
    pub fn segment(&self, name: &str) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut rest = name;
        while let Some(c) = rest.chars().next() {
            match self.trie.longest_prefix(rest) {
                Some((id, len)) => {
                    out.push(Piece::Element(id));
                    rest = &rest[len..];
                }
                None => {
                    out.push(Piece::Unseen(c));
                    rest = &rest[c.len_utf8()..];
                }
            }
        }
        out
    }

    fn pieces(&self, name: &str) -> impl Iterator<Item = Piece> + '_ {
        let unseen = self.unseen;
        self.segment(name).into_iter().filter(move |p| !(matches!(p, Piece::Unseen(_)) && unseen == UnseenChars::Drop))
    }

    /// Subword elements of `name`, truncated to the first `cap`.
    ///
    /// Panics if `cap` is zero.
    pub fn tokenize(&self, name: &str, cap: usize) -> Vec<&str> {
        assert!(cap >= 1, "token cap must be positive");
        self.pieces(name)
            .take(cap)
            .map(|p| match p {
                Piece::Element(id) => self.elements[id as usize].as_str(),
                Piece::Unseen(_) => UNKNOWN_ELEMENT,
            })
            .collect()
    }

    /// Like [`tokenize`](Self::tokenize) but yields subword ids.
    pub fn token_ids(&self, name: &str, cap: usize) -> Vec<u32> {
        assert!(cap >= 1, "token cap must be positive");
        self.pieces(name)
            .take(cap)
            .map(|p| match p {
                Piece::Element(id) => id,
                Piece::Unseen(_) => self.unknown_id(),
            })
            .collect()
    }

    pub fn tokenize_train(&self, name: &str) -> Vec<&str> {
        self.tokenize(name, self.train_cap)
    }

    pub fn tokenize_test(&self, name: &str) -> Vec<&str> {
        self.tokenize(name, self.test_cap)
    }

    /// True if `name` contains a character outside the base vocabulary.
    pub fn has_unseen(&self, name: &str) -> bool {
        name.chars().any(|c| !self.base_chars.contains(&c))
    }

    pub fn to_text(&self) -> String {
        let mut s =
            format!("# base_chars={} merges={} mode={}\n", self.base_chars.len(), self.merges.len(), self.unseen);
        for c in &self.base_chars {
            s.push_str(&escape(&c.to_string()));
            s.push('\n');
        }
        for (l, r) in &self.merges {
            let _ = writeln!(s, "{}\t{}", escape(l), escape(r));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let lines: Vec<&str> = text.lines().collect();
        let header = lines.first().ok_or_else(|| FormatError::new(1, "empty model file"))?;
        let (n_base, n_merges, mode) = parse_header(header)
            .ok_or_else(|| FormatError::new(1, "expected `# base_chars=<n> merges=<n> mode=<drop|unknown>`"))?;
        if lines.len() != 1 + n_base + n_merges {
            return Err(FormatError::new(
                lines.len() + 1,
                format!("expected {} lines, found {}", 1 + n_base + n_merges, lines.len()),
            ));
        }
        let mut base = Vec::with_capacity(n_base);
        for (i, line) in lines[1..=n_base].iter().enumerate() {
            let ln = i + 2;
            let s = unescape(line).ok_or_else(|| FormatError::new(ln, "bad escape"))?;
            let mut cs = s.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => {
                    if base.last().is_some_and(|&p| p >= c) {
                        return Err(FormatError::new(ln, "base characters not in ascending order"));
                    }
                    base.push(c)
                }
                _ => return Err(FormatError::new(ln, "expected a single character")),
            }
        }
        let mut merges = Vec::with_capacity(n_merges);
        for (i, line) in lines[1 + n_base..].iter().enumerate() {
            let ln = i + 2 + n_base;
            let (l, r) = line
                .split_once('\t')
                .and_then(|(l, r)| Some((unescape(l)?, unescape(r)?)))
                .ok_or_else(|| FormatError::new(ln, "expected `<left>\\t<right>`"))?;
            merges.push((l, r));
        }
        Self::from_parts(base, merges, mode).map_err(|m| FormatError::new(0, m))
    }
}

fn parse_header(line: &str) -> Option<(usize, usize, UnseenChars)> {
    let mut it = line.strip_prefix("# ")?.split(' ');
    let b = it.next()?.strip_prefix("base_chars=")?.parse().ok()?;
    let m = it.next()?.strip_prefix("merges=")?.parse().ok()?;
    let mode = UnseenChars::parse(it.next()?.strip_prefix("mode=")?)?;
    it.next().is_none().then_some((b, m, mode))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c == '\\' {
            out.push(match it.next()? {
                '\\' => '\\',
                't' => '\t',
                'n' => '\n',
                'r' => '\r',
                _ => return None,
            });
        } else {
            out.push(c);
        }
    }
    (!out.is_empty()).then_some(out)
}

/// A distinct identifier split into interned symbols, with its multiplicity.
struct Word {
    symbols: Vec<u32>,
    count: u64,
}

/// Replaces non-overlapping `(left, right)` occurrences, scanning left to right.
fn apply_merge(symbols: &mut Vec<u32>, left: u32, right: u32, joined: u32) {
    if symbols.len() < 2 {
        return;
    }
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(joined);
            i += 2;
        } else {
            out.push(symbols[i]);
            i += 1;
        }
    }
    *symbols = out;
}

fn count_pairs(words: &[Word]) -> HashMap<(u32, u32), u64> {
    par::fold_merge(
        words,
        HashMap::new,
        |mut acc, w| {
            for p in w.symbols.windows(2) {
                *acc.entry((p[0], p[1])).or_insert(0) += w.count;
            }
            acc
        },
        |a, b| if a.len() < b.len() { merge_pair_counts(b, a) } else { merge_pair_counts(a, b) },
    )
}

fn merge_pair_counts(mut a: HashMap<(u32, u32), u64>, b: HashMap<(u32, u32), u64>) -> HashMap<(u32, u32), u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Trains on identifier occurrences (each occurrence counts once).
pub fn train_bpe<S: AsRef<str>>(idents: impl IntoIterator<Item = S>, num_merges: usize) -> BpeModel {
    train_bpe_counts(&idents.into_iter().collect(), num_merges)
}

/// Trains on an identifier multiset.
pub fn train_bpe_counts(corpus: &Counts, num_merges: usize) -> BpeModel {
    let base_chars: BTreeSet<char> = corpus.iter().flat_map(|(n, _)| n.chars()).collect();
    let mut symbols: Vec<String> = base_chars.iter().map(|c| c.to_string()).collect();
    let mut interned: HashMap<String, u32> = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
    let mut words: Vec<Word> = corpus
        .iter()
        .filter(|(n, _)| !n.is_empty())
        .map(|(n, count)| Word { symbols: n.chars().map(|c| interned[c.to_string().as_str()]).collect(), count })
        .collect();

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let pairs = count_pairs(&words);
        let best = pairs
            .iter()
            .filter(|(_, &c)| c >= 2)
            .max_by(|(pa, ca), (pb, cb)| {
                ca.cmp(cb).then_with(|| {
                    // Smaller (left, right) wins ties, so it must compare greater.
                    let ka = (&symbols[pa.0 as usize], &symbols[pa.1 as usize]);
                    let kb = (&symbols[pb.0 as usize], &symbols[pb.1 as usize]);
                    kb.cmp(&ka)
                })
            })
            .map(|(&p, _)| p);
        let Some((l, r)) = best else { break };
        let joined_str = format!("{}{}", symbols[l as usize], symbols[r as usize]);
        let joined = *interned.entry(joined_str.clone()).or_insert_with(|| {
            symbols.push(joined_str);
            (symbols.len() - 1) as u32
        });
        merges.push((symbols[l as usize].clone(), symbols[r as usize].clone()));
        for_each_word(&mut words, |w| apply_merge(&mut w.symbols, l, r, joined));
    }
    BpeModel::from_parts(base_chars, merges, UnseenChars::Drop).expect("trained merges are well-founded")
}

fn for_each_word(words: &mut [Word], f: impl Fn(&mut Word) + Sync + Send) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        words.par_iter_mut().for_each(f);
    }
    #[cfg(not(feature = "parallel"))]
    {
        words.iter_mut().for_each(f);
    }
}
