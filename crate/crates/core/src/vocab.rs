//! Per-category common-identifier vocabularies.
//!
//! Identifiers whose corpus count reaches the threshold get dense indices
//! `0..N`, ordered by descending count then name. Everything else maps to
//! the category's own unknown index `N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::enrich::CategorizedIdent;
use crate::error::FormatError;
use crate::term::IdentCategory;

/// Occurrence counts keyed by name. Merging is commutative and associative,
/// so shards may be counted independently.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counts(BTreeMap<String, u64>);

impl Counts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, n: u64) {
        if let Some(c) = self.0.get_mut(name) {
            *c += n;
        } else {
            self.0.insert(name.to_owned(), n);
        }
    }

    pub fn merge(self, other: Counts) -> Counts {
        let (mut big, small) = if self.0.len() >= other.0.len() { (self, other) } else { (other, self) };
        for (k, v) in small.0 {
            *big.0.entry(k).or_insert(0) += v;
        }
        big
    }

    pub fn get(&self, name: &str) -> u64 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Number of distinct names.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    /// Histogram of counts: occurrence count → number of names with that count.
    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for &c in self.0.values() {
            *h.entry(c).or_insert(0) += 1;
        }
        h
    }
}

impl<S: AsRef<str>> FromIterator<S> for Counts {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut c = Counts::new();
        for s in iter {
            c.add(s.as_ref(), 1);
        }
        c
    }
}

/// Threshold-indexed table shared by identifier and path vocabularies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Indexed {
    pub(crate) threshold: u64,
    ranked: Vec<(String, u64)>,
    index: HashMap<String, u32>,
    below: BTreeMap<String, u64>,
}

impl Indexed {
    pub(crate) fn from_counts(counts: &Counts, threshold: u64) -> Self {
        assert!(threshold >= 1, "vocabulary threshold must be at least 1");
        let mut ranked = Vec::new();
        let mut below = BTreeMap::new();
        for (name, c) in counts.iter() {
            if c >= threshold {
                ranked.push((name.to_owned(), c));
            } else {
                below.insert(name.to_owned(), c);
            }
        }
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::assemble(threshold, ranked, below)
    }

    fn assemble(threshold: u64, ranked: Vec<(String, u64)>, below: BTreeMap<String, u64>) -> Self {
        let index = ranked.iter().enumerate().map(|(i, (n, _))| (n.clone(), i as u32)).collect();
        Self { threshold, ranked, index, below }
    }

    pub(crate) fn len(&self) -> usize {
        self.ranked.len()
    }

    pub(crate) fn unknown_index(&self) -> u32 {
        self.ranked.len() as u32
    }

    pub(crate) fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub(crate) fn lookup(&self, name: &str) -> u32 {
        self.get(name).unwrap_or_else(|| self.unknown_index())
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.ranked.iter().enumerate().map(|(i, (n, c))| (n.as_str(), i as u32, *c))
    }

    pub(crate) fn below(&self) -> &BTreeMap<String, u64> {
        &self.below
    }

    /// Fraction of occurrences in `counts` that map to unknown.
    pub(crate) fn unknown_rate(&self, counts: &Counts) -> f64 {
        let total = counts.total();
        if total == 0 {
            return 0.0;
        }
        let unknown: u64 = counts.iter().filter(|(n, _)| self.get(n).is_none()).map(|(_, c)| c).sum();
        unknown as f64 / total as f64
    }

    pub(crate) fn to_text(&self, category: &str) -> String {
        let mut s = format!("# category={category} threshold={}\n", self.threshold);
        for (name, i, c) in self.entries() {
            let _ = writeln!(s, "{i}\t{name}\t{c}");
        }
        s.push_str("# below-threshold\n");
        for (name, c) in &self.below {
            let _ = writeln!(s, "{name}\t{c}");
        }
        s
    }

    /// Parses the text form, returning the header category and the table.
    pub(crate) fn from_text(text: &str) -> Result<(String, Self), FormatError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| FormatError::new(1, "empty vocabulary file"))?;
        let (category, threshold) = parse_header(header)
            .ok_or_else(|| FormatError::new(1, "expected `# category=<c> threshold=<t>` header"))?;
        if threshold == 0 {
            return Err(FormatError::new(1, "threshold must be at least 1"));
        }
        let mut ranked: Vec<(String, u64)> = Vec::new();
        let mut below = BTreeMap::new();
        let mut in_below = false;
        for (ln, line) in lines {
            if line == "# below-threshold" {
                if in_below {
                    return Err(FormatError::new(ln, "repeated below-threshold section"));
                }
                in_below = true;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if in_below {
                let [name, count] = fields[..] else {
                    return Err(FormatError::new(ln, "expected `<name>\\t<count>`"));
                };
                let count = parse_count(count, ln)?;
                if count >= threshold {
                    return Err(FormatError::new(ln, format!("`{name}` count {count} is not below threshold")));
                }
                if below.insert(name.to_owned(), count).is_some() {
                    return Err(FormatError::new(ln, format!("duplicate name `{name}`")));
                }
            } else {
                let [index, name, count] = fields[..] else {
                    return Err(FormatError::new(ln, "expected `<index>\\t<name>\\t<count>`"));
                };
                if index.parse::<usize>().ok() != Some(ranked.len()) {
                    return Err(FormatError::new(ln, format!("expected index {}", ranked.len())));
                }
                let count = parse_count(count, ln)?;
                if count < threshold {
                    return Err(FormatError::new(ln, format!("`{name}` count {count} is below threshold")));
                }
                if let Some((pn, pc)) = ranked.last() {
                    if !(count < *pc || (count == *pc && name > pn.as_str())) {
                        return Err(FormatError::new(ln, "entries are not in (count desc, name asc) order"));
                    }
                }
                ranked.push((name.to_owned(), count));
            }
        }
        if !in_below {
            return Err(FormatError::new(text.lines().count() + 1, "missing `# below-threshold` section"));
        }
        if let Some((n, _)) = ranked.iter().find(|(n, _)| below.contains_key(n)) {
            return Err(FormatError::new(0, format!("`{n}` is both indexed and below threshold")));
        }
        Ok((category, Self::assemble(threshold, ranked, below)))
    }
}

fn parse_count(s: &str, line: usize) -> Result<u64, FormatError> {
    s.parse().map_err(|_| FormatError::new(line, format!("bad count `{s}`")))
}

fn parse_header(line: &str) -> Option<(String, u64)> {
    let rest = line.strip_prefix("# ")?;
    let (cat, thr) = rest.split_once(' ')?;
    let cat = cat.strip_prefix("category=")?;
    let thr = thr.strip_prefix("threshold=")?.parse().ok()?;
    Some((cat.to_owned(), thr))
}

/// Common-identifier vocabulary for one category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    category: IdentCategory,
    table: Indexed,
}

/// Counts the occurrences of one category's identifiers.
pub fn count_category<'a>(idents: impl IntoIterator<Item = &'a CategorizedIdent>, category: IdentCategory) -> Counts {
    idents.into_iter().filter(|c| c.category == category).map(|c| c.name.as_str()).collect()
}

/// Builds a vocabulary from an identifier stream. Identifiers of other
/// categories are ignored.
///
/// Panics if `threshold` is zero.
pub fn build_vocab<'a>(
    idents: impl IntoIterator<Item = &'a CategorizedIdent>,
    category: IdentCategory,
    threshold: u64,
) -> Vocabulary {
    Vocabulary::from_counts(category, &count_category(idents, category), threshold)
}

impl Vocabulary {
    pub fn from_counts(category: IdentCategory, counts: &Counts, threshold: u64) -> Self {
        Self { category, table: Indexed::from_counts(counts, threshold) }
    }

    pub fn category(&self) -> IdentCategory {
        self.category
    }

    pub fn threshold(&self) -> u64 {
        self.table.threshold
    }

    /// Number of indexed identifiers (the unknown excluded).
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.len() == 0
    }

    pub fn unknown_index(&self) -> u32 {
        self.table.unknown_index()
    }

    /// Index of `name`, or the unknown index.
    pub fn lookup(&self, name: &str) -> u32 {
        self.table.lookup(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.get(name).is_some()
    }

    /// `(name, index, count)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.table.entries()
    }

    /// Counts of every identifier of this category that fell below the threshold.
    pub fn export_below_threshold(&self) -> &BTreeMap<String, u64> {
        self.table.below()
    }

    pub fn unknown_rate(&self, counts: &Counts) -> f64 {
        self.table.unknown_rate(counts)
    }

    pub fn to_text(&self) -> String {
        self.table.to_text(self.category.as_str())
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let (cat, table) = Indexed::from_text(text)?;
        let category = IdentCategory::parse(&cat)
            .ok_or_else(|| FormatError::new(1, format!("`{cat}` is not an identifier category")))?;
        Ok(Self { category, table })
    }
}
