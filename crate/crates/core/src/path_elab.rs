//! Path elaboration: a dedicated vocabulary over the module/file segments
//! of fully-qualified paths. Labels are not segments and are not counted.

use std::collections::BTreeMap;

use crate::error::FormatError;
use crate::term::QualifiedPath;
use crate::vocab::{Counts, Indexed};

pub const PATH_CATEGORY: &str = "path";

/// Counts each segment once per path occurrence.
pub fn count_segments<'a>(paths: impl IntoIterator<Item = &'a QualifiedPath>) -> Counts {
    paths.into_iter().flat_map(|p| p.segments().iter()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathVocabulary {
    table: Indexed,
}

/// Panics if `threshold` is zero.
pub fn build_path_vocab<'a>(paths: impl IntoIterator<Item = &'a QualifiedPath>, threshold: u64) -> PathVocabulary {
    PathVocabulary::from_counts(&count_segments(paths), threshold)
}

impl PathVocabulary {
    pub fn from_counts(counts: &Counts, threshold: u64) -> Self {
        Self { table: Indexed::from_counts(counts, threshold) }
    }

    pub fn threshold(&self) -> u64 {
        self.table.threshold
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.len() == 0
    }

    pub fn unknown_index(&self) -> u32 {
        self.table.unknown_index()
    }

    pub fn lookup(&self, segment: &str) -> u32 {
        self.table.lookup(segment)
    }

    pub fn contains(&self, segment: &str) -> bool {
        self.table.get(segment).is_some()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.table.entries()
    }

    pub fn export_below_threshold(&self) -> &BTreeMap<String, u64> {
        self.table.below()
    }

    pub fn unknown_rate(&self, counts: &Counts) -> f64 {
        self.table.unknown_rate(counts)
    }

    /// One index per segment, root-first.
    pub fn encode_path(&self, path: &QualifiedPath) -> Vec<u32> {
        self.encode_segments(path.segments())
    }

    pub fn encode_segments(&self, segments: &[String]) -> Vec<u32> {
        segments.iter().map(|s| self.table.lookup(s)).collect()
    }

    pub fn to_text(&self) -> String {
        self.table.to_text(PATH_CATEGORY)
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let (cat, table) = Indexed::from_text(text)?;
        if cat != PATH_CATEGORY {
            return Err(FormatError::new(1, format!("expected category=path, found `{cat}`")));
        }
        Ok(Self { table })
    }
}
