//! Global environment: inductive declarations and known definitions.
//!
//! File format, one record per line:
//!
//! ```text
//! # comment
//! inductive Coq.Init.Datatypes.option := Some | None
//! definition Coq.Init.Nat.mul
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::error::EnvError;
use crate::term::{is_atom, QualifiedPath};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductiveDecl {
    name: QualifiedPath,
    constructors: Vec<String>,
}

impl InductiveDecl {
    /// Constructor names must be non-empty, unique, and valid atoms.
    pub fn new(name: QualifiedPath, constructors: Vec<String>) -> Result<Self, String> {
        if constructors.is_empty() {
            return Err(format!("inductive `{name}` has no constructors"));
        }
        let mut seen = BTreeSet::new();
        for c in &constructors {
            if !is_atom(c) {
                return Err(format!("invalid constructor name `{c}`"));
            }
            if !seen.insert(c.as_str()) {
                return Err(format!("constructor `{c}` repeated in `{name}`"));
            }
        }
        Ok(Self { name, constructors })
    }

    pub fn name(&self) -> &QualifiedPath {
        &self.name
    }

    pub fn constructors(&self) -> &[String] {
        &self.constructors
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GlobalEnv {
    inductives: BTreeMap<QualifiedPath, InductiveDecl>,
    definitions: BTreeSet<QualifiedPath>,
}

impl GlobalEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a declaration; fails if the name is already present.
    pub fn add_inductive(&mut self, decl: InductiveDecl) -> Result<(), InductiveDecl> {
        if self.inductives.contains_key(&decl.name) {
            return Err(decl);
        }
        self.inductives.insert(decl.name.clone(), decl);
        Ok(())
    }

    pub fn add_definition(&mut self, name: QualifiedPath) {
        self.definitions.insert(name);
    }

    pub fn inductives(&self) -> impl Iterator<Item = &InductiveDecl> {
        self.inductives.values()
    }

    pub fn inductive(&self, name: &QualifiedPath) -> Option<&InductiveDecl> {
        self.inductives.get(name)
    }

    pub fn definitions(&self) -> impl Iterator<Item = &QualifiedPath> {
        self.definitions.iter()
    }

    pub fn is_definition(&self, name: &QualifiedPath) -> bool {
        self.definitions.contains(name)
    }

    /// Name of the `index`-th (1-based) constructor of `inductive`.
    pub fn resolve_constructor(&self, inductive: &QualifiedPath, index: u32) -> Result<&str, EnvError> {
        let decl = self.inductives.get(inductive).ok_or_else(|| EnvError::UnknownInductive(inductive.clone()))?;
        let count = decl.constructors.len();
        index
            .checked_sub(1)
            .and_then(|i| decl.constructors.get(i as usize))
            .map(String::as_str)
            .ok_or_else(|| EnvError::IndexOutOfRange { inductive: inductive.clone(), index, count })
    }
}

/// Parses an environment file.
pub fn load_env(input: &str) -> Result<GlobalEnv, EnvError> {
    let mut env = GlobalEnv::new();
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let syntax = |message: String| EnvError::Syntax { line, message };
        let (keyword, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let rest = rest.trim();
        match keyword {
            "inductive" => {
                let (name, ctors) = rest
                    .split_once(":=")
                    .ok_or_else(|| syntax("expected `inductive <Name> := <Ctor> | ...`".into()))?;
                let name = QualifiedPath::from_dotted(name.trim()).map_err(|e| syntax(e.to_string()))?;
                let constructors = ctors.split('|').map(|c| c.trim().to_owned()).collect();
                let decl = InductiveDecl::new(name, constructors).map_err(syntax)?;
                env.add_inductive(decl).map_err(|d| EnvError::DuplicateInductive { line, name: d.name })?;
            }
            "definition" => {
                let name = QualifiedPath::from_dotted(rest).map_err(|e| syntax(e.to_string()))?;
                env.add_definition(name);
            }
            other => return Err(syntax(format!("unknown record `{other}`"))),
        }
    }
    Ok(env)
}
