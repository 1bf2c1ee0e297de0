//! Term ASTs and their s-expression serialization.
//!
//! The grammar mirrors the serialized form produced for Gallina terms:
//!
//! ```text
//! (constructor (inductive (file_path (directory_path [Datatypes; Init; Coq]) (label option))) (int 1))
//! (global_ref (file_path (directory_path [Init; Coq]) (label Nat)) mul)
//! (local_ref x)
//! (binder lambda n (sort Set) (local_ref n))
//! (app (local_ref f) ((local_ref x) (local_ref y)))
//! (sort Prop)
//! (case (local_ref x) ((local_ref a) (local_ref b)))
//! (ident local x)
//! ```
//!
//! `directory_path` lists segments leaf-most first; [`QualifiedPath`] stores
//! them root-first. Reference nodes and named binders may carry one trailing
//! `(ident <category> <name>)` child once enriched.

use std::fmt;

use crate::error::{ParseError, PathError};

/// Reserved binder name for anonymous binders.
pub const ANONYMOUS: &str = "_";

/// The three identifier categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdentCategory {
    Global,
    Local,
    Constructor,
}

impl IdentCategory {
    pub const ALL: [IdentCategory; 3] = [Self::Global, Self::Local, Self::Constructor];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Global => "global",
            Self::Local => "local",
            Self::Constructor => "constructor",
        }
    }

    /// Small integer tag used in encoded records.
    pub fn code(self) -> u32 {
        match self {
            Self::Global => 0,
            Self::Local => 1,
            Self::Constructor => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "global" => Some(Self::Global),
            "local" => Some(Self::Local),
            "constructor" => Some(Self::Constructor),
            _ => None,
        }
    }
}

impl fmt::Display for IdentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fully-qualified name: root-first module/file segments plus a terminal label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedPath {
    segments: Vec<String>,
    label: String,
}

impl QualifiedPath {
    pub fn new<S: Into<String>>(
        segments: impl IntoIterator<Item = S>,
        label: impl Into<String>,
    ) -> Result<Self, PathError> {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        let label = label.into();
        if segments.is_empty() {
            return Err(PathError::NoSegments);
        }
        for s in segments.iter().chain(std::iter::once(&label)) {
            if !is_atom(s) {
                return Err(PathError::BadComponent(s.clone()));
            }
        }
        Ok(Self { segments, label })
    }

    /// Parses a dotted name such as `Coq.Init.Datatypes.option`.
    pub fn from_dotted(s: &str) -> Result<Self, PathError> {
        let mut parts: Vec<&str> = s.split('.').collect();
        let label = parts.pop().unwrap_or_default();
        if parts.is_empty() {
            return Err(PathError::NoSegments);
        }
        Self::new(parts, label)
    }

    /// Root-first segments, e.g. `[Coq, Init, Datatypes]`.
    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Display for QualifiedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            write!(f, "{s}.")?;
        }
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinderKind {
    Lambda,
    Forall,
    Let,
}

impl BinderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::Forall => "forall",
            Self::Let => "let",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "lambda" => Some(Self::Lambda),
            "forall" => Some(Self::Forall),
            "let" => Some(Self::Let),
            _ => None,
        }
    }
}

/// An identifier node: a nonterminal with no children.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub category: IdentCategory,
    pub name: String,
}

impl Ident {
    pub fn new(category: IdentCategory, name: impl Into<String>) -> Self {
        Self { category, name: name.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    GlobalRef {
        path: QualifiedPath,
        ident: Option<Ident>,
    },
    LocalRef {
        name: String,
        ident: Option<Ident>,
    },
    ConstructorRef {
        inductive: QualifiedPath,
        /// 1-based constructor index.
        index: u32,
        ident: Option<Ident>,
    },
    Binder {
        kind: BinderKind,
        /// `None` for anonymous binders.
        name: Option<String>,
        ident: Option<Ident>,
        annotation: Box<Term>,
        body: Box<Term>,
    },
    App {
        head: Box<Term>,
        args: Vec<Term>,
    },
    Sort(String),
    Case {
        scrutinee: Box<Term>,
        branches: Vec<Term>,
    },
    Ident(Ident),
}

impl Term {
    pub fn global(path: QualifiedPath) -> Self {
        Term::GlobalRef { path, ident: None }
    }

    pub fn local(name: impl Into<String>) -> Self {
        Term::LocalRef { name: name.into(), ident: None }
    }

    pub fn constructor(inductive: QualifiedPath, index: u32) -> Self {
        Term::ConstructorRef { inductive, index, ident: None }
    }

    pub fn binder(kind: BinderKind, name: Option<&str>, annotation: Term, body: Term) -> Self {
        Term::Binder {
            kind,
            name: name.map(str::to_owned),
            ident: None,
            annotation: Box::new(annotation),
            body: Box::new(body),
        }
    }

    pub fn app(head: Term, args: Vec<Term>) -> Self {
        Term::App { head: Box::new(head), args }
    }

    pub fn sort(name: impl Into<String>) -> Self {
        Term::Sort(name.into())
    }

    pub fn case(scrutinee: Term, branches: Vec<Term>) -> Self {
        Term::Case { scrutinee: Box::new(scrutinee), branches }
    }

    /// Serialization tag of this node.
    pub fn tag(&self) -> &'static str {
        match self {
            Term::GlobalRef { .. } => "global_ref",
            Term::LocalRef { .. } => "local_ref",
            Term::ConstructorRef { .. } => "constructor",
            Term::Binder { .. } => "binder",
            Term::App { .. } => "app",
            Term::Sort(_) => "sort",
            Term::Case { .. } => "case",
            Term::Ident(_) => "ident",
        }
    }

    /// The attached identifier child, for nodes that can carry one.
    pub fn ident(&self) -> Option<&Ident> {
        match self {
            Term::GlobalRef { ident, .. }
            | Term::LocalRef { ident, .. }
            | Term::ConstructorRef { ident, .. }
            | Term::Binder { ident, .. } => ident.as_ref(),
            _ => None,
        }
    }

    /// True for nodes that receive an identifier child during enrichment:
    /// every reference, plus every named binder.
    pub fn bears_ident(&self) -> bool {
        match self {
            Term::GlobalRef { .. } | Term::LocalRef { .. } | Term::ConstructorRef { .. } => true,
            Term::Binder { name, .. } => name.is_some(),
            _ => false,
        }
    }

    /// Sub-terms in serialization order, excluding any attached identifier.
    pub fn subterms(&self) -> Vec<&Term> {
        match self {
            Term::Binder { annotation, body, .. } => vec![annotation, body],
            Term::App { head, args } => std::iter::once(&**head).chain(args).collect(),
            Term::Case { scrutinee, branches } => std::iter::once(&**scrutinee).chain(branches).collect(),
            _ => Vec::new(),
        }
    }

    /// Number of children, counting an attached identifier as one.
    pub fn arity(&self) -> usize {
        self.subterms().len() + usize::from(self.ident().is_some())
    }

    /// Total node count, attached identifiers included.
    pub fn node_count(&self) -> usize {
        1 + usize::from(self.ident().is_some()) + self.subterms().into_iter().map(Term::node_count).sum::<usize>()
    }

    /// True if any identifier node occurs anywhere in the tree.
    pub fn has_idents(&self) -> bool {
        matches!(self, Term::Ident(_)) || self.ident().is_some() || self.subterms().into_iter().any(Term::has_idents)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

fn is_atom_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ';'))
}

pub(crate) fn is_atom(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_atom_char)
}

/// Renders a term in canonical single-space form.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, &mut out);
    out
}

fn write_ident(ident: &Option<Ident>, out: &mut String) {
    if let Some(id) = ident {
        out.push(' ');
        write_ident_node(id, out);
    }
}

fn write_ident_node(id: &Ident, out: &mut String) {
    out.push_str("(ident ");
    out.push_str(id.category.as_str());
    out.push(' ');
    out.push_str(&id.name);
    out.push(')');
}

/// `(file_path (directory_path [..]) (label ..))` for the given root-first
/// directories and label.
fn write_file_path(dirs: &[String], label: &str, out: &mut String) {
    out.push_str("(file_path (directory_path [");
    for (i, d) in dirs.iter().rev().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(d);
    }
    out.push_str("]) (label ");
    out.push_str(label);
    out.push_str("))");
}

fn write_list(items: &[Term], out: &mut String) {
    out.push('(');
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_term(t, out);
    }
    out.push(')');
}

fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::GlobalRef { path, ident } => {
            // The last segment is the file/module; the label is the definition.
            let (file, dirs) = path.segments.split_last().expect("non-empty segments");
            out.push_str("(global_ref ");
            write_file_path(dirs, file, out);
            out.push(' ');
            out.push_str(&path.label);
            write_ident(ident, out);
            out.push(')');
        }
        Term::LocalRef { name, ident } => {
            out.push_str("(local_ref ");
            out.push_str(name);
            write_ident(ident, out);
            out.push(')');
        }
        Term::ConstructorRef { inductive, index, ident } => {
            out.push_str("(constructor (inductive ");
            write_file_path(&inductive.segments, &inductive.label, out);
            out.push_str(") (int ");
            out.push_str(&index.to_string());
            out.push(')');
            write_ident(ident, out);
            out.push(')');
        }
        Term::Binder { kind, name, ident, annotation, body } => {
            out.push_str("(binder ");
            out.push_str(kind.as_str());
            out.push(' ');
            out.push_str(name.as_deref().unwrap_or(ANONYMOUS));
            write_ident(ident, out);
            out.push(' ');
            write_term(annotation, out);
            out.push(' ');
            write_term(body, out);
            out.push(')');
        }
        Term::App { head, args } => {
            out.push_str("(app ");
            write_term(head, out);
            out.push(' ');
            write_list(args, out);
            out.push(')');
        }
        Term::Sort(name) => {
            out.push_str("(sort ");
            out.push_str(name);
            out.push(')');
        }
        Term::Case { scrutinee, branches } => {
            out.push_str("(case ");
            write_term(scrutinee, out);
            out.push(' ');
            write_list(branches, out);
            out.push(')');
        }
        Term::Ident(id) => write_ident_node(id, out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    LBracket,
    RBracket,
    Semi,
    Atom(&'a str),
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Open => "'('".into(),
            Tok::Close => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Semi => "';'".into(),
            Tok::Atom(a) => format!("atom `{a}`"),
        }
    }
}

/// Recursive-descent parser over a borrowed input buffer.
struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::new(self.src, offset, message)
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    /// Returns the next token and its starting offset without consuming it.
    fn peek(&mut self) -> Option<(Tok<'a>, usize, usize)> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let c = rest.chars().next()?;
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            _ => {
                let len = rest.find(|c: char| !is_atom_char(c)).unwrap_or(rest.len());
                return Some((Tok::Atom(&rest[..len]), self.pos, len));
            }
        };
        Some((tok, self.pos, 1))
    }

    fn next(&mut self) -> Result<(Tok<'a>, usize), ParseError> {
        match self.peek() {
            Some((tok, at, len)) => {
                self.pos = at + len;
                Ok((tok, at))
            }
            None => Err(self.err(self.src.len(), "unexpected end of input")),
        }
    }

    fn expect(&mut self, want: Tok<'static>) -> Result<usize, ParseError> {
        let (tok, at) = self.next()?;
        if tok == want {
            Ok(at)
        } else {
            Err(self.err(at, format!("expected {}, found {}", want.describe(), tok.describe())))
        }
    }

    fn atom(&mut self) -> Result<(&'a str, usize), ParseError> {
        match self.next()? {
            (Tok::Atom(a), at) => Ok((a, at)),
            (tok, at) => Err(self.err(at, format!("expected atom, found {}", tok.describe()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let (a, at) = self.atom()?;
        if a == kw {
            Ok(())
        } else {
            Err(self.err(at, format!("expected `{kw}`, found `{a}`")))
        }
    }

    fn peek_is_close(&mut self) -> bool {
        matches!(self.peek(), Some((Tok::Close, _, _)))
    }

    /// `[a; b; c]`, returned in serialized (leaf-first) order.
    fn bracket_list(&mut self) -> Result<Vec<&'a str>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut items = Vec::new();
        if matches!(self.peek(), Some((Tok::RBracket, _, _))) {
            self.next()?;
            return Ok(items);
        }
        loop {
            items.push(self.atom()?.0);
            match self.next()? {
                (Tok::Semi, _) => continue,
                (Tok::RBracket, _) => return Ok(items),
                (tok, at) => return Err(self.err(at, format!("expected ';' or ']', found {}", tok.describe()))),
            }
        }
    }

    /// `(file_path (directory_path [..]) (label X))` → (root-first dirs, label).
    fn file_path(&mut self) -> Result<(Vec<String>, String, usize), ParseError> {
        let at = self.expect(Tok::Open)?;
        self.keyword("file_path")?;
        self.expect(Tok::Open)?;
        self.keyword("directory_path")?;
        let mut dirs: Vec<String> = self.bracket_list()?.into_iter().map(str::to_owned).collect();
        dirs.reverse();
        self.expect(Tok::Close)?;
        self.expect(Tok::Open)?;
        self.keyword("label")?;
        let label = self.atom()?.0.to_owned();
        self.expect(Tok::Close)?;
        self.expect(Tok::Close)?;
        Ok((dirs, label, at))
    }

    fn qualified(&self, segments: Vec<String>, label: String, at: usize) -> Result<QualifiedPath, ParseError> {
        QualifiedPath::new(segments, label).map_err(|e| self.err(at, e.to_string()))
    }

    /// Consumes remaining sub-terms up to and including the closing paren.
    fn rest_terms(&mut self) -> Result<Vec<(Term, usize)>, ParseError> {
        let mut out = Vec::new();
        while !self.peek_is_close() {
            let at = self.peek().map_or(self.src.len(), |p| p.1);
            out.push((self.term()?, at));
        }
        self.expect(Tok::Close)?;
        Ok(out)
    }

    /// Optional trailing `(ident ..)` child of a reference node.
    fn trailing_ident(&mut self) -> Result<Option<Ident>, ParseError> {
        let mut rest = self.rest_terms()?;
        match rest.len() {
            0 => Ok(None),
            1 => match rest.pop() {
                Some((Term::Ident(id), _)) => Ok(Some(id)),
                Some((_, at)) => Err(self.err(at, "expected (ident ..) child")),
                None => unreachable!(),
            },
            _ => Err(self.err(rest[1].1, "unexpected extra child")),
        }
    }

    fn term_list(&mut self) -> Result<Vec<Term>, ParseError> {
        self.expect(Tok::Open)?;
        Ok(self.rest_terms()?.into_iter().map(|(t, _)| t).collect())
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Open)?;
        let (tag, tag_at) = self.atom()?;
        let term = match tag {
            "local_ref" => {
                let (name, at) = self.atom()?;
                if name == ANONYMOUS {
                    return Err(self.err(at, "anonymous name `_` cannot be referenced"));
                }
                Term::LocalRef { name: name.to_owned(), ident: self.trailing_ident()? }
            }
            "global_ref" => {
                let (mut dirs, file, at) = self.file_path()?;
                dirs.push(file);
                let (label, _) = self.atom()?;
                let path = self.qualified(dirs, label.to_owned(), at)?;
                Term::GlobalRef { path, ident: self.trailing_ident()? }
            }
            "constructor" => {
                self.expect(Tok::Open)?;
                self.keyword("inductive")?;
                let (dirs, label, at) = self.file_path()?;
                let inductive = self.qualified(dirs, label, at)?;
                self.expect(Tok::Close)?;
                self.expect(Tok::Open)?;
                self.keyword("int")?;
                let (n, n_at) = self.atom()?;
                let index: u32 =
                    n.parse().map_err(|_| self.err(n_at, format!("constructor index `{n}` is not an integer")))?;
                if index == 0 {
                    return Err(self.err(n_at, "constructor indices are 1-based"));
                }
                self.expect(Tok::Close)?;
                Term::ConstructorRef { inductive, index, ident: self.trailing_ident()? }
            }
            "binder" => {
                let (k, k_at) = self.atom()?;
                let kind = BinderKind::parse(k).ok_or_else(|| self.err(k_at, format!("unknown binder kind `{k}`")))?;
                let (name, _) = self.atom()?;
                let name = (name != ANONYMOUS).then(|| name.to_owned());
                let mut rest = self.rest_terms()?;
                let ident = match (rest.len(), name.is_some()) {
                    (3, true) => match rest.remove(0) {
                        (Term::Ident(id), _) => Some(id),
                        (_, at) => return Err(self.err(at, "expected (ident ..) child")),
                    },
                    (2, _) => None,
                    _ => return Err(self.err(tag_at, "binder expects annotation and body")),
                };
                let mut it = rest.into_iter().map(|(t, _)| Box::new(t));
                let (annotation, body) = (it.next().unwrap(), it.next().unwrap());
                Term::Binder { kind, name, ident, annotation, body }
            }
            "app" => {
                let head = Box::new(self.term()?);
                let args_at = self.peek().map_or(self.src.len(), |p| p.1);
                let args = self.term_list()?;
                if args.is_empty() {
                    return Err(self.err(args_at, "application needs at least one argument"));
                }
                self.expect(Tok::Close)?;
                Term::App { head, args }
            }
            "sort" => {
                let name = self.atom()?.0.to_owned();
                self.expect(Tok::Close)?;
                Term::Sort(name)
            }
            "case" => {
                let scrutinee = Box::new(self.term()?);
                let branches = self.term_list()?;
                self.expect(Tok::Close)?;
                Term::Case { scrutinee, branches }
            }
            "ident" => {
                let (c, c_at) = self.atom()?;
                let category = IdentCategory::parse(c)
                    .ok_or_else(|| self.err(c_at, format!("unknown identifier category `{c}`")))?;
                let name = self.atom()?.0.to_owned();
                self.expect(Tok::Close)?;
                Term::Ident(Ident { category, name })
            }
            other => return Err(self.err(tag_at, format!("unknown node tag `{other}`"))),
        };
        Ok(term)
    }
}

/// Parses exactly one term; trailing non-whitespace input is an error.
pub fn parse_term(input: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(input);
    let t = p.term()?;
    if !p.at_end() {
        return Err(p.err(p.pos, "trailing input after term"));
    }
    Ok(t)
}

/// Parses a sequence of terms. Terms are self-delimiting, so both the
/// one-per-line and blank-line-separated layouts are accepted.
pub fn parse_terms(input: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser::new(input);
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.term()?);
    }
    Ok(out)
}
