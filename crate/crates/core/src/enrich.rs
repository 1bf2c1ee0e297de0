//! Identifier enrichment: attach an `ident` child to every reference node
//! and every named binder, classifying it into one of three categories.

use crate::env::GlobalEnv;
use crate::error::EnrichError;
use crate::term::{Ident, IdentCategory, QualifiedPath, Term};

/// An identifier occurrence with its category and, for globals and
/// constructors, the fully-qualified path it lives under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CategorizedIdent {
    pub category: IdentCategory,
    pub name: String,
    pub path: Option<QualifiedPath>,
}

impl CategorizedIdent {
    pub fn local(name: impl Into<String>) -> Self {
        Self { category: IdentCategory::Local, name: name.into(), path: None }
    }
}

fn malformed(msg: impl Into<String>) -> EnrichError {
    EnrichError::Malformed(msg.into())
}

/// Returns an enriched copy of `t`. Input that already contains identifier
/// nodes is rejected rather than enriched twice.
pub fn enrich(t: &Term, env: &GlobalEnv) -> Result<Term, EnrichError> {
    if t.has_idents() {
        return Err(malformed("term is already enriched"));
    }
    enrich_node(t, env)
}

fn enrich_node(t: &Term, env: &GlobalEnv) -> Result<Term, EnrichError> {
    let out = match t {
        Term::GlobalRef { path, .. } => {
            Term::GlobalRef { path: path.clone(), ident: Some(Ident::new(IdentCategory::Global, path.label())) }
        }
        Term::LocalRef { name, .. } => {
            Term::LocalRef { name: name.clone(), ident: Some(Ident::new(IdentCategory::Local, name.as_str())) }
        }
        Term::ConstructorRef { inductive, index, .. } => {
            let name = env.resolve_constructor(inductive, *index)?;
            Term::ConstructorRef {
                inductive: inductive.clone(),
                index: *index,
                ident: Some(Ident::new(IdentCategory::Constructor, name)),
            }
        }
        Term::Binder { kind, name, annotation, body, .. } => Term::Binder {
            kind: *kind,
            name: name.clone(),
            ident: name.as_deref().map(|n| Ident::new(IdentCategory::Local, n)),
            annotation: Box::new(enrich_node(annotation, env)?),
            body: Box::new(enrich_node(body, env)?),
        },
        Term::App { head, args } => Term::App {
            head: Box::new(enrich_node(head, env)?),
            args: args.iter().map(|a| enrich_node(a, env)).collect::<Result<_, _>>()?,
        },
        Term::Case { scrutinee, branches } => Term::Case {
            scrutinee: Box::new(enrich_node(scrutinee, env)?),
            branches: branches.iter().map(|b| enrich_node(b, env)).collect::<Result<_, _>>()?,
        },
        Term::Sort(_) | Term::Ident(_) => t.clone(),
    };
    Ok(out)
}

/// Enriches raw terms and validates already-enriched ones, so a corpus may
/// hold either form.
pub fn prepare(t: Term, env: &GlobalEnv) -> Result<Term, EnrichError> {
    if t.has_idents() {
        check_node(&t, &mut |_| {})?;
        Ok(t)
    } else {
        enrich_node(&t, env)
    }
}

/// Every identifier of an enriched term, in pre-order.
pub fn collect_idents(t: &Term) -> Result<Vec<CategorizedIdent>, EnrichError> {
    let mut out = Vec::new();
    check_node(t, &mut |ci| out.push(ci))?;
    Ok(out)
}

/// Validates that `t` carries exactly the identifier it should, returning
/// it with its path.
pub(crate) fn node_ident(t: &Term) -> Result<Option<CategorizedIdent>, EnrichError> {
    let expected = match t {
        Term::GlobalRef { path, .. } => Some((IdentCategory::Global, Some(path.label()), Some(path))),
        Term::LocalRef { name, .. } => Some((IdentCategory::Local, Some(name.as_str()), None)),
        Term::ConstructorRef { inductive, .. } => Some((IdentCategory::Constructor, None, Some(inductive))),
        Term::Binder { name: Some(n), .. } => Some((IdentCategory::Local, Some(n.as_str()), None)),
        Term::Ident(id) => {
            return Ok(Some(CategorizedIdent { category: id.category, name: id.name.clone(), path: None }))
        }
        _ => None,
    };
    match (expected, t.ident()) {
        (None, None) => Ok(None),
        (None, Some(id)) => Err(malformed(format!("unexpected identifier `{}` on {} node", id.name, t.tag()))),
        (Some(_), None) => Err(malformed(format!("{} node lacks its identifier child", t.tag()))),
        (Some((category, name, path)), Some(id)) => {
            if id.category != category {
                return Err(malformed(format!(
                    "{} node carries a {} identifier, expected {}",
                    t.tag(),
                    id.category,
                    category
                )));
            }
            if let Some(n) = name {
                if n != id.name {
                    return Err(malformed(format!("identifier `{}` does not match name `{n}`", id.name)));
                }
            }
            Ok(Some(CategorizedIdent { category, name: id.name.clone(), path: path.cloned() }))
        }
    }
}

fn check_node(t: &Term, sink: &mut impl FnMut(CategorizedIdent)) -> Result<(), EnrichError> {
    if let Some(ci) = node_ident(t)? {
        sink(ci);
    }
    for sub in t.subterms() {
        check_node(sub, sink)?;
    }
    Ok(())
}
