//! Typed STRIPS subset of PDDL: domain and problem definitions, a parser,
//! and a printer whose output parses back to an equal value.
//!
//! Supported requirements are `:strips` and `:typing`. Identifiers are
//! lowercased. Anything richer (negative preconditions, conditional
//! effects, `either` types, numeric fluents, costs, derived predicates) is
//! rejected with [`PddlError::UnsupportedFeature`].

mod parse;
mod sexpr;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use parse::{parse_domain, parse_problem};
pub use sexpr::Pos;

pub const ROOT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: unsupported feature: {feature}")]
    UnsupportedFeature {
        line: usize,
        col: usize,
        feature: String,
    },
    #[error("{line}:{col}: `{predicate}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        line: usize,
        col: usize,
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error(
        "{line}:{col}: argument `{arg}` of `{predicate}` has type `{found}`, expected `{expected}`"
    )]
    TypeMismatch {
        line: usize,
        col: usize,
        predicate: String,
        arg: String,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: unknown predicate `{name}`")]
    UnknownPredicate {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: unknown object `{name}`")]
    UnknownObject {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: unknown type `{name}`")]
    UnknownType {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("problem is for domain `{found}` but the domain is `{expected}`")]
    DomainNameMismatch { expected: String, found: String },
}

impl PddlError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        PddlError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(pos: Pos, feature: impl Into<String>) -> Self {
        PddlError::UnsupportedFeature {
            line: pos.line,
            col: pos.col,
            feature: feature.into(),
        }
    }
}

/// A name with its declared type, used for parameters, constants and objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Variable, stored with its leading `?`.
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<AtomTemplate>,
    pub add: Vec<AtomTemplate>,
    pub del: Vec<AtomTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn has_type(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.types.iter().any(|t| t.name == name)
    }

    /// Whether `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == ROOT_TYPE {
            return true;
        }
        let parents: HashMap<&str, &str> = self
            .types
            .iter()
            .map(|t| (t.name.as_str(), t.parent.as_str()))
            .collect();
        let mut cur = ty;
        // Hierarchy is validated acyclic at parse time; the bound is a backstop.
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match parents.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

fn write_typed_list(f: &mut fmt::Formatter<'_>, items: &[TypedName]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{} - {}", item.name, item.ty)?;
    }
    Ok(())
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {}", a.name())?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for DomainDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            write!(f, "  (:types")?;
            for t in &self.types {
                write!(f, " {} - {}", t.name, t.parent)?;
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            write_typed_list(f, &self.constants)?;
            writeln!(f, ")")?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, "    ({}", p.name)?;
            for param in &p.params {
                write!(f, " {} - {}", param.name, param.ty)?;
            }
            writeln!(f, ")")?;
        }
        writeln!(f, "  )")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed_list(f, &a.params)?;
            writeln!(f, ")")?;
            write!(f, "    :precondition (and")?;
            for p in &a.pre {
                write!(f, " {p}")?;
            }
            writeln!(f, ")")?;
            write!(f, "    :effect (and")?;
            for p in &a.add {
                write!(f, " {p}")?;
            }
            for p in &a.del {
                write!(f, " (not {p})")?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        write!(f, "  (:objects ")?;
        write_typed_list(f, &self.objects)?;
        writeln!(f, ")")?;
        writeln!(f, "  (:init")?;
        for a in &self.init {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  )")?;
        write!(f, "  (:goal (and")?;
        for a in &self.goal {
            write!(f, " {a}")?;
        }
        writeln!(f, "))")?;
        writeln!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtype_walks_parent_chain() {
        let dom = parse_domain(
            "(define (domain d) (:requirements :typing)
               (:types truck package - locatable locatable location)
               (:predicates (at ?x - locatable ?l - location)))",
        )
        .unwrap();
        assert!(dom.is_subtype("truck", "locatable"));
        assert!(dom.is_subtype("truck", "object"));
        assert!(!dom.is_subtype("truck", "location"));
        assert!(!dom.is_subtype("locatable", "truck"));
    }
}
