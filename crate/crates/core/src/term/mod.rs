//! Canonical operator terms over the spreadsheet vocabulary.
//!
//! Formulas become [`Term`]s by looking every operator and function up in a
//! [`SymbolTable`]. Cell and range references are either kept concretely
//! (`spshform/cellref`, `spshform/range`) or replaced by index variables so
//! that copy-pasted formulas collapse onto one term.

mod convert;
mod mathml;
mod symbols;
mod tokens;

use std::collections::HashMap;
use std::fmt;

pub use convert::{ast_to_query_term, ast_to_term, formula_to_term};
pub use mathml::{parse_mathml, term_to_mathml, MATHML_NS, QUERY_NS, SPSHP_CDGROUP};
pub use symbols::{lookup_symbol, Dialect, SymbolTable, DEFAULT_SYMBOLS, UNKNOWN_CD};
pub use tokens::{decode_tokens, is_well_formed, term_tokens, Token};

/// A content-dictionary symbol: `cd` names the dictionary, `name` the entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId {
    pub cd: String,
    pub name: String,
}

impl SymbolId {
    pub fn new(cd: impl Into<String>, name: impl Into<String>) -> Self {
        SymbolId {
            cd: cd.into(),
            name: name.into(),
        }
    }

    pub fn cellref() -> Self {
        SymbolId::new("spshform", "cellref")
    }

    pub fn range() -> Self {
        SymbolId::new("spshform", "range")
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.cd, self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Apply {
        head: SymbolId,
        args: Vec<Term>,
    },
    /// Nullary symbol such as `spsht-bool/true`.
    Sym(SymbolId),
    Num(String),
    Str(String),
    /// Metavariable stored in the index, rendered `X<id>`.
    IndexVar(u32),
    /// Query variable written `?name`.
    QVar(String),
}

impl Term {
    pub fn apply(head: SymbolId, args: Vec<Term>) -> Self {
        Term::Apply { head, args }
    }

    pub fn num(lexeme: impl Into<String>) -> Self {
        Term::Num(lexeme.into())
    }

    pub fn qvar(name: impl Into<String>) -> Self {
        Term::QVar(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::IndexVar(_) | Term::QVar(_))
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Apply { args, .. } => args,
            _ => &[],
        }
    }

    /// Node count, which equals the length of the token encoding.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn has_vars(&self) -> bool {
        self.is_var() || self.args().iter().any(Term::has_vars)
    }

    /// First query variable in preorder, if any.
    pub fn first_qvar(&self) -> Option<&str> {
        match self {
            Term::QVar(name) => Some(name),
            _ => self.args().iter().find_map(Term::first_qvar),
        }
    }

    /// Distinct query variable names in first-occurrence order.
    pub fn qvar_names(&self) -> Vec<String> {
        fn walk(t: &Term, out: &mut Vec<String>) {
            match t {
                Term::QVar(n) if !out.contains(n) => out.push(n.clone()),
                _ => t.args().iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Renames every variable (of either kind) to index variables numbered
    /// by first occurrence in preorder. Idempotent.
    pub fn to_index_form(&self) -> Term {
        #[derive(PartialEq, Eq, Hash)]
        enum Key<'a> {
            I(u32),
            Q(&'a str),
        }
        fn walk<'a>(t: &'a Term, map: &mut HashMap<Key<'a>, u32>) -> Term {
            let var = |k: Key<'a>, map: &mut HashMap<Key<'a>, u32>| {
                let next = map.len() as u32;
                Term::IndexVar(*map.entry(k).or_insert(next))
            };
            match t {
                Term::IndexVar(i) => var(Key::I(*i), map),
                Term::QVar(n) => var(Key::Q(n), map),
                Term::Apply { head, args } => Term::Apply {
                    head: head.clone(),
                    args: args.iter().map(|a| walk(a, map)).collect(),
                },
                other => other.clone(),
            }
        }
        walk(self, &mut HashMap::new())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Apply { head, args } => {
                write!(f, "{}(", head.name)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Sym(s) => f.write_str(&s.name),
            Term::Num(n) => f.write_str(n),
            Term::Str(s) => write!(f, "{s:?}"),
            Term::IndexVar(i) => write!(f, "X{i}"),
            Term::QVar(n) => write!(f, "?{n}"),
        }
    }
}
