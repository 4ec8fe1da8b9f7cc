use std::collections::HashMap;

use crate::address::CellAddr;
use crate::error::ParseError;
use crate::formula::{parse_formula, FormulaAst, UnaryOp};

use super::{SymbolId, SymbolTable, Term};

type RefKey = (CellAddr, Option<CellAddr>);

enum RefMode {
    Concrete,
    Index,
    /// Concrete references in a query become fresh query variables.
    Query {
        reserved: Vec<String>,
    },
}

struct Converter<'a> {
    table: &'a SymbolTable,
    mode: RefMode,
    refs: HashMap<RefKey, Term>,
}

impl Converter<'_> {
    fn reference(&mut self, key: RefKey) -> Term {
        if let Some(t) = self.refs.get(&key) {
            return t.clone();
        }
        let next = self.refs.len();
        let term = match &self.mode {
            RefMode::Concrete => unreachable!("concrete references are not shared"),
            RefMode::Index => Term::IndexVar(next as u32),
            RefMode::Query { reserved } => {
                let mut k = next;
                loop {
                    let name = format!("_ref{k}");
                    let taken = reserved.contains(&name)
                        || self.refs.values().any(|t| matches!(t, Term::QVar(n) if *n == name));
                    if !taken {
                        break Term::QVar(name);
                    }
                    k += 1;
                }
            }
        };
        self.refs.insert(key, term.clone());
        term
    }

    fn convert(&mut self, ast: &FormulaAst) -> Term {
        match ast {
            FormulaAst::Number(n) => Term::Num(n.clone()),
            FormulaAst::Text(s) => Term::Str(s.clone()),
            FormulaAst::Boolean(b) => Term::Sym(self.table.lookup(if *b { "TRUE" } else { "FALSE" })),
            FormulaAst::Error(e) => Term::Sym(self.table.lookup(e.text())),
            FormulaAst::CellRef(a) => match self.mode {
                RefMode::Concrete => Term::apply(
                    SymbolId::cellref(),
                    vec![Term::Num(a.col.to_string()), Term::Num(a.row.to_string())],
                ),
                _ => self.reference((a.clone(), None)),
            },
            FormulaAst::RangeRef(a, b) => match self.mode {
                RefMode::Concrete => Term::apply(
                    SymbolId::range(),
                    [a.col, a.row, b.col, b.row]
                        .iter()
                        .map(|n| Term::Num(n.to_string()))
                        .collect(),
                ),
                _ => self.reference((a.clone(), Some(b.clone()))),
            },
            FormulaAst::FuncCall { name, args } => {
                Term::apply(self.table.lookup(name), args.iter().map(|a| self.convert(a)).collect())
            }
            FormulaAst::BinOp { op, lhs, rhs } => {
                let head = self.table.lookup(op.symbol());
                let l = self.convert(lhs);
                let r = self.convert(rhs);
                Term::apply(head, vec![l, r])
            }
            FormulaAst::UnaryOp { op, operand } => {
                let key = match op {
                    UnaryOp::Neg => "U-",
                    UnaryOp::Plus => "U+",
                };
                Term::apply(self.table.lookup(key), vec![self.convert(operand)])
            }
            FormulaAst::Percent(child) => Term::apply(self.table.lookup("%"), vec![self.convert(child)]),
            FormulaAst::QueryVar(name) => Term::QVar(name.clone()),
        }
    }
}

/// Converts a formula AST to a term. With `variablize`, every distinct
/// reference (sheet, coordinates and `$` flags all compared) becomes one
/// index variable, numbered by first occurrence in preorder.
pub fn ast_to_term(ast: &FormulaAst, table: &SymbolTable, variablize: bool) -> Term {
    let mode = if variablize { RefMode::Index } else { RefMode::Concrete };
    Converter {
        table,
        mode,
        refs: HashMap::new(),
    }
    .convert(ast)
}

/// Converts a query AST: `?name` stays a query variable and concrete
/// references are variablized to fresh query variables `_ref<k>` that do not
/// clash with names used in the query.
pub fn ast_to_query_term(ast: &FormulaAst, table: &SymbolTable) -> Term {
    let mut reserved = Vec::new();
    collect_query_vars(ast, &mut reserved);
    Converter {
        table,
        mode: RefMode::Query { reserved },
        refs: HashMap::new(),
    }
    .convert(ast)
}

fn collect_query_vars(ast: &FormulaAst, out: &mut Vec<String>) {
    match ast {
        FormulaAst::QueryVar(n) => out.push(n.clone()),
        FormulaAst::FuncCall { args, .. } => args.iter().for_each(|a| collect_query_vars(a, out)),
        FormulaAst::BinOp { lhs, rhs, .. } => {
            collect_query_vars(lhs, out);
            collect_query_vars(rhs, out);
        }
        FormulaAst::UnaryOp { operand, .. } | FormulaAst::Percent(operand) => collect_query_vars(operand, out),
        _ => {}
    }
}

/// Parses and converts a stored formula in one step.
pub fn formula_to_term(text: &str, table: &SymbolTable, variablize: bool) -> Result<Term, ParseError> {
    Ok(ast_to_term(&parse_formula(text, false)?, table, variablize))
}
