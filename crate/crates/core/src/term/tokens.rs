//! Preorder token encoding of terms, the key space of the index trie.

use super::{SymbolId, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    /// Head of an application with `arity` arguments following.
    Sym {
        head: SymbolId,
        arity: usize,
    },
    /// Nullary symbol. Kept apart from `Sym { arity: 0 }` so that `PI()` and
    /// a bare constant encode differently.
    Const(SymbolId),
    Num(String),
    Str(String),
    IVar(u32),
    QVar(String),
}

impl Token {
    pub fn arity(&self) -> usize {
        match self {
            Token::Sym { arity, .. } => *arity,
            _ => 0,
        }
    }
}

pub fn term_tokens(term: &Term) -> Vec<Token> {
    fn walk(t: &Term, out: &mut Vec<Token>) {
        match t {
            Term::Apply { head, args } => {
                out.push(Token::Sym {
                    head: head.clone(),
                    arity: args.len(),
                });
                args.iter().for_each(|a| walk(a, out));
            }
            Term::Sym(s) => out.push(Token::Const(s.clone())),
            Term::Num(n) => out.push(Token::Num(n.clone())),
            Term::Str(s) => out.push(Token::Str(s.clone())),
            Term::IndexVar(i) => out.push(Token::IVar(*i)),
            Term::QVar(n) => out.push(Token::QVar(n.clone())),
        }
    }
    let mut out = Vec::with_capacity(term.size());
    walk(term, &mut out);
    out
}

/// Arity-consistency: a counter starting at 1 gains each token's arity and
/// loses one per token, never dropping to 0 before the last token and
/// ending exactly at 0.
pub fn is_well_formed(tokens: &[Token]) -> bool {
    let mut pending: usize = 1;
    for (i, tok) in tokens.iter().enumerate() {
        if pending == 0 {
            return false;
        }
        pending = pending - 1 + tok.arity();
        if pending == 0 && i + 1 != tokens.len() {
            return false;
        }
    }
    pending == 0 && !tokens.is_empty()
}

/// Inverse of [`term_tokens`]; `None` for sequences that are not
/// well-formed.
pub fn decode_tokens(tokens: &[Token]) -> Option<Term> {
    fn read(tokens: &[Token], pos: &mut usize) -> Option<Term> {
        let tok = tokens.get(*pos)?;
        *pos += 1;
        Some(match tok {
            Token::Sym { head, arity } => {
                let mut args = Vec::with_capacity(*arity);
                for _ in 0..*arity {
                    args.push(read(tokens, pos)?);
                }
                Term::Apply {
                    head: head.clone(),
                    args,
                }
            }
            Token::Const(s) => Term::Sym(s.clone()),
            Token::Num(n) => Term::Num(n.clone()),
            Token::Str(s) => Term::Str(s.clone()),
            Token::IVar(i) => Term::IndexVar(*i),
            Token::QVar(n) => Term::QVar(n.clone()),
        })
    }
    let mut pos = 0;
    let term = read(tokens, &mut pos)?;
    (pos == tokens.len()).then_some(term)
}
