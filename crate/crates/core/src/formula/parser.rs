use crate::error::ParseError;

use super::ast::{BinaryOp, FormulaAst, UnaryOp};
use super::lexer::{Lexer, TokKind, Token};

/// Strips surrounding whitespace and an optional leading `=`, returning the
/// byte range of the remaining formula body.
pub(crate) fn formula_body(text: &str) -> (usize, usize) {
    let trimmed_start = text.len() - text.trim_start().len();
    let mut start = trimmed_start;
    if text[start..].starts_with('=') {
        start += 1;
    }
    let body = &text[start..];
    let start = start + (body.len() - body.trim_start().len());
    let end = text.trim_end().len().max(start);
    (start, end)
}

/// Parses formula text into an AST. `allow_query_vars` enables the `?name`
/// extension used by queries.
pub fn parse_formula(text: &str, allow_query_vars: bool) -> Result<FormulaAst, ParseError> {
    let (start, end) = formula_body(text);
    if start >= end {
        return Err(ParseError::new(start.min(text.len()), "empty formula"));
    }
    let tokens = Lexer::tokenize(text, start, end, allow_query_vars)?;
    let mut parser = Parser { tokens, pos: 0 };
    let ast = parser.expr(0)?;
    let tok = parser.peek();
    match tok.kind {
        TokKind::Eof => Ok(ast),
        TokKind::RParen => Err(ParseError::new(tok.span.start, "unbalanced `)`")),
        _ => Err(parser.unexpected()),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn binary_op(kind: &TokKind) -> Option<BinaryOp> {
    Some(match kind {
        TokKind::Plus => BinaryOp::Add,
        TokKind::Minus => BinaryOp::Sub,
        TokKind::Star => BinaryOp::Mul,
        TokKind::Slash => BinaryOp::Div,
        TokKind::Caret => BinaryOp::Pow,
        TokKind::Amp => BinaryOp::Concat,
        TokKind::Eq => BinaryOp::Eq,
        TokKind::Neq => BinaryOp::Neq,
        TokKind::Lt => BinaryOp::Lt,
        TokKind::Gt => BinaryOp::Gt,
        TokKind::Le => BinaryOp::Le,
        TokKind::Ge => BinaryOp::Ge,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self) -> ParseError {
        let tok = self.peek();
        match tok.kind {
            TokKind::Eof => ParseError::new(tok.span.start, "unexpected end of formula"),
            _ => ParseError::new(tok.span.start, "unexpected token"),
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<FormulaAst, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = binary_op(&self.peek().kind) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let next_min = if op.is_right_assoc() { prec } else { prec + 1 };
            let rhs = self.expr(next_min)?;
            lhs = FormulaAst::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FormulaAst, ParseError> {
        let op = match self.peek().kind {
            TokKind::Minus => UnaryOp::Neg,
            TokKind::Plus => UnaryOp::Plus,
            _ => return self.postfix(),
        };
        self.advance();
        Ok(FormulaAst::unary(op, self.unary()?))
    }

    fn postfix(&mut self) -> Result<FormulaAst, ParseError> {
        let mut node = self.primary()?;
        while self.peek().kind == TokKind::Percent {
            self.advance();
            node = FormulaAst::Percent(Box::new(node));
        }
        Ok(node)
    }

    fn primary(&mut self) -> Result<FormulaAst, ParseError> {
        let tok = self.advance();
        match tok.kind {
            TokKind::Number(n) => Ok(FormulaAst::Number(n)),
            TokKind::Text(s) => Ok(FormulaAst::Text(s)),
            TokKind::Bool(b) => Ok(FormulaAst::Boolean(b)),
            TokKind::Error(e) => Ok(FormulaAst::Error(e)),
            TokKind::QueryVar(name) => {
                if self.peek().kind == TokKind::LParen {
                    return Err(ParseError::new(
                        tok.span.start,
                        "query variables cannot be used as function names",
                    ));
                }
                Ok(FormulaAst::QueryVar(name))
            }
            TokKind::Ref { addr, .. } => {
                if self.peek().kind != TokKind::Colon {
                    return Ok(FormulaAst::CellRef(addr));
                }
                self.advance();
                let end_tok = self.advance();
                match end_tok.kind {
                    TokKind::Ref { addr: mut end, .. } => {
                        if end.sheet.is_none() {
                            end.sheet = addr.sheet.clone();
                        }
                        Ok(FormulaAst::RangeRef(addr, end))
                    }
                    _ => Err(ParseError::new(
                        end_tok.span.start,
                        "expected a cell reference after `:`",
                    )),
                }
            }
            TokKind::Func(name) => {
                let open = self.advance();
                debug_assert_eq!(open.kind, TokKind::LParen);
                let args = self.arguments(open.span.start)?;
                Ok(FormulaAst::FuncCall { name, args })
            }
            TokKind::LParen => {
                let inner = self.expr(0)?;
                let close = self.peek().clone();
                match close.kind {
                    TokKind::RParen => {
                        self.advance();
                        Ok(inner)
                    }
                    TokKind::Eof => Err(ParseError::new(tok.span.start, "unbalanced `(`")),
                    TokKind::Sep => Err(ParseError::new(
                        close.span.start,
                        "reference union lists are not supported",
                    )),
                    _ => Err(self.unexpected()),
                }
            }
            TokKind::Eof => Err(ParseError::new(tok.span.start, "unexpected end of formula")),
            TokKind::RParen => Err(ParseError::new(tok.span.start, "unbalanced `)`")),
            _ => Err(ParseError::new(tok.span.start, "unexpected token")),
        }
    }

    fn arguments(&mut self, open_pos: usize) -> Result<Vec<FormulaAst>, ParseError> {
        let mut args = Vec::new();
        if self.peek().kind == TokKind::RParen {
            self.advance();
            return Ok(args);
        }
        loop {
            let tok = self.peek().clone();
            match tok.kind {
                TokKind::Sep | TokKind::RParen => return Err(ParseError::new(tok.span.start, "empty argument")),
                TokKind::Eof => return Err(ParseError::new(open_pos, "unbalanced `(`")),
                _ => {}
            }
            args.push(self.expr(0)?);
            let tok = self.advance();
            match tok.kind {
                TokKind::Sep => continue,
                TokKind::RParen => return Ok(args),
                TokKind::Eof => return Err(ParseError::new(open_pos, "unbalanced `(`")),
                _ => return Err(ParseError::new(tok.span.start, "expected `,` or `)`")),
            }
        }
    }
}
