use std::ops::Range;

use crate::address::CellAddr;
use crate::error::{ParseError, RefError};

use super::ast::ErrorLit;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum TokKind {
    Number(String),
    Text(String),
    Bool(bool),
    Error(ErrorLit),
    /// `local` is the byte range of the `$?LETTERS$?DIGITS` part, after any
    /// sheet prefix.
    Ref {
        addr: CellAddr,
        local: Range<usize>,
    },
    /// Uppercased function name; the lexer only emits this when `(` follows.
    Func(String),
    QueryVar(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Amp,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    Percent,
    LParen,
    RParen,
    Sep,
    Colon,
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub span: Range<usize>,
}

/// Canonical decimal lexeme: no leading zeros in the integer part (except a
/// lone `0`), no trailing fractional zeros, lowercase `e` exponent kept only
/// when the source used one.
pub fn canonical_number(lexeme: &str) -> String {
    let (mantissa, exponent) = match lexeme.find(['e', 'E']) {
        Some(i) => (&lexeme[..i], Some(&lexeme[i + 1..])),
        None => (lexeme, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let int_part = int_part.trim_start_matches('0');
    let frac_part = frac_part.trim_end_matches('0');
    if int_part.is_empty() && frac_part.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    out.push_str(if int_part.is_empty() { "0" } else { int_part });
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(frac_part);
    }
    if let Some(exp) = exponent {
        let (negative, digits) = match exp.as_bytes().first() {
            Some(b'-') => (true, &exp[1..]),
            Some(b'+') => (false, &exp[1..]),
            _ => (false, exp),
        };
        let digits = digits.trim_start_matches('0');
        if !digits.is_empty() {
            out.push('e');
            if negative {
                out.push('-');
            }
            out.push_str(digits);
        }
    }
    out
}

fn is_word_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'_' | b'.' | b'$')
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn valid_function_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    bytes.next().is_some_and(|b| b.is_ascii_uppercase())
        && bytes.all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'.' || b == b'_')
}

pub(crate) struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    allow_query_vars: bool,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str, start: usize, allow_query_vars: bool) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: start,
            allow_query_vars,
        }
    }

    pub fn tokenize(src: &'a str, start: usize, end: usize, allow_query_vars: bool) -> Result<Vec<Token>, ParseError> {
        let mut lexer = Lexer::new(&src[..end], start, allow_query_vars);
        let mut out = Vec::new();
        loop {
            let tok = lexer.next_token()?;
            let eof = tok.kind == TokKind::Eof;
            out.push(tok);
            if eof {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(Token {
                kind: TokKind::Eof,
                span: start..start,
            });
        };
        let simple = |kind, len| (kind, len);
        let (kind, len) = match c {
            b'+' => simple(TokKind::Plus, 1),
            b'-' => simple(TokKind::Minus, 1),
            b'*' => simple(TokKind::Star, 1),
            b'/' => simple(TokKind::Slash, 1),
            b'^' => simple(TokKind::Caret, 1),
            b'&' => simple(TokKind::Amp, 1),
            b'%' => simple(TokKind::Percent, 1),
            b'(' => simple(TokKind::LParen, 1),
            b')' => simple(TokKind::RParen, 1),
            b',' | b';' => simple(TokKind::Sep, 1),
            b':' => simple(TokKind::Colon, 1),
            b'=' => simple(TokKind::Eq, 1),
            b'<' => match self.peek_at(1) {
                Some(b'>') => simple(TokKind::Neq, 2),
                Some(b'=') => simple(TokKind::Le, 2),
                _ => simple(TokKind::Lt, 1),
            },
            b'>' => match self.peek_at(1) {
                Some(b'=') => simple(TokKind::Ge, 2),
                _ => simple(TokKind::Gt, 1),
            },
            b'"' => return self.string(start),
            b'#' => return self.error_literal(start),
            b'?' => return self.query_var(start),
            b'\'' => return self.quoted_sheet_ref(start),
            b'0'..=b'9' => return Ok(self.number(start)),
            b'.' if self.peek_at(1).is_some_and(|b| b.is_ascii_digit()) => return Ok(self.number(start)),
            b if b.is_ascii_alphabetic() || b == b'$' || b == b'_' => return self.word(start),
            b'{' => return Err(ParseError::new(start, "array literals are not supported")),
            b'[' => return Err(ParseError::new(start, "structured references are not supported")),
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::new(start, format!("unexpected character `{ch}`")));
            }
        };
        self.pos += len;
        Ok(Token {
            kind,
            span: start..self.pos,
        })
    }

    fn number(&mut self, start: usize) -> Token {
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|b| b.is_ascii_digit()) {
                while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        Token {
            kind: TokKind::Number(canonical_number(&self.src[start..self.pos])),
            span: start..self.pos,
        }
    }

    fn string(&mut self, start: usize) -> Result<Token, ParseError> {
        self.pos += 1;
        let mut text = String::new();
        loop {
            let rest = &self.src[self.pos..];
            match rest.find('"') {
                None => return Err(ParseError::new(start, "unterminated string literal")),
                Some(i) => {
                    text.push_str(&rest[..i]);
                    self.pos += i + 1;
                    if self.peek() == Some(b'"') {
                        text.push('"');
                        self.pos += 1;
                    } else {
                        return Ok(Token {
                            kind: TokKind::Text(text),
                            span: start..self.pos,
                        });
                    }
                }
            }
        }
    }

    fn error_literal(&mut self, start: usize) -> Result<Token, ParseError> {
        for e in ErrorLit::ALL {
            let text = e.text();
            if self.src[start..]
                .get(..text.len())
                .is_some_and(|s| s.eq_ignore_ascii_case(text))
            {
                self.pos += text.len();
                return Ok(Token {
                    kind: TokKind::Error(e),
                    span: start..self.pos,
                });
            }
        }
        Err(ParseError::new(start, "unknown error literal"))
    }

    fn query_var(&mut self, start: usize) -> Result<Token, ParseError> {
        if !self.allow_query_vars {
            return Err(ParseError::new(start, "query variables are not allowed here"));
        }
        self.pos += 1;
        let name_start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        if self.pos == name_start {
            return Err(ParseError::new(start, "expected a query variable name after `?`"));
        }
        Ok(Token {
            kind: TokKind::QueryVar(self.src[name_start..self.pos].to_string()),
            span: start..self.pos,
        })
    }

    fn quoted_sheet_ref(&mut self, start: usize) -> Result<Token, ParseError> {
        let mut i = start + 1;
        loop {
            match self.bytes.get(i) {
                None => return Err(ParseError::new(start, "unterminated quoted sheet name")),
                Some(b'\'') if self.bytes.get(i + 1) == Some(&b'\'') => i += 2,
                Some(b'\'') => break,
                Some(_) => i += 1,
            }
        }
        if self.bytes.get(i + 1) != Some(&b'!') {
            return Err(ParseError::new(start, "expected `!` after quoted sheet name"));
        }
        self.pos = i + 2;
        self.sheet_local_ref(start)
    }

    /// Lexes the local part of a reference whose sheet prefix ends at `self.pos`.
    fn sheet_local_ref(&mut self, start: usize) -> Result<Token, ParseError> {
        let local_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_alphanumeric() || b == b'$') {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        let addr = CellAddr::parse(text).map_err(|e| ref_error(local_start, e))?;
        Ok(Token {
            kind: TokKind::Ref {
                addr,
                local: local_start..self.pos,
            },
            span: start..self.pos,
        })
    }

    fn word(&mut self, start: usize) -> Result<Token, ParseError> {
        while self.peek().is_some_and(is_word_char) {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        match self.peek() {
            Some(b'!') => {
                if word.contains('$') {
                    return Err(ParseError::new(start, format!("invalid sheet name `{word}`")));
                }
                self.pos += 1;
                return self.sheet_local_ref(start);
            }
            Some(b'(') if !word.contains('$') => {
                let mut name = word.to_ascii_uppercase();
                for prefix in ["_XLFN.", "_XLWS."] {
                    if let Some(rest) = name.strip_prefix(prefix) {
                        name = rest.to_string();
                    }
                }
                if !valid_function_name(&name) {
                    return Err(ParseError::new(start, format!("invalid function name `{word}`")));
                }
                return Ok(Token {
                    kind: TokKind::Func(name),
                    span: start..self.pos,
                });
            }
            _ => {}
        }
        match word.to_ascii_uppercase().as_str() {
            "TRUE" => {
                return Ok(Token {
                    kind: TokKind::Bool(true),
                    span: start..self.pos,
                })
            }
            "FALSE" => {
                return Ok(Token {
                    kind: TokKind::Bool(false),
                    span: start..self.pos,
                })
            }
            _ => {}
        }
        let looks_like_ref = {
            let w = word.trim_start_matches('$');
            w.starts_with(|c: char| c.is_ascii_alphabetic())
                && w.ends_with(|c: char| c.is_ascii_digit())
                && !w.contains(['.', '_'])
        };
        if !looks_like_ref {
            return Err(ParseError::new(start, format!("unknown name `{word}`")));
        }
        let addr = CellAddr::parse(word).map_err(|e| ref_error(start, e))?;
        Ok(Token {
            kind: TokKind::Ref {
                addr,
                local: start..self.pos,
            },
            span: start..self.pos,
        })
    }
}

fn ref_error(position: usize, e: RefError) -> ParseError {
    ParseError::new(position, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_numbers() {
        assert_eq!(canonical_number("2"), "2");
        assert_eq!(canonical_number("007"), "7");
        assert_eq!(canonical_number("2.50"), "2.5");
        assert_eq!(canonical_number(".5"), "0.5");
        assert_eq!(canonical_number("0.0"), "0");
        assert_eq!(canonical_number("5."), "5");
        assert_eq!(canonical_number("1.50E+03"), "1.5e3");
        assert_eq!(canonical_number("1E-003"), "1e-3");
        assert_eq!(canonical_number("2e0"), "2");
        assert_eq!(canonical_number("100"), "100");
    }

    fn kinds(src: &str) -> Vec<TokKind> {
        Lexer::tokenize(src, 0, src.len(), true)
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn words() {
        let k = kinds("SUM(Data!A1:$B$2)");
        assert_eq!(k[0], TokKind::Func("SUM".into()));
        assert!(
            matches!(&k[2], TokKind::Ref { addr, local } if addr.sheet.as_deref() == Some("Data") && *local == (9..11))
        );
        assert_eq!(k[3], TokKind::Colon);
        assert_eq!(kinds("_xlfn.STDEV.S(A1)")[0], TokKind::Func("STDEV.S".into()));
        assert_eq!(kinds("true")[0], TokKind::Bool(true));
        assert_eq!(kinds("log10(A1)")[0], TokKind::Func("LOG10".into()));
    }

    #[test]
    fn rejects() {
        assert!(Lexer::tokenize("?x", 0, 2, false).is_err());
        assert!(Lexer::tokenize("{1,2}", 0, 5, false).is_err());
        assert!(Lexer::tokenize("Total", 0, 5, false).is_err());
        assert!(Lexer::tokenize("\"abc", 0, 4, false).is_err());
        assert!(Lexer::tokenize("'abc!A1", 0, 7, false).is_err());
        assert!(Lexer::tokenize("R1C1", 0, 4, false).is_err());
    }
}
