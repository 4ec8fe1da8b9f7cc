//! Spreadsheet formula syntax: tokenizer, precedence parser and unparser.
//!
//! The grammar is the Excel fragment used for harvesting plus the `?name`
//! query-variable extension. Precedence from loosest to tightest is
//! comparisons, `&`, `+ -`, `* /`, `^`, unary `- +`, postfix `%`. All binary
//! operators associate left except `^`.

mod ast;
mod lexer;
mod parser;

pub use ast::{BinaryOp, ErrorLit, FormulaAst, UnaryOp};
pub use lexer::canonical_number;
pub use parser::parse_formula;

use crate::address::{CellAddr, MAX_COL, MAX_ROW};
use crate::error::{RefError, ShiftError};

use ast::UNARY_PRECEDENCE;
use lexer::{Lexer, TokKind};

/// Decodes an A1 reference (optionally sheet-qualified) into coordinates.
pub fn ref_to_coords(text: &str) -> Result<CellAddr, RefError> {
    CellAddr::parse(text)
}

/// Renders an AST with the minimum parentheses needed to re-parse to the
/// same tree. Arguments are separated by `,`.
pub fn unparse(ast: &FormulaAst) -> String {
    let mut out = String::new();
    write_ast(ast, &mut out);
    out
}

fn write_child(child: &FormulaAst, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_ast(child, out);
        out.push(')');
    } else {
        write_ast(child, out);
    }
}

fn write_ast(ast: &FormulaAst, out: &mut String) {
    match ast {
        FormulaAst::Number(n) => out.push_str(n),
        FormulaAst::Text(s) => {
            out.push('"');
            out.push_str(&s.replace('"', "\"\""));
            out.push('"');
        }
        FormulaAst::Boolean(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        FormulaAst::Error(e) => out.push_str(e.text()),
        FormulaAst::CellRef(a) => out.push_str(&a.to_string()),
        FormulaAst::RangeRef(a, b) => {
            out.push_str(&a.to_string());
            out.push(':');
            if a.sheet == b.sheet {
                out.push_str(&b.local_a1());
            } else {
                out.push_str(&b.to_string());
            }
        }
        FormulaAst::FuncCall { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_ast(arg, out);
            }
            out.push(')');
        }
        FormulaAst::BinOp { op, lhs, rhs } => {
            let prec = op.precedence();
            let (left_parens, right_parens) = if op.is_right_assoc() {
                (lhs.precedence() <= prec, rhs.precedence() < prec)
            } else {
                (lhs.precedence() < prec, rhs.precedence() <= prec)
            };
            write_child(lhs, left_parens, out);
            out.push_str(op.symbol());
            write_child(rhs, right_parens, out);
        }
        FormulaAst::UnaryOp { op, operand } => {
            out.push_str(op.symbol());
            write_child(operand, operand.precedence() < UNARY_PRECEDENCE, out);
        }
        FormulaAst::Percent(child) => {
            write_child(child, child.precedence() < ast.precedence(), out);
            out.push('%');
        }
        FormulaAst::QueryVar(name) => {
            out.push('?');
            out.push_str(name);
        }
    }
}

fn shift_component(value: u32, delta: i64, max: u32) -> Option<u32> {
    let shifted = i64::from(value) + delta;
    (1..=i64::from(max)).contains(&shifted).then_some(shifted as u32)
}

/// Re-anchors a shared formula from its master cell to `target`: relative
/// row/column components move by the offset between the two cells, absolute
/// components stay put. Every other byte of the text is preserved.
pub fn expand_shared_formula(master_text: &str, master: &CellAddr, target: &CellAddr) -> Result<String, ShiftError> {
    parse_formula(master_text, false)?;
    let (start, end) = parser::formula_body(master_text);
    let tokens = Lexer::tokenize(master_text, start, end, false)?;
    let d_row = i64::from(target.row) - i64::from(master.row);
    let d_col = i64::from(target.col) - i64::from(master.col);
    let mut out = String::with_capacity(master_text.len());
    let mut copied = 0;
    for tok in tokens {
        let TokKind::Ref { addr, local } = tok.kind else {
            continue;
        };
        let mut moved = addr.clone();
        if !addr.col_abs {
            moved.col = shift_component(addr.col, d_col, MAX_COL)
                .ok_or_else(|| ShiftError::OffSheet(master_text[tok.span.clone()].to_string()))?;
        }
        if !addr.row_abs {
            moved.row = shift_component(addr.row, d_row, MAX_ROW)
                .ok_or_else(|| ShiftError::OffSheet(master_text[tok.span.clone()].to_string()))?;
        }
        out.push_str(&master_text[copied..local.start]);
        out.push_str(&moved.local_a1());
        copied = local.end;
    }
    out.push_str(&master_text[copied..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> CellAddr {
        CellAddr::parse(s).unwrap()
    }

    #[test]
    fn unparse_minimal_parens() {
        use BinaryOp::*;
        let two = FormulaAst::num("2");
        let three = FormulaAst::num("3");
        let four = FormulaAst::num("4");
        let e = FormulaAst::binary(Add, two.clone(), FormulaAst::binary(Mul, three.clone(), four.clone()));
        assert_eq!(unparse(&e), "2+3*4");
        let e = FormulaAst::binary(Mul, FormulaAst::binary(Add, two, three), four);
        assert_eq!(unparse(&e), "(2+3)*4");
    }

    #[test]
    fn unparse_round_trips_linear_extrapolation() {
        let src = "C7+(E$3-C$3)/(D$3-C$3)*(D7-C7)";
        let ast = parse_formula(src, false).unwrap();
        assert_eq!(unparse(&ast), src);
        let q = "?fa+(?x-?a)/(?b-?a)*(?fb-?fa)";
        assert_eq!(unparse(&parse_formula(q, true).unwrap()), q);
    }

    #[test]
    fn unparse_edge_cases() {
        for src in [
            "-(2^2)",
            "(-2)^2",
            "-2^2",
            "2^-2",
            "(1+2)%",
            "-A1%",
            "(-A1)%",
            "2^(3^4)",
            "(2^3)^4",
            "1-(2-3)",
            "'My Sheet'!A1:B2",
            "SUM(Data!A1:B2,\"x\"\"y\",TRUE,#N/A)",
        ] {
            let ast = parse_formula(src, false).unwrap();
            let text = unparse(&ast);
            assert_eq!(parse_formula(&text, false).unwrap(), ast, "{src} -> {text}");
        }
        assert_eq!(unparse(&parse_formula("2^(3^4)", false).unwrap()), "2^3^4");
        assert_eq!(unparse(&parse_formula("(2^3)^4", false).unwrap()), "(2^3)^4");
        assert_eq!(
            unparse(&parse_formula("COUNTIF(A1:A2; 1)", false).unwrap()),
            "COUNTIF(A1:A2,1)"
        );
    }

    #[test]
    fn ref_to_coords_examples() {
        assert_eq!(ref_to_coords("A5").unwrap(), CellAddr::new(1, 5));
        assert_eq!(ref_to_coords("$B$3").unwrap(), CellAddr::new(2, 3).with_abs(true, true));
        assert_eq!(ref_to_coords("AA10").unwrap(), CellAddr::new(27, 10));
        assert!(ref_to_coords("A0").is_err());
    }

    #[test]
    fn shared_formula_expansion() {
        assert_eq!(expand_shared_formula("C2*2", &a("D2"), &a("D3")).unwrap(), "C3*2");
        assert_eq!(expand_shared_formula("$A$2*2", &a("D2"), &a("F9")).unwrap(), "$A$2*2");
        assert_eq!(expand_shared_formula("A$1+B2", &a("C3"), &a("D4")).unwrap(), "B$1+C3");
        assert_eq!(
            expand_shared_formula("SUM( Data!B4:B13 ) & \"B4\"", &a("B14"), &a("C14")).unwrap(),
            "SUM( Data!C4:C13 ) & \"B4\""
        );
        assert!(matches!(
            expand_shared_formula("A2", &a("B2"), &a("A1")),
            Err(ShiftError::OffSheet(_))
        ));
        assert!(matches!(
            expand_shared_formula("SUM(", &a("B2"), &a("A1")),
            Err(ShiftError::Parse(_))
        ));
    }
}
