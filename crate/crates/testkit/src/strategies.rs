use proptest::collection::{btree_set, vec};
use proptest::prelude::*;

use xlsearch_core::address::{CellAddr, Region};
use xlsearch_core::formula::{expand_shared_formula, unparse, BinaryOp, ErrorLit, FormulaAst, UnaryOp};
use xlsearch_core::grid::{Cell, Sheet, ValueType, Workbook};
use xlsearch_core::term::{SymbolId, Term};

const SHEETS: [&str; 4] = ["Data", "Sheet2", "My Sheet", "O'Brien"];
const FUNCTIONS: [&str; 8] = ["SUM", "AVERAGE", "IF", "COUNTIF", "PI", "ROUND", "STDEV.S", "VLOOKUP"];

pub fn number_lexeme() -> impl Strategy<Value = String> {
    prop_oneof![
        (0u32..10_000).prop_map(|n| n.to_string()),
        (0u32..1000, 1u32..1000).prop_map(|(i, f)| {
            let frac = f.to_string();
            format!("{i}.{}", frac.trim_end_matches('0'))
        }),
        (1u32..10, 1u32..30).prop_map(|(m, e)| format!("{m}e{e}")),
    ]
}

pub fn cell_addr(max_col: u32, max_row: u32) -> impl Strategy<Value = CellAddr> {
    (1..=max_col, 1..=max_row, any::<bool>(), any::<bool>())
        .prop_map(|(c, r, ca, ra)| CellAddr::new(c, r).with_abs(ca, ra))
}

fn reference() -> impl Strategy<Value = FormulaAst> {
    let sheet = prop_oneof![3 => Just(None), 1 => proptest::sample::select(&SHEETS[..]).prop_map(Some)];
    (sheet, cell_addr(200, 2000), cell_addr(200, 2000), any::<bool>()).prop_map(|(sheet, a, b, range)| {
        let (a, b) = match sheet {
            Some(s) => (a.with_sheet(s), b.with_sheet(s)),
            None => (a, b),
        };
        if range {
            FormulaAst::RangeRef(a, b)
        } else {
            FormulaAst::CellRef(a)
        }
    })
}

fn leaf() -> impl Strategy<Value = FormulaAst> {
    prop_oneof![
        3 => number_lexeme().prop_map(FormulaAst::Number),
        1 => "[a-zA-Z0-9 \"<&]{0,6}".prop_map(FormulaAst::Text),
        1 => any::<bool>().prop_map(FormulaAst::Boolean),
        1 => proptest::sample::select(&ErrorLit::ALL[..]).prop_map(FormulaAst::Error),
        4 => reference(),
    ]
}

/// Random formula syntax trees in the shape the parser produces (no query
/// variables).
pub fn formula_ast() -> impl Strategy<Value = FormulaAst> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        prop_oneof![
            3 => (proptest::sample::select(&BinaryOp::ALL[..]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| FormulaAst::binary(op, a, b)),
            1 => (prop_oneof![Just(UnaryOp::Neg), Just(UnaryOp::Plus)], inner.clone())
                .prop_map(|(op, a)| FormulaAst::unary(op, a)),
            1 => inner.clone().prop_map(|a| FormulaAst::Percent(Box::new(a))),
            2 => (proptest::sample::select(&FUNCTIONS[..]), vec(inner, 0..4))
                .prop_map(|(f, args)| FormulaAst::call(f, args)),
        ]
    })
}

pub fn formula_text() -> impl Strategy<Value = String> {
    formula_ast().prop_map(|a| unparse(&a))
}

/// Re-anchors every relative reference of `formula` by `(dr, dc)`. Formulas
/// that do not parse are returned unchanged.
pub fn shift_formula(formula: &str, dr: u32, dc: u32) -> Option<String> {
    let origin = CellAddr::new(1, 1);
    let target = CellAddr::new(1 + dc, 1 + dr);
    match expand_shared_formula(formula, &origin, &target) {
        Ok(f) => Some(f),
        Err(xlsearch_core::error::ShiftError::Parse(_)) => Some(formula.to_string()),
        Err(_) => None,
    }
}

/// A small term vocabulary: `(symbol, arity)` pairs, at most twelve.
pub fn vocabulary() -> Vec<(SymbolId, usize)> {
    let s = |n: &str| SymbolId::new("t", n);
    vec![
        (s("f"), 2),
        (s("g"), 2),
        (s("h"), 1),
        (s("k"), 3),
        (s("m"), 1),
        (s("a"), 0),
        (s("b"), 0),
        (s("c"), 0),
    ]
}

fn term_leaf(vars: BoxedStrategy<Term>) -> BoxedStrategy<Term> {
    let syms: Vec<SymbolId> = vocabulary()
        .into_iter()
        .filter(|(_, n)| *n == 0)
        .map(|(s, _)| s)
        .collect();
    prop_oneof![
        2 => proptest::sample::select(syms).prop_map(Term::Sym),
        1 => proptest::sample::select(vec!["1", "2"]).prop_map(Term::num),
        1 => Just(Term::Str("s".into())),
        3 => vars,
    ]
    .boxed()
}

fn term_with(vars: BoxedStrategy<Term>) -> BoxedStrategy<Term> {
    let heads: Vec<(SymbolId, usize)> = vocabulary().into_iter().filter(|(_, n)| *n > 0).collect();
    term_leaf(vars)
        .prop_recursive(5, 64, 3, move |inner| {
            let heads = heads.clone();
            proptest::sample::select(heads).prop_flat_map(move |(head, n)| {
                vec(inner.clone(), n).prop_map(move |args| Term::apply(head.clone(), args))
            })
        })
        .boxed()
}

/// Stored-side terms: index variables X0..X3, depth at most 6.
pub fn index_term() -> BoxedStrategy<Term> {
    term_with((0u32..4).prop_map(Term::IndexVar).boxed())
}

/// Query-side terms: query variables ?x, ?y, ?z, depth at most 6.
pub fn query_term() -> BoxedStrategy<Term> {
    term_with(
        proptest::sample::select(vec!["x", "y", "z"])
            .prop_map(Term::qvar)
            .boxed(),
    )
}

/// Terms mixing both variable kinds.
pub fn mixed_term() -> BoxedStrategy<Term> {
    term_with(
        prop_oneof![
            (0u32..3).prop_map(Term::IndexVar),
            proptest::sample::select(vec!["x", "y"]).prop_map(Term::qvar),
        ]
        .boxed(),
    )
}

/// Replaces each subterm with a fresh query variable with probability
/// `1/every`, numbered by a counter. Deterministic in `picks`.
pub fn generalize(term: &Term, picks: &[bool]) -> Term {
    fn walk(t: &Term, picks: &[bool], pos: &mut usize, vars: &mut u32) -> Term {
        let pick = picks.get(*pos).copied().unwrap_or(false);
        *pos += 1;
        if pick {
            *vars += 1;
            return Term::qvar(format!("g{}", *vars % 3));
        }
        match t {
            Term::Apply { head, args } => {
                Term::apply(head.clone(), args.iter().map(|a| walk(a, picks, pos, vars)).collect())
            }
            Term::IndexVar(i) => Term::qvar(format!("i{i}")),
            other => other.clone(),
        }
    }
    walk(term, picks, &mut 0, &mut 0)
}

/// An index of up to `max_terms` stored terms and a query that is either
/// random or a generalization of one stored term.
pub fn index_and_query(max_terms: usize) -> impl Strategy<Value = (Vec<Term>, Term)> {
    vec(index_term(), 0..=max_terms).prop_flat_map(|terms| {
        let n = terms.len();
        let derived = (0..n.max(1), vec(prop::bool::weighted(0.2), 64)).prop_map({
            let terms = terms.clone();
            move |(i, picks)| match terms.get(i) {
                Some(t) => generalize(t, &picks),
                None => Term::qvar("x"),
            }
        });
        let query = prop_oneof![1 => query_term(), 2 => derived];
        (Just(terms), query)
    })
}

fn a1(row: u32, col: u32) -> String {
    CellAddr::new(col.max(1), row.max(1)).local_a1()
}

/// Formula text for pattern `p` placed at `(row, col)`. Patterns that only
/// use relative references yield cp-similar formulas for neighbouring cells.
fn pattern_formula(p: u8, row: u32, col: u32) -> String {
    match p {
        0 => format!("{}+1", a1(row, col + 1)),
        1 => format!("SUM({}:{})", a1(row + 1, col), a1(row + 3, col)),
        2 => "$A$1*2".to_string(),
        3 => format!("{}*{}", a1(row, col + 1), a1(row, col + 1)),
        4 => format!("{}*{}", a1(row, col + 1), a1(row + 1, col + 1)),
        _ => "SUM(".to_string(),
    }
}

#[derive(Clone, Debug)]
enum Content {
    Empty,
    Text(String),
    Number(u32),
    Formula(u8),
}

fn content() -> impl Strategy<Value = Content> {
    prop_oneof![
        4 => Just(Content::Empty),
        2 => proptest::sample::select(vec!["Total", "Year", "Salaries", "Net income", "Q1", "x1"])
            .prop_map(|s| Content::Text(s.to_string())),
        2 => (1980u32..2000).prop_map(Content::Number),
        5 => prop_oneof![5 => 0u8..5, 1 => Just(5u8)].prop_map(Content::Formula),
    ]
}

/// Random sheet of at most `rows x cols` cells with text, number and
/// formula cells and a few merges.
pub fn sheet(rows: u32, cols: u32) -> impl Strategy<Value = Sheet> {
    let cells = vec(content(), (rows * cols) as usize);
    let merges = vec((1..=rows, 1..=cols, 0u32..3, 0u32..3), 0..3);
    (cells, merges).prop_map(move |(cells, merges)| {
        let mut sheet = Sheet::new("S");
        for (i, m) in merges.into_iter().enumerate() {
            let _ = i;
            let (r, c, h, w) = m;
            let region = Region::new(r, c, (r + h).min(rows), (c + w).min(cols));
            if region.cell_count() > 1 && !sheet.merged.iter().any(|x| x.intersects(&region)) {
                sheet.merged.push(region);
            }
        }
        for (i, content) in cells.into_iter().enumerate() {
            let row = i as u32 / cols + 1;
            let col = i as u32 % cols + 1;
            if sheet.merge_at(row, col).is_some_and(|m| (m.r1, m.c1) != (row, col)) {
                continue;
            }
            let (formula, value, value_type) = match content {
                Content::Empty => continue,
                Content::Text(s) => (None, s, ValueType::Text),
                Content::Number(n) => (None, n.to_string(), ValueType::Number),
                Content::Formula(p) => (Some(pattern_formula(p, row, col)), "0".to_string(), ValueType::Number),
            };
            sheet
                .insert(Cell {
                    addr: CellAddr::new(col, row),
                    formula,
                    value,
                    value_type,
                })
                .expect("unique cells");
        }
        sheet
    })
}

/// Moves all content of `sheet` by `(dr, dc)`, re-anchoring formulas.
pub fn translate_sheet(sheet: &Sheet, dr: u32, dc: u32) -> Sheet {
    let mut out = Sheet::new(sheet.name.clone());
    out.merged = sheet
        .merged
        .iter()
        .map(|m| Region::new(m.r1 + dr, m.c1 + dc, m.r2 + dr, m.c2 + dc))
        .collect();
    for cell in sheet.cells.values() {
        let mut c = cell.clone();
        c.addr = CellAddr::new(cell.addr.col + dc, cell.addr.row + dr);
        c.formula = cell
            .formula
            .as_ref()
            .map(|f| shift_formula(f, dr, dc).expect("shift stays on the sheet"));
        out.insert(c).expect("unique cells");
    }
    out
}

fn grid_cell() -> impl Strategy<Value = (Option<String>, String, ValueType)> {
    prop_oneof![
        "[a-zA-Z é\"\\\\<]{1,8}".prop_map(|s| (None, s, ValueType::Text)),
        number_lexeme().prop_map(|n| (None, n, ValueType::Number)),
        prop_oneof![Just("TRUE"), Just("FALSE")].prop_map(|b| (None, b.to_string(), ValueType::Boolean)),
        Just((None, "#N/A".to_string(), ValueType::Error)),
        (formula_text(), prop_oneof![Just(String::new()), number_lexeme()]).prop_map(|(f, v)| (
            Some(f),
            v,
            ValueType::Number
        )),
        formula_text().prop_map(|f| (Some(f), "txt".to_string(), ValueType::Text)),
    ]
}

/// Random valid workbooks for interchange round trips.
pub fn workbook() -> impl Strategy<Value = Workbook> {
    let sheet = (
        vec(((1u32..30, 1u32..30), grid_cell()), 0..12),
        vec((1u32..30, 1u32..30, 0u32..3, 0u32..3), 0..3),
    );
    (
        "[a-z/._]{0,12}",
        btree_set("[A-Za-z][A-Za-z0-9 ]{0,6}", 1..4),
        vec(sheet, 4),
    )
        .prop_map(|(uri, names, sheets)| {
            let mut wb = Workbook {
                uri,
                sheets: Vec::new(),
            };
            for (name, (cells, merges)) in names.into_iter().zip(sheets) {
                let mut s = Sheet::new(name);
                for (r, c, h, w) in merges {
                    let region = Region::new(r, c, r + h, c + w);
                    if region.cell_count() > 1 && !s.merged.iter().any(|m| m.intersects(&region)) {
                        s.merged.push(region);
                    }
                }
                for ((r, c), (formula, value, value_type)) in cells {
                    let covered = s.merge_at(r, c).is_some_and(|m| (m.r1, m.c1) != (r, c));
                    if covered || s.cell(r, c).is_some() {
                        continue;
                    }
                    s.insert(Cell {
                        addr: CellAddr::new(c, r),
                        formula,
                        value,
                        value_type,
                    })
                    .unwrap();
                }
                wb.sheets.push(s);
            }
            wb
        })
}
