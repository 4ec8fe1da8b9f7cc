//! Property bodies shared by the property suites and the acceptance run.
//! Each returns a proptest failure instead of panicking so it can be used
//! both inside `proptest!` and with a hand-configured `TestRunner`.

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use xlsearch_core::address::CellAddr;
use xlsearch_core::formula::{parse_formula, unparse, FormulaAst};
use xlsearch_core::grid::{load_grid_json, to_grid_json, Sheet, Workbook};
use xlsearch_core::index::{IndexHit, SubstitutionIndex};
use xlsearch_core::structure::detect_functional_blocks;
use xlsearch_core::term::{formula_to_term, SymbolTable, Term};

use crate::strategies::shift_formula;

pub fn parser_round_trip(ast: &FormulaAst) -> Result<(), TestCaseError> {
    let text = unparse(ast);
    let back = parse_formula(&text, false).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
    prop_assert_eq!(&back, ast, "text {}", text);
    Ok(())
}

pub fn translation_invariance(f: &str, dr: u32, dc: u32) -> Result<(), TestCaseError> {
    let table = SymbolTable::default();
    let shifted = shift_formula(f, dr, dc).ok_or_else(|| TestCaseError::fail(format!("cannot shift {f}")))?;
    let a = formula_to_term(f, &table, true).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = formula_to_term(&shifted, &table, true).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(a, b, "{} vs {}", f, shifted);
    Ok(())
}

/// Detected blocks are disjoint, hold only formula cells with the block's
/// term, and every formula cell is either covered or diagnosed.
pub fn fb_disjoint_cover(s: &Sheet) -> Result<(), TestCaseError> {
    let table = SymbolTable::default();
    let (blocks, diags) = detect_functional_blocks(s, &table);
    let mut covered: HashMap<(u32, u32), usize> = HashMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for cell in b.region.cells() {
            prop_assert!(covered.insert(cell, i).is_none(), "overlap at {:?}", cell);
            let f = s.formula(cell.0, cell.1);
            prop_assert!(f.is_some(), "non-formula cell {:?} in block", cell);
            let t = formula_to_term(f.unwrap(), &table, true).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&t, &b.term);
        }
        prop_assert_eq!(Some(b.anchor_formula.as_str()), s.formula(b.region.r1, b.region.c1));
    }
    let diag_cells: BTreeSet<String> = diags.iter().filter_map(|d| d.cell.clone()).collect();
    for (&(r, c), cell) in &s.cells {
        if cell.has_formula() {
            let a1 = CellAddr::new(c, r).local_a1();
            prop_assert!(covered.contains_key(&(r, c)) ^ diag_cells.contains(&a1), "cell {}", a1);
        }
    }
    let (again, _) = detect_functional_blocks(s, &table);
    prop_assert_eq!(again, blocks);
    Ok(())
}

pub fn grid_json_round_trip(wb: &Workbook) -> Result<(), TestCaseError> {
    let text = to_grid_json(wb);
    let back = load_grid_json(text.as_bytes()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&back, wb);
    prop_assert_eq!(to_grid_json(&back), text);
    Ok(())
}

fn hit_keys<H: Clone + Ord>(hits: &[IndexHit<H>]) -> Vec<(u32, H)> {
    hits.iter().map(|h| (h.term_id, h.harvest.clone())).collect()
}

/// Index answers equal the unify-filter over all stored terms, and every
/// returned substitution unifies query and stored term.
pub fn index_matches_brute_force(terms: &[Term], q: &Term) -> Result<(), TestCaseError> {
    let mut idx = SubstitutionIndex::new();
    for (i, t) in terms.iter().enumerate() {
        idx.insert(t, i as u32)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    let hits = idx.query(q);
    prop_assert_eq!(hit_keys(&hits), hit_keys(&idx.query_brute_force(q)));
    for h in &hits {
        let t = idx.term(h.term_id).unwrap();
        prop_assert_eq!(h.substitution.apply(q), h.substitution.apply(t));
    }
    let expected: usize = terms.iter().collect::<BTreeSet<_>>().iter().map(|t| t.size()).sum();
    prop_assert_eq!(idx.stats().token_count, expected);
    Ok(())
}
