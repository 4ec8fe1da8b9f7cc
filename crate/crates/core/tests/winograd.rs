use std::path::PathBuf;

use xlsearch_core::address::Region;
use xlsearch_core::grid::load_grid_json;
use xlsearch_core::harvest::harvest_workbook;
use xlsearch_core::structure::{classify_cells, detect_functional_blocks, detect_legends, CellClass};
use xlsearch_core::term::{formula_to_term, SymbolTable};

fn fixture() -> xlsearch_core::grid::Workbook {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/winograd.grid.json");
    load_grid_json(&std::fs::read(path).unwrap()).unwrap()
}

fn r(s: &str) -> Region {
    Region::parse(s).unwrap()
}

#[test]
fn merges_loaded() {
    let wb = fixture();
    assert_eq!(wb.sheets[0].merged, vec![r("B1:F1"), r("B2:D2"), r("E2:F2")]);
}

#[test]
fn classes_after_propagation() {
    let wb = fixture();
    let g = classify_cells(&wb.sheets[0]);
    for (row, col) in r("C1:F1").cells().chain([(2, 3), (2, 4), (2, 6)]) {
        assert_eq!(g.get(row, col), CellClass::Legend, "covered ({row},{col})");
    }
    for (row, col) in r("B7:D11").cells().chain(r("B4:D4").cells()) {
        assert_eq!(g.get(row, col), CellClass::Fb, "input ({row},{col})");
    }
    for (row, col) in r("B3:F3").cells() {
        assert_eq!(g.get(row, col), CellClass::Legend, "year ({row},{col})");
    }
}

#[test]
fn blocks_and_legends() {
    let wb = fixture();
    let sheet = &wb.sheets[0];
    let (blocks, diags) = detect_functional_blocks(sheet, &SymbolTable::default());
    assert!(diags.is_empty());
    let mut regions: Vec<_> = blocks.iter().map(|b| b.region.to_string()).collect();
    regions.sort();
    assert_eq!(regions, ["B13:F13", "B15:F15", "E4:F4", "E7:F11"]);
    let grid = classify_cells(sheet);
    let l = detect_legends(&grid, &r("E7:F11"));
    assert_eq!(l.top, Some(r("E1:F3")));
    assert_eq!(l.left, Some(r("A7:A11")));
}

#[test]
fn extrapolation_harvest() {
    let table = SymbolTable::default();
    let (harvests, diags) = harvest_workbook(&fixture(), &table);
    assert!(diags.is_empty());
    assert_eq!(harvests.len(), 4);
    let h = harvests.iter().find(|h| h.region == r("E7:F11")).unwrap();
    assert_eq!(h.id, "corpus/winograd.xlsx#Sheet1!E7:F11");
    assert_eq!(h.raw_formula, "C7+(E$3-C$3)/(D$3-C$3)*(D7-C7)");
    assert_eq!(h.term, formula_to_term(&h.raw_formula, &table, true).unwrap());
    assert_eq!(
        h.keywords,
        [
            "Year",
            "Projected",
            "1987",
            "1988",
            "Salaries",
            "Utilities",
            "Materials",
            "Administration",
            "Other"
        ]
    );
    assert!(h.snippet.starts_with(r#"<table xmlns="http://www.w3.org/1999/xhtml"><tr><th></th><th>A</th><th>E</th><th>F</th></tr><tr><th>1</th><td></td><td>Year</td><td></td></tr>"#), "{}", h.snippet);
    let rows: Vec<&str> = h
        .snippet
        .match_indices("<tr><th>")
        .map(|(i, _)| &h.snippet[i + 8..i + 10])
        .collect();
    assert_eq!(rows, ["</", "1<", "2<", "3<", "7<", "8<", "9<", "10", "11"]);
    let order: Vec<_> = harvests.iter().map(|h| h.region.to_string()).collect();
    assert_eq!(order, ["E4:F4", "E7:F11", "B13:F13", "B15:F15"]);
}
