//! Sheet structure inference: cell classes, functional blocks, legends.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::address::{CellAddr, Region};
use crate::error::ParseError;
use crate::grid::Sheet;
use crate::term::{formula_to_term, SymbolTable, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellClass {
    Fb,
    Legend,
    Number,
    Empty,
}

/// Class per cell. Only non-empty classes are stored; anything absent reads
/// as [`CellClass::Empty`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassGrid {
    classes: BTreeMap<(u32, u32), CellClass>,
}

impl ClassGrid {
    pub fn get(&self, row: u32, col: u32) -> CellClass {
        self.classes.get(&(row, col)).copied().unwrap_or(CellClass::Empty)
    }

    fn set(&mut self, row: u32, col: u32, class: CellClass) {
        if class == CellClass::Empty {
            self.classes.remove(&(row, col));
        } else {
            self.classes.insert((row, col), class);
        }
    }

    /// Non-empty cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), CellClass)> + '_ {
        self.classes.iter().map(|(k, v)| (*k, *v))
    }

    fn keys(&self) -> Vec<(u32, u32)> {
        self.classes.keys().copied().collect()
    }

    /// Turns every Number cell reachable from an FB cell through Number
    /// cells along `step` into FB.
    fn spread_fb(&mut self, step: impl Fn(u32, u32) -> [Option<(u32, u32)>; 2]) {
        let seeds: Vec<_> = self
            .iter()
            .filter(|(_, c)| *c == CellClass::Fb)
            .map(|(k, _)| k)
            .collect();
        for seed in seeds {
            for dir in 0..2 {
                let mut at = seed;
                while let Some(next) = step(at.0, at.1)[dir] {
                    if self.get(next.0, next.1) != CellClass::Number {
                        break;
                    }
                    self.set(next.0, next.1, CellClass::Fb);
                    at = next;
                }
            }
        }
    }
}

/// Share of unicode letters among the non-whitespace characters of `text`.
pub fn letter_ratio(text: &str) -> f64 {
    let mut letters = 0usize;
    let mut total = 0usize;
    for ch in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if ch.is_alphabetic() {
            letters += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        letters as f64 / total as f64
    }
}

pub const LEGEND_LETTER_RATIO: f64 = 0.75;

fn neighbours_h(row: u32, col: u32) -> [Option<(u32, u32)>; 2] {
    [
        col.checked_sub(1).filter(|&c| c > 0).map(|c| (row, c)),
        Some((row, col + 1)),
    ]
}

fn neighbours_v(row: u32, col: u32) -> [Option<(u32, u32)>; 2] {
    [
        row.checked_sub(1).filter(|&r| r > 0).map(|r| (r, col)),
        Some((row + 1, col)),
    ]
}

/// Applies rules R1 to R8 in order.
pub fn classify_cells(sheet: &Sheet) -> ClassGrid {
    let mut grid = ClassGrid::default();
    // R1-R3
    for (&(row, col), cell) in &sheet.cells {
        let class = if cell.has_formula() {
            CellClass::Fb
        } else if cell.is_empty() || cell.value.trim().is_empty() {
            CellClass::Empty
        } else if letter_ratio(&cell.value) >= LEGEND_LETTER_RATIO {
            CellClass::Legend
        } else {
            CellClass::Number
        };
        grid.set(row, col, class);
    }
    // R4
    for m in &sheet.merged {
        let anchor = grid.get(m.r1, m.c1);
        for (r, c) in m.cells().skip(1) {
            grid.set(r, c, anchor);
        }
    }
    // R5
    grid.spread_fb(neighbours_h);
    // R6: row-major order visits the upper neighbour first.
    for (r, c) in grid.keys() {
        if grid.get(r, c) == CellClass::Number && r > 1 && grid.get(r - 1, c) == CellClass::Legend {
            grid.set(r, c, CellClass::Legend);
        }
    }
    // R7
    grid.spread_fb(neighbours_v);
    // R8
    for (r, c) in grid.keys() {
        if grid.get(r, c) == CellClass::Number && c > 1 && grid.get(r, c - 1) == CellClass::Legend {
            grid.set(r, c, CellClass::Legend);
        }
    }
    grid
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionalBlock {
    pub sheet: String,
    pub region: Region,
    pub term: Term,
    pub anchor_formula: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LegendRegions {
    pub top: Option<Region>,
    pub left: Option<Region>,
}

impl LegendRegions {
    pub fn regions(&self) -> impl Iterator<Item = Region> {
        self.top.into_iter().chain(self.left)
    }
}

/// A cell that could not take part in detection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub sheet: String,
    pub cell: Option<String>,
    pub message: String,
}

/// Whether two formulas differ only in their cell references.
pub fn cp_similar(f1: &str, f2: &str, table: &SymbolTable) -> Result<bool, ParseError> {
    Ok(formula_to_term(f1, table, true)? == formula_to_term(f2, table, true)?)
}

/// Greedy right-then-down rectangulation of the sheet's formula cells into
/// blocks of equal variablized terms. Cells whose formulas do not parse are
/// left out and reported.
pub fn detect_functional_blocks(sheet: &Sheet, table: &SymbolTable) -> (Vec<FunctionalBlock>, Vec<Diagnostic>) {
    let mut terms: HashMap<(u32, u32), Term> = HashMap::new();
    let mut diagnostics = Vec::new();
    for (&(row, col), cell) in &sheet.cells {
        let Some(formula) = &cell.formula else { continue };
        match formula_to_term(formula, table, true) {
            Ok(t) => {
                terms.insert((row, col), t);
            }
            Err(e) => diagnostics.push(Diagnostic {
                sheet: sheet.name.clone(),
                cell: Some(CellAddr::new(col, row).local_a1()),
                message: format!("formula parse error at {}: {}", e.position, e.message),
            }),
        }
    }
    let mut visited: HashSet<(u32, u32)> = HashSet::new();
    let mut blocks = Vec::new();
    for (&(row, col), cell) in &sheet.cells {
        let Some(term) = terms.get(&(row, col)) else { continue };
        if visited.contains(&(row, col)) {
            continue;
        }
        let matches = |r: u32, c: u32| !visited.contains(&(r, c)) && terms.get(&(r, c)) == Some(term);
        let mut c2 = col;
        while matches(row, c2 + 1) {
            c2 += 1;
        }
        let mut r2 = row;
        while (col..=c2).all(|c| matches(r2 + 1, c)) {
            r2 += 1;
        }
        let region = Region::new(row, col, r2, c2);
        visited.extend(region.cells());
        blocks.push(FunctionalBlock {
            sheet: sheet.name.clone(),
            region,
            term: term.clone(),
            anchor_formula: cell.formula.clone().unwrap_or_default(),
        });
    }
    (blocks, diagnostics)
}

/// Scans lines (rows for the top legend, columns for the left one) outward
/// from `start` towards 1. `line(i)` yields the classes of line `i` within
/// the block's span. Returns the inclusive `(t, s)` bounds with `t <= s`.
fn scan_legend(start: u32, line: impl Fn(u32) -> Vec<CellClass>) -> Option<(u32, u32)> {
    let has = |cls: &[CellClass], k: CellClass| cls.contains(&k);
    let mut i = start;
    let s = loop {
        if i == 0 {
            return None;
        }
        let cls = line(i);
        if has(&cls, CellClass::Legend) && !has(&cls, CellClass::Fb) {
            break i;
        }
        i -= 1;
    };
    let mut t = s;
    while t > 1 {
        let cls = line(t - 1);
        let non_empty = cls.iter().any(|&c| c != CellClass::Empty);
        if !non_empty || has(&cls, CellClass::Fb) {
            break;
        }
        t -= 1;
    }
    Some((t, s))
}

pub fn detect_legends(grid: &ClassGrid, fb: &Region) -> LegendRegions {
    let top = scan_legend(fb.r1 - 1, |r| fb.cols().map(|c| grid.get(r, c)).collect())
        .map(|(t, s)| Region::new(t, fb.c1, s, fb.c2));
    let left = scan_legend(fb.c1 - 1, |c| fb.rows().map(|r| grid.get(r, c)).collect())
        .map(|(t, s)| Region::new(fb.r1, t, fb.r2, s));
    LegendRegions { top, left }
}
