//! Harvest records: one per computed functional block.

use std::collections::{BTreeSet, HashMap};

use quick_xml::escape::escape;
use serde::{Deserialize, Serialize};

use crate::address::{col_to_letters, Region};
use crate::grid::{Sheet, Workbook};
use crate::structure::{
    classify_cells, detect_functional_blocks, detect_legends, Diagnostic, FunctionalBlock, LegendRegions,
};
use crate::term::{term_to_mathml, SymbolTable, Term};

pub const XHTML_NS: &str = "http://www.w3.org/1999/xhtml";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Harvest {
    pub id: String,
    pub uri: String,
    pub sheet: String,
    pub region: Region,
    pub term: Term,
    pub mathml: String,
    pub raw_formula: String,
    pub keywords: Vec<String>,
    pub snippet: String,
}

/// Wire form of a harvest inside a batch file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HarvestRecord {
    pub id: String,
    pub uri: String,
    pub sheet: String,
    pub region: String,
    pub mathml: String,
    pub raw_formula: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub snippet: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestBatch {
    pub harvests: Vec<HarvestRecord>,
}

impl From<&Harvest> for HarvestRecord {
    fn from(h: &Harvest) -> Self {
        HarvestRecord {
            id: h.id.clone(),
            uri: h.uri.clone(),
            sheet: h.sheet.clone(),
            region: h.region.to_string(),
            mathml: h.mathml.clone(),
            raw_formula: h.raw_formula.clone(),
            keywords: h.keywords.clone(),
            snippet: h.snippet.clone(),
        }
    }
}

pub fn harvest_id(uri: &str, sheet: &str, region: &Region) -> String {
    format!("{uri}#{sheet}!{region}")
}

/// Serializes with sorted object keys, two-space indentation and a
/// trailing newline, so equal batches are byte-identical.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = serde_json::to_string_pretty(&v).expect("serializable");
    out.push('\n');
    out
}

pub fn batch_to_json(batch: &HarvestBatch) -> String {
    to_sorted_json(batch)
}

pub fn parse_batch_json(bytes: &[u8]) -> Result<HarvestBatch, serde_json::Error> {
    serde_json::from_slice(bytes)
}

/// Content at `(row, col)`, reading covered cells of a merge from its anchor.
fn merged_display(sheet: &Sheet, row: u32, col: u32) -> &str {
    match sheet.merge_at(row, col) {
        Some(m) => sheet.display(m.r1, m.c1),
        None => sheet.display(row, col),
    }
}

/// Legend texts: top region row-major, then left region column-major.
pub fn extract_keywords(sheet: &Sheet, legends: &LegendRegions) -> Vec<String> {
    let mut cells: Vec<(u32, u32)> = Vec::new();
    if let Some(top) = legends.top {
        cells.extend(top.cells());
    }
    if let Some(left) = legends.left {
        cells.extend(left.cols().flat_map(|c| left.rows().map(move |r| (r, c))));
    }
    let mut out: Vec<String> = Vec::new();
    for (r, c) in cells {
        let text = merged_display(sheet, r, c).trim();
        if !text.is_empty() && !out.iter().any(|k| k == text) {
            out.push(text.to_string());
        }
    }
    out
}

/// XHTML table of the block and its legends, reduced to the rows and
/// columns they occupy. Merges that stick out of a legend region have their
/// content moved to the top-left cell of the overlap; no merge markup is
/// emitted.
pub fn render_snippet(sheet: &Sheet, fb: &Region, legends: &LegendRegions) -> String {
    let regions: Vec<Region> = std::iter::once(*fb).chain(legends.regions()).collect();
    let mut moved: HashMap<(u32, u32), Option<&str>> = HashMap::new();
    for m in &sheet.merged {
        let Some(cut) = legends
            .regions()
            .filter(|l| !l.contains_region(m))
            .find_map(|l| l.intersection(m))
        else {
            continue;
        };
        moved.insert((m.r1, m.c1), None);
        moved.insert((cut.r1, cut.c1), Some(sheet.display(m.r1, m.c1)));
    }
    let rows: BTreeSet<u32> = regions.iter().flat_map(|r| r.rows()).collect();
    let cols: BTreeSet<u32> = regions.iter().flat_map(|r| r.cols()).collect();

    let mut out = format!(r#"<table xmlns="{XHTML_NS}"><tr><th></th>"#);
    for &c in &cols {
        out.push_str("<th>");
        out.push_str(&col_to_letters(c));
        out.push_str("</th>");
    }
    out.push_str("</tr>");
    for &r in &rows {
        out.push_str(&format!("<tr><th>{r}</th>"));
        for &c in &cols {
            let text = match moved.get(&(r, c)) {
                Some(v) => v.unwrap_or(""),
                None => sheet.display(r, c),
            };
            out.push_str("<td>");
            out.push_str(&escape(text));
            out.push_str("</td>");
        }
        out.push_str("</tr>");
    }
    out.push_str("</table>");
    out
}

fn block_harvest(uri: &str, sheet: &Sheet, fb: &FunctionalBlock, legends: &LegendRegions) -> Harvest {
    Harvest {
        id: harvest_id(uri, &sheet.name, &fb.region),
        uri: uri.to_string(),
        sheet: sheet.name.clone(),
        region: fb.region,
        term: fb.term.clone(),
        mathml: term_to_mathml(&fb.term),
        raw_formula: fb.anchor_formula.clone(),
        keywords: extract_keywords(sheet, legends),
        snippet: render_snippet(sheet, &fb.region, legends),
    }
}

/// One harvest per computed functional block, in sheet order and then
/// block scan order.
pub fn harvest_sheet(uri: &str, sheet: &Sheet, table: &SymbolTable) -> (Vec<Harvest>, Vec<Diagnostic>) {
    let grid = classify_cells(sheet);
    let (blocks, diagnostics) = detect_functional_blocks(sheet, table);
    let harvests = blocks
        .iter()
        .map(|fb| block_harvest(uri, sheet, fb, &detect_legends(&grid, &fb.region)))
        .collect();
    (harvests, diagnostics)
}

pub fn harvest_workbook(workbook: &Workbook, table: &SymbolTable) -> (Vec<Harvest>, Vec<Diagnostic>) {
    let mut harvests = Vec::new();
    let mut diagnostics = Vec::new();
    for sheet in &workbook.sheets {
        let (h, d) = harvest_sheet(&workbook.uri, sheet, table);
        harvests.extend(h);
        diagnostics.extend(d);
    }
    (harvests, diagnostics)
}
