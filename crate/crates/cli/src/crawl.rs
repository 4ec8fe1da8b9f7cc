//! Corpus crawling: workbooks in, harvest batch and report out.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use xlsearch_core::grid::{load_grid_json, Workbook};
use xlsearch_core::harvest::{harvest_workbook, HarvestBatch, HarvestRecord};
use xlsearch_core::term::SymbolTable;
use xlsearch_core::xlsx::load_xlsx;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrawlDiagnostic {
    pub uri: String,
    pub sheet: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_ref: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrawlReport {
    pub files_seen: usize,
    pub files_parsed: usize,
    pub harvests_emitted: usize,
    pub diagnostics: Vec<CrawlDiagnostic>,
}

pub fn is_workbook_path(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let lower = name.to_ascii_lowercase();
    lower.ends_with(".xlsx") || lower.ends_with(".grid.json")
}

/// Expands directories (recursively, keeping only workbook files) and list
/// files into one sorted, de-duplicated path list. Plain file arguments are
/// kept whatever their extension so that unreadable inputs get reported.
pub fn collect_inputs(paths: &[PathBuf], list: Option<&Path>) -> std::io::Result<Vec<PathBuf>> {
    let mut roots: Vec<PathBuf> = paths.to_vec();
    if let Some(list) = list {
        let text = std::fs::read_to_string(list)?;
        roots.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(PathBuf::from),
        );
    }
    let mut out = Vec::new();
    for root in roots {
        if root.is_dir() {
            for entry in WalkDir::new(&root).follow_links(true) {
                let entry = entry.map_err(std::io::Error::other)?;
                if entry.file_type().is_file() && is_workbook_path(entry.path()) {
                    out.push(entry.into_path());
                }
            }
        } else {
            out.push(root);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Reads one workbook. Grid JSON files keep their own `uri` when it is
/// set; everything else is identified by its path.
pub fn load_workbook(path: &Path) -> Result<Workbook, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read file: {e}"))?;
    let path_uri = path.to_string_lossy().into_owned();
    let name = path.to_string_lossy().to_ascii_lowercase();
    if name.ends_with(".grid.json") {
        let mut wb = load_grid_json(&bytes).map_err(|e| e.to_string())?;
        if wb.uri.is_empty() {
            wb.uri = path_uri;
        }
        Ok(wb)
    } else if name.ends_with(".xlsx") {
        load_xlsx(&bytes, &path_uri).map_err(|e| e.to_string())
    } else {
        Err("unsupported file type (expected .xlsx or .grid.json)".into())
    }
}

/// Harvests every file. Files are processed in parallel and merged in
/// input order, so the output depends only on the path list.
pub fn crawl(files: &[PathBuf], table: &SymbolTable) -> (HarvestBatch, CrawlReport) {
    let results: Vec<_> = files
        .par_iter()
        .map(|path| {
            load_workbook(path).map(|wb| {
                let (harvests, diags) = harvest_workbook(&wb, table);
                (wb.uri, harvests, diags)
            })
        })
        .collect();
    let mut report = CrawlReport {
        files_seen: files.len(),
        ..Default::default()
    };
    let mut batch = HarvestBatch::default();
    let mut ids = std::collections::HashSet::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Err(message) => report.diagnostics.push(CrawlDiagnostic {
                uri: path.to_string_lossy().into_owned(),
                sheet: String::new(),
                cell_ref: None,
                message,
            }),
            Ok((uri, harvests, diags)) => {
                report.files_parsed += 1;
                report.diagnostics.extend(diags.into_iter().map(|d| CrawlDiagnostic {
                    uri: uri.clone(),
                    sheet: d.sheet,
                    cell_ref: d.cell,
                    message: d.message,
                }));
                for h in &harvests {
                    if !ids.insert(h.id.clone()) {
                        report.diagnostics.push(CrawlDiagnostic {
                            uri: uri.clone(),
                            sheet: h.sheet.clone(),
                            cell_ref: Some(h.region.to_string()),
                            message: format!("duplicate harvest id `{}` skipped", h.id),
                        });
                        continue;
                    }
                    batch.harvests.push(HarvestRecord::from(h));
                }
            }
        }
    }
    report.harvests_emitted = batch.harvests.len();
    (batch, report)
}
