//! In-memory workbook model and the grid JSON interchange format.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::address::{CellAddr, Region};
use crate::error::GridError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Number,
    Text,
    Boolean,
    Error,
    Empty,
}

impl ValueType {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueType::Number => "number",
            ValueType::Text => "text",
            ValueType::Boolean => "boolean",
            ValueType::Error => "error",
            ValueType::Empty => "empty",
        }
    }

    fn parse(s: &str) -> Result<ValueType, GridError> {
        Ok(match s {
            "number" => ValueType::Number,
            "text" => ValueType::Text,
            "boolean" => ValueType::Boolean,
            "error" => ValueType::Error,
            other => return Err(GridError::UnknownValueType(other.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub addr: CellAddr,
    /// Formula text without the leading `=`.
    pub formula: Option<String>,
    /// Cached display value as stored in the file.
    pub value: String,
    pub value_type: ValueType,
}

impl Cell {
    pub fn is_empty(&self) -> bool {
        self.value_type == ValueType::Empty
    }

    pub fn has_formula(&self) -> bool {
        self.formula.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sheet {
    pub name: String,
    /// Keyed by `(row, col)`.
    pub cells: BTreeMap<(u32, u32), Cell>,
    pub merged: Vec<Region>,
}

impl Sheet {
    pub fn new(name: impl Into<String>) -> Self {
        Sheet {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn cell(&self, row: u32, col: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    /// The cached display text at `(row, col)`; empty for absent cells.
    pub fn display(&self, row: u32, col: u32) -> &str {
        self.cell(row, col).map_or("", |c| c.value.as_str())
    }

    pub fn formula(&self, row: u32, col: u32) -> Option<&str> {
        self.cell(row, col).and_then(|c| c.formula.as_deref())
    }

    /// The merged region covering `(row, col)`, if any (anchor included).
    pub fn merge_at(&self, row: u32, col: u32) -> Option<&Region> {
        self.merged.iter().find(|m| m.contains(row, col))
    }

    /// Largest `(row, col)` touched by a cell or merge.
    pub fn extent(&self) -> (u32, u32) {
        let mut rows = 0;
        let mut cols = 0;
        for &(r, c) in self.cells.keys() {
            rows = rows.max(r);
            cols = cols.max(c);
        }
        for m in &self.merged {
            rows = rows.max(m.r2);
            cols = cols.max(m.c2);
        }
        (rows, cols)
    }

    /// Inserts a cell, rejecting duplicates.
    pub fn insert(&mut self, cell: Cell) -> Result<(), GridError> {
        let key = (cell.addr.row, cell.addr.col);
        if self.cells.contains_key(&key) {
            return Err(GridError::DuplicateCell {
                sheet: self.name.clone(),
                cell: cell.addr.local_a1(),
            });
        }
        self.cells.insert(key, cell);
        Ok(())
    }

    /// Checks merge disjointness and that covered cells carry no content.
    pub fn validate(&self) -> Result<(), GridError> {
        for (i, a) in self.merged.iter().enumerate() {
            for b in &self.merged[i + 1..] {
                if a.intersects(b) {
                    return Err(GridError::OverlappingMerge {
                        sheet: self.name.clone(),
                        a: a.to_string(),
                        b: b.to_string(),
                    });
                }
            }
        }
        for m in &self.merged {
            for (r, c) in m.cells().skip(1) {
                if let Some(cell) = self.cell(r, c) {
                    if !cell.is_empty() {
                        return Err(GridError::CoveredContent {
                            sheet: self.name.clone(),
                            cell: cell.addr.local_a1(),
                            merge: m.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workbook {
    pub uri: String,
    pub sheets: Vec<Sheet>,
}

impl Workbook {
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    pub(crate) fn validate(&self) -> Result<(), GridError> {
        let mut names = HashSet::new();
        for sheet in &self.sheets {
            if !names.insert(sheet.name.as_str()) {
                return Err(GridError::DuplicateSheet(sheet.name.clone()));
            }
            sheet.validate()?;
        }
        Ok(())
    }
}

/// True for plain decimal/scientific lexemes such as `12`, `-0.5`, `1e3`.
pub fn is_numeric_lexeme(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty()
        && s.bytes().any(|b| b.is_ascii_digit())
        && s.bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        && s.parse::<f64>().is_ok()
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    #[serde(default)]
    uri: String,
    #[serde(default)]
    sheets: Vec<GridSheet>,
}

#[derive(Serialize, Deserialize)]
struct GridSheet {
    name: String,
    #[serde(default)]
    cells: Vec<GridCell>,
    #[serde(default)]
    merged: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GridCell {
    #[serde(rename = "ref")]
    reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(rename = "valueType", default, skip_serializing_if = "Option::is_none")]
    value_type: Option<String>,
}

/// Loads a workbook from grid JSON. Unknown fields are ignored.
pub fn load_grid_json(bytes: &[u8]) -> Result<Workbook, GridError> {
    let doc: GridDoc = serde_json::from_slice(bytes)?;
    let mut workbook = Workbook {
        uri: doc.uri,
        sheets: Vec::with_capacity(doc.sheets.len()),
    };
    for gs in doc.sheets {
        let mut sheet = Sheet::new(gs.name);
        for m in &gs.merged {
            let region = Region::parse(m).map_err(|source| GridError::BadRef {
                sheet: sheet.name.clone(),
                source,
            })?;
            sheet.merged.push(region);
        }
        for gc in gs.cells {
            let addr = CellAddr::parse(&gc.reference).map_err(|source| GridError::BadRef {
                sheet: sheet.name.clone(),
                source,
            })?;
            if addr.sheet.is_some() || addr.col_abs || addr.row_abs {
                return Err(GridError::BadRef {
                    sheet: sheet.name.clone(),
                    source: crate::error::RefError::Malformed(gc.reference),
                });
            }
            let formula = gc.formula.map(|f| f.strip_prefix('=').map(str::to_string).unwrap_or(f));
            let value = gc.value.unwrap_or_default();
            let value_type = match gc.value_type.as_deref() {
                Some(t) => ValueType::parse(t)?,
                None if formula.is_some() => {
                    if value.is_empty() || is_numeric_lexeme(&value) {
                        ValueType::Number
                    } else {
                        ValueType::Text
                    }
                }
                None if value.is_empty() => ValueType::Empty,
                None if is_numeric_lexeme(&value) => ValueType::Number,
                None => ValueType::Text,
            };
            let value_type = if formula.is_none() && value.is_empty() {
                ValueType::Empty
            } else {
                value_type
            };
            sheet.insert(Cell {
                addr,
                formula,
                value,
                value_type,
            })?;
        }
        workbook.sheets.push(sheet);
    }
    workbook.validate()?;
    Ok(workbook)
}

/// Serializes a workbook as grid JSON (object keys sorted).
pub fn to_grid_json(workbook: &Workbook) -> String {
    let doc = GridDoc {
        uri: workbook.uri.clone(),
        sheets: workbook
            .sheets
            .iter()
            .map(|s| GridSheet {
                name: s.name.clone(),
                cells: s
                    .cells
                    .values()
                    .map(|c| GridCell {
                        reference: c.addr.local_a1(),
                        formula: c.formula.clone(),
                        value: (!c.value.is_empty()).then(|| c.value.clone()),
                        value_type: (c.value_type != ValueType::Empty).then(|| c.value_type.as_str().to_string()),
                    })
                    .collect(),
                merged: s.merged.iter().map(Region::to_string).collect(),
            })
            .collect(),
    };
    let value = serde_json::to_value(&doc).expect("grid doc serializes");
    serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_instance() {
        let wb = load_grid_json(
            br#"{"uri":"u","sheets":[{"name":"S","cells":[{"ref":"A1","value":"Year","valueType":"text"}],"merged":[]}]}"#,
        )
        .unwrap();
        assert_eq!(wb.uri, "u");
        let cell = wb.sheets[0].cell(1, 1).unwrap();
        assert_eq!(cell.value, "Year");
        assert_eq!(cell.value_type, ValueType::Text);
    }

    #[test]
    fn duplicate_ref_rejected() {
        let err = load_grid_json(br#"{"sheets":[{"name":"S","cells":[{"ref":"A1"},{"ref":"A1"}]}]}"#).unwrap_err();
        assert!(matches!(err, GridError::DuplicateCell { .. }), "{err}");
    }

    #[test]
    fn overlapping_merge_rejected() {
        let err = load_grid_json(br#"{"sheets":[{"name":"S","cells":[],"merged":["A1:B2","B2:C3"]}]}"#).unwrap_err();
        assert!(matches!(err, GridError::OverlappingMerge { .. }));
    }

    #[test]
    fn bad_ref_rejected() {
        for r in ["A0", "1A", "Sheet!A1", "$A1"] {
            let doc = format!(r#"{{"sheets":[{{"name":"S","cells":[{{"ref":"{r}"}}]}}]}}"#);
            assert!(load_grid_json(doc.as_bytes()).is_err(), "{r}");
        }
        assert!(matches!(load_grid_json(b"{"), Err(GridError::Json(_))));
    }

    #[test]
    fn covered_content_rejected() {
        let err = load_grid_json(br#"{"sheets":[{"name":"S","cells":[{"ref":"B1","value":"x"}],"merged":["A1:B1"]}]}"#)
            .unwrap_err();
        assert!(matches!(err, GridError::CoveredContent { .. }));
    }

    #[test]
    fn inference_and_formula_prefix() {
        let wb = load_grid_json(
            br#"{"sheets":[{"name":"S","cells":[
                {"ref":"A1","value":"12.5"},
                {"ref":"A2","value":"abc"},
                {"ref":"A3","formula":"=A1*2","value":"25"},
                {"ref":"A4"},
                {"ref":"A5","formula":"A2&\"x\"","value":"abcx","valueType":"text"}
            ],"extra":1}]}"#,
        )
        .unwrap();
        let s = &wb.sheets[0];
        assert_eq!(s.cell(1, 1).unwrap().value_type, ValueType::Number);
        assert_eq!(s.cell(2, 1).unwrap().value_type, ValueType::Text);
        assert_eq!(s.formula(3, 1), Some("A1*2"));
        assert_eq!(s.cell(3, 1).unwrap().value_type, ValueType::Number);
        assert!(s.cell(4, 1).unwrap().is_empty());
        assert_eq!(s.cell(5, 1).unwrap().value_type, ValueType::Text);
    }

    #[test]
    fn numeric_lexemes() {
        assert!(is_numeric_lexeme("1987"));
        assert!(is_numeric_lexeme("-0.5e3"));
        assert!(!is_numeric_lexeme("3,865"));
        assert!(!is_numeric_lexeme("inf"));
        assert!(!is_numeric_lexeme("NaN"));
        assert!(!is_numeric_lexeme("e"));
    }
}
