//! Reader for OOXML workbooks (`.xlsx`).

use std::collections::HashMap;
use std::io::{Cursor, Read};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use zip::ZipArchive;

use crate::address::{CellAddr, Region};
use crate::error::GridError;
use crate::formula::expand_shared_formula;
use crate::grid::{Cell, Sheet, ValueType, Workbook};

type Archive<'a> = ZipArchive<Cursor<&'a [u8]>>;

fn read_part(zip: &mut Archive<'_>, name: &str) -> Result<Option<String>, GridError> {
    let mut file = match zip.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(GridError::Zip(e.to_string())),
    };
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(|e| GridError::Xml {
        part: name.to_string(),
        message: e.to_string(),
    })?;
    Ok(Some(text))
}

fn xml_error(part: &str, e: impl std::fmt::Display) -> GridError {
    GridError::Xml {
        part: part.to_string(),
        message: e.to_string(),
    }
}

fn attrs(e: &BytesStart<'_>, part: &str) -> Result<HashMap<String, String>, GridError> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| xml_error(part, err))?;
        let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
        let value = a.unescape_value().map_err(|err| xml_error(part, err))?.into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

/// Next event, failing on documents that end with unclosed elements (the
/// reader itself tolerates those).
fn next_event<'a>(reader: &mut Reader<&'a [u8]>, depth: &mut usize, part: &str) -> Result<Event<'a>, GridError> {
    let event = reader.read_event().map_err(|e| xml_error(part, e))?;
    match &event {
        Event::Start(_) => *depth += 1,
        Event::End(_) => *depth = depth.saturating_sub(1),
        Event::Eof if *depth > 0 => return Err(xml_error(part, "unexpected end of document")),
        _ => {}
    }
    Ok(event)
}

fn local(e: &BytesStart<'_>) -> Vec<u8> {
    e.local_name().as_ref().to_vec()
}

/// `(name, relationship id)` per sheet, in workbook order.
fn workbook_sheets(text: &str) -> Result<Vec<(String, String)>, GridError> {
    const PART: &str = "xl/workbook.xml";
    let mut reader = Reader::from_str(text);
    let mut out = Vec::new();
    let mut depth = 0;
    loop {
        match next_event(&mut reader, &mut depth, PART)? {
            Event::Start(e) | Event::Empty(e) if local(&e) == b"sheet" => {
                let a = attrs(&e, PART)?;
                let name = a.get("name").cloned().unwrap_or_default();
                let rid = a.get("id").cloned().unwrap_or_default();
                out.push((name, rid));
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

fn relationships(text: &str, part: &str) -> Result<HashMap<String, String>, GridError> {
    let mut reader = Reader::from_str(text);
    let mut out = HashMap::new();
    let mut depth = 0;
    loop {
        match next_event(&mut reader, &mut depth, part)? {
            Event::Start(e) | Event::Empty(e) if local(&e) == b"Relationship" => {
                let a = attrs(&e, part)?;
                if let (Some(id), Some(target)) = (a.get("Id"), a.get("Target")) {
                    out.insert(id.clone(), target.clone());
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

fn resolve_target(target: &str) -> String {
    match target.strip_prefix('/') {
        Some(abs) => abs.to_string(),
        None => format!("xl/{target}"),
    }
}

fn shared_strings(text: &str) -> Result<Vec<String>, GridError> {
    const PART: &str = "xl/sharedStrings.xml";
    let mut reader = Reader::from_str(text);
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    let mut in_t = false;
    // Phonetic runs repeat the text in another script; skip them.
    let mut in_phonetic = false;
    let mut depth = 0;
    loop {
        match next_event(&mut reader, &mut depth, PART)? {
            Event::Start(e) => match local(&e).as_slice() {
                b"si" => current = Some(String::new()),
                b"t" => in_t = true,
                b"rPh" => in_phonetic = true,
                _ => {}
            },
            Event::Empty(e) if local(&e) == b"si" => out.push(String::new()),
            Event::End(e) => match e.local_name().as_ref() {
                b"si" => out.push(current.take().unwrap_or_default()),
                b"t" => in_t = false,
                b"rPh" => in_phonetic = false,
                _ => {}
            },
            Event::Text(t) if in_t && !in_phonetic => {
                if let Some(s) = current.as_mut() {
                    s.push_str(&t.unescape().map_err(|e| xml_error(PART, e))?);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Default)]
struct RawCell {
    addr: Option<CellAddr>,
    kind: String,
    formula: Option<String>,
    formula_attrs: HashMap<String, String>,
    value: String,
    inline: String,
}

#[derive(Clone, Copy, PartialEq)]
enum TextSink {
    None,
    Formula,
    Value,
    Inline,
}

fn parse_sheet(name: &str, part: &str, text: &str, strings: &[String]) -> Result<Sheet, GridError> {
    let mut reader = Reader::from_str(text);
    let mut sheet = Sheet::new(name);
    let mut raw: Vec<RawCell> = Vec::new();
    let mut cell: Option<RawCell> = None;
    let mut sink = TextSink::None;
    let mut row = 0u32;
    let mut next_col = 1u32;
    let mut depth = 0;
    let bad_ref = |source| GridError::BadRef {
        sheet: name.to_string(),
        source,
    };
    loop {
        let event = next_event(&mut reader, &mut depth, part)?;
        let empty = matches!(event, Event::Empty(_));
        match event {
            Event::Start(e) | Event::Empty(e) => match local(&e).as_slice() {
                b"row" => {
                    let a = attrs(&e, part)?;
                    row = match a.get("r") {
                        Some(r) => r
                            .parse()
                            .map_err(|_| xml_error(part, format!("bad row number {r:?}")))?,
                        None => row + 1,
                    };
                    next_col = 1;
                }
                b"c" => {
                    let a = attrs(&e, part)?;
                    let addr = match a.get("r") {
                        Some(r) => CellAddr::parse(r).map_err(bad_ref)?,
                        None => CellAddr::new(next_col, row.max(1)),
                    };
                    next_col = addr.col + 1;
                    let c = RawCell {
                        addr: Some(addr),
                        kind: a.get("t").cloned().unwrap_or_default(),
                        ..Default::default()
                    };
                    if empty {
                        raw.push(c);
                    } else {
                        cell = Some(c);
                    }
                }
                b"f" => {
                    if let Some(c) = cell.as_mut() {
                        c.formula_attrs = attrs(&e, part)?;
                        c.formula = Some(String::new());
                        sink = if empty { TextSink::None } else { TextSink::Formula };
                    }
                }
                b"v" if !empty => sink = TextSink::Value,
                b"t" if !empty && cell.is_some() => sink = TextSink::Inline,
                b"mergeCell" => {
                    let a = attrs(&e, part)?;
                    if let Some(r) = a.get("ref") {
                        sheet.merged.push(Region::parse(r).map_err(bad_ref)?);
                    }
                }
                _ => {}
            },
            Event::End(e) => match e.local_name().as_ref() {
                b"c" => raw.extend(cell.take()),
                b"f" | b"v" | b"t" => sink = TextSink::None,
                _ => {}
            },
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| xml_error(part, e))?;
                if let Some(c) = cell.as_mut() {
                    match sink {
                        TextSink::Formula => c.formula.get_or_insert_with(String::new).push_str(&s),
                        TextSink::Value => c.value.push_str(&s),
                        TextSink::Inline => c.inline.push_str(&s),
                        TextSink::None => {}
                    }
                }
            }
            Event::CData(t) => {
                if let (Some(c), TextSink::Formula) = (cell.as_mut(), sink) {
                    c.formula
                        .get_or_insert_with(String::new)
                        .push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    // Shared formula groups: the master carries the text, members only `si`.
    let mut masters: HashMap<String, (String, CellAddr)> = HashMap::new();
    for c in &raw {
        if c.formula_attrs.get("t").map(String::as_str) == Some("shared") {
            if let (Some(si), Some(f)) = (c.formula_attrs.get("si"), &c.formula) {
                if !f.trim().is_empty() {
                    masters
                        .entry(si.clone())
                        .or_insert_with(|| (f.clone(), c.addr.clone().expect("addr")));
                }
            }
        }
    }

    for c in raw {
        let addr = c.addr.expect("addr");
        let mut formula = c.formula.clone().filter(|f| !f.trim().is_empty());
        if c.formula_attrs.get("t").map(String::as_str) == Some("shared") && formula.is_none() {
            let si = c.formula_attrs.get("si").cloned().unwrap_or_default();
            let (text, master) = masters.get(&si).ok_or_else(|| GridError::UndeclaredSharedGroup {
                sheet: name.to_string(),
                cell: addr.local_a1(),
                group: si.clone(),
            })?;
            let expanded = expand_shared_formula(text, master, &addr).map_err(|source| GridError::SharedFormula {
                sheet: name.to_string(),
                cell: addr.local_a1(),
                source,
            })?;
            formula = Some(expanded);
        }
        let formula = formula.map(|f| f.strip_prefix('=').map(str::to_string).unwrap_or(f));
        let (value, value_type) = match c.kind.as_str() {
            "s" => {
                let idx: usize = c
                    .value
                    .trim()
                    .parse()
                    .map_err(|_| xml_error(part, format!("bad shared string index {:?}", c.value)))?;
                let s = strings
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| xml_error(part, format!("shared string {idx} out of range")))?;
                (s, ValueType::Text)
            }
            "str" => (c.value, ValueType::Text),
            "inlineStr" => (c.inline, ValueType::Text),
            "b" => {
                let v = if c.value.trim() == "1" { "TRUE" } else { "FALSE" };
                (v.to_string(), ValueType::Boolean)
            }
            "e" => (c.value, ValueType::Error),
            _ => (c.value, ValueType::Number),
        };
        let value_type = if formula.is_none() && value.is_empty() {
            ValueType::Empty
        } else {
            value_type
        };
        if value_type == ValueType::Empty {
            continue;
        }
        // Spreadsheet tools sometimes keep stale content under a merge;
        // it is invisible, so drop it.
        if sheet
            .merge_at(addr.row, addr.col)
            .is_some_and(|m| (m.r1, m.c1) != (addr.row, addr.col))
        {
            continue;
        }
        sheet.insert(Cell {
            addr,
            formula,
            value,
            value_type,
        })?;
    }
    Ok(sheet)
}

/// Loads an `.xlsx` archive. Sheet parts are located through the workbook
/// relationships, falling back to `xl/worksheets/sheet<n>.xml`.
pub fn load_xlsx(bytes: &[u8], uri: &str) -> Result<Workbook, GridError> {
    let mut zip = ZipArchive::new(Cursor::new(bytes)).map_err(|e| GridError::Zip(e.to_string()))?;
    let workbook_xml =
        read_part(&mut zip, "xl/workbook.xml")?.ok_or_else(|| GridError::MissingPart("xl/workbook.xml".into()))?;
    let sheets = workbook_sheets(&workbook_xml)?;
    let rels = match read_part(&mut zip, "xl/_rels/workbook.xml.rels")? {
        Some(text) => relationships(&text, "xl/_rels/workbook.xml.rels")?,
        None => HashMap::new(),
    };
    let strings = match read_part(&mut zip, "xl/sharedStrings.xml")? {
        Some(text) => shared_strings(&text)?,
        None => Vec::new(),
    };
    let mut workbook = Workbook {
        uri: uri.to_string(),
        sheets: Vec::with_capacity(sheets.len()),
    };
    for (i, (name, rid)) in sheets.iter().enumerate() {
        let part = rels
            .get(rid)
            .map(|t| resolve_target(t))
            .unwrap_or_else(|| format!("xl/worksheets/sheet{}.xml", i + 1));
        let text = read_part(&mut zip, &part)?.ok_or_else(|| GridError::MissingPart(part.clone()))?;
        workbook.sheets.push(parse_sheet(name, &part, &text, &strings)?);
    }
    workbook.validate()?;
    Ok(workbook)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use zip::write::SimpleFileOptions;

    fn archive(parts: &[(&str, &str)]) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        let mut w = zip::ZipWriter::new(&mut buf);
        for (name, body) in parts {
            w.start_file(*name, SimpleFileOptions::default()).unwrap();
            w.write_all(body.as_bytes()).unwrap();
        }
        w.finish().unwrap();
        buf.into_inner()
    }

    const WORKBOOK: &str = r#"<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships"><sheets><sheet name="Data" sheetId="1" r:id="rId1"/></sheets></workbook>"#;
    const RELS: &str = r#"<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet" Target="worksheets/sheet1.xml"/></Relationships>"#;

    fn book(sheet: &str, strings: Option<&str>) -> Vec<u8> {
        let mut parts = vec![
            ("xl/workbook.xml", WORKBOOK),
            ("xl/_rels/workbook.xml.rels", RELS),
            ("xl/worksheets/sheet1.xml", sheet),
        ];
        if let Some(s) = strings {
            parts.push(("xl/sharedStrings.xml", s));
        }
        archive(&parts)
    }

    fn sheet_xml(body: &str) -> String {
        format!(
            r#"<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>{body}</sheetData></worksheet>"#
        )
    }

    #[test]
    fn formula_and_shared_string() {
        let s = sheet_xml(r#"<row r="1"><c r="A1"><f>SUM(A5:A8)*2</f><v>24</v></c><c r="B1" t="s"><v>0</v></c></row>"#);
        let strings = r#"<sst><si><t>Salaries</t></si></sst>"#;
        let wb = load_xlsx(&book(&s, Some(strings)), "u").unwrap();
        let sheet = &wb.sheets[0];
        assert_eq!(sheet.name, "Data");
        let a1 = sheet.cell(1, 1).unwrap();
        assert_eq!(a1.formula.as_deref(), Some("SUM(A5:A8)*2"));
        assert_eq!((a1.value.as_str(), a1.value_type), ("24", ValueType::Number));
        let b1 = sheet.cell(1, 2).unwrap();
        assert_eq!((b1.value.as_str(), b1.value_type), ("Salaries", ValueType::Text));
    }

    #[test]
    fn empty_sheet_and_types() {
        let wb = load_xlsx(&book(&sheet_xml(""), None), "u").unwrap();
        assert!(wb.sheets[0].cells.is_empty());
        let s = sheet_xml(
            r#"<row r="2"><c r="A2" t="b"><v>1</v></c><c r="B2" t="e"><v>#N/A</v></c><c r="C2" t="inlineStr"><is><t>hi &amp; bye</t></is></c><c r="D2" t="str"><f>"a"&amp;"b"</f><v>ab</v></c><c r="E2" s="3"/></row>"#,
        );
        let wb = load_xlsx(&book(&s, None), "u").unwrap();
        let sh = &wb.sheets[0];
        assert_eq!(sh.cell(2, 1).unwrap().value, "TRUE");
        assert_eq!(sh.cell(2, 2).unwrap().value_type, ValueType::Error);
        assert_eq!(sh.cell(2, 3).unwrap().value, "hi & bye");
        assert_eq!(sh.cell(2, 4).unwrap().formula.as_deref(), Some("\"a\"&\"b\""));
        assert!(sh.cell(2, 5).is_none());
    }

    #[test]
    fn shared_formulas_expand() {
        let s = sheet_xml(
            r#"<row r="2"><c r="D2"><f t="shared" ref="D2:D4" si="0">C2*2</f><v>2</v></c></row><row r="3"><c r="D3"><f t="shared" si="0"/><v>4</v></c></row>"#,
        );
        let wb = load_xlsx(&book(&s, None), "u").unwrap();
        assert_eq!(wb.sheets[0].formula(3, 4), Some("C3*2"));
        let s = sheet_xml(r#"<row r="3"><c r="D3"><f t="shared" si="7"/><v>4</v></c></row>"#);
        assert!(matches!(
            load_xlsx(&book(&s, None), "u"),
            Err(GridError::UndeclaredSharedGroup { .. })
        ));
    }

    #[test]
    fn merges_and_errors() {
        let s = r#"<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData><row r="1"><c r="B1" t="inlineStr"><is><t>Year</t></is></c></row></sheetData><mergeCells count="1"><mergeCell ref="B1:F1"/></mergeCells></worksheet>"#;
        let wb = load_xlsx(&book(s, None), "u").unwrap();
        assert_eq!(wb.sheets[0].merged, vec![Region::parse("B1:F1").unwrap()]);
        assert!(matches!(load_xlsx(b"not a zip", "u"), Err(GridError::Zip(_))));
        assert!(matches!(
            load_xlsx(&archive(&[("x.txt", "")]), "u"),
            Err(GridError::MissingPart(_))
        ));
        assert!(matches!(
            load_xlsx(&book("<worksheet><sheetData><row>", None), "u"),
            Err(GridError::Xml { .. })
        ));
    }
}
