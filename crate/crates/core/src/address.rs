//! A1-style cell addresses and rectangular regions.

use std::fmt;

use crate::error::RefError;

/// Largest column index accepted in A1 notation (`XFD`).
pub const MAX_COL: u32 = 16_384;
/// Largest row index accepted in A1 notation.
pub const MAX_ROW: u32 = 1_048_576;

/// A single cell reference, optionally sheet-qualified.
///
/// Rows and columns are 1-based. The `*_abs` flags record `$` anchoring.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddr {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
    pub col_abs: bool,
    pub row_abs: bool,
}

impl CellAddr {
    pub fn new(col: u32, row: u32) -> Self {
        CellAddr {
            sheet: None,
            col,
            row,
            col_abs: false,
            row_abs: false,
        }
    }

    pub fn with_abs(mut self, col_abs: bool, row_abs: bool) -> Self {
        self.col_abs = col_abs;
        self.row_abs = row_abs;
        self
    }

    pub fn with_sheet(mut self, sheet: impl Into<String>) -> Self {
        self.sheet = Some(sheet.into());
        self
    }

    /// Parses `(sheet!)?$?LETTERS$?DIGITS`. Quoted sheet names (`'My Sheet'!A1`)
    /// are accepted with `''` as the escaped quote.
    pub fn parse(text: &str) -> Result<CellAddr, RefError> {
        let (sheet, local) = split_sheet(text)?;
        let mut addr = parse_local(local)?;
        addr.sheet = sheet;
        Ok(addr)
    }

    /// Renders the address without any sheet prefix (`$B$3`).
    pub fn local_a1(&self) -> String {
        let mut out = String::new();
        if self.col_abs {
            out.push('$');
        }
        out.push_str(&col_to_letters(self.col));
        if self.row_abs {
            out.push('$');
        }
        out.push_str(&self.row.to_string());
        out
    }

    /// Identity key used when deciding whether two references share a variable.
    pub fn key(&self) -> (&Option<String>, u32, u32, bool, bool) {
        (&self.sheet, self.col, self.row, self.col_abs, self.row_abs)
    }
}

impl fmt::Display for CellAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write!(f, "{}!", quote_sheet_name(sheet))?;
        }
        f.write_str(&self.local_a1())
    }
}

/// Renders a sheet name for use as a reference prefix, quoting when needed.
pub fn quote_sheet_name(name: &str) -> String {
    let simple = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if simple {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\'', "''"))
    }
}

fn split_sheet(text: &str) -> Result<(Option<String>, &str), RefError> {
    if let Some(rest) = text.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if rest[i + 1..].starts_with('\'') {
                    name.push('\'');
                    chars.next();
                    continue;
                }
                let after = &rest[i + 1..];
                return match after.strip_prefix('!') {
                    Some(local) => Ok((Some(name), local)),
                    None => Err(RefError::Malformed(text.to_string())),
                };
            }
            name.push(c);
        }
        return Err(RefError::Malformed(text.to_string()));
    }
    match text.rfind('!') {
        Some(i) if i > 0 => Ok((Some(text[..i].to_string()), &text[i + 1..])),
        Some(_) => Err(RefError::Malformed(text.to_string())),
        None => Ok((None, text)),
    }
}

fn parse_local(text: &str) -> Result<CellAddr, RefError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let col_abs = bytes.first() == Some(&b'$');
    if col_abs {
        i += 1;
    }
    let letters_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
        i += 1;
    }
    if i == letters_start {
        return Err(RefError::EmptyColumn(text.to_string()));
    }
    let letters = &text[letters_start..i];
    let row_abs = bytes.get(i) == Some(&b'$');
    if row_abs {
        i += 1;
    }
    let digits = &text[i..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(RefError::Malformed(text.to_string()));
    }
    let col = letters_to_col(letters).ok_or_else(|| RefError::OutOfRange(text.to_string()))?;
    let row: u32 = digits.parse().map_err(|_| RefError::OutOfRange(text.to_string()))?;
    if row == 0 {
        return Err(RefError::RowZero(text.to_string()));
    }
    if row > MAX_ROW {
        return Err(RefError::OutOfRange(text.to_string()));
    }
    Ok(CellAddr {
        sheet: None,
        col,
        row,
        col_abs,
        row_abs,
    })
}

/// Bijective base-26 decoding: `A`=1, `Z`=26, `AA`=27. Case-insensitive.
/// Returns `None` for empty input or columns beyond [`MAX_COL`].
pub fn letters_to_col(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    let mut col: u32 = 0;
    for b in letters.bytes() {
        if !b.is_ascii_alphabetic() {
            return None;
        }
        col = col * 26 + u32::from(b.to_ascii_uppercase() - b'A' + 1);
    }
    (col <= MAX_COL).then_some(col)
}

pub fn col_to_letters(mut col: u32) -> String {
    let mut buf = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        buf.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    buf.reverse();
    String::from_utf8(buf).expect("ascii")
}

/// Inclusive rectangle of cells, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub r1: u32,
    pub c1: u32,
    pub r2: u32,
    pub c2: u32,
}

impl Region {
    pub fn new(r1: u32, c1: u32, r2: u32, c2: u32) -> Self {
        debug_assert!(r1 <= r2 && c1 <= c2);
        Region { r1, c1, r2, c2 }
    }

    pub fn cell(row: u32, col: u32) -> Self {
        Region::new(row, col, row, col)
    }

    /// Parses `A1:B2` or a single `A1`. `$` markers are tolerated and ignored.
    pub fn parse(text: &str) -> Result<Region, RefError> {
        let (a, b) = match text.split_once(':') {
            Some((a, b)) => (a, b),
            None => (text, text),
        };
        let a = parse_local(a)?;
        let b = parse_local(b)?;
        Ok(Region {
            r1: a.row.min(b.row),
            c1: a.col.min(b.col),
            r2: a.row.max(b.row),
            c2: a.col.max(b.col),
        })
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.r1..=self.r2).contains(&row) && (self.c1..=self.c2).contains(&col)
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        let r1 = self.r1.max(other.r1);
        let c1 = self.c1.max(other.c1);
        let r2 = self.r2.min(other.r2);
        let c2 = self.c2.min(other.c2);
        (r1 <= r2 && c1 <= c2).then_some(Region { r1, c1, r2, c2 })
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.intersection(other).is_some()
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.contains(other.r1, other.c1) && self.contains(other.r2, other.c2)
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<u32> {
        self.r1..=self.r2
    }

    pub fn cols(&self) -> std::ops::RangeInclusive<u32> {
        self.c1..=self.c2
    }

    pub fn cell_count(&self) -> u64 {
        u64::from(self.r2 - self.r1 + 1) * u64::from(self.c2 - self.c1 + 1)
    }

    /// Row-major iteration over every `(row, col)` in the region.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows().flat_map(move |r| self.cols().map(move |c| (r, c)))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}:{}{}",
            col_to_letters(self.c1),
            self.r1,
            col_to_letters(self.c2),
            self.r2
        )
    }
}
