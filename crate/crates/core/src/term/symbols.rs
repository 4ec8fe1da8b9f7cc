use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::SymbolTableError;

use super::SymbolId;

/// The vocabulary file shipped with the crate.
pub const DEFAULT_SYMBOLS: &str = include_str!("../../data/symbols.tsv");

/// Content dictionary for symbols not present in the table.
pub const UNKNOWN_CD: &str = "spsht-unknown";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Dialect {
    Generic,
    #[default]
    Excel,
    OpenOffice,
}

impl Dialect {
    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Generic => "generic",
            Dialect::Excel => "excel",
            Dialect::OpenOffice => "openoffice",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "generic" => Ok(Dialect::Generic),
            "excel" | "xls" => Ok(Dialect::Excel),
            "openoffice" | "ooc" => Ok(Dialect::OpenOffice),
            other => Err(format!("unknown dialect `{other}`")),
        }
    }
}

/// Maps uppercase function/operator keys to symbols for one dialect.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    dialect: Dialect,
    generic: HashMap<String, SymbolId>,
    overrides: HashMap<String, SymbolId>,
}

/// Comments are `#` followed by whitespace or end of line; error literal
/// keys such as `#N/A` also start with `#`.
fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t == "#" || t.starts_with("# ") || t.starts_with("#\t")
}

impl SymbolTable {
    /// Parses the line-oriented `KEY<TAB>CD<TAB>NAME<TAB>DIALECT?` format.
    /// Override rows for dialects other than `dialect` are validated and
    /// then dropped.
    pub fn parse(text: &str, dialect: Dialect) -> Result<SymbolTable, SymbolTableError> {
        let mut generic = HashMap::new();
        let mut overrides = HashMap::new();
        let mut seen = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if is_comment_or_blank(line) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(SymbolTableError::Syntax {
                    line: line_no,
                    message: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let key = fields[0].trim();
            let cd = fields[1].trim();
            let name = fields[2].trim();
            if key.is_empty() || cd.is_empty() || name.is_empty() {
                return Err(SymbolTableError::Syntax {
                    line: line_no,
                    message: "empty field".into(),
                });
            }
            if key != key.to_ascii_uppercase() {
                return Err(SymbolTableError::Syntax {
                    line: line_no,
                    message: format!("key `{key}` must be uppercase"),
                });
            }
            let row_dialect = match fields.get(3).map(|d| d.trim()).filter(|d| !d.is_empty()) {
                None => None,
                Some(d) => Some(
                    d.parse::<Dialect>()
                        .map_err(|message| SymbolTableError::Syntax { line: line_no, message })?,
                ),
            };
            if seen.insert((key.to_string(), row_dialect), line_no).is_some() {
                return Err(SymbolTableError::Duplicate {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            let sym = SymbolId::new(cd, name);
            match row_dialect {
                None => {
                    generic.insert(key.to_string(), sym);
                }
                Some(d) if d == dialect => {
                    overrides.insert(key.to_string(), sym);
                }
                Some(_) => {}
            }
        }
        Ok(SymbolTable {
            dialect,
            generic,
            overrides,
        })
    }

    pub fn load(path: &Path, dialect: Dialect) -> Result<SymbolTable, SymbolTableError> {
        let text = std::fs::read_to_string(path)?;
        SymbolTable::parse(&text, dialect)
    }

    /// The shipped vocabulary for `dialect`.
    pub fn builtin(dialect: Dialect) -> SymbolTable {
        SymbolTable::parse(DEFAULT_SYMBOLS, dialect).expect("shipped symbol table is valid")
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    /// Dialect override first, then the generic entry, then the
    /// `spsht-unknown` fallback.
    pub fn lookup(&self, key: &str) -> SymbolId {
        self.overrides
            .get(key)
            .or_else(|| self.generic.get(key))
            .cloned()
            .unwrap_or_else(|| SymbolId::new(UNKNOWN_CD, key))
    }

    /// Keys that have an entry in the generic table.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.generic.keys().map(String::as_str)
    }

    pub fn override_keys(&self) -> impl Iterator<Item = &str> {
        self.overrides.keys().map(String::as_str)
    }
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::builtin(Dialect::default())
    }
}

/// Looks a key up in the shipped table.
pub fn lookup_symbol(key: &str, dialect: Dialect) -> SymbolId {
    SymbolTable::builtin(dialect).lookup(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lookups() {
        assert_eq!(
            lookup_symbol("SUM", Dialect::Generic),
            SymbolId::new("spsht-arith", "sum")
        );
        assert_eq!(
            lookup_symbol("COUNTIF", Dialect::Excel),
            SymbolId::new("xls-stats", "COUNTIF")
        );
        assert_eq!(
            lookup_symbol("COUNTIF", Dialect::OpenOffice),
            SymbolId::new("oo-stats", "COUNTIF")
        );
        assert_eq!(
            lookup_symbol("COUNTIF", Dialect::Generic),
            SymbolId::new("spsht-stats", "COUNTIF")
        );
        assert_eq!(
            lookup_symbol("FROBNICATE", Dialect::Generic),
            SymbolId::new("spsht-unknown", "FROBNICATE")
        );
        assert_eq!(
            lookup_symbol("+", Dialect::Generic),
            SymbolId::new("spsht-arith", "opAdd")
        );
    }

    #[test]
    fn ships_enough_functions() {
        let table = SymbolTable::builtin(Dialect::Generic);
        let functions = table
            .keys()
            .filter(|k| k.starts_with(|c: char| c.is_ascii_uppercase()))
            .filter(|k| !matches!(*k, "TRUE" | "FALSE" | "U-" | "U+"))
            .count();
        assert!(functions >= 100, "{functions}");
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            SymbolTable::parse("SUM\tcd", Dialect::Excel),
            Err(SymbolTableError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            SymbolTable::parse("# c\nSUM\ta\tb\nSUM\ta\tc\n", Dialect::Excel),
            Err(SymbolTableError::Duplicate { line: 3, .. })
        ));
        assert!(SymbolTable::parse("sum\ta\tb", Dialect::Excel).is_err());
        assert!(SymbolTable::parse("SUM\ta\tb\tlotus", Dialect::Excel).is_err());
    }
}
