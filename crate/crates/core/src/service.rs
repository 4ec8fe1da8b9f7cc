//! The search engine behind the HTTP API: harvest store, index, query
//! pipeline and snapshots.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Region;
use crate::formula::parse_formula;
use crate::harvest::{parse_batch_json, to_sorted_json, HarvestBatch, HarvestRecord};
use crate::index::{IndexStats, SubstitutionIndex};
use crate::term::{ast_to_query_term, parse_mathml, term_to_mathml, SymbolTable, Term};

pub const DEFAULT_LIMIT: u32 = 20;
pub const MAX_LIMIT: u32 = 200;
pub const SNAPSHOT_MAGIC: &str = "XLSEARCH-SNAPSHOT v1\n";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub formula: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub limit: Option<i64>,
    #[serde(default)]
    pub offset: Option<i64>,
}

impl Query {
    pub fn new(formula: impl Into<String>) -> Self {
        Query {
            formula: formula.into(),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Hit {
    pub id: String,
    pub uri: String,
    pub sheet: String,
    pub region: String,
    pub raw_formula: String,
    pub keywords: Vec<String>,
    pub snippet: String,
    /// Query variable name to the MathML of the subterm it stands for.
    pub bindings: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub total: usize,
    pub hits: Vec<Hit>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub accepted: usize,
    pub duplicates: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceStats {
    pub term_count: usize,
    pub posting_count: usize,
    pub token_count: usize,
    pub node_count: usize,
    pub approx_bytes: usize,
    pub harvest_count: usize,
    pub ready: bool,
    pub uptime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("{0}")]
    BadRequest(String),
    #[error("index not loaded")]
    NotReady,
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    NotFound(String),
}

impl ServiceError {
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::Parse { .. } | ServiceError::BadRequest(_) => 400,
            ServiceError::NotFound(_) => 404,
            ServiceError::Conflict(_) => 409,
            ServiceError::NotReady => 503,
        }
    }

    /// JSON error body: `{"error": message}` plus `position` for parse errors.
    pub fn body(&self) -> serde_json::Value {
        match self {
            ServiceError::Parse { position, message } => serde_json::json!({
                "error": format!("parse error: {message}"),
                "position": position,
            }),
            other => serde_json::json!({ "error": other.to_string() }),
        }
    }
}

#[derive(Debug)]
struct Stored {
    record: HarvestRecord,
    region: Region,
    /// Position of the record's sheet within its workbook, by first
    /// appearance in ingest order.
    sheet_rank: usize,
}

#[derive(Debug)]
pub struct SearchEngine {
    table: SymbolTable,
    index: SubstitutionIndex<u32>,
    harvests: Vec<Stored>,
    by_id: HashMap<String, u32>,
    sheet_ranks: HashMap<(String, String), usize>,
    ready: bool,
    started: Instant,
}

impl Default for SearchEngine {
    fn default() -> Self {
        SearchEngine::new(SymbolTable::default())
    }
}

impl SearchEngine {
    /// A ready, empty engine.
    pub fn new(table: SymbolTable) -> Self {
        SearchEngine {
            table,
            index: SubstitutionIndex::new(),
            harvests: Vec::new(),
            by_id: HashMap::new(),
            sheet_ranks: HashMap::new(),
            ready: true,
            started: Instant::now(),
        }
    }

    /// Replaces the indexed contents with those of `other`, keeping this
    /// engine's start time.
    pub fn replace_contents(&mut self, other: SearchEngine) {
        let started = self.started;
        *self = other;
        self.started = started;
    }

    pub fn set_ready(&mut self, ready: bool) {
        self.ready = ready;
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.table
    }

    pub fn harvest_count(&self) -> usize {
        self.harvests.len()
    }

    pub fn harvest(&self, id: &str) -> Option<&HarvestRecord> {
        self.by_id.get(id).map(|&i| &self.harvests[i as usize].record)
    }

    /// Stored records in ingest order.
    pub fn records(&self) -> impl Iterator<Item = &HarvestRecord> {
        self.harvests.iter().map(|s| &s.record)
    }

    pub fn index_stats(&self) -> IndexStats {
        self.index.stats()
    }

    pub fn stats(&self) -> ServiceStats {
        let s = self.index.stats();
        ServiceStats {
            term_count: s.term_count,
            posting_count: s.posting_count,
            token_count: s.token_count,
            node_count: s.node_count,
            approx_bytes: s.approx_bytes,
            harvest_count: self.harvests.len(),
            ready: self.ready,
            uptime_seconds: self.started.elapsed().as_secs_f64(),
        }
    }

    /// Adds a batch. A record whose id is already known with different
    /// content fails the whole batch before anything is stored; identical
    /// repeats count as duplicates; records with unreadable MathML or
    /// region are rejected individually.
    pub fn ingest(&mut self, batch: &HarvestBatch) -> Result<IngestCounts, ServiceError> {
        let mut seen: HashMap<&str, &HarvestRecord> = HashMap::new();
        for r in &batch.harvests {
            let prior = self.harvest(&r.id).or_else(|| seen.get(r.id.as_str()).copied());
            if prior.is_some_and(|p| p != r) {
                return Err(ServiceError::Conflict(format!(
                    "harvest `{}` already exists with different content",
                    r.id
                )));
            }
            seen.entry(&r.id).or_insert(r);
        }
        let mut counts = IngestCounts::default();
        for r in &batch.harvests {
            if self.by_id.contains_key(&r.id) {
                counts.duplicates += 1;
                continue;
            }
            let parsed = parse_mathml(&r.mathml)
                .ok()
                .filter(|t| t.first_qvar().is_none())
                .zip(Region::parse(&r.region).ok());
            let Some((term, region)) = parsed else {
                counts.rejected += 1;
                continue;
            };
            let handle = self.harvests.len() as u32;
            self.index
                .insert(&term, handle)
                .expect("query variables filtered above");
            let next_rank = self.sheet_ranks.len();
            let sheet_rank = *self
                .sheet_ranks
                .entry((r.uri.clone(), r.sheet.clone()))
                .or_insert(next_rank);
            self.harvests.push(Stored {
                record: r.clone(),
                region,
                sheet_rank,
            });
            self.by_id.insert(r.id.clone(), handle);
            counts.accepted += 1;
        }
        Ok(counts)
    }

    pub fn ingest_json(&mut self, bytes: &[u8]) -> Result<IngestCounts, ServiceError> {
        let batch =
            parse_batch_json(bytes).map_err(|e| ServiceError::BadRequest(format!("malformed harvest batch: {e}")))?;
        self.ingest(&batch)
    }

    /// Converts query text to a query term. Concrete references become
    /// fresh query variables `_ref<k>`.
    pub fn query_term(&self, formula: &str) -> Result<Term, ServiceError> {
        let ast = parse_formula(formula, true).map_err(|e| ServiceError::Parse {
            position: e.position,
            message: e.message,
        })?;
        Ok(ast_to_query_term(&ast, &self.table))
    }

    pub fn handle_query(&self, q: &Query) -> Result<AnswerSet, ServiceError> {
        if !self.ready {
            return Err(ServiceError::NotReady);
        }
        let limit = q.limit.unwrap_or(i64::from(DEFAULT_LIMIT));
        if !(1..=i64::from(MAX_LIMIT)).contains(&limit) {
            return Err(ServiceError::BadRequest(format!(
                "limit must be between 1 and {MAX_LIMIT}, got {limit}"
            )));
        }
        let offset = q.offset.unwrap_or(0);
        if offset < 0 {
            return Err(ServiceError::BadRequest(format!(
                "offset must be nonnegative, got {offset}"
            )));
        }
        let term = self.query_term(&q.formula)?;
        let keywords: Vec<String> = q
            .keywords
            .iter()
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        let mut hits: Vec<(&Stored, crate::unify::Substitution)> = self
            .index
            .query(&term)
            .into_iter()
            .map(|h| (&self.harvests[h.harvest as usize], h.substitution))
            .filter(|(s, _)| {
                if keywords.is_empty() {
                    return true;
                }
                let own: Vec<String> = s.record.keywords.iter().map(|k| k.to_lowercase()).collect();
                keywords.iter().all(|k| own.iter().any(|o| o.contains(k.as_str())))
            })
            .collect();
        hits.sort_by(|(a, _), (b, _)| {
            a.record
                .uri
                .as_bytes()
                .cmp(b.record.uri.as_bytes())
                .then(a.sheet_rank.cmp(&b.sheet_rank))
                .then(a.region.r1.cmp(&b.region.r1))
                .then(a.region.c1.cmp(&b.region.c1))
                .then(a.record.id.cmp(&b.record.id))
        });
        let total = hits.len();
        let page = hits
            .into_iter()
            .skip(usize::try_from(offset).unwrap_or(usize::MAX))
            .take(limit as usize)
            .map(|(s, subst)| {
                let bindings = subst
                    .query_bindings(&term)
                    .into_iter()
                    .map(|(name, t)| (name, term_to_mathml(&t)))
                    .collect();
                Hit {
                    id: s.record.id.clone(),
                    uri: s.record.uri.clone(),
                    sheet: s.record.sheet.clone(),
                    region: s.record.region.clone(),
                    raw_formula: s.record.raw_formula.clone(),
                    keywords: s.record.keywords.clone(),
                    snippet: s.record.snippet.clone(),
                    bindings,
                }
            })
            .collect();
        Ok(AnswerSet { total, hits: page })
    }

    pub fn handle_query_json(&self, bytes: &[u8]) -> Result<AnswerSet, ServiceError> {
        let q: Query =
            serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(format!("malformed query: {e}")))?;
        self.handle_query(&q)
    }

    /// Snapshot text: the magic line followed by a harvest batch of every
    /// stored record in ingest order.
    pub fn snapshot(&self) -> String {
        let batch = HarvestBatch {
            harvests: self.records().cloned().collect(),
        };
        format!("{SNAPSHOT_MAGIC}{}", to_sorted_json(&batch))
    }

    pub fn load_snapshot(&mut self, bytes: &[u8]) -> Result<IngestCounts, ServiceError> {
        let body = bytes
            .strip_prefix(SNAPSHOT_MAGIC.as_bytes())
            .ok_or_else(|| ServiceError::BadRequest("not an xlsearch snapshot (bad header)".into()))?;
        self.ingest_json(body)
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn answer_json(answer: &AnswerSet) -> String {
    to_sorted_json(answer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, uri: &str, formula: &str, keywords: &[&str]) -> HarvestRecord {
        let table = SymbolTable::default();
        let term = crate::term::formula_to_term(formula, &table, true).unwrap();
        HarvestRecord {
            id: id.into(),
            uri: uri.into(),
            sheet: "S".into(),
            region: "A1:A1".into(),
            mathml: term_to_mathml(&term),
            raw_formula: formula.into(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            snippet: String::new(),
        }
    }

    fn engine(records: Vec<HarvestRecord>) -> SearchEngine {
        let mut e = SearchEngine::default();
        e.ingest(&HarvestBatch { harvests: records }).unwrap();
        e
    }

    #[test]
    fn ingest_counts() {
        let a = record("a", "u1", "A1+B1", &[]);
        let mut bad = record("b", "u1", "A1", &[]);
        bad.mathml = "<math>".into();
        let mut e = SearchEngine::default();
        let c = e
            .ingest(&HarvestBatch {
                harvests: vec![a.clone(), bad],
            })
            .unwrap();
        assert_eq!(
            c,
            IngestCounts {
                accepted: 1,
                duplicates: 0,
                rejected: 1
            }
        );
        let c = e
            .ingest(&HarvestBatch {
                harvests: vec![a.clone()],
            })
            .unwrap();
        assert_eq!(c.duplicates, 1);
        let mut changed = a;
        changed.raw_formula = "B1+C1".into();
        let err = e.ingest(&HarvestBatch {
            harvests: vec![record("c", "u", "1", &[]), changed],
        });
        assert_eq!(err.unwrap_err().status(), 409);
        assert_eq!(e.harvest_count(), 1);
    }

    #[test]
    fn query_errors() {
        let e = engine(vec![]);
        let err = e.handle_query(&Query::new("SUM(")).unwrap_err();
        assert_eq!(err.status(), 400);
        assert!(matches!(err, ServiceError::Parse { position: 3, .. }), "{err:?}");
        for limit in [0, 201, -1] {
            let q = Query {
                limit: Some(limit),
                ..Query::new("?x")
            };
            assert_eq!(e.handle_query(&q).unwrap_err().status(), 400);
        }
        let mut e = e;
        e.set_ready(false);
        assert_eq!(e.handle_query(&Query::new("?x")).unwrap_err().status(), 503);
    }

    #[test]
    fn keywords_rank_and_page() {
        let e = engine(vec![
            record("z", "c.xlsx", "A1+1", &["Total"]),
            record("y", "a.xlsx", "B2+1", &["Net Total"]),
            record("x", "b.xlsx", "C3+2", &["other"]),
        ]);
        let all = e.handle_query(&Query::new("?a+?b")).unwrap();
        let uris: Vec<_> = all.hits.iter().map(|h| h.uri.as_str()).collect();
        assert_eq!(uris, ["a.xlsx", "b.xlsx", "c.xlsx"]);
        let q = Query {
            keywords: vec!["TOTAL".into()],
            ..Query::new("?a+?b")
        };
        assert_eq!(e.handle_query(&q).unwrap().total, 2);
        let q = Query {
            offset: Some(1),
            limit: Some(1),
            ..Query::new("?a+?b")
        };
        let page = e.handle_query(&q).unwrap();
        assert_eq!((page.total, page.hits[0].uri.as_str()), (3, "b.xlsx"));
        let one = e.handle_query(&Query::new("D4+2")).unwrap();
        assert_eq!(one.total, 1);
        assert!(one.hits[0].bindings.contains_key("_ref0"));
    }

    #[test]
    fn snapshot_round_trip() {
        let e = engine(vec![record("a", "u", "SUM(A1:A3)", &["k"])]);
        let text = e.snapshot();
        assert!(text.starts_with(SNAPSHOT_MAGIC));
        let mut f = SearchEngine::default();
        assert_eq!(f.load_snapshot(text.as_bytes()).unwrap().accepted, 1);
        assert_eq!(f.snapshot(), text);
        assert!(f.load_snapshot(b"{}").is_err());
    }
}
