//! The `xlsearch` subcommands. Each returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, PoisonError, RwLock};

use xlsearch_core::harvest::{batch_to_json, parse_batch_json, to_sorted_json, HarvestBatch};
use xlsearch_core::service::{answer_json, AnswerSet, Query, SearchEngine, ServiceError};
use xlsearch_core::term::{Dialect, SymbolTable};

use crate::client::{self, ClientError};
use crate::crawl::{collect_inputs, crawl};
use crate::server;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_HITS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONNECT: i32 = 3;

pub fn load_symbols(path: Option<&Path>, dialect: Dialect) -> Result<SymbolTable, String> {
    match path {
        Some(p) => SymbolTable::load(p, dialect).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(SymbolTable::builtin(dialect)),
    }
}

/// Reads a harvest batch file; errors carry the file name and the JSON
/// line and column.
pub fn read_batch(path: &Path) -> Result<HarvestBatch, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_batch_json(&bytes).map_err(|e| {
        format!(
            "{}: malformed harvest batch at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })
}

pub fn local_engine(table: SymbolTable, batches: &[PathBuf]) -> Result<SearchEngine, String> {
    let mut engine = SearchEngine::new(table);
    for path in batches {
        let batch = read_batch(path)?;
        engine.ingest(&batch).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(engine)
}

pub fn cmd_crawl(
    table: &SymbolTable,
    paths: &[PathBuf],
    list: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let files = match collect_inputs(paths, list) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if files.is_empty() {
        let _ = writeln!(stderr, "error: no input files (.xlsx or .grid.json) found");
        return EXIT_USAGE;
    }
    let (batch, report) = crawl(&files, table);
    let text = batch_to_json(&batch);
    let written = match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    let _ = stderr.write_all(to_sorted_json(&report).as_bytes());
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub struct ServeOptions {
    pub port: u16,
    pub snapshot: Option<PathBuf>,
    pub harvests: Vec<PathBuf>,
    pub cors_allow: Vec<String>,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Parses every input before binding (bad input is fatal), then serves
/// while the index is built; queries answer 503 until it is ready. On a
/// clean shutdown the snapshot, if configured, is rewritten.
pub fn cmd_serve(table: SymbolTable, opts: ServeOptions, stderr: &mut dyn Write) -> i32 {
    match serve_inner(table, opts) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn serve_inner(table: SymbolTable, opts: ServeOptions) -> Result<(), String> {
    let batches = opts
        .harvests
        .iter()
        .map(|p| read_batch(p).map(|b| (p.clone(), b)))
        .collect::<Result<Vec<_>, _>>()?;
    let snapshot_bytes = match &opts.snapshot {
        Some(p) if p.exists() => Some(std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?),
        _ => None,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let mut engine = SearchEngine::new(table.clone());
    engine.set_ready(false);
    let engine = Arc::new(RwLock::new(engine));
    runtime.block_on(async {
        let listener = server::bind(opts.port)
            .await
            .map_err(|e| format!("cannot listen on port {}: {e}", opts.port))?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        eprintln!("xlsearch listening on http://{addr}");

        let (fail_tx, fail_rx) = tokio::sync::oneshot::channel::<String>();
        let loader_engine = engine.clone();
        tokio::task::spawn_blocking(move || {
            let mut e = SearchEngine::new(table);
            let loaded = (|| {
                if let Some(bytes) = snapshot_bytes {
                    e.load_snapshot(&bytes).map_err(|err| format!("snapshot: {err}"))?;
                }
                for (path, batch) in &batches {
                    e.ingest(batch).map_err(|err| format!("{}: {err}", path.display()))?;
                }
                Ok::<(), String>(())
            })();
            match loaded {
                Ok(()) => {
                    e.set_ready(true);
                    loader_engine
                        .write()
                        .unwrap_or_else(PoisonError::into_inner)
                        .replace_contents(e);
                }
                Err(msg) => {
                    let _ = fail_tx.send(msg);
                }
            }
        });

        let failure: Arc<std::sync::Mutex<Option<String>>> = Arc::default();
        let shutdown = {
            let failure = failure.clone();
            async move {
                tokio::select! {
                    _ = shutdown_signal() => {}
                    Ok(msg) = fail_rx => {
                        *failure.lock().unwrap_or_else(PoisonError::into_inner) = Some(msg);
                    }
                }
            }
        };
        server::serve(listener, engine.clone(), &opts.cors_allow, shutdown)
            .await
            .map_err(|e| e.to_string())?;
        if let Some(msg) = failure.lock().unwrap_or_else(PoisonError::into_inner).take() {
            return Err(msg);
        }
        if let Some(path) = &opts.snapshot {
            let text = engine.read().unwrap_or_else(PoisonError::into_inner).snapshot();
            std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Ok(())
    })
}

pub enum Source {
    Server(String),
    Local(Vec<PathBuf>),
}

fn print_service_error(e: &ServiceError, stderr: &mut dyn Write) -> i32 {
    let _ = stderr.write_all(to_sorted_json(&e.body()).as_bytes());
    match e {
        ServiceError::Parse { .. } | ServiceError::BadRequest(_) => EXIT_USAGE,
        _ => EXIT_CONNECT,
    }
}

fn print_answer(answer: &AnswerSet, stdout: &mut dyn Write) -> i32 {
    let _ = stdout.write_all(answer_json(answer).as_bytes());
    if answer.total > 0 {
        EXIT_OK
    } else {
        EXIT_NO_HITS
    }
}

pub fn cmd_query(
    table: SymbolTable,
    source: &Source,
    query: &Query,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    match source {
        Source::Local(batches) => {
            let engine = match local_engine(table, batches) {
                Ok(e) => e,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_USAGE;
                }
            };
            match engine.handle_query(query) {
                Ok(answer) => print_answer(&answer, stdout),
                Err(e) => print_service_error(&e, stderr),
            }
        }
        Source::Server(url) => {
            let body = serde_json::to_string(query).expect("serializable");
            match client::post_json(url, "/query", &body) {
                Ok(text) => match serde_json::from_str::<AnswerSet>(&text) {
                    Ok(answer) => print_answer(&answer, stdout),
                    Err(e) => {
                        let _ = writeln!(stderr, "error: unexpected server response: {e}");
                        EXIT_CONNECT
                    }
                },
                Err(ClientError::Status { status, body }) => {
                    let pretty = serde_json::from_str::<serde_json::Value>(&body)
                        .map(|v| to_sorted_json(&v))
                        .unwrap_or_else(|_| format!("{body}\n"));
                    let _ = stderr.write_all(pretty.as_bytes());
                    if status == 400 {
                        EXIT_USAGE
                    } else {
                        EXIT_CONNECT
                    }
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_CONNECT
                }
            }
        }
    }
}

pub fn cmd_stats(table: SymbolTable, source: &Source, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let text = match source {
        Source::Local(batches) => match local_engine(table, batches) {
            Ok(e) => {
                let mut v = serde_json::to_value(e.stats()).expect("serializable");
                v["uptimeSeconds"] = serde_json::json!(0.0);
                to_sorted_json(&v)
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_USAGE;
            }
        },
        Source::Server(url) => match client::get(url, "/stats") {
            Ok(body) => match serde_json::from_str::<serde_json::Value>(&body) {
                Ok(v) => to_sorted_json(&v),
                Err(e) => {
                    let _ = writeln!(stderr, "error: unexpected server response: {e}");
                    return EXIT_CONNECT;
                }
            },
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_CONNECT;
            }
        },
    };
    let _ = stdout.write_all(text.as_bytes());
    EXIT_OK
}
