use std::path::PathBuf;

use clap::{Parser, Subcommand};

use xlsearch_cli::commands::{self, ServeOptions, Source, EXIT_USAGE};
use xlsearch_core::service::Query;
use xlsearch_core::term::Dialect;

#[derive(Parser)]
#[command(name = "xlsearch", version, about = "Search spreadsheet formulas by unification")]
struct Cli {
    /// Symbol table file (KEY, CD, NAME, optional DIALECT; tab separated).
    #[arg(long, global = true, env = "XLSEARCH_SYMBOLS")]
    symbols: Option<PathBuf>,

    /// Spreadsheet dialect used to pick symbol overrides.
    #[arg(long, global = true, default_value = "excel")]
    dialect: Dialect,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Harvest workbooks (.xlsx, .grid.json, or directories of them).
    Crawl {
        paths: Vec<PathBuf>,
        /// Text file with one input path per line.
        #[arg(long)]
        list: Option<PathBuf>,
        /// Output batch file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP search daemon.
    Serve {
        #[arg(long, env = "XLSEARCH_PORT", default_value_t = 8080)]
        port: u16,
        /// Snapshot file loaded at startup (if present) and written on shutdown.
        #[arg(long, env = "XLSEARCH_SNAPSHOT")]
        snapshot: Option<PathBuf>,
        /// Harvest batch file to load; repeatable.
        #[arg(long = "harvests")]
        harvests: Vec<PathBuf>,
        /// Allowed CORS origin; repeatable. Any origin when absent.
        #[arg(long = "cors-origin")]
        cors_origin: Vec<String>,
    },
    /// Run one query against a server or local batch files.
    Query {
        /// Base URL of a running daemon.
        #[arg(long, conflicts_with = "harvests")]
        server: Option<String>,
        /// Harvest batch file to search in-process; repeatable.
        #[arg(long = "harvests")]
        harvests: Vec<PathBuf>,
        /// Formula with `?name` query variables.
        formula: String,
        /// Keyword that some legend of a hit must contain; repeatable.
        #[arg(short = 'k', long = "keyword")]
        keywords: Vec<String>,
        #[arg(long)]
        limit: Option<i64>,
        #[arg(long)]
        offset: Option<i64>,
    },
    /// Print index statistics of a server or local batch files.
    Stats {
        #[arg(long, conflicts_with = "harvests")]
        server: Option<String>,
        #[arg(long = "harvests")]
        harvests: Vec<PathBuf>,
    },
}

fn source(server: Option<String>, harvests: Vec<PathBuf>) -> Source {
    match server {
        Some(url) => Source::Server(url),
        None => Source::Local(harvests),
    }
}

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    let table = match commands::load_symbols(cli.symbols.as_deref(), cli.dialect) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_USAGE);
        }
    };
    let code = match cli.command {
        Command::Crawl { paths, list, out } => commands::cmd_crawl(
            &table,
            &paths,
            list.as_deref(),
            out.as_deref(),
            &mut stdout,
            &mut stderr,
        ),
        Command::Serve {
            port,
            snapshot,
            harvests,
            cors_origin,
        } => commands::cmd_serve(
            table,
            ServeOptions {
                port,
                snapshot,
                harvests,
                cors_allow: cors_origin,
            },
            &mut stderr,
        ),
        Command::Query {
            server,
            harvests,
            formula,
            keywords,
            limit,
            offset,
        } => {
            let q = Query {
                formula,
                keywords,
                limit,
                offset,
            };
            commands::cmd_query(table, &source(server, harvests), &q, &mut stdout, &mut stderr)
        }
        Command::Stats { server, harvests } => {
            commands::cmd_stats(table, &source(server, harvests), &mut stdout, &mut stderr)
        }
    };
    std::process::exit(code);
}
