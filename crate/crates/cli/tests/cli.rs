mod common;

use std::fs;

use common::*;
use serde_json::{json, Value};

fn parse(text: &str) -> Value {
    serde_json::from_str(text).expect("json")
}

#[test]
fn crawl_grid_and_xlsx_fixtures_agree() {
    let grid = run(&["crawl", fixture("winograd.grid.json").to_str().unwrap()]);
    let xlsx = run(&["crawl", fixture("winograd.xlsx").to_str().unwrap()]);
    assert_eq!(grid.status.code(), Some(0), "{}", stderr(&grid));
    assert_eq!(xlsx.status.code(), Some(0), "{}", stderr(&xlsx));
    let (g, x) = (parse(&stdout(&grid)), parse(&stdout(&xlsx)));
    let strip = |v: &Value| -> Vec<Value> {
        v["harvests"]
            .as_array()
            .unwrap()
            .iter()
            .map(|h| {
                json!([
                    h["sheet"],
                    h["region"],
                    h["mathml"],
                    h["rawFormula"],
                    h["keywords"],
                    h["snippet"]
                ])
            })
            .collect()
    };
    assert_eq!(strip(&g).len(), 4);
    assert_eq!(strip(&g), strip(&x));
    assert_eq!(g["harvests"][0]["uri"], "corpus/winograd.xlsx");
    assert!(x["harvests"][0]["uri"].as_str().unwrap().ends_with("winograd.xlsx"));
}

#[test]
fn crawl_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..6 {
        write_sales(
            dir.path(),
            &format!("w{i}.grid.json"),
            &format!("corpus/w{i}.xlsx"),
            "Total",
        );
    }
    let a = run(&["crawl", dir.path().to_str().unwrap()]);
    let b = run(&["crawl", dir.path().to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(parse(&stdout(&a))["harvests"].as_array().unwrap().len(), 6);
}

#[test]
fn corrupt_workbook_yields_one_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("winograd.xlsx"), dir.path().join("good.xlsx")).unwrap();
    write_sales(dir.path(), "sales.grid.json", "corpus/sales.xlsx", "Total");
    fs::write(dir.path().join("broken.xlsx"), b"PK\x03\x04 this is not a zip archive").unwrap();
    let out_file = dir.path().join("out.json");
    let out = crawl_to(&out_file, &[dir.path()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = parse(&stderr(&out));
    assert_eq!(report["filesSeen"], 3);
    assert_eq!(report["filesParsed"], 2);
    assert_eq!(report["harvestsEmitted"], 5);
    let diags = report["diagnostics"].as_array().unwrap();
    assert_eq!(diags.len(), 1, "{diags:?}");
    assert!(diags[0]["uri"].as_str().unwrap().ends_with("broken.xlsx"));
    let batch = parse(&fs::read_to_string(&out_file).unwrap());
    assert_eq!(batch["harvests"].as_array().unwrap().len(), 5);
}

#[test]
fn crawl_without_inputs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("notes.txt"), "nothing here").unwrap();
    let out = run(&["crawl", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_explicit_file_is_a_diagnostic() {
    let out = run(&["crawl", "/nonexistent/path/for/xlsearch.xlsx"]);
    assert_eq!(out.status.code(), Some(0));
    let report = parse(&stderr(&out));
    assert_eq!(report["filesParsed"], 0);
    assert_eq!(report["diagnostics"].as_array().unwrap().len(), 1);
    assert_eq!(parse(&stdout(&out))["harvests"], json!([]));
}

#[test]
fn crawl_reads_list_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_sales(dir.path(), "a.grid.json", "corpus/a.xlsx", "Total");
    let b = write_sales(dir.path(), "b.grid.json", "corpus/b.xlsx", "Total");
    let list = dir.path().join("inputs.txt");
    fs::write(&list, format!("{}\n\n{}\n", a.display(), b.display())).unwrap();
    let out = run(&["crawl", "--list", list.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let uris: Vec<_> = parse(&stdout(&out))["harvests"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["uri"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(uris, ["corpus/a.xlsx", "corpus/b.xlsx"]);
}

#[test]
fn dialect_selects_countif_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let wb = write_grid(
        dir.path(),
        "c.grid.json",
        "corpus/c.xlsx",
        &[
            ("A1", "Score"),
            ("A2", "1"),
            ("A3", "2"),
            ("A4", "=COUNTIF(A2:A3,\">1\")+SUM(A2:A3)"),
        ],
    );
    let excel = run(&["crawl", wb.to_str().unwrap()]);
    let oo = run(&["--dialect", "openoffice", "crawl", wb.to_str().unwrap()]);
    let m_excel = parse(&stdout(&excel))["harvests"][0]["mathml"]
        .as_str()
        .unwrap()
        .to_string();
    let m_oo = parse(&stdout(&oo))["harvests"][0]["mathml"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(
        m_excel.contains(r#"<csymbol cd="xls-stats">COUNTIF</csymbol>"#),
        "{m_excel}"
    );
    assert!(m_oo.contains(r#"<csymbol cd="oo-stats">COUNTIF</csymbol>"#), "{m_oo}");
    assert_eq!(m_excel.replace("xls-stats", "oo-stats"), m_oo);
}

#[test]
fn local_query_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.json");
    assert_eq!(
        crawl_to(&batch, &[&fixture("winograd.grid.json")]).status.code(),
        Some(0)
    );
    let b = batch.to_str().unwrap();

    let hit = run(&["query", "--harvests", b, "SUM(?r)"]);
    assert_eq!(hit.status.code(), Some(0), "{}", stderr(&hit));
    let answer = parse(&stdout(&hit));
    assert_eq!(answer["total"], 1);
    assert_eq!(answer["hits"][0]["region"], "B13:F13");

    let none = run(&["query", "--harvests", b, "SUM(?r)", "-k", "zzz"]);
    assert_eq!(none.status.code(), Some(1));
    assert_eq!(parse(&stdout(&none))["total"], 0);

    let bad = run(&["query", "--harvests", b, "SUM("]);
    assert_eq!(bad.status.code(), Some(2));
    let err = parse(&stderr(&bad));
    assert_eq!(err["position"], 3);

    let limit = run(&["query", "--harvests", b, "?x", "--limit", "0"]);
    assert_eq!(limit.status.code(), Some(2));

    let refused = run(&["query", "--server", &format!("http://127.0.0.1:{}", free_port()), "?x"]);
    assert_eq!(refused.status.code(), Some(3));
}

#[test]
fn local_batch_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"harvests\": [\n    {\"id\": 1,,}\n  ]\n}\n").unwrap();
    let out = run(&["query", "--harvests", bad.to_str().unwrap(), "?x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn server_and_local_answers_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.json");
    crawl_to(&batch, &[&fixture("winograd.grid.json")]);
    let b = batch.to_str().unwrap();
    let server = Server::start(&["--harvests", b]);
    for args in [
        vec!["?a+(?x-?b)/(?c-?b)*(?d-?a)"],
        vec!["?f+(?x-?a)/(?b-?a)*(?g-?f)", "-k", "projected"],
        vec!["?x", "--limit", "2", "--offset", "1"],
        vec!["?x-?y"],
    ] {
        let mut local = vec!["query", "--harvests", b];
        local.extend(&args);
        let mut remote = vec!["query", "--server", &server.base];
        remote.extend(&args);
        let l = run(&local);
        let r = run(&remote);
        assert_eq!(l.status.code(), r.status.code(), "{args:?}");
        assert_eq!(l.stdout, r.stdout, "{args:?}");
    }
    let stats = parse(&stdout(&run(&["stats", "--server", &server.base])));
    assert_eq!(stats["harvestCount"], 4);
    assert_eq!(stats["ready"], true);
    let local_stats = parse(&stdout(&run(&["stats", "--harvests", b])));
    assert_eq!(local_stats["approxBytes"], stats["approxBytes"]);
    assert_eq!(local_stats["termCount"], stats["termCount"]);
}

#[test]
fn http_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.json");
    crawl_to(&batch, &[&fixture("winograd.grid.json")]);
    let server = Server::start(&[]);

    let (status, _, body) = http(&server.base, "GET", "/health", &[], "");
    assert_eq!(status, 200, "{body}");

    let (status, _, body) = http(
        &server.base,
        "POST",
        "/harvests",
        &[],
        &fs::read_to_string(&batch).unwrap(),
    );
    assert_eq!(status, 200, "{body}");
    assert_eq!(parse(&body)["accepted"], 4);
    let (_, _, body) = http(
        &server.base,
        "POST",
        "/harvests",
        &[],
        &fs::read_to_string(&batch).unwrap(),
    );
    assert_eq!(parse(&body)["duplicates"], 4);

    let (status, _, body) = http(&server.base, "POST", "/query", &[], r#"{"formula":"SUM(?r)"}"#);
    assert_eq!(status, 200);
    let id = parse(&body)["hits"][0]["id"].as_str().unwrap().to_string();
    let encoded = id.replace('#', "%23").replace('!', "%21");
    let (status, _, body) = http(&server.base, "GET", &format!("/harvest/{encoded}"), &[], "");
    assert_eq!(status, 200, "{body}");
    assert_eq!(parse(&body)["id"], id.as_str());
    let (status, _, _) = http(&server.base, "GET", "/harvest/nope", &[], "");
    assert_eq!(status, 404);

    let (status, _, body) = http(&server.base, "POST", "/query", &[], r#"{"formula":"SUM("}"#);
    assert_eq!(status, 400);
    assert_eq!(parse(&body)["position"], 3);
    let (status, _, _) = http(&server.base, "POST", "/query", &[], r#"{"formula":"?x","limit":201}"#);
    assert_eq!(status, 400);
    let (status, _, _) = http(&server.base, "POST", "/query", &[], "not json");
    assert_eq!(status, 400);

    let mut conflicting = parse(&fs::read_to_string(&batch).unwrap());
    conflicting["harvests"][0]["rawFormula"] = json!("changed");
    let (status, _, _) = http(&server.base, "POST", "/harvests", &[], &conflicting.to_string());
    assert_eq!(status, 409);
    let (_, _, body) = http(&server.base, "GET", "/stats", &[], "");
    assert_eq!(parse(&body)["harvestCount"], 4);
}

#[test]
fn cors_allows_configured_origins() {
    let open = Server::start(&[]);
    let (_, head, _) = http(&open.base, "GET", "/health", &[("Origin", "http://example.org")], "");
    assert!(
        head.to_ascii_lowercase().contains("access-control-allow-origin: *"),
        "{head}"
    );

    let restricted = Server::start(&["--cors-origin", "http://allowed.test"]);
    let (_, head, _) = http(
        &restricted.base,
        "GET",
        "/health",
        &[("Origin", "http://allowed.test")],
        "",
    );
    assert!(
        head.to_ascii_lowercase()
            .contains("access-control-allow-origin: http://allowed.test"),
        "{head}"
    );
    let (_, head, _) = http(
        &restricted.base,
        "GET",
        "/health",
        &[("Origin", "http://other.test")],
        "",
    );
    assert!(
        !head.to_ascii_lowercase().contains("access-control-allow-origin"),
        "{head}"
    );
}

#[test]
fn busy_port_is_reported() {
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port();
    let out = bin().args(["serve", "--port", &port.to_string()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(&port.to_string()));
}

#[test]
fn malformed_batch_stops_serve_before_binding() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[").unwrap();
    let out = bin()
        .args([
            "serve",
            "--port",
            &free_port().to_string(),
            "--harvests",
            bad.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn snapshot_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.json");
    crawl_to(&batch, &[&fixture("winograd.grid.json")]);
    let snap = dir.path().join("index.snapshot");
    let s = snap.to_str().unwrap();

    let first = Server::start(&["--snapshot", s, "--harvests", batch.to_str().unwrap()]);
    let before = stdout(&run(&["query", "--server", &first.base, "?x"]));
    assert_eq!(first.terminate(), 0);
    let text = fs::read_to_string(&snap).unwrap();
    assert!(text.starts_with("XLSEARCH-SNAPSHOT v1\n"));

    let second = Server::start(&["--snapshot", s]);
    let after = stdout(&run(&["query", "--server", &second.base, "?x"]));
    assert_eq!(before, after);
    assert_eq!(second.terminate(), 0);
    assert_eq!(fs::read_to_string(&snap).unwrap(), text);
}

#[test]
fn environment_supplies_port() {
    let port = free_port();
    let mut child = bin()
        .arg("serve")
        .env("XLSEARCH_PORT", port.to_string())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let base = format!("http://127.0.0.1:{port}");
    let mut ok = false;
    for _ in 0..400 {
        if xlsearch_cli::client::get(&base, "/health").is_ok() {
            ok = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(25));
    }
    let _ = child.kill();
    let _ = child.wait();
    assert!(ok);
}
