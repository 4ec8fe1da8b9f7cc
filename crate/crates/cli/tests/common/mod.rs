#![allow(dead_code)]

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xlsearch"));
    cmd.env_remove("XLSEARCH_SYMBOLS")
        .env_remove("XLSEARCH_PORT")
        .env_remove("XLSEARCH_SNAPSHOT");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn xlsearch")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .expect("bind ephemeral port")
        .local_addr()
        .unwrap()
        .port()
}

/// Writes a one-sheet grid workbook. `cells` holds `(ref, content)` where a
/// content starting with `=` is a formula, a numeric string a number and
/// anything else text.
pub fn write_grid(dir: &Path, file: &str, uri: &str, cells: &[(&str, &str)]) -> PathBuf {
    let cells: Vec<Value> = cells
        .iter()
        .map(|(r, c)| {
            if let Some(f) = c.strip_prefix('=') {
                json!({"ref": r, "formula": f, "value": "0", "valueType": "number"})
            } else if c.parse::<f64>().is_ok() {
                json!({"ref": r, "value": c, "valueType": "number"})
            } else {
                json!({"ref": r, "value": c, "valueType": "text"})
            }
        })
        .collect();
    let doc = json!({"uri": uri, "sheets": [{"name": "Sheet1", "cells": cells, "merged": []}]});
    let path = dir.join(file);
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

/// A small sales table: legend row, two number rows, one total row.
pub fn sales_cells(total_label: &str) -> Vec<(&'static str, String)> {
    vec![
        ("A1", "Region".into()),
        ("B1", "Q1".into()),
        ("C1", "Q2".into()),
        ("A2", "North".into()),
        ("B2", "10".into()),
        ("C2", "20".into()),
        ("A3", "South".into()),
        ("B3", "30".into()),
        ("C3", "40".into()),
        ("A4", total_label.to_string()),
        ("B4", "=SUM(B2:B3)".into()),
        ("C4", "=SUM(C2:C3)".into()),
    ]
}

pub fn write_sales(dir: &Path, file: &str, uri: &str, total_label: &str) -> PathBuf {
    let cells = sales_cells(total_label);
    let borrowed: Vec<(&str, &str)> = cells.iter().map(|(r, c)| (*r, c.as_str())).collect();
    write_grid(dir, file, uri, &borrowed)
}

pub fn crawl_to(out: &Path, inputs: &[&Path]) -> Output {
    let mut cmd = bin();
    cmd.arg("crawl").arg("--out").arg(out);
    for p in inputs {
        cmd.arg(p);
    }
    cmd.output().expect("spawn crawl")
}

pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(args: &[&str]) -> Server {
        Self::start_with(args, free_port())
    }

    pub fn start_with(args: &[&str], port: u16) -> Server {
        let child = bin()
            .arg("serve")
            .arg("--port")
            .arg(port.to_string())
            .args(args)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn serve");
        let server = Server {
            child,
            base: format!("http://127.0.0.1:{port}"),
        };
        server.wait_ready();
        server
    }

    fn wait_ready(&self) {
        let deadline = Instant::now() + Duration::from_secs(30);
        while Instant::now() < deadline {
            if let Ok(body) = xlsearch_cli::client::get(&self.base, "/stats") {
                let v: Value = serde_json::from_str(&body).unwrap();
                if v["ready"] == json!(true) {
                    return;
                }
            }
            std::thread::sleep(Duration::from_millis(25));
        }
        panic!("server at {} did not become ready", self.base);
    }

    /// Sends SIGTERM and waits for a clean exit.
    pub fn terminate(mut self) -> i32 {
        let pid = self.child.id().to_string();
        Command::new("kill").args(["-TERM", &pid]).status().expect("kill");
        let status = self.child.wait().expect("wait serve");
        status.code().unwrap_or(-1)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Raw HTTP exchange for checks the client helper hides (status, headers).
pub fn http(base: &str, method: &str, path: &str, headers: &[(&str, &str)], body: &str) -> (u16, String, String) {
    use std::io::{Read, Write};
    let addr = base.trim_start_matches("http://");
    let mut stream = std::net::TcpStream::connect(addr).expect("connect");
    let mut req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n",
        body.len()
    );
    if !body.is_empty() {
        req.push_str("Content-Type: application/json\r\n");
    }
    for (k, v) in headers {
        req.push_str(&format!("{k}: {v}\r\n"));
    }
    req.push_str("\r\n");
    req.push_str(body);
    stream.write_all(req.as_bytes()).unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let raw = String::from_utf8_lossy(&raw).into_owned();
    let (head, rest) = raw.split_once("\r\n\r\n").expect("http response");
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        dechunk(rest)
    } else {
        rest.to_string()
    };
    (status, head.to_string(), body)
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    while let Some((size, rest)) = s.split_once("\r\n") {
        let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
        if n == 0 {
            break;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
    out
}
