//! Operator tooling around the search engine: corpus crawling, the HTTP
//! daemon and a small HTTP client.

pub mod client;
pub mod commands;
pub mod crawl;
pub mod server;
