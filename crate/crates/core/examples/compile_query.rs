//! Compiles a query document to SPARQL.
//!
//!     cargo run --example compile_query -- tests/golden/aqeela-window-circle.json

use forestqb::compiler::{compile, CoordinateProperties};
use forestqb::model::parse_query;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/aqeela-window-circle.json").into());
    let text = std::fs::read_to_string(&path).expect("readable document");
    let q = parse_query(&text).unwrap_or_else(|e| panic!("{path}: {e}"));
    match compile(&q, &CoordinateProperties::default()) {
        Ok(sparql) => print!("{sparql}"),
        Err(e) => eprintln!("cannot compile: {e}"),
    }
}
