//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the report:
//!
//!     cargo test --test acceptance -- --nocapture

mod common;

use common::*;

const DIFFERENTIAL_DOCUMENTS: usize = 500;
const GEO_CASES: usize = 10_000;
const FUZZ_CASES: usize = 1_000;
const SEED: u64 = 0x5050_A11C;

fn report(name: &str, result: &Result<String, String>) {
    match result {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(reason) => println!("FAIL  {name}: {reason}"),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn acceptance() {
    let bin = std::path::PathBuf::from(env!("CARGO_BIN_EXE_forestqb"));
    let results = [
        ("golden corpus", check_golden()),
        ("differential law", check_differential(DIFFERENTIAL_DOCUMENTS, SEED)),
        ("geo accuracy", check_geo(GEO_CASES, SEED)),
        ("dialogue suite", check_dialogue().await),
        ("end-to-end via mock endpoint", check_end_to_end(&bin).await),
        ("robustness fuzz", check_fuzz(FUZZ_CASES, SEED)),
    ];
    println!();
    for (name, result) in &results {
        report(name, result);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
