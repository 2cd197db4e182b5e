//! Writes the bundled fixture graph.
//!
//!     cargo run --example gen_fixture -- data/fixture.nt

use forestqb::fixture;

fn main() -> std::io::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/fixture.nt".to_string());
    let text = fixture::generate(fixture::SEED);
    std::fs::write(&path, &text)?;
    eprintln!("wrote {} triples to {path}", text.lines().count());
    Ok(())
}
