//! Answers one document two ways over the fixture: by compiling to SPARQL and
//! running the reference engine, and by reading the observations directly.

use forestqb::compiler::{compile, CoordinateProperties};
use forestqb::model::parse_query;
use forestqb::oracle::{eval_direct, evaluate, parse_sparql_subset};
use forestqb::rdf::Graph;

fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let graph = Graph::parse_ntriples(&std::fs::read_to_string(format!("{dir}/data/fixture.nt")).unwrap()).unwrap();
    let name = std::env::args().nth(1).unwrap_or_else(|| "geo-union".into());
    let doc = std::fs::read_to_string(format!("{dir}/tests/golden/{name}.json")).unwrap();
    let q = parse_query(&doc).unwrap();
    let coords = CoordinateProperties::default();

    let sparql = compile(&q, &coords).unwrap();
    let via_sparql = evaluate(&parse_sparql_subset(&sparql.text).unwrap(), &graph);
    let direct = eval_direct(&q, &graph, &coords).unwrap();

    println!("{name}: {} rows via SPARQL, {} rows direct", via_sparql.rows.len(), direct.rows.len());
    println!("same rows: {}", via_sparql.same_rows(&direct));
    print!("{}", via_sparql.to_csv());
}
