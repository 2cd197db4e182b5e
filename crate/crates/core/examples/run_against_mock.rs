//! Compiles the window-and-circle document, runs it against a mock endpoint
//! serving the fixture, and prints the table as CSV.

use forestqb::compiler::CoordinateProperties;
use forestqb::endpoint::{EndpointClient, EndpointConfig};
use forestqb::mock::MockEndpoint;
use forestqb::model::parse_query;
use forestqb::rdf::Graph;
use forestqb::service::run_query;

#[tokio::main]
async fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let nt = std::fs::read_to_string(format!("{dir}/data/fixture.nt")).unwrap();
    let mock = MockEndpoint::start(Graph::parse_ntriples(&nt).unwrap()).await.unwrap();
    let doc = std::fs::read_to_string(format!("{dir}/tests/golden/aqeela-window-circle-temperature.json")).unwrap();
    let q = parse_query(&doc).unwrap();

    let client = EndpointClient::new(EndpointConfig::new(mock.url())).unwrap();
    let (sparql, table) = run_query(&client, &q, &CoordinateProperties::default()).await.unwrap();
    eprintln!("{sparql}");
    print!("{}", table.to_csv());
    eprintln!("{} rows, {} request(s) to {}", table.rows.len(), mock.request_count(), mock.url());
}
