//! Discovers sensors from an endpoint, or from the bundled fixture served by
//! the mock endpoint when no URL is given.
//!
//!     cargo run --example discover_sensors -- http://localhost:3030/ds/sparql

use forestqb::discovery::discover_sensors;
use forestqb::endpoint::{EndpointClient, EndpointConfig};
use forestqb::mock::MockEndpoint;
use forestqb::rdf::Graph;

#[tokio::main]
async fn main() {
    let mut _mock = None;
    let url = match std::env::args().nth(1) {
        Some(url) => url,
        None => {
            let nt = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixture.nt")).unwrap();
            let mock = MockEndpoint::start(Graph::parse_ntriples(&nt).unwrap()).await.unwrap();
            let url = mock.url();
            _mock = Some(mock);
            url
        }
    };
    let client = EndpointClient::new(EndpointConfig::new(url)).unwrap();
    match discover_sensors(&client, None).await {
        Ok(catalog) => {
            for s in &catalog.sensors {
                println!("{} <{}>", s.label, s.sensor_iri);
                for p in &s.properties {
                    println!("  {:<12} {:<9} e.g. {}", p.label, p.datatype.as_str(), p.sample_values.join(", "));
                }
            }
        }
        Err(e) => eprintln!("discovery failed: {e}"),
    }
}
