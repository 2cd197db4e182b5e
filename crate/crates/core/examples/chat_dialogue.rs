//! Replays a short conversation against the fixture catalog and prints the
//! SPARQL it ends with.

use forestqb::compiler::{compile, CoordinateProperties};
use forestqb::discovery::discover_sensors;
use forestqb::endpoint::{EndpointClient, EndpointConfig};
use forestqb::mock::MockEndpoint;
use forestqb::model::{apply_mutation, AbstractQuery};
use forestqb::nlu::{classify, respond};
use forestqb::rdf::Graph;

#[tokio::main]
async fn main() {
    let nt = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixture.nt")).unwrap();
    let mock = MockEndpoint::start(Graph::parse_ntriples(&nt).unwrap()).await.unwrap();
    let client = EndpointClient::new(EndpointConfig::new(mock.url())).unwrap();
    let catalog = discover_sensors(&client, None).await.unwrap();
    let coords = CoordinateProperties::default();

    let mut q = AbstractQuery::empty();
    for text in [
        "What are the sensors?",
        "What is Aqeela?",
        "Where is aqeela?",
        "between 2020-03-01 and 2020-08-31",
        "within 15 km of 5.3, 117.8",
        "run",
    ] {
        let frame = classify(text, &catalog);
        let outcome = respond(&frame, &q, &catalog, &coords);
        for m in &outcome.mutations {
            q = apply_mutation(&q, m).unwrap();
        }
        println!("> {text}\n[{}] {}", frame.intent.name(), outcome.reply);
        if outcome.trigger_search {
            println!("(search triggered)");
        }
    }
    print!("\n{}", compile(&q, &coords).unwrap());
}
