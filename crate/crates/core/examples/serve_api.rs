//! Starts the HTTP API against a mock endpoint serving the fixture, makes a
//! few requests, and optionally keeps serving.
//!
//!     cargo run --example serve_api -- --stay

use std::time::Duration;

use forestqb::endpoint::EndpointConfig;
use forestqb::mock::MockEndpoint;
use forestqb::rdf::Graph;
use forestqb::service::{start, ServiceConfig};

#[tokio::main]
async fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let nt = std::fs::read_to_string(format!("{dir}/data/fixture.nt")).unwrap();
    let mock = MockEndpoint::start(Graph::parse_ntriples(&nt).unwrap()).await.unwrap();
    let svc = start(ServiceConfig {
        endpoint: EndpointConfig::new(mock.url()),
        listen_address: "127.0.0.1:0".into(),
        ..ServiceConfig::default()
    })
    .await
    .unwrap();
    let base = svc.base_url();
    println!("API at {base}");

    let http = reqwest::Client::new();
    while http.get(format!("{base}/api/health")).send().await.unwrap().status() != 200 {
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let chat = http
        .post(format!("{base}/api/chat"))
        .body(r#"{"sessionId":"demo","message":"Where is aqeela?"}"#)
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    println!("POST /api/chat -> {chat}");
    let doc = std::fs::read_to_string(format!("{dir}/tests/golden/aqeela-location.json")).unwrap();
    let compiled = http.post(format!("{base}/api/compile")).body(doc).send().await.unwrap().text().await.unwrap();
    println!("POST /api/compile -> {compiled}");

    if std::env::args().any(|a| a == "--stay") {
        println!("serving until Ctrl-C");
        let _ = tokio::signal::ctrl_c().await;
    }
}
