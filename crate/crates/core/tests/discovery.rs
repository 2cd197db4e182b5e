mod common;

use common::*;
use forestqb::compiler::SparqlQueryText;
use forestqb::discovery::{discover_sensors_at, DiscoveryError};
use forestqb::endpoint::{EndpointClient, EndpointConfig};
use forestqb::fixture;
use forestqb::mock::MockEndpoint;
use forestqb::model::{Timestamp, XsdType};

#[tokio::test]
async fn fixture_catalog_has_three_sensors_with_four_properties() {
    let mock = MockEndpoint::start(fixture_graph()).await.unwrap();
    let catalog = fixture_catalog(&mock).await;
    let labels: Vec<&str> = catalog.sensors.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["Aqeela", "Bora", "Chikaku"]);
    for s in &catalog.sensors {
        let props: Vec<(&str, XsdType)> = s.properties.iter().map(|p| (p.label.as_str(), p.datatype)).collect();
        assert_eq!(
            props,
            [
                ("Latitude", XsdType::Decimal),
                ("Longitude", XsdType::Decimal),
                ("Speed", XsdType::Double),
                ("Temperature", XsdType::Decimal)
            ]
        );
        assert!(s.properties.iter().all(|p| p.sample_values.len() == 5));
    }
    assert_eq!(catalog.sensors[0].sensor_iri, fixture::sensor_iri("aqeela"));
}

#[tokio::test]
async fn catalog_is_reproducible_with_a_fixed_clock() {
    let mock = MockEndpoint::start(fixture_graph()).await.unwrap();
    let client = EndpointClient::new(EndpointConfig::new(mock.url())).unwrap();
    let at = Timestamp::parse("2020-01-01T00:00:00Z").unwrap();
    let a = discover_sensors_at(&client, None, at).await.unwrap();
    let b = discover_sensors_at(&client, None, at).await.unwrap();
    assert_eq!(a, b);
}

#[tokio::test]
async fn override_must_project_sensor_and_property() {
    let mock = MockEndpoint::start(fixture_graph()).await.unwrap();
    let client = EndpointClient::new(EndpointConfig::new(mock.url())).unwrap();
    let bad = SparqlQueryText {
        text: "PREFIX sosa: <http://www.w3.org/ns/sosa/>\nSELECT ?sensor WHERE { ?o sosa:madeBySensor ?sensor }".into(),
        used_prefixes: vec![],
    };
    let err = discover_sensors_at(&client, Some(&bad), Timestamp::parse("2020-01-01T00:00:00Z").unwrap())
        .await
        .unwrap_err();
    assert!(matches!(err, DiscoveryError::OverrideShape { ref missing } if missing == &["?property"]), "{err:?}");
}

#[test]
fn committed_fixture_matches_generator() {
    assert_eq!(fixture_text(), fixture::generate(fixture::SEED));
}
