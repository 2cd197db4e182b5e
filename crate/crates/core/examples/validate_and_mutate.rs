//! Builds a document by mutations, the way the form and the chat do, and
//! shows what validation says along the way.

use forestqb::fixture;
use forestqb::model::{
    apply_mutation, serialize_query, validate_query, AbstractQuery, FilterSpec, GeoCircle, PropertyTemplate,
    QueryMutation, XsdType,
};
use forestqb::rdf::vocab;

fn main() {
    let bora = fixture::sensor_iri("bora");
    let steps = [
        QueryMutation::SelectSensor {
            sensor_iri: bora.clone(),
            label: "Bora".into(),
            properties: vec![
                PropertyTemplate {
                    property_iri: vocab::GEO_LAT.into(),
                    label: "Latitude".into(),
                    datatype: XsdType::Decimal,
                },
                PropertyTemplate {
                    property_iri: vocab::GEO_LONG.into(),
                    label: "Longitude".into(),
                    datatype: XsdType::Decimal,
                },
                PropertyTemplate {
                    property_iri: fixture::TEMPERATURE.into(),
                    label: "Temperature".into(),
                    datatype: XsdType::Decimal,
                },
            ],
        },
        QueryMutation::AddFilter {
            sensor_iri: bora.clone(),
            property_iri: fixture::TEMPERATURE.into(),
            filter: FilterSpec::Range {
                min: Some("30".into()),
                max: None,
            },
        },
        QueryMutation::AddGeoCircle(GeoCircle::new(5.5, 118.0, 12_000.0)),
        // Rejected: contains is not defined on numbers.
        QueryMutation::AddFilter {
            sensor_iri: bora.clone(),
            property_iri: fixture::TEMPERATURE.into(),
            filter: FilterSpec::Contain { text: "3".into() },
        },
        QueryMutation::SetHidden {
            sensor_iri: bora,
            property_iri: vocab::GEO_LAT.into(),
            hidden: true,
        },
    ];

    let mut q = AbstractQuery::empty();
    for m in &steps {
        match apply_mutation(&q, m) {
            Ok(next) => q = next,
            Err(e) => println!("rejected {m:?}\n  {e}"),
        }
    }
    for d in &validate_query(&q).diagnostics {
        println!("{:?} {} at {}: {}", d.severity, d.code, d.path, d.message);
    }
    print!("{}", serialize_query(&q));
}
