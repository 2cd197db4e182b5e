//! The synthetic animal-tracking graph bundled as `data/fixture.nt`.

use std::collections::BTreeSet;
use std::fmt::Write;

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rdf::vocab;

pub const NS: &str = "http://example.org/forest/";
pub const SEED: u64 = 20_200_101;

pub const TEMPERATURE: &str = "http://example.org/forest/property/temperature";
pub const SPEED: &str = "http://example.org/forest/property/speed";

/// (slug, label, number of timestamps, starting latitude, starting longitude)
pub const SENSORS: [(&str, &str, usize, f64, f64); 3] = [
    ("aqeela", "Aqeela", 70, 5.25, 117.75),
    ("bora", "Bora", 65, 5.5, 118.0),
    ("chikaku", "Chikaku", 65, 5.75, 118.25),
];

/// (property IRI, label, datatype IRI)
pub const PROPERTIES: [(&str, &str, &str); 4] = [
    (vocab::GEO_LAT, "Latitude", vocab::XSD_DECIMAL),
    (vocab::GEO_LONG, "Longitude", vocab::XSD_DECIMAL),
    (TEMPERATURE, "Temperature", vocab::XSD_DECIMAL),
    (SPEED, "Speed", vocab::XSD_DOUBLE),
];

pub const LAT_RANGE: (f64, f64) = (5.0, 6.0);
pub const LON_RANGE: (f64, f64) = (117.5, 118.5);

pub fn sensor_iri(slug: &str) -> String {
    format!("{NS}sensor/{slug}")
}

fn iri(s: &str) -> String {
    format!("<{s}>")
}

fn typed(lex: &str, dt: &str) -> String {
    format!("\"{lex}\"^^<{dt}>")
}

/// N-Triples text of the fixture. Every sensor has one observation of each
/// property at each of its timestamps; all timestamps fall in 2020 and are
/// distinct per sensor.
pub fn generate(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut line = |s: String, p: &str, o: String| {
        let _ = writeln!(out, "{s} {} {o} .", iri(p));
    };

    for (p, label, _) in PROPERTIES {
        line(iri(p), vocab::RDF_TYPE, iri(vocab::SOSA_OBSERVABLE_PROPERTY));
        line(iri(p), vocab::RDFS_LABEL, format!("\"{label}\""));
    }

    let year_start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap().timestamp();
    let year_minutes = 366 * 24 * 60;
    for (slug, label, count, lat0, lon0) in SENSORS {
        let sensor = iri(&sensor_iri(slug));
        line(sensor.clone(), vocab::RDF_TYPE, iri(vocab::SOSA_SENSOR));
        line(sensor.clone(), vocab::RDFS_LABEL, format!("\"{label}\""));
        for (p, _, _) in PROPERTIES {
            line(sensor.clone(), vocab::SOSA_OBSERVES, iri(p));
        }

        let mut minutes = BTreeSet::new();
        while minutes.len() < count {
            minutes.insert(rng.random_range(0..year_minutes));
        }
        let (mut lat, mut lon) = (lat0, lon0);
        for (k, minute) in minutes.into_iter().enumerate() {
            lat = (lat + rng.random_range(-0.03..0.03)).clamp(LAT_RANGE.0 + 0.01, LAT_RANGE.1 - 0.01);
            lon = (lon + rng.random_range(-0.03..0.03)).clamp(LON_RANGE.0 + 0.01, LON_RANGE.1 - 0.01);
            let temperature = rng.random_range(240..=340) as f64 / 10.0;
            let speed = rng.random_range(0..=4000) as f64 / 1000.0;
            let when = Utc.timestamp_opt(year_start + minute * 60, 0).unwrap();
            let time = typed(&when.format("%Y-%m-%dT%H:%M:%SZ").to_string(), vocab::XSD_DATE_TIME);
            let values = [
                typed(&format!("{lat:.5}"), vocab::XSD_DECIMAL),
                typed(&format!("{lon:.5}"), vocab::XSD_DECIMAL),
                typed(&format!("{temperature:.1}"), vocab::XSD_DECIMAL),
                typed(&format!("{speed:.3}"), vocab::XSD_DOUBLE),
            ];
            for ((p, _, _), value) in PROPERTIES.iter().zip(values) {
                let short = p.rsplit(['#', '/']).next().unwrap_or("p");
                let obs = iri(&format!("{NS}obs/{slug}/{k:03}/{short}"));
                line(obs.clone(), vocab::RDF_TYPE, iri(vocab::SOSA_OBSERVATION));
                line(obs.clone(), vocab::SOSA_MADE_BY_SENSOR, sensor.clone());
                line(obs.clone(), vocab::SOSA_OBSERVED_PROPERTY, iri(p));
                line(obs.clone(), vocab::SOSA_HAS_SIMPLE_RESULT, value);
                line(obs, vocab::SOSA_RESULT_TIME, time.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Graph;

    #[test]
    fn counts_and_ranges() {
        let g = Graph::parse_ntriples(&generate(SEED)).unwrap();
        let made_by = g.triples().iter().filter(|t| t.predicate == vocab::SOSA_MADE_BY_SENSOR).count();
        assert_eq!(made_by, 200 * 4);
        for t in g.triples() {
            if t.predicate == vocab::SOSA_RESULT_TIME {
                assert!(t.object.as_literal().unwrap().lexical.starts_with("2020-"));
            }
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(generate(SEED), generate(SEED));
        assert_ne!(generate(SEED), generate(SEED + 1));
    }
}
