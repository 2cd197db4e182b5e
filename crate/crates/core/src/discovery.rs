//! Sensor and observable-property discovery over SOSA.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use chrono::Utc;
use serde::Serialize;
use thiserror::Error;

use crate::compiler::{PrefixWriter, SparqlQueryText};
use crate::endpoint::{EndpointClient, EndpointError};
use crate::model::{Timestamp, XsdType};
use crate::rdf::vocab;
use crate::table::{Cell, CellKind};

pub const SAMPLE_LIMIT: usize = 5;
pub const CATALOG_TTL: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyDescriptor {
    pub property_iri: String,
    pub label: String,
    pub datatype: XsdType,
    pub sample_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SensorDescriptor {
    pub sensor_iri: String,
    pub label: String,
    pub properties: Vec<PropertyDescriptor>,
}

impl SensorDescriptor {
    pub fn property(&self, property_iri: &str) -> Option<&PropertyDescriptor> {
        self.properties.iter().find(|p| p.property_iri == property_iri)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SensorCatalog {
    pub sensors: Vec<SensorDescriptor>,
    pub fetched_at: Timestamp,
    pub source_url: String,
}

impl SensorCatalog {
    pub fn sensor(&self, sensor_iri: &str) -> Option<&SensorDescriptor> {
        self.sensors.iter().find(|s| s.sensor_iri == sensor_iri)
    }
}

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("discovery query must project ?sensor and ?property (missing: {})", .missing.join(", "))]
    OverrideShape { missing: Vec<String> },
}

/// The built-in discovery SELECT.
pub fn default_discovery_query() -> SparqlQueryText {
    let mut p = PrefixWriter::default();
    let made_by = p.iri(vocab::SOSA_MADE_BY_SENSOR);
    let observed = p.iri(vocab::SOSA_OBSERVED_PROPERTY);
    let label = p.iri(vocab::RDFS_LABEL);
    let mut text = p.header();
    text.push('\n');
    text.push_str("SELECT DISTINCT ?sensor ?sensorLabel ?property ?propertyLabel\nWHERE {\n");
    let _ = writeln!(text, "  ?obs {made_by} ?sensor ;\n    {observed} ?property .");
    let _ = writeln!(text, "  OPTIONAL {{ ?sensor {label} ?sensorLabel }}");
    let _ = writeln!(text, "  OPTIONAL {{ ?property {label} ?propertyLabel }}");
    text.push_str("}\nORDER BY ?sensor ?property\n");
    SparqlQueryText {
        text,
        used_prefixes: p.used(),
    }
}

/// Up to [`SAMPLE_LIMIT`] result values of one (sensor, property) pair.
pub fn sample_query(sensor_iri: &str, property_iri: &str) -> SparqlQueryText {
    let mut p = PrefixWriter::default();
    let pattern = format!(
        "  ?obs {} {} ;\n    {} {} ;\n    {} ?value .\n",
        p.iri(vocab::SOSA_MADE_BY_SENSOR),
        p.iri(sensor_iri),
        p.iri(vocab::SOSA_OBSERVED_PROPERTY),
        p.iri(property_iri),
        p.iri(vocab::SOSA_HAS_SIMPLE_RESULT),
    );
    let mut text = p.header();
    text.push('\n');
    let _ = write!(text, "SELECT ?value\nWHERE {{\n{pattern}}}\nLIMIT {SAMPLE_LIMIT}\n");
    SparqlQueryText {
        text,
        used_prefixes: p.used(),
    }
}

/// Display label for an IRI with no `rdfs:label`: its fragment, else its
/// last non-empty path segment, else the IRI itself.
pub fn fallback_label(iri: &str) -> String {
    if let Some((_, frag)) = iri.rsplit_once('#') {
        if !frag.is_empty() {
            return frag.to_string();
        }
    }
    iri.trim_end_matches(['/', '#'])
        .rsplit(['/', ':'])
        .find(|s| !s.is_empty())
        .unwrap_or(iri)
        .to_string()
}

type SensorGroup = (Option<String>, BTreeMap<String, Option<String>>);

/// Maps a handful of sampled values to a datatype. Declared datatypes win
/// when every sample agrees; plain literals are probed lexically; anything
/// mixed degrades to `String`.
pub fn infer_datatype(samples: &[Cell]) -> XsdType {
    let Some(first) = samples.first() else {
        return XsdType::String;
    };
    if samples.iter().all(|c| c.kind == CellKind::Iri) {
        return XsdType::Iri;
    }
    if samples.iter().any(|c| c.kind != CellKind::Literal || c.lang.is_some()) {
        return XsdType::String;
    }
    fn declared(c: &Cell) -> Option<&str> {
        c.datatype.as_deref().filter(|d| *d != vocab::XSD_STRING)
    }
    if samples.iter().all(|c| declared(c).is_none()) {
        const PROBES: [XsdType; 4] = [XsdType::Integer, XsdType::Decimal, XsdType::DateTime, XsdType::Boolean];
        return PROBES
            .into_iter()
            .find(|t| samples.iter().all(|c| t.check_lexical(&c.value).is_ok()))
            .unwrap_or(XsdType::String);
    }
    match declared(first) {
        Some(dt) if samples.iter().all(|c| declared(c) == Some(dt)) => XsdType::from_datatype_iri(dt),
        _ => XsdType::String,
    }
}

pub async fn discover_sensors(
    client: &EndpointClient,
    override_query: Option<&SparqlQueryText>,
) -> Result<SensorCatalog, DiscoveryError> {
    discover_sensors_at(client, override_query, Timestamp::from_datetime(Utc::now())).await
}

/// [`discover_sensors`] with an explicit fetch time, for reproducible output.
pub async fn discover_sensors_at(
    client: &EndpointClient,
    override_query: Option<&SparqlQueryText>,
    fetched_at: Timestamp,
) -> Result<SensorCatalog, DiscoveryError> {
    let default_query;
    let query = match override_query {
        Some(q) => q,
        None => {
            default_query = default_discovery_query();
            &default_query
        }
    };
    let table = client.select(query).await?;

    let missing: Vec<String> = ["sensor", "property"]
        .into_iter()
        .filter(|v| table.column(v).is_none())
        .map(|v| format!("?{v}"))
        .collect();
    if !missing.is_empty() {
        return Err(DiscoveryError::OverrideShape { missing });
    }
    let col = |name: &str| table.column(name);
    let (sensor_col, property_col) = (col("sensor").unwrap_or(0), col("property").unwrap_or(0));
    let (sensor_label_col, property_label_col) = (col("sensorLabel"), col("propertyLabel"));

    // sensor IRI -> (smallest label seen, property IRI -> smallest label seen)
    let mut grouped: BTreeMap<String, SensorGroup> = BTreeMap::new();
    let label_at = |row: &[Cell], idx: Option<usize>| {
        idx.map(|i| &row[i])
            .filter(|c| c.kind == CellKind::Literal && !c.value.trim().is_empty())
            .map(|c| c.value.clone())
    };
    let keep_min = |slot: &mut Option<String>, candidate: Option<String>| {
        if let Some(c) = candidate {
            if slot.as_ref().is_none_or(|s| c < *s) {
                *slot = Some(c);
            }
        }
    };
    for row in &table.rows {
        let (s, p) = (&row[sensor_col], &row[property_col]);
        if s.kind != CellKind::Iri || p.kind != CellKind::Iri {
            continue;
        }
        let entry = grouped.entry(s.value.clone()).or_default();
        keep_min(&mut entry.0, label_at(row, sensor_label_col));
        let plabel = entry.1.entry(p.value.clone()).or_default();
        keep_min(plabel, label_at(row, property_label_col));
    }

    let mut sensors = Vec::new();
    for (sensor_iri, (label, props)) in grouped {
        let mut properties = Vec::new();
        for (property_iri, plabel) in props {
            let samples = client.select(&sample_query(&sensor_iri, &property_iri)).await?;
            let cells: Vec<Cell> = samples
                .rows
                .iter()
                .filter_map(|r| r.first().filter(|c| c.is_bound()).cloned())
                .take(SAMPLE_LIMIT)
                .collect();
            properties.push(PropertyDescriptor {
                label: plabel.unwrap_or_else(|| fallback_label(&property_iri)),
                datatype: infer_datatype(&cells),
                sample_values: cells.into_iter().map(|c| c.value).collect(),
                property_iri,
            });
        }
        properties.sort_by(|a, b| (&a.label, &a.property_iri).cmp(&(&b.label, &b.property_iri)));
        sensors.push(SensorDescriptor {
            label: label.unwrap_or_else(|| fallback_label(&sensor_iri)),
            sensor_iri,
            properties,
        });
    }
    sensors.sort_by(|a, b| (&a.label, &a.sensor_iri).cmp(&(&b.label, &b.sensor_iri)));
    tracing::info!(sensors = sensors.len(), url = %client.config().url, "catalog loaded");

    Ok(SensorCatalog {
        sensors,
        fetched_at,
        source_url: client.config().url.clone(),
    })
}

/// A catalog kept for [`CATALOG_TTL`]. Readers share the cached value;
/// refreshes are serialized so concurrent callers trigger one discovery.
pub struct CatalogCache {
    ttl: Duration,
    slot: RwLock<Option<(Instant, Arc<SensorCatalog>)>>,
    refresh: tokio::sync::Mutex<()>,
}

impl Default for CatalogCache {
    fn default() -> Self {
        CatalogCache::new(CATALOG_TTL)
    }
}

impl CatalogCache {
    pub fn new(ttl: Duration) -> Self {
        CatalogCache {
            ttl,
            slot: RwLock::new(None),
            refresh: tokio::sync::Mutex::new(()),
        }
    }

    /// The cached catalog if it has not expired.
    pub fn fresh(&self) -> Option<Arc<SensorCatalog>> {
        let slot = self.slot.read().expect("catalog lock");
        slot.as_ref()
            .filter(|(at, _)| at.elapsed() < self.ttl)
            .map(|(_, c)| c.clone())
    }

    /// The last loaded catalog, expired or not.
    pub fn latest(&self) -> Option<Arc<SensorCatalog>> {
        self.slot.read().expect("catalog lock").as_ref().map(|(_, c)| c.clone())
    }

    pub fn store(&self, catalog: SensorCatalog) -> Arc<SensorCatalog> {
        let catalog = Arc::new(catalog);
        *self.slot.write().expect("catalog lock") = Some((Instant::now(), catalog.clone()));
        catalog
    }

    pub async fn get(
        &self,
        client: &EndpointClient,
        override_query: Option<&SparqlQueryText>,
    ) -> Result<Arc<SensorCatalog>, DiscoveryError> {
        if let Some(c) = self.fresh() {
            return Ok(c);
        }
        let _guard = self.refresh.lock().await;
        if let Some(c) = self.fresh() {
            return Ok(c);
        }
        let catalog = discover_sensors(client, override_query).await?;
        Ok(self.store(catalog))
    }

    pub async fn refresh(
        &self,
        client: &EndpointClient,
        override_query: Option<&SparqlQueryText>,
    ) -> Result<Arc<SensorCatalog>, DiscoveryError> {
        let _guard = self.refresh.lock().await;
        let catalog = discover_sensors(client, override_query).await?;
        Ok(self.store(catalog))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Literal, Term};

    fn lit(v: &str, dt: &str) -> Cell {
        Cell::from_term(Some(&Term::Literal(Literal::typed(v, dt))))
    }

    fn plain(v: &str) -> Cell {
        Cell::from_term(Some(&Term::Literal(Literal::simple(v))))
    }

    #[test]
    fn declared_datatypes_map_directly() {
        assert_eq!(infer_datatype(&[lit("12", vocab::XSD_INTEGER), lit("15", vocab::XSD_INTEGER)]), XsdType::Integer);
        assert_eq!(infer_datatype(&[lit("1.5", vocab::XSD_FLOAT)]), XsdType::Double);
        assert_eq!(infer_datatype(&[lit("2020-01-01", vocab::XSD_DATE)]), XsdType::DateTime);
    }

    #[test]
    fn plain_literals_are_probed() {
        assert_eq!(infer_datatype(&[plain("2021-03-01T10:00:00Z")]), XsdType::DateTime);
        assert_eq!(infer_datatype(&[plain("1"), plain("2.5")]), XsdType::Decimal);
        assert_eq!(infer_datatype(&[plain("true")]), XsdType::Boolean);
        assert_eq!(infer_datatype(&[plain("forest")]), XsdType::String);
    }

    #[test]
    fn mixed_or_empty_is_string() {
        assert_eq!(infer_datatype(&[lit("12", vocab::XSD_INTEGER), plain("abc")]), XsdType::String);
        assert_eq!(infer_datatype(&[lit("12", vocab::XSD_INTEGER), lit("1.0", vocab::XSD_DECIMAL)]), XsdType::String);
        assert_eq!(infer_datatype(&[]), XsdType::String);
        let iri = Cell::from_term(Some(&Term::iri("http://ex.org/x")));
        assert_eq!(infer_datatype(std::slice::from_ref(&iri)), XsdType::Iri);
        assert_eq!(infer_datatype(&[iri, plain("x")]), XsdType::String);
    }

    #[test]
    fn fallback_labels() {
        assert_eq!(fallback_label("http://ex.org/animals#Aqeela"), "Aqeela");
        assert_eq!(fallback_label("http://ex.org/sensor/bora/"), "bora");
        assert_eq!(fallback_label("urn:x:chikaku"), "chikaku");
    }

    #[test]
    fn discovery_queries_are_byte_stable_and_in_subset() {
        let q = default_discovery_query();
        assert_eq!(q, default_discovery_query());
        assert!(crate::oracle::parse_sparql_subset(&q.text).is_ok());
        let s = sample_query("http://ex.org/s", "http://www.w3.org/2003/01/geo/wgs84_pos#lat");
        assert!(s.text.contains("geo:lat"));
        assert!(crate::oracle::parse_sparql_subset(&s.text).is_ok());
    }
}
