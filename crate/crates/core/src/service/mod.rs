//! Configuration, predefined examples and query execution shared by the
//! HTTP API and the command line.

mod api;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{compile, CompileError, CoordinateProperties, SparqlQueryText};
use crate::endpoint::{EndpointClient, EndpointConfig, EndpointError};
use crate::model::{is_absolute_iri, parse_query, validate_query, AbstractQuery, ValidationReport, DEFAULT_LIMIT};
use crate::rdf::vocab;
use crate::table::ResultTable;

pub use api::{router, serve, start, AppState, RunningService};

pub const BUNDLED_EXAMPLES: &str = include_str!("../../data/examples.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: EndpointConfig,
    #[serde(default)]
    pub discovery_query_override: Option<String>,
    #[serde(default = "default_lat")]
    pub geo_lat_property_iri: String,
    #[serde(default = "default_lon")]
    pub geo_lon_property_iri: String,
    #[serde(default = "default_limit")]
    pub default_limit: u64,
    /// Bundled examples are served when unset.
    #[serde(default)]
    pub examples_path: Option<PathBuf>,
    #[serde(default = "default_listen")]
    pub listen_address: String,
}

fn default_endpoint() -> EndpointConfig {
    EndpointConfig::new("http://127.0.0.1:3030/ds/sparql")
}

fn default_lat() -> String {
    vocab::GEO_LAT.to_string()
}

fn default_lon() -> String {
    vocab::GEO_LONG.to_string()
}

fn default_limit() -> u64 {
    DEFAULT_LIMIT
}

fn default_listen() -> String {
    "127.0.0.1:8080".to_string()
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            endpoint: default_endpoint(),
            discovery_query_override: None,
            geo_lat_property_iri: default_lat(),
            geo_lon_property_iri: default_lon(),
            default_limit: default_limit(),
            examples_path: None,
            listen_address: default_listen(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        self.endpoint.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (key, iri) in [
            ("geoLatPropertyIri", &self.geo_lat_property_iri),
            ("geoLonPropertyIri", &self.geo_lon_property_iri),
        ] {
            if !is_absolute_iri(iri) {
                return Err(ConfigError::Invalid(format!("{key} {iri:?} is not an absolute IRI")));
            }
        }
        if self.default_limit == 0 {
            return Err(ConfigError::Invalid("defaultLimit must be positive".into()));
        }
        if let Some(path) = &self.examples_path {
            if !path.is_file() {
                return Err(ConfigError::Invalid(format!("examplesPath {} does not exist", path.display())));
            }
        }
        self.listen_address
            .parse::<SocketAddr>()
            .map_err(|e| ConfigError::Invalid(format!("listenAddress {:?}: {e}", self.listen_address)))?;
        Ok(())
    }

    pub fn coordinates(&self) -> CoordinateProperties {
        CoordinateProperties {
            latitude: self.geo_lat_property_iri.clone(),
            longitude: self.geo_lon_property_iri.clone(),
        }
    }

    pub fn discovery_override(&self) -> Option<SparqlQueryText> {
        self.discovery_query_override.as_ref().map(|text| SparqlQueryText {
            text: text.clone(),
            used_prefixes: Vec::new(),
        })
    }

    pub fn examples(&self) -> Result<Vec<ExampleEntry>, ConfigError> {
        match &self.examples_path {
            None => parse_examples(BUNDLED_EXAMPLES),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                parse_examples(&text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleEntry {
    pub name: String,
    pub description: String,
    pub query: AbstractQuery,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExample {
    name: String,
    description: String,
    query: serde_json::Value,
}

/// Reads an examples file. Each query is decoded strictly and must validate
/// without fatal diagnostics.
pub fn parse_examples(text: &str) -> Result<Vec<ExampleEntry>, ConfigError> {
    let raw: Vec<RawExample> =
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(format!("examples: {e}")))?;
    raw.into_iter()
        .map(|r| {
            let query = parse_query(&r.query.to_string())
                .map_err(|e| ConfigError::Invalid(format!("example {:?}: {e}", r.name)))?;
            if let Some(d) = validate_query(&query).fatals().next() {
                return Err(ConfigError::Invalid(format!("example {:?}: {}: {}", r.name, d.path, d.message)));
            }
            Ok(ExampleEntry {
                name: r.name,
                description: r.description,
                query,
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("document has fatal diagnostics")]
    Validation(ValidationReport),
    #[error(transparent)]
    Compile(CompileError),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
}

impl From<CompileError> for RunError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::ValidationFailed(report) => RunError::Validation(report),
            other => RunError::Compile(other),
        }
    }
}

/// Compiles `q` and executes it, returning the SPARQL alongside the rows.
pub async fn run_query(
    client: &EndpointClient,
    q: &AbstractQuery,
    coords: &CoordinateProperties,
) -> Result<(SparqlQueryText, ResultTable), RunError> {
    let sparql = compile(q, coords)?;
    let table = client.select(&sparql).await?;
    Ok((sparql, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_examples_are_valid() {
        let names: Vec<String> = parse_examples(BUNDLED_EXAMPLES).unwrap().into_iter().map(|e| e.name).collect();
        assert_eq!(names, ["locate-one-animal", "date-window", "geo-union", "geo-intersection"]);
    }

    #[test]
    fn toml_keys() {
        let c = ServiceConfig::from_toml_str(
            r#"
            listenAddress = "0.0.0.0:9000"
            defaultLimit = 50
            [endpoint]
            url = "http://localhost:7878/query"
            timeoutSeconds = 5
            method = "GET"
            "#,
        )
        .unwrap();
        assert_eq!(c.default_limit, 50);
        assert_eq!(c.endpoint.timeout_seconds, 5.0);
        assert_eq!(c.geo_lat_property_iri, vocab::GEO_LAT);
        assert!(c.check().is_ok());
        assert!(ServiceConfig::from_toml_str("colour = 1").is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        let bad = [
            ServiceConfig {
                default_limit: 0,
                ..ServiceConfig::default()
            },
            ServiceConfig {
                geo_lat_property_iri: "lat".into(),
                ..ServiceConfig::default()
            },
            ServiceConfig {
                examples_path: Some("/nonexistent/examples.json".into()),
                ..ServiceConfig::default()
            },
        ];
        assert!(bad.iter().all(|c| c.check().is_err()));
    }
}
