//! SPARQL 1.1 Protocol client for SELECT queries.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::SparqlQueryText;
use crate::table::{parse_results_json, DecodeError, ResultTable};

pub const RESULTS_JSON: &str = "application/sparql-results+json";
const EXCERPT_CHARS: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    #[default]
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default)]
    pub method: HttpMethod,
    #[serde(default)]
    pub extra_headers: Vec<(String, String)>,
}

fn default_timeout() -> f64 {
    30.0
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            timeout_seconds: default_timeout(),
            method: HttpMethod::Post,
            extra_headers: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<(), EndpointError> {
        let scheme_ok = self.url.starts_with("http://") || self.url.starts_with("https://");
        if !scheme_ok || reqwest::Url::parse(&self.url).is_err() {
            return Err(EndpointError::Config(format!("{:?} is not an http(s) URL", self.url)));
        }
        if !(self.timeout_seconds.is_finite() && self.timeout_seconds > 0.0) {
            return Err(EndpointError::Config("timeoutSeconds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EndpointError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("endpoint answered HTTP {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// A reusable client bound to one endpoint configuration. One HTTP request
/// per call, no retries.
#[derive(Debug, Clone)]
pub struct EndpointClient {
    config: EndpointConfig,
    http: reqwest::Client,
}

impl EndpointClient {
    pub fn new(config: EndpointConfig) -> Result<Self, EndpointError> {
        config.check()?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_seconds))
            .build()
            .map_err(|e| EndpointError::Config(e.to_string()))?;
        Ok(EndpointClient { config, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub async fn select(&self, query: &SparqlQueryText) -> Result<ResultTable, EndpointError> {
        let params = [("query", query.text.as_str())];
        let mut request = match self.config.method {
            HttpMethod::Post => self.http.post(&self.config.url).form(&params),
            HttpMethod::Get => self.http.get(&self.config.url).query(&params),
        };
        request = request.header(reqwest::header::ACCEPT, RESULTS_JSON);
        for (name, value) in &self.config.extra_headers {
            request = request.header(name.as_str(), value.as_str());
        }
        tracing::debug!(url = %self.config.url, bytes = query.text.len(), "sending SELECT");

        let response = request.send().await.map_err(|e| EndpointError::Network(describe(&e)))?;
        let status = response.status();
        let body = response.bytes().await.map_err(|e| EndpointError::Network(describe(&e)))?;
        if status.as_u16() >= 400 {
            let text = String::from_utf8_lossy(&body);
            return Err(EndpointError::Endpoint {
                status: status.as_u16(),
                body: text.chars().take(EXCERPT_CHARS).collect(),
            });
        }
        Ok(parse_results_json(&body)?)
    }
}

fn describe(e: &reqwest::Error) -> String {
    if e.is_timeout() {
        format!("timed out: {e}")
    } else {
        e.to_string()
    }
}

/// One-shot convenience over [`EndpointClient`].
pub async fn execute_select(config: &EndpointConfig, query: &SparqlQueryText) -> Result<ResultTable, EndpointError> {
    EndpointClient::new(config.clone())?.select(query).await
}
