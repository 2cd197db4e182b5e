use std::cmp::Ordering;
use std::collections::HashSet;

use serde::Serialize;

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn fatals(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Fatal)
    }

    pub fn has_fatal(&self) -> bool {
        self.fatals().next().is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.diagnostics.is_empty()
    }

    fn fatal(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity: Severity::Fatal,
            code,
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &'static str, path: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity: Severity::Warning,
            code,
            path: path.into(),
            message: message.into(),
        });
    }
}

pub(super) const EMPTY_SENSORS: &str = "empty-sensors";
const LARGE_LIMIT: u64 = 100_000;

/// Checks every document invariant. An empty report means the document
/// compiles (modulo coordinate-property configuration).
pub fn validate_query(q: &AbstractQuery) -> ValidationReport {
    let mut report = ValidationReport::default();

    if q.version != SCHEMA_VERSION {
        report.fatal("version", "version", format!("unsupported schema version {:?}", q.version));
    }
    if q.limit < 1 {
        report.fatal("limit", "limit", "limit must be at least 1");
    }
    if q.sensors.is_empty() {
        report.fatal(EMPTY_SENSORS, "sensors", "at least one sensor must be selected");
    }

    let mut seen_sensors = HashSet::new();
    for (i, sensor) in q.sensors.iter().enumerate() {
        let path = format!("sensors[{i}]");
        if !is_absolute_iri(&sensor.sensor_iri) {
            report.fatal("iri", format!("{path}.sensorIri"), format!("{:?} is not an absolute IRI", sensor.sensor_iri));
        }
        if !seen_sensors.insert(sensor.sensor_iri.as_str()) {
            report.fatal("duplicate-sensor", &path, format!("sensor {} selected twice", sensor.sensor_iri));
        }
        validate_sensor(sensor, &path, &mut report);
    }

    if let Some(window) = &q.date_window {
        if let Some(problem) = window.problem() {
            report.fatal("date-window", "dateWindow", problem);
        }
    }

    if q.geo.circles.len() == 1 && q.geo.combinator == GeoCombinator::Intersection {
        report.warn(
            "lone-intersection",
            "geo.combinator",
            "intersection of a single circle is the circle itself",
        );
    }
    if q.limit > LARGE_LIMIT {
        report.warn("large-limit", "limit", format!("limit {} may return very large tables", q.limit));
    }
    for (i, circle) in q.geo.circles.iter().enumerate() {
        for (field, message) in circle.problems() {
            report.fatal("geo-bounds", format!("geo.circles[{i}].{field}"), message);
        }
    }

    report
}

fn validate_sensor(sensor: &SensorSelection, path: &str, report: &mut ValidationReport) {
    if sensor.properties.is_empty() {
        report.fatal("no-properties", format!("{path}.properties"), "sensor needs at least one property");
        return;
    }
    if sensor.properties.iter().all(|p| p.optional) {
        report.fatal(
            "all-optional",
            format!("{path}.properties"),
            "at least one property of a sensor must be non-optional",
        );
    }

    let mut seen = HashSet::new();
    for (j, prop) in sensor.properties.iter().enumerate() {
        let ppath = format!("{path}.properties[{j}]");
        if !is_absolute_iri(&prop.property_iri) {
            report.fatal("iri", format!("{ppath}.propertyIri"), format!("{:?} is not an absolute IRI", prop.property_iri));
        }
        if !seen.insert(prop.property_iri.as_str()) {
            report.fatal("duplicate-property", &ppath, format!("property {} listed twice", prop.property_iri));
        }
        for (k, filter) in prop.filters.iter().enumerate() {
            let fpath = format!("{ppath}.filters[{k}]");
            if let Some(message) = filter_problem(filter, prop.datatype) {
                report.fatal(filter_code(filter, prop.datatype), fpath, message);
            }
        }
    }
}

fn filter_code(filter: &FilterSpec, datatype: XsdType) -> &'static str {
    if datatype.allows(filter.kind()) {
        "filter-value"
    } else {
        "filter-illegal"
    }
}

/// First problem with `filter` on a property of `datatype`, if any.
pub(crate) fn filter_problem(filter: &FilterSpec, datatype: XsdType) -> Option<String> {
    if !datatype.allows(filter.kind()) {
        return Some(format!("filter {:?} illegal for datatype {datatype}", filter.kind()));
    }
    match filter {
        FilterSpec::Contain { .. } | FilterSpec::Match { .. } => None,
        FilterSpec::Regex { pattern, flags } => build_regex(pattern, flags)
            .err()
            .map(|e| format!("invalid regular expression: {e}")),
        FilterSpec::Equals { value } => datatype.check_lexical(value).err(),
        FilterSpec::Range { min, max } => {
            if min.is_none() && max.is_none() {
                return Some("range needs at least one bound".to_string());
            }
            for bound in [min, max].into_iter().flatten() {
                if let Err(e) = datatype.check_lexical(bound) {
                    return Some(e);
                }
            }
            if let (Some(lo), Some(hi)) = (min, max) {
                if datatype.compare_lexical(lo, hi) == Some(Ordering::Greater) {
                    return Some(format!("range minimum {lo} exceeds maximum {hi}"));
                }
            }
            None
        }
    }
}
