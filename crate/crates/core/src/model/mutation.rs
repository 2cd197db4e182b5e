use thiserror::Error;

use super::validate::{filter_problem, EMPTY_SENSORS};
use super::*;

/// What a selected property looks like before it has filters or flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyTemplate {
    pub property_iri: String,
    pub label: String,
    pub datatype: XsdType,
}

/// An edit to a query document, shared by the chat engine and the form.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryMutation {
    /// Adds the sensor (or the missing properties of an already selected one).
    SelectSensor {
        sensor_iri: String,
        label: String,
        properties: Vec<PropertyTemplate>,
    },
    DeselectSensor { sensor_iri: String },
    AddFilter {
        sensor_iri: String,
        property_iri: String,
        filter: FilterSpec,
    },
    ClearFilters { sensor_iri: String, property_iri: String },
    SetDateWindow(DateWindow),
    ClearDateWindow,
    AddGeoCircle(GeoCircle),
    SetGeoCombinator(GeoCombinator),
    SetHidden {
        sensor_iri: String,
        property_iri: String,
        hidden: bool,
    },
    SetOptional {
        sensor_iri: String,
        property_iri: String,
        optional: bool,
    },
    SetLimit(u64),
    /// Back to an empty document, keeping the limit.
    Reset,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MutationError {
    #[error("target not found: {0}")]
    TargetNotFound(String),
    #[error("mutation would make the document invalid: {}", describe(.0))]
    InvariantViolation(Vec<Diagnostic>),
}

fn describe(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}: {}", d.path, d.message))
        .collect::<Vec<_>>()
        .join("; ")
}

fn violation(code: &'static str, path: &str, message: String) -> MutationError {
    MutationError::InvariantViolation(vec![Diagnostic {
        severity: Severity::Fatal,
        code,
        path: path.to_string(),
        message,
    }])
}

/// Applies `m` to a copy of `q`. The result is re-validated; an empty sensor
/// list is tolerated (the document is then merely not yet compilable).
pub fn apply_mutation(q: &AbstractQuery, m: &QueryMutation) -> Result<AbstractQuery, MutationError> {
    let mut out = q.clone();
    match m {
        QueryMutation::SelectSensor {
            sensor_iri,
            label,
            properties,
        } => {
            let idx = match out.sensors.iter().position(|s| &s.sensor_iri == sensor_iri) {
                Some(idx) => idx,
                None => {
                    out.sensors.push(SensorSelection {
                        sensor_iri: sensor_iri.clone(),
                        label: label.clone(),
                        properties: Vec::new(),
                    });
                    out.sensors.len() - 1
                }
            };
            let sensor = &mut out.sensors[idx];
            for template in properties {
                if sensor.property(&template.property_iri).is_none() {
                    sensor.properties.push(PropertyBinding::new(
                        template.property_iri.clone(),
                        template.label.clone(),
                        template.datatype,
                    ));
                }
            }
        }
        QueryMutation::DeselectSensor { sensor_iri } => {
            let idx = sensor_index(&out, sensor_iri)?;
            out.sensors.remove(idx);
        }
        QueryMutation::AddFilter {
            sensor_iri,
            property_iri,
            filter,
        } => {
            let prop = property_mut(&mut out, sensor_iri, property_iri)?;
            if let Some(problem) = filter_problem(filter, prop.datatype) {
                return Err(violation("filter", &format!("{sensor_iri} {property_iri}"), problem));
            }
            if !prop.filters.contains(filter) {
                prop.filters.push(filter.clone());
            }
        }
        QueryMutation::ClearFilters {
            sensor_iri,
            property_iri,
        } => property_mut(&mut out, sensor_iri, property_iri)?.filters.clear(),
        QueryMutation::SetDateWindow(window) => {
            if let Some(problem) = window.problem() {
                return Err(violation("date-window", "dateWindow", problem));
            }
            out.date_window = Some(*window);
        }
        QueryMutation::ClearDateWindow => out.date_window = None,
        QueryMutation::AddGeoCircle(circle) => {
            if let Some((field, message)) = circle.problems().into_iter().next() {
                return Err(violation("geo-bounds", &format!("geo.circles[].{field}"), message));
            }
            if !out.geo.circles.contains(circle) {
                out.geo.circles.push(*circle);
            }
        }
        QueryMutation::SetGeoCombinator(c) => out.geo.combinator = *c,
        QueryMutation::SetHidden {
            sensor_iri,
            property_iri,
            hidden,
        } => property_mut(&mut out, sensor_iri, property_iri)?.hidden = *hidden,
        QueryMutation::SetOptional {
            sensor_iri,
            property_iri,
            optional,
        } => property_mut(&mut out, sensor_iri, property_iri)?.optional = *optional,
        QueryMutation::SetLimit(n) => {
            if *n < 1 {
                return Err(violation("limit", "limit", "limit must be at least 1".to_string()));
            }
            out.limit = *n;
        }
        QueryMutation::Reset => {
            out = AbstractQuery {
                limit: out.limit,
                ..AbstractQuery::empty()
            };
        }
    }

    let fatals: Vec<Diagnostic> = validate_query(&out)
        .fatals()
        .filter(|d| d.code != EMPTY_SENSORS)
        .cloned()
        .collect();
    if fatals.is_empty() {
        Ok(out)
    } else {
        Err(MutationError::InvariantViolation(fatals))
    }
}

fn sensor_index(q: &AbstractQuery, sensor_iri: &str) -> Result<usize, MutationError> {
    q.sensors
        .iter()
        .position(|s| s.sensor_iri == sensor_iri)
        .ok_or_else(|| MutationError::TargetNotFound(format!("sensor {sensor_iri}")))
}

fn property_mut<'a>(
    q: &'a mut AbstractQuery,
    sensor_iri: &str,
    property_iri: &str,
) -> Result<&'a mut PropertyBinding, MutationError> {
    let idx = sensor_index(q, sensor_iri)?;
    q.sensors[idx]
        .properties
        .iter_mut()
        .find(|p| p.property_iri == property_iri)
        .ok_or_else(|| MutationError::TargetNotFound(format!("property {property_iri} of sensor {sensor_iri}")))
}
