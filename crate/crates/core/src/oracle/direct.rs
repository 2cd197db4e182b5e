use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;

use chrono::{DateTime, FixedOffset};
use thiserror::Error;

use crate::compiler::CoordinateProperties;
use crate::model::{
    build_regex, validate_query, AbstractQuery, DateWindow, FilterSpec, GeoCircle, GeoCombinator, PropertyBinding,
    ValidationReport, XsdType,
};
use crate::rdf::{vocab, Graph, Term};
use crate::table::{Cell, ResultTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectError {
    #[error("document has fatal diagnostics")]
    Invalid(ValidationReport),
    #[error("geo filter present but sensor {sensor_iri} has no latitude/longitude properties")]
    GeoWithoutCoordinates { sensor_iri: String },
}

/// One (value, time) reading decoded from an observation node.
#[derive(Debug, Clone)]
struct Reading<'g> {
    value: &'g Term,
    time: &'g Term,
}

/// A candidate output row for one sensor: one slot per property.
#[derive(Debug, Clone)]
struct Row<'g> {
    time: &'g Term,
    values: Vec<Option<&'g Term>>,
}

/// Answers a query document straight from the observation records in
/// `graph`, without going through SPARQL. Columns are named like the
/// compiler's projection so the two can be compared.
pub fn eval_direct(
    q: &AbstractQuery,
    graph: &Graph,
    coords: &CoordinateProperties,
) -> Result<ResultTable, DirectError> {
    let report = validate_query(q);
    if report.has_fatal() {
        return Err(DirectError::Invalid(report));
    }
    let multi = q.sensors.len() > 1;
    let observations = decode_observations(graph);

    let mut columns = Vec::new();
    if multi {
        columns.push("sensor".to_string());
    }
    for (i, s) in q.sensors.iter().enumerate() {
        for (j, p) in s.properties.iter().enumerate() {
            if !p.hidden {
                columns.push(format!("v_{i}_{j}"));
            }
        }
        columns.push(format!("t_{i}"));
    }
    let mut table = ResultTable::new(columns);

    for (i, sensor) in q.sensors.iter().enumerate() {
        let coord_slots = if q.geo.is_empty() {
            None
        } else {
            let slot = |iri: &str| sensor.properties.iter().position(|p| p.property_iri == iri);
            match (slot(&coords.latitude), slot(&coords.longitude)) {
                (Some(lat), Some(lon)) => Some((lat, lon)),
                _ => {
                    return Err(DirectError::GeoWithoutCoordinates {
                        sensor_iri: sensor.sensor_iri.clone(),
                    })
                }
            }
        };

        let readings: Vec<Vec<Reading>> = sensor
            .properties
            .iter()
            .map(|p| readings_for(&observations, &sensor.sensor_iri, &p.property_iri))
            .collect();

        let mut rows: Option<Vec<Row>> = None;
        for j in (0..sensor.properties.len()).filter(|&j| !sensor.properties[j].optional) {
            rows = Some(match rows {
                None => readings[j]
                    .iter()
                    .map(|r| {
                        let mut values = vec![None; sensor.properties.len()];
                        values[j] = Some(r.value);
                        Row { time: r.time, values }
                    })
                    .collect(),
                Some(rows) => {
                    let mut out = Vec::new();
                    for row in rows {
                        for r in readings[j].iter().filter(|r| r.time == row.time) {
                            let mut next = row.clone();
                            next.values[j] = Some(r.value);
                            out.push(next);
                        }
                    }
                    out
                }
            });
        }
        let mut rows = rows.unwrap_or_default();

        for (j, prop) in sensor.properties.iter().enumerate().filter(|(_, p)| p.optional) {
            let mut out = Vec::new();
            for row in rows {
                let matches: Vec<&Reading> = readings[j]
                    .iter()
                    .filter(|r| r.time == row.time && passes_all(prop, Some(r.value)))
                    .collect();
                for r in &matches {
                    let mut next = row.clone();
                    next.values[j] = Some(r.value);
                    out.push(next);
                }
                if matches.is_empty() {
                    out.push(row);
                }
            }
            rows = out;
        }

        rows.retain(|row| {
            sensor
                .properties
                .iter()
                .zip(&row.values)
                .filter(|(p, _)| !p.optional)
                .all(|(p, v)| passes_all(p, *v))
                && coord_slots.is_none_or(|(lat, lon)| in_geo_set(q, row.values[lat], row.values[lon]))
                && q.date_window.as_ref().is_none_or(|w| in_window(w, row.time))
        });

        // newest first; rows whose time is not a dateTime go last
        rows.sort_by(|a, b| match (as_datetime(a.time), as_datetime(b.time)) {
            (Some(x), Some(y)) => y.cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        });

        for row in rows {
            let mut cells = Vec::new();
            if multi {
                cells.push(Cell::from_term(Some(&Term::iri(sensor.sensor_iri.clone()))));
            }
            for (k, s) in q.sensors.iter().enumerate() {
                for (j, p) in s.properties.iter().enumerate() {
                    if !p.hidden {
                        cells.push(Cell::from_term(if k == i { row.values[j] } else { None }));
                    }
                }
                cells.push(Cell::from_term((k == i).then_some(row.time)));
            }
            table.rows.push(cells);
        }
    }

    table.rows.truncate(usize::try_from(q.limit).unwrap_or(usize::MAX));
    Ok(table)
}

/// Every observation node's readings as (sensor, property, value, time)
/// combinations. A node with several values for one predicate yields one
/// combination per choice, as a conjunctive pattern would.
fn decode_observations(graph: &Graph) -> Vec<(&Term, &Term, &Term, &Term)> {
    let mut nodes: HashMap<&Term, [Vec<&Term>; 4]> = HashMap::new();
    let mut order: Vec<&Term> = Vec::new();
    let preds = [
        vocab::SOSA_MADE_BY_SENSOR,
        vocab::SOSA_OBSERVED_PROPERTY,
        vocab::SOSA_HAS_SIMPLE_RESULT,
        vocab::SOSA_RESULT_TIME,
    ];
    for t in graph.triples() {
        if let Some(k) = preds.iter().position(|p| *p == t.predicate) {
            let entry = nodes.entry(&t.subject).or_insert_with(|| {
                order.push(&t.subject);
                Default::default()
            });
            entry[k].push(&t.object);
        }
    }
    let mut out = Vec::new();
    for node in order {
        let [sensors, props, values, times] = &nodes[node];
        for s in sensors {
            for p in props {
                for v in values {
                    for t in times {
                        out.push((*s, *p, *v, *t));
                    }
                }
            }
        }
    }
    out
}

fn readings_for<'g>(obs: &[(&'g Term, &'g Term, &'g Term, &'g Term)], sensor: &str, property: &str) -> Vec<Reading<'g>> {
    obs.iter()
        .filter(|(s, p, _, _)| s.as_iri() == Some(sensor) && p.as_iri() == Some(property))
        .map(|(_, _, v, t)| Reading { value: v, time: t })
        .collect()
}

fn passes_all(prop: &PropertyBinding, value: Option<&Term>) -> bool {
    prop.filters.iter().all(|f| passes(f, prop.datatype, value))
}

/// The string a text filter sees: an IRI itself or a literal's lexical form.
fn text_of(term: &Term) -> Option<&str> {
    match term {
        Term::Iri(iri) => Some(iri),
        Term::Literal(lit) => Some(&lit.lexical),
        Term::Blank(_) => None,
    }
}

fn passes(filter: &FilterSpec, datatype: XsdType, value: Option<&Term>) -> bool {
    let Some(term) = value else {
        return false;
    };
    match filter {
        FilterSpec::Contain { text } => {
            text_of(term).is_some_and(|s| s.to_lowercase().contains(&text.to_lowercase()))
        }
        FilterSpec::Match { text } => text_of(term) == Some(text.as_str()),
        FilterSpec::Regex { pattern, flags } => match (text_of(term), build_regex(pattern, flags)) {
            (Some(s), Ok(re)) => re.is_match(s),
            _ => false,
        },
        FilterSpec::Range { min, max } => {
            let lower_ok = min
                .as_ref()
                .is_none_or(|m| matches!(order_against(term, m, datatype), Some(Ordering::Greater | Ordering::Equal)));
            let upper_ok = max
                .as_ref()
                .is_none_or(|m| matches!(order_against(term, m, datatype), Some(Ordering::Less | Ordering::Equal)));
            lower_ok && upper_ok
        }
        FilterSpec::Equals { value } => equals(term, value, datatype),
    }
}

#[derive(Debug, Clone, Copy)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(x) => x,
        }
    }

    fn cmp(self, other: Number) -> Option<Ordering> {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => Some(a.cmp(&b)),
            (a, b) => a.as_f64().partial_cmp(&b.as_f64()),
        }
    }
}

/// The numeric value of a literal whose datatype is one of the numeric XSD
/// types and whose lexical form is valid for it.
fn number_of(term: &Term) -> Option<Number> {
    let lit = term.as_literal()?;
    if lit.lang.is_some() {
        return None;
    }
    let lexical = lit.lexical.as_str();
    // unknown datatypes map to String, so only genuine XSD numerics pass
    match XsdType::from_datatype_iri(&lit.datatype) {
        XsdType::Integer => {
            XsdType::Integer.check_lexical(lexical).ok()?;
            lexical.parse().ok().map(Number::Int)
        }
        dt @ (XsdType::Decimal | XsdType::Double) => {
            dt.check_lexical(lexical).ok()?;
            lexical.parse().ok().map(Number::Float)
        }
        _ => None,
    }
}

fn as_datetime(term: &Term) -> Option<DateTime<FixedOffset>> {
    let lit = term.as_literal()?;
    if lit.datatype != vocab::XSD_DATE_TIME {
        return None;
    }
    DateTime::parse_from_rfc3339(&lit.lexical).ok()
}

fn as_boolean(term: &Term) -> Option<bool> {
    let lit = term.as_literal()?;
    if lit.datatype != vocab::XSD_BOOLEAN {
        return None;
    }
    match lit.lexical.as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Order of `term` relative to the bound `bound`, read as a `datatype`
/// value. `None` when the two are not comparable.
fn order_against(term: &Term, bound: &str, datatype: XsdType) -> Option<Ordering> {
    match datatype {
        XsdType::Integer => number_of(term)?.cmp(Number::Int(bound.parse().ok()?)),
        XsdType::Decimal | XsdType::Double => number_of(term)?.cmp(Number::Float(bound.parse().ok()?)),
        XsdType::DateTime => Some(as_datetime(term)?.cmp(&DateTime::parse_from_rfc3339(bound).ok()?)),
        XsdType::String | XsdType::Boolean | XsdType::Iri => None,
    }
}

fn equals(term: &Term, value: &str, datatype: XsdType) -> bool {
    match datatype {
        XsdType::Integer | XsdType::Decimal | XsdType::Double | XsdType::DateTime => {
            order_against(term, value, datatype) == Some(Ordering::Equal)
        }
        XsdType::Boolean => {
            let wanted = matches!(value, "true" | "1");
            as_boolean(term) == Some(wanted)
        }
        XsdType::String => matches!(term, Term::Literal(lit)
            if lit.lang.is_none() && lit.datatype == vocab::XSD_STRING && lit.lexical == value),
        XsdType::Iri => term.as_iri() == Some(value),
    }
}

fn in_window(window: &DateWindow, time: &Term) -> bool {
    let Some(t) = as_datetime(time) else {
        return false;
    };
    window.start.is_none_or(|s| t >= s.as_datetime()) && window.end.is_none_or(|e| t <= e.as_datetime())
}

fn in_circle(c: &GeoCircle, lat: f64, lon: f64) -> bool {
    let radius_m = 6_371_000.0;
    let k_lat = radius_m * PI / 180.0;
    let k_lon = radius_m * PI / 180.0 * (c.center_lat_deg * PI / 180.0).cos();
    let dy = (lat - c.center_lat_deg) * k_lat;
    let dx = (lon - c.center_lon_deg) * k_lon;
    dy * dy + dx * dx <= c.radius_meters * c.radius_meters
}

fn in_geo_set(q: &AbstractQuery, lat: Option<&Term>, lon: Option<&Term>) -> bool {
    let (Some(lat), Some(lon)) = (lat.and_then(number_of), lon.and_then(number_of)) else {
        return false;
    };
    let (lat, lon) = (lat.as_f64(), lon.as_f64());
    let mut hits = q.geo.circles.iter().map(|c| in_circle(c, lat, lon));
    match q.geo.combinator {
        GeoCombinator::Union => hits.any(|h| h),
        GeoCombinator::Intersection => hits.all(|h| h),
    }
}
