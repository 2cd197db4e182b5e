//! Deterministic compilation of an [`AbstractQuery`] into SPARQL 1.1 SELECT.
//!
//! Every (sensor, property) pair becomes one SOSA observation pattern; the
//! patterns of a sensor are joined on a shared `sosa:resultTime` variable so
//! simultaneous readings line up in one row. Several sensors are alternatives
//! and are combined with `UNION`, with a `?sensor` discriminator column.
//!
//! Variable names are a pure function of document order: `?obs_i_j` and
//! `?v_i_j` for property `j` of sensor `i`, `?t_i` for the sensor's time.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    parse_boolean, validate_query, AbstractQuery, DateWindow, FilterSpec, GeoCircle, GeoCombinator, GeoFilterSet,
    SensorSelection, ValidationReport, XsdType,
};
use crate::rdf::{escape_literal, vocab};

/// Mean Earth radius used by the equirectangular circle test.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("document has fatal diagnostics")]
    ValidationFailed(ValidationReport),
    #[error("geo filter present but sensor {sensor_iri} has no latitude/longitude properties")]
    GeoWithoutCoordinates { sensor_iri: String },
    #[error("filter {filter} is illegal for datatype {datatype}")]
    IllegalFilter { filter: String, datatype: XsdType },
    #[error("geo filter set has no circles")]
    EmptyGeoSet,
}

/// Which observable properties carry coordinates. Geo filters bind to the
/// value variables of these two properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateProperties {
    pub latitude: String,
    pub longitude: String,
}

impl Default for CoordinateProperties {
    fn default() -> Self {
        CoordinateProperties {
            latitude: vocab::GEO_LAT.to_string(),
            longitude: vocab::GEO_LONG.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlQueryText {
    pub text: String,
    pub used_prefixes: Vec<(String, String)>,
}

impl fmt::Display for SparqlQueryText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorVars {
    pub time: String,
    pub observations: Vec<String>,
    pub values: Vec<String>,
}

/// Variable names (without the leading `?`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarTable {
    /// Present when more than one sensor is selected.
    pub sensor_column: Option<String>,
    pub sensors: Vec<SensorVars>,
}

impl VarTable {
    /// Every allocated name, in allocation order.
    pub fn all(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.sensor_column.iter().map(String::as_str).collect();
        for s in &self.sensors {
            for (obs, value) in s.observations.iter().zip(&s.values) {
                out.push(obs);
                out.push(value);
            }
            out.push(&s.time);
        }
        out
    }
}

pub fn allocate_vars(q: &AbstractQuery) -> VarTable {
    VarTable {
        sensor_column: (q.sensors.len() > 1).then(|| "sensor".to_string()),
        sensors: q
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| SensorVars {
                time: format!("t_{i}"),
                observations: (0..s.properties.len()).map(|j| format!("obs_{i}_{j}")).collect(),
                values: (0..s.properties.len()).map(|j| format!("v_{i}_{j}")).collect(),
            })
            .collect(),
    }
}

const NAMESPACES: [(&str, &str); 4] = [
    ("sosa", vocab::SOSA),
    ("xsd", vocab::XSD),
    ("geo", vocab::GEO),
    ("rdfs", vocab::RDFS),
];

/// Abbreviates IRIs in the fixed namespaces and remembers which were used.
#[derive(Debug, Default)]
pub(crate) struct PrefixWriter {
    used: [bool; NAMESPACES.len()],
}

impl PrefixWriter {
    pub(crate) fn iri(&mut self, iri: &str) -> String {
        for (i, (prefix, ns)) in NAMESPACES.iter().enumerate() {
            if let Some(local) = iri.strip_prefix(ns) {
                if is_safe_local(local) {
                    self.used[i] = true;
                    return format!("{prefix}:{local}");
                }
            }
        }
        format!("<{iri}>")
    }

    pub(crate) fn used(&self) -> Vec<(String, String)> {
        NAMESPACES
            .iter()
            .zip(self.used)
            .filter(|(_, used)| *used)
            .map(|((p, ns), _)| (p.to_string(), ns.to_string()))
            .collect()
    }

    pub(crate) fn header(&self) -> String {
        let mut out = String::new();
        for (prefix, ns) in self.used() {
            let _ = writeln!(out, "PREFIX {prefix}: <{ns}>");
        }
        out
    }
}

fn is_safe_local(local: &str) -> bool {
    !local.is_empty() && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn string_literal(s: &str) -> String {
    format!("\"{}\"", escape_literal(s))
}

/// Plain decimal token for a finite double: shortest round-trip digits,
/// never in exponent notation.
fn decimal_literal(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

fn typed_literal(datatype: XsdType, lexical: &str, prefixes: &mut PrefixWriter) -> String {
    let tagged = |local: &str, prefixes: &mut PrefixWriter| {
        format!("{}^^{}", string_literal(lexical), prefixes.iri(&format!("{}{local}", vocab::XSD)))
    };
    match datatype {
        XsdType::Integer => lexical.to_string(),
        XsdType::Decimal => tagged("decimal", prefixes),
        XsdType::Double => tagged("double", prefixes),
        XsdType::DateTime => tagged("dateTime", prefixes),
        XsdType::Boolean => match parse_boolean(lexical) {
            Ok(b) => b.to_string(),
            Err(_) => tagged("boolean", prefixes),
        },
        XsdType::String => string_literal(lexical),
        XsdType::Iri => prefixes.iri(lexical),
    }
}

/// Renders one filter as a SPARQL boolean expression over `?var`.
pub fn render_filter(filter: &FilterSpec, var: &str, datatype: XsdType) -> Result<String, CompileError> {
    render_filter_with(filter, var, datatype, &mut PrefixWriter::default())
}

fn render_filter_with(
    filter: &FilterSpec,
    var: &str,
    datatype: XsdType,
    prefixes: &mut PrefixWriter,
) -> Result<String, CompileError> {
    if !datatype.allows(filter.kind()) {
        return Err(CompileError::IllegalFilter {
            filter: format!("{:?}", filter.kind()),
            datatype,
        });
    }
    Ok(match filter {
        FilterSpec::Contain { text } => {
            format!("CONTAINS(LCASE(STR(?{var})), {})", string_literal(&text.to_lowercase()))
        }
        FilterSpec::Match { text } => format!("STR(?{var}) = {}", string_literal(text)),
        FilterSpec::Regex { pattern, flags } => format!(
            "REGEX(STR(?{var}), {}, {})",
            string_literal(pattern),
            string_literal(flags)
        ),
        FilterSpec::Range { min, max } => {
            let mut parts = Vec::new();
            if let Some(lo) = min {
                parts.push(format!("?{var} >= {}", typed_literal(datatype, lo, prefixes)));
            }
            if let Some(hi) = max {
                parts.push(format!("?{var} <= {}", typed_literal(datatype, hi, prefixes)));
            }
            format!("({})", parts.join(" && "))
        }
        FilterSpec::Equals { value } => format!("?{var} = {}", typed_literal(datatype, value, prefixes)),
    })
}

/// Meters per degree of latitude.
fn meters_per_degree_lat() -> f64 {
    EARTH_RADIUS_M * PI / 180.0
}

/// Meters per degree of longitude at the given latitude.
fn meters_per_degree_lon(lat_deg: f64) -> f64 {
    EARTH_RADIUS_M * PI / 180.0 * (lat_deg * PI / 180.0).cos()
}

fn scaled_offset(var: &str, center: f64, scale: f64) -> String {
    let shift = if center.is_sign_negative() {
        format!("?{var} + {}", decimal_literal(-center))
    } else {
        format!("?{var} - {}", decimal_literal(center))
    };
    format!("(({shift}) * {})", decimal_literal(scale))
}

fn circle_expression(c: &GeoCircle, lat_var: &str, lon_var: &str) -> String {
    let dy = scaled_offset(lat_var, c.center_lat_deg, meters_per_degree_lat());
    let dx = scaled_offset(lon_var, c.center_lon_deg, meters_per_degree_lon(c.center_lat_deg));
    let r2 = c.radius_meters * c.radius_meters;
    format!("{dy} * {dy} + {dx} * {dx} <= {}", decimal_literal(r2))
}

/// Equirectangular membership test for every circle, joined by `||` for a
/// union and `&&` for an intersection.
pub fn render_geo(geo: &GeoFilterSet, lat_var: &str, lon_var: &str) -> Result<String, CompileError> {
    match geo.circles.as_slice() {
        [] => Err(CompileError::EmptyGeoSet),
        [only] => Ok(circle_expression(only, lat_var, lon_var)),
        circles => {
            let joiner = match geo.combinator {
                GeoCombinator::Union => " || ",
                GeoCombinator::Intersection => " && ",
            };
            Ok(circles
                .iter()
                .map(|c| format!("({})", circle_expression(c, lat_var, lon_var)))
                .collect::<Vec<_>>()
                .join(joiner))
        }
    }
}

fn render_date_window(window: &DateWindow, var: &str, prefixes: &mut PrefixWriter) -> String {
    let mut parts = Vec::new();
    if let Some(start) = window.start {
        parts.push(format!("?{var} >= {}", typed_literal(XsdType::DateTime, &start.to_string(), prefixes)));
    }
    if let Some(end) = window.end {
        parts.push(format!("?{var} <= {}", typed_literal(XsdType::DateTime, &end.to_string(), prefixes)));
    }
    format!("({})", parts.join(" && "))
}

pub fn compile(q: &AbstractQuery, coords: &CoordinateProperties) -> Result<SparqlQueryText, CompileError> {
    let report = validate_query(q);
    if report.has_fatal() {
        return Err(CompileError::ValidationFailed(report));
    }
    let vars = allocate_vars(q);
    let multi = vars.sensor_column.is_some();
    let mut prefixes = PrefixWriter::default();

    let mut body = String::new();
    for (i, (sensor, sv)) in q.sensors.iter().zip(&vars.sensors).enumerate() {
        let group = render_sensor_group(q, sensor, sv, multi, coords, &mut prefixes)?;
        if multi {
            if i > 0 {
                body.push_str("  UNION\n");
            }
            body.push_str("  {\n");
            push_indented(&mut body, &group, 4);
            body.push_str("  }\n");
        } else {
            push_indented(&mut body, &group, 2);
        }
    }

    let mut projection: Vec<String> = vars.sensor_column.iter().map(|v| format!("?{v}")).collect();
    for (sensor, sv) in q.sensors.iter().zip(&vars.sensors) {
        for (prop, value) in sensor.properties.iter().zip(&sv.values) {
            if !prop.hidden {
                projection.push(format!("?{value}"));
            }
        }
        projection.push(format!("?{}", sv.time));
    }
    let order: Vec<String> = vars.sensors.iter().map(|sv| format!("DESC(?{})", sv.time)).collect();

    let mut text = prefixes.header();
    text.push('\n');
    let _ = writeln!(text, "SELECT {}", projection.join(" "));
    text.push_str("WHERE {\n");
    text.push_str(&body);
    text.push_str("}\n");
    let _ = writeln!(text, "ORDER BY {}", order.join(" "));
    let _ = writeln!(text, "LIMIT {}", q.limit);

    Ok(SparqlQueryText {
        text,
        used_prefixes: prefixes.used(),
    })
}

fn push_indented(out: &mut String, block: &str, indent: usize) {
    for line in block.lines() {
        out.extend(std::iter::repeat_n(' ', indent));
        out.push_str(line);
        out.push('\n');
    }
}

fn observation_pattern(
    obs: &str,
    sensor_term: &str,
    property_iri: &str,
    value: &str,
    time: &str,
    prefixes: &mut PrefixWriter,
) -> String {
    format!(
        "?{obs} {} {sensor_term} ;\n  {} {} ;\n  {} ?{value} ;\n  {} ?{time} .\n",
        prefixes.iri(vocab::SOSA_MADE_BY_SENSOR),
        prefixes.iri(vocab::SOSA_OBSERVED_PROPERTY),
        prefixes.iri(property_iri),
        prefixes.iri(vocab::SOSA_HAS_SIMPLE_RESULT),
        prefixes.iri(vocab::SOSA_RESULT_TIME),
    )
}

/// The group graph pattern for one sensor, without surrounding braces and
/// at zero indentation.
fn render_sensor_group(
    q: &AbstractQuery,
    sensor: &SensorSelection,
    sv: &SensorVars,
    multi: bool,
    coords: &CoordinateProperties,
    prefixes: &mut PrefixWriter,
) -> Result<String, CompileError> {
    let sensor_term = if multi {
        "?sensor".to_string()
    } else {
        prefixes.iri(&sensor.sensor_iri)
    };
    let mut out = String::new();

    let required = sensor.properties.iter().zip(sv.observations.iter().zip(&sv.values)).filter(|(p, _)| !p.optional);
    for (prop, (obs, value)) in required.clone() {
        out.push_str(&observation_pattern(obs, &sensor_term, &prop.property_iri, value, &sv.time, prefixes));
    }

    let optional = sensor.properties.iter().zip(sv.observations.iter().zip(&sv.values)).filter(|(p, _)| p.optional);
    for (prop, (obs, value)) in optional {
        let mut inner = observation_pattern(obs, &sensor_term, &prop.property_iri, value, &sv.time, prefixes);
        for filter in &prop.filters {
            let _ = writeln!(inner, "FILTER({})", render_filter_with(filter, value, prop.datatype, prefixes)?);
        }
        out.push_str("OPTIONAL {\n");
        push_indented(&mut out, &inner, 2);
        out.push_str("}\n");
    }

    if multi {
        let _ = writeln!(out, "FILTER(?sensor = {})", prefixes.iri(&sensor.sensor_iri));
    }
    for (prop, (_, value)) in required {
        for filter in &prop.filters {
            let _ = writeln!(out, "FILTER({})", render_filter_with(filter, value, prop.datatype, prefixes)?);
        }
    }

    if !q.geo.is_empty() {
        let var_of = |iri: &str| {
            sensor
                .properties
                .iter()
                .position(|p| p.property_iri == iri)
                .map(|j| sv.values[j].as_str())
        };
        let (Some(lat), Some(lon)) = (var_of(&coords.latitude), var_of(&coords.longitude)) else {
            return Err(CompileError::GeoWithoutCoordinates {
                sensor_iri: sensor.sensor_iri.clone(),
            });
        };
        let _ = writeln!(out, "FILTER({})", render_geo(&q.geo, lat, lon)?);
    }

    if let Some(window) = &q.date_window {
        let _ = writeln!(out, "FILTER({})", render_date_window(window, &sv.time, prefixes));
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PropertyBinding, Timestamp};

    fn sensor(i: usize, props: &[(&str, XsdType)]) -> SensorSelection {
        SensorSelection {
            sensor_iri: format!("http://ex.org/sensor/{i}"),
            label: format!("S{i}"),
            properties: props.iter().map(|(iri, dt)| PropertyBinding::new(*iri, "", *dt)).collect(),
        }
    }

    fn query(sensors: Vec<SensorSelection>) -> AbstractQuery {
        AbstractQuery {
            sensors,
            ..AbstractQuery::empty()
        }
    }

    #[test]
    fn one_sensor_two_properties_naming() {
        let q = query(vec![sensor(0, &[("http://ex.org/a", XsdType::String), ("http://ex.org/b", XsdType::String)])]);
        let vars = allocate_vars(&q);
        assert_eq!(vars.all(), ["obs_0_0", "v_0_0", "obs_0_1", "v_0_1", "t_0"]);
        assert_eq!(vars, allocate_vars(&q));
    }

    #[test]
    fn two_sensors_get_disjoint_names() {
        let q = query(vec![
            sensor(0, &[("http://ex.org/a", XsdType::String)]),
            sensor(1, &[("http://ex.org/a", XsdType::String)]),
        ]);
        let vars = allocate_vars(&q);
        let s0: Vec<_> = [&vars.sensors[0].time].into_iter().chain(&vars.sensors[0].values).collect();
        let s1: Vec<_> = [&vars.sensors[1].time].into_iter().chain(&vars.sensors[1].values).collect();
        assert!(s0.iter().all(|v| !s1.contains(v)));
        assert_eq!(vars.sensor_column.as_deref(), Some("sensor"));
    }

    #[test]
    fn permuting_sensors_permutes_indexes() {
        let a = sensor(0, &[("http://ex.org/a", XsdType::String)]);
        let b = sensor(1, &[("http://ex.org/x", XsdType::String), ("http://ex.org/y", XsdType::String)]);
        let ab = allocate_vars(&query(vec![a.clone(), b.clone()]));
        let ba = allocate_vars(&query(vec![b, a]));
        assert_eq!(ab.sensors[1].values.len(), ba.sensors[0].values.len());
        assert_eq!(ba.sensors[0].values, ["v_0_0", "v_0_1"]);
        assert_eq!(ab.sensors[1].values, ["v_1_0", "v_1_1"]);
    }

    #[test]
    fn contain_lowercases_and_wraps() {
        let f = FilterSpec::Contain { text: "Aqe".into() };
        assert_eq!(render_filter(&f, "v_0_0", XsdType::String).unwrap(), r#"CONTAINS(LCASE(STR(?v_0_0)), "aqe")"#);
    }

    #[test]
    fn integer_range_is_a_conjunction() {
        let f = FilterSpec::Range {
            min: Some("10".into()),
            max: Some("20".into()),
        };
        assert_eq!(render_filter(&f, "v", XsdType::Integer).unwrap(), "(?v >= 10 && ?v <= 20)");
    }

    #[test]
    fn open_datetime_range() {
        let f = FilterSpec::Range {
            min: Some("2020-01-01T00:00:00Z".into()),
            max: None,
        };
        assert_eq!(
            render_filter(&f, "v", XsdType::DateTime).unwrap(),
            r#"(?v >= "2020-01-01T00:00:00Z"^^xsd:dateTime)"#
        );
    }

    #[test]
    fn other_filter_shapes() {
        let eq = |v: &str, dt| render_filter(&FilterSpec::Equals { value: v.into() }, "v", dt).unwrap();
        assert_eq!(eq("1", XsdType::Boolean), "?v = true");
        assert_eq!(eq("2.5", XsdType::Decimal), r#"?v = "2.5"^^xsd:decimal"#);
        assert_eq!(eq("http://www.w3.org/ns/sosa/Sensor", XsdType::Iri), "?v = sosa:Sensor");
        assert_eq!(eq("say \"hi\"\n", XsdType::String), r#"?v = "say \"hi\"\n""#);
        let m = FilterSpec::Match { text: "Aqeela".into() };
        assert_eq!(render_filter(&m, "v", XsdType::Iri).unwrap(), r#"STR(?v) = "Aqeela""#);
        let r = FilterSpec::Regex {
            pattern: r"^a\d+$".into(),
            flags: "i".into(),
        };
        assert_eq!(render_filter(&r, "v", XsdType::String).unwrap(), r#"REGEX(STR(?v), "^a\\d+$", "i")"#);
    }

    #[test]
    fn illegal_filter_is_rejected() {
        let f = FilterSpec::Contain { text: "x".into() };
        assert!(matches!(
            render_filter(&f, "v", XsdType::DateTime),
            Err(CompileError::IllegalFilter { .. })
        ));
    }

    #[test]
    fn geo_rendering() {
        let mut g = GeoFilterSet::default();
        assert_eq!(render_geo(&g, "a", "b"), Err(CompileError::EmptyGeoSet));
        g.circles.push(GeoCircle::new(-4.5, 0.0, 1000.0));
        let one = render_geo(&g, "a", "b").unwrap();
        assert!(one.starts_with("((?a + 4.5) * 111194.92664455873) * ((?a + 4.5) * 111194.92664455873) + "));
        assert!(one.ends_with(" <= 1000000.0"));
        g.circles.push(GeoCircle::new(10.0, 10.0, 1000.0));
        assert_eq!(render_geo(&g, "a", "b").unwrap().matches(" || ").count(), 1);
        g.combinator = GeoCombinator::Intersection;
        assert_eq!(render_geo(&g, "a", "b").unwrap().matches(" && ").count(), 1);
    }

    #[test]
    fn decimal_literals_never_use_exponents() {
        assert_eq!(decimal_literal(1e-12), "0.000000000001");
        assert_eq!(decimal_literal(2.5e9), "2500000000.0");
        assert_eq!(decimal_literal(0.1), "0.1");
    }

    #[test]
    fn minimal_query_has_no_filters() {
        let q = query(vec![sensor(0, &[("http://ex.org/name", XsdType::String)])]);
        let out = compile(&q, &CoordinateProperties::default()).unwrap();
        assert!(!out.text.contains("FILTER"));
        assert!(!out.text.contains("UNION"));
        assert_eq!(out.used_prefixes.iter().map(|(p, _)| p.as_str()).collect::<Vec<_>>(), ["sosa"]);
        assert!(out.text.contains("SELECT ?v_0_0 ?t_0\n"));
        assert!(out.text.ends_with("ORDER BY DESC(?t_0)\nLIMIT 1000\n"));
    }

    #[test]
    fn hidden_property_is_matched_but_not_projected() {
        let mut q = query(vec![sensor(0, &[("http://ex.org/a", XsdType::String), ("http://ex.org/b", XsdType::String)])]);
        q.sensors[0].properties[0].hidden = true;
        let out = compile(&q, &CoordinateProperties::default()).unwrap().text;
        assert!(out.contains("SELECT ?v_0_1 ?t_0\n"));
        assert!(out.contains("sosa:hasSimpleResult ?v_0_0 ;"));
    }

    #[test]
    fn geo_without_coordinates_fails() {
        let mut q = query(vec![sensor(0, &[(vocab::GEO_LAT, XsdType::Decimal)])]);
        q.geo.circles.push(GeoCircle::new(0.0, 0.0, 10.0));
        assert!(matches!(
            compile(&q, &CoordinateProperties::default()),
            Err(CompileError::GeoWithoutCoordinates { .. })
        ));
    }

    #[test]
    fn invalid_documents_do_not_compile() {
        assert!(matches!(
            compile(&AbstractQuery::empty(), &CoordinateProperties::default()),
            Err(CompileError::ValidationFailed(_))
        ));
    }

    #[test]
    fn multi_sensor_union_with_discriminator() {
        let mut q = query(vec![
            sensor(0, &[("http://ex.org/a", XsdType::Integer)]),
            sensor(1, &[("http://ex.org/a", XsdType::Integer)]),
        ]);
        q.date_window = Some(DateWindow {
            start: Some(Timestamp::parse("2020-01-01T00:00:00Z").unwrap()),
            end: None,
        });
        let out = compile(&q, &CoordinateProperties::default()).unwrap().text;
        assert!(out.contains("SELECT ?sensor ?v_0_0 ?t_0 ?v_1_0 ?t_1\n"));
        assert!(out.contains("  }\n  UNION\n  {\n"));
        assert!(out.contains("FILTER(?sensor = <http://ex.org/sensor/1>)"));
        assert!(out.contains("ORDER BY DESC(?t_0) DESC(?t_1)\n"));
        assert_eq!(out.matches("^^xsd:dateTime").count(), 2);
    }

    #[test]
    fn optional_property_filters_stay_inside_optional() {
        let mut q = query(vec![sensor(0, &[("http://ex.org/a", XsdType::Integer), ("http://ex.org/b", XsdType::Integer)])]);
        q.sensors[0].properties[1].optional = true;
        q.sensors[0].properties[1].filters.push(FilterSpec::Equals { value: "3".into() });
        let out = compile(&q, &CoordinateProperties::default()).unwrap().text;
        assert!(out.contains("  OPTIONAL {\n    ?obs_0_1 "));
        assert!(out.contains("    FILTER(?v_0_1 = 3)\n  }\n"));
    }

    #[test]
    fn compile_is_deterministic() {
        let q = query(vec![sensor(0, &[(vocab::GEO_LAT, XsdType::Decimal), (vocab::GEO_LONG, XsdType::Decimal)])]);
        let first = compile(&q, &CoordinateProperties::default()).unwrap();
        for _ in 0..100 {
            assert_eq!(compile(&q, &CoordinateProperties::default()).unwrap(), first);
        }
    }
}
