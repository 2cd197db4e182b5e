use serde_json::{Map, Value};
use thiserror::Error;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl QueryParseError {
    pub fn path(&self) -> Option<&str> {
        match self {
            QueryParseError::Schema { path, .. } => Some(path),
            QueryParseError::Syntax { .. } => None,
        }
    }
}

/// Canonical text: two-space indented JSON, keys in declaration order, all
/// keys present (`null` for absent optionals), trailing newline.
pub fn serialize_query(q: &AbstractQuery) -> String {
    let mut text = serde_json::to_string_pretty(q).expect("query documents always serialize");
    text.push('\n');
    text
}

/// Parses strictly: unknown fields, wrong types, and out-of-domain values
/// (coordinates, radius, limit, IRIs, timestamps) are rejected with a path.
pub fn parse_query(text: &str) -> Result<AbstractQuery, QueryParseError> {
    let value = parse_json(text)?;
    decode_query(&value, None)
}

/// As [`parse_query`], but a missing `limit` takes `default_limit`. Used at
/// the service boundary.
pub fn parse_query_with_default_limit(text: &str, default_limit: u64) -> Result<AbstractQuery, QueryParseError> {
    let value = parse_json(text)?;
    decode_query(&value, Some(default_limit))
}

/// `serialize(parse(text))`.
pub fn canonicalize(text: &str) -> Result<String, QueryParseError> {
    parse_query(text).map(|q| serialize_query(&q))
}

fn parse_json(text: &str) -> Result<Value, QueryParseError> {
    serde_json::from_str(text).map_err(|e| QueryParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn schema(path: &str, message: impl Into<String>) -> QueryParseError {
    QueryParseError::Schema {
        path: if path.is_empty() { "$".to_string() } else { path.to_string() },
        message: message.into(),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

/// A JSON object with its allowed and required keys checked up front.
struct Object<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Object<'a> {
    fn new(value: &'a Value, path: &str, allowed: &[&str], required: &[&str]) -> Result<Self, QueryParseError> {
        let map = value
            .as_object()
            .ok_or_else(|| schema(path, format!("expected object, found {}", kind(value))))?;
        if let Some(unknown) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(schema(&join(path, unknown), "unknown field"));
        }
        let missing: Vec<&str> = required
            .iter()
            .copied()
            .filter(|k| map.get(*k).is_none_or(Value::is_null))
            .collect();
        if !missing.is_empty() {
            return Err(schema(path, format!("missing required field(s): {}", missing.join(", "))));
        }
        Ok(Object {
            map,
            path: path.to_string(),
        })
    }

    fn path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    /// Present and non-null.
    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn req(&self, key: &str) -> &'a Value {
        self.get(key).expect("required keys are checked in Object::new")
    }

    fn string(&self, key: &str) -> Result<String, QueryParseError> {
        as_string(self.req(key), &self.path(key))
    }

    fn opt_string(&self, key: &str) -> Result<Option<String>, QueryParseError> {
        self.get(key).map(|v| as_string(v, &self.path(key))).transpose()
    }

    fn bool_or_false(&self, key: &str) -> Result<bool, QueryParseError> {
        match self.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(v) => Err(schema(&self.path(key), format!("expected boolean, found {}", kind(v)))),
        }
    }

    fn number(&self, key: &str) -> Result<f64, QueryParseError> {
        let v = self.req(key);
        v.as_f64()
            .ok_or_else(|| schema(&self.path(key), format!("expected number, found {}", kind(v))))
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>, QueryParseError> {
        let v = self.req(key);
        v.as_array()
            .ok_or_else(|| schema(&self.path(key), format!("expected array, found {}", kind(v))))
    }

    fn opt_array(&self, key: &str) -> Result<&'a [Value], QueryParseError> {
        match self.get(key) {
            None => Ok(&[]),
            Some(_) => self.array(key).map(|v| v.as_slice()),
        }
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn as_string(v: &Value, path: &str) -> Result<String, QueryParseError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, format!("expected string, found {}", kind(v))))
}

fn iri(obj: &Object<'_>, key: &str) -> Result<String, QueryParseError> {
    let s = obj.string(key)?;
    if is_absolute_iri(&s) {
        Ok(s)
    } else {
        Err(schema(&obj.path(key), format!("{s:?} is not an absolute IRI")))
    }
}

fn decode_query(value: &Value, default_limit: Option<u64>) -> Result<AbstractQuery, QueryParseError> {
    let required: &[&str] = if default_limit.is_some() {
        &["sensors"]
    } else {
        &["sensors", "limit"]
    };
    let obj = Object::new(value, "", &["version", "sensors", "dateWindow", "geo", "limit"], required)?;

    let version = obj.opt_string("version")?.unwrap_or_else(|| SCHEMA_VERSION.to_string());
    if version != SCHEMA_VERSION {
        return Err(schema("version", format!("unsupported schema version {version:?}")));
    }

    let sensors = obj
        .array("sensors")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_sensor(v, &index("sensors", i)))
        .collect::<Result<Vec<_>, _>>()?;

    let date_window = obj.get("dateWindow").map(|v| decode_date_window(v, "dateWindow")).transpose()?;

    let geo = match obj.get("geo") {
        Some(v) => decode_geo(v, "geo")?,
        None => GeoFilterSet::default(),
    };

    let limit = match obj.get("limit") {
        Some(v) => v
            .as_u64()
            .filter(|n| *n >= 1)
            .ok_or_else(|| schema("limit", "expected a positive integer"))?,
        None => default_limit.expect("limit is required when no default is supplied"),
    };

    Ok(AbstractQuery {
        version,
        sensors,
        date_window,
        geo,
        limit,
    })
}

fn decode_sensor(value: &Value, path: &str) -> Result<SensorSelection, QueryParseError> {
    let obj = Object::new(value, path, &["sensorIri", "label", "properties"], &["sensorIri", "properties"])?;
    let sensor_iri = iri(&obj, "sensorIri")?;
    let label = obj.opt_string("label")?.unwrap_or_default();
    let props_path = obj.path("properties");
    let properties = obj
        .array("properties")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_property(v, &index(&props_path, i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SensorSelection {
        sensor_iri,
        label,
        properties,
    })
}

fn decode_property(value: &Value, path: &str) -> Result<PropertyBinding, QueryParseError> {
    let obj = Object::new(
        value,
        path,
        &["propertyIri", "label", "datatype", "hidden", "optional", "filters"],
        &["propertyIri", "datatype"],
    )?;
    let property_iri = iri(&obj, "propertyIri")?;
    let label = obj.opt_string("label")?.unwrap_or_default();
    let dt_name = obj.string("datatype")?;
    let datatype = XsdType::from_name(&dt_name)
        .ok_or_else(|| schema(&obj.path("datatype"), format!("unknown datatype {dt_name:?}")))?;
    let filters_path = obj.path("filters");
    let filters = obj
        .opt_array("filters")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_filter(v, &index(&filters_path, i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PropertyBinding {
        property_iri,
        label,
        datatype,
        hidden: obj.bool_or_false("hidden")?,
        optional: obj.bool_or_false("optional")?,
        filters,
    })
}

fn decode_filter(value: &Value, path: &str) -> Result<FilterSpec, QueryParseError> {
    let tag = value
        .as_object()
        .and_then(|m| m.get("type"))
        .ok_or_else(|| schema(path, "filter needs a \"type\" field"))?;
    let tag = as_string(tag, &join(path, "type"))?;
    match tag.as_str() {
        "contain" => {
            let obj = Object::new(value, path, &["type", "text"], &["text"])?;
            Ok(FilterSpec::Contain { text: obj.string("text")? })
        }
        "match" => {
            let obj = Object::new(value, path, &["type", "text"], &["text"])?;
            Ok(FilterSpec::Match { text: obj.string("text")? })
        }
        "regex" => {
            let obj = Object::new(value, path, &["type", "pattern", "flags"], &["pattern"])?;
            let flags = obj.opt_string("flags")?.unwrap_or_default();
            if let Some(bad) = flags.chars().find(|c| !REGEX_FLAGS.contains(c)) {
                return Err(schema(&obj.path("flags"), format!("unsupported regex flag {bad:?}")));
            }
            Ok(FilterSpec::Regex {
                pattern: obj.string("pattern")?,
                flags,
            })
        }
        "range" => {
            let obj = Object::new(value, path, &["type", "min", "max"], &[])?;
            let min = obj.opt_string("min")?;
            let max = obj.opt_string("max")?;
            if min.is_none() && max.is_none() {
                return Err(schema(path, "range needs at least one bound"));
            }
            Ok(FilterSpec::Range { min, max })
        }
        "equals" => {
            let obj = Object::new(value, path, &["type", "value"], &["value"])?;
            Ok(FilterSpec::Equals { value: obj.string("value")? })
        }
        other => Err(schema(&join(path, "type"), format!("unknown filter type {other:?}"))),
    }
}

fn decode_date_window(value: &Value, path: &str) -> Result<DateWindow, QueryParseError> {
    let obj = Object::new(value, path, &["start", "end"], &[])?;
    let stamp = |key: &str| -> Result<Option<Timestamp>, QueryParseError> {
        obj.opt_string(key)?
            .map(|s| Timestamp::parse(&s).map_err(|m| schema(&obj.path(key), m)))
            .transpose()
    };
    let window = DateWindow {
        start: stamp("start")?,
        end: stamp("end")?,
    };
    if let Some(problem) = window.problem() {
        return Err(schema(path, problem));
    }
    Ok(window)
}

fn decode_geo(value: &Value, path: &str) -> Result<GeoFilterSet, QueryParseError> {
    let obj = Object::new(value, path, &["circles", "combinator"], &[])?;
    let combinator = match obj.opt_string("combinator")?.as_deref() {
        None | Some("union") => GeoCombinator::Union,
        Some("intersection") => GeoCombinator::Intersection,
        Some(other) => return Err(schema(&obj.path("combinator"), format!("unknown combinator {other:?}"))),
    };
    let circles_path = obj.path("circles");
    let circles = obj
        .opt_array("circles")?
        .iter()
        .enumerate()
        .map(|(i, v)| decode_circle(v, &index(&circles_path, i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GeoFilterSet { circles, combinator })
}

fn decode_circle(value: &Value, path: &str) -> Result<GeoCircle, QueryParseError> {
    let keys = ["centerLatDeg", "centerLonDeg", "radiusMeters"];
    let obj = Object::new(value, path, &keys, &keys)?;
    let circle = GeoCircle {
        center_lat_deg: obj.number("centerLatDeg")?,
        center_lon_deg: obj.number("centerLonDeg")?,
        radius_meters: obj.number("radiusMeters")?,
    };
    if let Some((field, message)) = circle.problems().into_iter().next() {
        return Err(schema(&obj.path(field), message));
    }
    Ok(circle)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"sensors":[{"sensorIri":"http://ex.org/s","properties":[{"propertyIri":"http://ex.org/p","datatype":"string"}]}],"limit":5}"#;

    #[test]
    fn empty_object_is_a_schema_error_naming_both_fields() {
        let err = parse_query("{}").unwrap_err();
        let QueryParseError::Schema { message, .. } = &err else {
            panic!("expected schema error, got {err:?}");
        };
        assert!(message.contains("sensors") && message.contains("limit"), "{message}");
    }

    #[test]
    fn malformed_text_is_a_syntax_error() {
        assert!(matches!(parse_query("{\"sensors\": ["), Err(QueryParseError::Syntax { .. })));
    }

    #[test]
    fn latitude_out_of_range_is_reported_at_circle_path() {
        let text = r#"{"sensors":[],"limit":1,"geo":{"circles":[{"centerLatDeg":91,"centerLonDeg":0,"radiusMeters":10}]}}"#;
        let err = parse_query(text).unwrap_err();
        assert_eq!(err.path(), Some("geo.circles[0].centerLatDeg"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"limit\":5", "\"limit\":5,\"colour\":\"red\"");
        assert_eq!(parse_query(&text).unwrap_err().path(), Some("colour"));
        let text = MINIMAL.replace("\"datatype\":\"string\"", "\"datatype\":\"string\",\"x\":1");
        assert_eq!(parse_query(&text).unwrap_err().path(), Some("sensors[0].properties[0].x"));
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let q = parse_query(MINIMAL).unwrap();
        assert_eq!(q.version, "1");
        assert_eq!(q.geo, GeoFilterSet::default());
        assert_eq!(q.date_window, None);
        let p = &q.sensors[0].properties[0];
        assert!(!p.hidden && !p.optional && p.filters.is_empty());
    }

    #[test]
    fn boundary_default_limit() {
        let text = MINIMAL.replace(",\"limit\":5", "");
        assert!(parse_query(&text).is_err());
        assert_eq!(parse_query_with_default_limit(&text, DEFAULT_LIMIT).unwrap().limit, 1000);
    }

    #[test]
    fn zero_limit_and_bad_version_rejected() {
        assert_eq!(parse_query(&MINIMAL.replace("\"limit\":5", "\"limit\":0")).unwrap_err().path(), Some("limit"));
        let v2 = MINIMAL.replacen('{', "{\"version\":\"2\",", 1);
        assert_eq!(parse_query(&v2).unwrap_err().path(), Some("version"));
    }

    #[test]
    fn filters_decode_with_paths() {
        let text = MINIMAL.replace(
            "\"datatype\":\"string\"",
            r#""datatype":"string","filters":[{"type":"regex","pattern":"^a","flags":"iq"}]"#,
        );
        assert_eq!(parse_query(&text).unwrap_err().path(), Some("sensors[0].properties[0].filters[0].flags"));
        let text = MINIMAL.replace("\"datatype\":\"string\"", r#""datatype":"integer","filters":[{"type":"range"}]"#);
        assert_eq!(parse_query(&text).unwrap_err().path(), Some("sensors[0].properties[0].filters[0]"));
    }

    #[test]
    fn date_window_order_checked() {
        let text = MINIMAL.replace(
            "\"limit\":5",
            r#""limit":5,"dateWindow":{"start":"2020-02-01T00:00:00Z","end":"2020-01-01T00:00:00Z"}"#,
        );
        assert_eq!(parse_query(&text).unwrap_err().path(), Some("dateWindow"));
    }

    #[test]
    fn canonical_form_is_field_order_independent() {
        let a = r#"{"limit":5,"sensors":[{"properties":[{"datatype":"string","propertyIri":"http://ex.org/p"}],"sensorIri":"http://ex.org/s"}]}"#;
        assert_eq!(canonicalize(a).unwrap(), canonicalize(MINIMAL).unwrap());
        let canon = canonicalize(MINIMAL).unwrap();
        assert_eq!(canonicalize(&canon).unwrap(), canon);
        assert!(canon.contains("\"dateWindow\": null"));
    }
}
