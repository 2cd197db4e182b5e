//! The abstract query document.
//!
//! Every front end (form, chat, CLI, HTTP) edits one of these and every back
//! end (compiler, direct evaluator) consumes one. The JSON layout is described
//! in `docs/schema.md`; [`serialize_query`] produces the canonical bytes.

mod json;
mod mutation;
mod validate;

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Serialize, Serializer};

pub use json::{canonicalize, parse_query, parse_query_with_default_limit, serialize_query, QueryParseError};
pub use mutation::{apply_mutation, MutationError, PropertyTemplate, QueryMutation};
pub use validate::{validate_query, Diagnostic, Severity, ValidationReport};

use crate::rdf::vocab;

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_LIMIT: u64 = 1000;
/// Half the Earth's circumference in meters; larger circles are rejected.
pub const MAX_RADIUS_METERS: f64 = 20_015_087.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AbstractQuery {
    pub version: String,
    pub sensors: Vec<SensorSelection>,
    pub date_window: Option<DateWindow>,
    pub geo: GeoFilterSet,
    pub limit: u64,
}

impl AbstractQuery {
    /// An empty document with the default limit. Not compilable until a
    /// sensor is selected.
    pub fn empty() -> Self {
        AbstractQuery {
            version: SCHEMA_VERSION.to_string(),
            sensors: Vec::new(),
            date_window: None,
            geo: GeoFilterSet::default(),
            limit: DEFAULT_LIMIT,
        }
    }

    pub fn sensor(&self, sensor_iri: &str) -> Option<&SensorSelection> {
        self.sensors.iter().find(|s| s.sensor_iri == sensor_iri)
    }
}

impl Default for AbstractQuery {
    fn default() -> Self {
        Self::empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SensorSelection {
    pub sensor_iri: String,
    pub label: String,
    pub properties: Vec<PropertyBinding>,
}

impl SensorSelection {
    pub fn property(&self, property_iri: &str) -> Option<&PropertyBinding> {
        self.properties.iter().find(|p| p.property_iri == property_iri)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyBinding {
    pub property_iri: String,
    pub label: String,
    pub datatype: XsdType,
    pub hidden: bool,
    pub optional: bool,
    pub filters: Vec<FilterSpec>,
}

impl PropertyBinding {
    pub fn new(property_iri: impl Into<String>, label: impl Into<String>, datatype: XsdType) -> Self {
        PropertyBinding {
            property_iri: property_iri.into(),
            label: label.into(),
            datatype,
            hidden: false,
            optional: false,
            filters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum XsdType {
    String,
    Integer,
    Decimal,
    Double,
    DateTime,
    Boolean,
    Iri,
}

impl XsdType {
    pub const ALL: [XsdType; 7] = [
        XsdType::String,
        XsdType::Integer,
        XsdType::Decimal,
        XsdType::Double,
        XsdType::DateTime,
        XsdType::Boolean,
        XsdType::Iri,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            XsdType::String => "string",
            XsdType::Integer => "integer",
            XsdType::Decimal => "decimal",
            XsdType::Double => "double",
            XsdType::DateTime => "dateTime",
            XsdType::Boolean => "boolean",
            XsdType::Iri => "iri",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        XsdType::ALL.into_iter().find(|t| t.as_str() == name)
    }

    /// Maps a literal datatype IRI to the closed set; anything unrecognized
    /// degrades to `String`.
    pub fn from_datatype_iri(iri: &str) -> Self {
        match iri.strip_prefix(vocab::XSD) {
            Some(
                "integer" | "int" | "long" | "short" | "byte" | "nonNegativeInteger" | "positiveInteger"
                | "negativeInteger" | "nonPositiveInteger" | "unsignedInt" | "unsignedLong" | "unsignedShort"
                | "unsignedByte",
            ) => XsdType::Integer,
            Some("decimal") => XsdType::Decimal,
            Some("double" | "float") => XsdType::Double,
            Some("dateTime" | "date" | "dateTimeStamp") => XsdType::DateTime,
            Some("boolean") => XsdType::Boolean,
            _ => XsdType::String,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, XsdType::Integer | XsdType::Decimal | XsdType::Double)
    }

    /// The filter-legality table.
    pub fn allows(self, kind: FilterKind) -> bool {
        use FilterKind::*;
        match self {
            XsdType::String => matches!(kind, Contain | Match | Regex | Equals),
            XsdType::Integer | XsdType::Decimal | XsdType::Double | XsdType::DateTime => {
                matches!(kind, Range | Equals)
            }
            XsdType::Boolean => matches!(kind, Equals),
            XsdType::Iri => matches!(kind, Equals | Match),
        }
    }

    pub fn legal_filters(self) -> Vec<FilterKind> {
        FilterKind::ALL.into_iter().filter(|k| self.allows(*k)).collect()
    }

    /// Checks that `lexical` is a valid literal of this type.
    pub fn check_lexical(self, lexical: &str) -> Result<(), String> {
        match self {
            XsdType::String => Ok(()),
            XsdType::Integer => parse_integer(lexical).map(|_| ()),
            XsdType::Decimal => parse_decimal(lexical).map(|_| ()),
            XsdType::Double => parse_double(lexical).map(|_| ()),
            XsdType::DateTime => Timestamp::parse(lexical).map(|_| ()),
            XsdType::Boolean => parse_boolean(lexical).map(|_| ()),
            XsdType::Iri => {
                if is_absolute_iri(lexical) {
                    Ok(())
                } else {
                    Err(format!("{lexical:?} is not an absolute IRI"))
                }
            }
        }
    }

    /// Orders two valid lexical forms under this type's value order. `None`
    /// for unordered types or invalid input.
    pub fn compare_lexical(self, a: &str, b: &str) -> Option<Ordering> {
        match self {
            XsdType::Integer => Some(parse_integer(a).ok()?.cmp(&parse_integer(b).ok()?)),
            XsdType::Decimal => parse_decimal(a).ok()?.partial_cmp(&parse_decimal(b).ok()?),
            XsdType::Double => parse_double(a).ok()?.partial_cmp(&parse_double(b).ok()?),
            XsdType::DateTime => Some(Timestamp::parse(a).ok()?.cmp(&Timestamp::parse(b).ok()?)),
            XsdType::String | XsdType::Boolean | XsdType::Iri => None,
        }
    }
}

impl fmt::Display for XsdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn parse_integer(s: &str) -> Result<i64, String> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("{s:?} is not an integer"));
    }
    s.parse::<i64>().map_err(|_| format!("{s:?} is out of range"))
}

pub(crate) fn parse_decimal(s: &str) -> Result<f64, String> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let ok = (!int.is_empty() || !frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
        && !(body.contains('.') && int.is_empty() && frac.is_empty());
    if !ok {
        return Err(format!("{s:?} is not a decimal"));
    }
    s.parse::<f64>().map_err(|_| format!("{s:?} is not a decimal"))
}

pub(crate) fn parse_double(s: &str) -> Result<f64, String> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    parse_decimal(mantissa).map_err(|_| format!("{s:?} is not a double"))?;
    if let Some(exp) = exponent {
        parse_integer(exp).map_err(|_| format!("{s:?} is not a double"))?;
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{s:?} is not a finite double"))
}

pub(crate) fn parse_boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("{s:?} is not a boolean")),
    }
}

/// Syntactic absolute-IRI check: a scheme, a colon, and no characters that
/// are illegal inside `<...>` in SPARQL or N-Triples.
pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !s
            .chars()
            .any(|c| c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    Contain,
    Match,
    Regex,
    Range,
    Equals,
}

impl FilterKind {
    pub const ALL: [FilterKind; 5] = [
        FilterKind::Contain,
        FilterKind::Match,
        FilterKind::Regex,
        FilterKind::Range,
        FilterKind::Equals,
    ];
}

/// A typed filter on one property. Literal values are lexical forms read
/// under the owning property's datatype.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum FilterSpec {
    /// Case-insensitive substring.
    Contain { text: String },
    /// Case-sensitive equality on the lexical form.
    Match { text: String },
    Regex { pattern: String, flags: String },
    /// Inclusive on both ends.
    Range { min: Option<String>, max: Option<String> },
    Equals { value: String },
}

impl FilterSpec {
    pub fn kind(&self) -> FilterKind {
        match self {
            FilterSpec::Contain { .. } => FilterKind::Contain,
            FilterSpec::Match { .. } => FilterKind::Match,
            FilterSpec::Regex { .. } => FilterKind::Regex,
            FilterSpec::Range { .. } => FilterKind::Range,
            FilterSpec::Equals { .. } => FilterKind::Equals,
        }
    }
}

pub const REGEX_FLAGS: &[char] = &['i', 's', 'm', 'x'];

/// Builds a matcher for a SPARQL-style REGEX pattern and flag string.
pub fn build_regex(pattern: &str, flags: &str) -> Result<regex::Regex, String> {
    let mut builder = regex::RegexBuilder::new(pattern);
    for flag in flags.chars() {
        match flag {
            'i' => builder.case_insensitive(true),
            's' => builder.dot_matches_new_line(true),
            'm' => builder.multi_line(true),
            'x' => builder.ignore_whitespace(true),
            other => return Err(format!("unsupported regex flag {other:?}")),
        };
    }
    builder.size_limit(1 << 20).build().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GeoCircle {
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub radius_meters: f64,
}

impl GeoCircle {
    pub fn new(center_lat_deg: f64, center_lon_deg: f64, radius_meters: f64) -> Self {
        GeoCircle {
            center_lat_deg,
            center_lon_deg,
            radius_meters,
        }
    }

    /// Returns a list of (field, message) problems.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(-90.0..=90.0).contains(&self.center_lat_deg) {
            out.push(("centerLatDeg", format!("latitude {} outside [-90, 90]", self.center_lat_deg)));
        }
        if !(-180.0..=180.0).contains(&self.center_lon_deg) {
            out.push(("centerLonDeg", format!("longitude {} outside [-180, 180]", self.center_lon_deg)));
        }
        if !(self.radius_meters > 0.0 && self.radius_meters <= MAX_RADIUS_METERS) {
            out.push((
                "radiusMeters",
                format!("radius {} must be in (0, {MAX_RADIUS_METERS}]", self.radius_meters),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GeoCombinator {
    #[default]
    Union,
    Intersection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GeoFilterSet {
    pub circles: Vec<GeoCircle>,
    pub combinator: GeoCombinator,
}

impl GeoFilterSet {
    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DateWindow {
    pub start: Option<Timestamp>,
    pub end: Option<Timestamp>,
}

impl DateWindow {
    pub fn problem(&self) -> Option<String> {
        match (self.start, self.end) {
            (None, None) => Some("date window needs at least one bound".to_string()),
            (Some(s), Some(e)) if s > e => Some(format!("start {s} is after end {e}")),
            _ => None,
        }
    }
}

/// UTC instant written as ISO-8601 with a `Z` suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self, String> {
        if !s.ends_with('Z') {
            return Err(format!("{s:?} is not a UTC timestamp ending in 'Z'"));
        }
        DateTime::parse_from_rfc3339(s)
            .map(|dt| Timestamp(dt.with_timezone(&Utc)))
            .map_err(|e| format!("{s:?} is not an ISO-8601 timestamp: {e}"))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(dt)
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
