//! Rule-based understanding of chat messages: an ordered regex table picks
//! the intent, fuzzy label matching resolves sensor names, and `respond`
//! turns the result into query mutations.

mod respond;

use std::collections::BTreeMap;
use std::sync::LazyLock;

use chrono::{NaiveDate, NaiveTime, TimeZone, Utc};
use regex::{Regex, RegexBuilder};
use serde::Serialize;

use crate::discovery::SensorCatalog;
use crate::model::Timestamp;

pub use respond::{respond, ChatOutcome};

pub const INTENT_THRESHOLD: f64 = 0.5;
pub const ENTITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Intent {
    ListSensors,
    DescribeEntity,
    LocateEntity,
    SelectSensor,
    AddDateRange,
    AddGeoNear,
    SetLimit,
    ExecuteQuery,
    Reset,
    Unknown,
}

impl Intent {
    pub fn name(self) -> &'static str {
        match self {
            Intent::ListSensors => "ListSensors",
            Intent::DescribeEntity => "DescribeEntity",
            Intent::LocateEntity => "LocateEntity",
            Intent::SelectSensor => "SelectSensor",
            Intent::AddDateRange => "AddDateRange",
            Intent::AddGeoNear => "AddGeoNear",
            Intent::SetLimit => "SetLimit",
            Intent::ExecuteQuery => "ExecuteQuery",
            Intent::Reset => "Reset",
            Intent::Unknown => "Unknown",
        }
    }

    pub fn from_name(name: &str) -> Option<Intent> {
        const ALL: [Intent; 10] = [
            Intent::ListSensors,
            Intent::DescribeEntity,
            Intent::LocateEntity,
            Intent::SelectSensor,
            Intent::AddDateRange,
            Intent::AddGeoNear,
            Intent::SetLimit,
            Intent::ExecuteQuery,
            Intent::Reset,
            Intent::Unknown,
        ];
        ALL.into_iter().find(|i| i.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentFrame {
    pub intent: Intent,
    pub slots: BTreeMap<String, String>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityMatch {
    pub mention: String,
    pub sensor_iri: String,
    pub score: f64,
}

struct Rule {
    intent: Intent,
    pattern: &'static str,
    slots: &'static [&'static str],
}

/// The ordered pattern table; the first rule whose regex matches (and whose
/// slots make sense) wins. Mirrored in docs/nlu-patterns.md.
const RULES: [Rule; 9] = [
    Rule {
        intent: Intent::ListSensors,
        pattern: r"^(what|which) .*sensors",
        slots: &[],
    },
    Rule {
        intent: Intent::DescribeEntity,
        pattern: r"^what is (?<entity>.+?)\??$",
        slots: &["entity"],
    },
    Rule {
        intent: Intent::LocateEntity,
        pattern: r"^(where is|find|locate|show me) (?<entity>.+?)\??$",
        slots: &["entity"],
    },
    Rule {
        intent: Intent::AddDateRange,
        pattern: r"(between|from) (?<start>.+) (and|to) (?<end>.+)",
        slots: &["start", "end"],
    },
    Rule {
        intent: Intent::AddGeoNear,
        pattern: r"within (?<radius>\d+(\.\d+)?) ?(?<unit>km|m) of (?<lat>-?\d+(\.\d+)?),? ?(?<lon>-?\d+(\.\d+)?)",
        slots: &["radius", "unit", "lat", "lon"],
    },
    Rule {
        intent: Intent::SetLimit,
        pattern: r"^limit (to )?(?<n>\d+)( rows| results)?$",
        slots: &["n"],
    },
    Rule {
        intent: Intent::SelectSensor,
        pattern: r"^(select|add|use) (sensor )?(?<entity>.+?)$",
        slots: &["entity"],
    },
    Rule {
        intent: Intent::ExecuteQuery,
        pattern: r"^(run|search|execute|go)\b",
        slots: &[],
    },
    Rule {
        intent: Intent::Reset,
        pattern: r"^(reset|clear|start over)\b",
        slots: &[],
    },
];

static COMPILED: LazyLock<Vec<(&'static Rule, Regex)>> = LazyLock::new(|| {
    RULES
        .iter()
        .map(|r| {
            let re = RegexBuilder::new(r.pattern)
                .case_insensitive(true)
                .build()
                .expect("pattern table compiles");
            (r, re)
        })
        .collect()
});

/// Whitespace-collapsed, trimmed utterance with trailing `.` and `!`
/// removed. Case is kept so slots echo what the user typed.
fn normalize(utterance: &str) -> String {
    let joined = utterance.split_whitespace().collect::<Vec<_>>().join(" ");
    joined.trim_end_matches(['.', '!']).trim_end().to_string()
}

pub fn classify(utterance: &str, _catalog: &SensorCatalog) -> IntentFrame {
    let text = normalize(utterance);
    for (rule, re) in COMPILED.iter() {
        let Some(caps) = re.captures(&text) else {
            continue;
        };
        let slots: BTreeMap<String, String> = rule
            .slots
            .iter()
            .filter_map(|name| caps.name(name).map(|m| (name.to_string(), m.as_str().trim().to_string())))
            .collect();
        if rule.intent == Intent::AddDateRange
            && (parse_date_bound(&slots["start"], false).is_none()
                || parse_date_bound(slots["end"].trim_end_matches('?'), true).is_none())
        {
            continue;
        }
        return IntentFrame {
            intent: rule.intent,
            slots,
            confidence: 1.0,
        };
    }
    IntentFrame {
        intent: Intent::Unknown,
        slots: BTreeMap::new(),
        confidence: 0.0,
    }
}

/// Reads an RFC 3339 instant or a bare `YYYY-MM-DD` date. A bare date
/// stands for the start of the day, or its last second when `end_of_day`.
pub fn parse_date_bound(text: &str, end_of_day: bool) -> Option<Timestamp> {
    let text = text.trim();
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(text) {
        return Some(Timestamp::from_datetime(dt.with_timezone(&Utc)));
    }
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").ok()?;
    let time = if end_of_day {
        NaiveTime::from_hms_opt(23, 59, 59)?
    } else {
        NaiveTime::MIN
    };
    Some(Timestamp::from_datetime(Utc.from_utc_datetime(&date.and_time(time))))
}

/// Best catalog sensor for `mention` by normalized Levenshtein similarity
/// of casefolded labels; ties go to the smallest IRI.
pub fn link_entity(mention: &str, catalog: &SensorCatalog) -> Option<EntityMatch> {
    link_entity_with_threshold(mention, catalog, ENTITY_THRESHOLD)
}

pub fn link_entity_with_threshold(mention: &str, catalog: &SensorCatalog, threshold: f64) -> Option<EntityMatch> {
    let needle = mention.trim().trim_end_matches(['?', '.', '!']).to_lowercase();
    let mut best: Option<(f64, &str)> = None;
    for sensor in &catalog.sensors {
        let score = strsim::normalized_levenshtein(&needle, &sensor.label.to_lowercase());
        let better = match best {
            None => true,
            Some((s, iri)) => score > s || (score == s && sensor.sensor_iri.as_str() < iri),
        };
        if better {
            best = Some((score, &sensor.sensor_iri));
        }
    }
    best.filter(|(score, _)| *score >= threshold).map(|(score, iri)| EntityMatch {
        mention: mention.to_string(),
        sensor_iri: iri.to_string(),
        score,
    })
}
