use serde::Serialize;

use super::{link_entity, parse_date_bound, Intent, IntentFrame, INTENT_THRESHOLD};
use crate::compiler::{compile, CoordinateProperties};
use crate::discovery::{SensorCatalog, SensorDescriptor};
use crate::model::{apply_mutation, AbstractQuery, DateWindow, GeoCircle, PropertyTemplate, QueryMutation};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatOutcome {
    pub reply: String,
    #[serde(skip)]
    pub mutations: Vec<QueryMutation>,
    pub trigger_search: bool,
}

impl ChatOutcome {
    fn say(reply: impl Into<String>) -> Self {
        ChatOutcome {
            reply: reply.into(),
            mutations: Vec::new(),
            trigger_search: false,
        }
    }
}

const HELP: &str = "Sorry, I did not understand that. Try \"What are the sensors?\", \
\"Where is <sensor>?\", \"between 2020-01-01 and 2020-02-01\", \
\"within 5 km of 5.5, 118.0\" or \"run\".";

/// Produces the reply and the mutations for one classified message. The
/// mutations are checked against `q` in order; if any fails, none are kept.
pub fn respond(
    frame: &IntentFrame,
    q: &AbstractQuery,
    catalog: &SensorCatalog,
    coords: &CoordinateProperties,
) -> ChatOutcome {
    let intent = if frame.confidence < INTENT_THRESHOLD {
        Intent::Unknown
    } else {
        frame.intent
    };
    let slot = |name: &str| frame.slots.get(name).map(String::as_str).unwrap_or("");

    let (reply, mutations) = match intent {
        Intent::ListSensors => return ChatOutcome::say(list_sensors(catalog)),
        Intent::DescribeEntity => {
            let Some(sensor) = resolve(slot("entity"), catalog) else {
                return ChatOutcome::say(unknown_sensor(slot("entity")));
            };
            return ChatOutcome::say(describe(sensor));
        }
        Intent::LocateEntity => {
            let Some(sensor) = resolve(slot("entity"), catalog) else {
                return ChatOutcome::say(unknown_sensor(slot("entity")));
            };
            let templates: Vec<PropertyTemplate> = [&coords.latitude, &coords.longitude]
                .into_iter()
                .filter_map(|iri| sensor.property(iri))
                .map(template)
                .collect();
            if templates.len() < 2 {
                return ChatOutcome::say(format!(
                    "{} does not report a latitude and longitude, so I cannot locate it. \
                     Which of its properties should I show instead?",
                    sensor.label
                ));
            }
            let m = QueryMutation::SelectSensor {
                sensor_iri: sensor.sensor_iri.clone(),
                label: sensor.label.clone(),
                properties: templates,
            };
            (format!("Here is where {} has been.", sensor.label), vec![m])
        }
        Intent::SelectSensor => {
            let Some(sensor) = resolve(slot("entity"), catalog) else {
                return ChatOutcome::say(unknown_sensor(slot("entity")));
            };
            let m = QueryMutation::SelectSensor {
                sensor_iri: sensor.sensor_iri.clone(),
                label: sensor.label.clone(),
                properties: sensor.properties.iter().map(template).collect(),
            };
            (format!("Added {} to the query.", sensor.label), vec![m])
        }
        Intent::AddDateRange => {
            let start = parse_date_bound(slot("start"), false);
            let end = parse_date_bound(slot("end").trim_end_matches('?'), true);
            let (Some(start), Some(end)) = (start, end) else {
                return ChatOutcome::say("Sorry, I could not read those dates. Use YYYY-MM-DD.");
            };
            let m = QueryMutation::SetDateWindow(DateWindow {
                start: Some(start),
                end: Some(end),
            });
            (format!("Only showing readings from {start} to {end}."), vec![m])
        }
        Intent::AddGeoNear => {
            let number = |name: &str| slot(name).parse::<f64>().ok();
            let (Some(radius), Some(lat), Some(lon)) = (number("radius"), number("lat"), number("lon")) else {
                return ChatOutcome::say("Sorry, I could not read that area.");
            };
            let meters = if slot("unit").eq_ignore_ascii_case("km") {
                radius * 1000.0
            } else {
                radius
            };
            let m = QueryMutation::AddGeoCircle(GeoCircle::new(lat, lon, meters));
            (format!("Only showing readings within {meters} m of ({lat}, {lon})."), vec![m])
        }
        Intent::SetLimit => {
            let Ok(n) = slot("n").parse::<u64>() else {
                return ChatOutcome::say("Sorry, that limit is too large.");
            };
            (format!("Showing at most {n} rows."), vec![QueryMutation::SetLimit(n)])
        }
        Intent::ExecuteQuery => {
            if q.sensors.is_empty() {
                return ChatOutcome::say("Select a sensor first, for example \"Where is <sensor>?\".");
            }
            return match compile(q, coords) {
                Ok(_) => ChatOutcome {
                    reply: "Running the query.".into(),
                    mutations: Vec::new(),
                    trigger_search: true,
                },
                Err(e) => ChatOutcome::say(format!("The query cannot run yet: {e}")),
            };
        }
        Intent::Reset => ("Starting over with an empty query.".to_string(), vec![QueryMutation::Reset]),
        Intent::Unknown => return ChatOutcome::say(HELP),
    };

    let mut current = q.clone();
    for m in &mutations {
        match apply_mutation(&current, m) {
            Ok(next) => current = next,
            Err(e) => return ChatOutcome::say(format!("Sorry, I cannot do that: {e}")),
        }
    }
    let trigger_search = intent == Intent::LocateEntity && compile(&current, coords).is_ok();
    ChatOutcome {
        reply,
        mutations,
        trigger_search,
    }
}

fn resolve<'a>(mention: &str, catalog: &'a SensorCatalog) -> Option<&'a SensorDescriptor> {
    let m = link_entity(mention, catalog)?;
    catalog.sensor(&m.sensor_iri)
}

fn template(p: &crate::discovery::PropertyDescriptor) -> PropertyTemplate {
    PropertyTemplate {
        property_iri: p.property_iri.clone(),
        label: p.label.clone(),
        datatype: p.datatype,
    }
}

fn join_labels<'a>(labels: impl Iterator<Item = &'a str>) -> String {
    let labels: Vec<&str> = labels.collect();
    match labels.split_last() {
        None => String::new(),
        Some((last, [])) => last.to_string(),
        Some((last, rest)) => format!("{} and {last}", rest.join(", ")),
    }
}

fn list_sensors(catalog: &SensorCatalog) -> String {
    match catalog.sensors.len() {
        0 => "I don't know any sensors yet.".into(),
        1 => format!("There is one sensor: {}.", catalog.sensors[0].label),
        n => format!(
            "There are {n} sensors: {}.",
            join_labels(catalog.sensors.iter().map(|s| s.label.as_str()))
        ),
    }
}

fn describe(sensor: &SensorDescriptor) -> String {
    if sensor.properties.is_empty() {
        return format!("{} is a sensor with no observed properties.", sensor.label);
    }
    format!(
        "{} is a sensor that reports {}.",
        sensor.label,
        join_labels(sensor.properties.iter().map(|p| p.label.as_str()))
    )
}

fn unknown_sensor(mention: &str) -> String {
    format!("I don't know a sensor called \"{mention}\".")
}
