//! Shared fixtures, generators and independent oracles for the integration
//! tests. The `check_*` functions are the acceptance criteria; each returns a
//! one-line detail on success and a reason on failure.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use forestqb::compiler::{compile, CoordinateProperties};
use forestqb::discovery::{discover_sensors, SensorCatalog};
use forestqb::endpoint::{EndpointClient, EndpointConfig};
use forestqb::mock::MockEndpoint;
use forestqb::model::{
    apply_mutation, parse_query, validate_query, AbstractQuery, DateWindow, FilterSpec, GeoCircle, GeoCombinator,
    GeoFilterSet, PropertyBinding, SensorSelection, Timestamp, XsdType,
};
use forestqb::nlu::{classify, respond, Intent};
use forestqb::oracle::{eval_direct, evaluate, parse_sparql_subset};
use forestqb::rdf::{vocab, Graph, Literal, Term, Triple};
use forestqb::table::ResultTable;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_text() -> String {
    std::fs::read_to_string(crate_dir().join("data/fixture.nt")).expect("fixture present")
}

pub fn fixture_graph() -> Graph {
    Graph::parse_ntriples(&fixture_text()).expect("fixture parses")
}

pub fn coords() -> CoordinateProperties {
    CoordinateProperties::default()
}

pub struct GoldenPair {
    pub name: String,
    pub json_path: PathBuf,
    pub rq_path: PathBuf,
    pub json: String,
}

impl GoldenPair {
    pub fn query(&self) -> AbstractQuery {
        parse_query(&self.json).unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    pub fn expected(&self) -> Option<String> {
        std::fs::read_to_string(&self.rq_path).ok()
    }
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests/golden")
}

pub fn golden_pairs() -> Vec<GoldenPair> {
    let mut pairs: Vec<GoldenPair> = std::fs::read_dir(golden_dir())
        .expect("golden dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|json_path| GoldenPair {
            name: json_path.file_stem().unwrap().to_string_lossy().into_owned(),
            rq_path: json_path.with_extension("rq"),
            json: std::fs::read_to_string(&json_path).unwrap(),
            json_path,
        })
        .collect();
    pairs.sort_by(|a, b| a.name.cmp(&b.name));
    pairs
}

pub fn golden(name: &str) -> GoldenPair {
    golden_pairs()
        .into_iter()
        .find(|p| p.name == name)
        .unwrap_or_else(|| panic!("no golden {name}"))
}

/// Great-circle distance in meters on a sphere of radius 6,371,000 m.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * a.sqrt().asin()
}

// ---------------------------------------------------------------------------
// Random documents and graphs for the differential law.

const EX: &str = "http://ex.org/";

struct PropKind {
    iri: &'static str,
    label: &'static str,
    datatype: XsdType,
    values: &'static [&'static str],
    operands: &'static [&'static str],
}

const DT_POOL: &[&str] = &[
    "2020-01-05T00:00:00Z",
    "2020-02-10T06:30:00Z",
    "2020-03-15T12:00:00Z",
    "2020-04-20T18:45:00Z",
    "2020-05-25T23:59:59Z",
    "2020-06-30T08:15:00Z",
    "2020-08-01T10:00:00Z",
    "2020-09-09T09:09:09Z",
    "2020-10-31T20:20:20Z",
    "2020-12-24T16:00:00Z",
];

const KINDS: &[PropKind] = &[
    PropKind {
        iri: vocab::GEO_LAT,
        label: "Latitude",
        datatype: XsdType::Decimal,
        values: &["5.0", "5.05", "5.1", "5.12", "5.2", "5.31"],
        operands: &["5.05", "5.1", "5.2"],
    },
    PropKind {
        iri: vocab::GEO_LONG,
        label: "Longitude",
        datatype: XsdType::Decimal,
        values: &["117.9", "117.95", "118.0", "118.04", "118.1", "118.3"],
        operands: &["117.95", "118.0", "118.1"],
    },
    PropKind {
        iri: "http://ex.org/p/count",
        label: "Count",
        datatype: XsdType::Integer,
        values: &["-3", "0", "7", "12", "042", "+5"],
        operands: &["-1", "0", "7", "10", "+5", "42"],
    },
    PropKind {
        iri: "http://ex.org/p/temp",
        label: "Temperature",
        datatype: XsdType::Decimal,
        values: &["1.5", "2", "-0.25", "3.75", "10.0"],
        operands: &["0", "1.5", "2.0", "3", "-0.25"],
    },
    PropKind {
        iri: "http://ex.org/p/speed",
        label: "Speed",
        datatype: XsdType::Double,
        values: &["1.5E0", "2e1", "-0.5", "3", "1.0e-1"],
        operands: &["0", "1.5", "2E1", "-1e0", "0.1"],
    },
    PropKind {
        iri: "http://ex.org/p/note",
        label: "Note",
        datatype: XsdType::String,
        values: &["river bank", "River", "forest \"edge\"", "back\\slash", "", "Ünïcode", "a.b*c"],
        operands: &["river", "RIV", "\"", "\\", ".", "bank", "Ünï", "River"],
    },
    PropKind {
        iri: "http://ex.org/p/active",
        label: "Active",
        datatype: XsdType::Boolean,
        values: &["true", "false", "1", "0"],
        operands: &["true", "false", "1", "0"],
    },
    PropKind {
        iri: "http://ex.org/p/seen",
        label: "Seen",
        datatype: XsdType::DateTime,
        values: &["2020-01-01T00:00:00Z", "2020-06-15T12:30:00Z", "2020-06-15T14:30:00+02:00", "2021-01-01T00:00:00Z"],
        operands: &["2020-01-01T00:00:00Z", "2020-06-15T12:30:00Z", "2020-12-31T23:59:59Z"],
    },
    PropKind {
        iri: "http://ex.org/p/habitat",
        label: "Habitat",
        datatype: XsdType::Iri,
        values: &["http://ex.org/h/lowland", "http://ex.org/h/ridge"],
        operands: &["http://ex.org/h/lowland", "http://ex.org/h/ridge", "http://ex.org/h/none"],
    },
];

const REGEX_POOL: &[&str] = &["^riv", "bank$", "b.nk", "\\\\", "\"", "[a-c]+", "^$", "\\.b\\*", "Ü"];

fn sensor_iri(i: usize) -> String {
    format!("{EX}sensor/s{i}")
}

fn datatype_iri(t: XsdType) -> &'static str {
    match t {
        XsdType::Integer => vocab::XSD_INTEGER,
        XsdType::Decimal => vocab::XSD_DECIMAL,
        XsdType::Double => vocab::XSD_DOUBLE,
        XsdType::DateTime => vocab::XSD_DATE_TIME,
        XsdType::Boolean => vocab::XSD_BOOLEAN,
        XsdType::String | XsdType::Iri => vocab::XSD_STRING,
    }
}

fn random_filter(rng: &mut ChaCha8Rng, kind: &PropKind) -> FilterSpec {
    let legal = kind.datatype.legal_filters();
    let pick = |rng: &mut ChaCha8Rng| kind.operands.choose(rng).unwrap().to_string();
    match *legal.choose(rng).unwrap() {
        forestqb::model::FilterKind::Contain => FilterSpec::Contain { text: pick(rng) },
        forestqb::model::FilterKind::Match => FilterSpec::Match { text: pick(rng) },
        forestqb::model::FilterKind::Equals => FilterSpec::Equals { value: pick(rng) },
        forestqb::model::FilterKind::Regex => FilterSpec::Regex {
            pattern: REGEX_POOL.choose(rng).unwrap().to_string(),
            flags: ["", "i", "s", "im"].choose(rng).unwrap().to_string(),
        },
        forestqb::model::FilterKind::Range => {
            let mut a = pick(rng);
            let mut b = pick(rng);
            if kind.datatype.compare_lexical(&a, &b) == Some(std::cmp::Ordering::Greater) {
                std::mem::swap(&mut a, &mut b);
            }
            match rng.random_range(0..3) {
                0 => FilterSpec::Range { min: Some(a), max: None },
                1 => FilterSpec::Range { min: None, max: Some(b) },
                _ => FilterSpec::Range { min: Some(a), max: Some(b) },
            }
        }
    }
}

/// A random document; may be invalid, callers filter with `validate_query`.
pub fn random_document(rng: &mut ChaCha8Rng) -> AbstractQuery {
    let with_geo = rng.random_bool(0.3);
    let n_sensors = rng.random_range(1..=3);
    let mut sensor_ids: Vec<usize> = (0..4).collect();
    let mut sensors = Vec::new();
    for _ in 0..n_sensors {
        let id = sensor_ids.remove(rng.random_range(0..sensor_ids.len()));
        let mut kinds: Vec<usize> = if with_geo { vec![0, 1] } else { Vec::new() };
        let extra = rng.random_range(if with_geo { 0..=1 } else { 1..=3 });
        while kinds.len() < (if with_geo { 2 } else { 0 }) + extra {
            let k = rng.random_range(0..KINDS.len());
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        for i in (1..kinds.len()).rev() {
            let j = rng.random_range(0..=i);
            kinds.swap(i, j);
        }
        let properties = kinds
            .into_iter()
            .map(|k| {
                let kind = &KINDS[k];
                let mut p = PropertyBinding::new(kind.iri, kind.label, kind.datatype);
                p.hidden = rng.random_bool(0.2);
                p.optional = rng.random_bool(0.25);
                for _ in 0..rng.random_range(0..=2) {
                    if rng.random_bool(0.6) {
                        p.filters.push(random_filter(rng, kind));
                    }
                }
                p
            })
            .collect();
        sensors.push(SensorSelection {
            sensor_iri: sensor_iri(id),
            label: format!("S{id}"),
            properties,
        });
    }

    let date_window = rng.random_bool(0.3).then(|| {
        let mut a = *DT_POOL.choose(rng).unwrap();
        let mut b = *DT_POOL.choose(rng).unwrap();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let ts = |s: &str| Some(Timestamp::parse(s).unwrap());
        match rng.random_range(0..3) {
            0 => DateWindow { start: ts(a), end: None },
            1 => DateWindow { start: None, end: ts(b) },
            _ => DateWindow { start: ts(a), end: ts(b) },
        }
    });

    let mut geo = GeoFilterSet::default();
    if with_geo {
        for _ in 0..rng.random_range(1..=3) {
            geo.circles.push(GeoCircle::new(
                rng.random_range(5.0..5.3),
                rng.random_range(117.9..118.2),
                rng.random_range(2_000.0..20_000.0),
            ));
        }
        if geo.circles.len() > 1 && rng.random_bool(0.5) {
            geo.combinator = GeoCombinator::Intersection;
        }
    }

    AbstractQuery {
        sensors,
        date_window,
        geo,
        limit: *[1u64, 2, 3, 5, 1000].choose(rng).unwrap(),
        ..AbstractQuery::empty()
    }
}

/// A random SOSA graph with at most `max_obs` observations. Each (sensor,
/// property, time) has at most one observation; times are distinct instants.
pub fn random_graph(rng: &mut ChaCha8Rng, max_obs: usize) -> Graph {
    let mut triples = Vec::new();
    let mut n = 0;
    'sensors: for s in 0..3 {
        let sensor = Term::iri(sensor_iri(s));
        let kinds: Vec<usize> = (0..KINDS.len()).filter(|_| rng.random_bool(0.6)).collect();
        let mut times: Vec<&str> = DT_POOL.to_vec();
        let n_times = rng.random_range(1..=5);
        for _ in 0..DT_POOL.len() - n_times {
            times.remove(rng.random_range(0..times.len()));
        }
        for (ti, time) in times.iter().enumerate() {
            for &k in &kinds {
                if !rng.random_bool(0.75) {
                    continue;
                }
                if n == max_obs {
                    break 'sensors;
                }
                n += 1;
                let kind = &KINDS[k];
                let lexical = *kind.values.choose(rng).unwrap();
                let value = if rng.random_bool(0.05) {
                    Term::Literal(Literal::simple("n/a"))
                } else {
                    match kind.datatype {
                        XsdType::Iri => Term::iri(lexical),
                        XsdType::String if rng.random_bool(0.2) => Term::Literal(Literal::lang_tagged(lexical, "en")),
                        XsdType::String => Term::Literal(Literal::simple(lexical)),
                        t => Term::Literal(Literal::typed(lexical, datatype_iri(t))),
                    }
                };
                let obs = Term::iri(format!("{EX}obs/{s}/{ti}/{k}"));
                triples.push(Triple::new(obs.clone(), vocab::SOSA_MADE_BY_SENSOR, sensor.clone()));
                triples.push(Triple::new(obs.clone(), vocab::SOSA_OBSERVED_PROPERTY, Term::iri(kind.iri)));
                triples.push(Triple::new(obs.clone(), vocab::SOSA_HAS_SIMPLE_RESULT, value));
                triples.push(Triple::new(
                    obs,
                    vocab::SOSA_RESULT_TIME,
                    Term::Literal(Literal::typed(*time, vocab::XSD_DATE_TIME)),
                ));
            }
        }
    }
    Graph::new(triples)
}

/// Compares the compiled-and-evaluated route with the direct evaluator.
pub fn differential_case(q: &AbstractQuery, g: &Graph) -> Result<(), String> {
    let c = coords();
    let sparql = compile(q, &c).map_err(|e| format!("compile: {e}"))?;
    let ast = parse_sparql_subset(&sparql.text).map_err(|e| format!("parse: {e}\n{}", sparql.text))?;
    let via_sparql = evaluate(&ast, g);
    let direct = eval_direct(q, g, &c).map_err(|e| format!("direct: {e}"))?;
    if via_sparql.same_rows(&direct) {
        Ok(())
    } else {
        Err(format!(
            "row mismatch\n{}\nvia SPARQL: {:?}\ndirect: {:?}\ngraph:\n{}",
            sparql.text,
            via_sparql.canonical_rows(),
            direct.canonical_rows(),
            g.to_ntriples()
        ))
    }
}

// ---------------------------------------------------------------------------
// Acceptance criteria.

pub fn check_golden() -> Result<String, String> {
    let started = Instant::now();
    let pairs = golden_pairs();
    if pairs.len() < 10 {
        return Err(format!("only {} golden pairs", pairs.len()));
    }
    let c = coords();
    let mut docs = Vec::new();
    for p in &pairs {
        let q = p.query();
        let expected = p.expected().ok_or_else(|| format!("{}: missing .rq", p.name))?;
        let got = compile(&q, &c).map_err(|e| format!("{}: {e}", p.name))?.text;
        if got != expected {
            return Err(format!("{}: compile output differs from golden", p.name));
        }
        docs.push((q, expected));
    }
    for _ in 0..100 {
        for (q, expected) in &docs {
            if compile(q, &c).unwrap().text != *expected {
                return Err("compile output not deterministic".into());
            }
        }
    }
    let has = |pred: &dyn Fn(&AbstractQuery) -> bool| docs.iter().any(|(q, _)| pred(q));
    if !has(&|q| {
        q.date_window.is_some()
            && q.geo.circles.len() == 1
            && q.sensors.len() == 1
            && q.sensors[0].properties.iter().filter(|p| p.hidden).count() == 2
    }) {
        return Err("no pair with one animal, a date window, one circle and hidden coordinates".into());
    }
    for comb in [GeoCombinator::Union, GeoCombinator::Intersection] {
        if !has(&|q| q.geo.circles.len() > 1 && q.geo.combinator == comb) {
            return Err(format!("no pair with combinator {comb:?}"));
        }
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} pairs byte-equal, 100 runs deterministic, {:.0?}", pairs.len(), elapsed))
}

pub fn check_differential(documents: usize, seed: u64) -> Result<String, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut nonempty = 0;
    while done < documents {
        let q = random_document(&mut rng);
        if validate_query(&q).has_fatal() {
            continue;
        }
        let g = random_graph(&mut rng, 50);
        differential_case(&q, &g).map_err(|e| format!("document {done}: {e}"))?;
        if !eval_direct(&q, &g, &coords()).unwrap().rows.is_empty() {
            nonempty += 1;
        }
        done += 1;
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{done} documents agree ({nonempty} with rows), {:.1?}", elapsed))
}

/// Classifies points with the compiled FILTER, evaluated by the reference
/// engine, against haversine distance.
pub fn check_geo(cases: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coords();
    let sensor = "http://ex.org/sensor/g";
    let mut annulus_disagreements = 0;
    let mut inside = 0;
    for case in 0..cases {
        let lat: f64 = rng.random_range(-70.0..70.0);
        let lon: f64 = rng.random_range(-180.0..180.0);
        let radius: f64 = rng.random_range(10.0..50_000.0);
        let bearing: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dist = radius * rng.random_range(0.0..2.0);
        let plat = lat + (dist * bearing.cos() / 6_371_000.0).to_degrees();
        let plon = lon + (dist * bearing.sin() / (6_371_000.0 * lat.to_radians().cos())).to_degrees();

        let mut q = AbstractQuery::empty();
        q.sensors.push(SensorSelection {
            sensor_iri: sensor.into(),
            label: "G".into(),
            properties: vec![
                PropertyBinding::new(vocab::GEO_LAT, "Latitude", XsdType::Double),
                PropertyBinding::new(vocab::GEO_LONG, "Longitude", XsdType::Double),
            ],
        });
        q.geo.circles.push(GeoCircle::new(lat, lon, radius));
        let sparql = compile(&q, &c).map_err(|e| format!("case {case}: {e}"))?;
        let ast = parse_sparql_subset(&sparql.text).map_err(|e| format!("case {case}: {e}"))?;
        let mut triples = Vec::new();
        for (k, (p, v)) in [(vocab::GEO_LAT, plat), (vocab::GEO_LONG, plon)].into_iter().enumerate() {
            let obs = Term::iri(format!("http://ex.org/obs/{k}"));
            triples.push(Triple::new(obs.clone(), vocab::SOSA_MADE_BY_SENSOR, Term::iri(sensor)));
            triples.push(Triple::new(obs.clone(), vocab::SOSA_OBSERVED_PROPERTY, Term::iri(p)));
            triples.push(Triple::new(
                obs.clone(),
                vocab::SOSA_HAS_SIMPLE_RESULT,
                Term::Literal(Literal::typed(format!("{v:?}"), vocab::XSD_DOUBLE)),
            ));
            triples.push(Triple::new(
                obs,
                vocab::SOSA_RESULT_TIME,
                Term::Literal(Literal::typed("2020-01-01T00:00:00Z", vocab::XSD_DATE_TIME)),
            ));
        }
        let emitted = evaluate(&ast, &Graph::new(triples)).rows.len() == 1;
        let true_dist = haversine(lat, lon, plat, plon);
        let truth = true_dist <= radius;
        inside += usize::from(truth);
        if emitted != truth {
            if (true_dist - radius).abs() <= 0.01 * radius {
                annulus_disagreements += 1;
            } else {
                return Err(format!(
                    "case {case}: center ({lat}, {lon}) r={radius} point ({plat}, {plon}) at {true_dist:.3} m, filter says {emitted}"
                ));
            }
        }
    }
    Ok(format!(
        "{cases} cases ({inside} inside), {annulus_disagreements} disagreements, all within the 1% annulus"
    ))
}

pub fn utterance_fixture() -> Vec<(Intent, String)> {
    let text = std::fs::read_to_string(crate_dir().join("tests/data/utterances.tsv")).expect("utterances");
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (intent, utterance) = l.split_once('\t').expect("tab separated");
            (Intent::from_name(intent).expect("known intent"), utterance.to_string())
        })
        .collect()
}

pub async fn fixture_catalog(mock: &MockEndpoint) -> SensorCatalog {
    let client = EndpointClient::new(EndpointConfig::new(mock.url())).unwrap();
    discover_sensors(&client, None).await.expect("fixture discovery")
}

pub async fn check_dialogue() -> Result<String, String> {
    let mock = MockEndpoint::start(fixture_graph()).await.map_err(|e| e.to_string())?;
    let catalog = fixture_catalog(&mock).await;
    let expect = |text: &str, intent: Intent| -> Result<(), String> {
        let got = classify(text, &catalog).intent;
        if got == intent {
            Ok(())
        } else {
            Err(format!("{text:?} classified as {got:?}, expected {intent:?}"))
        }
    };
    expect("What are the sensors?", Intent::ListSensors)?;
    expect("What is Aqeela?", Intent::DescribeEntity)?;
    expect("Where is Aqeela?", Intent::LocateEntity)?;
    expect("Where is aqeela?", Intent::LocateEntity)?;

    let q = AbstractQuery::empty();
    let frame = classify("Where is aqeela?", &catalog);
    let outcome = respond(&frame, &q, &catalog, &coords());
    if !outcome.trigger_search {
        return Err(format!("locate flow did not trigger a search: {}", outcome.reply));
    }
    let mut located = q;
    for m in &outcome.mutations {
        located = apply_mutation(&located, m).map_err(|e| e.to_string())?;
    }
    let compiled = compile(&located, &coords()).map_err(|e| e.to_string())?.text;
    if Some(compiled) != golden("aqeela-location").expected() {
        return Err("locate flow does not compile to the Aqeela golden".into());
    }

    let fixture = utterance_fixture();
    let mut wrong = Vec::new();
    for (intent, text) in &fixture {
        let got = classify(text, &catalog).intent;
        if got != *intent {
            wrong.push(format!("{text:?} -> {got:?}"));
        }
    }
    if !wrong.is_empty() {
        return Err(format!("{} of {} misclassified: {}", wrong.len(), fixture.len(), wrong.join("; ")));
    }
    Ok(format!(
        "reference utterances and locate flow ok, {}/{} fixture utterances",
        fixture.len(),
        fixture.len()
    ))
}

/// Runs the CLI binary (given by path) against a mock serving the fixture.
pub async fn check_end_to_end(bin: &Path) -> Result<String, String> {
    let fixture = fixture_graph();
    let mock = MockEndpoint::start(fixture.clone()).await.map_err(|e| e.to_string())?;
    let tracked = golden("aqeela-window-circle");
    let url = mock.url();
    let bin = bin.to_path_buf();
    let doc = tracked.json_path.clone();
    let output = tokio::task::spawn_blocking(move || {
        std::process::Command::new(bin)
            .args(["run", "--format", "json", "--endpoint-url", &url])
            .arg(doc)
            .output()
    })
    .await
    .map_err(|e| e.to_string())?
    .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("run failed: {}", String::from_utf8_lossy(&output.stderr)));
    }
    let table: ResultTable = serde_json::from_slice(&output.stdout).map_err(|e| e.to_string())?;
    let rq = tracked.expected().ok_or("missing window-circle golden")?;
    let oracle = evaluate(&parse_sparql_subset(&rq).map_err(|e| e.to_string())?, &fixture);
    if table != oracle {
        return Err(format!("run returned {} rows, oracle {}", table.rows.len(), oracle.rows.len()));
    }
    if oracle.rows.is_empty() {
        return Err("window-circle document selects no fixture rows".into());
    }

    let catalog = fixture_catalog(&mock).await;
    let shape: BTreeMap<String, Vec<String>> = catalog
        .sensors
        .iter()
        .map(|s| (s.label.clone(), s.properties.iter().map(|p| p.label.clone()).collect()))
        .collect();
    let props = ["Latitude", "Longitude", "Speed", "Temperature"];
    let expected: BTreeMap<String, Vec<String>> = ["Aqeela", "Bora", "Chikaku"]
        .iter()
        .map(|s| (s.to_string(), props.iter().map(|p| p.to_string()).collect()))
        .collect();
    if shape != expected {
        return Err(format!("discovered {shape:?}"));
    }
    Ok(format!("run matches oracle ({} rows), discovery 3 x 4", oracle.rows.len()))
}

const FUZZ_ALPHABET: &[&str] = &[
    "\"", "'", "\\", "\\\\", "\n", "\r", "\t", "{", "}", "?", "$", "#", ".", "*", "+", "(", ")", "[", "]", "^", "|",
    "<", ">", "\u{8}", "\u{c}", "a", "Z", "0", " ", "é", "中", "\u{1F418}", "\\u0041", "\"\"\"", "'''", "^^", "@en",
];

pub fn adversarial_string(rng: &mut ChaCha8Rng) -> String {
    (0..rng.random_range(0..12)).map(|_| *FUZZ_ALPHABET.choose(rng).unwrap()).collect()
}

/// Filters built from adversarial strings must compile to parseable SPARQL,
/// and `match`/`equals` must still find the exact literal.
pub fn check_fuzz(cases: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = coords();
    let note = "http://ex.org/p/note";
    let sensor = "http://ex.org/sensor/f";
    let mut rejected = 0;
    for case in 0..cases {
        let s = adversarial_string(&mut rng);
        let filter = match case % 4 {
            0 => FilterSpec::Contain { text: s.clone() },
            1 => FilterSpec::Match { text: s.clone() },
            2 => FilterSpec::Equals { value: s.clone() },
            _ => FilterSpec::Regex {
                pattern: if rng.random_bool(0.5) { regex::escape(&s) } else { s.clone() },
                flags: ["", "i", "sm"].choose(&mut rng).unwrap().to_string(),
            },
        };
        let mut p = PropertyBinding::new(note, "Note", XsdType::String);
        p.filters.push(filter.clone());
        let mut q = AbstractQuery::empty();
        q.sensors.push(SensorSelection {
            sensor_iri: sensor.into(),
            label: "F".into(),
            properties: vec![p],
        });
        if validate_query(&q).has_fatal() {
            rejected += 1;
            continue;
        }
        let sparql = compile(&q, &c).map_err(|e| format!("case {case} {s:?}: {e}"))?;
        let ast = parse_sparql_subset(&sparql.text).map_err(|e| format!("case {case} {s:?}: {e}\n{}", sparql.text))?;
        if matches!(filter, FilterSpec::Match { .. } | FilterSpec::Equals { .. }) {
            let obs = Term::iri("http://ex.org/obs/f");
            let g = Graph::new([
                Triple::new(obs.clone(), vocab::SOSA_MADE_BY_SENSOR, Term::iri(sensor)),
                Triple::new(obs.clone(), vocab::SOSA_OBSERVED_PROPERTY, Term::iri(note)),
                Triple::new(obs.clone(), vocab::SOSA_HAS_SIMPLE_RESULT, Term::Literal(Literal::simple(s.clone()))),
                Triple::new(
                    obs,
                    vocab::SOSA_RESULT_TIME,
                    Term::Literal(Literal::typed("2020-01-01T00:00:00Z", vocab::XSD_DATE_TIME)),
                ),
            ]);
            if evaluate(&ast, &g).rows.len() != 1 {
                return Err(format!("case {case}: {s:?} did not round-trip through escaping"));
            }
        }
    }
    Ok(format!(
        "{cases} adversarial filters, all compiled queries parse ({rejected} invalid regexes rejected by validation)"
    ))
}
