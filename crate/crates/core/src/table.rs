//! Tabular SELECT results and the SPARQL 1.1 Query Results JSON format.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::rdf::{vocab, Literal, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Iri,
    Literal,
    Blank,
    Unbound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub value: String,
    pub kind: CellKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl Cell {
    pub fn unbound() -> Self {
        Cell {
            value: String::new(),
            kind: CellKind::Unbound,
            datatype: None,
            lang: None,
        }
    }

    pub fn from_term(term: Option<&Term>) -> Self {
        match term {
            None => Cell::unbound(),
            Some(Term::Iri(iri)) => Cell {
                value: iri.clone(),
                kind: CellKind::Iri,
                datatype: None,
                lang: None,
            },
            Some(Term::Blank(id)) => Cell {
                value: id.clone(),
                kind: CellKind::Blank,
                datatype: None,
                lang: None,
            },
            Some(Term::Literal(lit)) => Cell {
                value: lit.lexical.clone(),
                kind: CellKind::Literal,
                datatype: Some(lit.datatype.clone()),
                lang: lit.lang.clone(),
            },
        }
    }

    pub fn to_term(&self) -> Option<Term> {
        match self.kind {
            CellKind::Unbound => None,
            CellKind::Iri => Some(Term::Iri(self.value.clone())),
            CellKind::Blank => Some(Term::Blank(self.value.clone())),
            CellKind::Literal => Some(Term::Literal(match &self.lang {
                Some(lang) => Literal::lang_tagged(self.value.clone(), lang.clone()),
                None => Literal::typed(
                    self.value.clone(),
                    self.datatype.clone().unwrap_or_else(|| vocab::XSD_STRING.to_string()),
                ),
            })),
        }
    }

    pub fn is_bound(&self) -> bool {
        self.kind != CellKind::Unbound
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows reordered to sorted column order and then sorted, so two tables
    /// with the same bag of rows compare equal regardless of column or row
    /// order.
    pub fn canonical_rows(&self) -> (Vec<String>, Vec<Vec<Cell>>) {
        let mut order: Vec<usize> = (0..self.columns.len()).collect();
        order.sort_by(|a, b| self.columns[*a].cmp(&self.columns[*b]));
        let columns = order.iter().map(|&i| self.columns[i].clone()).collect();
        let mut rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|row| order.iter().map(|&i| row[i].clone()).collect())
            .collect();
        rows.sort();
        (columns, rows)
    }

    /// Multiset equality of rows, up to column order.
    pub fn same_rows(&self, other: &ResultTable) -> bool {
        self.canonical_rows() == other.canonical_rows()
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory csv");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|c| c.value.as_str()))
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("csv of utf-8 input")
    }

    /// Encodes as `application/sparql-results+json`.
    pub fn to_results_json(&self) -> Value {
        let bindings: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    let term = match cell.kind {
                        CellKind::Unbound => continue,
                        CellKind::Iri => json!({"type": "uri", "value": cell.value}),
                        CellKind::Blank => json!({"type": "bnode", "value": cell.value}),
                        CellKind::Literal => {
                            let mut t = Map::new();
                            t.insert("type".into(), "literal".into());
                            t.insert("value".into(), cell.value.clone().into());
                            if let Some(lang) = &cell.lang {
                                t.insert("xml:lang".into(), lang.clone().into());
                            } else if let Some(dt) = cell.datatype.as_deref().filter(|d| *d != vocab::XSD_STRING) {
                                t.insert("datatype".into(), dt.into());
                            }
                            Value::Object(t)
                        }
                    };
                    obj.insert(name.clone(), term);
                }
                Value::Object(obj)
            })
            .collect();
        json!({"head": {"vars": self.columns}, "results": {"bindings": bindings}})
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed SPARQL results document at {location}: {message}")]
pub struct DecodeError {
    pub location: String,
    pub message: String,
}

fn decode_err(location: impl Into<String>, message: impl Into<String>) -> DecodeError {
    DecodeError {
        location: location.into(),
        message: message.into(),
    }
}

/// Decodes a SPARQL 1.1 Query Results JSON document. Column order follows
/// `head.vars`; variables missing from a binding become unbound cells.
pub fn parse_results_json(bytes: &[u8]) -> Result<ResultTable, DecodeError> {
    let doc: Value = serde_json::from_slice(bytes)
        .map_err(|e| decode_err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let vars = doc
        .pointer("/head/vars")
        .and_then(Value::as_array)
        .ok_or_else(|| decode_err("head.vars", "missing or not an array"))?;
    let columns = vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| decode_err(format!("head.vars[{i}]"), "not a string"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| decode_err("results.bindings", "missing or not an array"))?;

    let mut table = ResultTable::new(columns);
    for (r, binding) in bindings.iter().enumerate() {
        let obj = binding
            .as_object()
            .ok_or_else(|| decode_err(format!("results.bindings[{r}]"), "not an object"))?;
        let row = table
            .columns
            .iter()
            .map(|name| match obj.get(name) {
                None => Ok(Cell::unbound()),
                Some(term) => decode_term(term, &format!("results.bindings[{r}].{name}")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.rows.push(row);
    }
    Ok(table)
}

fn decode_term(term: &Value, location: &str) -> Result<Cell, DecodeError> {
    let field = |key: &str| term.get(key).and_then(Value::as_str);
    let kind = field("type").ok_or_else(|| decode_err(location, "missing \"type\""))?;
    let value = field("value").ok_or_else(|| decode_err(location, "missing \"value\""))?.to_string();
    Ok(match kind {
        "uri" => Cell {
            value,
            kind: CellKind::Iri,
            datatype: None,
            lang: None,
        },
        "bnode" => Cell {
            value,
            kind: CellKind::Blank,
            datatype: None,
            lang: None,
        },
        // "typed-literal" is the pre-1.1 spelling still sent by some stores
        "literal" | "typed-literal" => {
            let lang = field("xml:lang").map(|l| l.to_ascii_lowercase());
            let datatype = if lang.is_some() {
                vocab::RDF_LANG_STRING.to_string()
            } else {
                field("datatype").unwrap_or(vocab::XSD_STRING).to_string()
            };
            Cell {
                value,
                kind: CellKind::Literal,
                datatype: Some(datatype),
                lang,
            }
        }
        other => return Err(decode_err(location, format!("unknown term type {other:?}"))),
    })
}
