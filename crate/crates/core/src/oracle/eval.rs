use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use chrono::{DateTime, FixedOffset};
use regex::Regex;

use super::*;
use crate::rdf::{vocab, Graph, Literal};
use crate::table::{Cell, ResultTable};

type Solution = Vec<Option<Term>>;

/// Evaluates `ast` over `graph` with SPARQL bag semantics. Rows that tie
/// under ORDER BY keep the order in which the patterns matched, which is
/// fixed by the graph's sorted triple order.
pub fn evaluate(ast: &QueryAst, graph: &Graph) -> ResultTable {
    let mut vars = Vars::default();
    vars.collect_group(&ast.pattern);
    for key in &ast.order_by {
        vars.collect_expr(&key.expr);
    }
    let in_scope = vars.names.clone();
    if let Some(projection) = &ast.projection {
        for v in projection {
            vars.id(v);
        }
    }

    let ev = Evaluator {
        graph,
        vars: &vars,
        regexes: RefCell::new(HashMap::new()),
    };
    let width = vars.names.len();
    let mut rows = ev.group(&ast.pattern, vec![vec![None; width]]);

    if !ast.order_by.is_empty() {
        let mut keyed: Vec<(Vec<Option<Value>>, Solution)> = rows
            .into_iter()
            .map(|row| {
                let keys = ast.order_by.iter().map(|k| ev.expr(&k.expr, &row).ok()).collect();
                (keys, row)
            })
            .collect();
        keyed.sort_by(|(a, _), (b, _)| {
            for ((x, y), key) in a.iter().zip(b).zip(&ast.order_by) {
                let ord = order_values(x.as_ref(), y.as_ref());
                let ord = if key.descending { ord.reverse() } else { ord };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
        rows = keyed.into_iter().map(|(_, row)| row).collect();
    }

    let columns: Vec<String> = ast.projection.clone().unwrap_or(in_scope);
    let ids: Vec<usize> = columns.iter().map(|c| vars.index[c]).collect();
    let mut table = ResultTable::new(columns);
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        if ast.limit.is_some_and(|n| table.rows.len() as u64 >= n) {
            break;
        }
        let projected: Vec<Option<Term>> = ids.iter().map(|&i| row[i].clone()).collect();
        if ast.distinct && !seen.insert(projected.clone()) {
            continue;
        }
        table.rows.push(projected.iter().map(|t| Cell::from_term(t.as_ref())).collect());
    }
    table
}

#[derive(Default)]
struct Vars {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vars {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    fn collect_group(&mut self, g: &GroupPattern) {
        for el in &g.elements {
            match el {
                GroupElement::Triples(ts) => {
                    for t in ts {
                        for v in [&t.subject, &t.predicate, &t.object].into_iter().filter_map(PatternTerm::var) {
                            self.id(v);
                        }
                    }
                }
                GroupElement::Optional(inner) => self.collect_group(inner),
                GroupElement::Union(branches) => branches.iter().for_each(|b| self.collect_group(b)),
                GroupElement::Filter(_) => {}
            }
        }
    }

    fn collect_expr(&mut self, e: &Expr) {
        match e {
            Expr::Var(v) => {
                self.id(v);
            }
            Expr::Const(_) => {}
            Expr::Neg(a) | Expr::Str(a) | Expr::Lcase(a) => self.collect_expr(a),
            Expr::Or(a, b) | Expr::And(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) | Expr::Contains(a, b) => {
                self.collect_expr(a);
                self.collect_expr(b);
            }
            Expr::Regex(a, b, c) => {
                self.collect_expr(a);
                self.collect_expr(b);
                if let Some(c) = c {
                    self.collect_expr(c);
                }
            }
        }
    }
}

struct Evaluator<'a> {
    graph: &'a Graph,
    vars: &'a Vars,
    regexes: RefCell<HashMap<(String, String), Option<Regex>>>,
}

/// Raised by any expression that hits a type error or an unbound variable.
#[derive(Debug)]
struct EvalError;

type EResult<T> = Result<T, EvalError>;

impl Evaluator<'_> {
    fn width(&self) -> usize {
        self.vars.names.len()
    }

    /// Evaluates a group joined with `input`. Filters apply to the whole
    /// group once every other element has been joined.
    fn group(&self, g: &GroupPattern, input: Vec<Solution>) -> Vec<Solution> {
        let mut rows = input;
        let mut filters = Vec::new();
        for el in &g.elements {
            rows = match el {
                GroupElement::Triples(patterns) => {
                    let mut out = Vec::new();
                    for row in &rows {
                        self.bgp(patterns, row.clone(), &mut vec![false; patterns.len()], &mut out);
                    }
                    out
                }
                GroupElement::Optional(inner) => {
                    let (body, conditions) = split_filters(inner);
                    let right = self.group(&body, vec![vec![None; self.width()]]);
                    self.left_join(rows, &right, &conditions)
                }
                GroupElement::Union(branches) => {
                    let right: Vec<Solution> = branches
                        .iter()
                        .flat_map(|b| self.group(b, vec![vec![None; self.width()]]))
                        .collect();
                    join(&rows, &right)
                }
                GroupElement::Filter(e) => {
                    filters.push(e);
                    continue;
                }
            };
        }
        rows.retain(|row| filters.iter().all(|f| self.holds(f, row)));
        rows
    }

    fn left_join(&self, left: Vec<Solution>, right: &[Solution], conditions: &[&Expr]) -> Vec<Solution> {
        let mut out = Vec::new();
        for l in left {
            let mut matched = false;
            for r in right {
                if let Some(merged) = merge(&l, r) {
                    if conditions.iter().all(|c| self.holds(c, &merged)) {
                        out.push(merged);
                        matched = true;
                    }
                }
            }
            if !matched {
                out.push(l);
            }
        }
        out
    }

    /// Backtracking BGP matcher: at each step the pattern with the fewest
    /// candidate triples under the current bindings is matched next.
    fn bgp(&self, patterns: &[TriplePattern], row: Solution, done: &mut Vec<bool>, out: &mut Vec<Solution>) {
        let mut best: Option<(usize, Option<&[usize]>)> = None;
        for (i, p) in patterns.iter().enumerate() {
            if done[i] {
                continue;
            }
            let cands = self.candidates(p, &row);
            let size = cands.map_or(self.graph.len(), <[usize]>::len);
            if best.is_none_or(|(_, c)| size < c.map_or(self.graph.len(), <[usize]>::len)) {
                best = Some((i, cands));
            }
        }
        let Some((i, cands)) = best else {
            out.push(row);
            return;
        };
        done[i] = true;
        let all: Vec<usize>;
        let cands = match cands {
            Some(c) => c,
            None => {
                all = (0..self.graph.len()).collect();
                &all
            }
        };
        for &idx in cands {
            let t = self.graph.get(idx);
            let mut next = row.clone();
            let pred = Term::Iri(t.predicate.clone());
            if self.bind(&patterns[i].subject, &t.subject, &mut next)
                && self.bind(&patterns[i].predicate, &pred, &mut next)
                && self.bind(&patterns[i].object, &t.object, &mut next)
            {
                self.bgp(patterns, next, done, out);
            }
        }
        done[i] = false;
    }

    fn resolve<'r>(&self, pt: &'r PatternTerm, row: &'r Solution) -> Option<&'r Term> {
        match pt {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(v) => row[self.vars.index[v]].as_ref(),
        }
    }

    fn candidates(&self, p: &TriplePattern, row: &Solution) -> Option<&[usize]> {
        let s = self.resolve(&p.subject, row);
        let pred = self.resolve(&p.predicate, row);
        let o = self.resolve(&p.object, row);
        if s.is_none() && pred.is_none() && o.is_none() {
            return None;
        }
        // a bound non-IRI predicate cannot match anything
        let pred_iri = match pred {
            Some(Term::Iri(iri)) => Some(iri.as_str()),
            Some(_) => return Some(&[]),
            None => None,
        };
        self.graph.candidates(s, pred_iri, o)
    }

    fn bind(&self, pt: &PatternTerm, value: &Term, row: &mut Solution) -> bool {
        match pt {
            PatternTerm::Term(t) => t == value,
            PatternTerm::Var(v) => {
                let slot = &mut row[self.vars.index[v]];
                match slot {
                    Some(bound) => bound == value,
                    None => {
                        *slot = Some(value.clone());
                        true
                    }
                }
            }
        }
    }

    fn holds(&self, e: &Expr, row: &Solution) -> bool {
        self.expr(e, row).and_then(|v| ebv(&v)).unwrap_or(false)
    }

    fn expr(&self, e: &Expr, row: &Solution) -> EResult<Value> {
        match e {
            Expr::Var(v) => row[self.vars.index[v]].as_ref().map(Value::from_term).ok_or(EvalError),
            Expr::Const(t) => Ok(Value::from_term(t)),
            Expr::Or(a, b) => {
                let l = self.expr(a, row).and_then(|v| ebv(&v));
                let r = self.expr(b, row).and_then(|v| ebv(&v));
                match (l, r) {
                    (Ok(true), _) | (_, Ok(true)) => Ok(Value::Bool(true)),
                    (Ok(false), Ok(false)) => Ok(Value::Bool(false)),
                    _ => Err(EvalError),
                }
            }
            Expr::And(a, b) => {
                let l = self.expr(a, row).and_then(|v| ebv(&v));
                let r = self.expr(b, row).and_then(|v| ebv(&v));
                match (l, r) {
                    (Ok(false), _) | (_, Ok(false)) => Ok(Value::Bool(false)),
                    (Ok(true), Ok(true)) => Ok(Value::Bool(true)),
                    _ => Err(EvalError),
                }
            }
            Expr::Cmp(op, a, b) => compare(*op, &self.expr(a, row)?, &self.expr(b, row)?).map(Value::Bool),
            Expr::Arith(op, a, b) => arith(*op, &self.expr(a, row)?, &self.expr(b, row)?),
            Expr::Neg(a) => match self.expr(a, row)? {
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or(EvalError),
                Value::Dec(x) => Ok(Value::Dec(-x)),
                Value::Dbl(x) => Ok(Value::Dbl(-x)),
                _ => Err(EvalError),
            },
            Expr::Str(a) => {
                // STR needs the original lexical form, not the parsed value
                let term = match &**a {
                    Expr::Var(v) => row[self.vars.index[v]].clone().ok_or(EvalError)?,
                    Expr::Const(t) => t.clone(),
                    other => return self.expr(other, row).and_then(|v| v.lexical()).map(Value::simple),
                };
                match term {
                    Term::Iri(iri) => Ok(Value::simple(iri)),
                    Term::Literal(lit) => Ok(Value::simple(lit.lexical)),
                    Term::Blank(_) => Err(EvalError),
                }
            }
            Expr::Lcase(a) => match self.expr(a, row)? {
                Value::Str { lex, lang } => Ok(Value::Str {
                    lex: lex.to_lowercase(),
                    lang,
                }),
                _ => Err(EvalError),
            },
            Expr::Contains(a, b) => {
                let (Value::Str { lex: hay, lang: l1 }, Value::Str { lex: needle, lang: l2 }) =
                    (self.expr(a, row)?, self.expr(b, row)?)
                else {
                    return Err(EvalError);
                };
                if l2.is_some() && l1 != l2 {
                    return Err(EvalError);
                }
                Ok(Value::Bool(hay.contains(&needle)))
            }
            Expr::Regex(text, pattern, flags) => {
                let Value::Str { lex: text, .. } = self.expr(text, row)? else {
                    return Err(EvalError);
                };
                let Value::Str { lex: pattern, lang: None } = self.expr(pattern, row)? else {
                    return Err(EvalError);
                };
                let flags = match flags {
                    Some(f) => match self.expr(f, row)? {
                        Value::Str { lex, lang: None } => lex,
                        _ => return Err(EvalError),
                    },
                    None => String::new(),
                };
                let mut cache = self.regexes.borrow_mut();
                let re = cache
                    .entry((pattern.clone(), flags.clone()))
                    .or_insert_with(|| compile_regex(&pattern, &flags));
                re.as_ref().map(|re| Value::Bool(re.is_match(&text))).ok_or(EvalError)
            }
        }
    }
}

fn compile_regex(pattern: &str, flags: &str) -> Option<Regex> {
    let mut b = regex::RegexBuilder::new(pattern);
    for f in flags.chars() {
        match f {
            'i' => b.case_insensitive(true),
            's' => b.dot_matches_new_line(true),
            'm' => b.multi_line(true),
            'x' => b.ignore_whitespace(true),
            _ => return None,
        };
    }
    b.size_limit(1 << 20).build().ok()
}

fn split_filters(g: &GroupPattern) -> (GroupPattern, Vec<&Expr>) {
    let mut body = GroupPattern::default();
    let mut filters = Vec::new();
    for el in &g.elements {
        match el {
            GroupElement::Filter(e) => filters.push(e),
            other => body.elements.push(other.clone()),
        }
    }
    (body, filters)
}

fn merge(a: &Solution, b: &Solution) -> Option<Solution> {
    let mut out = a.clone();
    for (slot, value) in out.iter_mut().zip(b) {
        match (slot.as_ref(), value) {
            (_, None) => {}
            (None, Some(v)) => *slot = Some(v.clone()),
            (Some(x), Some(y)) if x == y => {}
            _ => return None,
        }
    }
    Some(out)
}

fn join(left: &[Solution], right: &[Solution]) -> Vec<Solution> {
    left.iter().flat_map(|l| right.iter().filter_map(|r| merge(l, r))).collect()
}

/// A term interpreted under its datatype. Ill-typed and unknown literals
/// stay `Other` and only compare by identity.
#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Dec(f64),
    Dbl(f64),
    Bool(bool),
    /// Simple, `xsd:string` and language-tagged literals.
    Str { lex: String, lang: Option<String> },
    DateTime(DateTime<FixedOffset>),
    Iri(String),
    Blank(String),
    Other { lex: String, datatype: String },
}

const INTEGER_TYPES: [&str; 13] = [
    "integer",
    "int",
    "long",
    "short",
    "byte",
    "nonNegativeInteger",
    "positiveInteger",
    "negativeInteger",
    "nonPositiveInteger",
    "unsignedInt",
    "unsignedLong",
    "unsignedShort",
    "unsignedByte",
];

impl Value {
    fn simple(lex: String) -> Value {
        Value::Str { lex, lang: None }
    }

    fn from_term(t: &Term) -> Value {
        match t {
            Term::Iri(iri) => Value::Iri(iri.clone()),
            Term::Blank(b) => Value::Blank(b.clone()),
            Term::Literal(lit) => Value::from_literal(lit),
        }
    }

    fn from_literal(lit: &Literal) -> Value {
        if let Some(lang) = &lit.lang {
            return Value::Str {
                lex: lit.lexical.clone(),
                lang: Some(lang.clone()),
            };
        }
        let lex = lit.lexical.as_str();
        let typed = match lit.datatype.strip_prefix(vocab::XSD) {
            Some("string") => Some(Value::simple(lex.to_string())),
            Some(local) if INTEGER_TYPES.contains(&local) => lex_integer(lex).map(Value::Int),
            Some("decimal") => lex_decimal(lex).map(Value::Dec),
            Some("double" | "float") => lex_double(lex).map(Value::Dbl),
            Some("boolean") => match lex {
                "true" | "1" => Some(Value::Bool(true)),
                "false" | "0" => Some(Value::Bool(false)),
                _ => None,
            },
            Some("dateTime") => DateTime::parse_from_rfc3339(lex).ok().map(Value::DateTime),
            _ => None,
        };
        typed.unwrap_or_else(|| Value::Other {
            lex: lex.to_string(),
            datatype: lit.datatype.clone(),
        })
    }

    fn numeric(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Dec(x) | Value::Dbl(x) => Some(*x),
            _ => None,
        }
    }

    /// Lexical form of a computed value, for STR over an expression.
    fn lexical(&self) -> EResult<String> {
        Ok(match self {
            Value::Int(i) => i.to_string(),
            Value::Dec(x) | Value::Dbl(x) => x.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Str { lex, .. } | Value::Other { lex, .. } => lex.clone(),
            Value::DateTime(dt) => dt.to_rfc3339(),
            Value::Iri(iri) => iri.clone(),
            Value::Blank(_) => return Err(EvalError),
        })
    }
}

fn split_sign(s: &str) -> &str {
    s.strip_prefix(['+', '-']).unwrap_or(s)
}

fn lex_integer(s: &str) -> Option<i64> {
    let digits = split_sign(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn lex_decimal(s: &str) -> Option<f64> {
    let body = split_sign(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) {
        return None;
    }
    s.parse().ok()
}

fn lex_double(s: &str) -> Option<f64> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    lex_decimal(mantissa)?;
    if let Some(exp) = exp {
        lex_integer(exp)?;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn ebv(v: &Value) -> EResult<bool> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Int(i) => Ok(*i != 0),
        Value::Dec(x) | Value::Dbl(x) => Ok(*x != 0.0 && !x.is_nan()),
        Value::Str { lex, .. } => Ok(!lex.is_empty()),
        _ => Err(EvalError),
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> EResult<bool> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        _ if a.numeric().is_some() && b.numeric().is_some() => a.numeric().partial_cmp(&b.numeric()),
        (Value::Str { lex: x, lang: None }, Value::Str { lex: y, lang: None }) => Some(x.cmp(y)),
        (Value::DateTime(x), Value::DateTime(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    };
    if let Some(ord) = ord {
        return Ok(match op {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        });
    }
    let equal = match (a, b) {
        _ if a == b => true,
        (Value::Iri(_) | Value::Blank(_), _) | (_, Value::Iri(_) | Value::Blank(_)) => false,
        // two different literals outside the comparable value spaces
        _ => return Err(EvalError),
    };
    match op {
        CmpOp::Eq => Ok(equal),
        CmpOp::Ne => Ok(!equal),
        _ => Err(EvalError),
    }
}

fn arith(op: ArithOp, a: &Value, b: &Value) -> EResult<Value> {
    if let (Value::Int(x), Value::Int(y)) = (a, b) {
        let r = match op {
            ArithOp::Add => x.checked_add(*y),
            ArithOp::Sub => x.checked_sub(*y),
            ArithOp::Mul => x.checked_mul(*y),
        };
        return r.map(Value::Int).ok_or(EvalError);
    }
    let (Some(x), Some(y)) = (a.numeric(), b.numeric()) else {
        return Err(EvalError);
    };
    let r = match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
    };
    if matches!(a, Value::Dbl(_)) || matches!(b, Value::Dbl(_)) {
        Ok(Value::Dbl(r))
    } else {
        Ok(Value::Dec(r))
    }
}

/// Total order used by ORDER BY: errors and unbound first, then blank
/// nodes, IRIs, and literals grouped by value space.
fn order_values(a: Option<&Value>, b: Option<&Value>) -> Ordering {
    fn rank(v: Option<&Value>) -> u8 {
        match v {
            None => 0,
            Some(Value::Blank(_)) => 1,
            Some(Value::Iri(_)) => 2,
            Some(Value::Int(_) | Value::Dec(_) | Value::Dbl(_)) => 3,
            Some(Value::DateTime(_)) => 4,
            Some(Value::Bool(_)) => 5,
            Some(Value::Str { .. }) => 6,
            Some(Value::Other { .. }) => 7,
        }
    }
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (Some(Value::Blank(x)), Some(Value::Blank(y))) | (Some(Value::Iri(x)), Some(Value::Iri(y))) => x.cmp(y),
        (Some(Value::DateTime(x)), Some(Value::DateTime(y))) => x.cmp(y),
        (Some(Value::Bool(x)), Some(Value::Bool(y))) => x.cmp(y),
        (Some(Value::Str { lex: x, lang: lx }), Some(Value::Str { lex: y, lang: ly })) => (x, lx).cmp(&(y, ly)),
        (Some(Value::Other { lex: x, datatype: dx }), Some(Value::Other { lex: y, datatype: dy })) => {
            (dx, x).cmp(&(dy, y))
        }
        (Some(x), Some(y)) => match (x.numeric(), y.numeric()) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            _ => Ordering::Equal,
        },
        _ => Ordering::Equal,
    })
}
