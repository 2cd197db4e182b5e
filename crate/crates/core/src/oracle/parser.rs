use super::lexer::{tokenize, Tok, Token};
use super::*;
use crate::model::is_absolute_iri;
use crate::rdf::{vocab, Literal};

/// Parses the SPARQL subset described in `docs/sparql-subset.ebnf`. Anything
/// outside it is rejected with the position of the first offending token.
pub fn parse_sparql_subset(text: &str) -> Result<QueryAst, SubsetSyntaxError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        prefixes: Vec::new(),
    };
    p.query()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prefixes: Vec<(String, String)>,
}

type PResult<T> = Result<T, SubsetSyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error_here(&self, message: impl Into<String>) -> SubsetSyntaxError {
        let t = &self.toks[self.pos];
        SubsetSyntaxError {
            line: t.line,
            column: t.column,
            token: if t.tok == Tok::Eof {
                "end of input".to_string()
            } else {
                t.text.clone()
            },
            message: message.into(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected {kw}")))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{p}'")))
        }
    }

    fn query(&mut self) -> PResult<QueryAst> {
        while self.eat_kw("PREFIX") {
            let Tok::PName(prefix, local) = self.peek().clone() else {
                return Err(self.error_here("expected a prefix name"));
            };
            if !local.is_empty() {
                return Err(self.error_here("prefix declaration needs a bare 'name:'"));
            }
            self.pos += 1;
            let Tok::Iri(ns) = self.peek().clone() else {
                return Err(self.error_here("expected a namespace IRI"));
            };
            self.pos += 1;
            self.prefixes.retain(|(p, _)| *p != prefix);
            self.prefixes.push((prefix, ns));
        }

        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        let projection = if self.eat_punct("*") {
            None
        } else {
            let mut vars = Vec::new();
            while let Tok::Var(v) = self.peek().clone() {
                self.pos += 1;
                vars.push(v);
            }
            if vars.is_empty() {
                return Err(self.error_here("expected projected variables or '*'"));
            }
            Some(vars)
        };

        self.eat_kw("WHERE");
        let pattern = self.group()?;

        let mut order_by = Vec::new();
        if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            loop {
                let key = if self.is_kw("ASC") || self.is_kw("DESC") {
                    let descending = self.is_kw("DESC");
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let expr = self.expr()?;
                    self.expect_punct(")")?;
                    OrderKey { expr, descending }
                } else if let Tok::Var(v) = self.peek().clone() {
                    self.pos += 1;
                    OrderKey {
                        expr: Expr::Var(v),
                        descending: false,
                    }
                } else if self.eat_punct("(") {
                    let expr = self.expr()?;
                    self.expect_punct(")")?;
                    OrderKey {
                        expr,
                        descending: false,
                    }
                } else {
                    break;
                };
                order_by.push(key);
            }
            if order_by.is_empty() {
                return Err(self.error_here("expected an order condition"));
            }
        }

        let mut limit = None;
        if self.eat_kw("LIMIT") {
            let Tok::Integer(n) = self.peek().clone() else {
                return Err(self.error_here("expected an integer limit"));
            };
            limit = Some(n.parse::<u64>().map_err(|_| self.error_here("limit out of range"))?);
            self.pos += 1;
        }

        if *self.peek() != Tok::Eof {
            return Err(self.error_here("unexpected token"));
        }
        Ok(QueryAst {
            prefixes: self.prefixes.clone(),
            distinct,
            projection,
            pattern,
            order_by,
            limit,
        })
    }

    fn group(&mut self) -> PResult<GroupPattern> {
        self.expect_punct("{")?;
        let mut elements: Vec<GroupElement> = Vec::new();
        loop {
            if self.eat_punct("}") {
                return Ok(GroupPattern { elements });
            }
            if self.is_punct("{") {
                let mut branches = vec![self.group()?];
                while self.eat_kw("UNION") {
                    branches.push(self.group()?);
                }
                elements.push(GroupElement::Union(branches));
            } else if self.eat_kw("OPTIONAL") {
                elements.push(GroupElement::Optional(self.group()?));
            } else if self.eat_kw("FILTER") {
                let expr = if self.eat_punct("(") {
                    let e = self.expr()?;
                    self.expect_punct(")")?;
                    e
                } else {
                    self.builtin()?
                        .ok_or_else(|| self.error_here("expected '(' or a function call after FILTER"))?
                };
                elements.push(GroupElement::Filter(expr));
            } else if self.starts_subject() {
                let block = self.triples_block()?;
                match elements.last_mut() {
                    Some(GroupElement::Triples(prev)) => prev.extend(block),
                    _ => elements.push(GroupElement::Triples(block)),
                }
            } else {
                return Err(self.error_here("unexpected token in group pattern"));
            }
        }
    }

    fn starts_subject(&self) -> bool {
        matches!(self.peek(), Tok::Var(_) | Tok::Iri(_) | Tok::PName(..))
    }

    fn triples_block(&mut self) -> PResult<Vec<TriplePattern>> {
        let mut out = Vec::new();
        loop {
            let subject = match self.peek().clone() {
                Tok::Var(v) => {
                    self.pos += 1;
                    PatternTerm::Var(v)
                }
                _ => PatternTerm::Term(Term::Iri(self.iri()?)),
            };
            loop {
                let predicate = match self.peek().clone() {
                    Tok::Var(v) => {
                        self.pos += 1;
                        PatternTerm::Var(v)
                    }
                    Tok::Word(w) if w == "a" => {
                        self.pos += 1;
                        PatternTerm::Term(Term::iri(vocab::RDF_TYPE))
                    }
                    _ => PatternTerm::Term(Term::Iri(self.iri()?)),
                };
                loop {
                    let object = match self.peek().clone() {
                        Tok::Var(v) => {
                            self.pos += 1;
                            PatternTerm::Var(v)
                        }
                        _ => PatternTerm::Term(self.term()?),
                    };
                    out.push(TriplePattern {
                        subject: subject.clone(),
                        predicate: predicate.clone(),
                        object,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                let mut more = false;
                while self.eat_punct(";") {
                    more = true;
                }
                let starts_verb = matches!(self.peek(), Tok::Var(_) | Tok::Iri(_) | Tok::PName(..))
                    || matches!(self.peek(), Tok::Word(w) if w == "a");
                if !(more && starts_verb) {
                    break;
                }
            }
            if !self.eat_punct(".") || !self.starts_subject() {
                return Ok(out);
            }
        }
    }

    fn iri(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Iri(iri) => {
                if !is_absolute_iri(&iri) {
                    return Err(self.error_here("relative IRIs are not supported"));
                }
                self.pos += 1;
                Ok(iri)
            }
            Tok::PName(prefix, local) => {
                let Some((_, ns)) = self.prefixes.iter().find(|(p, _)| *p == prefix) else {
                    return Err(self.error_here(format!("undeclared prefix {prefix:?}")));
                };
                let iri = format!("{ns}{local}");
                self.pos += 1;
                Ok(iri)
            }
            _ => Err(self.error_here("expected an IRI")),
        }
    }

    /// An IRI or literal in term position.
    fn term(&mut self) -> PResult<Term> {
        let negative = match self.peek() {
            Tok::Punct("-") => Some(true),
            Tok::Punct("+") => Some(false),
            _ => None,
        };
        if let Some(negative) = negative {
            self.pos += 1;
            let sign = if negative { "-" } else { "+" };
            return match self.peek().clone() {
                Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n) => {
                    let lit = self.numeric(&format!("{sign}{n}"));
                    self.pos += 1;
                    Ok(lit)
                }
                _ => Err(self.error_here("expected a number after sign")),
            };
        }
        match self.peek().clone() {
            Tok::Str(s) => {
                self.pos += 1;
                match self.peek().clone() {
                    Tok::LangTag(lang) => {
                        self.pos += 1;
                        Ok(Term::Literal(Literal::lang_tagged(s, lang)))
                    }
                    Tok::Punct("^^") => {
                        self.pos += 1;
                        let dt = self.iri()?;
                        Ok(Term::Literal(Literal::typed(s, dt)))
                    }
                    _ => Ok(Term::Literal(Literal::simple(s))),
                }
            }
            Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n) => {
                let lit = self.numeric(&n);
                self.pos += 1;
                Ok(lit)
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                self.pos += 1;
                Ok(Term::Literal(Literal::typed(w, vocab::XSD_BOOLEAN)))
            }
            Tok::Iri(_) | Tok::PName(..) => Ok(Term::Iri(self.iri()?)),
            _ => Err(self.error_here("expected an RDF term")),
        }
    }

    fn numeric(&self, lexical: &str) -> Term {
        let datatype = match self.peek() {
            Tok::Integer(_) => vocab::XSD_INTEGER,
            Tok::Decimal(_) => vocab::XSD_DECIMAL,
            _ => vocab::XSD_DOUBLE,
        };
        Term::Literal(Literal::typed(lexical, datatype))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_punct("||") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.relational()?;
        while self.eat_punct("&&") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.relational()?));
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(self.additive()?)))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat_punct("+") {
                ArithOp::Add
            } else if self.eat_punct("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(self.multiplicative()?));
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_punct("*") {
            lhs = Expr::Arith(ArithOp::Mul, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        if let Some(call) = self.builtin()? {
            return Ok(call);
        }
        if let Tok::Var(v) = self.peek().clone() {
            self.pos += 1;
            return Ok(Expr::Var(v));
        }
        Ok(Expr::Const(self.term()?))
    }

    fn builtin(&mut self) -> PResult<Option<Expr>> {
        let Tok::Word(name) = self.peek().clone() else {
            return Ok(None);
        };
        let arity: &[usize] = match name.to_ascii_uppercase().as_str() {
            "STR" | "LCASE" => &[1],
            "CONTAINS" => &[2],
            "REGEX" => &[2, 3],
            _ => return Ok(None),
        };
        self.pos += 1;
        self.expect_punct("(")?;
        let mut args = vec![self.expr()?];
        while self.eat_punct(",") {
            args.push(self.expr()?);
        }
        if !arity.contains(&args.len()) {
            return Err(self.error_here(format!("wrong number of arguments to {name}")));
        }
        self.expect_punct(")")?;
        let mut args = args.into_iter().map(Box::new);
        let mut arg = || args.next().expect("arity checked");
        Ok(Some(match name.to_ascii_uppercase().as_str() {
            "STR" => Expr::Str(arg()),
            "LCASE" => Expr::Lcase(arg()),
            "CONTAINS" => Expr::Contains(arg(), arg()),
            _ => {
                let (text, pattern) = (arg(), arg());
                Expr::Regex(text, pattern, args.next())
            }
        }))
    }
}
