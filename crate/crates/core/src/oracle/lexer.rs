use super::SubsetSyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Iri(String),
    /// Prefix and local part of a prefixed name; `ex:` has an empty local.
    PName(String, String),
    Var(String),
    Str(String),
    LangTag(String),
    Integer(String),
    Decimal(String),
    Double(String),
    /// A bare word: keyword, `a`, `true`/`false`, or something unsupported.
    Word(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub text: String,
}

const PUNCT: [&str; 19] = [
    "^^", "&&", "||", "!=", "<=", ">=", "{", "}", "(", ")", ".", ";", ",", "*", "=", "<", ">", "+", "-",
];

pub(super) fn tokenize(input: &str) -> Result<Vec<Token>, SubsetSyntaxError> {
    let mut lx = Lexer {
        chars: input.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let (line, column, start) = (lx.line, lx.column, lx.pos);
        let tok = lx.next_tok()?;
        let text: String = lx.chars[start..lx.pos].iter().collect();
        let eof = tok == Tok::Eof;
        out.push(Token { tok, line, column, text });
        if eof {
            return Ok(out);
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, token: impl Into<String>, message: impl Into<String>) -> SubsetSyntaxError {
        SubsetSyntaxError {
            line,
            column,
            token: token.into(),
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| f(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    /// Length of an IRIREF starting at the current `<`, if one is there.
    fn iri_ref_len(&self) -> Option<usize> {
        let mut k = 1;
        loop {
            match self.peek_at(k)? {
                '>' => return Some(k + 1),
                c if c <= ' ' || "<\"{}|^`\\".contains(c) => return None,
                _ => k += 1,
            }
        }
    }

    fn next_tok(&mut self) -> Result<Tok, SubsetSyntaxError> {
        let (line, column) = (self.line, self.column);
        let Some(c) = self.peek() else {
            return Ok(Tok::Eof);
        };

        if c == '<' {
            if let Some(len) = self.iri_ref_len() {
                self.bump();
                let iri: String = (0..len - 2).filter_map(|_| self.bump()).collect();
                self.bump();
                return Ok(Tok::Iri(iri));
            }
        }
        if c == '?' || c == '$' {
            self.bump();
            let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
            if name.is_empty() {
                return Err(self.error(line, column, c.to_string(), "variable name expected"));
            }
            return Ok(Tok::Var(name));
        }
        if c == '"' || c == '\'' {
            return self.string(c, line, column);
        }
        if c == '@' {
            self.bump();
            let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
            if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err(self.error(line, column, format!("@{tag}"), "malformed language tag"));
            }
            return Ok(Tok::LangTag(tag.to_ascii_lowercase()));
        }
        if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            return Ok(self.number());
        }
        if c.is_alphabetic() || c == '_' || c == ':' {
            return self.word_or_pname(line, column);
        }
        for p in PUNCT {
            if p.chars().enumerate().all(|(k, pc)| self.peek_at(k) == Some(pc)) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok(Tok::Punct(p));
            }
        }
        Err(self.error(line, column, c.to_string(), "unexpected character"))
    }

    fn string(&mut self, quote: char, line: usize, column: usize) -> Result<Tok, SubsetSyntaxError> {
        self.bump();
        let mut s = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error(line, column, quote.to_string(), "unterminated string"));
            };
            match c {
                '\n' | '\r' => return Err(self.error(line, column, quote.to_string(), "line break in string")),
                c if c == quote => return Ok(Tok::Str(s)),
                '\\' => {
                    let (el, ec) = (self.line, self.column - 1);
                    let escaped = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some(u @ ('u' | 'U')) => {
                            let width = if u == 'u' { 4 } else { 8 };
                            let hex: String = (0..width).filter_map(|_| self.bump()).collect();
                            u32::from_str_radix(&hex, 16)
                                .ok()
                                .filter(|_| hex.len() == width && hex.chars().all(|c| c.is_ascii_hexdigit()))
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.error(el, ec, format!("\\{u}{hex}"), "bad unicode escape"))?
                        }
                        other => {
                            let shown = other.map(|c| format!("\\{c}")).unwrap_or_else(|| "\\".into());
                            return Err(self.error(el, ec, shown, "unknown escape"));
                        }
                    };
                    s.push(escaped);
                }
                c => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Tok {
        let int = self.take_while(|c| c.is_ascii_digit());
        let mut text = int;
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
            self.bump();
            text.push('.');
            text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            decimal = true;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let signed = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if signed { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                for _ in 0..digit_at {
                    text.push(self.bump().unwrap_or('e'));
                }
                text.push_str(&self.take_while(|c| c.is_ascii_digit()));
                return Tok::Double(text);
            }
        }
        if decimal {
            Tok::Decimal(text)
        } else {
            Tok::Integer(text)
        }
    }

    fn word_or_pname(&mut self, line: usize, column: usize) -> Result<Tok, SubsetSyntaxError> {
        let name_char = |c: char| c.is_alphanumeric() || c == '_' || c == '-';
        let prefix = self.take_while(name_char);
        if self.peek() != Some(':') {
            return Ok(Tok::Word(prefix));
        }
        self.bump();
        let mut local = self.take_while(|c| name_char(c) || c == '.' || c == ':');
        // a trailing '.' ends the triple, not the name
        while local.ends_with('.') {
            local.pop();
            self.pos -= 1;
            self.column -= 1;
        }
        if prefix.ends_with('-') || prefix.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
            return Err(self.error(line, column, format!("{prefix}:{local}"), "malformed prefixed name"));
        }
        Ok(Tok::PName(prefix, local))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn less_than_versus_iri() {
        assert_eq!(
            toks("?a < 5 <http://x> <= ?b"),
            vec![
                Tok::Var("a".into()),
                Tok::Punct("<"),
                Tok::Integer("5".into()),
                Tok::Iri("http://x".into()),
                Tok::Punct("<="),
                Tok::Var("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_trailing_dots() {
        assert_eq!(
            toks("5. 1.25 .5 2e3 7E-1"),
            vec![
                Tok::Integer("5".into()),
                Tok::Punct("."),
                Tok::Decimal("1.25".into()),
                Tok::Decimal(".5".into()),
                Tok::Double("2e3".into()),
                Tok::Double("7E-1".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn strings_and_pnames() {
        assert_eq!(
            toks(r#""a\"bé"@EN ex:x. sosa:"#),
            vec![
                Tok::Str("a\"bé".into()),
                Tok::LangTag("en".into()),
                Tok::PName("ex".into(), "x".into()),
                Tok::Punct("."),
                Tok::PName("sosa".into(), "".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("SELECT\n  ?x").unwrap();
        assert_eq!((t[1].line, t[1].column), (2, 3));
        let err = tokenize("?x ~").unwrap_err();
        assert_eq!((err.line, err.column, err.token.as_str()), (1, 4, "~"));
    }
}
