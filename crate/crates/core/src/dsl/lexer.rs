use chrono::NaiveDate;

use super::{DslError, ErrorKind};
use crate::value::parse_iso_date;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Class,
    /// A bare word or colon-separated path.
    Word(String),
    Str(String),
    Num(f64),
    Date(NaiveDate),
    Bool(bool),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    Ne,
    Lt,
    Le,
    Ge,
    Includes,
    Contains,
    Matches,
    Exists,
    And,
    Or,
    Not,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Class => "`class`".into(),
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Date(d) => format!("date {d}"),
            Tok::Bool(b) => format!("`{b}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Includes => "`includes`".into(),
            Tok::Contains => "`contains`".into(),
            Tok::Matches => "`matches`".into(),
            Tok::Exists => "`exists`".into(),
            Tok::And => "`AND`".into(),
            Tok::Or => "`OR`".into(),
            Tok::Not => "`NOT`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    }
    .run()
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

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
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

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> DslError {
        DslError {
            kind: ErrorKind::Lexical,
            line,
            column,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, DslError> {
        let mut tokens = Vec::new();
        loop {
            self.skip_trivia();
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                tokens.push(Token {
                    tok: Tok::Eof,
                    line,
                    column,
                });
                return Ok(tokens);
            };
            let tok = match c {
                '{' => self.single(Tok::LBrace),
                '}' => self.single(Tok::RBrace),
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                ',' => self.single(Tok::Comma),
                '=' => self.single(Tok::Eq),
                '!' if self.peek_at(1) == Some('=') => {
                    self.bump();
                    self.single(Tok::Ne)
                }
                '<' if self.peek_at(1) == Some('=') => {
                    self.bump();
                    self.single(Tok::Le)
                }
                '<' => self.single(Tok::Lt),
                '>' if self.peek_at(1) == Some('=') => {
                    self.bump();
                    self.single(Tok::Ge)
                }
                '"' => self.string(line, column)?,
                c if c.is_ascii_digit() => self.number(line, column)?,
                '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => {
                    self.number(line, column)?
                }
                c if c.is_ascii_alphabetic() || c == '_' => self.word()?,
                other => return Err(self.error(line, column, format!("unexpected character `{other}`"))),
            };
            tokens.push(Token { tok, line, column });
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn string(&mut self, line: usize, column: usize) -> Result<Tok, DslError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated string")),
                Some('"') => return Ok(Tok::Str(out)),
                Some('\\') => {
                    let (l, c) = (self.line, self.column);
                    match self.bump() {
                        Some('"') => out.push('"'),
                        Some('\\') => out.push('\\'),
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some(other) => {
                            return Err(self.error(l, c, format!("unknown escape `\\{other}`")))
                        }
                        None => return Err(self.error(line, column, "unterminated string")),
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self, line: usize, column: usize) -> Result<Tok, DslError> {
        // Dates look like numbers at first: YYYY-MM-DD.
        if self.peek() != Some('-') {
            let candidate: String = self.chars[self.pos..].iter().take(10).collect();
            let after = self.peek_at(10);
            if let Some(date) = parse_iso_date(&candidate) {
                if !after.is_some_and(|c| c.is_ascii_alphanumeric()) {
                    for _ in 0..10 {
                        self.bump();
                    }
                    return Ok(Tok::Date(date));
                }
            }
        }
        let mut text = String::new();
        if self.peek() == Some('-') {
            text.push('-');
            self.bump();
        }
        self.digits(&mut text);
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            text.push('.');
            self.bump();
            self.digits(&mut text);
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let sign = matches!(self.peek_at(1), Some('+') | Some('-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                text.push('e');
                self.bump();
                if sign {
                    text.push(self.bump().unwrap());
                }
                self.digits(&mut text);
            }
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(self.error(line, column, format!("malformed number `{text}…`")));
        }
        text.parse::<f64>()
            .ok()
            .filter(|n| n.is_finite())
            .map(Tok::Num)
            .ok_or_else(|| self.error(line, column, format!("malformed number `{text}`")))
    }

    fn digits(&mut self, out: &mut String) {
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            out.push(c);
            self.bump();
        }
    }

    fn word(&mut self) -> Result<Tok, DslError> {
        let mut text = String::new();
        loop {
            while let Some(c) = self
                .peek()
                .filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-')
            {
                text.push(c);
                self.bump();
            }
            if self.peek() == Some(':') {
                text.push(':');
                self.bump();
                match self.peek() {
                    Some(c) if c.is_ascii_alphabetic() || c == '_' => continue,
                    _ => {
                        return Err(self.error(
                            self.line,
                            self.column,
                            format!("empty path segment after `{text}`"),
                        ))
                    }
                }
            }
            break;
        }
        Ok(match text.as_str() {
            "class" => Tok::Class,
            "includes" => Tok::Includes,
            "contains" => Tok::Contains,
            "matches" => Tok::Matches,
            "exists" => Tok::Exists,
            "AND" => Tok::And,
            "OR" => Tok::Or,
            "NOT" => Tok::Not,
            "true" => Tok::Bool(true),
            "false" => Tok::Bool(false),
            _ => Tok::Word(text),
        })
    }
}
