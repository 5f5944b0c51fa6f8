use std::fmt;

use serde::Serialize;

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Find,
    Models,
    Datasets,
    Where,
    Order,
    By,
    Asc,
    Desc,
    Limit,
    And,
    Or,
    Not,
    In,
    Contains,
    Any,
    All,
    Instances,
    Metric,
    True,
    False,
}

impl Keyword {
    const ALL: [Keyword; 20] = [
        Keyword::Find,
        Keyword::Models,
        Keyword::Datasets,
        Keyword::Where,
        Keyword::Order,
        Keyword::By,
        Keyword::Asc,
        Keyword::Desc,
        Keyword::Limit,
        Keyword::And,
        Keyword::Or,
        Keyword::Not,
        Keyword::In,
        Keyword::Contains,
        Keyword::Any,
        Keyword::All,
        Keyword::Instances,
        Keyword::Metric,
        Keyword::True,
        Keyword::False,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Find => "FIND",
            Keyword::Models => "MODELS",
            Keyword::Datasets => "DATASETS",
            Keyword::Where => "WHERE",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Asc => "ASC",
            Keyword::Desc => "DESC",
            Keyword::Limit => "LIMIT",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::In => "IN",
            Keyword::Contains => "CONTAINS",
            Keyword::Any => "ANY",
            Keyword::All => "ALL",
            Keyword::Instances => "INSTANCES",
            Keyword::Metric => "METRIC",
            Keyword::True => "TRUE",
            Keyword::False => "FALSE",
        }
    }

    /// Case-insensitive keyword lookup.
    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Str(String),
    /// Numeric literal; `90%` is already normalized to `0.9`.
    Number(f64),
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => f.write_str(k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier {s}"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Dot => f.write_str("'.'"),
            TokenKind::Eq => f.write_str("'='"),
            TokenKind::Ne => f.write_str("'!='"),
            TokenKind::Lt => f.write_str("'<'"),
            TokenKind::Le => f.write_str("'<='"),
            TokenKind::Gt => f.write_str("'>'"),
            TokenKind::Ge => f.write_str("'>='"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

/// Splits query text into tokens. Keywords are case-insensitive; strings
/// are double-quoted with `\"`, `\\`, `\n`, `\t` and `\r` escapes.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.pos;
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '(' => single(&mut cur, TokenKind::LParen),
            ')' => single(&mut cur, TokenKind::RParen),
            ',' => single(&mut cur, TokenKind::Comma),
            '.' => single(&mut cur, TokenKind::Dot),
            '=' => single(&mut cur, TokenKind::Eq),
            '!' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    TokenKind::Ne
                } else {
                    return Err(LexError {
                        pos: start,
                        message: "illegal character '!'".into(),
                    });
                }
            }
            '<' | '>' => {
                cur.bump();
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                match (c, eq) {
                    ('<', false) => TokenKind::Lt,
                    ('<', true) => TokenKind::Le,
                    ('>', false) => TokenKind::Gt,
                    _ => TokenKind::Ge,
                }
            }
            '"' => string(&mut cur, start)?,
            '-' | '0'..='9' => number(&mut cur, start)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                match Keyword::lookup(&word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word),
                }
            }
            other => {
                return Err(LexError {
                    pos: start,
                    message: format!("illegal character {other:?}"),
                })
            }
        };
        tokens.push(Token { kind, pos: start });
    }
    Ok(tokens)
}

fn single(cur: &mut Cursor<'_>, kind: TokenKind) -> TokenKind {
    cur.bump();
    kind
}

fn string(cur: &mut Cursor<'_>, start: Pos) -> Result<TokenKind, LexError> {
    cur.bump();
    let mut s = String::new();
    loop {
        let esc_pos = cur.pos;
        match cur.bump() {
            None => {
                return Err(LexError {
                    pos: start,
                    message: "unterminated string".into(),
                })
            }
            Some('"') => return Ok(TokenKind::Str(s)),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some('r') => s.push('\r'),
                Some(other) => {
                    return Err(LexError {
                        pos: esc_pos,
                        message: format!("unknown escape \\{other}"),
                    })
                }
                None => {
                    return Err(LexError {
                        pos: start,
                        message: "unterminated string".into(),
                    })
                }
            },
            Some(c) => s.push(c),
        }
    }
}

fn number(cur: &mut Cursor<'_>, start: Pos) -> Result<TokenKind, LexError> {
    let mut text = String::new();
    if cur.peek() == Some('-') {
        text.push('-');
        cur.bump();
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(LexError {
                pos: start,
                message: "illegal character '-'".into(),
            });
        }
    }
    let digits = |cur: &mut Cursor<'_>, text: &mut String| {
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            text.push(c);
            cur.bump();
        }
    };
    digits(cur, &mut text);
    if cur.peek() == Some('.') {
        text.push('.');
        cur.bump();
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(LexError {
                pos: start,
                message: format!("malformed number {text:?}"),
            });
        }
        digits(cur, &mut text);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        text.push('e');
        cur.bump();
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            text.push(sign);
            cur.bump();
        }
        if !cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(LexError {
                pos: start,
                message: format!("malformed number {text:?}"),
            });
        }
        digits(cur, &mut text);
    }
    let mut value: f64 = text.parse().map_err(|_| LexError {
        pos: start,
        message: format!("malformed number {text:?}"),
    })?;
    if cur.peek() == Some('%') {
        cur.bump();
        value /= 100.0;
    }
    if !value.is_finite() {
        return Err(LexError {
            pos: start,
            message: format!("number {text:?} out of range"),
        });
    }
    Ok(TokenKind::Number(value))
}
