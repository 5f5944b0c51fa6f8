use serde::Serialize;

use super::ast::*;
use super::lexer::{Keyword, Pos, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{pos}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

const ATOM_START: &[&str] = &[
    "NOT",
    "'('",
    "ANY",
    "ALL",
    "METRIC",
    "identifier",
    "string",
    "number",
    "TRUE",
    "FALSE",
];
const OPERAND_START: &[&str] = &["METRIC", "identifier", "string", "number", "TRUE", "FALSE"];
const LITERAL: &[&str] = &["string", "number", "TRUE", "FALSE"];

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
    end: Pos,
}

/// Parses a token stream into a query.
///
/// `end` is the position reported when input runs out; [`super::parse_text`]
/// passes the position just past the text.
pub fn parse(tokens: &[Token], end: Pos) -> Result<Query, ParseError> {
    let mut p = Parser { tokens, at: 0, end };
    let q = p.query()?;
    if p.peek().is_some() {
        return Err(p.error(&["WHERE", "ORDER", "LIMIT", "end of input"]));
    }
    Ok(q)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn bump(&mut self) -> Option<&TokenKind> {
        let t = self.tokens.get(self.at)?;
        self.at += 1;
        Some(&t.kind)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (pos, found) = match self.tokens.get(self.at) {
            Some(t) => (t.pos, t.kind.to_string()),
            None => (self.end, "end of input".to_owned()),
        };
        ParseError {
            pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.peek() == Some(&TokenKind::Keyword(kw)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw.as_str()]))
        }
    }

    fn expect(&mut self, kind: TokenKind, label: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&kind) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        self.expect_kw(Keyword::Find)?;
        let target = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Models)) => Target::Models,
            Some(TokenKind::Keyword(Keyword::Datasets)) => Target::Datasets,
            _ => return Err(self.error(&["MODELS", "DATASETS"])),
        };
        self.at += 1;
        let predicate = if self.eat_kw(Keyword::Where) {
            Some(self.or_expr()?)
        } else {
            None
        };
        let order_by = if self.eat_kw(Keyword::Order) {
            self.expect_kw(Keyword::By)?;
            let key = self.operand()?;
            let direction = if self.eat_kw(Keyword::Desc) {
                Direction::Desc
            } else {
                self.eat_kw(Keyword::Asc);
                Direction::Asc
            };
            Some(OrderBy { key, direction })
        } else {
            None
        };
        let limit = if self.eat_kw(Keyword::Limit) {
            match self.peek() {
                Some(&TokenKind::Number(n)) if n >= 1.0 && n.fract() == 0.0 && n <= u64::MAX as f64 => {
                    self.at += 1;
                    Some(n as u64)
                }
                _ => return Err(self.error(&["positive integer"])),
            }
        } else {
            None
        };
        Ok(Query {
            target,
            predicate,
            order_by,
            limit,
        })
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw(Keyword::Or) {
            let rhs = self.and_expr()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat_kw(Keyword::And) {
            let rhs = self.unary()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw(Keyword::Not) {
            return Ok(Expr::not(self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(TokenKind::LParen) => {
                self.at += 1;
                let e = self.or_expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            Some(TokenKind::Keyword(k @ (Keyword::Any | Keyword::All))) => {
                let quantifier = if *k == Keyword::Any {
                    Quantifier::Any
                } else {
                    Quantifier::All
                };
                self.at += 1;
                self.expect(TokenKind::LParen, "'('")?;
                self.expect_kw(Keyword::Instances)?;
                self.expect(TokenKind::Comma, "','")?;
                let body = self.or_expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(Expr::Quantified {
                    quantifier,
                    body: Box::new(body),
                })
            }
            Some(
                TokenKind::Ident(_)
                | TokenKind::Str(_)
                | TokenKind::Number(_)
                | TokenKind::Keyword(Keyword::Metric | Keyword::True | Keyword::False),
            ) => self.predicate(),
            _ => Err(self.error(ATOM_START)),
        }
    }

    fn predicate(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Ne) => CmpOp::Ne,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Ge) => CmpOp::Ge,
            Some(TokenKind::Keyword(Keyword::In)) => {
                self.at += 1;
                self.expect(TokenKind::LParen, "'('")?;
                let mut list = vec![self.literal()?];
                while self.peek() == Some(&TokenKind::Comma) {
                    self.at += 1;
                    list.push(self.literal()?);
                }
                self.expect(TokenKind::RParen, "')'")?;
                return Ok(Expr::In { operand: lhs, list });
            }
            Some(TokenKind::Keyword(Keyword::Contains)) => {
                self.at += 1;
                let value = self.literal()?;
                return Ok(Expr::Contains { operand: lhs, value });
            }
            _ => return Err(self.error(&["'='", "'!='", "'<'", "'<='", "'>'", "'>='", "IN", "CONTAINS"])),
        };
        self.at += 1;
        let rhs = self.operand()?;
        Ok(Expr::Compare { lhs, op, rhs })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let lit = match self.peek() {
            Some(TokenKind::Str(s)) => Literal::Str(s.clone()),
            Some(&TokenKind::Number(n)) => Literal::Num(n),
            Some(TokenKind::Keyword(Keyword::True)) => Literal::Bool(true),
            Some(TokenKind::Keyword(Keyword::False)) => Literal::Bool(false),
            _ => return Err(self.error(LITERAL)),
        };
        self.at += 1;
        Ok(lit)
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(_)) => {
                let mut segs = Vec::new();
                loop {
                    match self.bump() {
                        Some(TokenKind::Ident(s)) => segs.push(s.clone()),
                        _ => {
                            self.at -= 1;
                            return Err(self.error(&["identifier"]));
                        }
                    }
                    if self.peek() == Some(&TokenKind::Dot) {
                        self.at += 1;
                    } else {
                        break;
                    }
                }
                Ok(Operand::Path(Path(segs)))
            }
            Some(TokenKind::Keyword(Keyword::Metric)) => self.metric().map(Operand::Metric),
            Some(TokenKind::Str(_) | TokenKind::Number(_))
            | Some(TokenKind::Keyword(Keyword::True | Keyword::False)) => self.literal().map(Operand::Literal),
            _ => Err(self.error(OPERAND_START)),
        }
    }

    fn metric(&mut self) -> Result<MetricCall, ParseError> {
        self.expect_kw(Keyword::Metric)?;
        self.expect(TokenKind::LParen, "'('")?;
        let (mut dataset, mut name, mut hardware, mut slice) = (None, None, None, None);
        loop {
            let arg_pos = self.at;
            let key = match self.peek() {
                Some(TokenKind::Ident(k)) => k.clone(),
                _ => return Err(self.error(&["metric argument name"])),
            };
            let slot = match key.as_str() {
                "dataset" => &mut dataset,
                "name" => &mut name,
                "hardware" => &mut hardware,
                "slice" => &mut slice,
                _ => return Err(self.error(&["dataset", "name", "hardware", "slice"])),
            };
            if slot.is_some() {
                self.at = arg_pos;
                let mut e = self.error(&["argument not given before"]);
                e.found = format!("duplicate argument {key}");
                return Err(e);
            }
            self.at += 1;
            if self.peek() != Some(&TokenKind::Eq) {
                return Err(self.error(&["'='"]));
            }
            self.at += 1;
            let value = match self.peek() {
                Some(TokenKind::Str(s)) => s.clone(),
                _ => return Err(self.error(&["string"])),
            };
            self.at += 1;
            *slot = Some(value);
            match self.peek() {
                Some(TokenKind::Comma) => {
                    self.at += 1;
                }
                Some(TokenKind::RParen) => break,
                _ => return Err(self.error(&["','", "')'"])),
            }
        }
        let close = self.at;
        let missing: Vec<&str> = [("dataset", &dataset), ("name", &name)]
            .into_iter()
            .filter(|(_, v)| v.is_none())
            .map(|(k, _)| k)
            .collect();
        if !missing.is_empty() {
            let mut e = self.error(&missing);
            e.found = format!("{} without required argument", self.tokens[close].kind);
            return Err(e);
        }
        self.at += 1;
        Ok(MetricCall {
            dataset: dataset.unwrap_or_default(),
            name: name.unwrap_or_default(),
            hardware,
            slice,
        })
    }
}
