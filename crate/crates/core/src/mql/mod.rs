//! MQL, the model-zoo query language.
//!
//! ```text
//! query      := FIND (MODELS | DATASETS) [WHERE expr]
//!               [ORDER BY operand [ASC | DESC]] [LIMIT int]
//! expr       := and {OR and}
//! and        := unary {AND unary}
//! unary      := NOT unary | atom
//! atom       := '(' expr ')'
//!             | (ANY | ALL) '(' INSTANCES ',' expr ')'
//!             | operand cmp operand
//!             | operand IN '(' literal {',' literal} ')'
//!             | operand CONTAINS literal
//! operand    := path | literal
//!             | METRIC '(' key '=' string {',' key '=' string} ')'
//! ```

mod analyze;
mod ast;
mod eval;
mod explain;
mod lexer;
mod parser;
mod tribool;

use std::time::Instant;

use serde::Serialize;

pub use analyze::{
    analyze, bind, AnalysisError, AnalysisErrorKind, Binding, BoundPath, Field, FieldDef, IndexUse, ScalarType, Scope,
    TExpr, TOperand, TypedQuery, CATALOG,
};
pub use ast::{
    pretty_print, CmpOp, Direction, Expr, Literal, MetricCall, Operand, OrderBy, Path, Quantifier, Query, Target,
};
pub use eval::{evaluate, resolve_metric, truth, EvalContext, MetricHit, MetricPolicy};
pub use explain::{explain, Plan};
pub use lexer::{tokenize, Keyword, LexError, Pos, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use tribool::TriBool;

use crate::metamodel::Record;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MqlError {
    #[error("lexical error at {0}")]
    Lex(#[from] LexError),
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("analysis error: {0}")]
    Analysis(#[from] AnalysisError),
}

impl MqlError {
    pub fn code(&self) -> &'static str {
        match self {
            MqlError::Lex(_) | MqlError::Syntax(_) => "SYNTAX_ERROR",
            MqlError::Analysis(_) => "ANALYSIS_ERROR",
        }
    }

    pub fn pos(&self) -> Option<Pos> {
        match self {
            MqlError::Lex(e) => Some(e.pos),
            MqlError::Syntax(e) => Some(e.pos),
            MqlError::Analysis(_) => None,
        }
    }

    /// Structured detail for API error bodies.
    pub fn detail(&self) -> serde_json::Value {
        match self {
            MqlError::Lex(e) => serde_json::json!({ "position": e.pos, "message": e.message }),
            MqlError::Syntax(e) => serde_json::to_value(e).unwrap_or_default(),
            MqlError::Analysis(e) => serde_json::to_value(e).unwrap_or_default(),
        }
    }
}

fn end_pos(text: &str) -> Pos {
    let mut pos = Pos { line: 1, column: 1 };
    for c in text.chars() {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    }
    pos
}

/// Tokenizes and parses query text.
pub fn parse_text(text: &str) -> Result<Query, MqlError> {
    let tokens = tokenize(text)?;
    Ok(parse(&tokens, end_pos(text))?)
}

/// Parses and analyzes query text.
pub fn compile(text: &str) -> Result<TypedQuery, MqlError> {
    Ok(analyze(&parse_text(text)?)?)
}

/// Result page of one query run.
#[derive(Debug, Clone, Serialize)]
pub struct QueryOutput<'a> {
    pub count: usize,
    pub elapsed_ms: f64,
    pub plan: Plan,
    pub results: Vec<&'a Record>,
}

/// Compiles and evaluates `text` against the context's store.
pub fn run<'a>(text: &str, ctx: EvalContext<'a>) -> Result<QueryOutput<'a>, MqlError> {
    let start = Instant::now();
    let q = compile(text)?;
    let results = evaluate(&q, ctx);
    Ok(QueryOutput {
        count: results.len(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
        plan: explain(&q),
        results,
    })
}

/// A natural-language question and its MQL translation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CannedQuery {
    pub id: u8,
    pub question: &'static str,
    pub mql: &'static str,
}

/// The seven motivating questions, translated. Query 2 reads "from COCO and
/// OpenImage" as either source (`IN`); requiring both would be
/// `source CONTAINS "COCO" AND source CONTAINS "OpenImage"`.
pub const CANNED_QUERIES: [CannedQuery; 7] = [
    CannedQuery {
        id: 1,
        question: "Text classification models trained on data crowdsourced by at least 50 people",
        mql: r#"FIND MODELS WHERE task = "text-classification" AND trained_on.collection_method = "crowdsourced" AND trained_on.annotator_count >= 50"#,
    },
    CannedQuery {
        id: 2,
        question: "Datasets collected from COCO and OpenImage that contain only dogs",
        mql: r#"FIND DATASETS WHERE source IN ("COCO", "OpenImage") AND ALL(INSTANCES, labels CONTAINS "dog")"#,
    },
    CannedQuery {
        id: 3,
        question: "Models trained on ImageNet with accuracy above 90%",
        mql: r#"FIND MODELS WHERE trained_on.name = "ImageNet" AND metric(dataset="ImageNet", name="accuracy") > 0.90"#,
    },
    CannedQuery {
        id: 4,
        question: "The person detection model that performs best on COCO",
        mql: r#"FIND MODELS WHERE task = "person-detection" ORDER BY metric(dataset="COCO", name="map") DESC LIMIT 1"#,
    },
    CannedQuery {
        id: 5,
        question: "Person detection models with no gender bias",
        mql: r#"FIND MODELS WHERE task = "person-detection" AND metric(dataset="fairness-faces", name="demographic_parity_gap") <= 0.01"#,
    },
    CannedQuery {
        id: 6,
        question: "Text generation models that do not generate hate speech",
        mql: r#"FIND MODELS WHERE task = "text-generation" AND metric(dataset="toxicity-bench", name="hate_speech_rate") = 0"#,
    },
    CannedQuery {
        id: 7,
        question: "Image classification models suitable to deploy on edge devices",
        mql: r#"FIND MODELS WHERE task = "image-classification" AND metric(hardware="edge", name="latency_ms", dataset="ImageNet") <= 50 AND metric(hardware="edge", name="memory_footprint_mb", dataset="ImageNet") <= 512"#,
    },
];
