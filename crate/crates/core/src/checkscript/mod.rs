//! A small, sandboxed language for rule-check programs.
//!
//! A program optionally names its rule (`rule 3`), then walks model
//! elements and classifies each subject exactly once. Execution can only
//! read the model and rule configuration, and is bounded by a step budget.

mod ast;
mod interp;
mod lexer;
mod parser;
mod render;
mod types;

use std::fmt;

use serde::Serialize;

pub use ast::*;
pub use interp::{execute_with, ExecOptions, Execution, DEFAULT_STEP_BUDGET};
pub use parser::parse;
pub use render::{render, render_expr};
pub use types::{typecheck, Ty, FUNCTIONS, GEOMETRY_NAMES, METHODS};

use crate::building_model::BuildingModel;
use crate::rules::{CheckResult, RuleConfig, RULE_COUNT};

/// The grammar in EBNF, with the builtin reference appended.
pub const GRAMMAR: &str = include_str!("../../docs/checkscript.ebnf");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lex,
    Parse,
    Type,
    Runtime,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Lex => "lex",
            Phase::Parse => "parse",
            Phase::Type => "type",
            Phase::Runtime => "runtime",
        })
    }
}

/// A positioned error from any phase. The message stands on its own so it
/// can be handed back verbatim as repair feedback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{phase} error at line {line}, column {column}: {message}")]
pub struct ScriptError {
    pub phase: Phase,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ScriptError {
    pub fn new(phase: Phase, span: Span, message: impl Into<String>) -> Self {
        Self {
            phase,
            line: span.line.max(1),
            column: span.column.max(1),
            message: message.into(),
        }
    }
}

/// Error block quoting the offending line with a caret under the column:
///
/// ```text
/// error[parse] at line 1, column 13: expected an expression, found end of input
///   |
/// 1 | if d.width >
///   |             ^
/// ```
pub fn feedback_text(err: &ScriptError, source: &str) -> String {
    let line_text = source
        .split('\n')
        .nth(err.line - 1)
        .unwrap_or("")
        .trim_end_matches('\r');
    let number = err.line.to_string();
    let gutter = " ".repeat(number.len());
    let pad: String = line_text
        .chars()
        .chain(std::iter::repeat(' '))
        .take(err.column - 1)
        .map(|c| if c == '\t' { '\t' } else { ' ' })
        .collect();
    format!(
        "error[{}] at line {}, column {}: {}\n{gutter} |\n{number} | {line_text}\n{gutter} | {pad}^\n",
        err.phase, err.line, err.column, err.message
    )
}

/// Type-check and run with the default configuration and step budget.
pub fn execute(prog: &CheckProgram, model: &BuildingModel) -> Result<CheckResult, ScriptError> {
    execute_with(prog, model, &RuleConfig::default(), &ExecOptions::default()).map(|x| x.result)
}

/// Parse a program meant for `rule_id`. A missing header is filled in; a
/// header naming a different rule is a type error.
pub fn parse_for_rule(source: &str, rule_id: u8) -> Result<CheckProgram, ScriptError> {
    let mut prog = parse(source)?;
    match prog.rule_id {
        None => prog.rule_id = Some(rule_id),
        Some(id) if id == rule_id => {}
        Some(id) => {
            return Err(ScriptError::new(
                Phase::Type,
                Span::new(1, 1),
                format!("script declares rule {id} but rule {rule_id} was requested"),
            ))
        }
    }
    typecheck(&prog)?;
    Ok(prog)
}

const REFERENCE_SCRIPTS: [&str; RULE_COUNT as usize] = [
    include_str!("../../scripts/rule01.chk"),
    include_str!("../../scripts/rule02.chk"),
    include_str!("../../scripts/rule03.chk"),
    include_str!("../../scripts/rule04.chk"),
    include_str!("../../scripts/rule05.chk"),
    include_str!("../../scripts/rule06.chk"),
    include_str!("../../scripts/rule07.chk"),
    include_str!("../../scripts/rule08.chk"),
    include_str!("../../scripts/rule09.chk"),
    include_str!("../../scripts/rule10.chk"),
    include_str!("../../scripts/rule11.chk"),
    include_str!("../../scripts/rule12.chk"),
];

/// Shipped check program for a rule, as source text.
pub fn reference_script(rule_id: u8) -> Option<&'static str> {
    REFERENCE_SCRIPTS
        .get(usize::from(rule_id).checked_sub(1)?)
        .copied()
}
