use std::fmt::Write;

use serde::Serialize;

use super::provider::Message;
use crate::building_model::Category;
use crate::checkscript::GRAMMAR;
use crate::rules::RuleSpec;

const PERSONA: &str = "You are an expert developer of CheckScript rule-check programs for building information models.";
const BASIC_PROMPT: &str = "Write a CheckScript program to check the following rule.";
const CONTEXT: &str = "The program runs in the CheckScript sandbox against one building model. It can only read the model: \
elements grouped by category, their typed parameters, levels with elevations, and plan geometry. Lengths are stored in \
millimeters, but every quantity carries its unit, so compare quantities directly against unit literals.";
const FORMAT: &str = "Return only the program, in a single fenced code block. Keep it clean and well structured, with # comments \
explaining each section.";
const AUDIENCE: &str = "The results are intended for construction professionals who review compliance findings and are not programmers.";

/// The earlier program and the error block it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriorAttempt {
    pub source: String,
    pub feedback: String,
}

/// Prompt sections in the order they are rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    pub rule_id: u8,
    pub persona: String,
    pub basic_prompt: String,
    pub rule_description: String,
    pub context: String,
    pub general_instructions: Vec<String>,
    pub rule_specific_instructions: Option<String>,
    pub format_instructions: String,
    pub audience: String,
    pub repair: Option<PriorAttempt>,
}

fn general_instructions(rule_id: u8) -> Vec<String> {
    let categories: Vec<&str> = Category::ALL.iter().map(|c| c.name()).collect();
    vec![
        format!("Start the program with the header `rule {rule_id}`."),
        "Follow the CheckScript grammar below exactly. Avoid syntax errors: there are no f-strings, string formatting, \
imports, assignments without `let`, or user-defined functions."
            .to_string(),
        "Read parameters with method calls such as d.param(\"width\") or d.param_or(\"clear_width\", 0 mm); \
a bare d.width is an error."
            .to_string(),
        format!("Element categories: {}.", categories.join(", ")),
        "Categorize elements into compliant and non-compliant lists: call classify(subject, compliant) or \
classify(subject, non_compliant, measured=..., required=...) exactly once for every inspected subject, and \
classify(subject, not_applicable, note=\"...\") when the rule does not apply to it."
            .to_string(),
        "Write lengths with unit literals such as 36 in, 7 ft or 914.4 mm, areas as 120 sqft, and airflow as 50 cfm. \
A bare number has no unit and cannot be compared with a quantity."
            .to_string(),
        format!("CheckScript grammar and builtins:\n{GRAMMAR}"),
    ]
}

/// Assemble the prompt for a rule, optionally carrying the previous
/// failure so the model can repair it.
pub fn build_prompt(rule: &RuleSpec, prior: Option<&PriorAttempt>) -> PromptBundle {
    PromptBundle {
        rule_id: rule.id,
        persona: PERSONA.to_string(),
        basic_prompt: BASIC_PROMPT.to_string(),
        rule_description: rule.description.to_string(),
        context: CONTEXT.to_string(),
        general_instructions: general_instructions(rule.id),
        rule_specific_instructions: rule.dsl_hint.map(str::to_string),
        format_instructions: FORMAT.to_string(),
        audience: AUDIENCE.to_string(),
        repair: prior.cloned(),
    }
}

impl PromptBundle {
    /// Everything after the persona, which travels as the system message.
    pub fn user_text(&self) -> String {
        let mut out = String::new();
        let mut section = |title: &str, body: &str| {
            let _ = write!(out, "## {title}\n{body}\n\n");
        };
        section("Task", &self.basic_prompt);
        section("Rule", &self.rule_description);
        section("Context", &self.context);
        let bullets: Vec<String> = self
            .general_instructions
            .iter()
            .map(|i| format!("- {i}"))
            .collect();
        section("General instructions", &bullets.join("\n"));
        if let Some(s) = &self.rule_specific_instructions {
            section("Rule-specific instructions", s);
        }
        section("Format", &self.format_instructions);
        section("Audience", &self.audience);
        if let Some(p) = &self.repair {
            let body = format!(
                "The previous program failed. Fix the error below and return the corrected program.\n\nPrevious program:\n```\n{}\n```\n\nError:\n```\n{}```",
                p.source.trim_end(),
                p.feedback
            );
            section("Repair", &body);
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }

    /// Full prompt text, persona first.
    pub fn render(&self) -> String {
        format!("## Persona\n{}\n\n{}", self.persona, self.user_text())
    }

    /// Two-message conversation: the persona as system, the rest as user.
    pub fn messages(&self) -> Vec<Message> {
        vec![
            Message::system(&self.persona),
            Message::user(self.user_text()),
        ]
    }
}
