//! Prompt construction, provider calls, and the generate, execute and
//! repair loop that turns a rule description into a working check program.

mod prompt;
mod provider;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::Serialize;

pub use prompt::{build_prompt, PriorAttempt, PromptBundle};
pub use provider::{
    load_provider_configs, ApiKey, ApiKind, FixtureProvider, HttpProvider, Message, Provider,
    ProviderConfig, ProviderError, Role, Task,
};

use crate::building_model::BuildingModel;
use crate::checkscript::{
    execute_with, feedback_text, parse_for_rule, CheckProgram, ExecOptions, Phase, ScriptError,
    Span,
};
use crate::rules::{CheckResult, RuleConfig, RuleSpec};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("the completion contains no program text")]
pub struct EmptyCompletion;

/// Body of the first fenced code block, or the whole completion trimmed
/// when there is none. An unclosed fence runs to the end of the text.
pub fn extract_source(completion: &str) -> Result<String, EmptyCompletion> {
    let mut lines = completion.lines();
    let mut body: Option<Vec<&str>> = None;
    for line in lines.by_ref() {
        if line.trim_start().starts_with("```") {
            body = Some(Vec::new());
            break;
        }
    }
    let text = match body {
        None => completion.trim().to_string(),
        Some(mut b) => {
            for line in lines {
                if line.trim_start().starts_with("```") {
                    break;
                }
                b.push(line);
            }
            b.join("\n")
        }
    };
    if text.trim().is_empty() {
        return Err(EmptyCompletion);
    }
    Ok(text)
}

/// Success rate of a session in percent, rounded half-up to one decimal:
/// one correct program over every attempt made, the first included.
pub fn success_rate(success: bool, attempts_used: usize) -> f64 {
    if !success || attempts_used == 0 {
        return 0.0;
    }
    let n = attempts_used as u64;
    // floor(1000 / n + 1/2) tenths, in integers.
    let tenths = (2000 + n) / (2 * n);
    tenths as f64 / 10.0
}

/// Source of timestamps for latency measurement.
pub trait Clock: Send + Sync {
    fn now_secs(&self) -> f64;
}

/// Wall-clock time since construction.
#[derive(Debug)]
pub struct WallClock(Instant);

impl Default for WallClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Advances a fixed step on every reading, so each measured interval is
/// exactly one step. For reproducible outputs.
#[derive(Debug)]
pub struct SteppingClock {
    step_micros: u64,
    ticks: AtomicU64,
}

impl SteppingClock {
    pub fn new(step_secs: f64) -> Self {
        Self {
            step_micros: (step_secs * 1e6).round() as u64,
            ticks: AtomicU64::new(0),
        }
    }
}

impl Clock for SteppingClock {
    fn now_secs(&self) -> f64 {
        let t = self.ticks.fetch_add(1, Ordering::Relaxed);
        (t * self.step_micros) as f64 / 1e6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    LexError,
    ParseError,
    TypeError,
    RuntimeError,
    ProviderError,
}

impl From<Phase> for Outcome {
    fn from(p: Phase) -> Self {
        match p {
            Phase::Lex => Outcome::LexError,
            Phase::Parse => Outcome::ParseError,
            Phase::Type => Outcome::TypeError,
            Phase::Runtime => Outcome::RuntimeError,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    /// 1-based.
    pub index: usize,
    pub prompt_rendered: String,
    pub completion: String,
    pub extracted_source: Option<String>,
    pub outcome: Outcome,
    pub error: Option<ScriptError>,
    /// Caret-marked error block sent back with the next prompt.
    pub feedback: Option<String>,
    pub provider_error: Option<String>,
    /// Measured wall-clock seconds around the provider call.
    pub latency_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairSession {
    pub rule_id: u8,
    pub provider: String,
    pub attempts: Vec<Attempt>,
    pub status: bool,
    /// Attempts after the first when successful; every attempt otherwise.
    pub correction_attempts: usize,
    pub success_rate_percent: f64,
    /// Source of the program that ran cleanly.
    pub source: Option<String>,
    #[serde(skip)]
    pub program: Option<CheckProgram>,
    pub result: Option<CheckResult>,
}

impl RepairSession {
    pub fn attempts_used(&self) -> usize {
        self.attempts.len()
    }

    /// Latency of the attempt that succeeded.
    pub fn processing_time_secs(&self) -> Option<f64> {
        self.attempts
            .iter()
            .find(|a| a.outcome == Outcome::Ok)
            .map(|a| a.latency_secs)
    }

    /// Every attempt with its prompt, response and feedback, as text.
    pub fn transcript(&self) -> String {
        let mut out = format!(
            "session: rule {} with provider {}\n",
            self.rule_id, self.provider
        );
        for a in &self.attempts {
            out.push_str(&format!(
                "\n=== attempt {} ({:?}, {:.3} s measured) ===\n",
                a.index, a.outcome, a.latency_secs
            ));
            out.push_str("--- prompt ---\n");
            out.push_str(&a.prompt_rendered);
            out.push_str("--- completion ---\n");
            out.push_str(a.completion.trim_end());
            out.push('\n');
            if let Some(e) = &a.provider_error {
                out.push_str(&format!("--- provider error ---\n{e}\n"));
            }
            if let Some(f) = &a.feedback {
                out.push_str("--- feedback ---\n");
                out.push_str(f);
            }
        }
        out.push_str(&format!(
            "\nstatus: {}; attempts: {}; corrections: {}; success rate: {:.1}%\n",
            if self.status { "success" } else { "failed" },
            self.attempts_used(),
            self.correction_attempts,
            self.success_rate_percent
        ));
        out
    }
}

pub struct RepairOptions<'a> {
    pub max_attempts: usize,
    pub config: &'a RuleConfig,
    pub exec: ExecOptions,
    pub clock: &'a dyn Clock,
}

/// Run the loop with defaults: 10 attempts, shipped rule configuration,
/// default step budget, wall-clock latency.
pub fn generate_check(
    provider: &dyn Provider,
    rule: &RuleSpec,
    model: &BuildingModel,
    max_attempts: usize,
) -> RepairSession {
    let config = RuleConfig::default();
    let clock = WallClock::default();
    let opts = RepairOptions {
        max_attempts,
        config: &config,
        exec: ExecOptions::default(),
        clock: &clock,
    };
    generate_check_with(provider, rule, model, &opts)
}

pub fn generate_check_with(
    provider: &dyn Provider,
    rule: &RuleSpec,
    model: &BuildingModel,
    opts: &RepairOptions<'_>,
) -> RepairSession {
    let max_attempts = opts.max_attempts.max(1);
    let mut attempts = Vec::new();
    let mut prior: Option<PriorAttempt> = None;
    let mut success = None;
    for index in 1..=max_attempts {
        let bundle = build_prompt(rule, prior.as_ref());
        let prompt_rendered = bundle.render();
        let start = opts.clock.now_secs();
        let reply = provider.complete(
            &bundle.messages(),
            Task::Generate {
                rule_id: rule.id,
                attempt: index,
            },
        );
        let latency_secs = opts.clock.now_secs() - start;
        let mut attempt = Attempt {
            index,
            prompt_rendered,
            completion: String::new(),
            extracted_source: None,
            outcome: Outcome::ProviderError,
            error: None,
            feedback: None,
            provider_error: None,
            latency_secs,
        };
        match reply {
            Err(e) => attempt.provider_error = Some(e.to_string()),
            Ok(completion) => {
                attempt.completion = completion;
                let source = extract_source(&attempt.completion).unwrap_or_default();
                match run(&source, rule.id, model, opts) {
                    Ok((program, result)) => {
                        attempt.outcome = Outcome::Ok;
                        success = Some((source.clone(), program, result));
                    }
                    Err(err) => {
                        let feedback = feedback_text(&err, &source);
                        attempt.outcome = err.phase.into();
                        attempt.error = Some(err);
                        attempt.feedback = Some(feedback.clone());
                        prior = Some(PriorAttempt {
                            source: source.clone(),
                            feedback,
                        });
                    }
                }
                attempt.extracted_source = Some(source);
            }
        }
        attempts.push(attempt);
        if success.is_some() {
            break;
        }
    }
    let used = attempts.len();
    let status = success.is_some();
    let (source, program, result) = match success {
        Some((s, p, r)) => (Some(s), Some(p), Some(r)),
        None => (None, None, None),
    };
    RepairSession {
        rule_id: rule.id,
        provider: provider.name().to_string(),
        attempts,
        status,
        correction_attempts: if status { used - 1 } else { used },
        success_rate_percent: success_rate(status, used),
        source,
        program,
        result,
    }
}

fn run(
    source: &str,
    rule_id: u8,
    model: &BuildingModel,
    opts: &RepairOptions<'_>,
) -> Result<(CheckProgram, CheckResult), ScriptError> {
    if source.trim().is_empty() {
        return Err(ScriptError::new(
            Phase::Parse,
            Span::new(1, 1),
            EmptyCompletion.to_string(),
        ));
    }
    let program = parse_for_rule(source, rule_id)?;
    let exec = execute_with(&program, model, opts.config, &opts.exec)?;
    Ok((program, exec.result))
}
