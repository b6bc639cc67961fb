//! Command-line front end: oracle checks, direct script runs, program
//! generation with repair, provider evaluation, and narrated reports.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bimcheck_core::building_model::{load_model, BuildingModel};
use bimcheck_core::checkscript::{execute, feedback_text, parse_for_rule};
use bimcheck_core::evalharness::{render_eval, run_eval, EvalFormat, EvalOptions, Timing};
use bimcheck_core::orchestrator::{
    generate_check_with, load_provider_configs, Clock, FixtureProvider, HttpProvider, Provider,
    ProviderConfig, RepairOptions, SteppingClock, WallClock, DEFAULT_MAX_ATTEMPTS,
};
use bimcheck_core::report::{
    build_report, narrate_report, render_report, ComplianceReport, ReportFormat,
};
use bimcheck_core::rules::{
    check_rule, rule_spec, CheckResult, RuleConfig, RuleSpec, Status, RULE_COUNT,
};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;

const AFTER_HELP: &str = "\
Exit codes: 0 when every finding is compliant or not applicable, 2 when any
finding is non-compliant, 1 on errors.

Check programs are CheckScript source files with the .chk extension. A
program starts with a `rule N` header naming the rule it checks.

Scripted providers (--mock DIR) read canned completions instead of calling
a service:
  DIR/<provider>/rule<N>/attempt<K>.txt      completion for attempt K
  DIR/<provider>/rule<N>/attempt<K>.error    simulated provider failure
  DIR/<provider>/report/narrative.txt        report narration
  DIR/<provider>/report/narrative.error      narration failure
A missing file counts as a failed call.

Network providers come from a JSON file (--providers FILE) of the form
{\"providers\": [{\"name\", \"api\": \"openai-chat\" | \"anthropic-messages\",
\"endpoint\", \"model\", \"api_key_env\", \"timeout_secs\"?, \"max_tokens\"?}]}.
API keys are read from the environment variable each entry names.";

#[derive(Debug, Parser)]
#[command(name = "bimcheck", version, about = "Building-code compliance checking for building models", after_help = AFTER_HELP)]
pub struct Cli {
    /// Suppress the summary on standard output.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in rule checks and write report.json and report.txt.
    Check(CheckArgs),
    /// Execute a .chk program against a model and write result.json.
    Run(RunArgs),
    /// Generate a check program for one rule, repairing it from error feedback.
    Gen(GenArgs),
    /// Evaluate providers across rules and write the metrics table.
    Eval(EvalArgs),
    /// Like check, optionally adding a provider-written narrative.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Building model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Provider configuration JSON file.
    #[arg(long)]
    pub providers: Option<PathBuf>,
    /// Directory of scripted provider responses; no network calls are made.
    #[arg(long)]
    pub mock: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// Rules to check: `all`, a range such as `1..5` or `1..=5`, or a list such as `1,3,9`.
    #[arg(long, default_value = "all", value_parser = parse_rules)]
    pub rules: RuleSelection,
    /// Report timestamp (RFC 3339); defaults to now.
    #[arg(long, value_parser = parse_timestamp)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    /// CheckScript program (.chk).
    pub script: PathBuf,
    /// Rule the program checks, if its source has no `rule N` header.
    #[arg(long)]
    pub rule: Option<u8>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[command(flatten)]
    pub source: ProviderArgs,
    /// Rule to generate a program for.
    #[arg(long)]
    pub rule: u8,
    /// Provider name, as configured or as a directory under --mock.
    #[arg(long)]
    pub provider: String,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    /// Record every provider call as taking this many seconds instead of measuring.
    #[arg(long)]
    pub latency_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub io: ModelArgs,
    #[command(flatten)]
    pub source: ProviderArgs,
    #[arg(long, default_value = "1..5", value_parser = parse_rules)]
    pub rules: RuleSelection,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    /// Record every provider call as taking this many seconds instead of measuring.
    #[arg(long)]
    pub latency_step: Option<f64>,
    /// Run providers one after another instead of in parallel.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub check: CheckArgs,
    #[command(flatten)]
    pub source: ProviderArgs,
    /// Provider that writes the narrative section.
    #[arg(long)]
    pub narrate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSelection(pub Vec<u8>);

fn rule_number(s: &str) -> Result<u8, String> {
    let n: u8 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a rule number"))?;
    if n == 0 || n > RULE_COUNT {
        return Err(format!("rule {n} is out of range 1..{RULE_COUNT}"));
    }
    Ok(n)
}

/// `all`, `a..b` or `a..=b` (both inclusive), or a comma list. Sorted and
/// deduplicated.
pub fn parse_rules(s: &str) -> Result<RuleSelection, String> {
    let s = s.trim();
    let mut ids: Vec<u8> = if s == "all" {
        (1..=RULE_COUNT).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (rule_number(a)?, rule_number(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty rule range `{s}`"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(rule_number).collect::<Result<_, _>>()?
    };
    ids.sort_unstable();
    ids.dedup();
    Ok(RuleSelection(ids))
}

fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("`{s}`: {e}"))
}

type CmdResult = Result<i32, String>;

fn read_model(path: &Path) -> Result<BuildingModel, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read model {}: {e}", path.display()))?;
    load_model(&bytes).map_err(|e| format!("invalid model {}: {e}", path.display()))
}

fn prepare_out(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn pretty_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    // Through `Value` so that keys come out sorted.
    let v = serde_json::to_value(v).expect("outputs serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

fn specs(rules: &[u8]) -> Vec<RuleSpec> {
    let config = RuleConfig::default();
    rules
        .iter()
        .map(|id| rule_spec(*id, &config).expect("selection holds valid ids"))
        .collect()
}

fn exit_for(has_violations: bool) -> i32 {
    if has_violations {
        EXIT_VIOLATIONS
    } else {
        EXIT_OK
    }
}

/// Every configured provider, or every scripted provider directory
/// holding rule responses when only --mock is given.
fn provider_names(source: &ProviderArgs) -> Result<Vec<String>, String> {
    if let Some(path) = &source.providers {
        return Ok(load_configs(path)?.into_iter().map(|c| c.name).collect());
    }
    let Some(dir) = &source.mock else {
        return Err("no providers: pass --providers FILE or --mock DIR".to_string());
    };
    let entries = fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    let mut names: Vec<String> = entries
        .filter_map(Result::ok)
        .filter(|e| {
            fs::read_dir(e.path())
                .map(|sub| {
                    sub.filter_map(Result::ok)
                        .any(|s| s.file_name().to_string_lossy().starts_with("rule"))
                })
                .unwrap_or(false)
        })
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    Ok(names)
}

fn load_configs(path: &Path) -> Result<Vec<ProviderConfig>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    load_provider_configs(&text)
}

/// Scripted when --mock is given, otherwise an HTTP client from the
/// configuration.
fn provider(name: &str, source: &ProviderArgs) -> Result<Box<dyn Provider>, String> {
    if let Some(dir) = &source.mock {
        if !dir.is_dir() {
            return Err(format!("mock directory {} does not exist", dir.display()));
        }
        return Ok(Box::new(FixtureProvider::new(dir, name)));
    }
    let Some(path) = &source.providers else {
        return Err("no providers: pass --providers FILE or --mock DIR".to_string());
    };
    let config = load_configs(path)?
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| format!("provider `{name}` is not in {}", path.display()))?;
    HttpProvider::from_env(config)
        .map(|p| Box::new(p) as Box<dyn Provider>)
        .map_err(|e| e.to_string())
}

fn check_all(model: &BuildingModel, rules: &[u8]) -> Vec<CheckResult> {
    rules
        .iter()
        .map(|id| check_rule(model, u32::from(*id)).expect("selection holds valid ids"))
        .collect()
}

fn report_summary(r: &ComplianceReport, dir: &Path) -> String {
    let c = &r.summary.counts;
    let mut s = format!(
        "{}: {} of {} rules failed ({} compliant, {} non-compliant, {} not applicable findings)\n",
        r.model_name,
        r.summary.rules_failed,
        r.summary.total_rules,
        c.compliant,
        c.non_compliant,
        c.not_applicable
    );
    for rule in &r.per_rule {
        s.push_str(&format!(
            "  rule {:>2}  {:<14}  {}\n",
            rule.rule_id,
            rule.overall.label(),
            rule.title
        ));
    }
    s.push_str(&format!(
        "wrote {} and {}\n",
        dir.join("report.json").display(),
        dir.join("report.txt").display()
    ));
    s
}

fn write_report(r: &ComplianceReport, dir: &Path) -> Result<(), String> {
    write(
        &dir.join("report.json"),
        &render_report(r, ReportFormat::Json),
    )?;
    write(
        &dir.join("report.txt"),
        &render_report(r, ReportFormat::Text),
    )
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let model = read_model(&a.io.model)?;
    prepare_out(&a.io.out)?;
    let results = check_all(&model, &a.rules.0);
    let r = build_report(&model, &results, a.timestamp.unwrap_or_else(Utc::now));
    write_report(&r, &a.io.out)?;
    let _ = out.write_all(report_summary(&r, &a.io.out).as_bytes());
    Ok(exit_for(r.has_violations()))
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> CmdResult {
    let model = read_model(&a.check.io.model)?;
    let narrator = a
        .narrate
        .as_deref()
        .map(|n| provider(n, &a.source))
        .transpose()?;
    prepare_out(&a.check.io.out)?;
    let results = check_all(&model, &a.check.rules.0);
    let mut r = build_report(&model, &results, a.check.timestamp.unwrap_or_else(Utc::now));
    if let Some(p) = narrator {
        let n = narrate_report(p.as_ref(), &r);
        r = r.with_narrative(n);
    }
    write_report(&r, &a.check.io.out)?;
    let _ = out.write_all(report_summary(&r, &a.check.io.out).as_bytes());
    Ok(exit_for(r.has_violations()))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let model = read_model(&a.io.model)?;
    let source = fs::read_to_string(&a.script)
        .map_err(|e| format!("cannot read script {}: {e}", a.script.display()))?;
    prepare_out(&a.io.out)?;
    let parsed = match a.rule {
        Some(id) => {
            rule_number(&id.to_string())?;
            parse_for_rule(&source, id)
        }
        None => bimcheck_core::checkscript::parse(&source).and_then(|p| match p.rule_id {
            Some(id) => parse_for_rule(&source, id),
            None => Ok(p),
        }),
    };
    let program = match parsed {
        Ok(p) if p.rule_id.is_none() => {
            return Err(format!(
                "{} has no `rule N` header; pass --rule N",
                a.script.display()
            ));
        }
        Ok(p) => p,
        Err(e) => {
            let _ = err.write_all(feedback_text(&e, &source).as_bytes());
            return Ok(EXIT_ERROR);
        }
    };
    let result = match execute(&program, &model) {
        Ok(r) => r,
        Err(e) => {
            let _ = err.write_all(feedback_text(&e, &source).as_bytes());
            return Ok(EXIT_ERROR);
        }
    };
    let path = a.io.out.join("result.json");
    write(&path, &pretty_json(&result))?;
    let c = result.counts();
    let _ = writeln!(
        out,
        "rule {}: {} ({} compliant, {} non-compliant, {} not applicable)\nwrote {}",
        result.rule_id,
        result.overall.label(),
        c.compliant,
        c.non_compliant,
        c.not_applicable,
        path.display()
    );
    Ok(exit_for(result.overall == Status::NonCompliant))
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CmdResult {
    let id = rule_number(&a.rule.to_string())?;
    let model = read_model(&a.io.model)?;
    let p = provider(&a.provider, &a.source)?;
    prepare_out(&a.io.out)?;
    let config = RuleConfig::default();
    let clock: Box<dyn Clock> = match a.latency_step {
        Some(step) => Box::new(SteppingClock::new(step)),
        None => Box::new(WallClock::default()),
    };
    let opts = RepairOptions {
        max_attempts: a.max_attempts,
        config: &config,
        exec: Default::default(),
        clock: clock.as_ref(),
    };
    let session = generate_check_with(p.as_ref(), &specs(&[id])[0], &model, &opts);
    let stem = format!("rule{id:02}");
    write(
        &a.io.out.join(format!("{stem}.transcript.txt")),
        session.transcript().as_bytes(),
    )?;
    write(
        &a.io.out.join(format!("{stem}.session.json")),
        &pretty_json(&session),
    )?;
    if let Some(src) = &session.source {
        let mut text = src.trim_end().to_string();
        text.push('\n');
        write(&a.io.out.join(format!("{stem}.chk")), text.as_bytes())?;
    }
    let _ = writeln!(
        out,
        "rule {id} with {}: {} after {} attempt(s), {} correction(s), success rate {:.1}%",
        session.provider,
        if session.status {
            "generated"
        } else {
            "failed"
        },
        session.attempts_used(),
        session.correction_attempts,
        session.success_rate_percent
    );
    Ok(if session.status { EXIT_OK } else { EXIT_ERROR })
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let model = read_model(&a.io.model)?;
    let names = provider_names(&a.source)?;
    if names.is_empty() {
        return Err("no providers to evaluate".to_string());
    }
    let providers: Vec<Box<dyn Provider>> = names
        .iter()
        .map(|n| provider(n, &a.source))
        .collect::<Result<_, _>>()?;
    prepare_out(&a.io.out)?;
    let refs: Vec<&dyn Provider> = providers.iter().map(|p| p.as_ref()).collect();
    let opts = EvalOptions {
        max_attempts: a.max_attempts,
        timing: a.latency_step.map_or(Timing::Wall, Timing::Stepped),
        parallel: !a.serial,
        ..EvalOptions::default()
    };
    let run = run_eval(&refs, &specs(&a.rules.0), &model, &opts);
    let text = render_eval(&run.table, EvalFormat::Text);
    write(&a.io.out.join("eval.txt"), &text)?;
    write(
        &a.io.out.join("eval.json"),
        &render_eval(&run.table, EvalFormat::Json),
    )?;
    let transcripts = a.io.out.join("transcripts");
    for s in &run.sessions {
        let dir = transcripts.join(&s.provider);
        prepare_out(&dir)?;
        write(
            &dir.join(format!("rule{:02}.txt", s.rule_id)),
            s.transcript().as_bytes(),
        )?;
    }
    let _ = out.write_all(&text);
    Ok(EXIT_OK)
}

/// Parse `args` (program name first) and run the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut sink = std::io::sink();
    let out: &mut dyn Write = if cli.quiet { &mut sink } else { out };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Run(a) => cmd_run(a, out, err),
        Command::Gen(a) => cmd_gen(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}
