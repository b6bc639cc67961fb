//! Deterministic reference checks for the twelve residential and mechanical
//! rules. These are the ground truth generated check programs are compared
//! against.

mod catalog;
mod checks;
mod config;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::building_model::{BuildingModel, Category, ElementId};
use crate::units::{AreaUnit, LengthQuantity, LengthUnit};
use crate::{Area, Length};

pub(crate) use catalog::default_thresholds;
pub use catalog::{rule_spec, rule_specs, RULE_COUNT};
pub use checks::{
    check_ceiling_height, check_exit_openings, check_fixture_clearance, check_floor_panels,
    check_footing_spacing, check_guard_height, check_kitchen_sink, check_room_areas,
    check_stair_width, check_toilet_facilities, check_ventilation, check_window_wall_ratio,
    clear_depth, footing_width,
};
pub use config::{ConfigError, RuleConfig};

/// Length comparison tolerance in millimeters.
pub const LENGTH_EPS_MM: f64 = 0.1;
/// Area comparison tolerance in square feet.
pub const AREA_EPS_SQFT: f64 = 0.01;
/// Flow comparison tolerance in cubic feet per minute.
pub const FLOW_EPS_CFM: f64 = 0.01;
/// Plain-number comparison tolerance.
pub const NUMBER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Compliant,
    NonCompliant,
    NotApplicable,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Compliant => "compliant",
            Status::NonCompliant => "non_compliant",
            Status::NotApplicable => "not_applicable",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantityKind {
    Length,
    Area,
    Flow,
    Number,
}

/// A measured or required value attached to a finding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Length(Length),
    Area(Area),
    /// Cubic feet per minute.
    Flow(f64),
    Number(f64),
}

impl Quantity {
    pub fn kind(&self) -> QuantityKind {
        match self {
            Quantity::Length(_) => QuantityKind::Length,
            Quantity::Area(_) => QuantityKind::Area,
            Quantity::Flow(_) => QuantityKind::Flow,
            Quantity::Number(_) => QuantityKind::Number,
        }
    }

    /// Value in the comparison unit of its kind: mm, ft², cfm, or plain.
    pub fn canonical(&self) -> f64 {
        match self {
            Quantity::Length(l) => l.to_mm(),
            Quantity::Area(a) => a.convert(AreaUnit::SquareFoot).value,
            Quantity::Flow(f) | Quantity::Number(f) => *f,
        }
    }

    pub fn tolerance(kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Length => LENGTH_EPS_MM,
            QuantityKind::Area => AREA_EPS_SQFT,
            QuantityKind::Flow => FLOW_EPS_CFM,
            QuantityKind::Number => NUMBER_EPS,
        }
    }

    /// `self ≥ min`, with at-threshold values passing.
    pub fn meets_min(&self, min: &Quantity) -> bool {
        debug_assert_eq!(self.kind(), min.kind());
        self.canonical() >= min.canonical() - Self::tolerance(self.kind())
    }

    /// `self ≤ max`, with at-threshold values passing.
    pub fn within_max(&self, max: &Quantity) -> bool {
        debug_assert_eq!(self.kind(), max.kind());
        self.canonical() <= max.canonical() + Self::tolerance(self.kind())
    }

    /// Strictly above `limit` by more than the tolerance.
    pub fn exceeds(&self, limit: &Quantity) -> bool {
        !self.within_max(limit)
    }

    pub fn inches(v: f64) -> Self {
        Quantity::Length(LengthQuantity::inches(v))
    }

    pub fn mm(v: f64) -> Self {
        Quantity::Length(LengthQuantity::mm(v))
    }

    pub fn sqft(v: f64) -> Self {
        Quantity::Area(Area::sqft(v))
    }

    /// Human-readable form: lengths in inches, areas in square feet.
    pub fn display(&self) -> String {
        match self {
            Quantity::Length(l) => {
                let inches = l.convert(LengthUnit::Inch).value;
                format!("{} in", trim_number(inches))
            }
            Quantity::Area(a) => format!(
                "{} sq ft",
                trim_number(a.convert(AreaUnit::SquareFoot).value)
            ),
            Quantity::Flow(f) => format!("{} CFM", trim_number(*f)),
            Quantity::Number(n) => trim_number(*n),
        }
    }
}

/// Two decimals with trailing zeros removed.
pub(crate) fn trim_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantityRepr {
    value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unit: Option<String>,
}

impl Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (value, unit) = match self {
            Quantity::Length(l) => (l.value, Some(l.unit.symbol())),
            Quantity::Area(a) => (a.value, Some(a.unit.symbol())),
            Quantity::Flow(f) => (*f, Some("cfm")),
            Quantity::Number(n) => (*n, None),
        };
        QuantityRepr {
            value,
            unit: unit.map(str::to_string),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = QuantityRepr::deserialize(d)?;
        let Some(unit) = r.unit else {
            return Ok(Quantity::Number(r.value));
        };
        if unit == "cfm" {
            return Ok(Quantity::Flow(r.value));
        }
        if let Ok(u) = unit.parse::<LengthUnit>() {
            return Ok(Quantity::Length(LengthQuantity::new(r.value, u)));
        }
        if let Ok(u) = unit.parse::<AreaUnit>() {
            return Ok(Quantity::Area(Area::new(r.value, u)));
        }
        Err(serde::de::Error::custom(format!("unknown unit `{unit}`")))
    }
}

/// What a finding is about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Subject {
    Element {
        id: ElementId,
    },
    /// Unordered pair, stored with the smaller id first.
    Pair {
        a: ElementId,
        b: ElementId,
    },
    /// Building-level requirement identified by a key.
    Building {
        key: String,
    },
}

impl Subject {
    pub fn element(id: ElementId) -> Self {
        Subject::Element { id }
    }

    pub fn pair(x: ElementId, y: ElementId) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Subject::Pair { a, b }
    }

    pub fn building(key: impl Into<String>) -> Self {
        Subject::Building { key: key.into() }
    }

    /// Element ids the subject covers.
    pub fn element_ids(&self) -> Vec<ElementId> {
        match self {
            Subject::Element { id } => vec![*id],
            Subject::Pair { a, b } => vec![*a, *b],
            Subject::Building { .. } => vec![],
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Element { id } => write!(f, "element {id}"),
            Subject::Pair { a, b } => write!(f, "elements {a} and {b}"),
            Subject::Building { key } => write!(f, "building ({key})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub subject: Subject,
    pub status: Status,
    pub measured: BTreeMap<String, Quantity>,
    pub required: BTreeMap<String, Quantity>,
    pub note: String,
}

impl Finding {
    pub fn new(subject: Subject, status: Status) -> Self {
        Self {
            subject,
            status,
            measured: BTreeMap::new(),
            required: BTreeMap::new(),
            note: String::new(),
        }
    }

    pub fn compliant(subject: Subject) -> Self {
        Self::new(subject, Status::Compliant)
    }

    pub fn non_compliant(subject: Subject) -> Self {
        Self::new(subject, Status::NonCompliant)
    }

    pub fn not_applicable(subject: Subject, note: impl Into<String>) -> Self {
        Self::new(subject, Status::NotApplicable).with_note(note)
    }

    pub fn measured(mut self, name: &str, q: Quantity) -> Self {
        self.measured.insert(name.to_string(), q);
        self
    }

    pub fn required(mut self, name: &str, q: Quantity) -> Self {
        self.required.insert(name.to_string(), q);
        self
    }

    /// Record a measured/required pair under one name.
    pub fn compare(self, name: &str, measured: Quantity, required: Quantity) -> Self {
        self.measured(name, measured).required(name, required)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn element_id(&self) -> Option<ElementId> {
        match self.subject {
            Subject::Element { id } => Some(id),
            _ => None,
        }
    }

    /// Names present in both `measured` and `required`.
    pub fn compared_names(&self) -> Vec<&str> {
        self.measured
            .keys()
            .filter(|k| self.required.contains_key(*k))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub compliant: usize,
    pub non_compliant: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub rule_id: u8,
    pub findings: Vec<Finding>,
    pub overall: Status,
}

impl CheckResult {
    pub fn new(rule_id: u8, findings: Vec<Finding>) -> Self {
        let overall = overall_status(&findings);
        Self {
            rule_id,
            findings,
            overall,
        }
    }

    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for f in &self.findings {
            match f.status {
                Status::Compliant => c.compliant += 1,
                Status::NonCompliant => c.non_compliant += 1,
                Status::NotApplicable => c.not_applicable += 1,
            }
        }
        c
    }

    pub fn with_status(&self, status: Status) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.status == status)
    }

    /// Same rule, same overall status, and the same subject → status
    /// assignments regardless of order.
    pub fn equivalent(&self, other: &CheckResult) -> bool {
        self.rule_id == other.rule_id
            && self.overall == other.overall
            && self.verdicts() == other.verdicts()
    }

    /// Sorted `(subject, status)` pairs.
    pub fn verdicts(&self) -> Vec<(Subject, Status)> {
        let mut v: Vec<_> = self
            .findings
            .iter()
            .map(|f| (f.subject.clone(), f.status))
            .collect();
        v.sort();
        v
    }
}

pub fn overall_status(findings: &[Finding]) -> Status {
    if findings.iter().any(|f| f.status == Status::NonCompliant) {
        Status::NonCompliant
    } else if findings.iter().all(|f| f.status == Status::NotApplicable) {
        Status::NotApplicable
    } else {
        Status::Compliant
    }
}

/// Static description of one rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSpec {
    pub id: u8,
    pub title: &'static str,
    pub description: &'static str,
    pub thresholds: BTreeMap<String, Quantity>,
    pub target_categories: Vec<Category>,
    pub dsl_hint: Option<&'static str>,
}

impl RuleSpec {
    pub fn threshold(&self, name: &str) -> Quantity {
        *self
            .thresholds
            .get(name)
            .unwrap_or_else(|| panic!("rule {} has no threshold `{name}`", self.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("unknown rule {0}; rules are numbered 1 to 12")]
    UnknownRule(u32),
}

/// Run one rule's reference check with the shipped defaults.
pub fn check_rule(model: &BuildingModel, rule_id: u32) -> Result<CheckResult, RuleError> {
    check_rule_with(model, rule_id, &RuleConfig::default())
}

pub fn check_rule_with(
    model: &BuildingModel,
    rule_id: u32,
    config: &RuleConfig,
) -> Result<CheckResult, RuleError> {
    Ok(match rule_id {
        1 => check_exit_openings(model, config),
        2 => check_stair_width(model, config),
        3 => check_guard_height(model, config),
        4 => check_ceiling_height(model, config),
        5 => check_window_wall_ratio(model, config),
        6 => check_room_areas(model, config),
        7 => check_fixture_clearance(model, config),
        8 => check_toilet_facilities(model, config),
        9 => check_kitchen_sink(model, config),
        10 => check_floor_panels(model, config),
        11 => check_footing_spacing(model, config),
        12 => check_ventilation(model, config),
        other => return Err(RuleError::UnknownRule(other)),
    })
}
