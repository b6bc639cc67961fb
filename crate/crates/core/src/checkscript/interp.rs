use std::collections::{BTreeMap, HashSet};
use std::rc::Rc;

use super::ast::*;
use super::types::{self, Ty, TypeInfo};
use super::{Phase, ScriptError};
use crate::building_model::{
    BuildingModel, Category, Element, ElementId, ParamValue, CONTAINMENT_EPS_MM,
};
use crate::geometry;
use crate::rules::{self, CheckResult, Finding, Quantity, RuleConfig, Status, Subject};
use crate::units::{AreaQuantity, AreaUnit, LengthQuantity, LengthUnit};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Statements plus expression evaluations allowed before aborting.
    pub step_budget: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

/// Outcome of a run: the check result plus any `report(...)` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub result: CheckResult,
    pub reports: Vec<String>,
    pub steps: u64,
}

#[derive(Debug, Clone)]
enum Value<'m> {
    /// Millimeters.
    Length(f64),
    /// Square feet.
    Area(f64),
    /// Cubic feet per minute.
    Flow(f64),
    Number(f64),
    Text(Rc<str>),
    Flag(bool),
    Element(&'m Element),
    List(Rc<[&'m Element]>),
    Pair(ElementId, ElementId),
}

impl Value<'_> {
    fn ty(&self) -> Ty {
        match self {
            Value::Length(_) => Ty::Length,
            Value::Area(_) => Ty::Area,
            Value::Flow(_) => Ty::Flow,
            Value::Number(_) => Ty::Number,
            Value::Text(_) => Ty::Text,
            Value::Flag(_) => Ty::Flag,
            Value::Element(_) => Ty::Element,
            Value::List(_) => Ty::List,
            Value::Pair(..) => Ty::Pair,
        }
    }

    fn quantity(&self) -> Option<Quantity> {
        Some(match *self {
            Value::Length(v) => Quantity::mm(v),
            Value::Area(v) => Quantity::sqft(v),
            Value::Flow(v) => Quantity::Flow(v),
            Value::Number(v) => Quantity::Number(v),
            _ => return None,
        })
    }

    fn magnitude(&self) -> Option<f64> {
        match *self {
            Value::Length(v) | Value::Area(v) | Value::Flow(v) | Value::Number(v) => Some(v),
            _ => None,
        }
    }

    fn display(&self) -> String {
        match self {
            Value::Text(t) => t.to_string(),
            Value::Flag(b) => b.to_string(),
            Value::Element(e) => format!("element {}", e.id),
            Value::List(l) => format!("{} elements", l.len()),
            Value::Pair(a, b) => format!("elements {a} and {b}"),
            q => q.quantity().map(|q| q.display()).unwrap_or_default(),
        }
    }
}

fn of_type(ty: Ty, v: f64) -> Value<'static> {
    match ty {
        Ty::Length => Value::Length(v),
        Ty::Area => Value::Area(v),
        Ty::Flow => Value::Flow(v),
        _ => Value::Number(v),
    }
}

fn mm2_to_sqft(mm2: f64) -> f64 {
    AreaQuantity::from_mm2(mm2)
        .convert(AreaUnit::SquareFoot)
        .value
}

fn literal(value: f64, unit: Option<UnitWord>) -> Value<'static> {
    match unit {
        None => Value::Number(value),
        Some(UnitWord::Mm) => Value::Length(value),
        Some(UnitWord::In) => Value::Length(LengthQuantity::inches(value).to_mm()),
        Some(UnitWord::Ft) => Value::Length(LengthQuantity::feet(value).to_mm()),
        Some(UnitWord::Sqft) => Value::Area(value),
        Some(UnitWord::Sqm) => Value::Area(
            AreaQuantity::new(value, AreaUnit::SquareMeter)
                .convert(AreaUnit::SquareFoot)
                .value,
        ),
        Some(UnitWord::Cfm) => Value::Flow(value),
    }
}

fn describe(e: &Element) -> String {
    format!("element {} ({} \"{}\")", e.id, e.category.name(), e.name)
}

/// Run a program against a model. The program is type-checked first;
/// nothing outside the model and rule configuration is reachable.
pub fn execute_with(
    prog: &CheckProgram,
    model: &BuildingModel,
    config: &RuleConfig,
    options: &ExecOptions,
) -> Result<Execution, ScriptError> {
    let info = types::check(prog)?;
    let mut it = Interp {
        model,
        config,
        rule: prog.rule_id,
        info: &info,
        budget: options.step_budget,
        steps: 0,
        env: Vec::new(),
        findings: Vec::new(),
        classified: HashSet::new(),
        reports: Vec::new(),
    };
    it.block(&prog.statements)?;
    Ok(Execution {
        result: CheckResult::new(prog.rule_id.unwrap_or(0), it.findings),
        reports: it.reports,
        steps: it.steps,
    })
}

struct Interp<'m, 'p> {
    model: &'m BuildingModel,
    config: &'p RuleConfig,
    rule: Option<u8>,
    info: &'p TypeInfo,
    budget: u64,
    steps: u64,
    env: Vec<(String, Value<'m>)>,
    findings: Vec<Finding>,
    classified: HashSet<Subject>,
    reports: Vec<String>,
}

fn runtime(span: Span, message: impl Into<String>) -> ScriptError {
    ScriptError::new(Phase::Runtime, span, message)
}

fn internal(span: Span, what: &str) -> ScriptError {
    runtime(span, format!("internal type mismatch in {what}"))
}

impl<'m> Interp<'m, '_> {
    fn tick(&mut self, span: Span) -> Result<(), ScriptError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(runtime(
                span,
                format!("step budget of {} interpreter steps exceeded", self.budget),
            ));
        }
        Ok(())
    }

    fn lookup(&self, name: &str, span: Span) -> Result<Value<'m>, ScriptError> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| runtime(span, format!("unknown variable `{name}`")))
    }

    fn scoped<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, ScriptError>,
    ) -> Result<T, ScriptError> {
        let mark = self.env.len();
        let out = f(self);
        self.env.truncate(mark);
        out
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), ScriptError> {
        self.scoped(|it| body.iter().try_for_each(|s| it.stmt(s)))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ScriptError> {
        self.tick(s.span())?;
        match s {
            Stmt::Let { name, value, .. } => {
                let v = self.eval(value)?;
                self.env.push((name.clone(), v));
            }
            Stmt::For {
                var, iter, body, ..
            } => {
                let Value::List(items) = self.eval(iter)? else {
                    return Err(internal(iter.span, "for"));
                };
                for e in items.iter() {
                    self.scoped(|it| {
                        it.env.push((var.clone(), Value::Element(e)));
                        body.iter().try_for_each(|s| it.stmt(s))
                    })?;
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                if self.flag(cond)? {
                    self.block(then_body)?;
                } else if let Some(b) = else_body {
                    self.block(b)?;
                }
            }
            Stmt::Classify {
                target,
                status,
                fields,
                span,
            } => self.classify(target, *status, fields, *span)?,
            Stmt::Report { value, .. } => {
                let v = self.eval(value)?;
                self.reports.push(v.display());
            }
        }
        Ok(())
    }

    fn classify(
        &mut self,
        target: &Expr,
        status: Status,
        fields: &[Field],
        span: Span,
    ) -> Result<(), ScriptError> {
        let subject = match self.eval(target)? {
            Value::Element(e) => Subject::element(e.id),
            Value::Pair(a, b) => Subject::pair(a, b),
            Value::Text(key) => Subject::building(key.to_string()),
            _ => return Err(internal(target.span, "classify")),
        };
        if self.classified.contains(&subject) {
            let what = match &subject {
                Subject::Element { id } => format!("element {id}"),
                Subject::Pair { a, b } => format!("the pair of elements {a} and {b}"),
                Subject::Building { key } => format!("`{key}`"),
            };
            return Err(runtime(
                span,
                format!("{what} was already classified; classify each subject once"),
            ));
        }
        let mut measured = BTreeMap::new();
        let mut required = BTreeMap::new();
        let mut note = String::new();
        for f in fields {
            let v = self.eval(&f.value)?;
            match f.kind {
                FieldKind::Note => note = v.display(),
                FieldKind::Measured | FieldKind::Required => {
                    let q = v
                        .quantity()
                        .ok_or_else(|| internal(f.value.span, "classify field"))?;
                    let map = if f.kind == FieldKind::Measured {
                        &mut measured
                    } else {
                        &mut required
                    };
                    map.insert(f.key().to_string(), q);
                }
            }
        }
        self.classified.insert(subject.clone());
        let mut finding = Finding::new(subject, status);
        finding.measured = measured;
        finding.required = required;
        finding.note = note;
        self.findings.push(finding);
        Ok(())
    }

    fn flag(&mut self, e: &Expr) -> Result<bool, ScriptError> {
        match self.eval(e)? {
            Value::Flag(b) => Ok(b),
            _ => Err(internal(e.span, "condition")),
        }
    }

    fn element(&mut self, e: &Expr) -> Result<&'m Element, ScriptError> {
        match self.eval(e)? {
            Value::Element(el) => Ok(el),
            _ => Err(internal(e.span, "element argument")),
        }
    }

    fn list(&mut self, e: &Expr) -> Result<Rc<[&'m Element]>, ScriptError> {
        match self.eval(e)? {
            Value::List(l) => Ok(l),
            _ => Err(internal(e.span, "list argument")),
        }
    }

    fn with_binding<T>(
        &mut self,
        lambda: &Expr,
        el: &'m Element,
        f: impl FnOnce(&mut Self, &Expr) -> Result<T, ScriptError>,
    ) -> Result<T, ScriptError> {
        let ExprKind::Lambda { param, body } = &lambda.kind else {
            return Err(internal(lambda.span, "lambda"));
        };
        self.scoped(|it| {
            it.env.push((param.clone(), Value::Element(el)));
            f(it, body)
        })
    }

    fn predicate(&mut self, lambda: &Expr, el: &'m Element) -> Result<bool, ScriptError> {
        self.with_binding(lambda, el, |it, body| it.flag(body))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value<'m>, ScriptError> {
        self.tick(e.span)?;
        Ok(match &e.kind {
            ExprKind::Number { value, unit } => literal(*value, *unit),
            ExprKind::Str(s) => Value::Text(Rc::from(s.as_str())),
            ExprKind::Bool(b) => Value::Flag(*b),
            ExprKind::Var(name) => self.lookup(name, e.span)?,
            ExprKind::Unary {
                op: UnaryOp::Not,
                operand,
            } => Value::Flag(!self.flag(operand)?),
            ExprKind::Unary {
                op: UnaryOp::Neg,
                operand,
            } => {
                let v = self.eval(operand)?;
                let m = v.magnitude().ok_or_else(|| internal(e.span, "negation"))?;
                of_type(v.ty(), -m)
            }
            ExprKind::Binary {
                op: BinaryOp::And,
                lhs,
                rhs,
            } => Value::Flag(self.flag(lhs)? && self.flag(rhs)?),
            ExprKind::Binary {
                op: BinaryOp::Or,
                lhs,
                rhs,
            } => Value::Flag(self.flag(lhs)? || self.flag(rhs)?),
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, r) = (self.eval(lhs)?, self.eval(rhs)?);
                binary(*op, &l, &r, e.span)?
            }
            ExprKind::Call { name, args } => self.call(e, name, args)?,
            ExprKind::Method {
                receiver,
                name,
                args,
            } => {
                let el = self.element(receiver)?;
                self.method(e, el, name, args)?
            }
            ExprKind::Lambda { .. } => return Err(internal(e.span, "lambda outside an aggregate")),
        })
    }

    fn param_name<'a>(&self, arg: &'a Expr) -> Result<&'a str, ScriptError> {
        match &arg.kind {
            ExprKind::Str(s) => Ok(s),
            _ => Err(internal(arg.span, "parameter name")),
        }
    }

    fn param_value(
        &self,
        el: &'m Element,
        name: &str,
        span: Span,
    ) -> Result<Option<Value<'m>>, ScriptError> {
        let Some(p) = el.param(name) else {
            return Ok(None);
        };
        let v = match p {
            ParamValue::Length(l) => Value::Length(l.to_mm()),
            ParamValue::Area(a) => Value::Area(a.convert(AreaUnit::SquareFoot).value),
            ParamValue::Number(n) => Value::Number(*n),
            ParamValue::Flow(f) => Value::Flow(*f),
            ParamValue::Count(c) => Value::Number(*c as f64),
            ParamValue::Text(t) => Value::Text(Rc::from(t.as_str())),
            ParamValue::Flag(b) => Value::Flag(*b),
        };
        let expected = crate::building_model::known_param_kind(name).map(Ty::from_param);
        if expected.is_some_and(|t| t != v.ty()) {
            return Err(runtime(
                span,
                format!(
                    "parameter `{name}` on {} holds a {} value",
                    describe(el),
                    p.kind()
                ),
            ));
        }
        Ok(Some(v))
    }

    fn method(
        &mut self,
        e: &Expr,
        el: &'m Element,
        name: &str,
        args: &[Expr],
    ) -> Result<Value<'m>, ScriptError> {
        Ok(match name {
            "param" => {
                let p = self.param_name(&args[0])?;
                self.param_value(el, p, e.span)?.ok_or_else(|| {
                    runtime(
                        e.span,
                        format!(
                            "{} has no parameter `{p}`; check with .has(\"{p}\") or use .param_or(\"{p}\", default)",
                            describe(el)
                        ),
                    )
                })?
            }
            "param_or" => {
                let p = self.param_name(&args[0])?;
                match self.param_value(el, p, e.span)? {
                    Some(v) => v,
                    None => self.eval(&args[1])?,
                }
            }
            "has" => {
                let p = self.param_name(&args[0])?;
                Value::Flag(el.param(p).is_some())
            }
            "has_geometry" => {
                let g = &el.geometry;
                Value::Flag(match self.param_name(&args[0])? {
                    "footprint" => g.footprint.is_some(),
                    "bbox" => g.bbox.is_some(),
                    "location" => g.location.is_some(),
                    "facing" => g.facing.is_some(),
                    "outline" => el.plan_outline().is_some(),
                    "point" => el.plan_point().is_some(),
                    _ => return Err(internal(e.span, "geometry name")),
                })
            }
            "name" => Value::Text(Rc::from(el.name.as_str())),
            "id" => Value::Number(el.id.0 as f64),
            _ => return Err(internal(e.span, "method")),
        })
    }

    fn call(&mut self, e: &Expr, name: &str, args: &[Expr]) -> Result<Value<'m>, ScriptError> {
        let span = e.span;
        Ok(match name {
            "collect" => {
                let ExprKind::Var(cat) = &args[0].kind else {
                    return Err(internal(span, "collect"));
                };
                let cat: Category = cat.parse().map_err(|_| internal(span, "collect"))?;
                Value::List(self.model.collect(cat).into())
            }
            "filter" => {
                let items = self.list(&args[0])?;
                let mut kept = Vec::new();
                for el in items.iter() {
                    if self.predicate(&args[1], el)? {
                        kept.push(*el);
                    }
                }
                Value::List(kept.into())
            }
            "count" => {
                let items = self.list(&args[0])?;
                let mut n = 0usize;
                for el in items.iter() {
                    if args.len() == 1 || self.predicate(&args[1], el)? {
                        n += 1;
                    }
                }
                Value::Number(n as f64)
            }
            "exists" | "all" => {
                let items = self.list(&args[0])?;
                let want = name == "exists";
                for el in items.iter() {
                    if self.predicate(&args[1], el)? == want {
                        return Ok(Value::Flag(want));
                    }
                }
                Value::Flag(!want)
            }
            "sum" => {
                let items = self.list(&args[0])?;
                let ty = *self
                    .info
                    .sums
                    .get(&(e as *const Expr))
                    .ok_or_else(|| internal(span, "sum"))?;
                let mut total = 0.0;
                for el in items.iter() {
                    let v = self.with_binding(&args[1], el, |it, body| it.eval(body))?;
                    total += v.magnitude().ok_or_else(|| internal(span, "sum"))?;
                }
                of_type(ty, total)
            }
            "maximum" | "minimum" => {
                let items = self.list(&args[0])?;
                let ty = *self
                    .info
                    .sums
                    .get(&(e as *const Expr))
                    .ok_or_else(|| internal(span, name))?;
                let mut best: Option<f64> = None;
                for el in items.iter() {
                    let v = self.with_binding(&args[1], el, |it, body| it.eval(body))?;
                    let x = v.magnitude().ok_or_else(|| internal(span, name))?;
                    best = Some(match best {
                        None => x,
                        Some(b) if name == "maximum" => b.max(x),
                        Some(b) => b.min(x),
                    });
                }
                let best = best.ok_or_else(|| {
                    runtime(
                        span,
                        format!("{name}() of an empty list; check count() first"),
                    )
                })?;
                of_type(ty, best)
            }
            "area" => {
                let el = self.element(&args[0])?;
                let fp = el.geometry.footprint.as_deref().ok_or_else(|| {
                    runtime(
                        span,
                        format!("{} has no footprint to measure an area from", describe(el)),
                    )
                })?;
                let a = geometry::polygon_area(fp)
                    .map_err(|g| runtime(span, format!("{}: {g}", describe(el))))?;
                Value::Area(a.value)
            }
            "distance" => {
                let a = self.element(&args[0])?;
                let b = self.element(&args[1])?;
                let outline = |el: &Element| {
                    el.plan_outline().ok_or_else(|| {
                        runtime(span, format!("{} has no plan geometry", describe(el)))
                    })
                };
                let (oa, ob) = (outline(a)?, outline(b)?);
                let d = geometry::polygon_distance_mm(&oa, &ob).map_err(|g| {
                    runtime(
                        span,
                        format!("distance between elements {} and {}: {g}", a.id, b.id),
                    )
                })?;
                Value::Length(d)
            }
            "contains" => {
                let room = self.element(&args[0])?;
                let el = self.element(&args[1])?;
                let fp =
                    room.geometry.footprint.as_deref().ok_or_else(|| {
                        runtime(span, format!("{} has no footprint", describe(room)))
                    })?;
                let inside = room.level_id == el.level_id
                    && el
                        .plan_point()
                        .is_some_and(|p| geometry::point_in_polygon(p, fp, CONTAINMENT_EPS_MM));
                Value::Flag(inside)
            }
            "clearance" => {
                let el = self.element(&args[0])?;
                let Value::Length(limit) = self.eval(&args[1])? else {
                    return Err(internal(span, "clearance"));
                };
                let d = rules::clear_depth(self.model, el, limit).map_err(|m| runtime(span, m))?;
                Value::Length(d)
            }
            "plan_width" => {
                let el = self.element(&args[0])?;
                let w = rules::footing_width(el).ok_or_else(|| {
                    runtime(span, format!("{} has no plan geometry", describe(el)))
                })?;
                Value::Length(w)
            }
            "habitable" => {
                let el = self.element(&args[0])?;
                Value::Flag(el.category == Category::Room && self.config.is_habitable(&el.name))
            }
            "kitchen" => {
                let el = self.element(&args[0])?;
                Value::Flag(el.category == Category::Room && self.config.is_kitchen(&el.name))
            }
            "material_allowed" => match self.eval(&args[0])? {
                Value::Text(t) => Value::Flag(self.config.material_allowed(&t)),
                _ => return Err(internal(span, "material_allowed")),
            },
            "elevation" => {
                let el = self.element(&args[0])?;
                let level = self.model.level(el.level_id).ok_or_else(|| {
                    runtime(span, format!("{} is on an unknown level", describe(el)))
                })?;
                Value::Length(level.elevation.to_mm())
            }
            "elevation_above" => {
                let el = self.element(&args[0])?;
                let level = self.model.level_above(el.level_id).ok_or_else(|| {
                    runtime(
                        span,
                        format!(
                            "no level above the level of {}; check with has_level_above()",
                            describe(el)
                        ),
                    )
                })?;
                Value::Length(level.elevation.to_mm())
            }
            "has_level_above" => {
                let el = self.element(&args[0])?;
                Value::Flag(self.model.level_above(el.level_id).is_some())
            }
            "has_room" => {
                let el = self.element(&args[0])?;
                Value::Flag(self.model.room_of(el).is_some())
            }
            "room_of" => {
                let el = self.element(&args[0])?;
                let room = self.model.room_of(el).ok_or_else(|| {
                    runtime(
                        span,
                        format!(
                            "{} is not inside any room; check with has_room()",
                            describe(el)
                        ),
                    )
                })?;
                Value::Element(room)
            }
            "pair" => {
                let a = self.element(&args[0])?;
                let b = self.element(&args[1])?;
                if a.id == b.id {
                    return Err(runtime(
                        span,
                        format!("pair() needs two different elements, got {} twice", a.id),
                    ));
                }
                Value::Pair(a.id, b.id)
            }
            "value" => {
                let v = self.eval(&args[0])?;
                let unit = self.param_name(&args[1])?;
                let x = match (&v, unit) {
                    (Value::Length(mm), u) => {
                        let unit: LengthUnit = u.parse().map_err(|_| internal(span, "value"))?;
                        LengthQuantity::mm(*mm).convert(unit).value
                    }
                    (Value::Area(sqft), u) => {
                        let unit: AreaUnit = u.parse().map_err(|_| internal(span, "value"))?;
                        AreaQuantity::sqft(*sqft).convert(unit).value
                    }
                    (Value::Flow(f), _) => *f,
                    _ => return Err(internal(span, "value")),
                };
                Value::Number(x)
            }
            "min" | "max" => {
                let a = self.eval(&args[0])?;
                let b = self.eval(&args[1])?;
                let (x, y) = (a.magnitude(), b.magnitude());
                let (Some(x), Some(y)) = (x, y) else {
                    return Err(internal(span, name));
                };
                of_type(a.ty(), if name == "min" { x.min(y) } else { x.max(y) })
            }
            "abs" => {
                let a = self.eval(&args[0])?;
                let x = a.magnitude().ok_or_else(|| internal(span, "abs"))?;
                of_type(a.ty(), x.abs())
            }
            "text" => Value::Text(Rc::from(self.eval(&args[0])?.display().as_str())),
            "threshold" => {
                let key = self.param_name(&args[0])?;
                let rule = self.rule.ok_or_else(|| internal(span, "threshold"))?;
                let q = self
                    .config
                    .threshold(rule, key)
                    .ok_or_else(|| internal(span, "threshold"))?;
                of_type(Ty::from_quantity(q.kind()), q.canonical())
            }
            _ => return Err(internal(span, "call")),
        })
    }
}

fn compare(op: BinaryOp, l: &Value<'_>, r: &Value<'_>) -> Option<bool> {
    use BinaryOp::*;
    if let (Some(a), Some(b)) = (l.quantity(), r.quantity()) {
        let eps = Quantity::tolerance(a.kind());
        let equal = (a.canonical() - b.canonical()).abs() <= eps;
        return Some(match op {
            Ge => a.meets_min(&b),
            Le => a.within_max(&b),
            Gt => a.exceeds(&b),
            Lt => !a.meets_min(&b),
            Eq => equal,
            Ne => !equal,
            _ => return None,
        });
    }
    let equal = match (l, r) {
        (Value::Text(a), Value::Text(b)) => a == b,
        (Value::Flag(a), Value::Flag(b)) => a == b,
        (Value::Element(a), Value::Element(b)) => a.id == b.id,
        _ => return None,
    };
    match op {
        Eq => Some(equal),
        Ne => Some(!equal),
        _ => None,
    }
}

fn binary<'m>(
    op: BinaryOp,
    l: &Value<'m>,
    r: &Value<'m>,
    span: Span,
) -> Result<Value<'m>, ScriptError> {
    use BinaryOp::*;
    if op.is_comparison() {
        return compare(op, l, r)
            .map(Value::Flag)
            .ok_or_else(|| internal(span, "comparison"));
    }
    let ty = types::binary_type(op, l.ty(), r.ty()).ok_or_else(|| internal(span, "arithmetic"))?;
    let (Some(a), Some(b)) = (l.magnitude(), r.magnitude()) else {
        return Err(internal(span, "arithmetic"));
    };
    let v = match op {
        Add => a + b,
        Sub => a - b,
        Mul if ty == Ty::Area && l.ty() == Ty::Length => mm2_to_sqft(a * b),
        Mul => a * b,
        Div => {
            if b == 0.0 {
                return Err(runtime(span, "division by zero"));
            }
            if l.ty() == Ty::Area && r.ty() == Ty::Length {
                AreaQuantity::sqft(a).to_mm2() / b
            } else {
                a / b
            }
        }
        _ => return Err(internal(span, "arithmetic")),
    };
    Ok(of_type(ty, v))
}
