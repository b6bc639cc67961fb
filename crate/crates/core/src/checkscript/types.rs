use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::*;
use super::{Phase, ScriptError};
use crate::building_model::{known_param_kind, Category, ParamKind, KNOWN_PARAMS};
use crate::rules::{default_thresholds, QuantityKind, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Length,
    Area,
    Flow,
    Number,
    Text,
    Flag,
    Element,
    List,
    Pair,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Length => "length",
            Ty::Area => "area",
            Ty::Flow => "flow",
            Ty::Number => "number",
            Ty::Text => "text",
            Ty::Flag => "flag",
            Ty::Element => "element",
            Ty::List => "element-list",
            Ty::Pair => "pair",
        })
    }
}

impl Ty {
    pub fn is_quantity(self) -> bool {
        matches!(self, Ty::Length | Ty::Area | Ty::Flow | Ty::Number)
    }

    pub(crate) fn from_param(kind: ParamKind) -> Ty {
        match kind {
            ParamKind::Length => Ty::Length,
            ParamKind::Area => Ty::Area,
            ParamKind::Number | ParamKind::Count => Ty::Number,
            ParamKind::Flow => Ty::Flow,
            ParamKind::Text => Ty::Text,
            ParamKind::Flag => Ty::Flag,
        }
    }

    pub(crate) fn from_quantity(kind: QuantityKind) -> Ty {
        match kind {
            QuantityKind::Length => Ty::Length,
            QuantityKind::Area => Ty::Area,
            QuantityKind::Flow => Ty::Flow,
            QuantityKind::Number => Ty::Number,
        }
    }
}

/// Unit words accepted by `value(q, "unit")`, per quantity type.
pub(crate) fn unit_fits(ty: Ty, unit: &str) -> bool {
    match ty {
        Ty::Length => matches!(unit, "mm" | "in" | "ft"),
        Ty::Area => matches!(unit, "sqft" | "sqm"),
        Ty::Flow => unit == "cfm",
        _ => false,
    }
}

pub const GEOMETRY_NAMES: [&str; 6] = [
    "footprint",
    "bbox",
    "location",
    "facing",
    "outline",
    "point",
];

/// Functions callable from scripts. Anything else is a type error.
pub const FUNCTIONS: &[&str] = &[
    "collect",
    "filter",
    "count",
    "sum",
    "maximum",
    "minimum",
    "exists",
    "all",
    "area",
    "distance",
    "contains",
    "clearance",
    "plan_width",
    "habitable",
    "kitchen",
    "material_allowed",
    "elevation",
    "elevation_above",
    "has_level_above",
    "has_room",
    "room_of",
    "value",
    "pair",
    "min",
    "max",
    "abs",
    "text",
    "threshold",
];

pub const METHODS: &[&str] = &["param", "param_or", "has", "has_geometry", "name", "id"];

/// Static facts the interpreter needs: the result type of every `sum`,
/// so an empty sum still has a unit.
#[derive(Debug, Default)]
pub struct TypeInfo {
    pub(crate) sums: HashMap<*const Expr, Ty>,
}

/// Check a program's types. Rejects unit-mismatched operations, unknown
/// categories, parameters, functions and thresholds.
pub fn typecheck(prog: &CheckProgram) -> Result<(), ScriptError> {
    check(prog).map(|_| ())
}

pub(crate) fn check(prog: &CheckProgram) -> Result<TypeInfo, ScriptError> {
    let mut c = Checker {
        scopes: vec![HashMap::new()],
        rule: prog.rule_id,
        info: TypeInfo::default(),
    };
    c.block(&prog.statements)?;
    Ok(c.info)
}

struct Checker {
    scopes: Vec<HashMap<String, Ty>>,
    rule: Option<u8>,
    info: TypeInfo,
}

fn err(span: Span, message: impl Into<String>) -> ScriptError {
    ScriptError::new(Phase::Type, span, message)
}

fn str_literal<'a>(e: &'a Expr, what: &str) -> Result<&'a str, ScriptError> {
    match &e.kind {
        ExprKind::Str(s) => Ok(s),
        _ => Err(err(e.span, format!("{what} must be a string literal"))),
    }
}

fn known_params() -> String {
    KNOWN_PARAMS
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(", ")
}

fn known_categories() -> String {
    Category::ALL
        .iter()
        .map(|c| c.name())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Checker {
    fn lookup(&self, name: &str) -> Option<Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn scoped<T>(&mut self, bind: Option<(&str, Ty)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let mut scope = HashMap::new();
        if let Some((n, t)) = bind {
            scope.insert(n.to_string(), t);
        }
        self.scopes.push(scope);
        let out = f(self);
        self.scopes.pop();
        out
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), ScriptError> {
        body.iter().try_for_each(|s| self.stmt(s))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ScriptError> {
        match s {
            Stmt::Let { name, value, .. } => {
                let t = self.expr(value)?;
                self.scopes
                    .last_mut()
                    .expect("scope stack is never empty")
                    .insert(name.clone(), t);
                Ok(())
            }
            Stmt::For {
                var, iter, body, ..
            } => {
                let t = self.expr(iter)?;
                if t != Ty::List {
                    return Err(err(
                        iter.span,
                        format!("`for` needs an element-list to iterate over, found {t}"),
                    ));
                }
                self.scoped(Some((var, Ty::Element)), |c| c.block(body))
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                self.expect(cond, Ty::Flag, "an `if` condition")?;
                self.scoped(None, |c| c.block(then_body))?;
                match else_body {
                    Some(b) => self.scoped(None, |c| c.block(b)),
                    None => Ok(()),
                }
            }
            Stmt::Classify {
                target,
                status,
                fields,
                span,
            } => self.classify(target, *status, fields, *span),
            Stmt::Report { value, .. } => {
                let t = self.expr(value)?;
                if matches!(t, Ty::List) {
                    return Err(err(
                        value.span,
                        "report takes a single value, not an element-list",
                    ));
                }
                Ok(())
            }
        }
    }

    fn classify(
        &mut self,
        target: &Expr,
        status: Status,
        fields: &[Field],
        span: Span,
    ) -> Result<(), ScriptError> {
        let t = self.expr(target)?;
        if !matches!(t, Ty::Element | Ty::Pair | Ty::Text) {
            return Err(err(
                target.span,
                format!("classify needs an element, a pair or a text key, found {t}"),
            ));
        }
        let mut seen = BTreeSet::new();
        let (mut measured, mut required) = (false, false);
        for f in fields {
            if !seen.insert((f.kind.keyword(), f.key().to_string())) {
                return Err(err(f.span, format!("`{}` is given twice", field_label(f))));
            }
            let ft = self.expr(&f.value)?;
            match f.kind {
                FieldKind::Note if ft != Ty::Text => {
                    return Err(err(f.value.span, format!("note must be text, found {ft}")));
                }
                FieldKind::Note => {}
                _ if !ft.is_quantity() => {
                    return Err(err(
                        f.value.span,
                        format!(
                            "`{}` must be a length, area, flow or number, found {ft}",
                            field_label(f)
                        ),
                    ));
                }
                FieldKind::Measured => measured = true,
                FieldKind::Required => required = true,
            }
        }
        if status == Status::NonCompliant && !(measured && required) {
            return Err(err(
                span,
                "a non_compliant classification must record measured= and required= values",
            ));
        }
        Ok(())
    }

    fn expect(&mut self, e: &Expr, want: Ty, what: &str) -> Result<(), ScriptError> {
        let t = self.expr(e)?;
        if t == want {
            Ok(())
        } else {
            Err(err(
                e.span,
                format!("{what} must be {}, found {t}", article(want)),
            ))
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<Ty, ScriptError> {
        match &e.kind {
            ExprKind::Number { unit, .. } => Ok(match unit {
                None => Ty::Number,
                Some(UnitWord::Mm | UnitWord::In | UnitWord::Ft) => Ty::Length,
                Some(UnitWord::Sqft | UnitWord::Sqm) => Ty::Area,
                Some(UnitWord::Cfm) => Ty::Flow,
            }),
            ExprKind::Str(_) => Ok(Ty::Text),
            ExprKind::Bool(_) => Ok(Ty::Flag),
            ExprKind::Var(name) => self.lookup(name).ok_or_else(|| {
                if name.parse::<Category>().is_ok() {
                    err(e.span, format!("`{name}` is a category; use collect({name})"))
                } else {
                    err(e.span, format!("unknown variable `{name}`"))
                }
            }),
            ExprKind::Unary { op: UnaryOp::Neg, operand } => {
                let t = self.expr(operand)?;
                if t.is_quantity() {
                    Ok(t)
                } else {
                    Err(err(e.span, format!("cannot negate {t}")))
                }
            }
            ExprKind::Unary { op: UnaryOp::Not, operand } => {
                self.expect(operand, Ty::Flag, "the operand of `not`")?;
                Ok(Ty::Flag)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, r) = (self.expr(lhs)?, self.expr(rhs)?);
                binary_type(*op, l, r).ok_or_else(|| err(e.span, binary_message(*op, l, r)))
            }
            ExprKind::Call { name, args } => self.call(e, name, args),
            ExprKind::Method { receiver, name, args } => self.method(e, receiver, name, args),
            ExprKind::Lambda { .. } => Err(err(
                e.span,
                "`x => ...` is only allowed as the last argument of filter, count, sum, maximum, minimum, exists or all",
            )),
        }
    }

    fn arity(&self, e: &Expr, name: &str, args: &[Expr], n: usize) -> Result<(), ScriptError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(
                e.span,
                format!(
                    "{name}() takes {n} argument{}, found {}",
                    if n == 1 { "" } else { "s" },
                    args.len()
                ),
            ))
        }
    }

    fn args_of(
        &mut self,
        e: &Expr,
        name: &str,
        args: &[Expr],
        want: &[Ty],
    ) -> Result<(), ScriptError> {
        self.arity(e, name, args, want.len())?;
        for (i, (a, w)) in args.iter().zip(want).enumerate() {
            self.expect(a, *w, &format!("argument {} of {name}()", i + 1))?;
        }
        Ok(())
    }

    /// Type of a lambda body with its parameter bound to an element.
    fn lambda(&mut self, arg: &Expr, fname: &str) -> Result<Ty, ScriptError> {
        match &arg.kind {
            ExprKind::Lambda { param, body } => {
                self.scoped(Some((param, Ty::Element)), |c| c.expr(body))
            }
            _ => Err(err(
                arg.span,
                format!("the second argument of {fname}() must be a lambda like `x => ...`"),
            )),
        }
    }

    fn call(&mut self, e: &Expr, name: &str, args: &[Expr]) -> Result<Ty, ScriptError> {
        use Ty::*;
        let flag_pred = |c: &mut Self, idx: usize| -> Result<(), ScriptError> {
            let t = c.lambda(&args[idx], name)?;
            if t == Flag {
                Ok(())
            } else {
                Err(err(
                    args[idx].span,
                    format!("the predicate of {name}() must be a flag, found {t}"),
                ))
            }
        };
        match name {
            "collect" => {
                self.arity(e, name, args, 1)?;
                match &args[0].kind {
                    ExprKind::Var(cat) if cat.parse::<Category>().is_ok() => Ok(List),
                    ExprKind::Var(cat) => Err(err(
                        args[0].span,
                        format!(
                            "unknown category `{cat}`; known categories: {}",
                            known_categories()
                        ),
                    )),
                    _ => Err(err(
                        args[0].span,
                        "collect() takes a category name such as collect(Door)",
                    )),
                }
            }
            "filter" | "exists" | "all" => {
                self.arity(e, name, args, 2)?;
                self.expect(&args[0], List, &format!("argument 1 of {name}()"))?;
                flag_pred(self, 1)?;
                Ok(if name == "filter" { List } else { Flag })
            }
            "count" => {
                if args.is_empty() || args.len() > 2 {
                    return Err(err(
                        e.span,
                        "count() takes a list and an optional predicate",
                    ));
                }
                self.expect(&args[0], List, "argument 1 of count()")?;
                if args.len() == 2 {
                    flag_pred(self, 1)?;
                }
                Ok(Number)
            }
            "sum" | "maximum" | "minimum" => {
                self.arity(e, name, args, 2)?;
                self.expect(&args[0], List, &format!("argument 1 of {name}()"))?;
                let t = self.lambda(&args[1], name)?;
                if !t.is_quantity() {
                    return Err(err(
                        args[1].span,
                        format!("{name}() works on quantities, found {t}"),
                    ));
                }
                self.info.sums.insert(e as *const Expr, t);
                Ok(t)
            }
            "area" => self.args_of(e, name, args, &[Element]).map(|_| Area),
            "distance" => self
                .args_of(e, name, args, &[Element, Element])
                .map(|_| Length),
            "contains" => self
                .args_of(e, name, args, &[Element, Element])
                .map(|_| Flag),
            "clearance" => self
                .args_of(e, name, args, &[Element, Length])
                .map(|_| Length),
            "plan_width" | "elevation" | "elevation_above" => {
                self.args_of(e, name, args, &[Element]).map(|_| Length)
            }
            "habitable" | "kitchen" | "has_level_above" | "has_room" => {
                self.args_of(e, name, args, &[Element]).map(|_| Flag)
            }
            "room_of" => self.args_of(e, name, args, &[Element]).map(|_| Element),
            "material_allowed" => self.args_of(e, name, args, &[Text]).map(|_| Flag),
            "pair" => self
                .args_of(e, name, args, &[Element, Element])
                .map(|_| Pair),
            "value" => {
                self.arity(e, name, args, 2)?;
                let t = self.expr(&args[0])?;
                let unit = str_literal(&args[1], "the unit of value()")?;
                if unit_fits(t, unit) {
                    Ok(Number)
                } else {
                    Err(err(args[1].span, format!("cannot express {t} in `{unit}`")))
                }
            }
            "min" | "max" => {
                self.arity(e, name, args, 2)?;
                let (a, b) = (self.expr(&args[0])?, self.expr(&args[1])?);
                if a.is_quantity() && a == b {
                    Ok(a)
                } else {
                    Err(err(e.span, format!("{name}() needs two values of the same quantity type, found {a} and {b}")))
                }
            }
            "abs" => {
                self.arity(e, name, args, 1)?;
                let t = self.expr(&args[0])?;
                if t.is_quantity() {
                    Ok(t)
                } else {
                    Err(err(
                        args[0].span,
                        format!("abs() needs a quantity, found {t}"),
                    ))
                }
            }
            "text" => {
                self.arity(e, name, args, 1)?;
                let t = self.expr(&args[0])?;
                if t == List {
                    return Err(err(args[0].span, "text() cannot format an element-list"));
                }
                Ok(Text)
            }
            "threshold" => {
                self.arity(e, name, args, 1)?;
                let key = str_literal(&args[0], "the threshold name")?;
                let Some(rule) = self.rule else {
                    return Err(err(
                        e.span,
                        "threshold() needs a `rule N` header naming the rule",
                    ));
                };
                let known = default_thresholds(rule);
                known
                    .get(key)
                    .map(|q| Ty::from_quantity(q.kind()))
                    .ok_or_else(|| {
                        let names: Vec<&str> = known.keys().map(String::as_str).collect();
                        err(
                            args[0].span,
                            format!(
                                "rule {rule} has no threshold `{key}`; known: {}",
                                names.join(", ")
                            ),
                        )
                    })
            }
            _ => Err(err(
                e.span,
                format!(
                    "unknown function `{name}`; available: {}",
                    FUNCTIONS.join(", ")
                ),
            )),
        }
    }

    fn method(
        &mut self,
        e: &Expr,
        receiver: &Expr,
        name: &str,
        args: &[Expr],
    ) -> Result<Ty, ScriptError> {
        let rt = self.expr(receiver)?;
        if rt != Ty::Element {
            return Err(err(
                e.span,
                format!("method .{name}() applies to elements, not {rt}"),
            ));
        }
        let param = |args: &[Expr]| -> Result<Ty, ScriptError> {
            let p = str_literal(&args[0], "the parameter name")?;
            known_param_kind(p).map(Ty::from_param).ok_or_else(|| {
                err(
                    args[0].span,
                    format!(
                        "unknown parameter `{p}`; known parameters: {}",
                        known_params()
                    ),
                )
            })
        };
        match name {
            "param" => {
                self.arity(e, ".param", args, 1)?;
                param(args)
            }
            "param_or" => {
                self.arity(e, ".param_or", args, 2)?;
                let t = param(args)?;
                let d = self.expr(&args[1])?;
                if d == t {
                    Ok(t)
                } else {
                    Err(err(
                        args[1].span,
                        format!(
                            "default for a {t} parameter must be {}, found {d}",
                            article(t)
                        ),
                    ))
                }
            }
            "has" => {
                self.arity(e, ".has", args, 1)?;
                param(args).map(|_| Ty::Flag)
            }
            "has_geometry" => {
                self.arity(e, ".has_geometry", args, 1)?;
                let g = str_literal(&args[0], "the geometry name")?;
                if GEOMETRY_NAMES.contains(&g) {
                    Ok(Ty::Flag)
                } else {
                    Err(err(
                        args[0].span,
                        format!(
                            "unknown geometry `{g}`; known: {}",
                            GEOMETRY_NAMES.join(", ")
                        ),
                    ))
                }
            }
            "name" => self.arity(e, ".name", args, 0).map(|_| Ty::Text),
            "id" => self.arity(e, ".id", args, 0).map(|_| Ty::Number),
            _ => Err(err(
                e.span,
                format!(
                    "unknown method `.{name}()`; available: {}",
                    METHODS.join(", ")
                ),
            )),
        }
    }
}

fn field_label(f: &Field) -> String {
    match &f.name {
        Some(n) => format!("{}.{n}", f.kind.keyword()),
        None => f.kind.keyword().to_string(),
    }
}

fn article(t: Ty) -> String {
    match t {
        Ty::Area | Ty::Element | Ty::List => format!("an {t}"),
        _ => format!("a {t}"),
    }
}

pub(crate) fn binary_type(op: BinaryOp, l: Ty, r: Ty) -> Option<Ty> {
    use BinaryOp::*;
    use Ty::*;
    match op {
        And | Or => (l == Flag && r == Flag).then_some(Flag),
        Eq | Ne => (l == r && matches!(l, Length | Area | Flow | Number | Text | Flag | Element))
            .then_some(Flag),
        Lt | Le | Gt | Ge => (l == r && l.is_quantity()).then_some(Flag),
        Add | Sub => (l == r && l.is_quantity()).then_some(l),
        Mul => match (l, r) {
            (Length, Length) => Some(Area),
            (q, Number) | (Number, q) if q.is_quantity() => Some(q),
            _ => None,
        },
        Div => match (l, r) {
            (q, Number) if q.is_quantity() => Some(q),
            (Area, Length) => Some(Length),
            (a, b) if a == b && a.is_quantity() => Some(Number),
            _ => None,
        },
    }
}

fn binary_message(op: BinaryOp, l: Ty, r: Ty) -> String {
    if op.is_comparison() {
        format!("cannot compare {l} with {r}")
    } else if matches!(op, BinaryOp::And | BinaryOp::Or) {
        format!("`{op}` needs two flags, found {l} and {r}")
    } else {
        format!("cannot apply `{op}` to {l} and {r}")
    }
}
