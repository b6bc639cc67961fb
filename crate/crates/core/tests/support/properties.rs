//! Property suites driven through an explicit `TestRunner`, so the same
//! checks back both the regular tests and the acceptance target.

#![allow(dead_code)]

use std::collections::BTreeSet;

use bimcheck_core::building_model::{BuildingModel, Category, ElementBuilder as E, ModelBuilder};
use bimcheck_core::checkscript::{
    parse, render, BinaryOp, CheckProgram, Expr, ExprKind, Field, FieldKind, Span, Stmt, UnaryOp,
    UnitWord, KEYWORDS,
};
use bimcheck_core::geometry::{polygon_distance_mm, Point2};
use bimcheck_core::rules::{check_rule, Status, Subject};
use bimcheck_core::units::{AreaQuantity, AreaUnit, LengthQuantity, LengthUnit};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish<T: std::fmt::Debug>(
    r: Result<(), proptest::test_runner::TestError<T>>,
) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

// ---- AST generation ----

const IDENTS: &[&str] = &[
    "a", "b", "door", "room_1", "width", "x2", "total", "_tmp", "walls", "f",
];
const CALLS: &[&str] = &[
    "count", "sum", "collect", "area", "distance", "value", "text", "g",
];
const METHODS: &[&str] = &["param", "param_or", "has", "name", "id", "m"];

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(IDENTS).prop_map(str::to_string)
}

fn sp() -> Span {
    Span::default()
}

fn e(kind: ExprKind) -> Expr {
    Expr::new(kind, sp())
}

fn number() -> impl Strategy<Value = Expr> {
    let value = prop_oneof![0u32..1000u32, Just(0u32)]
        .prop_map(f64::from)
        .boxed();
    let frac = (0u32..10_000, 1u32..5).prop_map(|(n, d)| f64::from(n) / f64::from(10u32.pow(d)));
    let value = prop_oneof![value, frac, 0.0f64..1e6];
    let unit = prop::option::of(prop::sample::select(UnitWord::ALL.to_vec()));
    (value, unit).prop_map(|(value, unit)| e(ExprKind::Number { value, unit }))
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        number(),
        "[ -~\n\t]{0,8}".prop_map(|s| e(ExprKind::Str(s))),
        any::<bool>().prop_map(|b| e(ExprKind::Bool(b))),
        ident().prop_map(|v| e(ExprKind::Var(v))),
    ]
}

fn binary_op() -> impl Strategy<Value = BinaryOp> {
    use BinaryOp::*;
    prop::sample::select(vec![Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul, Div])
}

fn args(inner: BoxedStrategy<Expr>) -> impl Strategy<Value = Vec<Expr>> {
    let lambda = (ident(), inner.clone()).prop_map(|(param, body)| {
        e(ExprKind::Lambda {
            param,
            body: Box::new(body),
        })
    });
    prop::collection::vec(prop_oneof![3 => inner, 1 => lambda], 0..3)
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 3, |inner| {
        let inner = inner.boxed();
        prop_oneof![
            (
                prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not]),
                inner.clone()
            )
                .prop_map(|(op, x)| e(ExprKind::Unary {
                    op,
                    operand: Box::new(x)
                })),
            (binary_op(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| e(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(l),
                    rhs: Box::new(r)
                }
            )),
            (prop::sample::select(CALLS), args(inner.clone())).prop_map(|(name, args)| e(
                ExprKind::Call {
                    name: name.to_string(),
                    args
                }
            )),
            (inner.clone(), prop::sample::select(METHODS), args(inner)).prop_map(
                |(r, name, args)| e(ExprKind::Method {
                    receiver: Box::new(r),
                    name: name.to_string(),
                    args
                })
            ),
        ]
    })
}

fn field() -> impl Strategy<Value = Field> {
    let kind = prop::sample::select(vec![
        FieldKind::Measured,
        FieldKind::Required,
        FieldKind::Note,
    ]);
    (kind, prop::option::of(ident()), expr()).prop_map(|(kind, name, value)| Field {
        kind,
        name: if kind == FieldKind::Note { None } else { name },
        value,
        span: sp(),
    })
}

fn status() -> impl Strategy<Value = Status> {
    prop::sample::select(vec![
        Status::Compliant,
        Status::NonCompliant,
        Status::NotApplicable,
    ])
}

fn simple_stmt() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        (ident(), expr()).prop_map(|(name, value)| Stmt::Let {
            name,
            value,
            span: sp()
        }),
        (expr(), status(), prop::collection::vec(field(), 0..3)).prop_map(
            |(target, status, fields)| Stmt::Classify {
                target,
                status,
                fields,
                span: sp()
            }
        ),
        expr().prop_map(|value| Stmt::Report { value, span: sp() }),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    simple_stmt().prop_recursive(3, 24, 3, |inner| {
        let body = prop::collection::vec(inner, 0..3);
        prop_oneof![
            (ident(), expr(), body.clone()).prop_map(|(var, iter, body)| Stmt::For {
                var,
                iter,
                body,
                span: sp()
            }),
            (expr(), body.clone(), prop::option::of(body)).prop_map(
                |(cond, then_body, else_body)| Stmt::If {
                    cond,
                    then_body,
                    else_body,
                    span: sp()
                }
            ),
        ]
    })
}

pub fn program() -> impl Strategy<Value = CheckProgram> {
    (
        prop::option::of(1u8..=12),
        prop::collection::vec(stmt(), 0..5),
    )
        .prop_map(|(rule_id, statements)| CheckProgram {
            rule_id,
            statements,
        })
}

/// `parse(render(p)) == p` over generated programs.
pub fn ast_round_trip(cases: u32) -> Result<(), String> {
    for w in IDENTS.iter().chain(CALLS).chain(METHODS) {
        assert!(
            !KEYWORDS.contains(w) && UnitWord::from_word(w).is_none(),
            "`{w}` is reserved"
        );
    }
    finish(runner(cases).run(&program(), |p| {
        let text = render(&p);
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{err}\n{text}")))?;
        prop_assert_eq!(&back, &p, "{}", text);
        prop_assert_eq!(render(&back), text);
        Ok(())
    }))
}

// ---- units ----

fn within(back: f64, v: f64) -> bool {
    (back - v).abs() <= 1e-9 * v.abs().max(1.0)
}

pub fn unit_round_trip(cases: u32) -> Result<(), String> {
    let lengths = (
        0.0f64..1e8,
        prop::sample::select(LengthUnit::ALL.to_vec()),
        prop::sample::select(LengthUnit::ALL.to_vec()),
    );
    finish(runner(cases).run(&lengths, |(v, a, b)| {
        let back = LengthQuantity::new(v, a).convert(b).convert(a);
        prop_assert!(within(back.value, v), "{v} {a:?}->{b:?}->{:?}", back.value);
        Ok(())
    }))?;
    let areas = (
        0.0f64..1e8,
        prop::sample::select(AreaUnit::ALL.to_vec()),
        prop::sample::select(AreaUnit::ALL.to_vec()),
    );
    finish(runner(cases).run(&areas, |(v, a, b)| {
        let back = AreaQuantity::new(v, a).convert(b).convert(a);
        prop_assert!(within(back.value, v), "{v} {a:?}->{b:?}->{:?}", back.value);
        Ok(())
    }))
}

// ---- polygon distance ----

type P = Point2<f64>;

/// Star-shaped, hence simple, polygon around `c`.
fn star(c: (f64, f64), radii: &[f64], phase: f64) -> Vec<P> {
    let n = radii.len();
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = phase + std::f64::consts::TAU * i as f64 / n as f64;
            P::new(c.0 + r * t.cos(), c.1 + r * t.sin())
        })
        .collect()
}

fn polygon() -> impl Strategy<Value = Vec<P>> {
    (
        -5000.0f64..5000.0,
        -5000.0f64..5000.0,
        prop::collection::vec(100.0f64..2000.0, 3..9),
        0.0f64..6.3,
    )
        .prop_map(|(x, y, radii, phase)| star((x, y), &radii, phase))
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// Closest approach of two segments by minimizing |p(s) - q(t)| over the
/// unit square: interior stationary point, else the best of the four
/// clamped edges.
fn segment_distance(p0: P, p1: P, q0: P, q1: P) -> f64 {
    let d1 = (p1.x - p0.x, p1.y - p0.y);
    let d2 = (q1.x - q0.x, q1.y - q0.y);
    let r = (p0.x - q0.x, p0.y - q0.y);
    let (a, b, c) = (dot(d1, d1), dot(d1, d2), dot(d2, d2));
    let (d, f) = (dot(d1, r), dot(d2, r));
    let at = |s: f64, t: f64| {
        let x = r.0 + s * d1.0 - t * d2.0;
        let y = r.1 + s * d1.1 - t * d2.1;
        (x * x + y * y).sqrt()
    };
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let mut best = f64::INFINITY;
    let denom = a * c - b * b;
    if denom > 1e-12 * a * c {
        let s = (b * f - c * d) / denom;
        let t = (a * f - b * d) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            best = at(s, t);
        }
    }
    for s in [0.0, 1.0] {
        best = best.min(at(s, clamp((b * s + f) / c)));
    }
    for t in [0.0, 1.0] {
        best = best.min(at(clamp((b * t - d) / a), t));
    }
    best
}

fn winding(p: P, poly: &[P]) -> i32 {
    let mut w = 0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y && b.y > p.y && cross > 0.0 {
            w += 1;
        } else if a.y > p.y && b.y <= p.y && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

pub fn oracle_distance(a: &[P], b: &[P]) -> f64 {
    if winding(a[0], b) != 0 || winding(b[0], a) != 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        for j in 0..b.len() {
            best = best.min(segment_distance(
                a[i],
                a[(i + 1) % a.len()],
                b[j],
                b[(j + 1) % b.len()],
            ));
        }
    }
    best
}

pub fn polygon_distance_agrees(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&(polygon(), polygon()), |(a, b)| {
        let got = polygon_distance_mm(&a, &b).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let want = oracle_distance(&a, &b);
        prop_assert!((got - want).abs() <= 1e-6, "got {got}, oracle {want}");
        let back = polygon_distance_mm(&b, &a).unwrap();
        prop_assert!((got - back).abs() <= 1e-9);
        Ok(())
    }))
}

// ---- monotonicity ----

fn non_compliant(m: &BuildingModel, rule: u8) -> BTreeSet<Subject> {
    check_rule(m, u32::from(rule))
        .unwrap()
        .with_status(Status::NonCompliant)
        .map(|f| f.subject.clone())
        .collect()
}

/// Enlarging by `s` may clear violations but never adds one.
fn monotone<T: std::fmt::Debug + Clone>(
    rule: u8,
    cases: u32,
    params: impl Strategy<Value = T>,
    build: impl Fn(&T, f64) -> BuildingModel,
) -> Result<(), String> {
    finish(runner(cases).run(&(params, 1.0f64..3.0), |(p, s)| {
        let before = non_compliant(&build(&p, 1.0), rule);
        let after = non_compliant(&build(&p, s), rule);
        prop_assert!(
            after.is_subset(&before),
            "rule {rule}, scale {s}: {before:?} -> {after:?}"
        );
        Ok(())
    }))
    .map_err(|e| format!("rule {rule}: {e}"))
}

fn one_level() -> ModelBuilder {
    ModelBuilder::new("generated")
        .level(1, "L1", 0.0)
        .level(2, "L2", 3000.0)
}

fn with<T>(b: ModelBuilder, items: &[T], f: impl Fn(u64, &T) -> E) -> ModelBuilder {
    items
        .iter()
        .enumerate()
        .fold(b, |b, (i, x)| b.element(f(i as u64 + 1, x)))
}

const ROOM_NAMES: &[&str] = &[
    "Bedroom",
    "Living Room",
    "Dining",
    "Kitchen",
    "Kitchen / Dining",
    "Bathroom",
    "Office",
    "Hall",
];

fn room_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(ROOM_NAMES)
}

fn rule1(cases: u32) -> Result<(), String> {
    let door = (
        20.0f64..50.0,
        60.0f64..100.0,
        prop::option::of(20.0f64..45.0),
        prop::option::of(any::<bool>()),
    );
    monotone(1, cases, prop::collection::vec(door, 0..6), |doors, s| {
        with(one_level(), doors, |id, &(w, h, cw, exit)| {
            let mut d = E::new(id, Category::Door, "d", 1)
                .inches("width", w * s)
                .inches("height", h * s);
            if let Some(cw) = cw {
                d = d.inches("clear_width", cw * s);
            }
            if let Some(x) = exit {
                d = d.flag("exit", x);
            }
            d
        })
        .build()
    })
}

fn rule2(cases: u32) -> Result<(), String> {
    monotone(
        2,
        cases,
        prop::collection::vec(20.0f64..50.0, 0..5),
        |ws, s| {
            with(one_level(), ws, |id, w| {
                E::new(id, Category::Stair, "s", 1).inches("width", w * s)
            })
            .build()
        },
    )
}

fn rule3(cases: u32) -> Result<(), String> {
    let rail = (0.0f64..80.0, prop::option::of(20.0f64..50.0));
    monotone(3, cases, prop::collection::vec(rail, 0..5), |rails, s| {
        with(one_level(), rails, |id, &(surface, h)| {
            let r = E::new(id, Category::Railing, "r", 1).inches("walking_surface_height", surface);
            match h {
                Some(h) => r.inches("height", h * s),
                None => r,
            }
        })
        .build()
    })
}

fn rule4(cases: u32) -> Result<(), String> {
    let levels = (
        -3000.0f64..0.0,
        prop::collection::vec(1500.0f64..4000.0, 0..4),
    );
    let room = (room_name(), 0usize..5, prop::option::of(0.0f64..1500.0));
    monotone(
        4,
        cases,
        (levels, prop::collection::vec(room, 0..6)),
        |((base, steps), rooms), s| {
            let mut b = ModelBuilder::new("generated");
            let mut elev = vec![*base];
            for step in steps {
                elev.push(elev.last().unwrap() + step);
            }
            for (i, z) in elev.iter().enumerate() {
                b = b.level(i as u64 + 1, &format!("L{i}"), z * s);
            }
            let n = elev.len();
            with(b, rooms, |id, &(name, lv, allowance)| {
                let r = E::new(id, Category::Room, name, (lv % n) as u64 + 1);
                match allowance {
                    Some(a) => r.length("assembly_allowance", LengthQuantity::mm(a)),
                    None => r,
                }
            })
            .build()
        },
    )
}

fn rule5(cases: u32) -> Result<(), String> {
    let windows = prop::collection::vec((300.0f64..3000.0, 300.0f64..3000.0), 0..6);
    let walls = prop::collection::vec((1000.0f64..15000.0, 2000.0f64..4000.0, any::<bool>()), 0..6);
    monotone(5, cases, (windows, walls), |(windows, walls), s| {
        let b = with(one_level(), windows, |id, &(w, h)| {
            E::new(id, Category::Window, "w", 1)
                .length("width", LengthQuantity::mm(w))
                .length("height", LengthQuantity::mm(h))
        });
        with(b, walls, |id, &(l, h, ext)| {
            E::new(100 + id, Category::Wall, "wall", 1)
                .length("length", LengthQuantity::mm(l * s))
                .length("height", LengthQuantity::mm(h))
                .flag("exterior", ext)
        })
        .build()
    })
}

fn rule6(cases: u32) -> Result<(), String> {
    let room = (room_name(), 1000.0f64..6000.0, 1000.0f64..6000.0);
    monotone(6, cases, prop::collection::vec(room, 0..6), |rooms, s| {
        with(one_level(), rooms, |id, &(name, w, d)| {
            let x = id as f64 * 10_000.0;
            E::new(id, Category::Room, name, 1).rect(x, 0.0, x + w * s, d * s)
        })
        .build()
    })
}

fn rule7(cases: u32) -> Result<(), String> {
    // Fixture against the south wall facing north, with an optional
    // obstacle `gap` in front; enlarging widens the gap and the room.
    let kind = prop::sample::select(vec!["water_closet", "lavatory", "bidet"]);
    let obstacle = prop::option::of((50.0f64..900.0, 100.0f64..600.0, -500.0f64..500.0));
    let p = (
        kind,
        200.0f64..1500.0,
        300.0f64..800.0,
        300.0f64..900.0,
        0.0f64..1200.0,
        obstacle,
    );
    monotone(7, cases, p, |&(kind, x0, fw, fh, extra, obstacle), s| {
        let mut depth = fh + extra;
        let mut b = one_level();
        if let Some((gap, od, shift)) = obstacle {
            let y = fh + gap * s;
            depth = depth.max(fh + gap + od);
            b = b.element(
                E::new(3, Category::Stair, "obstacle", 1)
                    .bbox([x0 + shift, y, 0.0], [x0 + shift + fw, y + od, 900.0]),
            );
        }
        b.element(E::new(1, Category::Room, "Bathroom", 1).rect(0.0, 0.0, 3000.0, depth * s))
            .element(
                E::new(2, Category::PlumbingFixture, "fixture", 1)
                    .text("fixture_type", kind)
                    .bbox([x0, 0.0, 0.0], [x0 + fw, fh, 800.0])
                    .facing(0.0, 1.0),
            )
            .build()
    })
}

fn rule8(cases: u32) -> Result<(), String> {
    let kind = prop::sample::select(vec![
        "water_closet",
        "lavatory",
        "bathtub",
        "shower",
        "sink",
    ]);
    let p = (prop::collection::vec(kind, 0..6), 1.0f64..3.0);
    finish(runner(cases).run(&p, |(kinds, s)| {
        let copies = s.ceil() as usize;
        let build = |n: usize| {
            let all: Vec<&str> = kinds
                .iter()
                .flat_map(|k| std::iter::repeat_n(*k, n))
                .collect();
            with(one_level(), &all, |id, k| {
                E::new(id, Category::PlumbingFixture, "f", 1).text("fixture_type", k)
            })
            .build()
        };
        let before = non_compliant(&build(1), 8);
        let after = non_compliant(&build(copies), 8);
        prop_assert!(after.is_subset(&before));
        Ok(())
    }))
    .map_err(|e| format!("rule 8: {e}"))
}

fn rule9(cases: u32) -> Result<(), String> {
    let room = (
        room_name(),
        0.0f64..20000.0,
        0.0f64..20000.0,
        1000.0f64..6000.0,
        1000.0f64..6000.0,
    );
    let sinks = prop::collection::vec((0.0f64..25000.0, 0.0f64..25000.0), 0..6);
    monotone(
        9,
        cases,
        (prop::collection::vec(room, 0..5), sinks),
        |(rooms, sinks), s| {
            let b = with(one_level(), rooms, |id, &(name, cx, cy, w, d)| {
                let (hw, hd) = (w * s / 2.0, d * s / 2.0);
                E::new(id, Category::Room, name, 1).rect(cx - hw, cy - hd, cx + hw, cy + hd)
            });
            with(b, sinks, |id, &(x, y)| {
                E::new(100 + id, Category::PlumbingFixture, "sink", 1)
                    .text("fixture_type", "sink")
                    .location(x, y, 0.0)
            })
            .build()
        },
    )
}

fn rule10(cases: u32) -> Result<(), String> {
    let material = prop::sample::select(vec![
        "Wood structural panel",
        "Wood Structural Panel (OSB)",
        "Particleboard",
    ]);
    let floor = (material, 10.0f64..30.0, any::<bool>());
    monotone(
        10,
        cases,
        prop::collection::vec(floor, 0..5),
        |floors, s| {
            with(one_level(), floors, |id, &(m, t, span)| {
                let f = E::new(id, Category::Floor, "floor", 1)
                    .text("material", m)
                    .length("thickness", LengthQuantity::mm(t * s));
                if span {
                    f.text("span_rating", "24/16")
                } else {
                    f
                }
            })
            .build()
        },
    )
}

fn rule11(cases: u32) -> Result<(), String> {
    let footing = (
        -10000.0f64..10000.0,
        -10000.0f64..10000.0,
        300.0f64..3000.0,
        300.0f64..3000.0,
    );
    monotone(
        11,
        cases,
        prop::collection::vec(footing, 0..6),
        |footings, s| {
            with(one_level(), footings, |id, &(cx, cy, w, d)| {
                let (cx, cy) = (cx * s, cy * s);
                E::new(id, Category::Footing, "footing", 1).bbox(
                    [cx - w / 2.0, cy - d / 2.0, -900.0],
                    [cx + w / 2.0, cy + d / 2.0, 0.0],
                )
            })
            .build()
        },
    )
}

fn rule12(cases: u32) -> Result<(), String> {
    let room = (room_name(), 0u64..12);
    let terminal = (0.0f64..40000.0, 0.0f64..6000.0, 0.0f64..200.0);
    monotone(
        12,
        cases,
        (
            prop::collection::vec(room, 0..5),
            prop::collection::vec(terminal, 0..8),
        ),
        |(rooms, terms), s| {
            let b = with(one_level(), rooms, |id, &(name, occ)| {
                let x = (id - 1) as f64 * 8000.0;
                E::new(id, Category::Room, name, 1)
                    .rect(x, 0.0, x + 8000.0, 6000.0)
                    .count("occupants", occ)
            });
            with(b, terms, |id, &(x, y, f)| {
                E::new(100 + id, Category::AirTerminal, "t", 1)
                    .location(x, y, 2700.0)
                    .flow("flow", f * s)
            })
            .build()
        },
    )
}

pub fn monotonicity(cases_per_rule: u32) -> Result<(), String> {
    type Suite = fn(u32) -> Result<(), String>;
    let suites: [Suite; 12] = [
        rule1, rule2, rule3, rule4, rule5, rule6, rule7, rule8, rule9, rule10, rule11, rule12,
    ];
    suites.iter().try_for_each(|f| f(cases_per_rule))
}
