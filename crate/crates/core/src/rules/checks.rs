use super::{CheckResult, Finding, Quantity, RuleConfig, Subject};
use crate::building_model::{BuildingModel, Category, Element};
use crate::geometry::{self, Point2};
use crate::units::AreaQuantity;
use crate::Length;

use super::LENGTH_EPS_MM;

fn threshold(config: &RuleConfig, rule: u8, name: &str) -> Quantity {
    config
        .threshold(rule, name)
        .unwrap_or_else(|| panic!("rule {rule} has no threshold `{name}`"))
}

fn missing(e: &Element, param: &str) -> Finding {
    Finding::not_applicable(
        Subject::element(e.id),
        format!("missing parameter `{param}` on element {}", e.id),
    )
}

fn len(l: Length) -> Quantity {
    Quantity::Length(l)
}

/// Rule 1: every door at least 36 × 80 in, with 32 in net clear width when
/// recorded. Doors flagged `exit = false` are skipped.
pub fn check_exit_openings(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min_w = threshold(config, 1, "min_width");
    let min_h = threshold(config, 1, "min_height");
    let min_clear = threshold(config, 1, "min_clear_width");
    let findings = model
        .collect(Category::Door)
        .into_iter()
        .map(|d| {
            let subject = Subject::element(d.id);
            if d.flag("exit") == Some(false) {
                return Finding::not_applicable(subject, "door is not a required exit");
            }
            let Some(width) = d.length("width") else {
                return missing(d, "width");
            };
            let Some(height) = d.length("height") else {
                return missing(d, "height");
            };
            let mut checks = vec![("width", len(width), min_w), ("height", len(height), min_h)];
            if let Some(cw) = d.length("clear_width") {
                checks.push(("clear_width", len(cw), min_clear));
            }
            let failing: Vec<_> = checks.iter().filter(|(_, m, r)| !m.meets_min(r)).collect();
            if failing.is_empty() {
                checks
                    .iter()
                    .fold(Finding::compliant(subject), |f, (n, m, r)| {
                        f.compare(n, *m, *r)
                    })
            } else {
                let names: Vec<&str> = failing.iter().map(|(n, _, _)| *n).collect();
                failing
                    .iter()
                    .fold(Finding::non_compliant(subject), |f, (n, m, r)| {
                        f.compare(n, *m, *r)
                    })
                    .with_note(format!("below minimum: {}", names.join(", ")))
            }
        })
        .collect();
    CheckResult::new(1, findings)
}

/// Rule 2: stair clear width.
pub fn check_stair_width(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min_w = threshold(config, 2, "min_width");
    let findings = model
        .collect(Category::Stair)
        .into_iter()
        .map(|s| {
            let Some(width) = s.length("width") else {
                return missing(s, "width");
            };
            let status = if len(width).meets_min(&min_w) {
                Finding::compliant
            } else {
                Finding::non_compliant
            };
            status(Subject::element(s.id)).compare("width", len(width), min_w)
        })
        .collect();
    CheckResult::new(2, findings)
}

/// Rule 3: guards on surfaces more than 30 in above floor or grade.
pub fn check_guard_height(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let limit = threshold(config, 3, "guarded_surface_height");
    let min_h = threshold(config, 3, "min_guard_height");
    let findings = model
        .collect(Category::Railing)
        .into_iter()
        .map(|r| {
            let subject = Subject::element(r.id);
            let Some(surface) = r.length("walking_surface_height") else {
                return missing(r, "walking_surface_height");
            };
            if !len(surface).exceeds(&limit) {
                return Finding::not_applicable(
                    subject,
                    "walking surface is not more than 30 in above floor or grade",
                );
            }
            let Some(guard) = r.length("height") else {
                return missing(r, "height");
            };
            let status = if len(guard).meets_min(&min_h) {
                Finding::compliant
            } else {
                Finding::non_compliant
            };
            status(subject)
                .compare("height", len(guard), min_h)
                .measured("walking_surface_height", len(surface))
        })
        .collect();
    CheckResult::new(3, findings)
}

/// Rule 4: floor-to-floor height of habitable rooms, less any assembly
/// allowance, against 7 ft.
pub fn check_ceiling_height(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min_h = threshold(config, 4, "min_ceiling_height");
    let findings = model
        .collect(Category::Room)
        .into_iter()
        .filter(|r| config.is_habitable(&r.name))
        .map(|r| {
            let subject = Subject::element(r.id);
            let own = model
                .level(r.level_id)
                .map(|l| l.elevation.to_mm())
                .unwrap_or(0.0);
            let Some(above) = model.level_above(r.level_id) else {
                return Finding::not_applicable(subject, "no level above the room's level");
            };
            let allowance = r
                .length("assembly_allowance")
                .map(|l| l.to_mm())
                .unwrap_or(0.0);
            let ceiling = Quantity::mm(above.elevation.to_mm() - own - allowance);
            let status = if ceiling.meets_min(&min_h) {
                Finding::compliant
            } else {
                Finding::non_compliant
            };
            status(subject).compare("ceiling_height", ceiling, min_h)
        })
        .collect();
    CheckResult::new(4, findings)
}

fn mm2_product(e: &Element, a: &str, b: &str) -> Option<f64> {
    Some(e.length(a)?.to_mm() * e.length(b)?.to_mm())
}

/// Rule 5: whole-building window area over gross exterior wall area.
pub fn check_window_wall_ratio(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let max_ratio = threshold(config, 5, "max_ratio");
    let window_mm2: f64 = model
        .collect(Category::Window)
        .into_iter()
        .filter_map(|w| mm2_product(w, "width", "height"))
        .sum();
    let wall_mm2: f64 = model
        .collect(Category::Wall)
        .into_iter()
        .filter(|w| w.flag("exterior") == Some(true))
        .filter_map(|w| mm2_product(w, "length", "height"))
        .sum();
    let subject = Subject::building("window_wall_ratio");
    let finding = if wall_mm2 <= 0.0 {
        Finding::not_applicable(subject, "no exterior wall area in the model")
    } else {
        let ratio = Quantity::Number(window_mm2 / wall_mm2);
        let status = if ratio.within_max(&max_ratio) {
            Finding::compliant
        } else {
            Finding::non_compliant
        };
        status(subject)
            .compare("ratio", ratio, max_ratio)
            .measured(
                "window_area",
                Quantity::Area(AreaQuantity::from_mm2(window_mm2)),
            )
            .measured(
                "wall_area",
                Quantity::Area(AreaQuantity::from_mm2(wall_mm2)),
            )
    };
    CheckResult::new(5, vec![finding])
}

fn footprint_area(e: &Element) -> Option<Quantity> {
    let fp = e.geometry.footprint.as_deref()?;
    geometry::polygon_area(fp).ok().map(Quantity::Area)
}

/// Rule 6: one habitable room of at least 120 ft², every other non-kitchen
/// habitable room at least 70 ft².
pub fn check_room_areas(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let primary = threshold(config, 6, "min_primary_area");
    let other = threshold(config, 6, "min_other_area");
    let mut findings = Vec::new();
    let mut largest: Option<Quantity> = None;
    let mut any_habitable = false;
    for r in model.collect(Category::Room) {
        if !config.is_habitable(&r.name) {
            continue;
        }
        any_habitable = true;
        let subject = Subject::element(r.id);
        if config.is_kitchen(&r.name) {
            findings.push(Finding::not_applicable(
                subject,
                "kitchens are exempt from the per-room minimum",
            ));
            continue;
        }
        let Some(area) = footprint_area(r) else {
            findings.push(Finding::not_applicable(
                subject,
                format!("room {} has no footprint", r.id),
            ));
            continue;
        };
        if largest.is_none_or(|l| area.canonical() > l.canonical()) {
            largest = Some(area);
        }
        let status = if area.meets_min(&other) {
            Finding::compliant
        } else {
            Finding::non_compliant
        };
        findings.push(status(subject).compare("area", area, other));
    }
    let subject = Subject::building("habitable_room_120sqft");
    let existence = match largest {
        Some(l) if l.meets_min(&primary) => {
            Finding::compliant(subject).compare("largest_area", l, primary)
        }
        Some(l) => Finding::non_compliant(subject)
            .compare("largest_area", l, primary)
            .with_note("no habitable room reaches the primary minimum"),
        None if any_habitable => Finding::not_applicable(subject, "no measurable habitable room"),
        None => Finding::not_applicable(subject, "no habitable rooms in the model"),
    };
    findings.push(existence);
    CheckResult::new(6, findings)
}

const CLEARANCE_TYPES: [&str; 3] = ["water_closet", "lavatory", "bidet"];

/// Clear depth, in millimeters, available in front of a fixture up to
/// `limit_mm`, bounded by the containing room and by every other element's
/// plan outline on the same level (rooms and floors excepted).
pub fn clear_depth(model: &BuildingModel, fixture: &Element, limit_mm: f64) -> Result<f64, String> {
    let facing = fixture
        .geometry
        .facing
        .ok_or_else(|| format!("element {} has no facing vector", fixture.id))?;
    let bbox = fixture
        .geometry
        .bbox
        .ok_or_else(|| format!("element {} has no bounding box", fixture.id))?;
    let room = model
        .room_of(fixture)
        .ok_or_else(|| format!("element {} is not inside any room", fixture.id))?;
    let room_fp = room
        .geometry
        .footprint
        .as_deref()
        .expect("room_of only returns rooms with footprints");
    let obstacles: Vec<Vec<Point2<f64>>> = model
        .elements
        .iter()
        .filter(|e| {
            e.id != fixture.id
                && e.level_id == fixture.level_id
                && !matches!(e.category, Category::Room | Category::Floor)
        })
        .filter_map(|e| e.plan_outline())
        .map(|o| geometry::convex_hull(&o))
        .filter(|h| h.len() >= 3)
        .collect();
    let clear = |depth: f64| {
        let rect = geometry::front_rectangle(&bbox, facing, depth);
        geometry::polygon_within(&rect, room_fp, LENGTH_EPS_MM)
            && !obstacles
                .iter()
                .any(|o| geometry::convex_overlap(&rect, o, LENGTH_EPS_MM))
    };
    if clear(limit_mm) {
        return Ok(limit_mm);
    }
    let (mut lo, mut hi) = (0.0, limit_mm);
    while hi - lo > 0.01 {
        let mid = (lo + hi) / 2.0;
        if clear(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Rule 7: 21 in clear space in front of water closets, lavatories and
/// bidets.
pub fn check_fixture_clearance(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let depth = threshold(config, 7, "min_clear_depth");
    let findings = model
        .collect(Category::PlumbingFixture)
        .into_iter()
        .filter(|f| {
            f.text("fixture_type")
                .is_some_and(|t| CLEARANCE_TYPES.contains(&t))
        })
        .map(|f| {
            let subject = Subject::element(f.id);
            match clear_depth(model, f, depth.canonical()) {
                Err(why) => Finding::not_applicable(subject, why),
                Ok(available) => {
                    let available = Quantity::mm(available);
                    let status = if available.meets_min(&depth) {
                        Finding::compliant
                    } else {
                        Finding::non_compliant
                    };
                    status(subject).compare("clear_depth", available, depth)
                }
            }
        })
        .collect();
    CheckResult::new(7, findings)
}

/// Rule 8: at least one water closet, one lavatory, and one bathtub or
/// shower in the model.
pub fn check_toilet_facilities(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min = threshold(config, 8, "min_count");
    let fixtures = model.collect(Category::PlumbingFixture);
    let count = |kinds: &[&str]| {
        fixtures
            .iter()
            .filter(|f| f.text("fixture_type").is_some_and(|t| kinds.contains(&t)))
            .count() as f64
    };
    let required: [(&str, &[&str]); 3] = [
        ("water_closet", &["water_closet"]),
        ("lavatory", &["lavatory"]),
        ("bathtub_or_shower", &["bathtub", "shower"]),
    ];
    let findings = required
        .iter()
        .map(|(key, kinds)| {
            let n = Quantity::Number(count(kinds));
            let status = if n.meets_min(&min) {
                Finding::compliant
            } else {
                Finding::non_compliant
            };
            let f = status(Subject::building(*key)).compare("count", n, min);
            if f.status == super::Status::NonCompliant {
                f.with_note(format!("no {} in the model", key.replace('_', " ")))
            } else {
                f
            }
        })
        .collect();
    CheckResult::new(8, findings)
}

/// Rule 9: every kitchen contains a sink.
pub fn check_kitchen_sink(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min = threshold(config, 9, "min_sinks");
    let sinks: Vec<&Element> = model
        .collect(Category::PlumbingFixture)
        .into_iter()
        .filter(|f| f.text("fixture_type") == Some("sink"))
        .collect();
    let findings = model
        .collect(Category::Room)
        .into_iter()
        .filter(|r| config.is_kitchen(&r.name))
        .map(|k| {
            let subject = Subject::element(k.id);
            let Some(fp) = k.geometry.footprint.as_deref() else {
                return Finding::not_applicable(subject, format!("room {} has no footprint", k.id));
            };
            let n = sinks
                .iter()
                .filter(|s| s.level_id == k.level_id)
                .filter_map(|s| s.plan_point())
                .filter(|p| {
                    geometry::point_in_polygon(*p, fp, crate::building_model::CONTAINMENT_EPS_MM)
                })
                .count();
            let n = Quantity::Number(n as f64);
            if n.meets_min(&min) {
                Finding::compliant(subject).compare("sinks", n, min)
            } else {
                Finding::non_compliant(subject)
                    .compare("sinks", n, min)
                    .with_note("sink is missing from the kitchen")
            }
        })
        .collect();
    CheckResult::new(9, findings)
}

/// Rule 10: floor panels of an accepted material, minimum thickness, and a
/// recorded span rating.
pub fn check_floor_panels(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let min_t = threshold(config, 10, "min_thickness");
    let findings = model
        .collect(Category::Floor)
        .into_iter()
        .map(|fl| {
            let subject = Subject::element(fl.id);
            let Some(material) = fl.text("material") else {
                return missing(fl, "material");
            };
            let Some(thickness) = fl.length("thickness") else {
                return missing(fl, "thickness");
            };
            let thickness = len(thickness);
            let mut problems = Vec::new();
            if !config.material_allowed(material) {
                problems.push(format!(
                    "material `{material}` is not an accepted wood structural panel"
                ));
            }
            if !thickness.meets_min(&min_t) {
                problems.push("panel is thinner than the minimum".to_string());
            }
            if fl.text("span_rating").is_none() {
                problems.push("span rating is not recorded".to_string());
            }
            if problems.is_empty() {
                Finding::compliant(subject).compare("thickness", thickness, min_t)
            } else {
                let f = Finding::non_compliant(subject).compare("thickness", thickness, min_t);
                let f = if config.material_allowed(material) {
                    f
                } else {
                    f.compare(
                        "accepted_material",
                        Quantity::Number(0.0),
                        Quantity::Number(1.0),
                    )
                };
                let f = if fl.text("span_rating").is_some() {
                    f
                } else {
                    f.compare(
                        "span_rating_recorded",
                        Quantity::Number(0.0),
                        Quantity::Number(1.0),
                    )
                };
                f.with_note(problems.join("; "))
            }
        })
        .collect();
    CheckResult::new(10, findings)
}

/// Footing width: the smaller horizontal dimension of its plan extent.
pub fn footing_width(e: &Element) -> Option<f64> {
    if let Some(b) = &e.geometry.bbox {
        return Some(b.plan_width());
    }
    let fp = e.geometry.footprint.as_deref()?;
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in fp {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Some((x1 - x0).min(y1 - y0))
}

/// Rule 11: edge-to-edge distance between footings at least the width of
/// the larger of the two.
pub fn check_footing_spacing(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let factor = threshold(config, 11, "spacing_factor").canonical();
    let mut findings = Vec::new();
    let mut usable: Vec<(&Element, Vec<Point2<f64>>, f64)> = Vec::new();
    for f in model.collect(Category::Footing) {
        match (f.plan_outline(), footing_width(f)) {
            (Some(o), Some(w)) => usable.push((f, o, w)),
            _ => findings.push(Finding::not_applicable(
                Subject::element(f.id),
                format!("footing {} has no plan geometry", f.id),
            )),
        }
    }
    let key = Subject::building("footing_spacing");
    if usable.len() < 2 {
        findings.push(Finding::not_applicable(
            key,
            "fewer than two footings to compare",
        ));
        return CheckResult::new(11, findings);
    }
    let mut violations = 0;
    for i in 0..usable.len() {
        for j in (i + 1)..usable.len() {
            let (a, oa, wa) = &usable[i];
            let (b, ob, wb) = &usable[j];
            let distance =
                Quantity::mm(geometry::polygon_distance_mm(oa, ob).expect("validated outlines"));
            let required = Quantity::mm(wa.max(*wb) * factor);
            if !distance.meets_min(&required) {
                violations += 1;
                findings.push(
                    Finding::non_compliant(Subject::pair(a.id, b.id))
                        .compare("distance", distance, required)
                        .with_note("footings closer than the width of the larger footing"),
                );
            }
        }
    }
    if violations == 0 {
        findings.push(Finding::compliant(key));
    }
    CheckResult::new(11, findings)
}

/// Rule 12: outdoor air per occupied room against 0.06 CFM/ft² plus
/// 5 CFM per occupant. Terminals go to the first same-level room that
/// contains them.
pub fn check_ventilation(model: &BuildingModel, config: &RuleConfig) -> CheckResult {
    let area_rate = threshold(config, 12, "area_rate").canonical();
    let people_rate = threshold(config, 12, "people_rate").canonical();
    let terminals = model.collect(Category::AirTerminal);
    if terminals.is_empty() {
        return CheckResult::new(
            12,
            vec![Finding::not_applicable(
                Subject::building("ventilation"),
                "no air terminals in the model",
            )],
        );
    }
    let mut findings = Vec::new();
    let mut assigned: Vec<(&Element, f64)> = Vec::new();
    for t in &terminals {
        let Some(flow) = t.flow("flow") else {
            findings.push(missing(t, "flow"));
            continue;
        };
        match model.room_of(t) {
            Some(room) => assigned.push((room, flow)),
            None => findings.push(Finding::not_applicable(
                Subject::element(t.id),
                format!("air terminal {} is outside every room (unassigned)", t.id),
            )),
        }
    }
    for r in model.collect(Category::Room) {
        if !config.is_habitable(&r.name) {
            continue;
        }
        let subject = Subject::element(r.id);
        let Some(area) = footprint_area(r) else {
            findings.push(Finding::not_applicable(
                subject,
                format!("room {} has no footprint", r.id),
            ));
            continue;
        };
        let occupants = r.count("occupants").unwrap_or(0) as f64;
        let required = Quantity::Flow(area_rate * area.canonical() + people_rate * occupants);
        let supplied = Quantity::Flow(
            assigned
                .iter()
                .filter(|(room, _)| room.id == r.id)
                .map(|(_, f)| f)
                .sum(),
        );
        let status = if supplied.meets_min(&required) {
            Finding::compliant
        } else {
            Finding::non_compliant
        };
        findings.push(
            status(subject)
                .compare("outdoor_air", supplied, required)
                .measured("floor_area", area),
        );
    }
    CheckResult::new(12, findings)
}
