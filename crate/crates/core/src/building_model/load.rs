use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Deserialize;
use serde_json::Value;

use super::{
    known_param_kind, BuildingModel, Category, Element, ElementId, Geometry, Level, LevelId,
    ParamKind, ParamValue,
};
use crate::geometry::{self, Aabb, GeometryError, Point2};
use crate::units::{AreaQuantity, AreaUnit, LengthQuantity, LengthUnit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("duplicate element id {0}")]
    DuplicateId(u64),
    #[error("duplicate level id {0}")]
    DuplicateLevel(u64),
    #[error("element {element} references unknown level {level}")]
    DanglingReference { element: u64, level: u64 },
    #[error("geometry error in element {element}: {source}")]
    Geometry { element: u64, source: GeometryError },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    name: Option<String>,
    units: LengthUnit,
    levels: Vec<RawLevel>,
    elements: Vec<RawElement>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    id: u64,
    name: String,
    elevation: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: u64,
    category: Category,
    name: String,
    level_id: u64,
    #[serde(default)]
    params: BTreeMap<String, RawParam>,
    #[serde(default)]
    geometry: Option<RawGeometry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    kind: ParamKind,
    value: Value,
    #[serde(default)]
    unit: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(default)]
    bbox: Option<[f64; 6]>,
    #[serde(default)]
    footprint: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    location: Option<[f64; 3]>,
    #[serde(default)]
    facing: Option<[f64; 2]>,
}

/// Parse and validate model-file bytes.
pub fn load_model(bytes: &[u8]) -> Result<BuildingModel, ModelError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| schema("$", format!("file is not UTF-8: {e}")))?;
    load_model_str(text)
}

pub fn load_model_str(text: &str) -> Result<BuildingModel, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(
            if path.is_empty() {
                "$".to_string()
            } else {
                path
            },
            e.into_inner().to_string(),
        )
    })?;
    build(raw)
}

fn build(raw: RawModel) -> Result<BuildingModel, ModelError> {
    let units = raw.units;
    let to_mm = |v: f64| LengthQuantity::new(v, units).to_mm();

    let mut level_ids = HashSet::new();
    let mut level_names = HashSet::new();
    let mut levels = Vec::with_capacity(raw.levels.len());
    for (i, l) in raw.levels.into_iter().enumerate() {
        if l.id == 0 {
            return Err(schema(format!("levels[{i}].id"), "ids must be positive"));
        }
        if !l.elevation.is_finite() {
            return Err(schema(
                format!("levels[{i}].elevation"),
                "elevation must be finite",
            ));
        }
        if !level_ids.insert(l.id) {
            return Err(ModelError::DuplicateLevel(l.id));
        }
        if !level_names.insert(l.name.clone()) {
            return Err(schema(
                format!("levels[{i}].name"),
                format!("duplicate level name `{}`", l.name),
            ));
        }
        levels.push(Level {
            id: LevelId(l.id),
            name: l.name,
            elevation: LengthQuantity::mm(to_mm(l.elevation)),
        });
    }

    let mut seen = HashSet::new();
    let mut kinds: HashMap<String, ParamKind> = HashMap::new();
    let mut elements = Vec::with_capacity(raw.elements.len());
    for (i, e) in raw.elements.into_iter().enumerate() {
        if e.id == 0 {
            return Err(schema(format!("elements[{i}].id"), "ids must be positive"));
        }
        if !seen.insert(e.id) {
            return Err(ModelError::DuplicateId(e.id));
        }
        if !level_ids.contains(&e.level_id) {
            return Err(ModelError::DanglingReference {
                element: e.id,
                level: e.level_id,
            });
        }
        let mut params = BTreeMap::new();
        for (name, p) in e.params {
            let path = format!("elements[{i}].params.{name}");
            let value = param_value(&path, p, units)?;
            let kind = value.kind();
            if let Some(expected) = known_param_kind(&name) {
                if expected != kind {
                    return Err(schema(
                        format!("{path}.kind"),
                        format!("parameter `{name}` must be {expected}, got {kind}"),
                    ));
                }
            }
            match kinds.get(&name) {
                Some(&prev) if prev != kind => {
                    return Err(schema(
                        format!("{path}.kind"),
                        format!("parameter `{name}` is {prev} elsewhere in the model, got {kind}"),
                    ))
                }
                _ => {
                    kinds.insert(name.clone(), kind);
                }
            }
            params.insert(name, value);
        }
        let geometry = match e.geometry {
            Some(g) => build_geometry(g, &to_mm).map_err(|source| ModelError::Geometry {
                element: e.id,
                source,
            })?,
            None => Geometry::default(),
        };
        elements.push(Element {
            id: ElementId(e.id),
            category: e.category,
            name: e.name,
            level_id: LevelId(e.level_id),
            params,
            geometry,
        });
    }

    Ok(BuildingModel::from_parts(
        raw.name.unwrap_or_default(),
        units,
        levels,
        elements,
    ))
}

fn param_value(path: &str, p: RawParam, file_units: LengthUnit) -> Result<ParamValue, ModelError> {
    let number = |v: &Value| {
        v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
            schema(
                format!("{path}.value"),
                format!("expected a number for kind {}", p.kind),
            )
        })
    };
    let no_unit = || match &p.unit {
        Some(u) => Err(schema(
            format!("{path}.unit"),
            format!("kind {} takes no unit, got `{u}`", p.kind),
        )),
        None => Ok(()),
    };
    let non_negative = |x: f64| {
        if x < 0.0 {
            Err(schema(
                format!("{path}.value"),
                "quantity must be non-negative",
            ))
        } else {
            Ok(x)
        }
    };
    Ok(match p.kind {
        ParamKind::Length => {
            let v = non_negative(number(&p.value)?)?;
            let unit = match &p.unit {
                Some(u) => u
                    .parse::<LengthUnit>()
                    .map_err(|e| schema(format!("{path}.unit"), e.to_string()))?,
                None => file_units,
            };
            ParamValue::Length(LengthQuantity::mm(LengthQuantity::new(v, unit).to_mm()))
        }
        ParamKind::Area => {
            let v = non_negative(number(&p.value)?)?;
            let unit = match &p.unit {
                Some(u) => u
                    .parse::<AreaUnit>()
                    .map_err(|e| schema(format!("{path}.unit"), e.to_string()))?,
                None => AreaUnit::SquareFoot,
            };
            ParamValue::Area(AreaQuantity::new(v, unit).convert(AreaUnit::SquareFoot))
        }
        ParamKind::Flow => {
            match p.unit.as_deref() {
                None | Some("cfm") => {}
                Some(u) => {
                    return Err(schema(
                        format!("{path}.unit"),
                        format!("flow unit must be `cfm`, got `{u}`"),
                    ))
                }
            }
            ParamValue::Flow(non_negative(number(&p.value)?)?)
        }
        ParamKind::Number => {
            no_unit()?;
            ParamValue::Number(number(&p.value)?)
        }
        ParamKind::Count => {
            no_unit()?;
            let c = p.value.as_u64().ok_or_else(|| {
                schema(
                    format!("{path}.value"),
                    "expected a non-negative integer for kind count",
                )
            })?;
            ParamValue::Count(c)
        }
        ParamKind::Text => {
            no_unit()?;
            let s = p.value.as_str().ok_or_else(|| {
                schema(format!("{path}.value"), "expected a string for kind text")
            })?;
            ParamValue::Text(s.to_string())
        }
        ParamKind::Flag => {
            no_unit()?;
            let b = p.value.as_bool().ok_or_else(|| {
                schema(format!("{path}.value"), "expected a boolean for kind flag")
            })?;
            ParamValue::Flag(b)
        }
    })
}

fn build_geometry(g: RawGeometry, to_mm: &impl Fn(f64) -> f64) -> Result<Geometry, GeometryError> {
    let finite = |vs: &[f64]| {
        if vs.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::NonFinite)
        }
    };
    let bbox = match g.bbox {
        Some(b) => {
            finite(&b)?;
            Some(Aabb::from_corners(
                [to_mm(b[0]), to_mm(b[1]), to_mm(b[2])],
                [to_mm(b[3]), to_mm(b[4]), to_mm(b[5])],
            ))
        }
        None => None,
    };
    let footprint = match g.footprint {
        Some(pts) => {
            let mut poly: Vec<Point2<f64>> = pts
                .iter()
                .map(|[x, y]| Point2::new(to_mm(*x), to_mm(*y)))
                .collect();
            geometry::validate_simple(&poly)?;
            geometry::normalize_ccw(&mut poly);
            Some(poly)
        }
        None => None,
    };
    let location = match g.location {
        Some(l) => {
            finite(&l)?;
            Some([to_mm(l[0]), to_mm(l[1]), to_mm(l[2])])
        }
        None => None,
    };
    let facing = match g.facing {
        Some([dx, dy]) => {
            finite(&[dx, dy])?;
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                return Err(GeometryError::Missing(
                    "facing vector has zero length".into(),
                ));
            }
            Some(Point2::new(dx / len, dy / len))
        }
        None => None,
    };
    Ok(Geometry {
        bbox,
        footprint,
        location,
        facing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model() {
        let m = load_model(
            br#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[]}"#,
        )
        .unwrap();
        assert_eq!(m.levels.len(), 1);
        assert!(m.elements.is_empty());
    }

    #[test]
    fn duplicate_id() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":7,"category":"Door","name":"a","level_id":1},
            {"id":7,"category":"Door","name":"b","level_id":1}]}"#;
        assert_eq!(load_model_str(src).unwrap_err(), ModelError::DuplicateId(7));
    }

    #[test]
    fn dangling_level() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Door","name":"a","level_id":9}]}"#;
        assert_eq!(
            load_model_str(src).unwrap_err(),
            ModelError::DanglingReference {
                element: 3,
                level: 9
            }
        );
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let src = r#"{"units":"mm","levels":[],"elements":[
            {"id":3,"category":"Door","name":"a","level_id":1,"colour":"red"}]}"#;
        match load_model_str(src).unwrap_err() {
            ModelError::Schema { path, message } => {
                assert_eq!(path, "elements[0].colour");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_category_rejected() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Roof","name":"a","level_id":1}]}"#;
        assert!(
            matches!(load_model_str(src).unwrap_err(), ModelError::Schema { path, .. } if path == "elements[0].category")
        );
    }

    #[test]
    fn mistyped_known_param() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Door","name":"a","level_id":1,"params":{"width":{"kind":"text","value":"wide"}}}]}"#;
        match load_model_str(src).unwrap_err() {
            ModelError::Schema { path, .. } => assert_eq!(path, "elements[0].params.width.kind"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_custom_param_kind() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Door","name":"a","level_id":1,"params":{"mark":{"kind":"text","value":"D1"}}},
            {"id":4,"category":"Door","name":"b","level_id":1,"params":{"mark":{"kind":"number","value":2}}}]}"#;
        assert!(matches!(
            load_model_str(src).unwrap_err(),
            ModelError::Schema { .. }
        ));
    }

    #[test]
    fn degenerate_footprint() {
        let src = r#"{"units":"mm","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Room","name":"a","level_id":1,"geometry":{"footprint":[[0,0],[1,1]]}}]}"#;
        assert_eq!(
            load_model_str(src).unwrap_err(),
            ModelError::Geometry {
                element: 3,
                source: GeometryError::TooFewVertices(2)
            }
        );
    }

    #[test]
    fn feet_are_canonicalized() {
        let src = r#"{"units":"ft","levels":[{"id":1,"name":"L1","elevation":0},{"id":2,"name":"L2","elevation":10}],
            "elements":[{"id":3,"category":"Room","name":"Den","level_id":1,
              "params":{"assembly_allowance":{"kind":"length","value":6,"unit":"in"}},
              "geometry":{"footprint":[[0,0],[0,12],[10,12],[10,0]],"facing":[0,2]}}]}"#;
        let m = load_model_str(src).unwrap();
        assert_eq!(m.levels[1].elevation.to_mm(), 3048.0);
        let room = &m.elements[0];
        assert_eq!(room.length("assembly_allowance").unwrap().value, 152.4);
        let fp = room.geometry.footprint.as_ref().unwrap();
        assert!(geometry::signed_area(fp) > 0.0, "winding normalized");
        assert_eq!(room.geometry.facing, Some(Point2::new(0.0, 1.0)));
    }

    #[test]
    fn deterministic() {
        let src = r#"{"units":"in","levels":[{"id":1,"name":"L1","elevation":0}],"elements":[
            {"id":3,"category":"Door","name":"a","level_id":1,"params":{"width":{"kind":"length","value":36}}}]}"#;
        assert_eq!(load_model_str(src).unwrap(), load_model_str(src).unwrap());
    }
}
