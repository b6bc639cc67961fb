//! Building model: levels and categorized elements with typed parameters
//! and plan geometry. All lengths are millimeters after loading.

mod builder;
mod load;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Aabb, GeometryError, Point2};
use crate::units::LengthUnit;
use crate::{Area, Length};

pub use builder::{ElementBuilder, ModelBuilder};
pub use load::{load_model, load_model_str, ModelError};

/// Boundary tolerance for containment tests, in millimeters.
pub const CONTAINMENT_EPS_MM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Door,
    Stair,
    Railing,
    Room,
    Wall,
    Window,
    Floor,
    PlumbingFixture,
    Footing,
    AirTerminal,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Door,
        Category::Stair,
        Category::Railing,
        Category::Room,
        Category::Wall,
        Category::Window,
        Category::Floor,
        Category::PlumbingFixture,
        Category::Footing,
        Category::AirTerminal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Door => "Door",
            Category::Stair => "Stair",
            Category::Railing => "Railing",
            Category::Room => "Room",
            Category::Wall => "Wall",
            Category::Window => "Window",
            Category::Floor => "Floor",
            Category::PlumbingFixture => "PlumbingFixture",
            Category::Footing => "Footing",
            Category::AirTerminal => "AirTerminal",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Length,
    Area,
    Number,
    Flow,
    Count,
    Text,
    Flag,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Length => "length",
            ParamKind::Area => "area",
            ParamKind::Number => "number",
            ParamKind::Flow => "flow",
            ParamKind::Count => "count",
            ParamKind::Text => "text",
            ParamKind::Flag => "flag",
        };
        f.write_str(s)
    }
}

/// Parameter names the rules and the check language understand, with the
/// one value kind each must carry.
pub const KNOWN_PARAMS: &[(&str, ParamKind)] = &[
    ("width", ParamKind::Length),
    ("height", ParamKind::Length),
    ("clear_width", ParamKind::Length),
    ("exit", ParamKind::Flag),
    ("walking_surface_height", ParamKind::Length),
    ("assembly_allowance", ParamKind::Length),
    ("exterior", ParamKind::Flag),
    ("length", ParamKind::Length),
    ("occupants", ParamKind::Count),
    ("flow", ParamKind::Flow),
    ("fixture_type", ParamKind::Text),
    ("material", ParamKind::Text),
    ("thickness", ParamKind::Length),
    ("span_rating", ParamKind::Text),
];

pub fn known_param_kind(name: &str) -> Option<ParamKind> {
    KNOWN_PARAMS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum ParamValue {
    Length(Length),
    Area(Area),
    Number(f64),
    /// Cubic feet per minute.
    Flow(f64),
    Count(u64),
    Text(String),
    Flag(bool),
}

impl ParamValue {
    pub fn kind(&self) -> ParamKind {
        match self {
            ParamValue::Length(_) => ParamKind::Length,
            ParamValue::Area(_) => ParamKind::Area,
            ParamValue::Number(_) => ParamKind::Number,
            ParamValue::Flow(_) => ParamKind::Flow,
            ParamValue::Count(_) => ParamKind::Count,
            ParamValue::Text(_) => ParamKind::Text,
            ParamValue::Flag(_) => ParamKind::Flag,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Geometry {
    pub bbox: Option<Aabb<f64>>,
    /// Counter-clockwise plan polygon.
    pub footprint: Option<Vec<Point2<f64>>>,
    pub location: Option<[f64; 3]>,
    /// Unit plan vector.
    pub facing: Option<Point2<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Element {
    pub id: ElementId,
    pub category: Category,
    pub name: String,
    pub level_id: LevelId,
    pub params: BTreeMap<String, ParamValue>,
    pub geometry: Geometry,
}

impl Element {
    pub fn param(&self, name: &str) -> Option<&ParamValue> {
        self.params.get(name)
    }

    pub fn length(&self, name: &str) -> Option<Length> {
        match self.params.get(name) {
            Some(ParamValue::Length(l)) => Some(*l),
            _ => None,
        }
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.params.get(name) {
            Some(ParamValue::Text(t)) => Some(t),
            _ => None,
        }
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        match self.params.get(name) {
            Some(ParamValue::Flag(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn flow(&self, name: &str) -> Option<f64> {
        match self.params.get(name) {
            Some(ParamValue::Flow(f)) => Some(*f),
            _ => None,
        }
    }

    pub fn count(&self, name: &str) -> Option<u64> {
        match self.params.get(name) {
            Some(ParamValue::Count(c)) => Some(*c),
            _ => None,
        }
    }

    /// Representative plan point: location, else bbox center, else
    /// footprint centroid.
    pub fn plan_point(&self) -> Option<Point2<f64>> {
        let g = &self.geometry;
        if let Some([x, y, _]) = g.location {
            return Some(Point2::new(x, y));
        }
        if let Some(b) = &g.bbox {
            return Some(b.plan_center());
        }
        g.footprint.as_deref().map(geometry::centroid)
    }

    /// Plan outline: footprint, else bbox rectangle.
    pub fn plan_outline(&self) -> Option<Vec<Point2<f64>>> {
        if let Some(fp) = &self.geometry.footprint {
            return Some(fp.clone());
        }
        self.geometry.bbox.as_ref().map(Aabb::plan_rect)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub id: LevelId,
    pub name: String,
    pub elevation: Length,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildingModel {
    pub name: String,
    pub source_units: LengthUnit,
    pub levels: Vec<Level>,
    pub elements: Vec<Element>,
    #[serde(skip)]
    index: HashMap<ElementId, usize>,
}

impl PartialEq for BuildingModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.source_units == other.source_units
            && self.levels == other.levels
            && self.elements == other.elements
    }
}

impl BuildingModel {
    /// Build a model from parts without going through the file format.
    /// Callers are responsible for referential integrity.
    pub fn from_parts(
        name: impl Into<String>,
        source_units: LengthUnit,
        levels: Vec<Level>,
        elements: Vec<Element>,
    ) -> Self {
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id, i))
            .collect();
        Self {
            name: name.into(),
            source_units,
            levels,
            elements,
            index,
        }
    }

    pub fn element(&self, id: ElementId) -> Option<&Element> {
        self.index.get(&id).map(|&i| &self.elements[i])
    }

    pub fn level(&self, id: LevelId) -> Option<&Level> {
        self.levels.iter().find(|l| l.id == id)
    }

    /// Lowest level strictly above the given one, by elevation.
    pub fn level_above(&self, id: LevelId) -> Option<&Level> {
        let base = self.level(id)?.elevation.to_mm();
        self.levels
            .iter()
            .filter(|l| l.elevation.to_mm() > base)
            .min_by(|a, b| a.elevation.to_mm().total_cmp(&b.elevation.to_mm()))
    }

    /// Elements of one category, in model order.
    pub fn collect(&self, category: Category) -> Vec<&Element> {
        self.elements
            .iter()
            .filter(|e| e.category == category)
            .collect()
    }

    /// First room in model order on the element's level whose footprint
    /// contains the element's plan point.
    pub fn room_of(&self, element: &Element) -> Option<&Element> {
        let p = element.plan_point()?;
        self.elements.iter().find(|r| {
            r.category == Category::Room
                && r.level_id == element.level_id
                && r.geometry
                    .footprint
                    .as_deref()
                    .is_some_and(|fp| geometry::point_in_polygon(p, fp, CONTAINMENT_EPS_MM))
        })
    }
}

/// Collect elements of a category in model order.
pub fn collect(model: &BuildingModel, category: Category) -> Vec<&Element> {
    model.collect(category)
}

/// Whether a plan point lies inside a room's footprint; boundary points
/// count as inside.
pub fn point_in_room(p: Point2<f64>, room: &Element) -> Result<bool, GeometryError> {
    let fp = room
        .geometry
        .footprint
        .as_deref()
        .ok_or_else(|| GeometryError::Missing(format!("room {} has no footprint", room.id)))?;
    Ok(geometry::point_in_polygon(p, fp, CONTAINMENT_EPS_MM))
}
