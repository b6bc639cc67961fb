use std::collections::BTreeMap;

use super::{BuildingModel, Category, Element, ElementId, Geometry, Level, LevelId, ParamValue};
use crate::geometry::{self, Aabb, Point2};
use crate::units::{LengthQuantity, LengthUnit};
use crate::{Area, Length};

/// Programmatic model construction in millimeters. Footprints are
/// normalized to counter-clockwise winding like the file loader does, but
/// no other validation happens here.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    name: String,
    levels: Vec<Level>,
    elements: Vec<Element>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            levels: Vec::new(),
            elements: Vec::new(),
        }
    }

    pub fn level(mut self, id: u64, name: &str, elevation_mm: f64) -> Self {
        self.levels.push(Level {
            id: LevelId(id),
            name: name.to_string(),
            elevation: LengthQuantity::mm(elevation_mm),
        });
        self
    }

    pub fn element(mut self, e: ElementBuilder) -> Self {
        self.elements.push(e.build());
        self
    }

    pub fn build(self) -> BuildingModel {
        BuildingModel::from_parts(
            self.name,
            LengthUnit::Millimeter,
            self.levels,
            self.elements,
        )
    }
}

#[derive(Debug, Clone)]
pub struct ElementBuilder {
    element: Element,
}

impl ElementBuilder {
    pub fn new(id: u64, category: Category, name: &str, level: u64) -> Self {
        Self {
            element: Element {
                id: ElementId(id),
                category,
                name: name.to_string(),
                level_id: LevelId(level),
                params: BTreeMap::new(),
                geometry: Geometry::default(),
            },
        }
    }

    pub fn param(mut self, name: &str, value: ParamValue) -> Self {
        self.element.params.insert(name.to_string(), value);
        self
    }

    pub fn length(self, name: &str, value: Length) -> Self {
        self.param(name, ParamValue::Length(LengthQuantity::mm(value.to_mm())))
    }

    pub fn inches(self, name: &str, value: f64) -> Self {
        self.length(name, LengthQuantity::inches(value))
    }

    pub fn area(self, name: &str, value: Area) -> Self {
        self.param(name, ParamValue::Area(value))
    }

    pub fn text(self, name: &str, value: &str) -> Self {
        self.param(name, ParamValue::Text(value.to_string()))
    }

    pub fn flag(self, name: &str, value: bool) -> Self {
        self.param(name, ParamValue::Flag(value))
    }

    pub fn flow(self, name: &str, cfm: f64) -> Self {
        self.param(name, ParamValue::Flow(cfm))
    }

    pub fn count(self, name: &str, value: u64) -> Self {
        self.param(name, ParamValue::Count(value))
    }

    pub fn footprint(mut self, points: &[(f64, f64)]) -> Self {
        let mut poly: Vec<Point2<f64>> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        geometry::normalize_ccw(&mut poly);
        self.element.geometry.footprint = Some(poly);
        self
    }

    /// Axis-aligned rectangular footprint.
    pub fn rect(self, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        self.footprint(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    pub fn bbox(mut self, min: [f64; 3], max: [f64; 3]) -> Self {
        self.element.geometry.bbox = Some(Aabb::from_corners(min, max));
        self
    }

    pub fn location(mut self, x: f64, y: f64, z: f64) -> Self {
        self.element.geometry.location = Some([x, y, z]);
        self
    }

    pub fn facing(mut self, dx: f64, dy: f64) -> Self {
        let n = (dx * dx + dy * dy).sqrt();
        self.element.geometry.facing = Some(Point2::new(dx / n, dy / n));
        self
    }

    pub fn build(self) -> Element {
        self.element
    }
}
