use std::collections::BTreeSet;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::point::{Bounds, Point2};
use super::polygon::{Containment, Polygon, PolygonError};

#[derive(Debug, Error, PartialEq)]
pub enum FloorPlanError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: missing field `{field}`")]
    MissingField { location: String, field: &'static str },
    #[error("{location}: field `{field}` {message}")]
    InvalidField {
        location: String,
        field: &'static str,
        message: String,
    },
    #[error("duplicate region id {0}")]
    DuplicateId(u32),
    #[error("region {id}: degenerate polygon: {source}")]
    DegeneratePolygon {
        id: u32,
        #[source]
        source: PolygonError,
    },
    #[error("region {0}: region type is empty")]
    EmptyType(u32),
    #[error("floor plan has no regions")]
    NoRegions,
    #[error("floor plan bounding box is degenerate")]
    DegenerateBounds,
}

/// One semantically typed, uniquely identified area of a floor.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub id: u32,
    pub region_type: String,
    pub polygon: Polygon,
}

impl Region {
    pub fn new(id: u32, region_type: impl Into<String>, polygon: Polygon) -> Self {
        Self {
            id,
            region_type: region_type.into(),
            polygon,
        }
    }

    /// Canonical interior anchor point used for labels and goal points.
    pub fn anchor(&self) -> Point2 {
        self.polygon.pole_of_inaccessibility(1e-3)
    }
}

/// All regions of a single building floor.
#[derive(Clone, Debug, PartialEq)]
pub struct FloorPlan {
    scene_id: String,
    floor_id: String,
    regions: Vec<Region>,
    type_catalog: Vec<String>,
}

impl FloorPlan {
    pub fn new(
        scene_id: impl Into<String>,
        floor_id: impl Into<String>,
        regions: Vec<Region>,
    ) -> Result<Self, FloorPlanError> {
        if regions.is_empty() {
            return Err(FloorPlanError::NoRegions);
        }
        let mut ids = BTreeSet::new();
        let mut catalog = BTreeSet::new();
        let mut bounds = Bounds::empty();
        for r in &regions {
            if !ids.insert(r.id) {
                return Err(FloorPlanError::DuplicateId(r.id));
            }
            if r.region_type.trim().is_empty() {
                return Err(FloorPlanError::EmptyType(r.id));
            }
            catalog.insert(r.region_type.clone());
            for &v in r.polygon.vertices() {
                bounds.include(v);
            }
        }
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(FloorPlanError::DegenerateBounds);
        }
        Ok(Self {
            scene_id: scene_id.into(),
            floor_id: floor_id.into(),
            regions,
            type_catalog: catalog.into_iter().collect(),
        })
    }

    /// Parses a floor-plan document. Polygons are normalized to CCW order and
    /// the type catalog is sorted.
    pub fn parse(text: &str) -> Result<Self, FloorPlanError> {
        let value: Value = serde_json::from_str(text).map_err(|e| FloorPlanError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, FloorPlanError> {
        let root = value.as_object().ok_or_else(|| FloorPlanError::InvalidField {
            location: "document".into(),
            field: "<root>",
            message: "must be a JSON object".into(),
        })?;
        let scene_id = string_field(root, "document", "scene_id")?;
        let floor_id = string_field(root, "document", "floor_id")?;
        let raw_regions = root
            .get("regions")
            .ok_or_else(|| FloorPlanError::MissingField {
                location: "document".into(),
                field: "regions",
            })?
            .as_array()
            .ok_or_else(|| FloorPlanError::InvalidField {
                location: "document".into(),
                field: "regions",
                message: "must be an array".into(),
            })?;

        let mut regions = Vec::with_capacity(raw_regions.len());
        for (index, raw) in raw_regions.iter().enumerate() {
            regions.push(parse_region(index, raw)?);
        }
        Self::new(scene_id, floor_id, regions)
    }

    /// Canonical document text: compact JSON with fixed key order.
    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }

    pub fn to_value(&self) -> Value {
        let regions: Vec<Value> = self
            .regions
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("id".into(), json!(r.id));
                m.insert("type".into(), json!(r.region_type));
                m.insert(
                    "polygon".into(),
                    Value::Array(
                        r.polygon
                            .vertices()
                            .iter()
                            .map(|v| json!([v.x, v.y]))
                            .collect(),
                    ),
                );
                Value::Object(m)
            })
            .collect();
        let mut root = Map::new();
        root.insert("scene_id".into(), json!(self.scene_id));
        root.insert("floor_id".into(), json!(self.floor_id));
        root.insert("regions".into(), Value::Array(regions));
        Value::Object(root)
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn floor_id(&self) -> &str {
        &self.floor_id
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn type_catalog(&self) -> &[String] {
        &self.type_catalog
    }

    pub fn type_index(&self, region_type: &str) -> Option<usize> {
        self.type_catalog
            .binary_search_by(|t| t.as_str().cmp(region_type))
            .ok()
    }

    pub fn region(&self, id: u32) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds::empty();
        for r in &self.regions {
            for &v in r.polygon.vertices() {
                b.include(v);
            }
        }
        b
    }

    /// Region containing `p`, counting boundary points as inside. Overlaps and
    /// shared edges resolve to the smallest region id.
    pub fn locate(&self, p: Point2) -> Option<&Region> {
        self.regions
            .iter()
            .filter(|r| {
                let b = r.polygon.bounds();
                p.x >= b.min.x - 1e-9
                    && p.x <= b.max.x + 1e-9
                    && p.y >= b.min.y - 1e-9
                    && p.y <= b.max.y + 1e-9
            })
            .filter(|r| r.polygon.contains(p) != Containment::Outside)
            .min_by_key(|r| r.id)
    }

    /// Same plan with regions replaced, keeping scene and floor ids.
    pub fn with_regions(&self, regions: Vec<Region>) -> Result<Self, FloorPlanError> {
        Self::new(self.scene_id.clone(), self.floor_id.clone(), regions)
    }
}

fn string_field(
    obj: &Map<String, Value>,
    location: &str,
    field: &'static str,
) -> Result<String, FloorPlanError> {
    match obj.get(field) {
        None => Err(FloorPlanError::MissingField {
            location: location.into(),
            field,
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(FloorPlanError::InvalidField {
            location: location.into(),
            field,
            message: "must be a string".into(),
        }),
    }
}

fn parse_region(index: usize, raw: &Value) -> Result<Region, FloorPlanError> {
    let position = format!("regions[{index}]");
    let obj = raw.as_object().ok_or_else(|| FloorPlanError::InvalidField {
        location: position.clone(),
        field: "<region>",
        message: "must be a JSON object".into(),
    })?;
    let id = match obj.get("id") {
        None => {
            return Err(FloorPlanError::MissingField {
                location: position,
                field: "id",
            })
        }
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| FloorPlanError::InvalidField {
                location: position.clone(),
                field: "id",
                message: "must be a non-negative 32-bit integer".into(),
            })?,
    };
    let location = format!("region {id}");
    let region_type = string_field(obj, &location, "type")?;
    let raw_poly = obj
        .get("polygon")
        .ok_or_else(|| FloorPlanError::MissingField {
            location: location.clone(),
            field: "polygon",
        })?
        .as_array()
        .ok_or_else(|| FloorPlanError::InvalidField {
            location: location.clone(),
            field: "polygon",
            message: "must be an array of [x, y] pairs".into(),
        })?;
    let mut vertices = Vec::with_capacity(raw_poly.len());
    for (vi, v) in raw_poly.iter().enumerate() {
        let pair = v
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some(Point2::new(a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| FloorPlanError::InvalidField {
                location: location.clone(),
                field: "polygon",
                message: format!("vertex {vi} must be a numeric [x, y] pair"),
            })?;
        vertices.push(pair);
    }
    let polygon = Polygon::new(vertices)
        .map_err(|source| FloorPlanError::DegeneratePolygon { id, source })?;
    Ok(Region::new(id, region_type, polygon))
}
