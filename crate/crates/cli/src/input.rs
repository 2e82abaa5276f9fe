use serde::Deserialize;
use serde_json::Value;

use covercheck::spaces::{Point, SpaceDescription, SpaceKind};
use covercheck::{Error, Result};

/// A ball cover read from JSON.
///
/// ```json
/// {"space": {"kind": "interval"}, "centers": [0.2, 0.6], "radius": 0.4}
/// ```
///
/// Centres may be bare coordinates (a number for the line and circle, an
/// array for cubes, `{"edge": e, "t": t}` for graphs) or tagged points.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub space: SpaceDescription,
    pub centers: Vec<Value>,
    pub radius: f64,
}

impl Instance {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("instance: {e}")))
    }
}

pub fn parse_point(kind: SpaceKind, v: &Value) -> Result<Point> {
    let bad = || Error::Config(format!("cannot read {v} as a {} point", kind.name()));
    if v.is_object() {
        if let Ok(p) = serde_json::from_value::<Point>(v.clone()) {
            return Ok(p);
        }
    }
    match kind {
        SpaceKind::Interval => v.as_f64().map(Point::Interval).ok_or_else(bad),
        SpaceKind::Circle => v.as_f64().map(Point::Circle).ok_or_else(bad),
        SpaceKind::TwoInterval => v.as_f64().map(Point::TwoInterval).ok_or_else(bad),
        SpaceKind::CubeLinf | SpaceKind::CubeL2 => serde_json::from_value::<Vec<f64>>(v.clone())
            .map(Point::Cube)
            .map_err(|_| bad()),
        SpaceKind::Graph => {
            let edge = v.get("edge").and_then(Value::as_u64).ok_or_else(bad)?;
            let t = v.get("t").and_then(Value::as_f64).ok_or_else(bad)?;
            Ok(Point::Graph { edge: edge as usize, t })
        }
    }
}
