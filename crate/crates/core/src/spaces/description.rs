//! JSON descriptions of spaces.
//!
//! ```json
//! {"kind": "interval", "density": {"breaks": [0, 0.5, 1], "values": [1.5, 0.5]}}
//! {"kind": "circle"}
//! {"kind": "graph", "vertices": [[0,0],[1,0],[0.5,0.8]], "edges": [[0,1],[0,2],[1,2]]}
//! {"kind": "cube_linf", "dim": 2, "density": {"per_axis": 2, "values": [0.5,1.5,1,1]}}
//! {"kind": "cube_l2", "dim": 2, "grid_resolution": 128}
//! {"kind": "two_interval", "q": 0.7071067811865476}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CubeMetric, GraphGeometry, GridDensity, Pieces, Space};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDescription {
    Interval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<Pieces>,
    },
    Circle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<Pieces>,
    },
    Graph {
        vertices: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        /// One piecewise function per edge, on `t in [0, 1]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<Vec<Pieces>>,
    },
    CubeLinf {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<GridDensity>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_resolution: Option<usize>,
    },
    CubeL2 {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<GridDensity>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_resolution: Option<usize>,
    },
    TwoInterval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
    },
}

impl SpaceDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("space description: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<Space> {
        let space = match self {
            SpaceDescription::Interval { density } => Space::interval(density.clone()),
            SpaceDescription::Circle { density } => Space::circle(density.clone()),
            SpaceDescription::Graph {
                vertices,
                edges,
                density,
            } => {
                let g = GraphGeometry::new(
                    vertices.clone(),
                    edges.iter().map(|e| (e[0], e[1])).collect(),
                )?;
                Space::graph(g, density.clone())
            }
            SpaceDescription::CubeLinf {
                dim,
                density,
                grid_resolution,
            } => Space::cube(*dim, CubeMetric::Linf, density.clone())
                .map(|s| with_resolution(s, *grid_resolution)),
            SpaceDescription::CubeL2 {
                dim,
                density,
                grid_resolution,
            } => Space::cube(*dim, CubeMetric::L2, density.clone())
                .map(|s| with_resolution(s, *grid_resolution)),
            SpaceDescription::TwoInterval { q } => {
                Space::two_interval(q.unwrap_or(std::f64::consts::FRAC_1_SQRT_2))
            }
        };
        space.map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        })
    }
}

fn with_resolution(space: Space, res: Option<usize>) -> Space {
    match res {
        Some(r) => space.with_grid_resolution(r),
        None => space,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceKind;

    #[test]
    fn parses_every_kind() {
        let docs = [
            (r#"{"kind":"interval","density":{"breaks":[0,0.5,1],"values":[1.5,0.5]}}"#, SpaceKind::Interval),
            (r#"{"kind":"circle"}"#, SpaceKind::Circle),
            (r#"{"kind":"graph","vertices":[[0,0],[1,0],[0.5,0.8]],"edges":[[0,1],[0,2],[1,2]]}"#, SpaceKind::Graph),
            (r#"{"kind":"cube_linf","dim":2,"density":{"per_axis":2,"values":[0.5,1.5,1,1]}}"#, SpaceKind::CubeLinf),
            (r#"{"kind":"cube_l2","dim":3,"grid_resolution":16}"#, SpaceKind::CubeL2),
            (r#"{"kind":"two_interval"}"#, SpaceKind::TwoInterval),
        ];
        for (doc, kind) in docs {
            let s = SpaceDescription::from_json(doc).unwrap().build().unwrap();
            assert_eq!(s.kind(), kind, "{doc}");
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(SpaceDescription::from_json("{not json").is_err());
        assert!(SpaceDescription::from_json(r#"{"kind":"sphere"}"#).is_err());
        assert!(SpaceDescription::from_json(r#"{"kind":"circle","radius":3}"#).is_err());
        let unnormalized = SpaceDescription::from_json(
            r#"{"kind":"interval","density":{"breaks":[0,1],"values":[2]}}"#,
        )
        .unwrap();
        assert!(matches!(unnormalized.build(), Err(Error::Config(_))));
    }
}
