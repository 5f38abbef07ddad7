//! Map geometry (cluster hulls, label positions, density) and the map JSON
//! document.

mod hull;
mod kde;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hull::{convex_hull, cross, hull_contains};
pub use kde::{kde_grid, scott_bandwidth, DensityGrid, DEFAULT_RESOLUTION, PADDING};

use crate::clustering::Clustering;
use crate::point::{centroid, Point};
use crate::projection::Projection2D;
use crate::topics::Topic;

pub const MAP_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("no points")]
    EmptyInput,
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("{what}: expected {expected}, got {got}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("map JSON: {0}")]
    Json(String),
    #[error("unsupported map version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTopic {
    pub cluster: usize,
    pub name: String,
    pub terms: Vec<(String, f64)>,
    /// Arithmetic centroid of the cluster's points.
    pub label: [f64; 2],
    pub size: usize,
    pub top_docs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub cluster: usize,
    pub vertices: Vec<[f64; 2]>,
}

/// The complete topic map, in the shape of the map JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapModel {
    pub version: u32,
    pub embedder: String,
    pub seed: u64,
    pub k: usize,
    pub points: Vec<MapPoint>,
    pub topics: Vec<MapTopic>,
    pub hulls: Vec<Hull>,
    pub density: DensityGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    pub resolution: usize,
    /// KDE bandwidth; Scott's rule when `None`.
    pub bandwidth: Option<f64>,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            bandwidth: None,
        }
    }
}

/// Assembles the map from a projection, its clustering and named topics.
/// `ids` are the document ids in projection order.
pub fn build_map(
    ids: &[String],
    embedder: &str,
    projection: &Projection2D,
    clustering: &Clustering,
    topics: &[Topic],
    options: &MapOptions,
) -> Result<MapModel, GeometryError> {
    let n = projection.points.len();
    for (what, got) in [("document ids", ids.len()), ("cluster labels", clustering.labels.len())] {
        if got != n {
            return Err(GeometryError::CountMismatch { what, expected: n, got });
        }
    }
    if topics.len() != clustering.k {
        return Err(GeometryError::CountMismatch {
            what: "topics",
            expected: clustering.k,
            got: topics.len(),
        });
    }
    if n == 0 {
        return Err(GeometryError::EmptyInput);
    }

    let points = ids
        .iter()
        .zip(&projection.points)
        .zip(&clustering.labels)
        .map(|((id, p), &cluster)| MapPoint {
            id: id.clone(),
            x: p.x,
            y: p.y,
            cluster,
        })
        .collect();

    let members: Vec<Vec<Point>> = (0..clustering.k)
        .map(|c| {
            clustering
                .members(c)
                .into_iter()
                .map(|i| projection.points[i])
                .collect()
        })
        .collect();

    let hulls = members
        .par_iter()
        .enumerate()
        .map(|(cluster, pts)| {
            Ok(Hull {
                cluster,
                vertices: convex_hull(pts)?.into_iter().map(Into::into).collect(),
            })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;

    let topics = topics
        .iter()
        .map(|t| MapTopic {
            cluster: t.cluster_id,
            name: t.name.clone(),
            terms: t.specific_terms.clone(),
            label: centroid(&members[t.cluster_id]).into(),
            size: t.size,
            top_docs: t.top_documents.clone(),
        })
        .collect();

    Ok(MapModel {
        version: MAP_VERSION,
        embedder: embedder.to_string(),
        seed: projection.seed,
        k: clustering.k,
        points,
        topics,
        hulls,
        density: kde_grid(&projection.points, options.bandwidth, options.resolution)?,
    })
}

impl MapModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("map model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GeometryError> {
        let map: MapModel = serde_json::from_str(s).map_err(|e| GeometryError::Json(e.to_string()))?;
        if map.version != MAP_VERSION {
            return Err(GeometryError::UnsupportedVersion(map.version));
        }
        Ok(map)
    }

    pub fn topic(&self, cluster: usize) -> Option<&MapTopic> {
        self.topics.iter().find(|t| t.cluster == cluster)
    }

    pub fn topic_mut(&mut self, cluster: usize) -> Option<&mut MapTopic> {
        self.topics.iter_mut().find(|t| t.cluster == cluster)
    }

    pub fn cluster_points(&self, cluster: usize) -> impl Iterator<Item = &MapPoint> {
        self.points.iter().filter(move |p| p.cluster == cluster)
    }
}
