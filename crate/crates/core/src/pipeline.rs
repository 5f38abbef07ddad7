//! The shared map pipeline: projection, k-means on the layout, topics.

use crate::clustering::{kmeans_with, Clustering, ClusteringError, KMeansOptions, DEFAULT_MAP_K};
use crate::corpus::TermExtractor;
use crate::embedding::EmbeddedCorpus;
use crate::geometry::{build_map, GeometryError, MapModel, MapOptions};
use crate::projection::{project_2d, Projection2D, ProjectionError, TsneParams};
use crate::topics::{build_topics, Topic, TopicOptions, TopicsError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("projection: {0}")]
    Projection(#[from] ProjectionError),
    #[error("clustering: {0}")]
    Clustering(#[from] ClusteringError),
    #[error("topics: {0}")]
    Topics(#[from] TopicsError),
    #[error("map: {0}")]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub k: usize,
    /// Seeds the projection, and k-means unless `cluster_seed` is set.
    pub seed: u64,
    pub cluster_seed: Option<u64>,
    pub tsne: TsneParams,
    pub kmeans: KMeansOptions,
    pub topics: TopicOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_MAP_K,
            seed: 42,
            cluster_seed: None,
            tsne: TsneParams::default(),
            kmeans: KMeansOptions::default(),
            topics: TopicOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub projection: Projection2D,
    pub clustering: Clustering,
    pub topics: Vec<Topic>,
}

pub fn run_pipeline(
    ec: &EmbeddedCorpus,
    extractor: &dyn TermExtractor,
    options: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    let projection = project_2d(ec, options.seed, &options.tsne)?;
    let clustering = kmeans_with(
        &projection.points,
        options.k,
        options.cluster_seed.unwrap_or(options.seed),
        &options.kmeans,
    )?;
    let topics = build_topics(ec.corpus(), &clustering, extractor, &options.topics)?;
    log::info!(
        "pipeline on {} documents: k={}, inertia {:.4}",
        ec.len(),
        options.k,
        clustering.inertia
    );
    Ok(PipelineOutput {
        projection,
        clustering,
        topics,
    })
}

impl PipelineOutput {
    pub fn to_map(&self, ec: &EmbeddedCorpus, options: &MapOptions) -> Result<MapModel, PipelineError> {
        let ids: Vec<String> = ec.corpus().ids().map(str::to_string).collect();
        Ok(build_map(
            &ids,
            ec.embedder_name(),
            &self.projection,
            &self.clustering,
            &self.topics,
            options,
        )?)
    }
}

/// Runs the pipeline and assembles the map in one step.
pub fn build_topic_map(
    ec: &EmbeddedCorpus,
    extractor: &dyn TermExtractor,
    options: &PipelineOptions,
    map_options: &MapOptions,
) -> Result<MapModel, PipelineError> {
    run_pipeline(ec, extractor, options)?.to_map(ec, map_options)
}
