//! Dataset cartography over text embeddings.
//!
//! The pipeline embeds a corpus, projects it to 2D, partitions the layout
//! with k-means and names each region from its most specific terms. On top of
//! that sit preference-set filtering and semantic-frame analysis.

pub mod clustering;
pub mod corpus;
pub mod dpo;
pub mod embedding;
pub mod frames;
pub mod geometry;
pub mod pipeline;
pub mod point;
pub mod projection;
pub mod synthetic;
pub mod topics;

pub use point::Point;
