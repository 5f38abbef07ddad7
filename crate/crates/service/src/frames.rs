//! Frame analysis shared by the `frames` command and `POST /api/frames`.

use cartograph::embedding::{EmbeddedCorpus, EmbeddingProvider};
use cartograph::frames::{build_frame_plot, parse_axis_spec, FrameAxis, FrameError, FramePlot};
use serde::{Deserialize, Serialize};

/// The two pole sentences of one axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poles {
    pub pos: String,
    pub neg: String,
}

impl Poles {
    pub fn new(pos: impl Into<String>, neg: impl Into<String>) -> Self {
        Self {
            pos: pos.into(),
            neg: neg.into(),
        }
    }

    /// Parses `"positive::negative"`.
    pub fn parse(spec: &str) -> Result<Self, FrameError> {
        let (pos, neg) = parse_axis_spec(spec)?;
        Ok(Self { pos, neg })
    }

    fn embed(&self, provider: &dyn EmbeddingProvider) -> Result<FrameAxis, FrameError> {
        FrameAxis::embed(&self.pos, &self.neg, provider)
    }
}

/// Embedded documents plus the provider that embeds new axis texts.
pub struct FrameEngine {
    corpus: EmbeddedCorpus,
    provider: Box<dyn EmbeddingProvider>,
}

impl FrameEngine {
    pub fn new(corpus: EmbeddedCorpus, provider: Box<dyn EmbeddingProvider>) -> Self {
        Self { corpus, provider }
    }

    pub fn corpus(&self) -> &EmbeddedCorpus {
        &self.corpus
    }

    /// Embeds both axes and places every document on the plane.
    pub fn plot(&self, x: &Poles, y: &Poles, coefficient: f64) -> Result<FramePlot, FrameError> {
        let axis_x = x.embed(self.provider.as_ref())?;
        let axis_y = y.embed(self.provider.as_ref())?;
        build_frame_plot(&self.corpus, &axis_x, &axis_y, coefficient)
    }
}
