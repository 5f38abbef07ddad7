//! Semantic frames: project documents onto directions defined by two
//! contrasting sentences and measure how the corpus splits along them.

mod agreement;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use agreement::{
    agreement_curve, length_bucket_agreement, load_labels, plot_agreement, Agreement, AxisLabels, BucketAgreement,
    CurvePoint, FrameCurves, LabelSet, DEFAULT_CURVE_COEFFICIENTS,
};
pub use report::{build_report, DocumentFrame, FrameReport, Marginals, PoleTexts};

use crate::clustering::{kmeans, Clustering, ClusteringError};
use crate::embedding::{EmbeddedCorpus, EmbeddingError, EmbeddingProvider};
use crate::point::Point;

pub const DEFAULT_COEFFICIENT: f64 = 0.25;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("frame poles {positive:?} and {negative:?} embed identically")]
    DegenerateAxis { positive: String, negative: String },
    #[error("vector dimension {got} does not match axis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("document {id} has a zero embedding")]
    ZeroVector { id: String },
    #[error("axis built with embedder {axis:?} but documents use {documents:?}")]
    EmbedderMismatch { axis: String, documents: String },
    #[error("coefficient {0} is outside [0, 1]")]
    InvalidCoefficient(f64),
    #[error("no retained documents")]
    NothingRetained,
    #[error("document {0} was removed by the radius filter")]
    NotRetained(String),
    #[error("{retained} retained documents cannot form {k} clusters")]
    TooFewRetained { retained: usize, k: usize },
    #[error("axis spec {0:?} must look like \"positive::negative\"")]
    AxisSpec(String),
    #[error("label file {path}: {reason}")]
    Labels { path: String, reason: String },
    #[error("no label for document {0}")]
    MissingLabel(String),
    #[error("label {label:?} matches neither {positive:?} nor {negative:?}")]
    UnknownLabel {
        label: String,
        positive: String,
        negative: String,
    },
    #[error("token buckets {0:?} and {1:?} overlap")]
    OverlappingBuckets((usize, usize), (usize, usize)),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

/// A semantic direction: `e_cont = e1 - e2` for the embeddings of the
/// positive and negative pole texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAxis {
    pub positive_text: String,
    pub negative_text: String,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e_cont: Vec<f64>,
    /// Embedder that produced `e1` and `e2`.
    pub embedder: String,
}

impl FrameAxis {
    pub fn new(
        positive_text: impl Into<String>,
        negative_text: impl Into<String>,
        e1: Vec<f64>,
        e2: Vec<f64>,
        embedder: impl Into<String>,
    ) -> Result<Self, FrameError> {
        let (positive_text, negative_text) = (positive_text.into(), negative_text.into());
        if e1.len() != e2.len() {
            return Err(FrameError::DimensionMismatch {
                expected: e1.len(),
                got: e2.len(),
            });
        }
        let e_cont: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a - b).collect();
        if e_cont.iter().all(|v| *v == 0.0) {
            return Err(FrameError::DegenerateAxis {
                positive: positive_text,
                negative: negative_text,
            });
        }
        Ok(Self {
            positive_text,
            negative_text,
            e1,
            e2,
            e_cont,
            embedder: embedder.into(),
        })
    }

    /// Embeds both pole texts with one provider call.
    pub fn embed<P: EmbeddingProvider + ?Sized>(
        positive_text: &str,
        negative_text: &str,
        provider: &P,
    ) -> Result<Self, FrameError> {
        let mut vectors = provider.fetch_embeddings(&[positive_text, negative_text])?;
        if vectors.len() != 2 {
            return Err(EmbeddingError::CountMismatch {
                expected: 2,
                got: vectors.len(),
            }
            .into());
        }
        let e2 = vectors.pop().expect("two vectors");
        let e1 = vectors.pop().expect("two vectors");
        Self::new(positive_text, negative_text, e1, e2, provider.name())
    }

    /// The same axis with its poles exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(
            self.negative_text.clone(),
            self.positive_text.clone(),
            self.e2.clone(),
            self.e1.clone(),
            self.embedder.clone(),
        )
        .expect("a valid axis stays valid when swapped")
    }

    pub fn dimension(&self) -> usize {
        self.e_cont.len()
    }

    pub fn label(&self, sign: Sign) -> &str {
        match sign {
            Sign::Positive => &self.positive_text,
            Sign::Negative => &self.negative_text,
        }
    }
}

/// Splits `"positive::negative"` into its two pole texts.
pub fn parse_axis_spec(spec: &str) -> Result<(String, String), FrameError> {
    match spec.split_once("::") {
        Some((p, n)) if !p.trim().is_empty() && !n.trim().is_empty() && !n.contains("::") => {
            Ok((p.trim().to_string(), n.trim().to_string()))
        }
        _ => Err(FrameError::AxisSpec(spec.to_string())),
    }
}

/// Cosine similarity between a document embedding and the axis direction.
pub fn frame_coordinate(e_doc: &[f64], axis: &FrameAxis) -> Result<f64, FrameError> {
    if e_doc.len() != axis.dimension() {
        return Err(FrameError::DimensionMismatch {
            expected: axis.dimension(),
            got: e_doc.len(),
        });
    }
    let norm_doc = e_doc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_doc == 0.0 {
        return Err(FrameError::ZeroVector { id: String::new() });
    }
    let norm_axis = axis.e_cont.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot: f64 = e_doc.iter().zip(&axis.e_cont).map(|(a, b)| a * b).sum();
    Ok((dot / (norm_doc * norm_axis)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

/// Sign class of a centred coordinate. Zero counts as positive.
pub fn classify_by_sign(coordinate: f64) -> Sign {
    if coordinate >= 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// Radius of the exclusion circle: `coefficient` times the largest absolute
/// coordinate on either axis.
pub fn radius_for(coords: &[Point], coefficient: f64) -> f64 {
    let max_abs = coords
        .iter()
        .fold(0.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    coefficient * max_abs
}

pub fn retained_mask(coords: &[Point], coefficient: f64) -> Vec<bool> {
    let radius = radius_for(coords, coefficient);
    coords.iter().map(|p| p.norm() >= radius).collect()
}

fn check_coefficient(coefficient: f64) -> Result<(), FrameError> {
    if (0.0..=1.0).contains(&coefficient) {
        Ok(())
    } else {
        Err(FrameError::InvalidCoefficient(coefficient))
    }
}

/// Documents placed in the plane spanned by two frame axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlot {
    pub axis_x: FrameAxis,
    pub axis_y: FrameAxis,
    pub ids: Vec<String>,
    pub token_counts: Vec<usize>,
    /// Cosine coordinates before centring.
    pub raw: Vec<Point>,
    /// Mean of `raw`, subtracted to obtain `coords`.
    pub center: Point,
    pub coords: Vec<Point>,
    pub retained: Vec<bool>,
    pub coefficient: f64,
    pub radius: f64,
}

pub fn build_frame_plot(
    ec: &EmbeddedCorpus,
    axis_x: &FrameAxis,
    axis_y: &FrameAxis,
    coefficient: f64,
) -> Result<FramePlot, FrameError> {
    check_coefficient(coefficient)?;
    for axis in [axis_x, axis_y] {
        if axis.embedder != ec.embedder_name() {
            return Err(FrameError::EmbedderMismatch {
                axis: axis.embedder.clone(),
                documents: ec.embedder_name().to_string(),
            });
        }
    }
    let docs = ec.corpus().documents();
    let raw = ec
        .vectors()
        .par_iter()
        .zip(docs)
        .map(|(v, doc)| {
            let coordinate = |axis| {
                frame_coordinate(v, axis).map_err(|e| match e {
                    FrameError::ZeroVector { .. } => FrameError::ZeroVector { id: doc.id.clone() },
                    other => other,
                })
            };
            Ok(Point::new(coordinate(axis_x)?, coordinate(axis_y)?))
        })
        .collect::<Result<Vec<Point>, FrameError>>()?;

    let n = raw.len().max(1) as f64;
    let center = Point::new(
        raw.iter().map(|p| p.x).sum::<f64>() / n,
        raw.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let coords: Vec<Point> = raw
        .iter()
        .map(|p| Point::new(p.x - center.x, p.y - center.y))
        .collect();

    let mut plot = FramePlot {
        axis_x: axis_x.clone(),
        axis_y: axis_y.clone(),
        ids: docs.iter().map(|d| d.id.clone()).collect(),
        token_counts: docs.iter().map(|d| d.token_count).collect(),
        raw,
        center,
        coords,
        retained: Vec::new(),
        coefficient,
        radius: 0.0,
    };
    plot.apply_coefficient(coefficient)?;
    Ok(plot)
}

impl FramePlot {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Re-runs the radius filter with a new coefficient.
    pub fn apply_coefficient(&mut self, coefficient: f64) -> Result<(), FrameError> {
        check_coefficient(coefficient)?;
        self.coefficient = coefficient;
        self.radius = radius_for(&self.coords, coefficient);
        self.retained = retained_mask(&self.coords, coefficient);
        Ok(())
    }

    pub fn with_coefficient(&self, coefficient: f64) -> Result<Self, FrameError> {
        let mut plot = self.clone();
        plot.apply_coefficient(coefficient)?;
        Ok(plot)
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|r| **r).count()
    }

    pub fn retained_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.retained[i]).collect()
    }

    /// Sign classes of a retained document on both axes.
    pub fn classify(&self, doc: usize) -> Result<(Sign, Sign), FrameError> {
        if !self.retained[doc] {
            return Err(FrameError::NotRetained(self.ids[doc].clone()));
        }
        let p = self.coords[doc];
        Ok((classify_by_sign(p.x), classify_by_sign(p.y)))
    }
}

/// Fractions of retained documents per sign quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantShares {
    /// Positive on x and y.
    pub pos_pos: f64,
    /// Positive on x, negative on y.
    pub pos_neg: f64,
    pub neg_pos: f64,
    pub neg_neg: f64,
}

impl QuadrantShares {
    pub fn total(&self) -> f64 {
        self.pos_pos + self.pos_neg + self.neg_pos + self.neg_neg
    }
}

pub fn quadrant_shares(plot: &FramePlot) -> Result<QuadrantShares, FrameError> {
    let mut counts = [0usize; 4];
    for i in plot.retained_indices() {
        let (sx, sy) = plot.classify(i)?;
        let slot = match (sx, sy) {
            (Sign::Positive, Sign::Positive) => 0,
            (Sign::Positive, Sign::Negative) => 1,
            (Sign::Negative, Sign::Positive) => 2,
            (Sign::Negative, Sign::Negative) => 3,
        };
        counts[slot] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(FrameError::NothingRetained);
    }
    let share = |c: usize| c as f64 / total as f64;
    Ok(QuadrantShares {
        pos_pos: share(counts[0]),
        pos_neg: share(counts[1]),
        neg_pos: share(counts[2]),
        neg_neg: share(counts[3]),
    })
}

/// k-means over the retained documents' centred frame coordinates. Returns
/// the document indices that were clustered alongside the clustering.
pub fn frame_clusters(
    plot: &FramePlot,
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Clustering), FrameError> {
    let indices = plot.retained_indices();
    if indices.len() < k {
        return Err(FrameError::TooFewRetained {
            retained: indices.len(),
            k,
        });
    }
    let points: Vec<Point> = indices.iter().map(|&i| plot.coords[i]).collect();
    let clustering = kmeans(&points, k, seed)?;
    Ok((indices, clustering))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document, Format};

    pub fn axis(e1: &[f64], e2: &[f64]) -> FrameAxis {
        FrameAxis::new("this is about the future", "this is about the past", e1.to_vec(), e2.to_vec(), "test").unwrap()
    }

    pub fn corpus_with(vectors: Vec<Vec<f64>>) -> EmbeddedCorpus {
        let docs = (0..vectors.len())
            .map(|i| Document::new(format!("d{i}"), format!("text number {i}")).unwrap())
            .collect();
        EmbeddedCorpus::new(Corpus::from_documents(docs, "<memory>", Format::Jsonl).unwrap(), vectors, "test").unwrap()
    }

    #[test]
    fn coordinate_examples() {
        let a = axis(&[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(frame_coordinate(&[1.0, 0.0], &a).unwrap(), 1.0);
        assert_eq!(frame_coordinate(&[0.0, 1.0], &a).unwrap(), 0.0);
        let v = frame_coordinate(&[1.0, 1.0], &a).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(frame_coordinate(&[0.0, 0.0], &a), Err(FrameError::ZeroVector { .. })));
        assert!(matches!(frame_coordinate(&[1.0], &a), Err(FrameError::DimensionMismatch { .. })));
    }

    #[test]
    fn degenerate_axis_rejected() {
        assert!(matches!(
            FrameAxis::new("a", "b", vec![1.0, 2.0], vec![1.0, 2.0], "e"),
            Err(FrameError::DegenerateAxis { .. })
        ));
    }

    #[test]
    fn axis_spec_parsing() {
        assert_eq!(
            parse_axis_spec("this is about the future::this is about the past").unwrap(),
            ("this is about the future".to_string(), "this is about the past".to_string())
        );
        assert!(parse_axis_spec("no separator").is_err());
        assert!(parse_axis_spec("::past").is_err());
        assert!(parse_axis_spec("a::b::c").is_err());
    }

    #[test]
    fn sign_rule() {
        assert_eq!(classify_by_sign(0.3), Sign::Positive);
        assert_eq!(classify_by_sign(-0.3), Sign::Negative);
        assert_eq!(classify_by_sign(0.0), Sign::Positive);
        let a = axis(&[1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(a.label(classify_by_sign(0.3)), "this is about the future");
    }

    fn quadrant_plot() -> FramePlot {
        // One document per quadrant around a zero mean.
        let ec = corpus_with(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]);
        let ax = axis(&[1.0, 0.0], &[0.0, 0.0]);
        let ay = axis(&[0.0, 1.0], &[0.0, 0.0]);
        build_frame_plot(&ec, &ax, &ay, 0.0).unwrap()
    }

    #[test]
    fn one_document_per_quadrant() {
        let plot = quadrant_plot();
        let s = quadrant_shares(&plot).unwrap();
        assert_eq!((s.pos_pos, s.pos_neg, s.neg_pos, s.neg_neg), (0.25, 0.25, 0.25, 0.25));
    }

    #[test]
    fn centring_and_radius() {
        let ec = corpus_with(vec![vec![3.0, 1.0], vec![1.0, 2.0], vec![0.5, -1.0], vec![2.0, 2.0], vec![1.0, 0.1]]);
        let ax = axis(&[1.0, 0.0], &[0.0, 0.0]);
        let ay = axis(&[0.0, 1.0], &[0.0, 0.0]);
        let plot = build_frame_plot(&ec, &ax, &ay, 0.0).unwrap();
        assert_eq!(plot.retained_count(), 5);
        let mx: f64 = plot.coords.iter().map(|p| p.x).sum::<f64>() / 5.0;
        let my: f64 = plot.coords.iter().map(|p| p.y).sum::<f64>() / 5.0;
        assert!(mx.abs() < 1e-9 && my.abs() < 1e-9);

        let full = plot.with_coefficient(1.0).unwrap();
        let max_abs = plot.coords.iter().fold(0.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
        assert_eq!(full.radius, max_abs);
        assert!(full.retained_count() >= 1);
        for (p, r) in full.coords.iter().zip(&full.retained) {
            assert_eq!(*r, p.norm() >= max_abs);
        }
        assert!(plot.with_coefficient(1.5).is_err());
    }

    #[test]
    fn all_positive_quadrant() {
        let ec = corpus_with(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let ax = axis(&[1.0, 0.0], &[0.0, 0.0]);
        let ay = axis(&[0.0, 1.0], &[0.0, 0.0]);
        // Identical documents sit exactly at the centre: zero counts as positive.
        let plot = build_frame_plot(&ec, &ax, &ay, 0.0).unwrap();
        let s = quadrant_shares(&plot).unwrap();
        assert_eq!((s.pos_pos, s.pos_neg, s.neg_pos, s.neg_neg), (1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn classify_filtered_document_fails() {
        let ec = corpus_with(vec![vec![1.0, 0.0], vec![1.0, 0.01], vec![-1.0, 0.0]]);
        let ax = axis(&[1.0, 0.0], &[0.0, 0.0]);
        let ay = axis(&[0.0, 1.0], &[0.0, 0.0]);
        let plot = build_frame_plot(&ec, &ax, &ay, 0.9).unwrap();
        let dropped = plot.retained.iter().position(|r| !r).unwrap();
        assert!(matches!(plot.classify(dropped), Err(FrameError::NotRetained(_))));
    }

    #[test]
    fn embedder_mismatch() {
        let ec = corpus_with(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let other = FrameAxis::new("a", "b", vec![1.0, 0.0], vec![0.0, 1.0], "other").unwrap();
        assert!(matches!(
            build_frame_plot(&ec, &other, &other, 0.25),
            Err(FrameError::EmbedderMismatch { .. })
        ));
    }

    #[test]
    fn clusters_in_frame_space() {
        let ec = corpus_with(
            (0..20)
                .map(|i| vec![(i as f64 * 0.3).cos(), (i as f64 * 0.3).sin(), 0.2])
                .collect(),
        );
        let ax = axis(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        let ay = axis(&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]);
        let plot = build_frame_plot(&ec, &ax, &ay, 0.0).unwrap();
        let (idx, c) = frame_clusters(&plot, 5, 1).unwrap();
        assert_eq!(idx.len(), 20);
        assert!(c.sizes().iter().all(|&s| s > 0));
        let (_, one) = frame_clusters(&plot, 1, 1).unwrap();
        assert!(one.labels.iter().all(|&l| l == 0));
        assert!(matches!(frame_clusters(&plot, 21, 1), Err(FrameError::TooFewRetained { .. })));
    }
}
