use serde::{Deserialize, Serialize};

use super::{
    agreement_curve, length_bucket_agreement, quadrant_shares, BucketAgreement, FrameAxis,
    FrameCurves, FrameError, FramePlot, LabelSet, QuadrantShares, Sign,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleTexts {
    pub positive: String,
    pub negative: String,
}

impl From<&FrameAxis> for PoleTexts {
    fn from(axis: &FrameAxis) -> Self {
        Self {
            positive: axis.positive_text.clone(),
            negative: axis.negative_text.clone(),
        }
    }
}

/// Share of retained documents on the positive and negative side of each
/// axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub x_positive: f64,
    pub x_negative: f64,
    pub y_positive: f64,
    pub y_negative: f64,
}

impl From<&QuadrantShares> for Marginals {
    fn from(s: &QuadrantShares) -> Self {
        Self {
            x_positive: s.pos_pos + s.pos_neg,
            x_negative: s.neg_pos + s.neg_neg,
            y_positive: s.pos_pos + s.neg_pos,
            y_negative: s.pos_neg + s.neg_neg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentFrame {
    pub id: String,
    /// Centred coordinates.
    pub x: f64,
    pub y: f64,
    pub retained: bool,
    /// Pole text on each axis; `null` for filtered-out documents.
    pub label_x: Option<String>,
    pub label_y: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub embedder: String,
    pub axis_x: PoleTexts,
    pub axis_y: PoleTexts,
    pub coefficient: f64,
    pub radius: f64,
    /// Mean raw coordinate that was subtracted from every document.
    pub center: [f64; 2],
    pub total: usize,
    pub retained: usize,
    pub shares: QuadrantShares,
    pub marginals: Marginals,
    pub documents: Vec<DocumentFrame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<FrameCurves>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_buckets: Option<Vec<BucketAgreement>>,
}

impl FrameReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame report serializes")
    }
}

/// Report for a plot. With labels, agreement curves are computed at
/// `curve_coefficients` and, when `buckets` is non-empty, per token-length
/// bucket.
pub fn build_report(
    plot: &FramePlot,
    labels: Option<&LabelSet>,
    curve_coefficients: &[f64],
    buckets: &[(usize, usize)],
) -> Result<FrameReport, FrameError> {
    let shares = quadrant_shares(plot)?;
    let documents = (0..plot.len())
        .map(|i| {
            let p = plot.coords[i];
            let (label_x, label_y) = match plot.classify(i) {
                Ok((sx, sy)) => (Some(pole(&plot.axis_x, sx)), Some(pole(&plot.axis_y, sy))),
                Err(_) => (None, None),
            };
            DocumentFrame {
                id: plot.ids[i].clone(),
                x: p.x,
                y: p.y,
                retained: plot.retained[i],
                label_x,
                label_y,
            }
        })
        .collect();
    let (agreement, length_buckets) = match labels {
        Some(labels) => (
            Some(agreement_curve(plot, labels, curve_coefficients)?),
            (!buckets.is_empty())
                .then(|| length_bucket_agreement(plot, labels, buckets))
                .transpose()?,
        ),
        None => (None, None),
    };
    Ok(FrameReport {
        embedder: plot.axis_x.embedder.clone(),
        axis_x: (&plot.axis_x).into(),
        axis_y: (&plot.axis_y).into(),
        coefficient: plot.coefficient,
        radius: plot.radius,
        center: plot.center.into(),
        total: plot.len(),
        retained: plot.retained_count(),
        marginals: (&shares).into(),
        shares,
        documents,
        agreement,
        length_buckets,
    })
}

fn pole(axis: &FrameAxis, sign: Sign) -> String {
    axis.label(sign).to_string()
}
