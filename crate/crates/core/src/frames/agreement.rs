//! Agreement between sign classification and externally produced labels.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{classify_by_sign, retained_mask, FrameAxis, FrameError, FramePlot, Sign};

pub const DEFAULT_CURVE_COEFFICIENTS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

/// External labels of one document, one per axis. `None` (or the literal
/// label "None") marks a document the labeller declined to place.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AxisLabels {
    #[serde(default)]
    pub label_x: Option<String>,
    #[serde(default)]
    pub label_y: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    labels: HashMap<String, AxisLabels>,
}

#[derive(Deserialize)]
struct LabelRecord {
    id: String,
    #[serde(flatten)]
    labels: AxisLabels,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, label_x: Option<&str>, label_y: Option<&str>) {
        self.labels.insert(
            id.into(),
            AxisLabels {
                label_x: label_x.map(str::to_string),
                label_y: label_y.map(str::to_string),
            },
        );
    }

    pub fn get(&self, id: &str) -> Option<&AxisLabels> {
        self.labels.get(id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Reads `{id, label_x, label_y}` JSON lines.
pub fn load_labels(path: &Path) -> Result<LabelSet, FrameError> {
    let err = |reason: String| FrameError::Labels {
        path: path.display().to_string(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut set = LabelSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord =
            serde_json::from_str(line).map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
        if set.labels.insert(record.id.clone(), record.labels).is_some() {
            return Err(err(format!("line {}: duplicate id {}", lineno + 1, record.id)));
        }
    }
    Ok(set)
}

fn normalise(s: &str) -> String {
    s.trim().to_lowercase()
}

/// A label names a pole when it equals the pole text or its last word, case
/// and surrounding whitespace ignored ("Future" names "this is about the
/// future").
fn names_pole(label: &str, pole: &str) -> bool {
    let pole = normalise(pole);
    let last = pole
        .split_whitespace()
        .last()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()));
    label == pole || Some(label) == last
}

fn resolve(label: Option<&str>, axis: &FrameAxis) -> Result<Option<Sign>, FrameError> {
    let Some(label) = label.map(normalise) else {
        return Ok(None);
    };
    if label.is_empty() || label == "none" {
        return Ok(None);
    }
    let positive = names_pole(&label, &axis.positive_text);
    let negative = names_pole(&label, &axis.negative_text);
    match (positive, negative) {
        (true, false) => Ok(Some(Sign::Positive)),
        (false, true) => Ok(Some(Sign::Negative)),
        (true, true) if label == normalise(&axis.positive_text) => Ok(Some(Sign::Positive)),
        (true, true) if label == normalise(&axis.negative_text) => Ok(Some(Sign::Negative)),
        _ => Err(FrameError::UnknownLabel {
            label,
            positive: axis.positive_text.clone(),
            negative: axis.negative_text.clone(),
        }),
    }
}

/// External signs of one document on the x and y axes.
type SignPair = (Option<Sign>, Option<Sign>);

/// Per-document external signs for the x and y axes.
fn resolve_all(plot: &FramePlot, labels: &LabelSet) -> Result<Vec<SignPair>, FrameError> {
    plot.ids
        .iter()
        .map(|id| {
            let l = labels.get(id).ok_or_else(|| FrameError::MissingLabel(id.clone()))?;
            Ok((
                resolve(l.label_x.as_deref(), &plot.axis_x)?,
                resolve(l.label_y.as_deref(), &plot.axis_y)?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Agreement {
    pub matches: usize,
    pub comparable: usize,
}

impl Agreement {
    pub fn rate(&self) -> Option<f64> {
        (self.comparable > 0).then(|| self.matches as f64 / self.comparable as f64)
    }

    fn record(&mut self, external: Option<Sign>, predicted: Sign) {
        if let Some(external) = external {
            self.comparable += 1;
            if external == predicted {
                self.matches += 1;
            }
        }
    }

    pub fn merge(self, other: Agreement) -> Agreement {
        Agreement {
            matches: self.matches + other.matches,
            comparable: self.comparable + other.comparable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub coefficient: f64,
    pub retained: usize,
    /// `null` when no retained document has a usable label.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCurves {
    pub x: Vec<CurvePoint>,
    pub y: Vec<CurvePoint>,
}

fn agreement_over(
    plot: &FramePlot,
    external: &[SignPair],
    retained: &[bool],
    docs: impl Iterator<Item = usize>,
) -> (Agreement, Agreement) {
    let (mut ax, mut ay) = (Agreement::default(), Agreement::default());
    for i in docs.filter(|&i| retained[i]) {
        let p = plot.coords[i];
        ax.record(external[i].0, classify_by_sign(p.x));
        ay.record(external[i].1, classify_by_sign(p.y));
    }
    (ax, ay)
}

/// Agreement of sign labels with external labels on each axis, at each
/// coefficient. Documents labelled "None" are left out of the rate.
pub fn agreement_curve(
    plot: &FramePlot,
    labels: &LabelSet,
    coefficients: &[f64],
) -> Result<FrameCurves, FrameError> {
    let external = resolve_all(plot, labels)?;
    let mut curves = FrameCurves {
        x: Vec::with_capacity(coefficients.len()),
        y: Vec::with_capacity(coefficients.len()),
    };
    for &coefficient in coefficients {
        if !(0.0..=1.0).contains(&coefficient) {
            return Err(FrameError::InvalidCoefficient(coefficient));
        }
        let retained = retained_mask(&plot.coords, coefficient);
        let count = retained.iter().filter(|r| **r).count();
        let (ax, ay) = agreement_over(plot, &external, &retained, 0..plot.len());
        curves.x.push(CurvePoint { coefficient, retained: count, rate: ax.rate() });
        curves.y.push(CurvePoint { coefficient, retained: count, rate: ay.rate() });
    }
    Ok(curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketAgreement {
    /// Inclusive token-count bounds.
    pub lo: usize,
    pub hi: usize,
    pub documents: usize,
    pub comparable: usize,
    pub rate: Option<f64>,
}

/// Agreement (pooled over both axes) among retained documents whose token
/// count falls in each inclusive `(lo, hi)` bucket.
pub fn length_bucket_agreement(
    plot: &FramePlot,
    labels: &LabelSet,
    buckets: &[(usize, usize)],
) -> Result<Vec<BucketAgreement>, FrameError> {
    let mut sorted = buckets.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[1].0 <= pair[0].1 {
            return Err(FrameError::OverlappingBuckets(pair[0], pair[1]));
        }
    }
    let external = resolve_all(plot, labels)?;
    Ok(buckets
        .iter()
        .map(|&(lo, hi)| {
            let members: Vec<usize> = (0..plot.len())
                .filter(|&i| plot.retained[i] && (lo..=hi).contains(&plot.token_counts[i]))
                .collect();
            let (ax, ay) = agreement_over(plot, &external, &plot.retained, members.iter().copied());
            let pooled = ax.merge(ay);
            BucketAgreement {
                lo,
                hi,
                documents: members.len(),
                comparable: pooled.comparable,
                rate: pooled.rate(),
            }
        })
        .collect())
}

/// Pooled and per-axis agreement at the plot's own coefficient.
pub fn plot_agreement(
    plot: &FramePlot,
    labels: &LabelSet,
) -> Result<(Agreement, Agreement), FrameError> {
    let external = resolve_all(plot, labels)?;
    Ok(agreement_over(plot, &external, &plot.retained, 0..plot.len()))
}
