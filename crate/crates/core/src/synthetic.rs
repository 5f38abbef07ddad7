//! Seeded synthetic data with known structure: planted-vocabulary corpora,
//! preference triples with a known set of distinct topics, and Gaussian
//! blobs. Used by the test suites and handy for demos.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dpo::PreferenceTriple;

/// A lowercase alphabetic pseudo-word unique to `(group, index)`, such as
/// `"zbqac"`. No two pairs below 676 groups and 26 indices collide.
pub fn pseudo_word(group: usize, index: usize) -> String {
    let letter = |v: usize| (b'a' + (v % 26) as u8) as char;
    format!("z{}{}q{}", letter(group / 26), letter(group), letter(index))
}

/// Vocabulary layout of one planted group: `core` words appear in every
/// document and `pick` of the `variable` words are drawn per document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Planting {
    pub core: usize,
    pub variable: usize,
    pub pick: usize,
}

impl Default for Planting {
    fn default() -> Self {
        Self {
            core: 3,
            variable: 12,
            pick: 5,
        }
    }
}

/// One document of vocabulary group `group`, words shuffled.
pub fn planted_text(group: usize, planting: &Planting, rng: &mut ChaCha8Rng) -> String {
    let mut variable: Vec<usize> = (planting.core..planting.core + planting.variable).collect();
    variable.shuffle(rng);
    let mut words: Vec<String> = (0..planting.core)
        .chain(variable.into_iter().take(planting.pick))
        .map(|i| pseudo_word(group, i))
        .collect();
    words.shuffle(rng);
    words.join(" ")
}

/// `groups * per_group` texts; text `i` belongs to group `i % groups`.
pub fn planted_corpus(groups: usize, per_group: usize, planting: &Planting, seed: u64) -> (Vec<String>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..groups * per_group).map(|i| i % groups).collect();
    let texts = labels.iter().map(|&g| planted_text(g, planting, &mut rng)).collect();
    (texts, labels)
}

#[derive(Debug, Clone)]
pub struct PlantedPreferences {
    pub triples: Vec<PreferenceTriple>,
    /// Planted chosen-side topic of each triple.
    pub topics: Vec<usize>,
    /// Ids of triples whose chosen topic has no rejected-side counterpart.
    pub distinct_ids: Vec<String>,
}

/// `topics * per_topic` preference triples. Chosen answers of topic `t` use
/// vocabulary group `t`. Rejected answers reuse that vocabulary for the first
/// `topics - distinct` topics and a fresh, unrelated vocabulary for the last
/// `distinct` ones.
pub fn planted_preferences(
    topics: usize,
    per_topic: usize,
    distinct: usize,
    planting: &Planting,
    seed: u64,
) -> PlantedPreferences {
    assert!(distinct <= topics);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = topics - distinct;
    let mut triples = Vec::with_capacity(topics * per_topic);
    let mut labels = Vec::with_capacity(topics * per_topic);
    let mut distinct_ids = Vec::new();
    for i in 0..topics * per_topic {
        let t = i % topics;
        let id = format!("pair-{i:04}");
        let rejected_group = if t < shared { t } else { topics + (t - shared) };
        let prompt = format!("question {i}");
        let chosen = planted_text(t, planting, &mut rng);
        let rejected = planted_text(rejected_group, planting, &mut rng);
        let source = serde_json::json!({
            "id": id,
            "prompt": prompt,
            "chosen": chosen,
            "rejected": rejected,
        })
        .to_string();
        if t >= shared {
            distinct_ids.push(id.clone());
        }
        labels.push(t);
        triples.push(PreferenceTriple {
            id,
            prompt,
            chosen,
            rejected,
            source,
        });
    }
    PlantedPreferences {
        triples,
        topics: labels,
        distinct_ids,
    }
}

/// Isotropic Gaussian blobs in `dim` dimensions. Centres sit on the first
/// `centers` coordinate axes at distance `separation` from the origin; point
/// `i` belongs to blob `i % centers`.
pub fn gaussian_blobs(
    centers: usize,
    per_blob: usize,
    dim: usize,
    separation: f64,
    std_dev: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    assert!(centers <= dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std_dev).expect("valid standard deviation");
    let labels: Vec<usize> = (0..centers * per_blob).map(|i| i % centers).collect();
    let rows = labels
        .iter()
        .map(|&c| {
            (0..dim)
                .map(|d| normal.sample(&mut rng) + if d == c { separation } else { 0.0 })
                .collect()
        })
        .collect();
    (rows, labels)
}
