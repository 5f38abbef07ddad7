use cartograph::corpus::{Corpus, Document, Format};
use cartograph::embedding::EmbeddedCorpus;
use cartograph::frames::{
    build_frame_plot, classify_by_sign, frame_coordinate, quadrant_shares, FrameAxis,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn direct_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn embedded(vectors: Vec<Vec<f64>>) -> EmbeddedCorpus {
    let docs = (0..vectors.len())
        .map(|i| Document::new(format!("d{i}"), "some text").unwrap())
        .collect();
    EmbeddedCorpus::new(Corpus::from_documents(docs, "<test>", Format::Jsonl).unwrap(), vectors, "e").unwrap()
}

#[test]
fn coordinate_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let dim = rng.random_range(2..64);
        let (e1, e2, doc) = (random_vec(&mut rng, dim), random_vec(&mut rng, dim), random_vec(&mut rng, dim));
        let cont: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a - b).collect();
        let axis = FrameAxis::new("p", "n", e1, e2, "e").unwrap();
        let got = frame_coordinate(&doc, &axis).unwrap();
        assert!((got - direct_cosine(&doc, &cont)).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn swapping_poles_negates_exactly(seed in 0u64..10_000, dim in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = FrameAxis::new("p", "n", random_vec(&mut rng, dim), random_vec(&mut rng, dim), "e").unwrap();
        let swapped = axis.swapped();
        for _ in 0..20 {
            let doc = random_vec(&mut rng, dim);
            let a = frame_coordinate(&doc, &axis).unwrap();
            let b = frame_coordinate(&doc, &swapped).unwrap();
            prop_assert_eq!(a, -b);
            if a != 0.0 {
                prop_assert_ne!(classify_by_sign(a), classify_by_sign(b));
            }
        }
    }

    #[test]
    fn positive_scaling_is_invisible(seed in 0u64..10_000, dim in 2usize..40, scale in 1e-6f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = FrameAxis::new("p", "n", random_vec(&mut rng, dim), random_vec(&mut rng, dim), "e").unwrap();
        let doc = random_vec(&mut rng, dim);
        let scaled: Vec<f64> = doc.iter().map(|v| v * scale).collect();
        let (a, b) = (frame_coordinate(&doc, &axis).unwrap(), frame_coordinate(&scaled, &axis).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn shares_sum_to_one_and_retention_is_monotone(seed in 0u64..10_000, n in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 8;
        let ec = embedded((0..n).map(|_| random_vec(&mut rng, dim)).collect());
        let ax = FrameAxis::new("p", "n", random_vec(&mut rng, dim), random_vec(&mut rng, dim), "e").unwrap();
        let ay = FrameAxis::new("q", "m", random_vec(&mut rng, dim), random_vec(&mut rng, dim), "e").unwrap();
        let plot = build_frame_plot(&ec, &ax, &ay, 0.0).unwrap();
        let mean_x = plot.coords.iter().map(|p| p.x).sum::<f64>() / n as f64;
        prop_assert!(mean_x.abs() < 1e-9);
        let mut last = usize::MAX;
        for step in 0..=10 {
            let p = plot.with_coefficient(step as f64 / 10.0).unwrap();
            let retained = p.retained_count();
            prop_assert!(retained <= last);
            prop_assert!(retained >= 1);
            last = retained;
            let s = quadrant_shares(&p).unwrap();
            prop_assert!((s.total() - 1.0).abs() < 1e-9);
        }
    }
}
