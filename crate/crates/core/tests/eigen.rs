mod common;

use common::{dense_eigenvalues, naive_covariance, random_corpus};
use eigencorpus::eigen::{
    build_channel_matrix, cumulative_variance, decompose, eigenimage, flatten_column_major,
    reshape_column_major, EigenDecomposition,
};
use eigencorpus::{Channel, CorpusTensor, Plane};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reconstruction_error(centered: &[f64], d: &EigenDecomposition) -> f64 {
    let (p, n) = (d.pixels(), d.components());
    let mut worst = 0.0f64;
    for a in 0..n {
        for row in 0..p {
            let rebuilt: f64 = (0..n)
                .map(|j| d.scores[j * p + row] * d.loadings[j * n + a])
                .sum();
            worst = worst.max((rebuilt - centered[a * p + row]).abs());
        }
    }
    worst
}

#[test]
fn eigenvalues_match_dense_solver_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..50 {
        let n = rng.gen_range(2..=8);
        let side = rng.gen_range(3..=16);
        let corpus = random_corpus(n, side, side, rng.gen());
        for channel in Channel::ALL {
            let m = build_channel_matrix(&corpus, channel);
            let d = decompose(&m).unwrap();
            let expected = dense_eigenvalues(naive_covariance(&corpus, channel));
            let scale = expected[0].abs().max(1e-300);
            for (got, want) in d.eigenvalues.iter().zip(&expected) {
                assert!(
                    (got - want.max(0.0)).abs() <= 1e-8 * scale,
                    "case {case} {channel}: {got} vs {want}"
                );
            }
            assert!(reconstruction_error(&m.centered(), &d) <= 1e-8);
            assert!((d.proportions.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn sixteen_pixel_four_image_case() {
    let corpus = random_corpus(4, 4, 4, 16);
    let m = build_channel_matrix(&corpus, Channel::Green);
    let d = decompose(&m).unwrap();
    let expected = dense_eigenvalues(naive_covariance(&corpus, Channel::Green));
    for (got, want) in d.eigenvalues.iter().zip(&expected) {
        assert!((got - want).abs() <= 1e-8 * expected[0]);
    }
    assert!(reconstruction_error(&m.centered(), &d) <= 1e-8);
}

#[test]
fn identical_images_are_rank_one() {
    let base = random_corpus(2, 8, 8, 3);
    let corpus = CorpusTensor::from_raw(5, 8, 8, base.image(0).repeat(5)).unwrap();
    for channel in Channel::ALL {
        let d = decompose(&build_channel_matrix(&corpus, channel)).unwrap();
        assert!((d.proportions[0] - 1.0).abs() <= 1e-12);
        assert!(d.proportions[1..].iter().all(|p| p.abs() <= 1e-12));
        assert!(cumulative_variance(&d)
            .iter()
            .all(|c| (c - 1.0).abs() <= 1e-12));
    }
}

#[test]
fn matrix_columns_follow_image_order() {
    let corpus = random_corpus(3, 2, 3, 8);
    let m = build_channel_matrix(&corpus, Channel::Blue);
    assert_eq!(m.cols(), 3);
    assert_eq!(m.image_ids, vec![1, 2, 3]);
    for k in 0..3 {
        assert_eq!(
            m.column(k),
            flatten_column_major(&corpus.channel_plane(k, Channel::Blue)).as_slice()
        );
    }
    // column-major: second entry is row 1, column 0
    assert_eq!(m.column(0)[1], corpus.get(0, 1, 0, 2));
}

#[test]
fn gray_matrix_of_gray_corpus_equals_channel_matrix() {
    let base = random_corpus(3, 4, 4, 21);
    let data: Vec<f64> = base
        .as_slice()
        .chunks_exact(3)
        .flat_map(|p| [p[1]; 3])
        .collect();
    let corpus = CorpusTensor::from_raw(3, 4, 4, data).unwrap();
    assert_eq!(
        build_channel_matrix(&corpus, Channel::Gray).as_slice(),
        build_channel_matrix(&corpus, Channel::Red).as_slice()
    );
}

#[test]
fn scores_are_orthogonal_over_pixels() {
    let corpus = random_corpus(6, 12, 12, 77);
    let d = decompose(&build_channel_matrix(&corpus, Channel::Red)).unwrap();
    let p = d.pixels();
    for a in 0..6 {
        for b in 0..6 {
            if a != b {
                let dot: f64 = d
                    .score_column(a)
                    .iter()
                    .zip(d.score_column(b))
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(dot.abs() <= 1e-8 * p as f64);
            }
        }
        let norm: f64 = d.loading_column(a).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn sign_rule_makes_largest_score_positive() {
    let corpus = random_corpus(5, 10, 10, 5);
    let d = decompose(&build_channel_matrix(&corpus, Channel::Blue)).unwrap();
    for j in 0..5 {
        let col = d.score_column(j);
        let max = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = col
            .iter()
            .rposition(|v| v.abs() >= max * (1.0 - 1e-12))
            .unwrap();
        assert!(col[last] > 0.0);
    }
}

#[test]
fn two_pixel_worked_example() {
    let a = Plane::new(1, 2, vec![0.0, 1.0]).unwrap();
    let b = Plane::new(1, 2, vec![1.0, 0.0]).unwrap();
    let m = eigencorpus::eigen::matrix_from_planes(&[a, b], Channel::Red).unwrap();
    let centered = m.centered();
    assert_eq!(centered, vec![-0.5, 0.5, 0.5, -0.5]);
    let d = decompose(&m).unwrap();
    assert!((d.eigenvalues[0] - 1.0).abs() <= 1e-12);
    assert!(d.eigenvalues[1].abs() <= 1e-12);
    let img = eigenimage(&d, 1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((img.get(0, 0) + h).abs() <= 1e-12);
    assert!((img.get(1, 0) - h).abs() <= 1e-12);
}

fn plane_strategy() -> impl Strategy<Value = Plane> {
    (1usize..7, 1usize..7).prop_flat_map(|(w, h)| {
        proptest::collection::vec(-1.0f64..1.0, w * h)
            .prop_map(move |v| Plane::new(w, h, v).unwrap())
    })
}

proptest! {
    #[test]
    fn reshape_inverts_flatten(plane in plane_strategy()) {
        let flat = flatten_column_major(&plane);
        prop_assert_eq!(reshape_column_major(&flat, plane.height(), plane.width()).unwrap(), plane);
    }

    #[test]
    fn permutation_keeps_spectrum(n in 2usize..6, seed in any::<u64>(), rot in 1usize..6) {
        let corpus = random_corpus(n, 6, 6, seed);
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let shuffled = corpus.permuted(&order).unwrap();
        let a = decompose(&build_channel_matrix(&corpus, Channel::Red)).unwrap();
        let b = decompose(&build_channel_matrix(&shuffled, Channel::Red)).unwrap();
        for k in 0..n {
            prop_assert!((a.eigenvalues[k] - b.eigenvalues[k]).abs() <= 1e-10);
            prop_assert!((a.proportions[k] - b.proportions[k]).abs() <= 1e-10);
        }
        // loadings permute with the images; scores are unchanged up to round-off
        if a.eigenvalues.windows(2).all(|w| w[0] - w[1] > 1e-6) {
            for (x, y) in a.score_column(0).iter().zip(b.score_column(0)) {
                prop_assert!((x - y).abs() <= 1e-8);
            }
            for (k, &src) in order.iter().enumerate() {
                prop_assert!((b.loading_column(0)[k] - a.loading_column(0)[src]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn common_scaling_squares_eigenvalues(n in 2usize..5, seed in any::<u64>(), s in 0.1f64..1.0) {
        let corpus = random_corpus(n, 5, 5, seed);
        let scaled = CorpusTensor::from_raw(
            n, 5, 5, corpus.as_slice().iter().map(|v| v * s).collect()
        ).unwrap();
        let a = decompose(&build_channel_matrix(&corpus, Channel::Green)).unwrap();
        let b = decompose(&build_channel_matrix(&scaled, Channel::Green)).unwrap();
        for k in 0..n {
            prop_assert!((b.eigenvalues[k] - s * s * a.eigenvalues[k]).abs() <= 1e-10);
            prop_assert!((a.proportions[k] - b.proportions[k]).abs() <= 1e-10);
        }
    }
}
