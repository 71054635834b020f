use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinygiant::constants::{Kernel, ModelParams};
use tinygiant::graphgen::{
    edge_prob, expected_two_step, sample_graph, sample_graph_replicate, sample_restricted, two_step_count,
};
use tinygiant::{build_weights, WeightSequence};

fn weights(n: usize, kernel: Kernel) -> WeightSequence {
    build_weights(&ModelParams::new(2.5, 1.0, n, kernel, 0.0).unwrap()).unwrap()
}

/// Independent Bernoulli trial per pair.
fn naive_edges(ws: &WeightSequence, kernel: Kernel, pi: f64, rng: &mut impl Rng) -> Vec<[u32; 2]> {
    let n = ws.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < edge_prob(kernel, ws.w(i), ws.w(j), ws.ell_n(), pi) {
                edges.push([i as u32, j as u32]);
            }
        }
    }
    edges
}

#[test]
fn edge_count_law_matches_naive_sampler() {
    let (n, reps, pi) = (150, 4000, 0.6);
    for kernel in Kernel::ALL {
        let ws = weights(n, kernel);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let skip: Vec<f64> = (0..reps)
            .map(|r| sample_graph_replicate(&ws, kernel, pi, 3, r).unwrap().edge_count() as f64)
            .collect();
        let naive: Vec<f64> = (0..reps).map(|_| naive_edges(&ws, kernel, pi, &mut rng).len() as f64).collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let var = |xs: &[f64]| {
            let m = mean(xs);
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
        };
        // exact moments of a sum of independent Bernoullis
        let (mut mu, mut sigma2) = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = edge_prob(kernel, ws.w(i), ws.w(j), ws.ell_n(), pi);
                mu += p;
                sigma2 += p * (1.0 - p);
            }
        }
        let se = (sigma2 / reps as f64).sqrt();
        for (name, xs) in [("skip", &skip), ("naive", &naive)] {
            assert!((mean(xs) - mu).abs() < 4.0 * se, "{kernel:?} {name}: {} vs {mu}", mean(xs));
            assert!((var(xs) / sigma2 - 1.0).abs() < 0.1, "{kernel:?} {name}: variance {}", var(xs));
        }
    }
}

#[test]
fn hub_pair_frequencies_match_edge_prob() {
    let (n, reps, pi) = (1000, 20_000, 0.3);
    let ws = weights(n, Kernel::Nr);
    let pairs = [(0u32, 1u32), (0, 9), (4, 5), (0, 999)];
    let mut hits = [0usize; 4];
    for r in 0..reps {
        let g = sample_graph_replicate(&ws, Kernel::Nr, pi, 11, r).unwrap();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if g.edges.binary_search(&[i, j]).is_ok() {
                hits[k] += 1;
            }
        }
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let p = edge_prob(Kernel::Nr, ws.w(i as usize), ws.w(j as usize), ws.ell_n(), pi);
        let f = hits[k] as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((f - p).abs() < 4.0 * se + 1e-12, "pair ({i},{j}): {f} vs {p}");
    }
}

#[test]
fn restricted_sample_is_induced_subgraph_law() {
    let ws = weights(500, Kernel::Cl);
    let g = sample_restricted(&ws, Kernel::Cl, 1.0, 40, 8).unwrap();
    assert_eq!(g.n, 500);
    assert!(g.edges.iter().all(|e| e[1] < 40));
    assert!(sample_restricted(&ws, Kernel::Cl, 1.0, 501, 8).is_err());
}

#[test]
fn two_step_mean_matches_exact_sum() {
    let (n, reps, pi) = (3000, 3000, 0.5);
    let ws = weights(n, Kernel::Nr);
    let counts: Vec<f64> = (0..reps)
        .map(|r| {
            let g = sample_graph_replicate(&ws, Kernel::Nr, pi, 21, r).unwrap();
            two_step_count(&g, 0, 1).unwrap() as f64
        })
        .collect();
    // oracle: direct pair loop, independent of the library helper's iteration
    let mut exact = 0.0;
    for v in 2..n {
        let p = |u: usize| pi * (1.0 - (-(ws.w(u) * ws.w(v) / ws.ell_n())).exp());
        exact += p(0) * p(1);
    }
    assert!((expected_two_step(&ws, Kernel::Nr, pi, 0, 1) / exact - 1.0).abs() < 1e-12);
    let mean = counts.iter().sum::<f64>() / reps as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    assert!((mean - exact).abs() < 4.0 * (var / reps as f64).sqrt(), "{mean} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_sorted_unique_in_range(n in 2usize..300, pi in 0.0f64..=1.0, k in 0usize..3, seed in any::<u64>()) {
        let kernel = Kernel::ALL[k];
        let ws = weights(n, kernel);
        let g = sample_graph(&ws, kernel, pi, seed).unwrap();
        prop_assert!(g.edges.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.edges.iter().all(|&[i, j]| i < j && (j as usize) < n));
        prop_assert_eq!(&g, &sample_graph(&ws, kernel, pi, seed).unwrap());
    }

    #[test]
    fn edge_prob_is_monotone_in_weights(w1 in 0.1f64..100.0, w2 in 0.1f64..100.0, bump in 0.0f64..10.0, pi in 0.0f64..=1.0) {
        for kernel in Kernel::ALL {
            let p = edge_prob(kernel, w1, w2, 50.0, pi);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(edge_prob(kernel, w1 + bump, w2, 50.0, pi) >= p);
            prop_assert_eq!(p, edge_prob(kernel, w2, w1, 50.0, pi));
        }
        let (g, nr, cl) = (
            edge_prob(Kernel::Grg, w1, w2, 50.0, pi),
            edge_prob(Kernel::Nr, w1, w2, 50.0, pi),
            edge_prob(Kernel::Cl, w1, w2, 50.0, pi),
        );
        prop_assert!(g <= nr && nr <= cl);
    }
}
