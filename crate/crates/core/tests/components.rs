use std::collections::VecDeque;

use proptest::prelude::*;
use tinygiant::graphgen::PercolatedGraph;
use tinygiant::{connected_components, l2_weight_mass};

fn bfs_sizes(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        label[s] = id;
        let mut size = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            size += 1;
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = id;
                    q.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..60).prop_flat_map(|n| {
        // b = a + offset (mod n) with a non-zero offset never forms a loop
        let pair = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
        (Just(n), prop::collection::vec(pair, 0..120))
    })
}

fn dedup(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    e.sort_unstable();
    e.dedup();
    e
}

proptest! {
    #[test]
    fn matches_bfs((n, raw) in graph_strategy()) {
        let edges = dedup(&raw);
        let g = PercolatedGraph::from_edges(n, edges.iter().copied()).unwrap();
        let weights: Vec<f64> = (0..n).map(|v| 1.0 + v as f64).collect();
        let cc = connected_components(&g, &weights).unwrap();
        let (label, sizes) = bfs_sizes(n, &edges);
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(cc.same_component(u, v), label[u] == label[v]);
            }
        }
        let mut a = sizes.clone();
        let mut b = cc.sizes.clone();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        prop_assert_eq!(cc.sizes.iter().sum::<usize>(), n);
        let total: f64 = cc.weights.iter().sum();
        prop_assert!((total - weights.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn relabelling_preserves_sizes_and_weights((n, raw) in graph_strategy(), shift in 0usize..1000) {
        let edges = dedup(&raw);
        // a rotation is a permutation of 0..n
        let perm = |v: usize| (v + shift) % n;
        let moved: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm(a), perm(b))).collect();
        let weights: Vec<f64> = (0..n).map(|v| 1.0 / (1.0 + v as f64)).collect();
        let mut moved_weights = vec![0.0; n];
        for v in 0..n {
            moved_weights[perm(v)] = weights[v];
        }
        let a = connected_components(&PercolatedGraph::from_edges(n, edges.iter().copied()).unwrap(), &weights).unwrap();
        let b = connected_components(&PercolatedGraph::from_edges(n, dedup(&moved)).unwrap(), &moved_weights).unwrap();
        let mut sa = a.sizes.clone();
        let mut sb = b.sizes.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        prop_assert_eq!(sa, sb);
        let (wa, wb) = (a.sorted_weights(), b.sorted_weights());
        for (x, y) in wa.iter().zip(&wb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((l2_weight_mass(&a, 0) - l2_weight_mass(&b, 0)).abs() < 1e-12);
    }
}
