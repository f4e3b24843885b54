use fairalloc::harness::{generate_problem, k_shortest_paths, sample_volume, TrafficModel, TrafficSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODELS: [TrafficModel; 3] = [TrafficModel::Poisson, TrafficModel::Uniform, TrafficModel::Bimodal];

fn mean(model: TrafficModel, scale: f64, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_volume(model, scale, &mut rng)).sum::<f64>() / n as f64
}

#[test]
fn random_models_have_unit_mean() {
    for model in MODELS {
        let m = mean(model, 1.0, 200_000, 1);
        assert!((m - 1.0).abs() < 0.01, "{model:?} mean {m}");
    }
}

#[test]
fn scale_factor_scales_the_mean() {
    for model in MODELS {
        let m = mean(model, 2.0, 1000, 2);
        assert!((m - 2.0).abs() < 0.1, "{model:?} mean {m}");
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let one = sample_volume(model, 1.0, &mut a);
            let three = sample_volume(model, 3.0, &mut b);
            assert!((three - 3.0 * one).abs() < 1e-12);
        }
    }
}

#[test]
fn gravity_volumes_average_the_scale() {
    let spec = TrafficSpec { model: TrafficModel::Gravity, scale_factor: 2.5, seed: 4 };
    let p = generate_problem(7, 10, spec, 2).unwrap();
    assert_eq!(p.demands.len(), 42);
    let total: f64 = p.demands.iter().map(|d| d.volume.bound().unwrap()).sum();
    assert!((total / 42.0 - 2.5).abs() < 1e-9);
}

#[test]
fn demands_cover_every_ordered_pair() {
    let spec = TrafficSpec { model: TrafficModel::Uniform, scale_factor: 1.0, seed: 9 };
    let p = generate_problem(6, 9, spec, 3).unwrap();
    for d in &p.demands {
        let (i, j) = d.id.strip_prefix("d:").unwrap().split_once('-').unwrap();
        assert_ne!(i, j);
        assert!(!d.paths.is_empty() && d.paths.len() <= 3);
        for pid in &d.paths {
            let path = p.paths.iter().find(|x| &x.id == pid).unwrap();
            assert!(path.resources[0].starts_with(&format!("l:{i}-")));
            assert!(path.resources.last().unwrap().ends_with(&format!("-{j}")));
        }
    }
    for r in &p.resources {
        assert!([10.0, 20.0, 40.0].contains(&r.capacity));
    }
}

/// Every simple path by depth-first search, then sorted.
fn all_paths(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(adj: &[Vec<usize>], t: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *stack.last().unwrap();
        if u == t {
            out.push(stack.clone());
            return;
        }
        for &v in &adj[u] {
            if !stack.contains(&v) {
                stack.push(v);
                go(adj, t, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(adj, t, &mut vec![s], &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn graph() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (2usize..7).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::weighted(0.4), n * n).prop_map(move |bits| {
            (0..n)
                .map(|u| (0..n).filter(|&v| v != u && bits[u * n + v]).collect())
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ksp_matches_enumeration(adj in graph(), k in 1usize..6, s in 0usize..7, t in 0usize..7) {
        let n = adj.len();
        let (s, t) = (s % n, t % n);
        prop_assume!(s != t);
        let expected: Vec<Vec<usize>> = all_paths(&adj, s, t).into_iter().take(k).collect();
        prop_assert_eq!(k_shortest_paths(&adj, s, t, k), expected);
    }
}
