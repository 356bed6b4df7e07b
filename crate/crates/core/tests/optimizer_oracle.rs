mod common;

use common::{random_instance, Instance, DEFAULT_R_K, DEFAULT_R_M0};
use ecocache::content::{build_catalog, CatalogParams, FileSizes};
use ecocache::economics::{base_cost, base_revenue, ece, relaxed_ece, Placement, RateTable};
use ecocache::harness::ExperimentConfig;
use ecocache::optimizer::{
    alternating_alg2, brute_force_placement, check_stability, equal_cluster_budgets, greedy_round_alg1,
    mplp_baseline, solve_relaxed_placement, z_table, JointOptions, RelaxOptions,
};
use ecocache::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(f: usize, l: usize, k: usize, alpha: f64) -> Instance {
    let mut cfg = ExperimentConfig::default();
    cfg.k = k;
    cfg.d.truncate(k);
    cfg.s_per_cluster.truncate(k);
    let geometry = cfg.geometry();
    let catalog = build_catalog(&CatalogParams {
        file_count: f,
        layer_count: l,
        alpha,
        file_sizes: FileSizes::Uniform(50e6),
        layer_min_sizes: None,
    })
    .unwrap();
    let rates = RateTable::new(&geometry, DEFAULT_R_K[..k].to_vec(), DEFAULT_R_M0);
    Instance { catalog, geometry, econ: cfg.economics(), rates, budgets: vec![0.0; k] }
}

fn tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

#[test]
fn relaxed_with_no_capacity_is_empty() {
    let ins = small(3, 2, 2, 1.0);
    let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &[0.0, 0.0], &RelaxOptions::default())
        .unwrap();
    assert!(r.xt.iter().all(|v| v.abs() < 1e-12));
    let base = base_revenue(2, &ins.rates, &ins.econ) - base_cost(&ins.catalog, &ins.geometry, &ins.econ);
    assert!((r.objective - base).abs() <= 1e-12 * base.abs());
    assert!(r.converged);
}

#[test]
fn relaxed_single_slot_takes_best_layer() {
    let ins = small(2, 2, 1, 1.0);
    let layer = ins.catalog.layer_sizes[0];
    let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &[layer], &RelaxOptions::default())
        .unwrap();
    // Equal sizes, so the most requested layer (file 1's enhancement layer)
    // carries the largest net weight.
    let best = ins.catalog.idx(0, 1);
    for (e, v) in r.xt.iter().enumerate() {
        let want = if e == best { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-9, "entry {e}: {v}");
    }
    let re = relaxed_ece(&r.xt, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates, 1e-11).unwrap();
    assert!((re - r.objective).abs() <= 1e-9 * re.abs());
}

#[test]
fn relaxed_solution_is_feasible_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let ins = random_instance(&mut rng, 4, 3, 3);
        let caps = ins.caps();
        let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &caps, &RelaxOptions::default())
            .unwrap();
        let kk = ins.geometry.cluster_count();
        for e in 0..ins.catalog.entries() {
            let row: f64 = (0..kk).map(|k| r.xt[e * kk + k]).sum();
            assert!(row <= 1.0 + 1e-9);
        }
        for (k, q) in caps.iter().enumerate() {
            let load: f64 = (0..ins.catalog.entries()).map(|e| r.xt[e * kk + k] * ins.catalog.layer_sizes[e]).sum();
            assert!(load <= q + 1e-9 * q.max(1.0));
        }
        assert!(r.xt.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        assert!(r.objective <= r.upper_bound + tol(r.upper_bound));
    }
}

#[test]
fn greedy_caches_argmax_when_one_slot() {
    let mut ins = small(2, 2, 1, 0.7);
    let layer = ins.catalog.layer_sizes[0];
    ins.budgets = vec![layer * ins.geometry.cluster_size(0) as f64];
    let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.caps(), &RelaxOptions::default())
        .unwrap();
    let g = greedy_round_alg1(&r, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.budgets).unwrap();
    let z = z_table(&r.xt, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates).unwrap();
    // Two layers are never requested in this catalog and tie at zero; the
    // maximum itself must be unique.
    let mut sorted = z.clone();
    sorted.sort_by(f64::total_cmp);
    assert!(sorted[3] > sorted[2], "{z:?}");
    let arg = (0..4).max_by(|a, b| z[*a].total_cmp(&z[*b])).unwrap();
    assert_eq!(g.placement.cached_count(), 1);
    assert!(g.placement.x[arg]);
    // Exhaustive singleton oracle.
    let singles: Vec<f64> = (0..4)
        .map(|e| {
            let mut p = Placement::empty(2, 2, ins.budgets.clone());
            p.x[e] = true;
            ece(&p, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates).unwrap()
        })
        .collect();
    let best = singles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(singles[arg], best);
}

#[test]
fn greedy_caches_everything_when_it_fits() {
    let mut ins = small(3, 2, 2, 1.0);
    ins.econ.c_bh = 1e-5;
    ins.budgets = ins.geometry.cluster_sizes().iter().map(|s| *s as f64 * 1e9).collect();
    let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.caps(), &RelaxOptions::default())
        .unwrap();
    let g = greedy_round_alg1(&r, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.budgets).unwrap();
    for (i, z) in g.z.iter().enumerate() {
        if ins.catalog.layer_prob[i / 2] > 0.0 {
            assert!(*z > 0.0);
        }
    }
    assert_eq!(g.placement.cached_count(), ins.catalog.entries());
    g.placement.check(&ins.catalog, &ins.geometry).unwrap();
}

#[test]
fn crossed_preferences_block() {
    let mut ins = small(2, 2, 2, 1.0);
    ins.budgets = vec![1e12, 1e12];
    let mut p = Placement::empty(2, 2, ins.budgets.clone());
    p.set(0, 0, 0, true);
    p.set(1, 0, 1, true);
    let mut z = vec![0.0; 8];
    z[p.idx(0, 0, 0)] = 1.0;
    z[p.idx(0, 0, 1)] = 2.0;
    z[p.idx(1, 0, 1)] = 1.0;
    z[p.idx(1, 0, 0)] = 2.0;
    let rep = check_stability(&p, &z, &ins.catalog, &ins.geometry).unwrap();
    assert!(!rep.stable);
    assert_eq!(rep.blocking_pairs, vec![((0, 0, 0), (1, 0, 1))]);
    // Swapping the pair removes it.
    let mut q = Placement::empty(2, 2, ins.budgets.clone());
    q.set(0, 0, 1, true);
    q.set(1, 0, 0, true);
    assert!(check_stability(&q, &z, &ins.catalog, &ins.geometry).unwrap().stable);
    // A swap that breaks a budget does not block.
    let mut tight = p.clone();
    let c = ins.catalog.size(0, 0);
    tight.cluster_budgets = vec![c * 3.0, c * 2.0];
    tight.set(0, 1, 1, true);
    assert!(check_stability(&tight, &z, &ins.catalog, &ins.geometry).unwrap().stable);
    let empty = Placement::empty(2, 2, ins.budgets.clone());
    assert!(check_stability(&empty, &z, &ins.catalog, &ins.geometry).unwrap().stable);
}

#[test]
fn greedy_output_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let ins = random_instance(&mut rng, 6, 4, 3);
        let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.caps(), &RelaxOptions::default())
            .unwrap();
        let g = greedy_round_alg1(&r, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.budgets).unwrap();
        g.placement.check(&ins.catalog, &ins.geometry).unwrap();
        let rep = check_stability(&g.placement, &g.z, &ins.catalog, &ins.geometry).unwrap();
        assert!(rep.stable, "{:?}", rep.blocking_pairs);
    }
}

#[test]
fn mplp_examples() {
    let mut ins = small(3, 2, 1, 1.0);
    let s = ins.geometry.cluster_size(0) as f64;
    ins.budgets = vec![s * 50e6];
    let p = mplp_baseline(&ins.catalog, &ins.geometry, &ins.budgets).unwrap();
    assert!(p.get(0, 0, 0) && p.get(0, 1, 0));
    assert_eq!(p.cached_count(), 2);
    let p = mplp_baseline(&ins.catalog, &ins.geometry, &[0.0]).unwrap();
    assert_eq!(p.cached_count(), 0);

    let cfg = ExperimentConfig::default();
    let g = cfg.geometry();
    let cat = cfg.catalog().unwrap();
    let budgets = equal_cluster_budgets(&g, cfg.m_bits);
    let p = mplp_baseline(&cat, &g, &budgets).unwrap();
    p.check(&cat, &g).unwrap();
    let min_layer = cat.layer_sizes.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 0..3 {
        let q = budgets[k] / g.cluster_size(k) as f64;
        let mut load = 0.0;
        for f in 0..cat.file_count {
            for l in 0..cat.layer_count {
                if p.get(f, l, k) {
                    load += cat.size(f, l);
                }
            }
        }
        assert!(load <= q && q - load < min_layer, "cluster {k}: {load} of {q}");
    }
}

#[test]
fn brute_force_examples() {
    let ins = small(2, 2, 1, 1.0);
    let bf = brute_force_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &[0.0]).unwrap();
    assert_eq!(bf.placement.cached_count(), 0);
    assert_eq!(bf.candidates, 1);
    let base = base_revenue(1, &ins.rates, &ins.econ) - base_cost(&ins.catalog, &ins.geometry, &ins.econ);
    assert!((bf.ece - base).abs() <= 1e-12 * base.abs());

    let budgets = vec![ins.geometry.cluster_size(0) as f64 * 50e6];
    let bf = brute_force_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &budgets).unwrap();
    assert!(bf.candidates <= 16);
    let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &[50e6], &RelaxOptions::default())
        .unwrap();
    let g = greedy_round_alg1(&r, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &budgets).unwrap();
    let e1 = ece(&g.placement, &ins.catalog, &ins.geometry, &ins.econ, &ins.rates).unwrap();
    assert!(bf.ece >= e1 - tol(e1));

    let big = small(8, 5, 3, 1.0);
    let err = brute_force_placement(&big.catalog, &big.geometry, &big.econ, &big.rates, &[1e9; 3]).unwrap_err();
    assert!(matches!(err, Error::Oversize(_)));
}

#[test]
fn brute_force_under_relaxation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let mut ins = small(3, 2, 2, rand::Rng::random_range(&mut rng, 0.5..1.5));
        let layer = ins.catalog.layer_sizes[0];
        ins.budgets = (0..2)
            .map(|k| ins.geometry.cluster_size(k) as f64 * layer * rand::Rng::random_range(&mut rng, 0..=6) as f64)
            .collect();
        let bf = brute_force_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.budgets).unwrap();
        let r = solve_relaxed_placement(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, &ins.caps(), &RelaxOptions::default())
            .unwrap();
        assert!(bf.ece <= r.objective + tol(r.objective));
        assert!(bf.ece <= r.upper_bound + tol(r.upper_bound));
    }
}

#[test]
fn alternating_respects_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let ins = random_instance(&mut rng, 3, 2, 2);
        let total = rand::Rng::random_range(&mut rng, 5e7..4e8_f64).floor();
        let opts = JointOptions::default();
        let j = alternating_alg2(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, total, &opts).unwrap();
        assert!(j.iterations >= 1 && j.iterations <= opts.max_iter);
        assert_eq!(j.ece_trace.len(), j.iterations + 1);
        assert!(j.ece_trace.windows(2).all(|w| w[1] >= w[0]));
        j.placement.check(&j.catalog, &ins.geometry).unwrap();
        assert!(j.placement.cluster_budgets.iter().sum::<f64>() <= total);
        assert!(j.placement.cluster_budgets.iter().all(|m| *m >= 0.0 && m.fract() == 0.0));
        let nl = j.catalog.layer_count;
        for f in 0..j.catalog.file_count {
            let row = &j.layer_sizes[f * nl..(f + 1) * nl];
            assert!(row.iter().sum::<f64>() <= j.catalog.file_sizes[f]);
            for (l, c) in row.iter().enumerate() {
                assert!(*c >= j.catalog.layer_min_sizes[l] && c.fract() == 0.0);
            }
        }
        let last = *j.ece_trace.last().unwrap();
        let recomputed = ece(&j.placement, &j.catalog, &ins.geometry, &ins.econ, &ins.rates).unwrap();
        assert!((last - recomputed).abs() <= tol(last));
    }
}

#[test]
fn alternating_single_iteration_and_errors() {
    let ins = small(3, 2, 2, 1.0);
    let opts = JointOptions { max_iter: 1, ..JointOptions::default() };
    let j = alternating_alg2(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, 2e8, &opts).unwrap();
    assert_eq!(j.iterations, 1);
    assert_eq!(j.ece_trace.len(), 2);

    let mut bad = ins.catalog.clone();
    bad.layer_min_sizes = vec![30e6, 30e6];
    let err = alternating_alg2(&bad, &ins.geometry, &ins.econ, &ins.rates, 2e8, &JointOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InfeasibleCatalog(_)));
    assert!(alternating_alg2(&ins.catalog, &ins.geometry, &ins.econ, &ins.rates, 0.0, &JointOptions::default()).is_err());
}
