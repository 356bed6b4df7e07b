#![allow(dead_code)]

use ecocache::content::{build_catalog, Catalog, CatalogParams, FileSizes};
use ecocache::economics::{EconomicModel, RateTable};
use ecocache::geometry::NetworkGeometry;
use ecocache::harness::ExperimentConfig;
use ecocache::optimizer::LpProblem;
use rand::Rng;

/// Solves a small dense system by Gaussian elimination; `None` if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all basic feasible points of a box-bounded LP.
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.objective.len();
    // Every constraint as (coeffs, rhs) with a·x <= rhs, bounds included.
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coeffs {
            a[j] += v;
        }
        cons.push((a, r.rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        cons.push((a.clone(), p.upper[j]));
        a[j] = -1.0;
        cons.push((a, -p.lower[j]));
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::new();
    combos(cons.len(), n, 0, &mut pick, &mut |set: &[usize]| {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| cons[i].1).collect();
        if let Some(x) = solve_dense(a, b) {
            let ok = cons
                .iter()
                .all(|(a, rhs)| a.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= rhs + 1e-9);
            if ok {
                let v = p.value(&x);
                if best.is_none_or(|b| v > b) {
                    best = Some(v);
                }
            }
        }
    });
    best
}

fn combos<F: FnMut(&[usize])>(n: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut F) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..n {
        if n - i < k - pick.len() {
            break;
        }
        pick.push(i);
        combos(n, k, i + 1, pick, f);
        pick.pop();
    }
}

/// Random feasible box-bounded LP with `n` variables and `m` rows.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LpProblem {
    let mut p = LpProblem::new(n);
    for j in 0..n {
        p.objective[j] = rng.random_range(-5.0..5.0);
        p.lower[j] = rng.random_range(-2.0..0.5);
        p.upper[j] = p.lower[j] + rng.random_range(0.5..4.0);
    }
    // Keep a known interior-ish point feasible.
    let x0: Vec<f64> = (0..n).map(|j| rng.random_range(p.lower[j]..p.upper[j])).collect();
    for _ in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.8) {
                coeffs.push((j, rng.random_range(-3.0..3.0)));
            }
        }
        let lhs: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        p.add_row(coeffs, lhs + rng.random_range(0.0..2.0));
    }
    p
}

/// A small placement problem with rates fixed by hand.
#[derive(Debug, Clone)]
pub struct Instance {
    pub catalog: Catalog,
    pub geometry: NetworkGeometry,
    pub econ: EconomicModel,
    pub rates: RateTable,
    pub budgets: Vec<f64>,
}

/// Conditional rates at the default operating point, bits/s.
pub const DEFAULT_R_K: [f64; 3] = [163.1e6, 103.8e6, 69.3e6];
pub const DEFAULT_R_M0: f64 = 177.0e6;

/// Random instance with default-scaled economics, equal layer sizes and
/// per-SBS capacities that are whole multiples of the layer size.
pub fn random_instance<R: Rng>(rng: &mut R, max_f: usize, max_l: usize, max_k: usize) -> Instance {
    let f = rng.random_range(2..=max_f);
    let l = rng.random_range(2..=max_l);
    let k = rng.random_range(1..=max_k);
    let mut cfg = ExperimentConfig::default();
    cfg.k = k;
    cfg.d.truncate(k);
    cfg.s_per_cluster = (0..k).map(|_| rng.random_range(1..=3)).collect();
    let geometry = cfg.geometry();
    let catalog = build_catalog(&CatalogParams {
        file_count: f,
        layer_count: l,
        alpha: rng.random_range(0.4..1.6),
        file_sizes: FileSizes::Uniform(50e6),
        layer_min_sizes: None,
    })
    .unwrap();
    let mut econ = cfg.economics();
    econ.c_bh = rng.random_range(1e-4..1e-3);
    econ.c_ca *= rng.random_range(0.5..2.0);
    let scale = rng.random_range(0.8..1.2);
    let rates = RateTable::new(&geometry, DEFAULT_R_K[..k].iter().map(|r| r * scale).collect(), DEFAULT_R_M0);
    let layer = 50e6 / l as f64;
    let budgets = (0..k)
        .map(|c| geometry.cluster_size(c) as f64 * layer * rng.random_range(0..=f * l) as f64)
        .collect();
    Instance { catalog, geometry, econ, rates, budgets }
}

impl Instance {
    pub fn caps(&self) -> Vec<f64> {
        self.budgets.iter().enumerate().map(|(k, m)| m / self.geometry.cluster_size(k) as f64).collect()
    }
}
