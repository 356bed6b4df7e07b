//! Alternating optimization of layer placement, cluster cache budgets and
//! layer sizes.

use super::baseline::mplp_baseline;
use super::greedy::greedy_round_alg1;
use super::lp::{lp_solve, LpProblem};
use super::relaxed::{solve_relaxed_placement, RelaxOptions};
use crate::content::Catalog;
use crate::economics::{ece, EconomicModel, Placement, RateTable};
use crate::error::{invalid, Error, Result};
use crate::geometry::NetworkGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    /// Relative stopping threshold on the ECE change.
    pub delta: f64,
    pub max_iter: usize,
    pub relax: RelaxOptions,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions { delta: 1e-6, max_iter: 30, relax: RelaxOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    pub placement: Placement,
    /// Row-major `F x L`, integer bits.
    pub layer_sizes: Vec<f64>,
    /// ECE of the starting point, then after every full iteration.
    pub ece_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub catalog: Catalog,
}

/// Equal per-SBS share of the total budget, as cluster budgets in bits.
pub fn equal_cluster_budgets(geometry: &NetworkGeometry, total_budget: f64) -> Vec<f64> {
    let sbs: usize = geometry.cluster_sizes().iter().sum();
    let q = (total_budget / sbs as f64).floor();
    geometry.cluster_sizes().iter().map(|s| q * *s as f64).collect()
}

fn size_step(
    placement: &Placement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    total_budget: f64,
    prices: &[f64],
) -> Result<Option<(Catalog, Vec<f64>)>> {
    let kk = geometry.cluster_count();
    let ne = catalog.entries();
    let nl = catalog.layer_count;
    let mut lp = LpProblem::new(ne + kk);
    for e in 0..ne {
        let p = catalog.layer_prob[e];
        let mut coef = kk as f64 * p * econ.c_bh;
        for k in 0..kk {
            if placement.x[e * kk + k] {
                coef += econ.c_ca * geometry.cluster_size(k) as f64 - p * econ.c_bh;
            }
        }
        lp.objective[e] = -econ.k_c * coef;
        lp.lower[e] = catalog.layer_min_sizes[e % nl];
        lp.upper[e] = catalog.file_sizes[e / nl];
    }
    for k in 0..kk {
        lp.upper[ne + k] = total_budget;
        let s = geometry.cluster_size(k) as f64;
        let mut row: Vec<(usize, f64)> = (0..ne).filter(|e| placement.x[e * kk + k]).map(|e| (e, s)).collect();
        row.push((ne + k, -1.0));
        lp.add_row(row, 0.0);
    }
    lp.add_row((0..kk).map(|k| (ne + k, 1.0)).collect(), total_budget);
    for f in 0..catalog.file_count {
        lp.add_row((0..nl).map(|l| (f * nl + l, 1.0)).collect(), catalog.file_sizes[f]);
    }
    let sol = match lp_solve(&lp) {
        Ok(s) => s,
        Err(Error::Infeasible) => return Ok(None),
        Err(e) => return Err(e),
    };
    let sizes: Vec<f64> = (0..ne)
        .map(|e| sol.x[e].round().max(catalog.layer_min_sizes[e % nl].ceil()))
        .collect();
    for f in 0..catalog.file_count {
        if sizes[f * nl..(f + 1) * nl].iter().sum::<f64>() > catalog.file_sizes[f] {
            return Ok(None);
        }
    }
    let mut budgets: Vec<f64> = (0..kk)
        .map(|k| {
            let s = geometry.cluster_size(k) as f64;
            s * (0..ne).filter(|e| placement.x[e * kk + k]).map(|e| sizes[e]).sum::<f64>()
        })
        .collect();
    let used: f64 = budgets.iter().sum();
    if used > total_budget {
        return Ok(None);
    }
    // The leftover has no objective weight here; give it where the
    // relaxation priced per-SBS space highest.
    let mut best = 0;
    for k in 1..kk {
        let v = prices[k] / geometry.cluster_size(k) as f64;
        if v > prices[best] / geometry.cluster_size(best) as f64 {
            best = k;
        }
    }
    budgets[best] += (total_budget - used).floor();
    Ok(Some((catalog.with_layer_sizes(sizes)?, budgets)))
}

pub fn alternating_alg2(
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
    total_budget: f64,
    opts: &JointOptions,
) -> Result<JointSolution> {
    if !(total_budget > 0.0) || !(opts.delta > 0.0) || opts.max_iter == 0 {
        return Err(invalid("need M > 0, delta > 0 and at least one iteration"));
    }
    let nl = catalog.layer_count;
    let th_sum: f64 = catalog.layer_min_sizes.iter().sum();
    if let Some(f) = catalog.file_sizes.iter().position(|c| th_sum > *c) {
        return Err(Error::InfeasibleCatalog(format!("layer thresholds exceed file {} size", f + 1)));
    }
    let kk = geometry.cluster_count();
    let start_sizes: Vec<f64> = (0..catalog.entries())
        .map(|e| catalog.layer_sizes[e].max(catalog.layer_min_sizes[e % nl]))
        .collect();
    let mut cat = catalog.with_layer_sizes(start_sizes)?;
    let mut budgets = equal_cluster_budgets(geometry, total_budget);
    let mut x = mplp_baseline(&cat, geometry, &budgets)?;
    x.total_budget = total_budget;
    let mut current = ece(&x, &cat, geometry, econ, rates)?;
    let mut trace = vec![current];
    let mut prices = vec![0.0; kk];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let before = current;

        let caps: Vec<f64> = (0..kk).map(|k| budgets[k] / geometry.cluster_size(k) as f64).collect();
        let relaxed = solve_relaxed_placement(&cat, geometry, econ, rates, &caps, &opts.relax)?;
        prices.clone_from(&relaxed.capacity_duals);
        let mut greedy = greedy_round_alg1(&relaxed, &cat, geometry, econ, rates, &budgets)?.placement;
        greedy.total_budget = total_budget;
        let v = ece(&greedy, &cat, geometry, econ, rates)?;
        if v >= current {
            x = greedy;
            current = v;
        }

        if let Some((new_cat, new_budgets)) = size_step(&x, &cat, geometry, econ, total_budget, &prices)? {
            let mut candidate = x.clone();
            candidate.cluster_budgets.clone_from(&new_budgets);
            let v = ece(&candidate, &new_cat, geometry, econ, rates)?;
            if v >= current && candidate.check(&new_cat, geometry).is_ok() {
                x = candidate;
                cat = new_cat;
                budgets = new_budgets;
                current = v;
            }
        }
        trace.push(current);
        if (current - before).abs() <= opts.delta * current.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(JointSolution {
        placement: x,
        layer_sizes: cat.layer_sizes.clone(),
        ece_trace: trace,
        iterations,
        converged,
        catalog: cat,
    })
}
