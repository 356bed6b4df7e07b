//! Reweighted-l1 continuous relaxation of the layer placement problem.

use super::lp::{LpProblem, Simplex};
use crate::content::Catalog;
use crate::economics::{base_cost, base_revenue, relaxed_ece, EconomicModel, RateTable};
use crate::error::{invalid, Error, Result};
use crate::geometry::NetworkGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub tau: f64,
    pub max_iter: usize,
    pub eps: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions { tau: 1e-11, max_iter: 50, eps: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPlacement {
    /// Index `(f * L + l) * K + k`, values in `[0, 1]`.
    pub xt: Vec<f64>,
    /// Smoothed ECE at `xt`.
    pub objective: f64,
    /// Value of the first linearization, which dominates every integer placement.
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Shadow price of each cluster's per-SBS capacity row at the last iterate.
    pub capacity_duals: Vec<f64>,
}

fn cluster_masses(xt: &[f64], catalog: &Catalog, kk: usize) -> Vec<f64> {
    let mut m = vec![0.0; kk];
    for e in 0..catalog.entries() {
        for (k, mk) in m.iter_mut().enumerate() {
            *mk += catalog.layer_prob[e] * xt[e * kk + k];
        }
    }
    m
}

fn coefficients(
    weights: &[f64],
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
) -> Vec<f64> {
    let kk = geometry.cluster_count();
    let vm = rates.value_mbs();
    let a_s = econ.sbs_active_power(geometry);
    let mut c = vec![0.0; catalog.entries() * kk];
    for e in 0..catalog.entries() {
        let p = catalog.layer_prob[e];
        let size = catalog.layer_sizes[e];
        for k in 0..kk {
            let s = geometry.cluster_size(k) as f64;
            c[e * kk + k] = econ.k_r * p * (rates.value_sbs(k) - vm)
                - econ.k_c * (weights[k] * s * a_s * p + size * (econ.c_ca * s - p * econ.c_bh));
        }
    }
    c
}

/// Solves the relaxation with per-SBS capacities `caps[k]` (bits).
pub fn solve_relaxed_placement(
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
    caps: &[f64],
    opts: &RelaxOptions,
) -> Result<RelaxedPlacement> {
    let kk = geometry.cluster_count();
    if caps.len() != kk || caps.iter().any(|q| !(*q >= 0.0)) {
        return Err(invalid("need one nonnegative capacity per cluster"));
    }
    if !(opts.tau > 0.0) {
        return Err(invalid("tau must be positive"));
    }
    let ne = catalog.entries();
    let n = ne * kk;
    let mut lp = LpProblem::new(n);
    for v in lp.upper.iter_mut() {
        *v = 1.0;
    }
    for e in 0..ne {
        lp.add_row((0..kk).map(|k| (e * kk + k, 1.0)).collect(), 1.0);
    }
    for (k, q) in caps.iter().enumerate() {
        lp.add_row((0..ne).map(|e| (e * kk + k, catalog.layer_sizes[e])).collect(), *q);
    }
    let offset = base_revenue(kk, rates, econ) - base_cost(catalog, geometry, econ);

    // Start from the all-ones point: every weight is 1/(1+τ).
    let mut prev = vec![1.0; n];
    let mut weights: Vec<f64> = cluster_masses(&prev, catalog, kk).iter().map(|m| 1.0 / (m + opts.tau)).collect();
    lp.objective = coefficients(&weights, catalog, geometry, econ, rates);
    let mut simplex = Simplex::new(&lp)?;
    let to_internal = |e: Error| match e {
        Error::Infeasible | Error::Unbounded => Error::Internal(format!("relaxation LP failed: {e}")),
        other => other,
    };
    let first = simplex.solve().map_err(to_internal)?;
    let upper_bound = first.objective + offset;
    let mut sol = first;
    let mut iterations = 1;
    let mut converged = false;
    loop {
        let change = sol.x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prev = sol.x.clone();
        if change < opts.eps {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        weights = cluster_masses(&prev, catalog, kk).iter().map(|m| 1.0 / (m + opts.tau)).collect();
        simplex.set_objective(&coefficients(&weights, catalog, geometry, econ, rates))?;
        sol = simplex.solve().map_err(to_internal)?;
        iterations += 1;
    }
    let xt = sol.x;
    let objective = relaxed_ece(&xt, catalog, geometry, econ, rates, opts.tau)?;
    Ok(RelaxedPlacement {
        objective,
        upper_bound,
        iterations,
        converged,
        capacity_duals: sol.duals[ne..].to_vec(),
        xt,
    })
}
