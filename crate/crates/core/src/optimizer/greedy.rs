//! Greedy rounding of the relaxed placement and the stability check.

use std::cmp::Ordering;

use super::relaxed::RelaxedPlacement;
use crate::content::Catalog;
use crate::economics::{marginal_ece, EconomicModel, Placement, RateTable};
use crate::error::{invalid, Result};
use crate::geometry::NetworkGeometry;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub placement: Placement,
    /// Marginal ECE per entry, index `(f * L + l) * K + k`.
    pub z: Vec<f64>,
    /// Entries cached, in acceptance order, as `(f, l, k)`.
    pub order: Vec<(usize, usize, usize)>,
}

pub fn z_table(
    xt: &[f64],
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
) -> Result<Vec<f64>> {
    let kk = geometry.cluster_count();
    if xt.len() != catalog.entries() * kk {
        return Err(invalid("relaxed placement has wrong shape"));
    }
    let mut z = Vec::with_capacity(xt.len());
    for f in 0..catalog.file_count {
        for l in 0..catalog.layer_count {
            for k in 0..kk {
                let v = xt[catalog.idx(f, l) * kk + k].clamp(0.0, 1.0);
                z.push(marginal_ece(f, l, k, v, catalog, geometry, econ, rates)?);
            }
        }
    }
    Ok(z)
}

/// Processing order: larger `z` first, then smaller `C_f / p(f)`, then the
/// smaller file, then the smaller layer, then the faster cluster, then the
/// smaller cluster index.
fn priority(
    a: (usize, usize, usize),
    b: (usize, usize, usize),
    z: &[f64],
    catalog: &Catalog,
    rates: &RateTable,
    kk: usize,
) -> Ordering {
    let za = z[catalog.idx(a.0, a.1) * kk + a.2];
    let zb = z[catalog.idx(b.0, b.1) * kk + b.2];
    let ratio = |f: usize| catalog.file_sizes[f] / catalog.file_popularity[f];
    zb.total_cmp(&za)
        .then_with(|| if a.0 != b.0 { ratio(a.0).total_cmp(&ratio(b.0)) } else { Ordering::Equal })
        .then(a.0.cmp(&b.0))
        .then(a.1.cmp(&b.1))
        .then_with(|| rates.r_k[b.2].total_cmp(&rates.r_k[a.2]))
        .then(a.2.cmp(&b.2))
}

/// Greedy rounding under cluster budgets `M_k` shared by the `S̄_k` SBSs of
/// each cluster.
pub fn greedy_round_alg1(
    relaxed: &RelaxedPlacement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
    cluster_budgets: &[f64],
) -> Result<GreedyOutcome> {
    let kk = geometry.cluster_count();
    if cluster_budgets.len() != kk {
        return Err(invalid("need one budget per cluster"));
    }
    let z = z_table(&relaxed.xt, catalog, geometry, econ, rates)?;
    let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(z.len());
    for f in 0..catalog.file_count {
        for l in 0..catalog.layer_count {
            for k in 0..kk {
                entries.push((f, l, k));
            }
        }
    }
    entries.sort_by(|a, b| priority(*a, *b, &z, catalog, rates, kk));

    let mut placement = Placement::empty(catalog.file_count, catalog.layer_count, cluster_budgets.to_vec());
    let mut load = vec![0.0; kk];
    let mut taken = vec![false; catalog.entries()];
    let mut order = Vec::new();
    for (f, l, k) in entries {
        let e = catalog.idx(f, l);
        if taken[e] {
            continue;
        }
        let c = catalog.size(f, l);
        let s = geometry.cluster_size(k) as f64;
        if s * (load[k] + c) <= cluster_budgets[k] {
            placement.set(f, l, k, true);
            load[k] += c;
            taken[e] = true;
            order.push((f, l, k));
        }
    }
    Ok(GreedyOutcome { placement, z, order })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Each pair is two cached `(f, l, k)` entries that would both gain by swapping clusters.
    pub blocking_pairs: Vec<((usize, usize, usize), (usize, usize, usize))>,
}

/// Looks for two cached layers in different clusters whose cluster swap fits
/// both budgets and strictly raises both marginal ECEs.
pub fn check_stability(
    placement: &Placement,
    z: &[f64],
    catalog: &Catalog,
    geometry: &NetworkGeometry,
) -> Result<StabilityReport> {
    let kk = placement.clusters;
    if z.len() != placement.x.len() {
        return Err(invalid("z table does not match placement"));
    }
    let cached: Vec<(usize, usize, usize)> = (0..placement.files)
        .flat_map(|f| (0..placement.layers).flat_map(move |l| (0..kk).map(move |k| (f, l, k))))
        .filter(|&(f, l, k)| placement.get(f, l, k))
        .collect();
    let load: Vec<f64> = (0..kk).map(|k| placement.per_sbs_load(k, catalog)).collect();
    let fits = |k: usize, new_load: f64| geometry.cluster_size(k) as f64 * new_load <= placement.cluster_budgets[k];
    let zz = |f: usize, l: usize, k: usize| z[placement.idx(f, l, k)];
    let mut blocking_pairs = Vec::new();
    for (a, &(fi, li, ni)) in cached.iter().enumerate() {
        for &(fj, lj, nj) in &cached[a + 1..] {
            if ni == nj {
                continue;
            }
            let (ci, cj) = (catalog.size(fi, li), catalog.size(fj, lj));
            let both_gain = zz(fi, li, nj) > zz(fi, li, ni) && zz(fj, lj, ni) > zz(fj, lj, nj);
            if both_gain && fits(nj, load[nj] - cj + ci) && fits(ni, load[ni] - ci + cj) {
                blocking_pairs.push(((fi, li, ni), (fj, lj, nj)));
            }
        }
    }
    Ok(StabilityReport { stable: blocking_pairs.is_empty(), blocking_pairs })
}
