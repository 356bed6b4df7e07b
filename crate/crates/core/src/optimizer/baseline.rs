//! Most-popular-layer placement and the exhaustive oracle.

use crate::content::Catalog;
use crate::economics::{ece, EconomicModel, Placement, RateTable};
use crate::error::{invalid, Error, Result};
use crate::geometry::NetworkGeometry;

pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Files by descending popularity, layers ascending, each into the first
/// cluster with room.
pub fn mplp_baseline(catalog: &Catalog, geometry: &NetworkGeometry, cluster_budgets: &[f64]) -> Result<Placement> {
    let kk = geometry.cluster_count();
    if cluster_budgets.len() != kk {
        return Err(invalid("need one budget per cluster"));
    }
    let mut files: Vec<usize> = (0..catalog.file_count).collect();
    files.sort_by(|a, b| catalog.file_popularity[*b].total_cmp(&catalog.file_popularity[*a]).then(a.cmp(b)));
    let mut placement = Placement::empty(catalog.file_count, catalog.layer_count, cluster_budgets.to_vec());
    let mut load = vec![0.0; kk];
    for f in files {
        for l in 0..catalog.layer_count {
            let c = catalog.size(f, l);
            if let Some(k) = (0..kk).find(|&k| geometry.cluster_size(k) as f64 * (load[k] + c) <= cluster_budgets[k]) {
                placement.set(f, l, k, true);
                load[k] += c;
            }
        }
    }
    Ok(placement)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub placement: Placement,
    pub ece: f64,
    pub candidates: u64,
}

/// Exhaustive search over every feasible placement. Among equal maxima the
/// lexicographically smallest indicator vector wins.
pub fn brute_force_placement(
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
    cluster_budgets: &[f64],
) -> Result<BruteForceResult> {
    let kk = geometry.cluster_count();
    if cluster_budgets.len() != kk {
        return Err(invalid("need one budget per cluster"));
    }
    let ne = catalog.entries();
    let count = ((kk + 1) as f64).powi(ne as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::Oversize(count));
    }
    // Per-entry choices in increasing lexicographic order of the indicator
    // bits: none (all zero), then cluster K-1, ..., cluster 0.
    let choices: Vec<Option<usize>> = std::iter::once(None).chain((0..kk).rev().map(Some)).collect();
    let mut digits = vec![0usize; ne];
    let mut best: Option<(f64, Placement)> = None;
    let mut candidates = 0u64;
    loop {
        let mut p = Placement::empty(catalog.file_count, catalog.layer_count, cluster_budgets.to_vec());
        let mut load = vec![0.0; kk];
        for (e, d) in digits.iter().enumerate() {
            if let Some(k) = choices[*d] {
                p.x[e * kk + k] = true;
                load[k] += catalog.layer_sizes[e];
            }
        }
        let feasible = (0..kk).all(|k| geometry.cluster_size(k) as f64 * load[k] <= cluster_budgets[k]);
        if feasible {
            candidates += 1;
            let v = ece(&p, catalog, geometry, econ, rates)?;
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, p));
            }
        }
        // Odometer with entry 0 most significant.
        let mut pos = ne;
        loop {
            if pos == 0 {
                let (ece, placement) = best.expect("empty placement is always feasible");
                return Ok(BruteForceResult { placement, ece, candidates });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < choices.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}
