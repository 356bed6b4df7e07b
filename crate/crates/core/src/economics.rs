//! Power model, revenue, cost and ECE of a layer placement.

use crate::content::Catalog;
use crate::error::{invalid, Result};
use crate::geometry::{esr_mbs, esr_sbs_cluster, McConfig, NetworkGeometry, QuadConfig};

/// Mass threshold above which a cluster counts as active.
pub const ACTIVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicModel {
    pub zeta_s: f64,
    pub zeta_m: f64,
    pub p_fix_s: f64,
    pub p_fix_m: f64,
    /// W per cached bit.
    pub c_ca: f64,
    /// W per backhauled bit.
    pub c_bh: f64,
    /// Currency per Joule.
    pub k_c: f64,
    /// Currency per bit.
    pub k_r: f64,
}

impl EconomicModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("zeta_s", self.zeta_s),
            ("zeta_m", self.zeta_m),
            ("P_fix_s", self.p_fix_s),
            ("P_fix_m", self.p_fix_m),
            ("c_ca", self.c_ca),
            ("c_bh", self.c_bh),
            ("k_c", self.k_c),
            ("k_r", self.k_r),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be a nonnegative number")));
            }
        }
        Ok(())
    }

    /// Per-SBS power of an active SBS: `ζ_s P_s + P_fix,s`.
    pub fn sbs_active_power(&self, geometry: &NetworkGeometry) -> f64 {
        self.zeta_s * geometry.p_s + self.p_fix_s
    }
}

/// ESRs per cluster and for the nearest MBS, with the reference rates they
/// are priced against.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub r_k: Vec<f64>,
    pub r_k_half_width: Vec<f64>,
    pub r_m0: f64,
    r_ref_s: f64,
    r_ref_m: f64,
}

impl RateTable {
    pub fn new(geometry: &NetworkGeometry, r_k: Vec<f64>, r_m0: f64) -> RateTable {
        let n = r_k.len();
        RateTable { r_k, r_k_half_width: vec![0.0; n], r_m0, r_ref_s: geometry.r_ref_s(), r_ref_m: geometry.r_ref_m() }
    }

    pub fn r_ref_s(&self) -> f64 {
        self.r_ref_s
    }

    pub fn r_ref_m(&self) -> f64 {
        self.r_ref_m
    }

    /// Priced SBS rate `R_ref,s log2(1 + R_k / R_ref,s)`.
    pub fn value_sbs(&self, k: usize) -> f64 {
        self.r_ref_s * (self.r_k[k] / self.r_ref_s).ln_1p() / std::f64::consts::LN_2
    }

    /// Priced MBS rate `R_ref,m log2(1 + R_m0 / R_ref,m)`.
    pub fn value_mbs(&self) -> f64 {
        self.r_ref_m * (self.r_m0 / self.r_ref_m).ln_1p() / std::f64::consts::LN_2
    }

    fn check(&self, clusters: usize) -> Result<()> {
        if self.r_k.len() != clusters {
            return Err(invalid(format!("rate table has {} cluster rates, need {clusters}", self.r_k.len())));
        }
        if self.r_k.iter().chain(std::iter::once(&self.r_m0)).any(|r| !r.is_finite()) {
            return Err(invalid("rate table holds a non-finite rate"));
        }
        Ok(())
    }
}

pub fn compute_rate_table(geometry: &NetworkGeometry, mc: &McConfig, quad: &QuadConfig) -> Result<RateTable> {
    geometry.validate()?;
    let mut r_k = Vec::new();
    let mut hw = Vec::new();
    for k in 0..geometry.cluster_count() {
        let e = esr_sbs_cluster(k, geometry, mc, quad)?;
        r_k.push(e.mean);
        hw.push(e.half_width_95);
    }
    let mut table = RateTable::new(geometry, r_k, esr_mbs(geometry, quad)?);
    table.r_k_half_width = hw;
    Ok(table)
}

/// Binary layer caching indicators with the cluster cache budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub files: usize,
    pub layers: usize,
    pub clusters: usize,
    /// Index `(f * L + l) * K + k`.
    pub x: Vec<bool>,
    /// Cluster budgets `M_k` in bits (shared by the `S̄_k` SBSs of the cluster).
    pub cluster_budgets: Vec<f64>,
    pub total_budget: f64,
}

impl Placement {
    pub fn empty(files: usize, layers: usize, cluster_budgets: Vec<f64>) -> Placement {
        let clusters = cluster_budgets.len();
        let total_budget = cluster_budgets.iter().sum();
        Placement { files, layers, clusters, x: vec![false; files * layers * clusters], cluster_budgets, total_budget }
    }

    /// Empty placement whose every SBS holds `q` bits.
    pub fn with_per_sbs_budget(catalog: &Catalog, geometry: &NetworkGeometry, q: f64) -> Placement {
        let budgets = geometry.cluster_sizes().iter().map(|s| q * *s as f64).collect();
        Placement::empty(catalog.file_count, catalog.layer_count, budgets)
    }

    #[inline]
    pub fn idx(&self, f: usize, l: usize, k: usize) -> usize {
        (f * self.layers + l) * self.clusters + k
    }

    #[inline]
    pub fn get(&self, f: usize, l: usize, k: usize) -> bool {
        self.x[self.idx(f, l, k)]
    }

    pub fn set(&mut self, f: usize, l: usize, k: usize, v: bool) {
        let i = self.idx(f, l, k);
        self.x[i] = v;
    }

    /// Bits stored by each SBS of cluster `k`.
    pub fn per_sbs_load(&self, k: usize, catalog: &Catalog) -> f64 {
        let mut load = 0.0;
        for f in 0..self.files {
            for l in 0..self.layers {
                if self.get(f, l, k) {
                    load += catalog.size(f, l);
                }
            }
        }
        load
    }

    pub fn cached_count(&self) -> usize {
        self.x.iter().filter(|v| **v).count()
    }

    /// Checks single-copy, per-SBS capacity and total budget constraints.
    pub fn check(&self, catalog: &Catalog, geometry: &NetworkGeometry) -> Result<()> {
        if self.files != catalog.file_count || self.layers != catalog.layer_count || self.clusters != geometry.cluster_count() {
            return Err(invalid("placement shape does not match catalog and geometry"));
        }
        for f in 0..self.files {
            for l in 0..self.layers {
                let copies = (0..self.clusters).filter(|k| self.get(f, l, *k)).count();
                if copies > 1 {
                    return Err(invalid(format!("layer ({},{}) cached in {copies} clusters", f + 1, l + 1)));
                }
            }
        }
        for k in 0..self.clusters {
            let s = geometry.cluster_size(k) as f64;
            if s * self.per_sbs_load(k, catalog) > self.cluster_budgets[k] {
                return Err(invalid(format!("cluster {} exceeds its cache budget", k + 1)));
            }
        }
        if self.cluster_budgets.iter().sum::<f64>() > self.total_budget {
            return Err(invalid("cluster budgets exceed the total budget"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub transmit: f64,
    pub caching: f64,
    pub backhaul: f64,
    pub fixed: f64,
    pub total: f64,
}

fn cluster_mass(placement: &Placement, catalog: &Catalog, k: usize) -> f64 {
    let mut m = 0.0;
    for f in 0..placement.files {
        for l in 0..placement.layers {
            if placement.get(f, l, k) {
                m += catalog.prob(f, l);
            }
        }
    }
    m
}

fn check_shapes(placement: &Placement, catalog: &Catalog, geometry: &NetworkGeometry) -> Result<()> {
    if placement.files != catalog.file_count
        || placement.layers != catalog.layer_count
        || placement.clusters != geometry.cluster_count()
    {
        return Err(invalid("placement shape does not match catalog and geometry"));
    }
    Ok(())
}

pub fn power_breakdown(
    placement: &Placement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
) -> Result<PowerBreakdown> {
    check_shapes(placement, catalog, geometry)?;
    let mut transmit = econ.zeta_m * geometry.p_m;
    let mut fixed = econ.p_fix_m;
    let mut caching = 0.0;
    let mut backhaul = 0.0;
    for k in 0..placement.clusters {
        let s = geometry.cluster_size(k) as f64;
        if cluster_mass(placement, catalog, k) > ACTIVE_EPS {
            transmit += s * econ.zeta_s * geometry.p_s;
            fixed += s * econ.p_fix_s;
        }
        for f in 0..placement.files {
            for l in 0..placement.layers {
                let c = catalog.size(f, l);
                if placement.get(f, l, k) {
                    caching += econ.c_ca * c * s;
                } else {
                    backhaul += catalog.prob(f, l) * econ.c_bh * c;
                }
            }
        }
    }
    Ok(PowerBreakdown { transmit, caching, backhaul, fixed, total: transmit + caching + backhaul + fixed })
}

/// Revenue at an empty placement: every request is served by the MBS.
pub fn base_revenue(clusters: usize, rates: &RateTable, econ: &EconomicModel) -> f64 {
    clusters as f64 * econ.k_r * rates.value_mbs()
}

/// Cost at an empty placement.
pub fn base_cost(catalog: &Catalog, geometry: &NetworkGeometry, econ: &EconomicModel) -> f64 {
    let mut bh = 0.0;
    for f in 0..catalog.file_count {
        for l in 0..catalog.layer_count {
            bh += catalog.prob(f, l) * econ.c_bh * catalog.size(f, l);
        }
    }
    econ.k_c * (geometry.cluster_count() as f64 * bh + econ.zeta_m * geometry.p_m + econ.p_fix_m)
}

pub fn revenue(placement: &Placement, catalog: &Catalog, rates: &RateTable, econ: &EconomicModel) -> Result<f64> {
    rates.check(placement.clusters)?;
    let vm = rates.value_mbs();
    let mut gain = 0.0;
    for k in 0..placement.clusters {
        let dv = rates.value_sbs(k) - vm;
        for f in 0..placement.files {
            for l in 0..placement.layers {
                if placement.get(f, l, k) {
                    gain += catalog.prob(f, l) * dv;
                }
            }
        }
    }
    Ok(econ.k_r * gain + base_revenue(placement.clusters, rates, econ))
}

pub fn total_cost(
    placement: &Placement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
) -> Result<f64> {
    check_shapes(placement, catalog, geometry)?;
    let a_s = econ.sbs_active_power(geometry);
    let mut var = 0.0;
    for k in 0..placement.clusters {
        let s = geometry.cluster_size(k) as f64;
        if cluster_mass(placement, catalog, k) > ACTIVE_EPS {
            var += s * a_s;
        }
        for f in 0..placement.files {
            for l in 0..placement.layers {
                if placement.get(f, l, k) {
                    var += catalog.size(f, l) * (econ.c_ca * s - catalog.prob(f, l) * econ.c_bh);
                }
            }
        }
    }
    Ok(econ.k_c * var + base_cost(catalog, geometry, econ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EceReport {
    pub ece: f64,
    pub revenue: f64,
    pub cost: f64,
}

pub fn evaluate(
    placement: &Placement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
) -> Result<EceReport> {
    let revenue = revenue(placement, catalog, rates, econ)?;
    let cost = total_cost(placement, catalog, geometry, econ)?;
    Ok(EceReport { ece: revenue - cost, revenue, cost })
}

pub fn ece(
    placement: &Placement,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
) -> Result<f64> {
    Ok(evaluate(placement, catalog, geometry, econ, rates)?.ece)
}

/// Marginal ECE `z_{f,l,k}` of an entry at relaxed value `xt` (0-based indices).
#[allow(clippy::too_many_arguments)]
pub fn marginal_ece(
    f: usize,
    l: usize,
    k: usize,
    xt: f64,
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&xt) {
        return Err(invalid(format!("relaxed indicator {xt} outside [0, 1]")));
    }
    rates.check(geometry.cluster_count())?;
    let p = catalog.prob(f, l);
    let c = catalog.size(f, l);
    let s = geometry.cluster_size(k) as f64;
    let vm = rates.value_mbs();
    let vk = rates.value_sbs(k);
    let active = if p * xt > ACTIVE_EPS { 1.0 } else { 0.0 };
    Ok(econ.k_r * p * (xt * (vk - vm) + vm)
        - econ.k_c
            * (active * s * econ.sbs_active_power(geometry)
                + xt * c * (econ.c_ca * s - p * econ.c_bh)
                + c * p * econ.c_bh))
}

/// ECE of a fractional placement with each cluster's activation smoothed to
/// `m / (m + τ)`, `m` being the cluster's cached request mass.
pub fn relaxed_ece(
    xt: &[f64],
    catalog: &Catalog,
    geometry: &NetworkGeometry,
    econ: &EconomicModel,
    rates: &RateTable,
    tau: f64,
) -> Result<f64> {
    let kk = geometry.cluster_count();
    rates.check(kk)?;
    if xt.len() != catalog.entries() * kk {
        return Err(invalid("relaxed placement has wrong shape"));
    }
    let vm = rates.value_mbs();
    let a_s = econ.sbs_active_power(geometry);
    let mut rev = 0.0;
    let mut var = 0.0;
    for k in 0..kk {
        let s = geometry.cluster_size(k) as f64;
        let dv = rates.value_sbs(k) - vm;
        let mut mass = 0.0;
        for e in 0..catalog.entries() {
            let v = xt[e * kk + k];
            let p = catalog.layer_prob[e];
            mass += p * v;
            rev += p * v * dv;
            var += v * catalog.layer_sizes[e] * (econ.c_ca * s - p * econ.c_bh);
        }
        var += mass / (mass + tau) * s * a_s;
    }
    Ok(econ.k_r * rev + base_revenue(kk, rates, econ) - econ.k_c * var - base_cost(catalog, geometry, econ))
}
