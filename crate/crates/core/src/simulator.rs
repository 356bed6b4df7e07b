//! Monte Carlo realization of the two-tier Poisson network with cooperative
//! SBS clusters, ideal SIC and Rayleigh fading.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{McEstimate, NetworkGeometry};
use crate::seeds::{stream, TAG_REALIZATION};

pub const DEFAULT_WINDOW_POINTS: f64 = 1000.0;

/// Simulation disk radii, one per tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub r_sbs: f64,
    pub r_mbs: f64,
}

impl Window {
    pub fn uniform(r_max: f64) -> Window {
        Window { r_sbs: r_max, r_mbs: r_max }
    }

    /// Radii holding `points` expected points per tier, never below the minimum
    /// admissible radii.
    pub fn for_geometry(geometry: &NetworkGeometry, points: f64) -> Window {
        let d_k = *geometry.radii.last().expect("validated geometry");
        Window {
            r_sbs: (2.0 * d_k).max((points / (PI * geometry.lambda_s)).sqrt()),
            r_mbs: (3.0 / (PI * geometry.lambda_m).sqrt()).max((points / (PI * geometry.lambda_m)).sqrt()),
        }
    }

    fn check(&self, geometry: &NetworkGeometry) -> Result<()> {
        let d_k = *geometry.radii.last().expect("validated geometry");
        if !(self.r_sbs >= 2.0 * d_k) {
            return Err(invalid(format!("SBS window {} m is below 2 d_K = {} m", self.r_sbs, 2.0 * d_k)));
        }
        let min_m = 3.0 / (PI * geometry.lambda_m).sqrt();
        if !(self.r_mbs >= min_m) {
            return Err(invalid(format!("MBS window {} m is below {min_m} m", self.r_mbs)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    /// Poisson points first, then any points force-placed to fill clusters.
    pub sbs_points: Vec<(f64, f64)>,
    pub natural_sbs: usize,
    pub mbs_points: Vec<(f64, f64)>,
    /// Member indices into `sbs_points`, nearest first, per cluster.
    pub cluster_members: Vec<Vec<usize>>,
    pub rng_seed: u64,
}

impl NetworkRealization {
    pub fn sbs_distance(&self, i: usize) -> f64 {
        let (x, y) = self.sbs_points[i];
        x.hypot(y)
    }

    pub fn is_forced(&self, i: usize) -> bool {
        i >= self.natural_sbs
    }
}

fn disk_points<R: Rng>(rng: &mut R, lambda: f64, radius: f64) -> Vec<(f64, f64)> {
    let mean = lambda * PI * radius * radius;
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let th = 2.0 * PI * rng.random::<f64>();
            (r * th.cos(), r * th.sin())
        })
        .collect()
}

fn realize_with<R: Rng>(geometry: &NetworkGeometry, window: &Window, rng: &mut R, seed: u64) -> NetworkRealization {
    let mut sbs_points = disk_points(rng, geometry.lambda_s, window.r_sbs);
    let natural_sbs = sbs_points.len();
    let mbs_points = disk_points(rng, geometry.lambda_m, window.r_mbs);

    let k_count = geometry.cluster_count();
    let mut by_annulus: Vec<Vec<(f64, usize)>> = vec![Vec::new(); k_count];
    for (i, (x, y)) in sbs_points.iter().enumerate() {
        let r = x.hypot(*y);
        if let Some(k) = geometry.radii.iter().position(|d| r <= *d) {
            if k == 0 || r > geometry.radii[k - 1] {
                by_annulus[k].push((r, i));
            }
        }
    }
    let mut cluster_members = Vec::with_capacity(k_count);
    for (k, mut found) in by_annulus.into_iter().enumerate() {
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let need = geometry.cluster_size(k);
        let mut members: Vec<(f64, usize)> = found.into_iter().take(need).collect();
        let lo2 = geometry.inner_radius(k).powi(2);
        let hi2 = geometry.radii[k].powi(2);
        while members.len() < need {
            // Open at the inner edge so the point stays inside (d_{k-1}, d_k].
            let u = 1.0 - rng.random::<f64>();
            let r = (lo2 + u * (hi2 - lo2)).sqrt().max(1e-9);
            let th = 2.0 * PI * rng.random::<f64>();
            sbs_points.push((r * th.cos(), r * th.sin()));
            members.push((r, sbs_points.len() - 1));
        }
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cluster_members.push(members.into_iter().map(|m| m.1).collect());
    }
    NetworkRealization { sbs_points, natural_sbs, mbs_points, cluster_members, rng_seed: seed }
}

pub fn realize_network(geometry: &NetworkGeometry, window: &Window, seed: u64) -> Result<NetworkRealization> {
    geometry.validate()?;
    window.check(geometry)?;
    let mut rng = stream(seed, TAG_REALIZATION, 0);
    Ok(realize_with(geometry, window, &mut rng, seed))
}

/// SIR of a coherent sum of serving links over incoherent interference.
/// `serving_fading` holds complex gains as (re, im); `interferer_gains` are
/// power gains. Returns `+inf` when there is no interference.
pub fn sir_from_parts(
    serving_dists: &[f64],
    serving_fading: &[(f64, f64)],
    interferer_dists: &[f64],
    interferer_gains: &[f64],
    alpha: f64,
) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (r, h) in serving_dists.iter().zip(serving_fading) {
        let a = r.powf(-alpha / 2.0);
        re += h.0 * a;
        im += h.1 * a;
    }
    let interference: f64 = interferer_dists
        .iter()
        .zip(interferer_gains)
        .map(|(r, g)| g * r.powf(-alpha))
        .sum();
    let signal = re * re + im * im;
    if interference == 0.0 {
        f64::INFINITY
    } else {
        signal / interference
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    (a * s, b * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirSample {
    pub sbs: Vec<f64>,
    pub mbs: f64,
}

/// Per-cluster SIRs after ideal cancellation of clusters `1..k`, and the
/// nearest-MBS SIR, with fresh fading drawn from `rng`.
///
/// Forced cluster points serve only their own cluster; interference comes
/// from the Poisson points outside clusters `1..k`.
pub fn measure_sir<R: Rng>(realization: &NetworkRealization, geometry: &NetworkGeometry, rng: &mut R) -> SirSample {
    let a = geometry.alpha_s;
    let k_count = realization.cluster_members.len();
    let mut cluster_of = vec![usize::MAX; realization.sbs_points.len()];
    for (k, members) in realization.cluster_members.iter().enumerate() {
        for &i in members {
            cluster_of[i] = k;
        }
    }
    // Natural interference power split by owning cluster; index K is "none".
    let mut power = vec![0.0; k_count + 1];
    let mut serving: Vec<(f64, f64)> = vec![(0.0, 0.0); k_count];
    for i in 0..realization.sbs_points.len() {
        let r = realization.sbs_distance(i).max(1e-9);
        let k = cluster_of[i];
        if k != usize::MAX {
            let (hr, hi) = complex_gaussian(rng);
            let amp = r.powf(-a / 2.0);
            serving[k].0 += hr * amp;
            serving[k].1 += hi * amp;
            if !realization.is_forced(i) {
                power[k] += (hr * hr + hi * hi) * r.powf(-a);
            }
        } else if !realization.is_forced(i) {
            let g: f64 = Exp1.sample(rng);
            power[k_count] += g * r.powf(-a);
        }
    }
    let sbs = (0..k_count)
        .map(|k| {
            let interference: f64 = power[k_count] + power[k + 1..k_count].iter().sum::<f64>();
            let signal = serving[k].0.powi(2) + serving[k].1.powi(2);
            if interference == 0.0 {
                f64::INFINITY
            } else {
                signal / interference
            }
        })
        .collect();

    let am = geometry.alpha_m;
    let mut best: Option<(f64, usize)> = None;
    for (j, (x, y)) in realization.mbs_points.iter().enumerate() {
        let r = x.hypot(*y);
        if best.is_none_or(|b| r < b.0) {
            best = Some((r, j));
        }
    }
    let mbs = match best {
        None => 0.0,
        Some((r0, j0)) => {
            let g0: f64 = Exp1.sample(rng);
            let mut interference = 0.0;
            for (j, (x, y)) in realization.mbs_points.iter().enumerate() {
                if j != j0 {
                    let g: f64 = Exp1.sample(rng);
                    interference += g * x.hypot(*y).max(1e-9).powf(-am);
                }
            }
            let signal = g0 * r0.max(1e-9).powf(-am);
            if interference == 0.0 {
                f64::INFINITY
            } else {
                signal / interference
            }
        }
    };
    SirSample { sbs, mbs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTable {
    pub gammas: Vec<f64>,
    pub stp: Vec<McEstimate>,
    /// Conditional rate in bits/s; `None` when no realization met the threshold.
    pub esr: Vec<Option<McEstimate>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub sbs: Vec<SimTable>,
    pub mbs: SimTable,
    pub realizations: usize,
}

fn table(sirs: &[f64], gammas: &[f64], bandwidth: f64) -> SimTable {
    let mut stp = Vec::with_capacity(gammas.len());
    let mut esr = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let hits: Vec<f64> = sirs.iter().map(|s| if *s >= g { 1.0 } else { 0.0 }).collect();
        stp.push(McEstimate::from_samples(&hits));
        // Infinite SIR counts as success but carries no finite rate.
        let rates: Vec<f64> = sirs
            .iter()
            .filter(|s| **s >= g && s.is_finite())
            .map(|s| bandwidth * s.ln_1p() / std::f64::consts::LN_2)
            .collect();
        esr.push(if rates.is_empty() { None } else { Some(McEstimate::from_samples(&rates)) });
    }
    SimTable { gammas: gammas.to_vec(), stp, esr }
}

pub fn simulate_sirs(geometry: &NetworkGeometry, window: &Window, realizations: usize, seed: u64) -> Result<Vec<SirSample>> {
    geometry.validate()?;
    window.check(geometry)?;
    Ok((0..realizations)
        .into_par_iter()
        .map(|i| {
            let mut rng: ChaCha8Rng = stream(seed, TAG_REALIZATION, i as u64);
            let net = realize_with(geometry, window, &mut rng, seed);
            measure_sir(&net, geometry, &mut rng)
        })
        .collect())
}

/// Empirical STP and conditional ESR tables for every cluster and the MBS.
pub fn estimate_metrics(
    geometry: &NetworkGeometry,
    sbs_gammas: &[f64],
    mbs_gammas: &[f64],
    realizations: usize,
    seed: u64,
    window: &Window,
) -> Result<SimMetrics> {
    if realizations < 1000 {
        return Err(invalid("need at least 1000 realizations"));
    }
    let samples = simulate_sirs(geometry, window, realizations, seed)?;
    let sbs = (0..geometry.cluster_count())
        .map(|k| {
            let col: Vec<f64> = samples.iter().map(|s| s.sbs[k]).collect();
            table(&col, sbs_gammas, geometry.w_s)
        })
        .collect();
    let col: Vec<f64> = samples.iter().map(|s| s.mbs).collect();
    let mbs = table(&col, mbs_gammas, geometry.w_m);
    Ok(SimMetrics { sbs, mbs, realizations })
}
