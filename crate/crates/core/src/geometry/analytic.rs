//! Coverage probabilities and ergodic service rates for the cooperative SBS
//! clusters and the nearest MBS.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rand::Rng;
use rayon::prelude::*;

use super::quad::{adaptive_simpson, gauss_kronrod};
use super::{McConfig, McEstimate, NetworkGeometry, QuadConfig};
use crate::error::{invalid, Error, Result};
use crate::seeds::{cluster_tag, stream, TAG_SBS_DISTANCES};

pub const MIN_DISTANCE: f64 = 1e-9;
pub const MIN_MC_SAMPLES: usize = 1000;

/// `G_a(b) = ∫_b^∞ dr / (1 + r^{a/2})`.
pub fn g_tail(a: f64, b: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::DivergentIntegral(a));
    }
    if !(b >= 0.0) {
        return Err(invalid(format!("tail integral lower limit must be >= 0, got {b}")));
    }
    if a == 4.0 {
        return Ok(g4(b));
    }
    Ok(g_generic(a, b))
}

/// The quadrature route of [`g_tail`], valid for every `a > 2` including 4.
pub fn g_tail_quadrature(a: f64, b: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::DivergentIntegral(a));
    }
    if !(b >= 0.0) {
        return Err(invalid(format!("tail integral lower limit must be >= 0, got {b}")));
    }
    Ok(g_generic(a, b))
}

#[inline]
fn g4(b: f64) -> f64 {
    if b.is_infinite() {
        0.0
    } else if b > 1.0 {
        (1.0 / b).atan()
    } else {
        FRAC_PI_2 - b.atan()
    }
}

const SERIES_START: f64 = 2.0;

fn g_generic(a: f64, b: f64) -> f64 {
    let c = 0.5 * a;
    if b.is_infinite() {
        return 0.0;
    }
    let split = b.max(SERIES_START);
    let tail = power_series_tail(c, split);
    if b >= SERIES_START {
        return tail;
    }
    // r = b + t / (1 - t) maps [b, split] onto [0, t_end].
    let span = split - b;
    let t_end = span / (1.0 + span);
    let body = gauss_kronrod(
        |t| {
            let om = 1.0 - t;
            let r = b + t / om;
            1.0 / ((1.0 + r.powf(c)) * om * om)
        },
        0.0,
        t_end,
        1e-13,
    );
    body + tail
}

/// `∫_B^∞ dr / (1 + r^c)` for `B > 1` via the alternating expansion in `r^{-c}`.
fn power_series_tail(c: f64, big_b: f64) -> f64 {
    let ratio = big_b.powf(-c);
    let mut pow = big_b.powf(1.0 - c);
    let mut sum = 0.0;
    for n in 0..400 {
        let denom = (n as f64 + 1.0) * c - 1.0;
        let term = pow / denom;
        if n % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        pow *= ratio;
    }
    sum
}

#[inline]
fn tail(a: f64, b: f64) -> f64 {
    if a == 4.0 {
        g4(b)
    } else {
        g_generic(a, b)
    }
}

/// `y · G_a(d² / y)`: the interference exponent scale for cluster outer radius `d`.
#[inline]
fn cluster_exponent(a: f64, y: f64, d: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    y * tail(a, d * d / y)
}

fn k1_of(distances: &[f64], alpha: f64) -> f64 {
    let s: f64 = distances.iter().map(|x| x.max(MIN_DISTANCE).powf(-alpha)).sum();
    1.0 / s
}

fn cond_stp(k1: f64, gamma: f64, alpha: f64, lambda: f64, d_outer: f64) -> f64 {
    let y = (k1 * gamma).powf(2.0 / alpha);
    (-PI * lambda * cluster_exponent(alpha, y, d_outer)).exp()
}

/// Cluster (0-based) whose annulus contains the farthest distance.
fn infer_cluster(distances: &[f64], geometry: &NetworkGeometry) -> Result<usize> {
    let far = distances.iter().copied().fold(0.0, f64::max);
    geometry
        .radii
        .iter()
        .position(|d| far <= *d * (1.0 + 1e-12))
        .ok_or_else(|| invalid(format!("distance {far} m lies beyond the outermost cluster")))
}

/// STP of cooperative transmission from SBSs at the given distances,
/// conditioned on those distances.
pub fn conditional_stp_sbs(distances: &[f64], gamma: f64, geometry: &NetworkGeometry) -> Result<f64> {
    if distances.is_empty() {
        return Err(invalid("no serving distances"));
    }
    if distances.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("serving distances must be positive"));
    }
    if !(gamma > 0.0) {
        return Err(invalid("SIR threshold must be positive"));
    }
    let k = infer_cluster(distances, geometry)?;
    let k1 = k1_of(distances, geometry.alpha_s);
    Ok(cond_stp(k1, gamma, geometry.alpha_s, geometry.lambda_s, geometry.radii[k]))
}

/// `ρ(t) = t^{2/a} G_a(t^{-2/a})`.
pub fn mbs_rho(t: f64, a: f64) -> f64 {
    let y = t.powf(2.0 / a);
    y * tail(a, 1.0 / y)
}

pub fn stp_mbs(gamma_m: f64, alpha_m: f64) -> Result<f64> {
    if !(alpha_m > 2.0) {
        return Err(Error::DivergentIntegral(alpha_m));
    }
    if !(gamma_m > 0.0) {
        return Err(invalid("SIR threshold must be positive"));
    }
    Ok(1.0 / (mbs_rho(gamma_m, alpha_m) + 1.0))
}

fn check_cluster(k: usize, geometry: &NetworkGeometry, mc: &McConfig) -> Result<()> {
    if k >= geometry.cluster_count() {
        return Err(invalid(format!("cluster {} out of range 1..={}", k + 1, geometry.cluster_count())));
    }
    if mc.samples < MIN_MC_SAMPLES {
        return Err(invalid(format!("need at least {MIN_MC_SAMPLES} Monte Carlo samples")));
    }
    Ok(())
}

/// Inverse-CDF draw of the serving distances of cluster `k`.
pub fn sample_cluster_distances<R: Rng>(geometry: &NetworkGeometry, k: usize, rng: &mut R) -> Vec<f64> {
    let lo2 = geometry.inner_radius(k).powi(2);
    let hi2 = geometry.radii[k].powi(2);
    (0..geometry.cluster_size(k))
        .map(|_| {
            let u: f64 = rng.random();
            (lo2 + u * (hi2 - lo2)).sqrt().max(MIN_DISTANCE)
        })
        .collect()
}

fn cluster_k1_samples(k: usize, geometry: &NetworkGeometry, mc: &McConfig) -> Vec<f64> {
    let tag = cluster_tag(TAG_SBS_DISTANCES, k);
    (0..mc.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(mc.seed, tag, i as u64);
            k1_of(&sample_cluster_distances(geometry, k, &mut rng), geometry.alpha_s)
        })
        .collect()
}

/// Monte Carlo average of the conditional cluster STP over annulus-uniform distances.
pub fn stp_sbs_cluster(k: usize, gamma_s: f64, geometry: &NetworkGeometry, mc: &McConfig) -> Result<McEstimate> {
    check_cluster(k, geometry, mc)?;
    if !(gamma_s > 0.0) {
        return Err(invalid("SIR threshold must be positive"));
    }
    let (a, lam, d) = (geometry.alpha_s, geometry.lambda_s, geometry.radii[k]);
    let vals: Vec<f64> = cluster_k1_samples(k, geometry, mc)
        .into_par_iter()
        .map(|k1| cond_stp(k1, gamma_s, a, lam, d))
        .collect();
    Ok(McEstimate::from_samples(&vals))
}

/// `∫_γ^∞ g(t) / (1+t) dt` for nonincreasing `g` with `g(γ) <= 1`, computed in
/// `s = ln(1+t)` where the measure becomes `ds`.
fn log_measure_integral<G: Fn(f64) -> f64>(g: G, gamma: f64, quad: &QuadConfig) -> f64 {
    let s0 = gamma.ln_1p();
    let at = |s: f64| g(s.exp_m1());
    let mut s1 = s0 + 1.0;
    while at(s1) > 1e-15 && s1 < 700.0 {
        s1 += 1.0 + 0.25 * (s1 - s0);
    }
    adaptive_simpson(at, s0, s1, quad.abs_tol, quad.max_depth)
}

fn sbs_inner(k1: f64, geometry: &NetworkGeometry, d: f64, quad: &QuadConfig) -> f64 {
    let (a, lam, gamma) = (geometry.alpha_s, geometry.lambda_s, geometry.gamma_s);
    let scale = k1.powf(2.0 / a);
    let h = |t: f64| cluster_exponent(a, scale * t.powf(2.0 / a), d);
    let h0 = h(gamma);
    log_measure_integral(|t| (-PI * lam * (h(t) - h0)).exp(), gamma, quad)
}

/// Cluster ESR (bits/s): the per-distance conditional rate averaged over distances.
pub fn esr_sbs_cluster(
    k: usize,
    geometry: &NetworkGeometry,
    mc: &McConfig,
    quad: &QuadConfig,
) -> Result<McEstimate> {
    check_cluster(k, geometry, mc)?;
    let d = geometry.radii[k];
    let base = geometry.w_s * geometry.gamma_s.log2_1p();
    let vals: Vec<f64> = cluster_k1_samples(k, geometry, mc)
        .into_par_iter()
        .map(|k1| base + geometry.w_s / LN_2 * sbs_inner(k1, geometry, d, quad))
        .collect();
    Ok(McEstimate::from_samples(&vals))
}

/// Cluster rate conditioned jointly on the success event, `W E[log2(1+SIR) | SIR >= γ]`,
/// averaging numerator and denominator over distances separately.
pub fn esr_sbs_cluster_joint(
    k: usize,
    geometry: &NetworkGeometry,
    mc: &McConfig,
    quad: &QuadConfig,
) -> Result<f64> {
    check_cluster(k, geometry, mc)?;
    let (a, lam, d, gamma) = (geometry.alpha_s, geometry.lambda_s, geometry.radii[k], geometry.gamma_s);
    let pairs: Vec<(f64, f64)> = cluster_k1_samples(k, geometry, mc)
        .into_par_iter()
        .map(|k1| {
            let num = log_measure_integral(|t| cond_stp(k1, t, a, lam, d), gamma, quad);
            (num, cond_stp(k1, gamma, a, lam, d))
        })
        .collect();
    let num: f64 = pairs.iter().map(|p| p.0).sum();
    let den: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(geometry.w_s * gamma.log2_1p() + geometry.w_s / LN_2 * num / den)
}

/// Nearest-MBS ESR (bits/s): the per-distance conditional rate averaged over
/// the nearest-MBS distance, with `u = πλ_m x²` as the outer variable.
pub fn esr_mbs(geometry: &NetworkGeometry, quad: &QuadConfig) -> Result<f64> {
    let (a, gamma) = (geometry.alpha_m, geometry.gamma_m);
    if !(a > 2.0) {
        return Err(Error::DivergentIntegral(a));
    }
    if !(gamma > 0.0) {
        return Err(invalid("SIR threshold must be positive"));
    }
    let rho0 = mbs_rho(gamma, a);
    let inner = |u: f64| log_measure_integral(|t| (-u * (mbs_rho(t, a) - rho0)).exp(), gamma, quad);
    let outer = gauss_kronrod(
        |v| {
            let om = 1.0 - v;
            let u = v / om;
            if u > 745.0 {
                return 0.0;
            }
            (-u).exp() * inner(u) / (om * om)
        },
        0.0,
        1.0,
        quad.abs_tol,
    );
    Ok(geometry.w_m * gamma.log2_1p() + geometry.w_m / LN_2 * outer)
}

/// Nearest-MBS rate conditioned jointly on the success event.
pub fn esr_mbs_joint(geometry: &NetworkGeometry, quad: &QuadConfig) -> Result<f64> {
    let (a, gamma) = (geometry.alpha_m, geometry.gamma_m);
    let p0 = stp_mbs(gamma, a)?;
    let num = log_measure_integral(|t| 1.0 / (1.0 + mbs_rho(t, a)) / p0, gamma, quad);
    Ok(geometry.w_m * gamma.log2_1p() + geometry.w_m / LN_2 * num)
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table_geometry() -> NetworkGeometry {
        NetworkGeometry {
            lambda_s: 1.0 / (100.0f64.powi(2) * PI),
            lambda_m: 1.0 / (500.0f64.powi(2) * PI),
            alpha_s: 4.0,
            alpha_m: 4.0,
            radii: vec![10.0, 20.0, 50.0],
            cumulative_counts: vec![3, 6, 9],
            p_s: 0.2,
            p_m: 2.0,
            w_s: 10e6,
            w_m: 50e6,
            gamma_s: 10.0,
            gamma_m: 10f64.powf(0.5),
        }
    }

    fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    /// `∫_0^R dr/(1+r^c)` by trapezoid in `w = ln(1+r)`, plus a two-term tail.
    fn g_oracle(a: f64, b: f64) -> f64 {
        let c = a / 2.0;
        let big_r = 1e6;
        let body = trapezoid(
            |w: f64| {
                let r = b + w.exp_m1();
                w.exp() / (1.0 + r.powf(c))
            },
            0.0,
            (big_r - b).ln_1p(),
            2_000_000,
        );
        let tail = big_r.powf(1.0 - c) / (c - 1.0) - big_r.powf(1.0 - 2.0 * c) / (2.0 * c - 1.0);
        body + tail
    }

    #[test]
    fn g_tail_closed_forms() {
        assert_abs_diff_eq!(g_tail(4.0, 0.0).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(g_tail(4.0, 1.0).unwrap(), PI / 4.0, epsilon = 1e-15);
        assert!(matches!(g_tail(2.0, 1.0), Err(Error::DivergentIntegral(_))));
        assert!(matches!(g_tail(1.5, 1.0), Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn g_tail_generic_matches_trapezoid_oracle() {
        let c: f64 = 1.5;
        let exact0 = (PI / c) / (PI / c).sin();
        assert_abs_diff_eq!(g_tail(3.0, 0.0).unwrap(), exact0, epsilon = 1e-10);
        for (a, b) in [(3.0, 0.0), (3.0, 0.7), (3.5, 0.2), (5.0, 1.3), (2.5, 0.0)] {
            let q = g_tail(a, b).unwrap();
            let o = g_oracle(a, b);
            assert!((q - o).abs() < 1e-8, "a={a} b={b}: {q} vs {o}");
        }
    }

    #[test]
    fn g_tail_paths_agree_at_four() {
        for b in [0.0, 0.5, 1.0, 5.0] {
            let closed = g_tail(4.0, b).unwrap();
            let quad = g_tail_quadrature(4.0, b).unwrap();
            assert!((closed - quad).abs() < 1e-8, "b={b}: {closed} vs {quad}");
        }
    }

    #[test]
    fn conditional_stp_matches_laplace_integral() {
        let g = table_geometry();
        let (x, gamma, d): (f64, f64, f64) = (10.0, 10.0, 10.0);
        let s = x.powi(4) * gamma;
        // ∫_d^∞ r / (1 + r^4/s) dr with r = d e^w.
        let body = trapezoid(
            |w: f64| {
                let r = d * w.exp();
                r * r / (1.0 + r.powi(4) / s)
            },
            0.0,
            20.0,
            400_000,
        );
        let r_end = d * 20f64.exp();
        let tail = s / (2.0 * r_end * r_end);
        let oracle = (-2.0 * PI * g.lambda_s * (body + tail)).exp();
        let v = conditional_stp_sbs(&[x], gamma, &g).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn conditional_stp_limits() {
        let g = table_geometry();
        assert_abs_diff_eq!(conditional_stp_sbs(&[5.0, 8.0], 1e-14, &g).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(conditional_stp_sbs(&[1e-6, 1e-6], 10.0, &g).unwrap(), 1.0, epsilon = 1e-9);
        assert!(conditional_stp_sbs(&[0.0, 5.0], 10.0, &g).is_err());
        assert!(conditional_stp_sbs(&[60.0], 10.0, &g).is_err());
        let v = conditional_stp_sbs(&[15.0, 18.0], 10.0, &g).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn mbs_stp_values() {
        assert_abs_diff_eq!(stp_mbs(1.0, 4.0).unwrap(), 1.0 / (1.0 + PI / 4.0), epsilon = 1e-14);
        assert_abs_diff_eq!(stp_mbs(1.0, 4.0).unwrap(), 0.5601, epsilon = 5e-5);
        assert_abs_diff_eq!(stp_mbs(10f64.powf(0.5), 4.0).unwrap(), 0.3470, epsilon = 1e-4);
        assert_abs_diff_eq!(stp_mbs(1e-12, 4.0).unwrap(), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn mbs_stp_distance_average_is_density_free() {
        // Average exp(-πλx²ρ(γ)) over the nearest-MBS distance law at two densities.
        for a in [3.5, 4.0] {
            let gamma = 2.0;
            let rho = mbs_rho(gamma, a);
            let avg = |lambda: f64| {
                let xmax = (60.0 / (PI * lambda)).sqrt();
                trapezoid(
                    |x| 2.0 * PI * lambda * x * (-PI * lambda * x * x * (1.0 + rho)).exp(),
                    0.0,
                    xmax,
                    200_000,
                )
            };
            let closed = stp_mbs(gamma, a).unwrap();
            let p1 = avg(1.0 / (500.0f64.powi(2) * PI));
            let p2 = avg(1.0 / (80.0f64.powi(2) * PI));
            assert!((p1 - closed).abs() < 1e-9);
            assert!((p2 - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn mbs_esr_reduces_to_single_integral_at_four() {
        let g = table_geometry();
        let gamma = g.gamma_m;
        let rho = |t: f64| {
            let y = t.sqrt();
            y * (FRAC_PI_2 - (1.0 / y).atan())
        };
        let rho0 = rho(gamma);
        // ∫_γ^∞ dt / ((1 + ρ(t) − ρ(γ))(1+t)) in w = ln(1+t); tail uses ρ(t) ≈ (π/2)√t − 1.
        let w0 = gamma.ln_1p();
        let w1 = 60.0;
        let body = trapezoid(|w: f64| 1.0 / (1.0 + rho(w.exp_m1()) - rho0), w0, w1, 600_000);
        let tail = 4.0 / PI * (-w1 / 2.0).exp();
        let oracle = g.w_m * gamma.log2_1p() + g.w_m / LN_2 * (body + tail);
        let v = esr_mbs(&g, &QuadConfig::default()).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn mbs_esr_bounds_and_monotone() {
        let mut g = table_geometry();
        let q = QuadConfig::default();
        for a in [3.5, 4.0] {
            g.alpha_m = a;
            g.gamma_m = 1.0;
            let lo = esr_mbs(&g, &q).unwrap();
            assert!(lo >= g.w_m * 1.0f64.log2_1p());
            g.gamma_m = 10.0;
            let hi = esr_mbs(&g, &q).unwrap();
            assert!(hi > lo);
            assert!(hi >= g.w_m * 10.0f64.log2_1p());
        }
    }

    #[test]
    fn joint_rate_exceeds_distance_averaged_rate() {
        let g = table_geometry();
        let q = QuadConfig::default();
        let lit = esr_mbs(&g, &q).unwrap();
        let joint = esr_mbs_joint(&g, &q).unwrap();
        assert!(joint > lit);
    }

    #[test]
    fn cluster_stp_properties() {
        let g = table_geometry();
        let mc = McConfig { samples: 4000, seed: 7 };
        let tiny = stp_sbs_cluster(0, 1e-14, &g, &mc).unwrap();
        assert_abs_diff_eq!(tiny.mean, 1.0, epsilon = 1e-9);
        assert!(tiny.half_width_95 < 1e-9);
        let mut last = 1.0;
        for db in (0..=20).step_by(2) {
            let v = stp_sbs_cluster(0, 10f64.powf(db as f64 / 10.0), &g, &mc).unwrap().mean;
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= last + 1e-15);
            last = v;
        }
        let two = stp_sbs_cluster(0, 10.0, &g.with_cluster_sizes(&[2, 3, 3]), &mc).unwrap();
        let five = stp_sbs_cluster(0, 10.0, &g.with_cluster_sizes(&[5, 3, 3]), &mc).unwrap();
        assert!(five.mean > two.mean);
        assert!(stp_sbs_cluster(0, 10.0, &g, &McConfig { samples: 10, seed: 1 }).is_err());
        assert!(stp_sbs_cluster(3, 10.0, &g, &mc).is_err());
    }

    #[test]
    fn cluster_stp_is_deterministic_and_half_width_scales() {
        let g = table_geometry();
        let a = stp_sbs_cluster(1, 100.0, &g, &McConfig { samples: 5000, seed: 3 }).unwrap();
        let b = stp_sbs_cluster(1, 100.0, &g, &McConfig { samples: 5000, seed: 3 }).unwrap();
        assert_eq!(a, b);
        let c = stp_sbs_cluster(1, 100.0, &g, &McConfig { samples: 20000, seed: 3 }).unwrap();
        let ratio = a.half_width_95 / c.half_width_95;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn cluster_esr_properties() {
        let g = table_geometry();
        let mc = McConfig { samples: 2000, seed: 11 };
        let q = QuadConfig::default();
        let r = esr_sbs_cluster(0, &g, &mc, &q).unwrap();
        assert!(r.mean >= g.w_s * g.gamma_s.log2_1p());
        let two = esr_sbs_cluster(0, &g.with_cluster_sizes(&[2, 3, 3]), &mc, &q).unwrap();
        let five = esr_sbs_cluster(0, &g.with_cluster_sizes(&[5, 3, 3]), &mc, &q).unwrap();
        assert!(five.mean > two.mean);
        let mut big = g.clone();
        big.gamma_s = 1e9;
        let floor = big.w_s * big.gamma_s.log2_1p();
        let r = esr_sbs_cluster(0, &big, &mc, &q).unwrap();
        assert!(r.mean >= floor && (r.mean - floor) / floor < 0.05);
    }
}
