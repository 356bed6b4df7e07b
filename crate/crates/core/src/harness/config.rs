//! Experiment configuration: a flat TOML file of model parameters plus a
//! `[run]` table.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use super::HarnessError;
use crate::content::{build_catalog, Catalog, CatalogParams, FileSizes};
use crate::economics::EconomicModel;
use crate::geometry::{NetworkGeometry, MIN_MC_SAMPLES};
use crate::optimizer::RelaxOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mplp,
    Alg1,
    Relaxed,
    Alg2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mplp, Algorithm::Alg1, Algorithm::Relaxed, Algorithm::Alg2];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mplp => "mplp",
            Algorithm::Alg1 => "alg1",
            Algorithm::Relaxed => "relaxed",
            Algorithm::Alg2 => "alg2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "gamma_s_dB")]
    GammaSDb,
    #[serde(rename = "zipf_alpha")]
    ZipfAlpha,
    #[serde(rename = "M_bits")]
    MBits,
    #[serde(rename = "c_bh")]
    CBh,
    #[serde(rename = "L")]
    L,
}

impl SweepVar {
    pub const ALL: [SweepVar; 5] = [SweepVar::GammaSDb, SweepVar::ZipfAlpha, SweepVar::MBits, SweepVar::CBh, SweepVar::L];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::GammaSDb => "gamma_s_dB",
            SweepVar::ZipfAlpha => "zipf_alpha",
            SweepVar::MBits => "M_bits",
            SweepVar::CBh => "c_bh",
            SweepVar::L => "L",
        }
    }

    pub fn parse(s: &str) -> Result<SweepVar, HarnessError> {
        SweepVar::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let known: Vec<&str> = SweepVar::ALL.iter().map(|v| v.name()).collect();
            HarnessError::Usage(format!("unknown sweep variable `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub mc_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepVar>,
    pub grid: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 1, mc_samples: 20_000, sweep: None, grid: Vec::new(), algorithms: Algorithm::ALL.to_vec() }
    }
}

/// Model and run parameters. Decibel fields keep the value as written; the
/// linear counterparts are derived once when the config is built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "P_s_dBm")]
    pub p_s_dbm: f64,
    #[serde(rename = "P_m_dBm")]
    pub p_m_dbm: f64,
    pub lambda_s: f64,
    pub lambda_m: f64,
    pub d: Vec<f64>,
    #[serde(rename = "S_per_cluster")]
    pub s_per_cluster: Vec<usize>,
    pub alpha_s: f64,
    pub alpha_m: f64,
    #[serde(rename = "M_bits")]
    pub m_bits: f64,
    #[serde(rename = "C_f_bits")]
    pub c_f_bits: f64,
    #[serde(rename = "F")]
    pub f: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub zipf_alpha: f64,
    #[serde(rename = "W_s_Hz")]
    pub w_s_hz: f64,
    #[serde(rename = "W_m_Hz")]
    pub w_m_hz: f64,
    #[serde(rename = "gamma_s_dB")]
    pub gamma_s_db: f64,
    #[serde(rename = "gamma_m_dB")]
    pub gamma_m_db: f64,
    #[serde(rename = "P_fix_s_W")]
    pub p_fix_s_w: f64,
    #[serde(rename = "P_fix_m_W")]
    pub p_fix_m_w: f64,
    pub zeta_s: f64,
    pub zeta_m: f64,
    #[serde(rename = "c_ca_W_per_bit")]
    pub c_ca_w_per_bit: f64,
    #[serde(rename = "c_bh_W_per_bit")]
    pub c_bh_w_per_bit: f64,
    pub k_c: f64,
    pub k_r: f64,
    pub tau: f64,
    pub run: RunConfig,
    #[serde(skip)]
    pub p_s_w: f64,
    #[serde(skip)]
    pub p_m_w: f64,
    #[serde(skip)]
    pub gamma_s: f64,
    #[serde(skip)]
    pub gamma_m: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut c = ExperimentConfig {
            k: 3,
            p_s_dbm: 23.0,
            p_m_dbm: 33.0,
            lambda_s: 1.0 / (100.0 * 100.0 * PI),
            lambda_m: 1.0 / (500.0 * 500.0 * PI),
            d: vec![10.0, 20.0, 50.0],
            s_per_cluster: vec![3, 3, 3],
            alpha_s: 4.0,
            alpha_m: 4.0,
            m_bits: 1e9,
            c_f_bits: 5e7,
            f: 100,
            l: 5,
            zipf_alpha: 1.0,
            w_s_hz: 10e6,
            w_m_hz: 50e6,
            gamma_s_db: 10.0,
            gamma_m_db: 5.0,
            p_fix_s_w: 6.8,
            p_fix_m_w: 30.0,
            zeta_s: 4.0,
            zeta_m: 4.7,
            c_ca_w_per_bit: 6.25e-12,
            c_bh_w_per_bit: 5e-4,
            k_c: 3.87e-4,
            k_r: 1.41e-8,
            tau: 1e-11,
            run: RunConfig::default(),
            p_s_w: 0.0,
            p_m_w: 0.0,
            gamma_s: 0.0,
            gamma_m: 0.0,
        };
        c.derive_linear();
        c
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "K")]
    k: Option<Spanned<usize>>,
    #[serde(rename = "P_s_dBm")]
    p_s_dbm: Option<Spanned<f64>>,
    #[serde(rename = "P_m_dBm")]
    p_m_dbm: Option<Spanned<f64>>,
    lambda_s: Option<Spanned<f64>>,
    lambda_m: Option<Spanned<f64>>,
    d: Option<Spanned<Vec<f64>>>,
    #[serde(rename = "S_per_cluster")]
    s_per_cluster: Option<Spanned<Vec<usize>>>,
    alpha_s: Option<Spanned<f64>>,
    alpha_m: Option<Spanned<f64>>,
    #[serde(rename = "M_bits")]
    m_bits: Option<Spanned<f64>>,
    #[serde(rename = "C_f_bits")]
    c_f_bits: Option<Spanned<f64>>,
    #[serde(rename = "F")]
    f: Option<Spanned<usize>>,
    #[serde(rename = "L")]
    l: Option<Spanned<usize>>,
    zipf_alpha: Option<Spanned<f64>>,
    #[serde(rename = "W_s_Hz")]
    w_s_hz: Option<Spanned<f64>>,
    #[serde(rename = "W_m_Hz")]
    w_m_hz: Option<Spanned<f64>>,
    #[serde(rename = "gamma_s_dB")]
    gamma_s_db: Option<Spanned<f64>>,
    #[serde(rename = "gamma_m_dB")]
    gamma_m_db: Option<Spanned<f64>>,
    #[serde(rename = "P_fix_s_W")]
    p_fix_s_w: Option<Spanned<f64>>,
    #[serde(rename = "P_fix_m_W")]
    p_fix_m_w: Option<Spanned<f64>>,
    zeta_s: Option<Spanned<f64>>,
    zeta_m: Option<Spanned<f64>>,
    #[serde(rename = "c_ca_W_per_bit")]
    c_ca_w_per_bit: Option<Spanned<f64>>,
    #[serde(rename = "c_bh_W_per_bit")]
    c_bh_w_per_bit: Option<Spanned<f64>>,
    k_c: Option<Spanned<f64>>,
    k_r: Option<Spanned<f64>>,
    tau: Option<Spanned<f64>>,
    run: Option<RawRun>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<Spanned<u64>>,
    mc_samples: Option<Spanned<usize>>,
    sweep: Option<Spanned<String>>,
    grid: Option<Spanned<Vec<f64>>>,
    algorithms: Option<Spanned<Vec<Algorithm>>>,
}

/// Line numbers of the keys present in a parsed file.
struct Lines<'a> {
    src: &'a str,
    map: HashMap<&'static str, usize>,
}

impl<'a> Lines<'a> {
    fn take<T>(&mut self, key: &'static str, v: Option<Spanned<T>>, slot: &mut T) {
        if let Some(s) = v {
            let line = self.src[..s.span().start].matches('\n').count() + 1;
            self.map.insert(key, line);
            *slot = s.into_inner();
        }
    }
}

fn config_error(key: &str, line: Option<usize>, msg: &str) -> HarnessError {
    match line {
        Some(n) => HarnessError::Config(format!("line {n}: key `{key}`: {msg}")),
        None => HarnessError::Config(format!("key `{key}` (default): {msg}")),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("cannot read config {}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text)
    }

    /// Parses and validates; omitted keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string().trim_end().to_owned()))?;
        let mut c = ExperimentConfig::default();
        let mut lines = Lines { src: text, map: HashMap::new() };
        lines.take("K", raw.k, &mut c.k);
        lines.take("P_s_dBm", raw.p_s_dbm, &mut c.p_s_dbm);
        lines.take("P_m_dBm", raw.p_m_dbm, &mut c.p_m_dbm);
        lines.take("lambda_s", raw.lambda_s, &mut c.lambda_s);
        lines.take("lambda_m", raw.lambda_m, &mut c.lambda_m);
        lines.take("d", raw.d, &mut c.d);
        lines.take("S_per_cluster", raw.s_per_cluster, &mut c.s_per_cluster);
        lines.take("alpha_s", raw.alpha_s, &mut c.alpha_s);
        lines.take("alpha_m", raw.alpha_m, &mut c.alpha_m);
        lines.take("M_bits", raw.m_bits, &mut c.m_bits);
        lines.take("C_f_bits", raw.c_f_bits, &mut c.c_f_bits);
        lines.take("F", raw.f, &mut c.f);
        lines.take("L", raw.l, &mut c.l);
        lines.take("zipf_alpha", raw.zipf_alpha, &mut c.zipf_alpha);
        lines.take("W_s_Hz", raw.w_s_hz, &mut c.w_s_hz);
        lines.take("W_m_Hz", raw.w_m_hz, &mut c.w_m_hz);
        lines.take("gamma_s_dB", raw.gamma_s_db, &mut c.gamma_s_db);
        lines.take("gamma_m_dB", raw.gamma_m_db, &mut c.gamma_m_db);
        lines.take("P_fix_s_W", raw.p_fix_s_w, &mut c.p_fix_s_w);
        lines.take("P_fix_m_W", raw.p_fix_m_w, &mut c.p_fix_m_w);
        lines.take("zeta_s", raw.zeta_s, &mut c.zeta_s);
        lines.take("zeta_m", raw.zeta_m, &mut c.zeta_m);
        lines.take("c_ca_W_per_bit", raw.c_ca_w_per_bit, &mut c.c_ca_w_per_bit);
        lines.take("c_bh_W_per_bit", raw.c_bh_w_per_bit, &mut c.c_bh_w_per_bit);
        lines.take("k_c", raw.k_c, &mut c.k_c);
        lines.take("k_r", raw.k_r, &mut c.k_r);
        lines.take("tau", raw.tau, &mut c.tau);
        if let Some(run) = raw.run {
            lines.take("seed", run.seed, &mut c.run.seed);
            lines.take("mc_samples", run.mc_samples, &mut c.run.mc_samples);
            lines.take("grid", run.grid, &mut c.run.grid);
            lines.take("algorithms", run.algorithms, &mut c.run.algorithms);
            let mut sweep = String::new();
            if run.sweep.is_some() {
                lines.take("sweep", run.sweep, &mut sweep);
                let v = SweepVar::parse(&sweep)
                    .map_err(|e| config_error("sweep", lines.map.get("sweep").copied(), &e.to_string()))?;
                c.run.sweep = Some(v);
            }
        }
        c.derive_linear();
        c.validate().map_err(|(key, msg)| config_error(key, lines.map.get(key).copied(), &msg))?;
        Ok(c)
    }

    fn derive_linear(&mut self) {
        self.p_s_w = dbm_to_watts(self.p_s_dbm);
        self.p_m_w = dbm_to_watts(self.p_m_dbm);
        self.gamma_s = db_to_linear(self.gamma_s_db);
        self.gamma_m = db_to_linear(self.gamma_m_db);
    }

    /// Checks every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        fn positive(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("must be a positive number, got {v}")))
            }
        }
        fn nonneg(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((key, format!("must be a nonnegative number, got {v}")))
            }
        }
        fn finite(key: &'static str, v: f64) -> Result<(), (&'static str, String)> {
            if v.is_finite() {
                Ok(())
            } else {
                Err((key, "must be finite".to_owned()))
            }
        }
        if self.k == 0 {
            return Err(("K", "need at least one cluster".to_owned()));
        }
        if self.d.len() != self.k {
            return Err(("d", format!("has {} radii but K = {}", self.d.len(), self.k)));
        }
        if !(self.d[0] > 0.0) || self.d.windows(2).any(|w| !(w[1] > w[0])) || self.d.iter().any(|r| !r.is_finite()) {
            return Err(("d", "radii must be positive and strictly increasing".to_owned()));
        }
        if self.s_per_cluster.len() != self.k {
            return Err(("S_per_cluster", format!("has {} entries but K = {}", self.s_per_cluster.len(), self.k)));
        }
        if self.s_per_cluster.contains(&0) {
            return Err(("S_per_cluster", "every cluster needs at least one SBS".to_owned()));
        }
        finite("P_s_dBm", self.p_s_dbm)?;
        finite("P_m_dBm", self.p_m_dbm)?;
        positive("lambda_s", self.lambda_s)?;
        positive("lambda_m", self.lambda_m)?;
        if !(self.alpha_s > 2.0 && self.alpha_s.is_finite()) {
            return Err(("alpha_s", "path-loss exponent must exceed 2".to_owned()));
        }
        if !(self.alpha_m > 2.0 && self.alpha_m.is_finite()) {
            return Err(("alpha_m", "path-loss exponent must exceed 2".to_owned()));
        }
        positive("M_bits", self.m_bits)?;
        positive("C_f_bits", self.c_f_bits)?;
        if self.f < 2 {
            return Err(("F", "need at least two files".to_owned()));
        }
        if self.l < 2 {
            return Err(("L", "need a base layer and at least one enhancement layer".to_owned()));
        }
        nonneg("zipf_alpha", self.zipf_alpha)?;
        positive("W_s_Hz", self.w_s_hz)?;
        positive("W_m_Hz", self.w_m_hz)?;
        finite("gamma_s_dB", self.gamma_s_db)?;
        finite("gamma_m_dB", self.gamma_m_db)?;
        nonneg("P_fix_s_W", self.p_fix_s_w)?;
        nonneg("P_fix_m_W", self.p_fix_m_w)?;
        nonneg("zeta_s", self.zeta_s)?;
        nonneg("zeta_m", self.zeta_m)?;
        nonneg("c_ca_W_per_bit", self.c_ca_w_per_bit)?;
        nonneg("c_bh_W_per_bit", self.c_bh_w_per_bit)?;
        nonneg("k_c", self.k_c)?;
        nonneg("k_r", self.k_r)?;
        positive("tau", self.tau)?;
        if self.run.mc_samples < MIN_MC_SAMPLES {
            return Err(("mc_samples", format!("need at least {MIN_MC_SAMPLES}")));
        }
        if self.run.algorithms.is_empty() {
            return Err(("algorithms", "list at least one algorithm".to_owned()));
        }
        if let Some(var) = self.run.sweep {
            for &v in &self.run.grid {
                check_sweep_value(var, v).map_err(|msg| ("grid", msg))?;
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn geometry(&self) -> NetworkGeometry {
        let cumulative_counts = self
            .s_per_cluster
            .iter()
            .scan(0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        NetworkGeometry {
            lambda_s: self.lambda_s,
            lambda_m: self.lambda_m,
            alpha_s: self.alpha_s,
            alpha_m: self.alpha_m,
            radii: self.d.clone(),
            cumulative_counts,
            p_s: self.p_s_w,
            p_m: self.p_m_w,
            w_s: self.w_s_hz,
            w_m: self.w_m_hz,
            gamma_s: self.gamma_s,
            gamma_m: self.gamma_m,
        }
    }

    pub fn catalog(&self) -> crate::Result<Catalog> {
        build_catalog(&CatalogParams {
            file_count: self.f,
            layer_count: self.l,
            alpha: self.zipf_alpha,
            file_sizes: FileSizes::Uniform(self.c_f_bits),
            layer_min_sizes: None,
        })
    }

    pub fn economics(&self) -> EconomicModel {
        EconomicModel {
            zeta_s: self.zeta_s,
            zeta_m: self.zeta_m,
            p_fix_s: self.p_fix_s_w,
            p_fix_m: self.p_fix_m_w,
            c_ca: self.c_ca_w_per_bit,
            c_bh: self.c_bh_w_per_bit,
            k_c: self.k_c,
            k_r: self.k_r,
        }
    }

    pub fn relax_options(&self) -> RelaxOptions {
        RelaxOptions { tau: self.tau, ..RelaxOptions::default() }
    }

    /// Copy with one swept parameter replaced.
    pub fn with_sweep_value(&self, var: SweepVar, value: f64) -> Result<ExperimentConfig, HarnessError> {
        check_sweep_value(var, value).map_err(|msg| HarnessError::Usage(format!("{}: {msg}", var.name())))?;
        let mut c = self.clone();
        match var {
            SweepVar::GammaSDb => c.gamma_s_db = value,
            SweepVar::ZipfAlpha => c.zipf_alpha = value,
            SweepVar::MBits => c.m_bits = value,
            SweepVar::CBh => c.c_bh_w_per_bit = value,
            SweepVar::L => c.l = value as usize,
        }
        c.derive_linear();
        c.validate().map_err(|(key, msg)| HarnessError::Usage(format!("{}: key `{key}`: {msg}", var.name())))?;
        Ok(c)
    }
}

fn check_sweep_value(var: SweepVar, v: f64) -> Result<(), String> {
    let ok = match var {
        SweepVar::GammaSDb => v.is_finite(),
        SweepVar::ZipfAlpha | SweepVar::CBh => v >= 0.0 && v.is_finite(),
        SweepVar::MBits => v > 0.0 && v.is_finite(),
        SweepVar::L => v >= 2.0 && v.fract() == 0.0 && v <= 1e6,
    };
    if ok {
        Ok(())
    } else {
        Err(format!("grid value {v} is out of range"))
    }
}
