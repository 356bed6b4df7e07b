//! Subcommand dispatch: analytic curves, simulation overlay, single-point
//! optimization and one-variable sweeps.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig, SweepVar};
use super::HarnessError;
use crate::economics::{compute_rate_table, evaluate, EceReport, RateTable};
use crate::geometry::{esr_mbs, esr_sbs_cluster, stp_mbs, stp_sbs_cluster, McConfig, NetworkGeometry, QuadConfig};
use crate::optimizer::{
    alternating_alg2, equal_cluster_budgets, greedy_round_alg1, mplp_baseline, solve_relaxed_placement, JointOptions,
};
use crate::simulator::{estimate_metrics, Window, DEFAULT_WINDOW_POINTS};

use super::config::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Optimize,
    Sweep,
}

impl Command {
    pub fn parse(s: &str) -> Result<Command, HarnessError> {
        match s {
            "analyze" => Ok(Command::Analyze),
            "simulate" => Ok(Command::Simulate),
            "optimize" => Ok(Command::Optimize),
            "sweep" => Ok(Command::Sweep),
            _ => Err(HarnessError::Usage(format!("unknown command `{s}`"))),
        }
    }
}

/// One output line. Absent quantities are left empty in CSV and `null` in
/// JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_var: String,
    pub value: Option<f64>,
    pub algorithm: String,
    pub ece: Option<f64>,
    pub revenue: Option<f64>,
    pub cost: Option<f64>,
    pub stp_ref: Option<f64>,
    pub esr_ref: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultSet {
    pub rows: Vec<ResultRow>,
}

impl ResultSet {
    /// Orders rows by sweep variable, value, then algorithm name.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_var
                .cmp(&b.sweep_var)
                .then(a.value.unwrap_or(f64::NEG_INFINITY).total_cmp(&b.value.unwrap_or(f64::NEG_INFINITY)))
                .then(a.algorithm.cmp(&b.algorithm))
        });
    }

    pub fn find(&self, value: Option<f64>, algorithm: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.value == value && r.algorithm == algorithm)
    }
}

/// Outcome of one algorithm at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub algorithm: Algorithm,
    pub ece: f64,
    /// Revenue and cost split; absent for the relaxed bound.
    pub report: Option<EceReport>,
}

pub fn default_grid(var: SweepVar) -> Vec<f64> {
    match var {
        SweepVar::GammaSDb => vec![0.0, 5.0, 10.0, 15.0, 20.0],
        SweepVar::ZipfAlpha => vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
        SweepVar::MBits => vec![2.5e8, 5e8, 1e9, 2e9, 4e9],
        SweepVar::CBh => vec![1e-4, 2e-4, 5e-4, 1e-3, 2e-3],
        SweepVar::L => vec![2.0, 4.0, 6.0, 8.0],
    }
}

fn mc(config: &ExperimentConfig) -> McConfig {
    McConfig { samples: config.run.mc_samples, seed: config.run.seed }
}

pub fn rates_for(config: &ExperimentConfig) -> Result<RateTable, HarnessError> {
    Ok(compute_rate_table(&config.geometry(), &mc(config), &QuadConfig::default())?)
}

/// Runs the configured algorithms at one operating point with precomputed
/// rates.
pub fn evaluate_point(config: &ExperimentConfig, rates: &RateTable) -> Result<Vec<PointResult>, HarnessError> {
    let geometry = config.geometry();
    let catalog = config.catalog()?;
    let econ = config.economics();
    let budgets = equal_cluster_budgets(&geometry, config.m_bits);
    let algorithms = &config.run.algorithms;
    let need_relaxed = algorithms.iter().any(|a| matches!(a, Algorithm::Alg1 | Algorithm::Relaxed));
    let relaxed = if need_relaxed {
        let caps: Vec<f64> =
            budgets.iter().enumerate().map(|(k, m)| m / geometry.cluster_size(k) as f64).collect();
        Some(solve_relaxed_placement(&catalog, &geometry, &econ, rates, &caps, &config.relax_options())?)
    } else {
        None
    };
    let mut out = Vec::new();
    let mut sorted = algorithms.clone();
    sorted.sort();
    sorted.dedup();
    for alg in sorted {
        let (ece, report) = match alg {
            Algorithm::Mplp => {
                let p = mplp_baseline(&catalog, &geometry, &budgets)?;
                let r = evaluate(&p, &catalog, &geometry, &econ, rates)?;
                (r.ece, Some(r))
            }
            Algorithm::Alg1 => {
                let relaxed = relaxed.as_ref().expect("relaxed solution computed for alg1");
                let g = greedy_round_alg1(relaxed, &catalog, &geometry, &econ, rates, &budgets)?;
                let r = evaluate(&g.placement, &catalog, &geometry, &econ, rates)?;
                (r.ece, Some(r))
            }
            Algorithm::Relaxed => (relaxed.as_ref().expect("relaxed solution computed").objective, None),
            Algorithm::Alg2 => {
                let opts = JointOptions { relax: config.relax_options(), ..JointOptions::default() };
                let j = alternating_alg2(&catalog, &geometry, &econ, rates, config.m_bits, &opts)?;
                let r = evaluate(&j.placement, &j.catalog, &geometry, &econ, rates)?;
                (r.ece, Some(r))
            }
        };
        out.push(PointResult { algorithm: alg, ece, report });
    }
    Ok(out)
}

fn optimizer_rows(
    config: &ExperimentConfig,
    sweep_var: &str,
    value: Option<f64>,
    hash: &str,
    rates: &RateTable,
) -> Result<Vec<ResultRow>, HarnessError> {
    let geometry = config.geometry();
    let stp = stp_sbs_cluster(0, geometry.gamma_s, &geometry, &mc(config))?.mean;
    let points = evaluate_point(config, rates)?;
    Ok(points
        .into_iter()
        .map(|p| ResultRow {
            sweep_var: sweep_var.to_owned(),
            value,
            algorithm: p.algorithm.name().to_owned(),
            ece: Some(p.ece),
            revenue: p.report.map(|r| r.revenue),
            cost: p.report.map(|r| r.cost),
            stp_ref: Some(stp),
            esr_ref: Some(rates.r_k[0]),
            seed: config.run.seed,
            config_hash: hash.to_owned(),
        })
        .collect())
}

fn threshold_grids(config: &ExperimentConfig) -> (Vec<f64>, Vec<f64>) {
    if config.run.grid.is_empty() {
        ((0..=10).map(|i| 2.0 * i as f64).collect(), (0..=10).map(|i| i as f64).collect())
    } else {
        (config.run.grid.clone(), config.run.grid.clone())
    }
}

fn curve_row(config: &ExperimentConfig, var: &str, db: f64, alg: String, stp: f64, esr: Option<f64>, hash: &str) -> ResultRow {
    ResultRow {
        sweep_var: var.to_owned(),
        value: Some(db),
        algorithm: alg,
        ece: None,
        revenue: None,
        cost: None,
        stp_ref: Some(stp),
        esr_ref: esr,
        seed: config.run.seed,
        config_hash: hash.to_owned(),
    }
}

fn analytic_rows(config: &ExperimentConfig, hash: &str) -> Result<Vec<ResultRow>, HarnessError> {
    let base = config.geometry();
    let (sbs_grid, mbs_grid) = threshold_grids(config);
    let quad = QuadConfig::default();
    let mcfg = mc(config);
    let sbs: Vec<Vec<ResultRow>> = sbs_grid
        .par_iter()
        .map(|&db| {
            let g = NetworkGeometry { gamma_s: db_to_linear(db), ..base.clone() };
            (0..g.cluster_count())
                .map(|k| {
                    let stp = stp_sbs_cluster(k, g.gamma_s, &g, &mcfg)?.mean;
                    let esr = esr_sbs_cluster(k, &g, &mcfg, &quad)?.mean;
                    Ok(curve_row(config, "gamma_s_dB", db, format!("analytic_sbs_k{}", k + 1), stp, Some(esr), hash))
                })
                .collect::<Result<Vec<_>, HarnessError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ResultRow> = sbs.into_iter().flatten().collect();
    for &db in &mbs_grid {
        let g = NetworkGeometry { gamma_m: db_to_linear(db), ..base.clone() };
        let stp = stp_mbs(g.gamma_m, g.alpha_m)?;
        let esr = esr_mbs(&g, &quad)?;
        rows.push(curve_row(config, "gamma_m_dB", db, "analytic_mbs".to_owned(), stp, Some(esr), hash));
    }
    Ok(rows)
}

fn simulated_rows(config: &ExperimentConfig, hash: &str) -> Result<Vec<ResultRow>, HarnessError> {
    let g = config.geometry();
    let (sbs_db, mbs_db) = threshold_grids(config);
    let sbs_lin: Vec<f64> = sbs_db.iter().map(|d| db_to_linear(*d)).collect();
    let mbs_lin: Vec<f64> = mbs_db.iter().map(|d| db_to_linear(*d)).collect();
    let window = Window::for_geometry(&g, DEFAULT_WINDOW_POINTS);
    let m = estimate_metrics(&g, &sbs_lin, &mbs_lin, config.run.mc_samples, config.run.seed, &window)?;
    let mut rows = Vec::new();
    for (k, table) in m.sbs.iter().enumerate() {
        for (i, db) in sbs_db.iter().enumerate() {
            let esr = table.esr[i].as_ref().map(|e| e.mean);
            rows.push(curve_row(config, "gamma_s_dB", *db, format!("sim_sbs_k{}", k + 1), table.stp[i].mean, esr, hash));
        }
    }
    for (i, db) in mbs_db.iter().enumerate() {
        let esr = m.mbs.esr[i].as_ref().map(|e| e.mean);
        rows.push(curve_row(config, "gamma_m_dB", *db, "sim_mbs".to_owned(), m.mbs.stp[i].mean, esr, hash));
    }
    Ok(rows)
}

pub fn run_experiment(command: Command, config: &ExperimentConfig) -> Result<ResultSet, HarnessError> {
    let hash = config.hash();
    if command != Command::Sweep && config.run.sweep.is_some() {
        return Err(HarnessError::Usage("a sweep variable is only meaningful for the sweep command".to_owned()));
    }
    let rows = match command {
        Command::Analyze => analytic_rows(config, &hash)?,
        Command::Simulate => {
            let mut rows = analytic_rows(config, &hash)?;
            rows.extend(simulated_rows(config, &hash)?);
            rows
        }
        Command::Optimize => {
            let rates = rates_for(config)?;
            optimizer_rows(config, "none", None, &hash, &rates)?
        }
        Command::Sweep => {
            let var = config
                .run
                .sweep
                .ok_or_else(|| HarnessError::Usage("sweep needs a sweep variable".to_owned()))?;
            let grid = if config.run.grid.is_empty() { default_grid(var) } else { config.run.grid.clone() };
            let points: Vec<ExperimentConfig> =
                grid.iter().map(|v| config.with_sweep_value(var, *v)).collect::<Result<_, _>>()?;
            // Only the SIR threshold moves the rates.
            let shared = if var == SweepVar::GammaSDb { None } else { Some(rates_for(config)?) };
            let per_point: Vec<Vec<ResultRow>> = points
                .par_iter()
                .zip(grid.par_iter())
                .map(|(c, v)| {
                    let rates = match &shared {
                        Some(r) => r.clone(),
                        None => rates_for(c)?,
                    };
                    optimizer_rows(c, var.name(), Some(*v), &hash, &rates)
                })
                .collect::<Result<_, _>>()?;
            per_point.into_iter().flatten().collect()
        }
    };
    let mut set = ResultSet { rows };
    set.sort();
    Ok(set)
}
