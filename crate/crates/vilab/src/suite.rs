//! Seeded check batteries: every inequality checker run over a reproducible
//! sample of random source pairs, across μ and both boundary modes.
//!
//! The same battery backs the CLI `check` subcommand and the acceptance
//! tests, so a battery name always means the same sampled population.
//! Instances derive from a single base seed; identical configs yield
//! byte-identical report streams.

use crate::assembly::{
    assemble_template, calibrate_lambda1, coercivity_for_mode, MassKind, Mode, ProblemTemplate,
};
use crate::control::{check_convexity_gap, ControlProblem};
use crate::error::{Error, Result};
use crate::estimates::{
    check_continuity, check_h_lipschitz, check_lemma_h_bounds, check_lemma_l3,
    check_mignot_monotony, check_monotone_in_g, check_sandwich, check_theorem1, ComboFamily,
    EstimateReport,
};
use crate::fields::{random_nonneg_vector, random_vector};
use crate::grid::{build_grid, Grid, GridFunction, Role, Side};
use crate::solver::SolverConfig;
use rayon::prelude::*;

/// Valid battery names for the `check` command.
pub const CHECK_NAMES: [&str; 8] = [
    "theorem1",
    "monotone_g",
    "sandwich",
    "h_bounds",
    "lemma_l3",
    "mignot",
    "continuity",
    "convexity",
];

/// Battery configuration; the defaults reproduce the standard sample set
/// (1D, 65 nodes, 20 seeded pairs per mode, μ on an 11-point grid).
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub pairs_per_mode: usize,
    pub mu_grid: Vec<f64>,
    pub robin_h: f64,
    pub dim: usize,
    pub nodes_per_axis: usize,
    pub gamma1: Vec<Side>,
    pub amplitude: f64,
    pub b_value: f64,
    pub q_value: f64,
    pub m_weight: f64,
    pub jobs: usize,
    pub solver: SolverConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            pairs_per_mode: 20,
            mu_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            robin_h: 10.0,
            dim: 1,
            nodes_per_axis: 65,
            gamma1: vec![Side::Left],
            amplitude: 5.0,
            b_value: 0.5,
            q_value: 0.0,
            m_weight: 1.0,
            jobs: 1,
            solver: SolverConfig::tight(),
        }
    }
}

impl SuiteConfig {
    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.dim, self.nodes_per_axis, &self.gamma1)
    }

    pub fn template(&self, mode: Mode) -> Result<ProblemTemplate> {
        let grid = self.grid()?;
        let q = GridFunction::constant(&grid, Role::FluxData, self.q_value);
        let b = GridFunction::constant(&grid, Role::TraceData, self.b_value);
        assemble_template(&grid, &q, &b, mode, MassKind::Consistent)
    }

    pub fn modes(&self) -> [Mode; 2] {
        [Mode::Dirichlet, Mode::Robin { h: self.robin_h }]
    }

    /// Seeded source pair k for this battery.
    pub fn pair(&self, n: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
        let base = self.seed.wrapping_mul(1000).wrapping_add(2 * k as u64);
        (
            random_vector(base, n, self.amplitude),
            random_vector(base + 1, n, self.amplitude),
        )
    }

    fn run_parallel<T, F>(&self, items: Vec<T>, f: F) -> Result<Vec<Vec<EstimateReport>>>
    where
        T: Send,
        F: Fn(T) -> Result<Vec<EstimateReport>> + Send + Sync,
    {
        if self.jobs <= 1 {
            items.into_iter().map(f).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.jobs)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| items.into_par_iter().map(f).collect())
        }
    }
}

/// Run one named battery; unknown names list the valid ones.
pub fn run_check(name: &str, cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    match name {
        "theorem1" => battery_theorem1(cfg),
        "monotone_g" => battery_monotone(cfg),
        "sandwich" => battery_sandwich(cfg),
        "h_bounds" => battery_h_bounds(cfg),
        "lemma_l3" => battery_lemma_l3(cfg),
        "mignot" => battery_mignot(cfg),
        "continuity" => battery_continuity(cfg),
        "convexity" => battery_convexity(cfg),
        other => Err(Error::Config(format!(
            "unknown check '{other}'; valid checks: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

/// Run several batteries back to back, preserving order.
pub fn run_checks(names: &[&str], cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let mut all = Vec::new();
    for name in names {
        all.extend(run_check(name, cfg)?);
    }
    Ok(all)
}

fn battery_theorem1(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let m = coercivity_for_mode(&tpl)?;
        let n = tpl.node_count();
        let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
        let chunks = cfg.run_parallel(pairs, |k| {
            let (g1, g2) = cfg.pair(n, k);
            let fam = ComboFamily::new(&tpl, g1, g2, cfg.solver)?;
            let mut rows = Vec::new();
            for &mu in &cfg.mu_grid {
                rows.push(check_theorem1(&tpl, &fam.at(mu)?, m));
            }
            Ok(rows)
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

fn battery_monotone(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let n = tpl.node_count();
        let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
        let chunks = cfg.run_parallel(pairs, |k| {
            let (base, _) = cfg.pair(n, k);
            let bump = random_nonneg_vector(
                cfg.seed.wrapping_mul(7777).wrapping_add(k as u64),
                n,
                cfg.amplitude,
            );
            let g1: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
            Ok(vec![check_monotone_in_g(&tpl, &g1, &base, &cfg.solver)?])
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

fn battery_sandwich(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    battery_over_combos(cfg, check_sandwich)
}

fn battery_mignot(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    battery_over_combos(cfg, |tpl, combo, _| Ok(check_mignot_monotony(tpl, combo)))
}

fn battery_lemma_l3(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let lambda = coercivity_for_mode(&tpl)?;
        let n = tpl.node_count();
        let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
        let chunks = cfg.run_parallel(pairs, |k| {
            let (g1, g2) = cfg.pair(n, k);
            let fam = ComboFamily::new(&tpl, g1, g2, cfg.solver)?;
            let mut rows = Vec::new();
            for &mu in &cfg.mu_grid {
                rows.push(check_lemma_l3(&tpl, &fam.at(mu)?, lambda));
            }
            Ok(rows)
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

fn battery_over_combos<F>(cfg: &SuiteConfig, f: F) -> Result<Vec<EstimateReport>>
where
    F: Fn(
            &ProblemTemplate,
            &crate::estimates::ConvexCombo,
            &SolverConfig,
        ) -> Result<EstimateReport>
        + Send
        + Sync,
{
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let n = tpl.node_count();
        let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
        let chunks = cfg.run_parallel(pairs, |k| {
            let (g1, g2) = cfg.pair(n, k);
            let fam = ComboFamily::new(&tpl, g1, g2, cfg.solver)?;
            let mut rows = Vec::new();
            for &mu in &cfg.mu_grid {
                rows.push(f(&tpl, &fam.at(mu)?, &cfg.solver)?);
            }
            Ok(rows)
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

fn battery_h_bounds(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let grid = cfg.grid()?;
    let n = grid.node_count();
    let q = GridFunction::constant(&grid, Role::FluxData, cfg.q_value.max(0.0));
    let h1 = cfg.robin_h.max(1.0);
    let h2 = 1.0;
    let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
    let chunks = cfg.run_parallel(pairs, |k| {
        let (g_raw, _) = cfg.pair(n, k);
        let g: Vec<f64> = g_raw.iter().map(|v| -v.abs()).collect();
        check_lemma_h_bounds(&grid, &g, 1.0, &q, h1, h2, &cfg.solver)
    })?;
    let mut out: Vec<EstimateReport> = chunks.into_iter().flatten().collect();
    // the Lipschitz estimate needs no sign conditions: sign-mixed instances
    let b = GridFunction::constant(&grid, Role::TraceData, 1.0);
    for k in 0..cfg.pairs_per_mode.min(5) {
        let (g1, _) = cfg.pair(n, k);
        let mut row = check_h_lipschitz(&grid, &g1, &b, &q, h1, h2, &cfg.solver)?;
        row.name = "h_bounds_lipschitz_mixed".into();
        out.push(row);
    }
    // equal-coefficient instance: the Lipschitz row is exactly zero
    let (g_raw, _) = cfg.pair(n, 0);
    let g: Vec<f64> = g_raw.iter().map(|v| -v.abs()).collect();
    let same = check_lemma_h_bounds(&grid, &g, 1.0, &q, h1, h1, &cfg.solver)?;
    out.extend(same.into_iter().map(|mut r| {
        r.name = format!("{}_equal_h", r.name);
        r
    }));
    Ok(out)
}

fn battery_continuity(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let eps: Vec<f64> = (0..6).map(|k| 1.0 / f64::powi(2.0, k)).collect();
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let n = tpl.node_count();
        for k in 0..3.min(cfg.pairs_per_mode) {
            let (g, _) = cfg.pair(n, k);
            let study = check_continuity(
                &tpl,
                &g,
                &eps,
                cfg.seed.wrapping_mul(31).wrapping_add(k as u64),
                &cfg.solver,
            )?;
            out.extend(study.reports);
        }
    }
    Ok(out)
}

fn battery_convexity(cfg: &SuiteConfig) -> Result<Vec<EstimateReport>> {
    let interior_mu: Vec<f64> = cfg
        .mu_grid
        .iter()
        .copied()
        .filter(|&m| m > 0.0 && m < 1.0)
        .collect();
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        let n = tpl.node_count();
        let mut cp = ControlProblem::new(tpl, cfg.m_weight)?;
        cp.solver = cfg.solver;
        let pairs: Vec<usize> = (0..cfg.pairs_per_mode).collect();
        let chunks = cfg.run_parallel(pairs, |k| {
            let (g1, g2) = cfg.pair(n, k);
            let mut rows = Vec::new();
            for &mu in &interior_mu {
                rows.extend(check_convexity_gap(&cp, &g1, &g2, mu)?);
            }
            Ok(rows)
        })?;
        out.extend(chunks.into_iter().flatten());
    }
    Ok(out)
}

/// Battery statistics: (total, failed).
pub fn tally(reports: &[EstimateReport]) -> (usize, usize) {
    (reports.len(), reports.iter().filter(|r| !r.pass).count())
}

/// Calibrated constants of a battery config, for report headers.
pub fn battery_constants(cfg: &SuiteConfig) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for mode in cfg.modes() {
        let tpl = cfg.template(mode)?;
        out.push((
            format!("coercivity_{}", mode.label()),
            coercivity_for_mode(&tpl)?,
        ));
    }
    let robin = cfg.template(Mode::Robin { h: cfg.robin_h })?;
    out.push((
        "trace_norm".into(),
        crate::assembly::trace_operator_norm(&robin)?,
    ));
    out.push(("lambda1".into(), calibrate_lambda1(&robin, 1.0)?));
    Ok(out)
}
