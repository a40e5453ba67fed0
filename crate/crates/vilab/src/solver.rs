//! Linear complementarity solvers for the discrete obstacle problems.
//!
//! Two independent algorithms solve the same LCP
//!
//! ```text
//! x >= 0,   M x - f >= 0,   x' (M x - f) = 0
//! ```
//!
//! * `psor`: projected SOR sweeps, robust and simple;
//! * `pdas`: primal-dual active set (a semismooth Newton method), fast and
//!   exact on the final active set.
//!
//! Each algorithm serves as the oracle for the other: the default solve
//! runs both and insists they agree in V-norm.
//! Dirichlet mode eliminates the Γ₁ rows and folds b into the right-hand
//! side; Robin mode solves on all nodes with A + h·C.

use crate::assembly::{Mode, ProblemTemplate, ViProblem};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Role};
use crate::sparse::{cg_masked, norm2, SymCsr};
use std::collections::HashSet;
use std::io::Write;

/// Which complementarity algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverId {
    Psor,
    Pdas,
}

impl SolverId {
    pub fn label(&self) -> &'static str {
        match self {
            SolverId::Psor => "psor",
            SolverId::Pdas => "pdas",
        }
    }
}

/// Solver knobs. `tol_comp` is relative: the accepted complementarity
/// residual is tol_comp * (1 + |f|_inf).
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub tol_comp: f64,
    pub max_iter: usize,
    /// SOR relaxation factor, 0 < omega < 2.
    pub omega: f64,
    /// Inner CG tolerance for active-set subproblems.
    pub inner_tol: f64,
    /// Solver whose result is returned.
    pub primary: SolverId,
    /// Run both solvers and require V-norm agreement.
    pub cross_check: bool,
    /// Agreement threshold, relative to 1 + |u|_V.
    pub cross_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_comp: 1e-10,
            max_iter: 100_000,
            omega: 1.5,
            inner_tol: 1e-12,
            primary: SolverId::Pdas,
            cross_check: true,
            cross_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    /// Tighter tolerances for checker batteries (solver noise two orders
    /// below checker tolerances), single fast solver.
    pub fn tight() -> Self {
        SolverConfig {
            tol_comp: 1e-11,
            cross_check: false,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::Config(format!(
                "omega must lie in (0,2), got {}",
                self.omega
            )));
        }
        if !(self.tol_comp > 0.0 && self.inner_tol > 0.0 && self.cross_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Solution of one discrete obstacle problem, reported on the full node set.
#[derive(Debug, Clone)]
pub struct ViSolution {
    pub u: GridFunction,
    /// True where the obstacle binds. A node with u = 0 and zero residual is
    /// classified inactive, so masks are deterministic at the free boundary.
    pub active_mask: Vec<bool>,
    /// Max-norm of M u - f over the inactive set.
    pub residual_stationarity: f64,
    /// max_i |min(u_i, (M u - f)_i)| over the complementarity index set.
    pub residual_complementarity: f64,
    pub iterations: usize,
    pub solver_id: SolverId,
    /// LCP residual M u - f per node (zero on Γ₁ rows in Dirichlet mode).
    pub multiplier: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

fn comp_residual(x: &[f64], r: &[f64]) -> f64 {
    x.iter()
        .zip(r)
        .fold(0.0f64, |m, (&xi, &ri)| m.max(xi.min(ri).abs()))
}

/// Unconstrained solve projected onto the nonnegative cone: the standard
/// starting iterate.
fn projected_unconstrained_start(m: &SymCsr, f: &[f64], inner_tol: f64) -> Result<Vec<f64>> {
    let (x, _) = cg_masked(m, f, None, None, inner_tol, None)?;
    Ok(x.into_iter().map(|v| v.max(0.0)).collect())
}

/// Projected SOR from the default start.
pub fn psor(m: &SymCsr, f: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let x0 = projected_unconstrained_start(m, f, config.inner_tol)?;
    psor_from(m, f, &x0, config)
}

/// Projected SOR from a caller-supplied nonnegative start.
pub fn psor_from(
    m: &SymCsr,
    f: &[f64],
    x0: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    config.validate()?;
    let n = m.n();
    assert_eq!(f.len(), n);
    let diag = m.diag();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Config("psor needs a positive diagonal".into()));
    }
    let ctol = config.tol_comp * (1.0 + max_abs(f));
    let mut x: Vec<f64> = x0.iter().map(|v| v.max(0.0)).collect();
    let mut r = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();

    for sweep in 1..=config.max_iter {
        let mut delta_sq = 0.0;
        for i in 0..n {
            let (cols, vals) = m.row(i);
            let mut row_dot = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_dot += v * x[j];
            }
            let gs = x[i] + (f[i] - row_dot) / diag[i];
            let xi_new = (x[i] + config.omega * (gs - x[i])).max(0.0);
            delta_sq += (xi_new - x[i]) * (xi_new - x[i]);
            x[i] = xi_new;
        }
        m.matvec(&x, &mut r);
        for i in 0..n {
            r[i] -= f[i];
        }
        let comp = comp_residual(&x, &r);
        history.push(comp);
        if comp <= ctol && delta_sq.sqrt() <= config.tol_comp * (1.0 + norm2(&x)) {
            return Ok((x, sweep));
        }
        // divergence: residual grew an order of magnitude over 100 sweeps
        if sweep >= 100 {
            let past = history[sweep - 100];
            if comp > 10.0 * past && comp > ctol {
                return Err(Error::SolverFailure(format!(
                    "psor diverging: residual {comp:.3e} vs {past:.3e} a hundred sweeps ago (sweep {sweep})"
                )));
            }
        }
    }
    let tail: Vec<String> = history
        .iter()
        .rev()
        .take(5)
        .map(|v| format!("{v:.3e}"))
        .collect();
    Err(Error::SolverFailure(format!(
        "psor hit the iteration cap {} (recent residuals: {})",
        config.max_iter,
        tail.join(", ")
    )))
}

/// Primal-dual active set iteration. Terminates when the predicted active
/// set stabilizes, which gives exact complementarity up to the inner solves.
pub fn pdas(m: &SymCsr, f: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    config.validate()?;
    let n = m.n();
    assert_eq!(f.len(), n);

    let (x_unc, _) = cg_masked(m, f, None, None, config.inner_tol, None)?;
    let mut active: Vec<bool> = x_unc.iter().map(|&v| v < 0.0).collect();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    let cap = config.max_iter.min(10 * n + 100);

    for it in 1..=cap {
        let (sol, _) = cg_masked(m, f, Some(&active), Some(&x), config.inner_tol, None)?;
        x = sol;
        m.matvec(&x, &mut r);
        for i in 0..n {
            r[i] -= f[i];
        }
        let mut next = vec![false; n];
        for i in 0..n {
            next[i] = if active[i] { r[i] > 0.0 } else { x[i] < 0.0 };
        }
        if next == active {
            return Ok((x, it));
        }
        if !seen.insert(active.clone()) {
            return Err(Error::SolverFailure(format!(
                "pdas cycling: active set revisited at iteration {it}"
            )));
        }
        active = next;
    }
    Err(Error::SolverFailure(format!(
        "pdas active set did not stabilize within {cap} iterations"
    )))
}

fn run_kernel(
    id: SolverId,
    m: &SymCsr,
    f: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    match id {
        SolverId::Psor => psor(m, f, config),
        SolverId::Pdas => pdas(m, f, config),
    }
}

/// Reduced LCP data for one problem: matrix, rhs and the embedding of the
/// complementarity index set into the full node set.
struct LcpSystem {
    m: SymCsr,
    f: Vec<f64>,
    /// full-node index of each LCP unknown
    embed: Vec<usize>,
}

fn build_lcp(tpl: &ProblemTemplate, g: &[f64]) -> Result<LcpSystem> {
    let f_full = tpl.rhs(g);
    match tpl.mode {
        Mode::Dirichlet => {
            if tpl
                .grid
                .gamma1_nodes()
                .iter()
                .any(|&i| tpl.trace_values[i] < 0.0)
            {
                return Err(Error::Infeasible(
                    "Dirichlet data b must be nonnegative for the obstacle set to be nonempty"
                        .into(),
                ));
            }
            let free = tpl.grid.free_nodes();
            let m = tpl.operative().extract(&free);
            let coupling = tpl.stiffness.apply(&tpl.trace_values);
            let f = free.iter().map(|&i| f_full[i] - coupling[i]).collect();
            Ok(LcpSystem { m, f, embed: free })
        }
        Mode::Robin { .. } => Ok(LcpSystem {
            m: tpl.operative().clone(),
            f: f_full,
            embed: (0..tpl.node_count()).collect(),
        }),
    }
}

fn embed_solution(
    tpl: &ProblemTemplate,
    sys: &LcpSystem,
    x: Vec<f64>,
    iterations: usize,
    solver_id: SolverId,
) -> ViSolution {
    let n = tpl.node_count();
    let mut u = tpl.trace_values.clone();
    for (k, &node) in sys.embed.iter().enumerate() {
        u[node] = x[k];
    }
    let mut r_red = sys.m.apply(&x);
    for (ri, fi) in r_red.iter_mut().zip(&sys.f) {
        *ri -= fi;
    }
    let mut multiplier = vec![0.0; n];
    for (k, &node) in sys.embed.iter().enumerate() {
        multiplier[node] = r_red[k];
    }
    let comp = comp_residual(&x, &r_red);
    let u_scale = config_scale(&x);
    let r_scale = config_scale(&sys.f);
    let mut active_mask = vec![false; n];
    let mut stationarity = 0.0f64;
    for (k, &node) in sys.embed.iter().enumerate() {
        let is_active = x[k] <= u_scale && r_red[k] > r_scale;
        active_mask[node] = is_active;
        if !is_active {
            stationarity = stationarity.max(r_red[k].abs());
        }
    }
    ViSolution {
        u: GridFunction {
            values: u,
            role: Role::State,
        },
        active_mask,
        residual_stationarity: stationarity,
        residual_complementarity: comp,
        iterations,
        solver_id,
        multiplier,
    }
}

fn config_scale(v: &[f64]) -> f64 {
    1e-9 * (1.0 + max_abs(v))
}

/// Solve the variational inequality of the template's mode at control g.
pub fn solve_vi(tpl: &ProblemTemplate, g: &[f64], config: &SolverConfig) -> Result<ViSolution> {
    config.validate()?;
    if g.len() != tpl.node_count() {
        return Err(Error::Config(
            "control length does not match the grid".into(),
        ));
    }
    let sys = build_lcp(tpl, g)?;
    let ctol = config.tol_comp * (1.0 + max_abs(&sys.f));

    let (x, iters) = run_kernel(config.primary, &sys.m, &sys.f, config)?;
    let primary = embed_solution(tpl, &sys, x, iters, config.primary);
    if primary.residual_complementarity > ctol.max(1e-14) {
        return Err(Error::SolverFailure(format!(
            "{} complementarity residual {:.3e} above tolerance {:.3e}",
            config.primary.label(),
            primary.residual_complementarity,
            ctol
        )));
    }

    if config.cross_check {
        let other = match config.primary {
            SolverId::Pdas => SolverId::Psor,
            SolverId::Psor => SolverId::Pdas,
        };
        let (x2, it2) = run_kernel(other, &sys.m, &sys.f, config)?;
        let secondary = embed_solution(tpl, &sys, x2, it2, other);
        let diff = ProblemTemplate::diff(&primary.u.values, &secondary.u.values);
        let dist = tpl.norm_v(&diff);
        let scale = 1.0 + tpl.norm_v(&primary.u.values);
        if dist > config.cross_tol * scale {
            return Err(Error::SolverFailure(format!(
                "solver disagreement: |{} - {}|_V = {:.3e} exceeds {:.3e}",
                config.primary.label(),
                other.label(),
                dist,
                config.cross_tol * scale
            )));
        }
    }
    Ok(primary)
}

/// Solve the trace-constrained problem (mode must be Dirichlet).
pub fn solve_dirichlet_vi(problem: &ViProblem, config: &SolverConfig) -> Result<ViSolution> {
    if problem.tpl.mode != Mode::Dirichlet {
        return Err(Error::Config(
            "solve_dirichlet_vi needs a Dirichlet-mode problem".into(),
        ));
    }
    solve_vi(&problem.tpl, &problem.g.values, config)
}

/// Solve the heat-exchange problem (mode must be Robin).
pub fn solve_robin_vi(problem: &ViProblem, config: &SolverConfig) -> Result<ViSolution> {
    if !matches!(problem.tpl.mode, Mode::Robin { .. }) {
        return Err(Error::Config(
            "solve_robin_vi needs a Robin-mode problem".into(),
        ));
    }
    solve_vi(&problem.tpl, &problem.g.values, config)
}

/// CSV dump `node_index, x, (y,) u, active, multiplier`.
pub fn write_solution_csv<W: Write>(
    tpl: &ProblemTemplate,
    sol: &ViSolution,
    w: &mut W,
) -> std::io::Result<()> {
    let two_d = tpl.grid.dim() == 2;
    if two_d {
        writeln!(w, "node_index,x,y,u,active,multiplier")?;
    } else {
        writeln!(w, "node_index,x,u,active,multiplier")?;
    }
    for i in 0..tpl.node_count() {
        let [x, y] = tpl.grid.coord(i);
        if two_d {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e},{},{:.17e}",
                i, x, y, sol.u.values[i], sol.active_mask[i] as u8, sol.multiplier[i]
            )?;
        } else {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{},{:.17e}",
                i, x, sol.u.values[i], sol.active_mask[i] as u8, sol.multiplier[i]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_template, MassKind};
    use crate::fields::{random_nonneg_vector, random_vector};
    use crate::grid::{build_grid, Side};

    fn tpl(dim: usize, n: usize, mode: Mode, b: f64, q: f64) -> ProblemTemplate {
        let grid = build_grid(dim, n, &[Side::Left]).unwrap();
        let qf = GridFunction::constant(&grid, Role::FluxData, q);
        let bf = GridFunction::constant(&grid, Role::TraceData, b);
        assemble_template(&grid, &qf, &bf, mode, MassKind::Consistent).unwrap()
    }

    fn small_m(entries: [[f64; 2]; 2]) -> SymCsr {
        SymCsr::from_triplets(
            2,
            &[
                (0, 0, entries[0][0]),
                (0, 1, entries[0][1]),
                (1, 0, entries[1][0]),
                (1, 1, entries[1][1]),
            ],
        )
    }

    #[test]
    fn psor_separable_projection() {
        let m = small_m([[1.0, 0.0], [0.0, 1.0]]);
        let (x, _) = psor(&m, &[1.0, -1.0], &SolverConfig::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!(x[1].abs() < 1e-10);
    }

    #[test]
    fn kernels_match_hand_solved_lcps() {
        let m = small_m([[2.0, -1.0], [-1.0, 2.0]]);
        let cfg = SolverConfig::default();
        for (f, expect) in [([1.0, 1.0], [1.0, 1.0]), ([-3.0, 0.0], [0.0, 0.0])] {
            let (xs, _) = psor(&m, &f, &cfg).unwrap();
            let (xd, _) = pdas(&m, &f, &cfg).unwrap();
            for i in 0..2 {
                assert!((xs[i] - expect[i]).abs() < 1e-9, "psor {f:?} -> {xs:?}");
                assert!((xd[i] - expect[i]).abs() < 1e-12, "pdas {f:?} -> {xd:?}");
                assert!((xs[i] - xd[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn nonpositive_rhs_on_m_matrix_gives_zero() {
        let m = small_m([[2.0, -1.0], [-1.0, 2.0]]);
        let (x, _) = pdas(&m, &[-1.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_data_solves_to_zero_with_inactive_mask() {
        for mode in [Mode::Dirichlet, Mode::Robin { h: 3.0 }] {
            let t = tpl(1, 9, mode, 0.0, 0.0);
            let sol = solve_vi(&t, &[0.0; 9], &SolverConfig::default()).unwrap();
            assert!(sol.u.values.iter().all(|&v| v.abs() < 1e-14));
            // u = 0 with zero residual classifies inactive everywhere
            assert!(sol.active_mask.iter().all(|&a| !a));
            assert!(sol.residual_complementarity < 1e-14);
        }
    }

    #[test]
    fn strongly_negative_source_clamps_to_obstacle() {
        let t = tpl(1, 17, Mode::Dirichlet, 0.0, 0.0);
        let sol = solve_vi(&t, &[-10.0; 17], &SolverConfig::default()).unwrap();
        assert!(sol.u.values.iter().all(|&v| v.abs() < 1e-12));
        // residual is -B_H g > 0 at every free node: all active
        let free = t.grid.free_nodes();
        assert!(free.iter().all(|&i| sol.active_mask[i]));
    }

    #[test]
    fn analytic_quadratic_dirichlet() {
        // -u'' = 2, u(0) = 1, u'(1) = 0  ->  u = -x^2 + 2x + 1 (no contact);
        // piecewise-linear elements are nodally exact here
        for n in [5, 33, 65] {
            let t = tpl(1, n, Mode::Dirichlet, 1.0, 0.0);
            let sol = solve_vi(&t, &vec![2.0; n], &SolverConfig::default()).unwrap();
            for i in 0..n {
                let x = t.grid.coord(i)[0];
                let exact = -x * x + 2.0 * x + 1.0;
                assert!(
                    (sol.u.values[i] - exact).abs() < 1e-10,
                    "n={n} node {i}: {} vs {exact}",
                    sol.u.values[i]
                );
            }
            assert!(sol.active_mask.iter().all(|&a| !a));
        }
    }

    #[test]
    fn analytic_quadratic_robin() {
        // -u'' = 2, u'(0) = h (u(0) - 1), u'(1) = 0 -> u = -x^2 + 2x + 1 + 2/h
        let h = 10.0;
        let t = tpl(1, 33, Mode::Robin { h }, 1.0, 0.0);
        let sol = solve_vi(&t, &vec![2.0; 33], &SolverConfig::default()).unwrap();
        for i in 0..33 {
            let x = t.grid.coord(i)[0];
            let exact = -x * x + 2.0 * x + 1.0 + 2.0 / h;
            assert!((sol.u.values[i] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn robin_limit_approaches_dirichlet() {
        let n = 33;
        let td = tpl(1, n, Mode::Dirichlet, 1.0, 0.0);
        let tr = tpl(1, n, Mode::Robin { h: 1e6 }, 1.0, 0.0);
        let cfg = SolverConfig::default();
        let ud = solve_vi(&td, &vec![2.0; n], &cfg).unwrap();
        let ur = solve_vi(&tr, &vec![2.0; n], &cfg).unwrap();
        let d = td.norm_v(&ProblemTemplate::diff(&ur.u.values, &ud.u.values));
        assert!(d <= 1e-3, "V-distance {d}");
    }

    #[test]
    fn negative_trace_data_is_infeasible() {
        let t = tpl(1, 9, Mode::Dirichlet, -0.5, 0.0);
        let err = solve_vi(&t, &[0.0; 9], &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn free_boundary_instance_cross_checks() {
        // step source: strong sink on half the domain gives a genuine
        // contact set, solvers must still agree
        let n = 65;
        let t = tpl(1, n, Mode::Dirichlet, 0.2, 0.0);
        let g: Vec<f64> = (0..n)
            .map(|i| {
                if t.grid.coord(i)[0] > 0.5 {
                    -50.0
                } else {
                    10.0
                }
            })
            .collect();
        let sol = solve_vi(&t, &g, &SolverConfig::default()).unwrap();
        assert!(sol.active_mask.iter().any(|&a| a), "expected contact");
        assert!(sol.active_mask.iter().any(|&a| !a));
        assert!(sol.u.values.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn psor_start_independence() {
        let n = 33;
        let t = tpl(1, n, Mode::Dirichlet, 0.2, 0.0);
        let g: Vec<f64> = (0..n)
            .map(|i| {
                if t.grid.coord(i)[0] > 0.5 {
                    -50.0
                } else {
                    10.0
                }
            })
            .collect();
        let sys_m = t.operative().extract(&t.grid.free_nodes());
        let f_full = t.rhs(&g);
        let coupling = t.stiffness.apply(&t.trace_values);
        let f: Vec<f64> = t
            .grid
            .free_nodes()
            .iter()
            .map(|&i| f_full[i] - coupling[i])
            .collect();
        let cfg = SolverConfig::default();
        let mut sols: Vec<Vec<f64>> = Vec::new();
        for seed in 0..5 {
            let x0 = random_nonneg_vector(seed, f.len(), 1.0);
            let (x, _) = psor_from(&sys_m, &f, &x0, &cfg).unwrap();
            sols.push(x);
        }
        for s in &sols[1..] {
            let d = ProblemTemplate::diff(s, &sols[0]);
            // embed into full vector for the V-norm
            let mut full = vec![0.0; n];
            for (k, &node) in t.grid.free_nodes().iter().enumerate() {
                full[node] = d[k];
            }
            assert!(t.norm_v(&full) <= 1e-8);
        }
    }

    #[test]
    fn weak_maximum_principle_regime() {
        // g >= 0, q <= 0, b >= 0: constraint never binds, u >= 0
        let n = 17;
        let t = tpl(1, n, Mode::Dirichlet, 0.3, -1.0);
        let g: Vec<f64> = random_vector(11, n, 1.0).iter().map(|v| v.abs()).collect();
        let sol = solve_vi(&t, &g, &SolverConfig::default()).unwrap();
        assert!(sol.u.values.iter().all(|&v| v >= -1e-12));
        assert!(sol.active_mask.iter().all(|&a| !a));
        // equals the unconstrained solve
        assert!(sol.residual_stationarity < 1e-9);
    }

    #[test]
    fn two_dimensional_instance_cross_checks() {
        let t = tpl(2, 9, Mode::Robin { h: 10.0 }, 0.5, 0.0);
        let g = random_vector(5, t.node_count(), 5.0);
        let sol = solve_vi(&t, &g, &SolverConfig::default()).unwrap();
        assert!(sol.u.values.iter().all(|&v| v >= -1e-10));
        assert!(sol.residual_complementarity <= 1e-10 * (1.0 + 10.0));
    }

    #[test]
    fn contact_vanishes_for_large_h() {
        // with g = -1 <= 0, b = 1, q = 0 the unconstrained Robin solution is
        // 0.5 x^2 - x + 1 - 1/h, which clears the obstacle exactly when h > 2
        let n = 65;
        let cfg = SolverConfig::default();
        let mut threshold = None;
        for k in 0..8 {
            let h = 0.5 * 2f64.powi(k); // 0.5 .. 64
            let t = tpl(1, n, Mode::Robin { h }, 1.0, 0.0);
            let sol = solve_vi(&t, &vec![-1.0; n], &cfg).unwrap();
            let contact = sol.active_mask.iter().any(|&a| a);
            if !contact && threshold.is_none() {
                threshold = Some(h);
            }
        }
        let h_star = threshold.expect("no contact-free h found");
        assert!(
            (2.0..=4.0).contains(&h_star),
            "empirical threshold {h_star}"
        );
    }

    #[test]
    fn invalid_omega_rejected() {
        let cfg = SolverConfig {
            omega: 2.0,
            ..SolverConfig::default()
        };
        let m = small_m([[1.0, 0.0], [0.0, 1.0]]);
        assert!(psor(&m, &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn solution_csv_shape() {
        let t = tpl(1, 5, Mode::Dirichlet, 1.0, 0.0);
        let sol = solve_vi(&t, &[2.0; 5], &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_solution_csv(&t, &sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "node_index,x,u,active,multiplier");
        assert_eq!(lines.count(), 5);
    }
}
