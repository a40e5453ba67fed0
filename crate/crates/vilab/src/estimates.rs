//! Slack reports for the inequalities the solution map satisfies.
//!
//! Every checker evaluates both sides of one inequality on concrete solves
//! and reports `slack = rhs - lhs` with `pass ⇔ slack >= -tol`, where
//! `tol = 1e-9 (1 + |rhs|)`. Equality checks report the absolute mismatch as
//! `lhs` against `rhs = 0`, so the same pass rule covers them. Solver
//! tolerances sit two orders below the checker tolerance, so a failing
//! report indicts the inequality, not the solver.

use crate::assembly::{Mode, ProblemTemplate};
use crate::convergence::{SweepRow, SweepTable};
use crate::error::{Error, Result};
use crate::fields::random_vector;
use crate::grid::Grid;
use crate::solver::{solve_vi, SolverConfig, ViSolution};
use std::collections::BTreeMap;

/// Default checker tolerance, relative to the inequality's right-hand side.
pub fn tol_check(rhs: f64) -> f64 {
    1e-9 * (1.0 + rhs.abs())
}

/// Named left/right sides and slack for one inequality at one configuration.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub name: String,
    pub mode: String,
    pub mu: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub components: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(name: &str, mode: &str, mu: Option<f64>, lhs: f64, rhs: f64) -> EstimateReport {
        Self::with_tol(name, mode, mu, lhs, rhs, tol_check(rhs))
    }

    pub fn with_tol(
        name: &str,
        mode: &str,
        mu: Option<f64>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> EstimateReport {
        let slack = rhs - lhs;
        EstimateReport {
            name: name.to_string(),
            mode: mode.to_string(),
            mu,
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
            components: BTreeMap::new(),
        }
    }

    pub fn component(mut self, key: &str, value: f64) -> EstimateReport {
        self.components.insert(key.to_string(), value);
        self
    }

    fn and_pass(mut self, extra: bool) -> EstimateReport {
        self.pass = self.pass && extra;
        self
    }
}

/// Two states, their convex combination, and the state of the combined
/// control, all at one μ.
#[derive(Debug, Clone)]
pub struct ConvexCombo {
    pub mu: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub u1: ViSolution,
    pub u2: ViSolution,
    /// μ u₁ + (1-μ) u₂, recomputed on access paths that need it.
    pub u3: Vec<f64>,
    /// State of the combined control μ g₁ + (1-μ) g₂.
    pub u4: ViSolution,
}

/// Solves u₁, u₂ once and stamps out `ConvexCombo`s across μ.
pub struct ComboFamily<'a> {
    pub tpl: &'a ProblemTemplate,
    pub config: SolverConfig,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub u1: ViSolution,
    pub u2: ViSolution,
}

impl<'a> ComboFamily<'a> {
    pub fn new(
        tpl: &'a ProblemTemplate,
        g1: Vec<f64>,
        g2: Vec<f64>,
        config: SolverConfig,
    ) -> Result<ComboFamily<'a>> {
        let u1 = solve_vi(tpl, &g1, &config)?;
        let u2 = solve_vi(tpl, &g2, &config)?;
        Ok(ComboFamily {
            tpl,
            config,
            g1,
            g2,
            u1,
            u2,
        })
    }

    pub fn at(&self, mu: f64) -> Result<ConvexCombo> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Infeasible(format!("mu must lie in [0,1], got {mu}")));
        }
        let g3: Vec<f64> = self
            .g1
            .iter()
            .zip(&self.g2)
            .map(|(a, b)| mu * a + (1.0 - mu) * b)
            .collect();
        let u4 = solve_vi(self.tpl, &g3, &self.config)?;
        let u3: Vec<f64> = self
            .u1
            .u
            .values
            .iter()
            .zip(&self.u2.u.values)
            .map(|(a, b)| mu * a + (1.0 - mu) * b)
            .collect();
        Ok(ConvexCombo {
            mu,
            g1: self.g1.clone(),
            g2: self.g2.clone(),
            u1: self.u1.clone(),
            u2: self.u2.clone(),
            u3,
            u4,
        })
    }
}

/// Residuals of each state's inequality tested against the other state:
/// α = a(u₁, u₂-u₁) - ⟨g₁, u₂-u₁⟩ and symmetrically β. Both are
/// nonnegative because the other state is a feasible test point.
pub fn compute_alpha_beta(tpl: &ProblemTemplate, combo: &ConvexCombo) -> (f64, f64) {
    let d21 = ProblemTemplate::diff(&combo.u2.u.values, &combo.u1.u.values);
    let alpha = tpl.energy(&combo.u1.u.values, &d21) - tpl.pairing(&combo.g1, &d21);
    let d12: Vec<f64> = d21.iter().map(|v| -v).collect();
    let beta = tpl.energy(&combo.u2.u.values, &d12) - tpl.pairing(&combo.g2, &d12);
    (alpha, beta)
}

fn residual_at(tpl: &ProblemTemplate, u: &ViSolution, g: &[f64], test: &[f64]) -> f64 {
    let d = ProblemTemplate::diff(test, &u.u.values);
    tpl.energy(&u.u.values, &d) - tpl.pairing(g, &d)
}

/// Error estimate between the convex combination of states u₃(μ) and the
/// state of the combined control u₄(μ):
///
/// ```text
/// m |u4 - u3|_V^2 + μ I14 + (1-μ) I24  <=  μ(1-μ)(α + β)
/// ```
///
/// with I14, I24 >= 0 the inequality residuals of u₁, u₂ tested at u₄.
/// `coercivity_m` must come from [`crate::assembly::estimate_coercivity`]
/// on the subspace matching the template's mode.
pub fn check_theorem1(
    tpl: &ProblemTemplate,
    combo: &ConvexCombo,
    coercivity_m: f64,
) -> EstimateReport {
    let mu = combo.mu;
    let (alpha, beta) = compute_alpha_beta(tpl, combo);
    let i14 = residual_at(tpl, &combo.u1, &combo.g1, &combo.u4.u.values);
    let i24 = residual_at(tpl, &combo.u2, &combo.g2, &combo.u4.u.values);
    let d43 = ProblemTemplate::diff(&combo.u4.u.values, &combo.u3);
    let dist2 = tpl.mass_v.bilinear(&d43, &d43);
    let lhs = coercivity_m * dist2 + mu * i14 + (1.0 - mu) * i24;
    let rhs = mu * (1.0 - mu) * (alpha + beta);
    let tol = tol_check(rhs);
    let residuals_nonneg = i14 >= -tol && i24 >= -tol && alpha >= -tol && beta >= -tol;
    EstimateReport::new("theorem1", tpl.mode.label(), Some(mu), lhs, rhs)
        .component("alpha", alpha)
        .component("beta", beta)
        .component("i14", i14)
        .component("i24", i24)
        .component("coercivity_m", coercivity_m)
        .component("dist_v_sq", dist2)
        .and_pass(residuals_nonneg)
}

/// Solution-map monotonicity in the source: g₁ >= g₂ nodewise implies
/// u_{g₁} >= u_{g₂} nodewise. Refuses instead of passing vacuously when the
/// precondition fails.
pub fn check_monotone_in_g(
    tpl: &ProblemTemplate,
    g1: &[f64],
    g2: &[f64],
    config: &SolverConfig,
) -> Result<EstimateReport> {
    if g1.iter().zip(g2).any(|(a, b)| a < b) {
        return Err(Error::Infeasible(
            "monotonicity checker requires g1 >= g2 nodewise".into(),
        ));
    }
    let u1 = solve_vi(tpl, g1, config)?;
    let u2 = solve_vi(tpl, g2, config)?;
    let worst =
        u2.u.values
            .iter()
            .zip(&u1.u.values)
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    Ok(EstimateReport::new(
        "monotone_g",
        tpl.mode.label(),
        None,
        worst,
        0.0,
    ))
}

/// Sandwich bounds: the state of any convex combination of g₁, g₂ sits
/// between the states at the nodewise min and max of g₁, g₂.
pub fn check_sandwich(
    tpl: &ProblemTemplate,
    combo: &ConvexCombo,
    config: &SolverConfig,
) -> Result<EstimateReport> {
    let g_min: Vec<f64> = combo
        .g1
        .iter()
        .zip(&combo.g2)
        .map(|(a, b)| a.min(*b))
        .collect();
    let g_max: Vec<f64> = combo
        .g1
        .iter()
        .zip(&combo.g2)
        .map(|(a, b)| a.max(*b))
        .collect();
    let u_min = solve_vi(tpl, &g_min, config)?;
    let u_max = solve_vi(tpl, &g_max, config)?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..tpl.node_count() {
        let u4 = combo.u4.u.values[i];
        worst = worst
            .max(u_min.u.values[i] - u4)
            .max(u4 - u_max.u.values[i]);
    }
    Ok(EstimateReport::new(
        "sandwich",
        tpl.mode.label(),
        Some(combo.mu),
        worst,
        0.0,
    ))
}

/// Pointwise monotony between the combination of states and the state of
/// the combined control: u₄(μ) <= u₃(μ); by nonnegativity of both this also
/// orders the H-norms.
pub fn check_mignot_monotony(tpl: &ProblemTemplate, combo: &ConvexCombo) -> EstimateReport {
    let worst = combo
        .u4
        .u
        .values
        .iter()
        .zip(&combo.u3)
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let max_gap = combo
        .u3
        .iter()
        .zip(&combo.u4.u.values)
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let n3 = tpl.norm_h(&combo.u3);
    let n4 = tpl.norm_h(&combo.u4.u.values);
    let norm_ok = n4 <= n3 + tol_check(n3);
    EstimateReport::new("mignot", tpl.mode.label(), Some(combo.mu), worst, 0.0)
        .component("norm_u3_h", n3)
        .component("norm_u4_h", n4)
        .component("max_gap", max_gap)
        .and_pass(norm_ok)
}

/// Squared-form stability estimate tying the combination error and the
/// state spread to the control spread:
///
/// ```text
/// |u3-u4|_V^2 + μ(1-μ)|u1-u2|_V^2 + (μ/λ) I14 + ((1-μ)/λ) I24
///     <= μ(1-μ)/λ² |g1-g2|_H^2
/// ```
///
/// The unsquared right-hand side variant is logged as a component.
pub fn check_lemma_l3(tpl: &ProblemTemplate, combo: &ConvexCombo, lambda: f64) -> EstimateReport {
    let mu = combo.mu;
    let i14 = residual_at(tpl, &combo.u1, &combo.g1, &combo.u4.u.values);
    let i24 = residual_at(tpl, &combo.u2, &combo.g2, &combo.u4.u.values);
    let d43 = ProblemTemplate::diff(&combo.u4.u.values, &combo.u3);
    let d12 = ProblemTemplate::diff(&combo.u1.u.values, &combo.u2.u.values);
    let dg = ProblemTemplate::diff(&combo.g1, &combo.g2);
    let dist34 = tpl.mass_v.bilinear(&d43, &d43);
    let dist12 = tpl.mass_v.bilinear(&d12, &d12);
    let dg_h2 = tpl.ip_h(&dg, &dg);
    let lhs = dist34 + mu * (1.0 - mu) * dist12 + (mu / lambda) * i14 + ((1.0 - mu) / lambda) * i24;
    let rhs = mu * (1.0 - mu) / (lambda * lambda) * dg_h2;
    EstimateReport::new("lemma_l3", tpl.mode.label(), Some(mu), lhs, rhs)
        .component("lambda", lambda)
        .component(
            "rhs_unsquared",
            mu * (1.0 - mu) / (lambda * lambda) * dg_h2.sqrt(),
        )
        .component("i14", i14)
        .component("i24", i24)
}

/// Bounds of the Robin family in the exchange coefficient, checked on their
/// stated precondition domains (g <= 0, b a positive constant, q >= 0 for
/// the first three; arbitrary data for the Lipschitz estimate):
///
/// 1. states stay below the boundary temperature b,
/// 2. lowering g to g-1 and h₁ to h₂ lowers the state,
/// 3. every Robin state stays below the Dirichlet state,
/// 4. `|u_{h2} - u_{h1}|_V <= (|γ₀|/(λ₁ min(1,h2))) |b - u_{h1}|_Γ₁ (h1-h2)`
///    with the trace norm |γ₀| and λ₁ computed from the discrete operators.
pub fn check_lemma_h_bounds(
    grid: &Grid,
    g: &[f64],
    b_const: f64,
    q: &crate::grid::GridFunction,
    h1: f64,
    h2: f64,
    config: &SolverConfig,
) -> Result<Vec<EstimateReport>> {
    use crate::assembly::{assemble_template, MassKind};
    use crate::grid::{GridFunction, Role};

    if g.iter().any(|&v| v > 0.0) {
        return Err(Error::Infeasible("h-bounds checker requires g <= 0".into()));
    }
    if b_const <= 0.0 || !b_const.is_finite() {
        return Err(Error::Infeasible(
            "h-bounds checker requires a positive constant b".into(),
        ));
    }
    if q.values.iter().any(|&v| v < 0.0) {
        return Err(Error::Infeasible("h-bounds checker requires q >= 0".into()));
    }
    if h2 <= 0.0 || h2 > h1 || h1.is_nan() {
        return Err(Error::Infeasible(format!(
            "need 0 < h2 <= h1, got h1={h1}, h2={h2}"
        )));
    }

    let b = GridFunction::constant(grid, Role::TraceData, b_const);
    let tpl_h1 = assemble_template(grid, q, &b, Mode::Robin { h: h1 }, MassKind::Consistent)?;
    let tpl_h2 = tpl_h1.with_mode(Mode::Robin { h: h2 })?;
    let tpl_dir = tpl_h1.with_mode(Mode::Dirichlet)?;

    let u_h1 = solve_vi(&tpl_h1, g, config)?;
    let u_h2 = solve_vi(&tpl_h2, g, config)?;
    let u_dir = solve_vi(&tpl_dir, g, config)?;

    // (1) trace cap
    let cap_worst = u_h1
        .u
        .values
        .iter()
        .chain(&u_h2.u.values)
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v - b_const));
    let cap = EstimateReport::new("h_bounds_trace_cap", "robin", None, cap_worst, 0.0)
        .component("b", b_const)
        .component("h1", h1)
        .component("h2", h2);

    // (2) monotone in the pair (g, h): lower both
    let g_lower: Vec<f64> = g.iter().map(|v| v - 1.0).collect();
    let u_low = solve_vi(&tpl_h2, &g_lower, config)?;
    let mono_worst = u_low
        .u
        .values
        .iter()
        .zip(&u_h1.u.values)
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let mono = EstimateReport::new("h_bounds_monotone", "robin", None, mono_worst, 0.0);

    // (3) Robin states stay below the Dirichlet state
    let dir_worst = u_h1
        .u
        .values
        .iter()
        .zip(&u_dir.u.values)
        .chain(u_h2.u.values.iter().zip(&u_dir.u.values))
        .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
    let vs_dir = EstimateReport::new("h_bounds_vs_dirichlet", "robin", None, dir_worst, 0.0);

    // (4) Lipschitz dependence on h, valid for any data
    let lipschitz = check_h_lipschitz(grid, g, &b, q, h1, h2, config)?;

    Ok(vec![cap, mono, vs_dir, lipschitz])
}

/// Lipschitz dependence of the Robin state on the exchange coefficient,
/// with constants computed from the discrete operators:
///
/// ```text
/// |u_{h2} - u_{h1}|_V <= (|γ₀| / (λ₁ min(1,h2))) |b - u_{h1}|_Γ₁ (h1 - h2)
/// ```
///
/// Unlike the ordering bounds this needs no sign conditions on the data.
pub fn check_h_lipschitz(
    grid: &Grid,
    g: &[f64],
    b: &crate::grid::GridFunction,
    q: &crate::grid::GridFunction,
    h1: f64,
    h2: f64,
    config: &SolverConfig,
) -> Result<EstimateReport> {
    use crate::assembly::{assemble_template, calibrate_lambda1, trace_operator_norm, MassKind};

    if h2 <= 0.0 || h2 > h1 || h1.is_nan() {
        return Err(Error::Infeasible(format!(
            "need 0 < h2 <= h1, got h1={h1}, h2={h2}"
        )));
    }
    let tpl_h1 = assemble_template(grid, q, b, Mode::Robin { h: h1 }, MassKind::Consistent)?;
    let tpl_h2 = tpl_h1.with_mode(Mode::Robin { h: h2 })?;
    let u_h1 = solve_vi(&tpl_h1, g, config)?;
    let u_h2 = solve_vi(&tpl_h2, g, config)?;

    let gamma0 = trace_operator_norm(&tpl_h1)?;
    let lambda1 = calibrate_lambda1(&tpl_h1, h2)?;
    let d = ProblemTemplate::diff(&u_h2.u.values, &u_h1.u.values);
    let lhs = tpl_h1.norm_v(&d);
    let gap: Vec<f64> = tpl_h1
        .trace_values
        .iter()
        .zip(&u_h1.u.values)
        .map(|(bi, ui)| bi - ui)
        .collect();
    let rhs = gamma0 / (lambda1 * h2.min(1.0)) * tpl_h1.norm_gamma1(&gap) * (h1 - h2);
    Ok(
        EstimateReport::new("h_bounds_lipschitz", "robin", None, lhs, rhs)
            .component("gamma0", gamma0)
            .component("lambda1", lambda1)
            .component("trace_gap", tpl_h1.norm_gamma1(&gap)),
    )
}

/// Stability of the solution map under source perturbations: for
/// g_n = g + ε_n r with a unit-H-norm direction r, the distances
/// `|u_{g_n} - u_g|_V` shrink with ε_n, vanish at ε = 0, and obey the
/// Lipschitz bound (1/λ)|g_n - g|_H.
pub struct ContinuityStudy {
    pub table: SweepTable,
    pub reports: Vec<EstimateReport>,
}

pub fn check_continuity(
    tpl: &ProblemTemplate,
    g: &[f64],
    perturbation_sizes: &[f64],
    seed: u64,
    config: &SolverConfig,
) -> Result<ContinuityStudy> {
    if perturbation_sizes.is_empty()
        || perturbation_sizes.windows(2).any(|w| w[1] >= w[0])
        || perturbation_sizes.iter().any(|&e| e <= 0.0)
    {
        return Err(Error::Infeasible(
            "perturbation sizes must be a strictly decreasing positive sequence".into(),
        ));
    }
    let lambda = crate::assembly::coercivity_for_mode(tpl)?;
    let n = tpl.node_count();
    let mut r = random_vector(seed, n, 1.0);
    let rn = tpl.norm_h(&r);
    r.iter_mut().for_each(|v| *v /= rn);

    let u_base = solve_vi(tpl, g, config)?;
    let mode = tpl.mode.label();
    let mut table = SweepTable::new("epsilon");
    let mut reports = Vec::new();
    let mut dists = Vec::new();

    for &eps in perturbation_sizes {
        let g_n: Vec<f64> = g.iter().zip(&r).map(|(a, b)| a + eps * b).collect();
        let sol = solve_vi(tpl, &g_n, config)?;
        let d = tpl.norm_v(&ProblemTemplate::diff(&sol.u.values, &u_base.u.values));
        let bound = eps / lambda;
        dists.push(d);
        reports.push(
            EstimateReport::new("continuity", mode, Some(eps), d, bound)
                .component("lambda", lambda),
        );
        table.push(SweepRow {
            param: eps,
            state_dist_v: d,
            extra: Some(bound),
            solver_iterations: sol.iterations,
            ..SweepRow::empty()
        });
    }

    // ε = 0 reproduces the base state exactly (deterministic resolve)
    let resolved = solve_vi(tpl, g, config)?;
    let d0 = tpl.norm_v(&ProblemTemplate::diff(&resolved.u.values, &u_base.u.values));
    reports.push(EstimateReport::new(
        "continuity_zero",
        mode,
        Some(0.0),
        d0,
        0.0,
    ));
    table.push(SweepRow {
        param: 0.0,
        state_dist_v: d0,
        extra: Some(0.0),
        solver_iterations: resolved.iterations,
        ..SweepRow::empty()
    });

    // distances nonincreasing along the shrinking ε sequence
    let worst_increase = dists
        .windows(2)
        .fold(f64::NEG_INFINITY, |m, w| m.max(w[1] - w[0]))
        .max(d0 - dists.last().copied().unwrap_or(f64::INFINITY));
    reports.push(EstimateReport::new(
        "continuity_monotone",
        mode,
        None,
        worst_increase,
        0.0,
    ));

    Ok(ContinuityStudy { table, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_template, coercivity_for_mode, MassKind};
    use crate::grid::{build_grid, GridFunction, Role, Side};

    fn tpl(mode: Mode) -> ProblemTemplate {
        let grid = build_grid(1, 33, &[Side::Left]).unwrap();
        let q = GridFunction::constant(&grid, Role::FluxData, 0.0);
        let b = GridFunction::constant(&grid, Role::TraceData, 0.5);
        assemble_template(&grid, &q, &b, mode, MassKind::Consistent).unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig::tight()
    }

    fn step_pair(t: &ProblemTemplate) -> (Vec<f64>, Vec<f64>) {
        let n = t.node_count();
        let g1: Vec<f64> = (0..n)
            .map(|i| {
                if t.grid.coord(i)[0] > 0.5 {
                    -60.0
                } else {
                    10.0
                }
            })
            .collect();
        let g2: Vec<f64> = (0..n)
            .map(|i| {
                if t.grid.coord(i)[0] > 0.5 {
                    10.0
                } else {
                    -60.0
                }
            })
            .collect();
        (g1, g2)
    }

    #[test]
    fn identical_sources_have_zero_residuals() {
        let t = tpl(Mode::Dirichlet);
        let g = random_vector(1, t.node_count(), 3.0);
        let fam = ComboFamily::new(&t, g.clone(), g, cfg()).unwrap();
        let combo = fam.at(0.4).unwrap();
        let (a, b) = compute_alpha_beta(&t, &combo);
        assert_eq!(a, 0.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn no_contact_pair_has_vanishing_residuals() {
        let t = tpl(Mode::Dirichlet);
        let n = t.node_count();
        let fam = ComboFamily::new(&t, vec![2.0; n], vec![2.5; n], cfg()).unwrap();
        let combo = fam.at(0.3).unwrap();
        let (a, b) = compute_alpha_beta(&t, &combo);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9, "alpha {a}, beta {b}");
        // and the combination equals the combined-state solve
        let d = t.norm_v(&ProblemTemplate::diff(&combo.u4.u.values, &combo.u3));
        assert!(d <= 1e-8, "combination gap {d}");
    }

    #[test]
    fn disjoint_contact_gives_positive_residuals() {
        let t = tpl(Mode::Dirichlet);
        let (g1, g2) = step_pair(&t);
        let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
        let combo = fam.at(0.5).unwrap();
        let (a, b) = compute_alpha_beta(&t, &combo);
        assert!(a > 1e-6, "alpha {a}");
        assert!(b > 1e-6, "beta {b}");
    }

    #[test]
    fn theorem1_holds_across_mu_and_modes() {
        for mode in [Mode::Dirichlet, Mode::Robin { h: 10.0 }] {
            let t = tpl(mode);
            let m = coercivity_for_mode(&t).unwrap();
            let (g1, g2) = step_pair(&t);
            let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
            for k in 0..=10 {
                let mu = k as f64 / 10.0;
                let rep = check_theorem1(&t, &fam.at(mu).unwrap(), m);
                assert!(rep.pass, "mode {mode:?} mu {mu}: slack {}", rep.slack);
            }
        }
    }

    #[test]
    fn theorem1_endpoints_degenerate_to_zero() {
        let t = tpl(Mode::Dirichlet);
        let m = coercivity_for_mode(&t).unwrap();
        let (g1, g2) = step_pair(&t);
        let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
        for mu in [0.0, 1.0] {
            let rep = check_theorem1(&t, &fam.at(mu).unwrap(), m);
            assert!(rep.pass);
            assert!(rep.rhs == 0.0);
            assert!(rep.lhs.abs() <= 1e-9, "mu {mu}: lhs {}", rep.lhs);
        }
    }

    #[test]
    fn monotone_in_g_passes_and_enforces_precondition() {
        let t = tpl(Mode::Dirichlet);
        let n = t.node_count();
        let g2 = random_vector(4, n, 3.0);
        let g1: Vec<f64> = g2.iter().map(|v| v + 1.0).collect();
        let rep = check_monotone_in_g(&t, &g1, &g2, &cfg()).unwrap();
        assert!(rep.pass);
        let rep_eq = check_monotone_in_g(&t, &g2, &g2, &cfg()).unwrap();
        assert_eq!(rep_eq.lhs, 0.0);
        assert!(check_monotone_in_g(&t, &g2, &g1, &cfg()).is_err());
        // Robin variant
        let tr = tpl(Mode::Robin { h: 5.0 });
        assert!(check_monotone_in_g(&tr, &g1, &g2, &cfg()).unwrap().pass);
    }

    #[test]
    fn sandwich_holds_for_sign_mixed_pair() {
        for mode in [Mode::Dirichlet, Mode::Robin { h: 10.0 }] {
            let t = tpl(mode);
            let n = t.node_count();
            let g1 = random_vector(6, n, 40.0);
            let g2 = random_vector(7, n, 40.0);
            let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
            for mu in [0.0, 0.3, 1.0] {
                let rep = check_sandwich(&t, &fam.at(mu).unwrap(), &cfg()).unwrap();
                assert!(rep.pass, "mode {mode:?} mu {mu}: lhs {}", rep.lhs);
            }
        }
    }

    #[test]
    fn mignot_monotony_with_equality_at_endpoints() {
        let t = tpl(Mode::Dirichlet);
        let (g1, g2) = step_pair(&t);
        let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
        for mu in [0.0, 1.0] {
            let rep = check_mignot_monotony(&t, &fam.at(mu).unwrap());
            assert!(rep.pass);
            assert_eq!(rep.lhs, 0.0, "endpoint mu {mu} should be exact");
        }
        let mid = check_mignot_monotony(&t, &fam.at(0.5).unwrap());
        assert!(mid.pass);
        // active sets present: u3 exceeds u4 strictly somewhere
        assert!(mid.components["max_gap"] > 1e-8, "expected a strict gap");
    }

    #[test]
    fn lemma_l3_bound_holds() {
        for mode in [Mode::Dirichlet, Mode::Robin { h: 10.0 }] {
            let t = tpl(mode);
            let lambda = coercivity_for_mode(&t).unwrap();
            let (g1, g2) = step_pair(&t);
            let fam = ComboFamily::new(&t, g1, g2, cfg()).unwrap();
            for mu in [0.0, 0.2, 0.5, 0.8, 1.0] {
                let rep = check_lemma_l3(&t, &fam.at(mu).unwrap(), lambda);
                assert!(rep.pass, "mode {mode:?} mu {mu}: slack {}", rep.slack);
                if mu == 0.0 || mu == 1.0 {
                    assert!(rep.lhs.abs() <= 1e-9 && rep.rhs == 0.0);
                }
            }
        }
    }

    #[test]
    fn h_bounds_suite_on_legal_domain() {
        let grid = build_grid(1, 33, &[Side::Left]).unwrap();
        let q = GridFunction::constant(&grid, Role::FluxData, 0.0);
        let g = vec![-5.0; grid.node_count()];
        let reports = check_lemma_h_bounds(&grid, &g, 1.0, &q, 10.0, 1.0, &cfg()).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.pass, "{} slack {}", r.name, r.slack);
        }
        // equal coefficients: the Lipschitz row is exactly zero on both sides
        let same = check_lemma_h_bounds(&grid, &g, 1.0, &q, 7.0, 7.0, &cfg()).unwrap();
        let lip = same
            .iter()
            .find(|r| r.name == "h_bounds_lipschitz")
            .unwrap();
        assert_eq!(lip.lhs, 0.0);
        assert_eq!(lip.rhs, 0.0);
        // preconditions enforced
        assert!(check_lemma_h_bounds(&grid, &vec![1.0; 33], 1.0, &q, 2.0, 1.0, &cfg()).is_err());
        assert!(check_lemma_h_bounds(&grid, &g, -1.0, &q, 2.0, 1.0, &cfg()).is_err());
        assert!(check_lemma_h_bounds(&grid, &g, 1.0, &q, 1.0, 2.0, &cfg()).is_err());
    }

    #[test]
    fn robin_states_increase_with_h_below_dirichlet() {
        // g <= 0: the Robin family increases in h and stays below the
        // Dirichlet state
        let grid = build_grid(1, 33, &[Side::Left]).unwrap();
        let q = GridFunction::constant(&grid, Role::FluxData, 0.0);
        let b = GridFunction::constant(&grid, Role::TraceData, 1.0);
        let g = vec![-5.0; 33];
        let base =
            assemble_template(&grid, &q, &b, Mode::Robin { h: 1.0 }, MassKind::Consistent).unwrap();
        let dir = base.with_mode(Mode::Dirichlet).unwrap();
        let u_dir = solve_vi(&dir, &g, &cfg()).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for h in [1.0, 10.0, 100.0] {
            let t = base.with_mode(Mode::Robin { h }).unwrap();
            let u = solve_vi(&t, &g, &cfg()).unwrap();
            if let Some(p) = &prev {
                for (ui, pi) in u.u.values.iter().zip(p) {
                    assert!(*ui >= pi - 1e-10);
                }
            }
            for (ui, di) in u.u.values.iter().zip(&u_dir.u.values) {
                assert!(*ui <= di + 1e-10);
            }
            prev = Some(u.u.values.clone());
        }
    }

    #[test]
    fn continuity_contract_in_both_modes() {
        for mode in [Mode::Dirichlet, Mode::Robin { h: 10.0 }] {
            let t = tpl(mode);
            let g = random_vector(9, t.node_count(), 5.0);
            let eps = [1.0, 0.5, 0.25, 0.125, 0.0625];
            let study = check_continuity(&t, &g, &eps, 42, &cfg()).unwrap();
            for r in &study.reports {
                assert!(
                    r.pass,
                    "{} ({:?}): lhs {} rhs {}",
                    r.name, r.mu, r.lhs, r.rhs
                );
            }
            let zero = study
                .reports
                .iter()
                .find(|r| r.name == "continuity_zero")
                .unwrap();
            assert_eq!(zero.lhs, 0.0);
        }
        let t = tpl(Mode::Dirichlet);
        let g = vec![0.0; t.node_count()];
        assert!(check_continuity(&t, &g, &[0.5, 0.5], 1, &cfg()).is_err());
        assert!(check_continuity(&t, &g, &[], 1, &cfg()).is_err());
    }
}
