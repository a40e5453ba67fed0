//! Finite-element assembly of the discrete operators.
//!
//! Piecewise-linear hats in 1D, bilinear elements on square cells in 2D.
//! The assembled pieces are
//!
//! * `stiffness`    : A, the pure-Neumann stiffness ∫∇u·∇v (A·1 = 0),
//! * `mass_h`       : B_H, the discrete L²(Ω) inner product,
//! * `mass_v`       : B_V = A + B_H, the discrete H¹(Ω) inner product,
//! * `boundary_mass`: diagonal Γ₁ mass from trapezoidal edge quadrature,
//! * `flux_load`    : assembled ∫_{Γ₂} q v ds,
//! * `trace_values` : b extended by zero off Γ₁.
//!
//! In Robin mode the operative bilinear form is A + h·C; in Dirichlet mode
//! it is A with Γ₁ rows eliminated at solve time and b folded into the
//! right-hand side.

use crate::eigen;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Role};
use crate::sparse::SymCsr;

/// Boundary condition family on Γ₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// u = b on Γ₁.
    Dirichlet,
    /// -∂u/∂n = h (u - b) on Γ₁.
    Robin { h: f64 },
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Dirichlet => "dirichlet",
            Mode::Robin { .. } => "robin",
        }
    }

    pub fn h(&self) -> Option<f64> {
        match self {
            Mode::Dirichlet => None,
            Mode::Robin { h } => Some(*h),
        }
    }
}

/// L²(Ω) mass treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassKind {
    #[default]
    Consistent,
    Lumped,
}

/// Everything of the discrete problem except the control g.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub grid: Grid,
    pub stiffness: SymCsr,
    pub mass_h: SymCsr,
    pub mass_v: SymCsr,
    /// Diagonal of the Γ₁ boundary mass matrix C.
    pub boundary_mass: Vec<f64>,
    /// Assembled flux load; pairing subtracts it.
    pub flux_load: Vec<f64>,
    /// Trace data b extended by zero off Γ₁.
    pub trace_values: Vec<f64>,
    pub mode: Mode,
    pub mass_kind: MassKind,
    /// A in Dirichlet mode, A + h·C in Robin mode.
    operative: SymCsr,
}

/// Assembled discrete variational-inequality problem.
#[derive(Debug, Clone)]
pub struct ViProblem {
    pub tpl: ProblemTemplate,
    pub g: GridFunction,
}

/// Subspace on which a coercivity constant is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// Functions vanishing on Γ₁ (Dirichlet energy space).
    ZeroTrace,
    /// All of the discrete space; requires Robin mode.
    Full,
}

pub fn assemble_template(
    grid: &Grid,
    q: &GridFunction,
    b: &GridFunction,
    mode: Mode,
    mass_kind: MassKind,
) -> Result<ProblemTemplate> {
    if q.role != Role::FluxData {
        return Err(Error::Config("q must carry the FluxData role".into()));
    }
    if b.role != Role::TraceData {
        return Err(Error::Config("b must carry the TraceData role".into()));
    }
    let g2 = grid.gamma2_nodes();
    let g1 = grid.gamma1_nodes();
    if q.len() != g2.len() || b.len() != g1.len() {
        return Err(Error::Config("boundary data length mismatch".into()));
    }
    if let Mode::Robin { h } = mode {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::Config(format!(
                "Robin coefficient h must be positive, got {h}"
            )));
        }
    }

    let n = grid.node_count();
    let cell = grid.cell();
    let mut a_tri: Vec<(usize, usize, f64)> = Vec::new();
    let mut m_tri: Vec<(usize, usize, f64)> = Vec::new();

    match grid.dim() {
        1 => {
            let k_loc = [[1.0 / cell, -1.0 / cell], [-1.0 / cell, 1.0 / cell]];
            let m_loc = [[cell / 3.0, cell / 6.0], [cell / 6.0, cell / 3.0]];
            for c in grid.cells() {
                let nodes = [c[0], c[1]];
                for (li, &gi) in nodes.iter().enumerate() {
                    for (lj, &gj) in nodes.iter().enumerate() {
                        a_tri.push((gi, gj, k_loc[li][lj]));
                        m_tri.push((gi, gj, m_loc[li][lj]));
                    }
                }
            }
        }
        _ => {
            // bilinear element on a square: stiffness is size-independent
            let k_loc = [
                [4.0, -1.0, -2.0, -1.0],
                [-1.0, 4.0, -1.0, -2.0],
                [-2.0, -1.0, 4.0, -1.0],
                [-1.0, -2.0, -1.0, 4.0],
            ];
            let m_loc = [
                [4.0, 2.0, 1.0, 2.0],
                [2.0, 4.0, 2.0, 1.0],
                [1.0, 2.0, 4.0, 2.0],
                [2.0, 1.0, 2.0, 4.0],
            ];
            let ks = 1.0 / 6.0;
            let ms = cell * cell / 36.0;
            for c in grid.cells() {
                for li in 0..4 {
                    for lj in 0..4 {
                        a_tri.push((c[li], c[lj], ks * k_loc[li][lj]));
                        m_tri.push((c[li], c[lj], ms * m_loc[li][lj]));
                    }
                }
            }
        }
    }

    let stiffness = SymCsr::from_triplets(n, &a_tri);
    let mass_h = match mass_kind {
        MassKind::Consistent => SymCsr::from_triplets(n, &m_tri),
        MassKind::Lumped => {
            let consistent = SymCsr::from_triplets(n, &m_tri);
            let lumped = consistent.apply(&vec![1.0; n]);
            SymCsr::from_triplets(
                n,
                &lumped
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (i, i, v))
                    .collect::<Vec<_>>(),
            )
        }
    };
    let mut v_tri = stiffness.to_triplets();
    v_tri.extend(mass_h.to_triplets());
    let mass_v = SymCsr::from_triplets(n, &v_tri);

    let boundary_mass = grid.gamma1_weight().to_vec();

    let mut flux_load = vec![0.0; n];
    for (k, &node) in g2.iter().enumerate() {
        flux_load[node] = q.values[k] * grid.gamma2_weight()[node];
    }
    let mut trace_values = vec![0.0; n];
    for (k, &node) in g1.iter().enumerate() {
        trace_values[node] = b.values[k];
    }

    let operative = match mode {
        Mode::Dirichlet => stiffness.clone(),
        Mode::Robin { h } => {
            let hc: Vec<f64> = boundary_mass.iter().map(|w| h * w).collect();
            stiffness.add_diagonal(&hc)
        }
    };

    Ok(ProblemTemplate {
        grid: grid.clone(),
        stiffness,
        mass_h,
        mass_v,
        boundary_mass,
        flux_load,
        trace_values,
        mode,
        mass_kind,
        operative,
    })
}

/// Assemble the full problem (consistent mass).
pub fn assemble(
    grid: &Grid,
    g: &GridFunction,
    q: &GridFunction,
    b: &GridFunction,
    mode: Mode,
) -> Result<ViProblem> {
    assemble_with(grid, g, q, b, mode, MassKind::Consistent)
}

pub fn assemble_with(
    grid: &Grid,
    g: &GridFunction,
    q: &GridFunction,
    b: &GridFunction,
    mode: Mode,
    mass_kind: MassKind,
) -> Result<ViProblem> {
    if g.role != Role::Control && g.role != Role::State {
        return Err(Error::Config("g must be a full nodal field".into()));
    }
    if g.len() != grid.node_count() {
        return Err(Error::Config("g length does not match the grid".into()));
    }
    let tpl = assemble_template(grid, q, b, mode, mass_kind)?;
    Ok(ViProblem { tpl, g: g.clone() })
}

impl ProblemTemplate {
    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    /// A (Dirichlet) or A + h·C (Robin).
    pub fn operative(&self) -> &SymCsr {
        &self.operative
    }

    /// Same template under a different boundary mode (matrices reused).
    pub fn with_mode(&self, mode: Mode) -> Result<ProblemTemplate> {
        if let Mode::Robin { h } = mode {
            if h <= 0.0 || !h.is_finite() {
                return Err(Error::Config(format!(
                    "Robin coefficient h must be positive, got {h}"
                )));
            }
        }
        let operative = match mode {
            Mode::Dirichlet => self.stiffness.clone(),
            Mode::Robin { h } => {
                let hc: Vec<f64> = self.boundary_mass.iter().map(|w| h * w).collect();
                self.stiffness.add_diagonal(&hc)
            }
        };
        Ok(ProblemTemplate {
            mode,
            operative,
            ..self.clone()
        })
    }

    /// Right-hand side of the discrete inequality for control g:
    /// B_H g − q_vec (+ h·C·b in Robin mode).
    pub fn rhs(&self, g: &[f64]) -> Vec<f64> {
        let mut f = self.mass_h.apply(g);
        for (fi, qi) in f.iter_mut().zip(&self.flux_load) {
            *fi -= qi;
        }
        if let Mode::Robin { h } = self.mode {
            for ((fi, wi), bi) in f
                .iter_mut()
                .zip(&self.boundary_mass)
                .zip(&self.trace_values)
            {
                *fi += h * wi * bi;
            }
        }
        f
    }

    /// Discrete duality pairing ⟨g, v⟩ of the problem data against v.
    pub fn pairing(&self, g: &[f64], v: &[f64]) -> f64 {
        self.rhs(g).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Energy form of the operative matrix: a(u,v) or a_h(u,v).
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        self.operative.bilinear(u, v)
    }

    pub fn ip_h(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass_h.bilinear(u, v)
    }

    pub fn norm_h(&self, v: &[f64]) -> f64 {
        self.mass_h.bilinear(v, v).max(0.0).sqrt()
    }

    pub fn norm_v(&self, v: &[f64]) -> f64 {
        self.mass_v.bilinear(v, v).max(0.0).sqrt()
    }

    /// Discrete L²(Γ₁) norm.
    pub fn norm_gamma1(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.boundary_mass)
            .map(|(vi, wi)| wi * vi * vi)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Nodewise difference u − w.
    pub fn diff(u: &[f64], w: &[f64]) -> Vec<f64> {
        u.iter().zip(w).map(|(a, b)| a - b).collect()
    }
}

/// Sharp discrete coercivity constant: the smallest generalized eigenvalue of
/// the operative matrix against B_V on the requested subspace, by inverse
/// power iteration to relative tolerance 1e-8.
pub fn estimate_coercivity(tpl: &ProblemTemplate, sub: Subspace) -> Result<f64> {
    match sub {
        Subspace::ZeroTrace => {
            let free = tpl.grid.free_nodes();
            let k = tpl.stiffness.extract(&free);
            let b = tpl.mass_v.extract(&free);
            eigen::smallest_generalized_eigenvalue(&k, &b, 1e-8)
        }
        Subspace::Full => match tpl.mode {
            Mode::Robin { .. } => {
                eigen::smallest_generalized_eigenvalue(tpl.operative(), &tpl.mass_v, 1e-8)
            }
            Mode::Dirichlet => Err(Error::Config(
                "full-space coercivity needs Robin mode (the pure-Neumann form is singular)".into(),
            )),
        },
    }
}

/// Coercivity constant for the mode actually in force: zero-trace subspace in
/// Dirichlet mode, full space in Robin mode.
pub fn coercivity_for_mode(tpl: &ProblemTemplate) -> Result<f64> {
    match tpl.mode {
        Mode::Dirichlet => estimate_coercivity(tpl, Subspace::ZeroTrace),
        Mode::Robin { .. } => estimate_coercivity(tpl, Subspace::Full),
    }
}

/// Discrete trace-operator norm: square root of the largest generalized
/// eigenvalue of (C, B_V).
pub fn trace_operator_norm(tpl: &ProblemTemplate) -> Result<f64> {
    eigen::largest_generalized_eigenvalue_diag(&tpl.boundary_mass, &tpl.mass_v, 1e-8)
        .map(|v| v.max(0.0).sqrt())
}

/// Calibrated λ₁ such that λ₁·min(1,h) under-estimates the sharp coercivity
/// of A + h·C at h ∈ {h_low, 1}.
pub fn calibrate_lambda1(tpl: &ProblemTemplate, h_low: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for h in [h_low, 1.0] {
        let robin = tpl.with_mode(Mode::Robin { h })?;
        let sharp = estimate_coercivity(&robin, Subspace::Full)?;
        best = best.min(sharp / h.min(1.0));
    }
    Ok(best)
}
