//! Rectangular grids over (0,1) and (0,1)² with a two-part boundary.
//!
//! The boundary is split edge-wise into Γ₁ (trace / heat-exchange part) and
//! Γ₂ (flux part). A node belongs to Γ₁ if it touches a Γ₁ edge, so in 2D the
//! corners of a Γ₁ side land in Γ₁. Boundary quadrature is trapezoidal along
//! edges, which makes the boundary mass matrices diagonal; in 1D the boundary
//! measure degenerates to point evaluation with weight 1.

use crate::error::{Error, Result};
use serde::Serialize;

/// One full side of the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn parse(s: &str) -> Result<Side> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            other => Err(Error::Config(format!(
                "unknown boundary side '{other}' (expected left|right|bottom|top)"
            ))),
        }
    }
}

/// Classification of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLabel {
    Interior,
    Gamma1,
    Gamma2,
}

/// Uniform grid on (0,1) or (0,1)² with boundary partition and the diagonal
/// trapezoidal weights for the two boundary parts.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    nodes_per_axis: usize,
    cell: f64,
    coords: Vec<[f64; 2]>,
    labels: Vec<BoundaryLabel>,
    /// Trapezoidal boundary measure carried by each node on Γ₁ (0 elsewhere).
    gamma1_weight: Vec<f64>,
    /// Same for Γ₂.
    gamma2_weight: Vec<f64>,
    gamma1_sides: Vec<Side>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    /// Mesh size along each axis.
    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn label(&self, i: usize) -> BoundaryLabel {
        self.labels[i]
    }

    pub fn gamma1_sides(&self) -> &[Side] {
        &self.gamma1_sides
    }

    pub fn gamma1_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.labels[i] == BoundaryLabel::Gamma1)
            .collect()
    }

    pub fn gamma2_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.labels[i] == BoundaryLabel::Gamma2)
            .collect()
    }

    /// Nodes not on Γ₁ (the unknowns of the trace-constrained problem).
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.labels[i] != BoundaryLabel::Gamma1)
            .collect()
    }

    pub fn gamma1_weight(&self) -> &[f64] {
        &self.gamma1_weight
    }

    pub fn gamma2_weight(&self) -> &[f64] {
        &self.gamma2_weight
    }

    /// Cells as node-index quadruples (2D) or pairs (1D, last two repeat).
    pub fn cells(&self) -> Vec<[usize; 4]> {
        let n = self.nodes_per_axis;
        let mut out = Vec::new();
        match self.dim {
            1 => {
                for i in 0..n - 1 {
                    out.push([i, i + 1, i + 1, i]);
                }
            }
            _ => {
                for j in 0..n - 1 {
                    for i in 0..n - 1 {
                        let p = j * n + i;
                        out.push([p, p + 1, p + n + 1, p + n]);
                    }
                }
            }
        }
        out
    }

    /// JSON echo of the grid description (dimensions, partition, weights).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "nodes_per_axis": self.nodes_per_axis,
            "extent": 1.0,
            "cell_size": self.cell,
            "node_count": self.node_count(),
            "gamma1_sides": self.gamma1_sides,
            "gamma1_nodes": self.gamma1_nodes(),
            "gamma2_nodes": self.gamma2_nodes(),
        })
    }
}

/// Build a uniform grid with Γ₁ covering the given full sides.
///
/// `nodes_per_axis` must be at least 3 and `gamma1` must select at least one
/// valid side (in 1D only `Left`/`Right` make sense).
pub fn build_grid(dim: usize, nodes_per_axis: usize, gamma1: &[Side]) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::Config(format!("dim must be 1 or 2, got {dim}")));
    }
    if nodes_per_axis < 3 {
        return Err(Error::Config(format!(
            "nodes_per_axis must be >= 3, got {nodes_per_axis}"
        )));
    }
    if gamma1.is_empty() {
        return Err(Error::Config(
            "gamma1 side selection is empty: Γ₁ must carry positive measure".into(),
        ));
    }
    if dim == 1 {
        for s in gamma1 {
            if !matches!(s, Side::Left | Side::Right) {
                return Err(Error::Config(format!(
                    "side {s:?} does not exist on a 1D interval"
                )));
            }
        }
    }

    let n = nodes_per_axis;
    let cell = 1.0 / (n as f64 - 1.0);
    let on_gamma1_side = |s: Side| gamma1.contains(&s);

    let mut grid = match dim {
        1 => {
            let coords: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * cell, 0.0]).collect();
            let mut labels = vec![BoundaryLabel::Interior; n];
            let mut w1 = vec![0.0; n];
            let mut w2 = vec![0.0; n];
            for (idx, side) in [(0usize, Side::Left), (n - 1, Side::Right)] {
                if on_gamma1_side(side) {
                    labels[idx] = BoundaryLabel::Gamma1;
                    w1[idx] = 1.0; // point-evaluation measure
                } else {
                    labels[idx] = BoundaryLabel::Gamma2;
                    w2[idx] = 1.0;
                }
            }
            Grid {
                dim,
                nodes_per_axis: n,
                cell,
                coords,
                labels,
                gamma1_weight: w1,
                gamma2_weight: w2,
                gamma1_sides: gamma1.to_vec(),
            }
        }
        _ => {
            let mut coords = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    coords.push([i as f64 * cell, j as f64 * cell]);
                }
            }
            let mut labels = vec![BoundaryLabel::Interior; n * n];
            let mut w1 = vec![0.0; n * n];
            let mut w2 = vec![0.0; n * n];
            // boundary edges: ((i0,j0),(i1,j1), side)
            let mut edges: Vec<(usize, usize, Side)> = Vec::new();
            for k in 0..n - 1 {
                edges.push((k * n, (k + 1) * n, Side::Left));
                edges.push((k * n + (n - 1), (k + 1) * n + (n - 1), Side::Right));
                edges.push((k, k + 1, Side::Bottom));
                edges.push(((n - 1) * n + k, (n - 1) * n + k + 1, Side::Top));
            }
            for (a, b, side) in edges {
                let half = cell / 2.0;
                if on_gamma1_side(side) {
                    labels[a] = BoundaryLabel::Gamma1;
                    labels[b] = BoundaryLabel::Gamma1;
                    w1[a] += half;
                    w1[b] += half;
                } else {
                    w2[a] += half;
                    w2[b] += half;
                }
            }
            // Γ₂ nodes: boundary nodes not claimed by a Γ₁ edge
            for j in 0..n {
                for i in 0..n {
                    let idx = j * n + i;
                    let on_boundary = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                    if on_boundary && labels[idx] == BoundaryLabel::Interior {
                        labels[idx] = BoundaryLabel::Gamma2;
                    }
                }
            }
            // flux pairing is carried by Γ₂ nodes only; Γ₁ corners drop their
            // Γ₂ half-edge share
            for idx in 0..n * n {
                if labels[idx] != BoundaryLabel::Gamma2 {
                    w2[idx] = 0.0;
                }
            }
            Grid {
                dim,
                nodes_per_axis: n,
                cell,
                coords,
                labels,
                gamma1_weight: w1,
                gamma2_weight: w2,
                gamma1_sides: gamma1.to_vec(),
            }
        }
    };
    grid.gamma1_sides.dedup();
    if grid.gamma1_nodes().is_empty() {
        return Err(Error::Config("gamma1 selection produced no nodes".into()));
    }
    Ok(grid)
}

/// What a nodal vector represents; lengths are validated against the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// State u on all nodes.
    State,
    /// Control / internal-energy g on all nodes.
    Control,
    /// Trace data b on Γ₁ nodes.
    TraceData,
    /// Flux data q on Γ₂ nodes.
    FluxData,
}

/// Nodal vector tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub role: Role,
}

impl GridFunction {
    pub fn new(grid: &Grid, role: Role, values: Vec<f64>) -> Result<GridFunction> {
        let expected = match role {
            Role::State | Role::Control => grid.node_count(),
            Role::TraceData => grid.gamma1_nodes().len(),
            Role::FluxData => grid.gamma2_nodes().len(),
        };
        if values.len() != expected {
            return Err(Error::Config(format!(
                "grid function length {} does not match {:?} slot of size {}",
                values.len(),
                role,
                expected
            )));
        }
        Ok(GridFunction { values, role })
    }

    pub fn constant(grid: &Grid, role: Role, value: f64) -> GridFunction {
        let len = match role {
            Role::State | Role::Control => grid.node_count(),
            Role::TraceData => grid.gamma1_nodes().len(),
            Role::FluxData => grid.gamma2_nodes().len(),
        };
        GridFunction {
            values: vec![value; len],
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
