//! Layered configuration: TOML file sections with defaults, overridden by
//! command-line flags (flags win). The merged result echoes itself as
//! `key = value` pairs into every output header, so a file alone reproduces
//! any run.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use vilab::assembly::Mode;
use vilab::control::OptimizerConfig;
use vilab::error::{Error, Result};
use vilab::fields::FieldSpec;
use vilab::grid::Side;
use vilab::solver::SolverConfig;
use vilab::suite::SuiteConfig;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub tolerances: TolSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub nodes_per_axis: usize,
    /// Comma-separated sides forming Γ₁, e.g. "left" or "left,top".
    pub gamma1: String,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            nodes_per_axis: 65,
            gamma1: "left".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub g: String,
    pub b: String,
    pub q: String,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            g: "zero".into(),
            b: "zero".into(),
            q: "zero".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: String,
    pub h: f64,
    pub h_list: Vec<f64>,
    pub m_weight: f64,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: "dirichlet".into(),
            h: 10.0,
            h_list: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
            m_weight: 1.0,
            seed: 42,
            jobs: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    pub pairs_per_mode: usize,
    pub amplitude: f64,
    pub b_value: f64,
    pub q_value: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            pairs_per_mode: 20,
            amplitude: 5.0,
            b_value: 0.5,
            q_value: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "state" or "control".
    pub kind: String,
    pub rate_tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kind: "state".into(),
            rate_tol: 0.05,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSection {
    pub tol_comp: f64,
    pub max_iter: usize,
    pub omega: f64,
    pub inner_tol: f64,
    pub grad_tol_rel: f64,
    pub max_outer: usize,
}

impl Default for TolSection {
    fn default() -> Self {
        let s = SolverConfig::tight();
        let o = OptimizerConfig::default();
        TolSection {
            tol_comp: s.tol_comp,
            max_iter: s.max_iter,
            omega: s.omega,
            inner_tol: s.inner_tol,
            grad_tol_rel: o.grad_tol_rel,
            max_outer: o.max_outer,
        }
    }
}

/// Command-line overrides (flags win over the file).
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
    pub h: Option<f64>,
    pub h_list: Option<String>,
    pub m_weight: Option<f64>,
}

/// Sweep flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    State,
    Control,
}

/// Fully merged configuration.
#[derive(Debug, Clone)]
pub struct Effective {
    pub dim: usize,
    pub nodes_per_axis: usize,
    pub gamma1: Vec<Side>,
    pub g: FieldSpec,
    pub b: FieldSpec,
    pub q: FieldSpec,
    pub mode: Mode,
    pub h_list: Vec<f64>,
    pub m_weight: f64,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub pairs_per_mode: usize,
    pub amplitude: f64,
    pub b_value: f64,
    pub q_value: f64,
    pub sweep_kind: SweepKind,
    pub rate_tol: f64,
    pub solver: SolverConfig,
    pub optimizer: OptimizerConfig,
    /// Raw strings kept for the output echo.
    echo: Vec<(String, String)>,
}

impl Effective {
    pub fn load(config_path: Option<&Path>, overrides: &Overrides) -> Result<Effective> {
        let file: FileConfig = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    Error::Config(format!("cannot parse config {}: {e}", p.display()))
                })?
            }
            None => FileConfig::default(),
        };
        Self::merge(file, overrides)
    }

    fn merge(file: FileConfig, ov: &Overrides) -> Result<Effective> {
        let gamma1 = file
            .grid
            .gamma1
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Side::parse)
            .collect::<Result<Vec<_>>>()?;

        let g = FieldSpec::parse(&file.data.g)?;
        let b = FieldSpec::parse(&file.data.b)?;
        let q = FieldSpec::parse(&file.data.q)?;

        let mode_str = ov.mode.clone().unwrap_or(file.run.mode.clone());
        let h = ov.h.unwrap_or(file.run.h);
        let mode = match mode_str.to_ascii_lowercase().as_str() {
            "dirichlet" => Mode::Dirichlet,
            "robin" => Mode::Robin { h },
            other => {
                return Err(Error::Config(format!(
                    "unknown mode '{other}' (expected dirichlet|robin)"
                )))
            }
        };

        let h_list = match &ov.h_list {
            Some(text) => text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad h value '{s}' in --h-list")))
                })
                .collect::<Result<Vec<f64>>>()?,
            None => file.run.h_list.clone(),
        };

        let m_weight = ov.m_weight.unwrap_or(file.run.m_weight);
        let seed = ov.seed.unwrap_or(file.run.seed);
        let jobs = ov.jobs.unwrap_or(file.run.jobs);
        let out = ov.out.clone().unwrap_or(file.run.out.clone());

        let solver = SolverConfig {
            tol_comp: file.tolerances.tol_comp,
            max_iter: file.tolerances.max_iter,
            omega: file.tolerances.omega,
            inner_tol: file.tolerances.inner_tol,
            ..SolverConfig::tight()
        };
        solver.validate()?;
        if file.tolerances.grad_tol_rel <= 0.0 {
            return Err(Error::Config("grad_tol_rel must be positive".into()));
        }
        let optimizer = OptimizerConfig {
            grad_tol_rel: file.tolerances.grad_tol_rel,
            max_outer: file.tolerances.max_outer,
            ..OptimizerConfig::default()
        };

        let sweep_kind = match file.sweep.kind.to_ascii_lowercase().as_str() {
            "state" => SweepKind::State,
            "control" => SweepKind::Control,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep kind '{other}' (expected state|control)"
                )))
            }
        };

        let mut echo = Vec::new();
        let mut push = |k: &str, v: String| echo.push((k.to_string(), v));
        push("grid.dim", file.grid.dim.to_string());
        push("grid.nodes_per_axis", file.grid.nodes_per_axis.to_string());
        push("grid.gamma1", file.grid.gamma1.clone());
        push("data.g", file.data.g.clone());
        push("data.b", file.data.b.clone());
        push("data.q", file.data.q.clone());
        push("run.mode", mode_str);
        push("run.h", format!("{h}"));
        push(
            "run.h_list",
            h_list
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push("run.m_weight", format!("{m_weight}"));
        push("run.seed", seed.to_string());
        push("run.jobs", jobs.to_string());
        push(
            "checks.pairs_per_mode",
            file.checks.pairs_per_mode.to_string(),
        );
        push("checks.amplitude", format!("{}", file.checks.amplitude));
        push("checks.b_value", format!("{}", file.checks.b_value));
        push("checks.q_value", format!("{}", file.checks.q_value));
        push("sweep.kind", file.sweep.kind.clone());
        push("sweep.rate_tol", format!("{}", file.sweep.rate_tol));
        push(
            "tolerances.tol_comp",
            format!("{}", file.tolerances.tol_comp),
        );
        push("tolerances.max_iter", file.tolerances.max_iter.to_string());
        push("tolerances.omega", format!("{}", file.tolerances.omega));
        push(
            "tolerances.inner_tol",
            format!("{}", file.tolerances.inner_tol),
        );
        push(
            "tolerances.grad_tol_rel",
            format!("{}", file.tolerances.grad_tol_rel),
        );
        push(
            "tolerances.max_outer",
            file.tolerances.max_outer.to_string(),
        );

        Ok(Effective {
            dim: file.grid.dim,
            nodes_per_axis: file.grid.nodes_per_axis,
            gamma1,
            g,
            b,
            q,
            mode,
            h_list,
            m_weight,
            seed,
            jobs,
            out,
            pairs_per_mode: file.checks.pairs_per_mode,
            amplitude: file.checks.amplitude,
            b_value: file.checks.b_value,
            q_value: file.checks.q_value,
            sweep_kind,
            rate_tol: file.sweep.rate_tol,
            solver,
            optimizer,
            echo,
        })
    }

    /// Effective key = value pairs for output headers.
    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            pairs_per_mode: self.pairs_per_mode,
            robin_h: self.mode.h().unwrap_or(10.0),
            dim: self.dim,
            nodes_per_axis: self.nodes_per_axis,
            gamma1: self.gamma1.clone(),
            amplitude: self.amplitude,
            b_value: self.b_value,
            q_value: self.q_value,
            m_weight: self.m_weight,
            jobs: self.jobs,
            solver: self.solver,
            ..SuiteConfig::default()
        }
    }
}
