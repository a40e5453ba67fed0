//! Property tests for the structural invariants: assembly identities, LCP
//! solution laws, solution-map monotonicity, and the parallelogram identity
//! behind the convexity argument.

mod common;

use common::lcp_enumerate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use vilab::assembly::{assemble_template, MassKind, Mode, ProblemTemplate};
use vilab::grid::{build_grid, BoundaryLabel, GridFunction, Role, Side};
use vilab::solver::{pdas, psor, solve_vi, SolverConfig};
use vilab::sparse::SymCsr;

fn template(dim: usize, n: usize, mode: Mode, b: f64) -> ProblemTemplate {
    let grid = build_grid(dim, n, &[Side::Left]).unwrap();
    let qf = GridFunction::constant(&grid, Role::FluxData, 0.0);
    let bf = GridFunction::constant(&grid, Role::TraceData, b);
    assemble_template(&grid, &qf, &bf, mode, MassKind::Consistent).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembly_invariants(dim in 1usize..=2, n in 3usize..=9, h in 0.1f64..100.0) {
        let tpl = template(dim, n, Mode::Robin { h }, 0.0);
        let nn = tpl.node_count();
        // pure Neumann stiffness annihilates constants
        let a1 = tpl.stiffness.apply(&vec![1.0; nn]);
        prop_assert!(a1.iter().all(|v| v.abs() < 1e-12));
        // V-energy splits into stiffness + mass and dominates the mass part
        let v: Vec<f64> = (0..nn).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let av = tpl.stiffness.bilinear(&v, &v);
        let hv = tpl.mass_h.bilinear(&v, &v);
        let vv = tpl.mass_v.bilinear(&v, &v);
        prop_assert!(hv > 0.0);
        prop_assert!((vv - (av + hv)).abs() <= 1e-10 * (1.0 + vv.abs()));
        // boundary mass is nonnegative and supported exactly on Γ₁
        for i in 0..nn {
            let w = tpl.boundary_mass[i];
            prop_assert!(w >= 0.0);
            prop_assert_eq!(w > 0.0, tpl.grid.label(i) == BoundaryLabel::Gamma1);
        }
        // operative matrix is positive definite for every h > 0
        let kv = tpl.operative().bilinear(&v, &v);
        prop_assert!(kv > 0.0);
    }

    #[test]
    fn parallelogram_identity_is_pure_algebra(
        n in 3usize..=17,
        mu in 0.0f64..=1.0,
        seed in 0u64..1000,
    ) {
        let tpl = template(1, n, Mode::Dirichlet, 0.0);
        let u1 = vilab::fields::random_vector(seed, n, 10.0);
        let u2 = vilab::fields::random_vector(seed + 1, n, 10.0);
        let u3: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| mu * a + (1.0 - mu) * b).collect();
        let du: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let n1 = tpl.mass_h.bilinear(&u1, &u1);
        let n2 = tpl.mass_h.bilinear(&u2, &u2);
        let n3 = tpl.mass_h.bilinear(&u3, &u3);
        let nd = tpl.mass_h.bilinear(&du, &du);
        let rhs = mu * n1 + (1.0 - mu) * n2 - mu * (1.0 - mu) * nd;
        prop_assert!((n3 - rhs).abs() <= 1e-12 * (1.0 + n3.abs()),
            "identity violated: {} vs {}", n3, rhs);
    }

    #[test]
    fn lcp_kernels_satisfy_solution_laws(seed in 0u64..200, n in 2usize..=5) {
        let raw = vilab::fields::random_vector(40_000 + seed, n * n, 1.0);
        let a = DMatrix::from_fn(n, n, |i, j| raw[i * n + j]);
        let spd = &a * a.transpose() + DMatrix::identity(n, n) * 0.4;
        let f = vilab::fields::random_vector(50_000 + seed, n, 3.0);
        let mut tri = Vec::new();
        for i in 0..n {
            for j in 0..n {
                tri.push((i, j, spd[(i, j)]));
            }
        }
        let m = SymCsr::from_triplets(n, &tri);
        let cfg = SolverConfig::default();
        let (x, _) = pdas(&m, &f, &cfg).unwrap();
        let scale = 1.0 + f.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        // feasibility and complementarity
        let r = {
            let mut r = m.apply(&x);
            for (ri, fi) in r.iter_mut().zip(&f) { *ri -= fi; }
            r
        };
        for i in 0..n {
            prop_assert!(x[i] >= -1e-10 * scale);
            prop_assert!(r[i] >= -1e-9 * scale, "residual {} at {}", r[i], i);
            prop_assert!(x[i].min(r[i]).abs() <= 1e-9 * scale);
        }
        // agreement with the projected-sweep solver and the enumeration
        let (x2, _) = psor(&m, &f, &cfg).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - x2[i]).abs() <= 1e-8 * scale);
        }
        let reference = lcp_enumerate(&spd, &DVector::from_column_slice(&f), 1e-10).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - reference[i]).abs() <= 1e-8 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn solution_map_is_monotone_in_g(seed in 0u64..100, robin in proptest::bool::ANY) {
        let n = 17;
        let mode = if robin { Mode::Robin { h: 5.0 } } else { Mode::Dirichlet };
        let tpl = template(1, n, mode, 0.3);
        let g2 = vilab::fields::random_vector(60_000 + seed, n, 20.0);
        let bump = vilab::fields::random_nonneg_vector(70_000 + seed, n, 10.0);
        let g1: Vec<f64> = g2.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let cfg = SolverConfig::tight();
        let u1 = solve_vi(&tpl, &g1, &cfg).unwrap();
        let u2 = solve_vi(&tpl, &g2, &cfg).unwrap();
        for i in 0..n {
            prop_assert!(u2.u.values[i] <= u1.u.values[i] + 1e-9);
        }
    }

    #[test]
    fn solves_are_bit_deterministic(seed in 0u64..50) {
        let n = 17;
        let tpl = template(1, n, Mode::Robin { h: 7.0 }, 0.4);
        let g = vilab::fields::random_vector(80_000 + seed, n, 30.0);
        let cfg = SolverConfig::default();
        let a = solve_vi(&tpl, &g, &cfg).unwrap();
        let b = solve_vi(&tpl, &g, &cfg).unwrap();
        for i in 0..n {
            prop_assert_eq!(a.u.values[i].to_bits(), b.u.values[i].to_bits());
        }
        prop_assert_eq!(a.active_mask, b.active_mask);
    }
}
