//! Dense reference computations (nalgebra) used as oracles against the
//! sparse/iterative implementation paths. Nothing here shares code with the
//! crate's own linear algebra. Not every integration test uses every helper.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use vilab::sparse::SymCsr;

pub fn to_dense(m: &SymCsr) -> DMatrix<f64> {
    let n = m.n();
    let mut out = DMatrix::zeros(n, n);
    for (i, j, v) in m.to_triplets() {
        out[(i, j)] += v;
    }
    out
}

/// All eigenvalues of K x = λ B x for SPD B, via Cholesky reduction to a
/// standard symmetric problem.
pub fn generalized_eigenvalues(k: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let chol = b.clone().cholesky().expect("B must be SPD");
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let li_k = l
        .clone()
        .solve_lower_triangular(k)
        .expect("triangular solve");
    let c_t = l
        .solve_lower_triangular(&li_k.transpose())
        .expect("triangular solve");
    let c = (c_t.clone() + c_t.transpose()) * 0.5;
    let mut eigs: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Brute-force LCP reference: enumerate every active pattern, solve the
/// complementary system densely, return the feasible solution. Unique for
/// symmetric positive definite matrices.
pub fn lcp_enumerate(m: &DMatrix<f64>, f: &DVector<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = m.nrows();
    assert!(n <= 16, "enumeration explodes past a few variables");
    'patterns: for bits in 0..(1u32 << n) {
        let inactive: Vec<usize> = (0..n).filter(|i| bits & (1 << i) == 0).collect();
        let mut x = vec![0.0; n];
        if !inactive.is_empty() {
            let k = inactive.len();
            let mut sub = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (a, &i) in inactive.iter().enumerate() {
                rhs[a] = f[i];
                for (b, &j) in inactive.iter().enumerate() {
                    sub[(a, b)] = m[(i, j)];
                }
            }
            let sol = match sub.lu().solve(&rhs) {
                Some(s) => s,
                None => continue 'patterns,
            };
            for (a, &i) in inactive.iter().enumerate() {
                if sol[a] < -tol {
                    continue 'patterns;
                }
                x[i] = sol[a];
            }
        }
        let r = m * DVector::from_column_slice(&x) - f;
        if (0..n).all(|i| r[i] >= -tol) {
            return Some(x);
        }
    }
    None
}
