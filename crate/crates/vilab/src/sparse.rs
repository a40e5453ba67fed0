//! Symmetric sparse matrices in CSR form and the conjugate-gradient kernel.
//!
//! Matrices here are small (desk-scale grids), so the priorities are
//! deterministic assembly, cheap row access for Gauss-Seidel style sweeps,
//! and a solver that grinds to its floating-point floor rather than stopping
//! at a scale-dependent residual.

use crate::error::{Error, Result};
use std::io::Write;

/// Symmetric sparse matrix, full storage (both triangles), CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCsr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SymCsr {
    /// Build from (row, col, value) triplets; duplicates are summed.
    /// Entries are sorted, so identical triplet streams yield bit-identical
    /// matrices.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        for &(r, c, _) in triplets {
            assert!(r < n && c < n, "triplet ({r},{c}) out of bounds for n={n}");
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut cur_row = 0usize;
        for &(r, c, v) in &sorted {
            while cur_row < r {
                cur_row += 1;
                indptr[cur_row] = indices.len();
            }
            if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
            }
        }
        while cur_row < n {
            cur_row += 1;
            indptr[cur_row] = indices.len();
        }
        SymCsr {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// (columns, values) of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// xᵀ A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            let mut row_dot = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_dot += v * y[j];
            }
            s += xi * row_dot;
        }
        s
    }

    /// A + diag(d)
    pub fn add_diagonal(&self, d: &[f64]) -> SymCsr {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            let (a, b) = (out.indptr[i], out.indptr[i + 1]);
            match out.indices[a..b].binary_search(&i) {
                Ok(k) => out.data[a + k] += d[i],
                Err(_) => {
                    // diagonal entry absent in the pattern: rebuild with it
                    let mut tri = out.to_triplets();
                    for (r, val) in d.iter().enumerate() {
                        tri.push((r, r, *val));
                    }
                    return SymCsr::from_triplets(self.n, &tri);
                }
            }
        }
        out
    }

    /// Principal submatrix on `keep` (indices strictly increasing).
    pub fn extract(&self, keep: &[usize]) -> SymCsr {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut tri = Vec::new();
        for (new_r, &old_r) in keep.iter().enumerate() {
            let (cols, vals) = self.row(old_r);
            for (&c, &v) in cols.iter().zip(vals) {
                if map[c] != usize::MAX {
                    tri.push((new_r, map[c], v));
                }
            }
        }
        SymCsr::from_triplets(keep.len(), &tri)
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut tri = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                tri.push((i, j, v));
            }
        }
        tri
    }

    /// Coordinate text dump, one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (i, j, v) in self.to_triplets() {
            writeln!(w, "{} {} {:.17e}", i, j, v)?;
        }
        Ok(())
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Outcome of a conjugate-gradient run.
#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned CG for SPD `a`, optionally restricted to the
/// complement of `mask` (masked components are pinned to 0 and ignored).
///
/// The target residual is relative to the iterate scale, not the rhs scale:
/// with strongly h-weighted boundary rows the rhs norm can be several orders
/// larger than the solution, and an rhs-relative stop would quit early. When
/// the target sits below the attainable floor the solver returns its best
/// iterate after stagnation instead of erroring.
pub fn cg_masked(
    a: &SymCsr,
    rhs: &[f64],
    mask: Option<&[bool]>,
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<f64>, CgStats)> {
    let n = a.n();
    assert_eq!(rhs.len(), n);
    let masked = |i: usize| mask.map(|m| m[i]).unwrap_or(false);

    let zero_masked = |v: &mut [f64]| {
        if let Some(m) = mask {
            for (vi, &mi) in v.iter_mut().zip(m) {
                if mi {
                    *vi = 0.0;
                }
            }
        }
    };

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    zero_masked(&mut x);

    // preconditioner: inverse diagonal on free entries
    let diag = a.diag();
    let mut pinv = vec![0.0; n];
    for i in 0..n {
        if !masked(i) {
            if diag[i] <= 0.0 {
                return Err(Error::Numerical(format!(
                    "cg: nonpositive diagonal {} at index {i}",
                    diag[i]
                )));
            }
            pinv[i] = 1.0 / diag[i];
        }
    }

    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    zero_masked(&mut r);

    let mut z: Vec<f64> = r.iter().zip(&pinv).map(|(ri, pi)| ri * pi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    let cap = max_iter.unwrap_or(6 * n + 200);
    let stall_window = n + 100;
    let mut best_x = x.clone();
    let mut best_res = norm2(&r);
    let mut since_improve = 0usize;
    let mut ap = vec![0.0; n];
    let mut k = 0usize;

    loop {
        let res = norm2(&r);
        if res < best_res {
            if res < 0.5 * best_res {
                since_improve = 0;
            }
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        let target = rel_tol * (1.0 + norm2(&x));
        if res <= target {
            return Ok((
                x,
                CgStats {
                    iterations: k,
                    residual: res,
                },
            ));
        }
        // stagnation at the floating-point floor
        since_improve += 1;
        if since_improve > stall_window || k >= cap {
            return Ok((
                best_x,
                CgStats {
                    iterations: k,
                    residual: best_res,
                },
            ));
        }

        a.matvec(&p, &mut ap);
        zero_masked(&mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Numerical(format!(
                "cg: matrix not positive definite on free set (pAp = {pap})"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        zero_masked(&mut r);
        for i in 0..n {
            z[i] = r[i] * pinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        k += 1;
    }
}

/// Unmasked convenience wrapper.
pub fn cg(a: &SymCsr, rhs: &[f64], rel_tol: f64) -> Result<(Vec<f64>, CgStats)> {
    cg_masked(a, rhs, None, None, rel_tol, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace1d(n: usize) -> SymCsr {
        let mut tri = Vec::new();
        for i in 0..n {
            tri.push((i, i, 2.0));
            if i + 1 < n {
                tri.push((i, i + 1, -1.0));
                tri.push((i + 1, i, -1.0));
            }
        }
        SymCsr::from_triplets(n, &tri)
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = SymCsr::from_triplets(3, &[(1, 0, 2.0), (0, 0, 1.0), (1, 0, 3.0), (2, 2, 4.0)]);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(2, 2), 4.0);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn deterministic_assembly() {
        let tri = vec![(0, 1, 0.1), (1, 0, 0.1), (0, 0, 2.0), (1, 1, 2.0)];
        let a = SymCsr::from_triplets(2, &tri);
        let b = SymCsr::from_triplets(2, &tri);
        assert_eq!(a, b);
    }

    #[test]
    fn matvec_and_bilinear_agree() {
        let m = laplace1d(5);
        let x: Vec<f64> = (0..5).map(|i| (i as f64) * 0.3 - 0.7).collect();
        let y = m.apply(&x);
        assert!((dot(&x, &y) - m.bilinear(&x, &x)).abs() < 1e-14);
    }

    #[test]
    fn extract_principal_submatrix() {
        let m = laplace1d(4);
        let s = m.extract(&[1, 2, 3]);
        assert_eq!(s.n(), 3);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(0, 1), -1.0);
        assert_eq!(s.get(0, 2), 0.0);
    }

    #[test]
    fn cg_solves_spd_system() {
        let m = laplace1d(30);
        let x_true: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let rhs = m.apply(&x_true);
        let (x, stats) = cg(&m, &rhs, 1e-13).unwrap();
        let err: f64 = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9, "err = {err}, iters = {}", stats.iterations);
    }

    #[test]
    fn cg_masked_respects_pinned_entries() {
        let m = laplace1d(10);
        let mask: Vec<bool> = (0..10).map(|i| i == 0 || i == 9).collect();
        let rhs = vec![1.0; 10];
        let (x, _) = cg_masked(&m, &rhs, Some(&mask), None, 1e-13, None).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[9], 0.0);
        // residual on free set
        let r = m.apply(&x);
        for ri in &r[1..9] {
            assert!((ri - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn coo_roundtrip() {
        let m = laplace1d(4);
        let mut buf = Vec::new();
        m.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let tri: Vec<(usize, usize, f64)> = text
            .lines()
            .map(|l| {
                let mut it = l.split_whitespace();
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        let back = SymCsr::from_triplets(4, &tri);
        assert_eq!(back, m);
    }
}
