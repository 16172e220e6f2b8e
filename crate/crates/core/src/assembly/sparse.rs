//! Symmetric sparse matrices in CSR form, reverse Cuthill–McKee ordering,
//! envelope Cholesky factorization and preconditioned conjugate gradients.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Square matrix with a symmetric sparsity pattern; both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the pattern of node adjacency expanded to `ndof`
    /// components per node.
    pub fn from_adjacency(adj: &[Vec<usize>], ndof: usize) -> Self {
        let n = adj.len() * ndof;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in adj {
            for _ in 0..ndof {
                for &b in row {
                    for j in 0..ndof {
                        col_idx.push(b * ndof + j);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Dense-to-sparse conversion keeping exact zeros off the pattern.
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[i][j] != 0.0 || a[j][i] != 0.0 || i == j {
                    col_idx.push(j);
                    values.push(a[i][j]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Storage position of entry (i, j), if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Largest |a_ij − a_ji| relative to the largest |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                scale = scale.max(self.values[k].abs());
                diff = diff.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            diff / scale
        } else {
            0.0
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Reverse Cuthill–McKee permutation: `perm[new] = old`.
    pub fn rcm(&self) -> Vec<usize> {
        let n = self.n;
        let degree: Vec<usize> = (0..n).map(|i| self.row_ptr[i + 1] - self.row_ptr[i]).collect();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        loop {
            // start each component at a minimum-degree unvisited vertex,
            // pushed to the periphery by one BFS sweep
            let Some(seed) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) else {
                break;
            };
            let start = self.farthest(seed, &visited, &degree);
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut nb: Vec<usize> = self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
                    .iter()
                    .copied()
                    .filter(|&w| !visited[w])
                    .collect();
                nb.sort_by_key(|&w| (degree[w], w));
                for w in nb {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order.reverse();
        order
    }

    /// Last vertex reached by BFS from `seed` (ties to lowest degree).
    fn farthest(&self, seed: usize, visited: &[bool], degree: &[usize]) -> usize {
        let mut dist = vec![usize::MAX; self.n];
        dist[seed] = 0;
        let mut queue = VecDeque::from([seed]);
        let mut best = (0, degree[seed], seed);
        while let Some(v) = queue.pop_front() {
            let key = (dist[v], usize::MAX - degree[v], usize::MAX - v);
            if key > (best.0, usize::MAX - best.1, usize::MAX - best.2) {
                best = (dist[v], degree[v], v);
            }
            for &w in &self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        best.2
    }
}

/// L·Lᵀ factor stored by rows over each row's envelope, in a permuted ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    /// first column of each permuted row's envelope
    first: Vec<usize>,
    /// offset of each row's first entry in `data`
    start: Vec<usize>,
    data: Vec<f64>,
}

/// Dot product with four independent partial sums so the loop vectorizes.
#[inline]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

impl EnvelopeCholesky {
    /// Factors `a` under the permutation `perm` (`perm[new] = old`).
    /// `ndof` maps a failed pivot back to a node and component for the error.
    pub fn factor(a: &CsrMatrix, perm: &[usize], ndof: usize) -> Result<Self> {
        let n = a.n;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for k in a.row_ptr[old]..a.row_ptr[old + 1] {
                let j = inv[a.col_idx[k]];
                if j < i && a.values[k] != 0.0 {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            for k in a.row_ptr[old]..a.row_ptr[old + 1] {
                let j = inv[a.col_idx[k]];
                if j <= i && j >= first[i] {
                    data[start[i] + j - first[i]] = a.values[k];
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let k0 = fi.max(fj);
                let mut s = data[ri + j - fi];
                let li = &data[ri + k0 - fi..ri + j - fi];
                let lj = &data[rj + k0 - fj..rj + j - fj];
                s -= dot4(li, lj);
                data[ri + j - fi] = s / data[rj + j - fj];
            }
            let aii = data[ri + i - fi];
            let row = &data[ri..ri + i - fi];
            let d = aii - dot4(row, row);
            if !(d > 1e-14 * aii.abs().max(f64::MIN_POSITIVE)) || !d.is_finite() {
                let old = perm[i];
                return Err(Error::Singular {
                    node: old / ndof,
                    dof: old % ndof,
                });
            }
            data[ri + i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            n,
            perm: perm.to_vec(),
            first,
            start,
            data,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i];
            let row = &self.data[ri..ri + i - fi];
            let s = dot4(row, &y[fi..i]);
            y[i] = (y[i] - s) / self.data[ri + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.start[i];
            y[i] /= self.data[ri + i - fi];
            let yi = y[i];
            for j in fi..i {
                y[j] -= self.data[ri + j - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }
}

/// Preconditioned conjugate gradients; returns the iteration count, or `None`
/// if the relative residual did not drop below `tol` within `max_iter`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<usize> {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Some(0);
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) <= tol * bnorm {
        return Some(0);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return None;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Some(it);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    None
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric elimination of prescribed values: row and column of each fixed
/// dof are zeroed, the diagonal is kept, and the right-hand side corrected.
pub fn apply_dirichlet(a: &mut CsrMatrix, rhs: &mut [f64], fixed: &[(usize, f64)]) -> Result<()> {
    let mut value: Vec<Option<f64>> = vec![None; a.n];
    for &(dof, v) in fixed {
        if dof >= a.n {
            return Err(Error::Boundary(format!("dof {dof} out of range ({} dofs)", a.n)));
        }
        match value[dof] {
            Some(prev) if prev != v => {
                return Err(Error::Boundary(format!(
                    "conflicting prescribed values {prev} and {v} on dof {dof}"
                )))
            }
            _ => value[dof] = Some(v),
        }
    }
    for i in 0..a.n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            if i == j {
                continue;
            }
            if let Some(vj) = value[j] {
                if value[i].is_none() {
                    rhs[i] -= a.values[k] * vj;
                }
                a.values[k] = 0.0;
            } else if value[i].is_some() {
                a.values[k] = 0.0;
            }
        }
    }
    for (i, v) in value.iter().enumerate() {
        if let Some(v) = v {
            let k = a.position(i, i).expect("diagonal is in the pattern");
            if a.values[k] == 0.0 {
                a.values[k] = 1.0;
            }
            rhs[i] = a.values[k] * v;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = 2.0;
            if i > 0 {
                d[i][i - 1] = -1.0;
                d[i - 1][i] = -1.0;
            }
        }
        CsrMatrix::from_dense(&d)
    }

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
        let v = nalgebra::DVector::from_column_slice(b);
        m.lu().solve(&v).unwrap().iter().copied().collect()
    }

    #[test]
    fn rcm_is_a_permutation_and_narrows_band() {
        // shuffled path graph
        let n = 30;
        let map: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[map[i]][map[i]] = 4.0;
            if i > 0 {
                d[map[i]][map[i - 1]] = -1.0;
                d[map[i - 1]][map[i]] = -1.0;
            }
        }
        let a = CsrMatrix::from_dense(&d);
        let perm = a.rcm();
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let f = EnvelopeCholesky::factor(&a, &perm, 1).unwrap();
        assert_eq!(f.envelope_size(), 2 * n - 1);
    }

    #[test]
    fn indefinite_matrix_reports_node() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        match EnvelopeCholesky::factor(&a, &[0, 1], 2) {
            Err(Error::Singular { node: 0, dof: 1 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let f = EnvelopeCholesky::factor(&a, &a.rcm(), 1).unwrap();
        let direct = f.solve(&b);
        let mut x = vec![0.0; 50];
        let diag = a.diagonal();
        let it = pcg(&a, &b, &mut x, |r| r.iter().zip(&diag).map(|(v, d)| v / d).collect(), 1e-12, 500);
        assert!(it.is_some());
        for i in 0..50 {
            assert!((x[i] - direct[i]).abs() < 1e-9);
        }
        // exact preconditioner converges at once
        let mut y = vec![0.0; 50];
        assert_eq!(pcg(&a, &b, &mut y, |r| f.solve(r), 1e-10, 5), Some(1));
    }

    #[test]
    fn fix_all_dofs_returns_prescribed() {
        let mut a = laplacian_1d(4);
        let mut rhs = vec![1.0; 4];
        let fixed: Vec<(usize, f64)> = (0..4).map(|i| (i, i as f64 + 0.5)).collect();
        apply_dirichlet(&mut a, &mut rhs, &fixed).unwrap();
        let x = EnvelopeCholesky::factor(&a, &[0, 1, 2, 3], 1).unwrap().solve(&rhs);
        for i in 0..4 {
            assert!((x[i] - (i as f64 + 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_bcs_match_reduced_system() {
        let n = 6;
        let a0 = laplacian_1d(n);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut a = a0.clone();
        let mut rhs = b.clone();
        apply_dirichlet(&mut a, &mut rhs, &[(0, 0.0), (n - 1, 0.0)]).unwrap();
        let x = EnvelopeCholesky::factor(&a, &a.rcm(), 1).unwrap().solve(&rhs);
        let red: Vec<Vec<f64>> = (1..n - 1)
            .map(|i| (1..n - 1).map(|j| a0.get(i, j)).collect())
            .collect();
        let xr = dense_solve(&red, &b[1..n - 1]);
        for i in 1..n - 1 {
            assert!((x[i] - xr[i - 1]).abs() < 1e-12);
        }
        assert_eq!(x[0], 0.0);
        assert!(a.asymmetry() == 0.0);
    }

    #[test]
    fn settlement_on_single_bar() {
        // two-node bar of stiffness k; left end settles by 0.1, right end loaded by P
        let (k, p) = (5.0, 2.0);
        let mut a = CsrMatrix::from_dense(&[vec![k, -k], vec![-k, k]]);
        let mut rhs = vec![0.0, p];
        apply_dirichlet(&mut a, &mut rhs, &[(0, 0.1)]).unwrap();
        let x = EnvelopeCholesky::factor(&a, &[0, 1], 1).unwrap().solve(&rhs);
        assert!((x[0] - 0.1).abs() < 1e-15);
        assert!((x[1] - (0.1 + p / k)).abs() < 1e-14);
    }

    #[test]
    fn conflicting_bcs_rejected() {
        let mut a = laplacian_1d(3);
        let mut rhs = vec![0.0; 3];
        let err = apply_dirichlet(&mut a, &mut rhs, &[(1, 0.0), (1, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("dof 1"));
        let mut a = laplacian_1d(3);
        apply_dirichlet(&mut a, &mut rhs, &[(1, 0.5), (1, 0.5)]).unwrap();
    }

    proptest! {
        #[test]
        fn cholesky_solves_random_spd(seed in 0u64..1000, n in 2usize..25) {
            // A = M Mᵀ + n I with sparse-ish M
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut rnd = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1); ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5 };
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n { for j in 0..n { if (i + 2 * j) % 3 == 0 { m[i][j] = rnd(); } } }
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n { for j in 0..n {
                a[i][j] = (0..n).map(|k| m[i][k] * m[j][k]).sum::<f64>() + if i == j { n as f64 } else { 0.0 };
            } }
            let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
            let csr = CsrMatrix::from_dense(&a);
            let x = EnvelopeCholesky::factor(&csr, &csr.rcm(), 1).unwrap().solve(&b);
            let xd = dense_solve(&a, &b);
            for i in 0..n { prop_assert!((x[i] - xd[i]).abs() < 1e-10); }
        }
    }
}
