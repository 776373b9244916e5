//! Small dense symmetric factorization used by the exact criteria.

/// Diagonally pivoted Cholesky factorization P A Pᵀ = L Lᵀ of a symmetric
/// positive semidefinite matrix, stopped at the first pivot below tolerance.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    n: usize,
    // row-major lower triangle, only the first `rank` columns are meaningful
    l: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedCholesky {
    /// Factors the row-major `n`×`n` matrix `a`. Pivots at or below `tol` end
    /// the factorization and fix the numerical rank.
    pub fn new(a: &[f64], n: usize, tol: f64) -> Self {
        assert_eq!(a.len(), n * n, "matrix buffer has the wrong length");
        let mut w = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = n;
        for k in 0..n {
            // pick the largest remaining diagonal
            let mut p = k;
            for i in k + 1..n {
                if w[i * n + i] > w[p * n + p] {
                    p = i;
                }
            }
            if w[p * n + p] <= tol {
                rank = k;
                break;
            }
            if p != k {
                swap_sym(&mut w, n, k, p);
                perm.swap(k, p);
            }
            let d = w[k * n + k].sqrt();
            w[k * n + k] = d;
            for i in k + 1..n {
                w[i * n + k] /= d;
            }
            // full symmetric update so later pivot swaps see consistent entries
            for j in k + 1..n {
                let ljk = w[j * n + k];
                for i in k + 1..n {
                    w[i * n + j] -= w[i * n + k] * ljk;
                }
            }
        }
        Self { n, l: w, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.n
    }

    /// Diagonal of A⁻¹ in the original ordering, or `None` when rank-deficient.
    pub fn inverse_diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_full_rank() {
            return None;
        }
        let n = self.n;
        // columns of L⁻¹ by forward substitution; diag(A⁻¹)_perm[j] = Σ_i (L⁻¹)_{ij}²
        let mut out = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[j] = 1.0 / self.l[j * n + j];
            for i in j + 1..n {
                let mut s = 0.0;
                for t in j..i {
                    s -= self.l[i * n + t] * col[t];
                }
                col[i] = s / self.l[i * n + i];
            }
            // row j of L⁻ᵀ L⁻¹ diagonal: Σ_i (L⁻¹)_{ij}² contributes to entry j
            out[self.perm[j]] = col[j..].iter().map(|x| x * x).sum();
        }
        Some(out)
    }
}

fn swap_sym(w: &mut [f64], n: usize, a: usize, b: usize) {
    for t in 0..n {
        w.swap(a * n + t, b * n + t);
    }
    for t in 0..n {
        w.swap(t * n + a, t * n + b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scaled() {
        let a = [4.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 4.0];
        let f = PivotedCholesky::new(&a, 3, 1e-9);
        assert_eq!(f.inverse_diagonal().unwrap(), vec![0.25, 0.25, 0.25]);
    }

    #[test]
    fn singular_detected() {
        let a = [4.0, 4.0, 4.0, 4.0];
        let f = PivotedCholesky::new(&a, 2, 1e-9 * 4.0);
        assert_eq!(f.rank(), 1);
        assert!(f.inverse_diagonal().is_none());
    }

    #[test]
    fn pivoting_keeps_original_order() {
        // diag(A⁻¹) of [[2,1],[1,5]] is (5/9, 2/9)
        let a = [2.0, 1.0, 1.0, 5.0];
        let d = PivotedCholesky::new(&a, 2, 1e-12).inverse_diagonal().unwrap();
        assert!((d[0] - 5.0 / 9.0).abs() < 1e-15);
        assert!((d[1] - 2.0 / 9.0).abs() < 1e-15);
    }
}
