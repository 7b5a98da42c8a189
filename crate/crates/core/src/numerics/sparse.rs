//! Sparse direct solves for the outer elliptic problem, backed by faer's sparse LU.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Threads used by the sparse factorisations. One thread (also the choice for
/// `0`) keeps solves bit-for-bit reproducible.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
}

/// Accumulates matrix entries; repeated `(row, col)` pairs are summed.
#[derive(Debug, Default, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.entries.push(Triplet::new(row, col, val));
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Matrix-vector product `A x` straight from the accumulated entries.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for t in &self.entries {
            out[t.row] += t.val * x[t.col];
        }
        out
    }

    pub fn factor(&self) -> Result<SparseLu> {
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        Ok(SparseLu { mat, lu })
    }
}

pub struct SparseLu {
    mat: SparseColMat<usize, f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    /// Solves `A x = b` and returns `x` with the relative residual `‖Ax − b‖∞ / ‖b‖∞`.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = rhs.len();
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        let sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        let ax = &self.mat * &x;
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let res = (0..n).fold(0.0f64, |m, i| m.max((ax[(i, 0)] - rhs[i]).abs()));
        Ok((sol, res / scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_poisson() {
        // -u'' = 2 on (0,1), u(0)=u(1)=0: u = x(1-x), exact for the 3-point stencil.
        let n = 49;
        let h = 1.0 / (n + 1) as f64;
        let mut tb = TripletBuilder::new(n);
        for i in 0..n {
            tb.push(i, i, 2.0 / (h * h));
            if i > 0 {
                tb.push(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                tb.push(i, i + 1, -1.0 / (h * h));
            }
        }
        let (x, res) = tb.factor().unwrap().solve(&vec![2.0; n]).unwrap();
        assert!(res < 1e-12);
        for (i, v) in x.iter().enumerate() {
            let t = (i + 1) as f64 * h;
            assert!((v - t * (1.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let mut tb = TripletBuilder::new(1);
        tb.push(0, 0, 1.5);
        tb.push(0, 0, 2.5);
        let (x, _) = tb.factor().unwrap().solve(&[8.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert_eq!(tb.apply(&[2.0]), vec![8.0]);
    }
}
