use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ZERO};

/// Dense LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuDecomposition {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuDecomposition {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        Self::with_pivot_floor(a, 0.0)
    }

    /// Like [`LuDecomposition::new`], but zero pivots are replaced by
    /// `floor` (if positive) instead of failing. Used by inverse iteration,
    /// where the shifted matrix is singular to working precision by design.
    pub fn with_pivot_floor(a: &ComplexMatrix, floor: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), actual: a.cols() });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                perm.swap(k, p);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            if pmax == 0.0 || lu[(k, k)].norm() < floor {
                if floor > 0.0 {
                    lu[(k, k)] = C64::new(floor, 0.0);
                } else {
                    return Err(Error::Singular(k));
                }
            }
            let pivot = lu[(k, k)];
            let data = lu.as_mut_slice();
            let (upper, lower) = data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..(k + 1) * n];
            for i in k + 1..n {
                let row = &mut lower[(i - k - 1) * n..(i - k) * n];
                let f = row[k] / pivot;
                row[k] = f;
                if f != ZERO {
                    for (x, &y) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// `A⁻¹` as a dense matrix.
    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.dim();
        let cols: Vec<Vec<C64>> = (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = C64::new(1.0, 0.0);
                self.solve(&e)
            })
            .collect();
        ComplexMatrix::from_columns(n, &cols)
    }
}
