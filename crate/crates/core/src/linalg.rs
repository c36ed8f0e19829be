//! Small linear-algebra kit: band-stored matrices, banded LU with a
//! growth monitor, and a guarded 3x3 solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{KdvError, Result};

/// Growth factor above which the unpivoted banded LU is abandoned in favour
/// of a dense partially pivoted factorization.
pub const GROWTH_LIMIT: f64 = 1e6;

/// Real matrix stored by diagonals.
///
/// Entry `(i, j)` with `-lower_bw <= j - i <= upper_bw` lives at
/// `data[j * width + upper_bw + i - j]`, i.e. LAPACK band layout, so every
/// column of the band is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n_rows: usize,
    n_cols: usize,
    lower_bw: usize,
    upper_bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize, lower_bw: usize, upper_bw: usize) -> Self {
        let width = lower_bw + upper_bw + 1;
        BandedMatrix {
            n_rows,
            n_cols,
            lower_bw,
            upper_bw,
            data: vec![0.0; width * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BandedMatrix::zeros(n, n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn lower_bw(&self) -> usize {
        self.lower_bw
    }

    pub fn upper_bw(&self) -> usize {
        self.upper_bw
    }

    fn width(&self) -> usize {
        self.lower_bw + self.upper_bw + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n_rows && j < self.n_cols && j + self.lower_bw >= i && i + self.upper_bw >= j
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * self.width() + self.upper_bw + i - j
    }

    /// Entry `(i, j)`; exactly zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band ({}, {})",
            self.lower_bw,
            self.upper_bw
        );
        let idx = self.index(i, j);
        self.data[idx] = value;
    }

    /// Column range of row `i` inside the band.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.lower_bw);
        let hi = (i + self.upper_bw + 1).min(self.n_cols);
        lo..hi.max(lo)
    }

    /// Row range of column `j` inside the band.
    pub fn col_span(&self, j: usize) -> std::ops::Range<usize> {
        let lo = j.saturating_sub(self.upper_bw);
        let hi = (j + self.lower_bw + 1).min(self.n_rows);
        lo..hi.max(lo)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_rows, self.n_cols, |i, j| self.get(i, j))
    }

    /// Copy of the band of `dense`; entries outside the band are discarded.
    pub fn from_dense(dense: &DMatrix<f64>, lower_bw: usize, upper_bw: usize) -> Self {
        let mut m = BandedMatrix::zeros(dense.nrows(), dense.ncols(), lower_bw, upper_bw);
        for j in 0..m.n_cols {
            for i in m.col_span(j) {
                m.set(i, j, dense[(i, j)]);
            }
        }
        m
    }

    pub fn transpose(&self) -> BandedMatrix {
        let mut t = BandedMatrix::zeros(self.n_cols, self.n_rows, self.upper_bw, self.lower_bw);
        for j in 0..self.n_cols {
            for i in self.col_span(j) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self + alpha * other`, with the union of both bands.
    pub fn add_scaled(&self, alpha: f64, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut out = BandedMatrix::zeros(
            self.n_rows,
            self.n_cols,
            self.lower_bw.max(other.lower_bw),
            self.upper_bw.max(other.upper_bw),
        );
        for j in 0..self.n_cols {
            for i in out.col_span(j) {
                out.set(i, j, self.get(i, j) + alpha * other.get(i, j));
            }
        }
        out
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for i in self.col_span(j) {
                y[i] += self.data[self.index(i, j)] * xj;
            }
        }
        y
    }

    /// `y = A^T x`.
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows);
        (0..self.n_cols)
            .map(|j| {
                self.col_span(j)
                    .map(|i| self.data[self.index(i, j)] * x[i])
                    .sum()
            })
            .collect()
    }
}

/// LU factorization of a square banded matrix.
///
/// Elimination runs without pivoting inside the band. If a pivot vanishes or
/// the growth factor `max|U| / max|A|` exceeds [`GROWTH_LIMIT`], the
/// factorization falls back to a dense partially pivoted LU.
#[derive(Debug, Clone)]
pub enum BandedLu {
    Banded { factors: BandedMatrix, growth: f64 },
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<BandedLu> {
        if a.n_rows != a.n_cols {
            return Err(KdvError::LengthMismatch {
                expected: a.n_rows,
                actual: a.n_cols,
            });
        }
        let n = a.n_rows;
        let scale = a.max_abs();
        if n == 0 {
            return Ok(BandedLu::Banded {
                factors: a.clone(),
                growth: 1.0,
            });
        }
        if scale == 0.0 {
            return Err(KdvError::SingularSystem("zero matrix".into()));
        }
        let mut f = a.clone();
        let (kl, ku) = (a.lower_bw, a.upper_bw);
        let mut ok = true;
        for k in 0..n {
            let pivot = f.get(k, k);
            if pivot.abs() <= f64::EPSILON * scale {
                ok = false;
                break;
            }
            let row_end = (k + kl + 1).min(n);
            let col_end = (k + ku + 1).min(n);
            for i in k + 1..row_end {
                let l = f.get(i, k) / pivot;
                f.set(i, k, l);
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..col_end {
                    let v = f.get(i, j) - l * f.get(k, j);
                    f.set(i, j, v);
                }
            }
        }
        let growth = if ok {
            let mut umax = 0.0_f64;
            for j in 0..n {
                for i in f.col_span(j) {
                    if i <= j {
                        umax = umax.max(f.get(i, j).abs());
                    }
                }
            }
            umax / scale
        } else {
            f64::INFINITY
        };
        if ok && growth <= GROWTH_LIMIT {
            return Ok(BandedLu::Banded { factors: f, growth });
        }
        log::debug!("banded LU growth {growth:e}; falling back to dense pivoted LU");
        let lu = a.to_dense().lu();
        if !lu.is_invertible() {
            return Err(KdvError::SingularSystem("banded system is singular".into()));
        }
        Ok(BandedLu::Dense(lu))
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, BandedLu::Banded { .. })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            BandedLu::Banded { factors, .. } => {
                let n = factors.n_rows;
                if b.len() != n {
                    return Err(KdvError::LengthMismatch {
                        expected: n,
                        actual: b.len(),
                    });
                }
                let (kl, ku) = (factors.lower_bw, factors.upper_bw);
                let mut x = b.to_vec();
                for i in 0..n {
                    let lo = i.saturating_sub(kl);
                    let mut s = x[i];
                    for (k, xk) in x.iter().enumerate().take(i).skip(lo) {
                        s -= factors.get(i, k) * xk;
                    }
                    x[i] = s;
                }
                for i in (0..n).rev() {
                    let hi = (i + ku + 1).min(n);
                    let mut s = x[i];
                    for (k, xk) in x.iter().enumerate().take(hi).skip(i + 1) {
                        s -= factors.get(i, k) * xk;
                    }
                    x[i] = s / factors.get(i, i);
                }
                Ok(x)
            }
            BandedLu::Dense(lu) => {
                let n = lu.l().nrows();
                if b.len() != n {
                    return Err(KdvError::LengthMismatch {
                        expected: n,
                        actual: b.len(),
                    });
                }
                lu.solve(&DVector::from_column_slice(b))
                    .map(|v| v.as_slice().to_vec())
                    .ok_or_else(|| KdvError::SingularSystem("dense solve failed".into()))
            }
        }
    }
}

/// Dense partially pivoted LU for operators without exploitable structure.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    pub fn factor(a: DMatrix<f64>) -> Result<DenseLu> {
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(KdvError::SingularSystem("dense system is singular".into()));
        }
        Ok(DenseLu { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu
            .solve(&DVector::from_column_slice(b))
            .map(|v| v.as_slice().to_vec())
            .ok_or_else(|| KdvError::SingularSystem("dense solve failed".into()))
    }
}

/// Solves a 3x3 system by Gaussian elimination with partial pivoting.
///
/// Returns `None` when `|det A| < 1e-12 * ||A||^3` (max-row-sum norm).
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let norm = a
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-12 * norm.powi(3) {
        return None;
    }
    let mut m = a;
    let mut r = b;
    for k in 0..3 {
        let p = (k..3)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap_or(k);
        m.swap(k, p);
        r.swap(k, p);
        for i in k + 1..3 {
            let l = m[i][k] / m[k][k];
            for j in k..3 {
                m[i][j] -= l * m[k][j];
            }
            r[i] -= l * r[k];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, n, kl, ku);
        let mut s = seed;
        for j in 0..n {
            for i in m.col_span(j) {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                m.set(i, j, if i == j { v + 4.0 } else { v });
            }
        }
        m
    }

    #[test]
    fn outside_band_reads_zero() {
        let m = random_banded(8, 1, 2, 3);
        assert_eq!(m.get(5, 0), 0.0);
        assert_eq!(m.get(0, 5), 0.0);
        assert_eq!(m.get(100, 100), 0.0);
        assert_ne!(m.get(2, 4), 0.0);
    }

    #[test]
    #[should_panic]
    fn set_outside_band_panics() {
        let mut m = BandedMatrix::zeros(4, 4, 1, 1);
        m.set(0, 3, 1.0);
    }

    #[test]
    fn rectangular_transpose_matvec() {
        let mut m = BandedMatrix::zeros(3, 5, 0, 3);
        for j in 0..5 {
            for i in m.col_span(j) {
                m.set(i, j, (1 + i + 2 * j) as f64);
            }
        }
        let d = m.to_dense();
        let x = [1.0, -2.0, 0.5];
        let y = m.transpose_matvec(&x);
        let yd = d.transpose() * DVector::from_column_slice(&x);
        for (a, b) in y.iter().zip(yd.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(m.transpose().to_dense(), d.transpose());
    }

    #[test]
    fn growth_fallback_handles_zero_pivot() {
        // Leading pivot is zero; only a pivoted factorization can proceed.
        let mut m = BandedMatrix::zeros(3, 3, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 1.0);
        let lu = BandedLu::factor(&m).unwrap();
        assert!(!lu.is_banded());
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = m.matvec(&x);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn solve3_rejects_singular() {
        let a = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]];
        assert!(solve3(a, [1.0, 2.0, 3.0]).is_none());
        let x = solve3([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]], [1.0, 2.0, 4.0]).unwrap();
        assert_eq!(x, [2.0, 1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn band_storage_round_trips(n in 1usize..12, kl in 0usize..4, ku in 0usize..4, seed in any::<u64>()) {
            let m = random_banded(n, kl, ku, seed);
            let back = BandedMatrix::from_dense(&m.to_dense(), kl, ku);
            prop_assert_eq!(back, m);
        }

        #[test]
        fn banded_lu_solves(n in 1usize..30, kl in 0usize..4, ku in 0usize..4, seed in any::<u64>()) {
            let m = random_banded(n, kl, ku, seed);
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let b = m.matvec(&x);
            let lu = BandedLu::factor(&m).unwrap();
            let sol = lu.solve(&b).unwrap();
            for (a, e) in sol.iter().zip(&x) {
                prop_assert!((a - e).abs() < 1e-11);
            }
        }
    }
}
