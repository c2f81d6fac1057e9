//! Small dense matrices and their exponential.
//!
//! `dense_expm` is the scaling-and-squaring method with diagonal Padé
//! approximants of degree 3..13 (Higham 2005 thresholds). `dense_phi`
//! evaluates phi-functions through the exponential of a block-augmented
//! matrix.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub const DEFAULT_DIM_CAP: usize = 512;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix {
            rows: n,
            cols: m,
            data: out,
        }
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        self.lincomb(1.0, other, -1.0)
    }

    fn lincomb(&self, a: f64, other: &DenseMatrix, b: f64) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    fn add_identity(&mut self, alpha: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += alpha;
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.data[i * self.cols + j].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Copy of the block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if rhs.rows != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: rhs.rows,
            });
        }
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let (piv, pmax) =
                (col..n)
                    .map(|r| (r, a[r * n + col].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(Error::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                for j in 0..m {
                    b.swap(col * m + j, piv * m + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in col + 1..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..m {
                    b[r * m + j] -= f * b[col * m + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..m {
                let mut s = b[col * m + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * b[k * m + j];
                }
                b[col * m + j] = s / d;
            }
        }
        Ok(DenseMatrix {
            rows: n,
            cols: m,
            data: b,
        })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `e^M` with the default dimension cap.
pub fn dense_expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    dense_expm_with_cap(m, DEFAULT_DIM_CAP)
}

pub fn dense_expm_with_cap(m: &DenseMatrix, cap: usize) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if m.rows > cap {
        return Err(Error::DimensionCap { dim: m.rows, cap });
    }
    expm_unchecked(m)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm thresholds for the degree-m approximant at unit roundoff
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097_847_961_257_068;
const THETA13: f64 = 5.371920351148152;

fn expm_unchecked(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    let norm = a.norm1();
    if !norm.is_finite() {
        return Err(Error::InvalidRequest("non-finite matrix in expm".into()));
    }
    if norm == 0.0 {
        return Ok(DenseMatrix::identity(n));
    }
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(a, &PADE3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(a, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(a, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(a, &PADE9);
        (u, v, 0)
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0) as i32;
        let scaled = a.scaled(2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = v.add(&u);
    let q = v.sub(&u);
    let mut r = q.solve(&p)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// Odd/even split of a degree-3..9 Padé numerator.
fn pade_low(a: &DenseMatrix, b: &[f64]) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows;
    let a2 = a.matmul(a);
    let mut powers = vec![DenseMatrix::identity(n), a2.clone()];
    let degree = b.len() - 1;
    while 2 * (powers.len() - 1) < degree - 1 {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for (k, pk) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u_inner = u_inner.lincomb(1.0, pk, b[2 * k + 1]);
        }
        if 2 * k < b.len() {
            v = v.lincomb(1.0, pk, b[2 * k]);
        }
    }
    (a.matmul(&u_inner), v)
}

fn pade13(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let b = &PADE13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let mut u_hi = a6
        .scaled(b[13])
        .lincomb(1.0, &a4, b[11])
        .lincomb(1.0, &a2, b[9]);
    u_hi = a6.matmul(&u_hi);
    let mut u_lo = a6
        .scaled(b[7])
        .lincomb(1.0, &a4, b[5])
        .lincomb(1.0, &a2, b[3]);
    u_lo.add_identity(b[1]);
    let u = a.matmul(&u_hi.add(&u_lo));
    let mut v_hi = a6
        .scaled(b[12])
        .lincomb(1.0, &a4, b[10])
        .lincomb(1.0, &a2, b[8]);
    v_hi = a6.matmul(&v_hi);
    let mut v_lo = a6
        .scaled(b[6])
        .lincomb(1.0, &a4, b[4])
        .lincomb(1.0, &a2, b[2]);
    v_lo.add_identity(b[0]);
    (u, v_hi.add(&v_lo))
}

fn check_phi_input(m: &DenseMatrix, p: usize) -> Result<()> {
    if p > 3 {
        return Err(Error::UnsupportedPhi(p));
    }
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(())
}

/// `phi_p(M)` for `p` in `0..=3`, with `phi_0 = exp`.
///
/// The exponential of the block matrix
/// `[[M, I, 0, ..], [0, 0, I, ..], .., [0, .., 0]]` of size `(p+1) d`
/// carries `phi_j(M)` in its first block row, block column `j`.
pub fn dense_phi(m: &DenseMatrix, p: usize) -> Result<DenseMatrix> {
    check_phi_input(m, p)?;
    let d = m.rows;
    if d > DEFAULT_DIM_CAP {
        return Err(Error::DimensionCap {
            dim: d,
            cap: DEFAULT_DIM_CAP,
        });
    }
    if p == 0 {
        return expm_unchecked(m);
    }
    let big = (p + 1) * d;
    let mut aug = DenseMatrix::zeros(big, big);
    for i in 0..d {
        for j in 0..d {
            aug[(i, j)] = m[(i, j)];
        }
    }
    for blk in 0..p {
        for i in 0..d {
            aug[(blk * d + i, (blk + 1) * d + i)] = 1.0;
        }
    }
    let e = expm_unchecked(&aug)?;
    Ok(e.block(0, p * d, d, d))
}

/// `phi_p(M) v` via the `(d + p)`-dimensional augmented exponential
/// `exp([[M, v, 0], [0, 0, I_{p-1}], [0, 0, 0]])`, whose last column holds
/// the result in its first `d` entries.
pub fn dense_phi_vector(m: &DenseMatrix, p: usize, v: &[f64]) -> Result<Vec<f64>> {
    check_phi_input(m, p)?;
    let d = m.rows;
    if v.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: v.len(),
        });
    }
    if p == 0 {
        return Ok(expm_unchecked(m)?.mul_vec(v));
    }
    let big = d + p;
    let mut aug = DenseMatrix::zeros(big, big);
    for i in 0..d {
        for j in 0..d {
            aug[(i, j)] = m[(i, j)];
        }
        aug[(i, d)] = v[i];
    }
    for k in 0..p - 1 {
        aug[(d + k, d + k + 1)] = 1.0;
    }
    let e = expm_unchecked(&aug)?;
    Ok((0..d).map(|i| e[(i, big - 1)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let e = dense_expm(&DenseMatrix::zeros(2, 2)).unwrap();
        assert_eq!(e, DenseMatrix::identity(2));
    }

    #[test]
    fn expm_diagonal() {
        let e = dense_expm(&DenseMatrix::diag(&[1.0, -1.0])).unwrap();
        assert_relative_eq!(e[(0, 0)], 1f64.exp(), max_relative = 1e-15);
        assert_relative_eq!(e[(1, 1)], (-1f64).exp(), max_relative = 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_nilpotent() {
        let m = DenseMatrix::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = dense_expm(&m).unwrap();
        assert_relative_eq!(e[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e[(0, 1)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e[(1, 0)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(e[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_large_norm_scalar() {
        for &z in &[-1e3, -50.0, 30.0, 700.0] {
            let e = dense_expm(&DenseMatrix::diag(&[z])).unwrap();
            assert_relative_eq!(e[(0, 0)], z.exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn expm_rotation() {
        let t = 20.0;
        let m = DenseMatrix::new(2, 2, vec![0.0, t, -t, 0.0]).unwrap();
        let e = dense_expm(&m).unwrap();
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-12);
        assert_relative_eq!(e[(0, 1)], t.sin(), epsilon = 1e-12);
    }

    #[test]
    fn expm_errors() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(dense_expm(&rect), Err(Error::NotSquare { .. })));
        let big = DenseMatrix::zeros(5, 5);
        assert!(matches!(
            dense_expm_with_cap(&big, 4),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn phi_scalar_limits() {
        let zero = DenseMatrix::zeros(1, 1);
        assert_relative_eq!(dense_phi(&zero, 1).unwrap()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            dense_phi(&zero, 3).unwrap()[(0, 0)],
            1.0 / 6.0,
            epsilon = 1e-15
        );
        let one = DenseMatrix::diag(&[1.0]);
        assert_relative_eq!(
            dense_phi(&one, 1).unwrap()[(0, 0)],
            1f64.exp() - 1.0,
            max_relative = 1e-14
        );
        assert!(matches!(dense_phi(&one, 4), Err(Error::UnsupportedPhi(4))));
    }

    #[test]
    fn phi_scalar_closed_forms() {
        for &z in &[-3.0_f64, -0.5, 0.25, 2.0] {
            let m = DenseMatrix::diag(&[z]);
            let ez = z.exp();
            let want = [
                ez,
                (ez - 1.0) / z,
                (ez - 1.0 - z) / (z * z),
                (ez - 1.0 - z - z * z / 2.0) / (z * z * z),
            ];
            for (p, w) in want.iter().enumerate() {
                assert_relative_eq!(dense_phi(&m, p).unwrap()[(0, 0)], *w, max_relative = 1e-10);
                assert_relative_eq!(
                    dense_phi_vector(&m, p, &[1.0]).unwrap()[0],
                    *w,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn phi_vector_matches_full_phi() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6);
        let v: Vec<f64> = (0..6).map(|i| (i as f64).cos()).collect();
        for p in 0..=3 {
            let full = dense_phi(&m, p).unwrap().mul_vec(&v);
            let vec = dense_phi_vector(&m, p, &v).unwrap();
            for (a, b) in full.iter().zip(&vec) {
                assert_relative_eq!(a, b, epsilon = 1e-13, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn solve_small_system() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let b = DenseMatrix::new(2, 1, vec![3.0, 5.0]).unwrap();
        let x = a.solve(&b).unwrap();
        assert_relative_eq!(x[(0, 0)], 0.8, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 0)], 1.4, epsilon = 1e-14);
        assert!(matches!(
            DenseMatrix::zeros(2, 2).solve(&b),
            Err(Error::Singular)
        ));
    }

    fn random_matrix(n: usize, entries: Vec<f64>, target_norm: f64) -> DenseMatrix {
        let m = DenseMatrix::new(n, n, entries).unwrap();
        let f = m.frobenius();
        if f == 0.0 {
            m
        } else {
            m.scaled(target_norm / f)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn expm_inverse_identity(
            entries in proptest::collection::vec(-1.0f64..1.0, 25),
            norm in 0.0f64..5.0,
        ) {
            let m = random_matrix(5, entries, norm);
            let prod = dense_expm(&m).unwrap().matmul(&dense_expm(&m.scaled(-1.0)).unwrap());
            let err = prod.sub(&DenseMatrix::identity(5)).frobenius() / 5f64.sqrt();
            prop_assert!(err <= 1e-12, "err = {err}");
        }

        #[test]
        fn phi_recurrence(
            entries in proptest::collection::vec(-1.0f64..1.0, 16),
            norm in 0.5f64..4.0,
        ) {
            let m = random_matrix(4, entries, norm);
            // keep away from singular draws
            let mut shifted = m.clone();
            shifted.add_identity(0.75);
            let id = DenseMatrix::identity(4);
            let mut fact = 1.0;
            for p in 1..=3usize {
                if p > 1 { fact *= (p - 1) as f64; }
                let lhs = shifted.matmul(&dense_phi(&shifted, p).unwrap());
                let rhs = dense_phi(&shifted, p - 1).unwrap().sub(&id.scaled(1.0 / fact));
                let err = lhs.sub(&rhs).frobenius() / rhs.frobenius().max(1.0);
                prop_assert!(err <= 1e-12, "p = {p}, err = {err}");
            }
        }
    }
}
