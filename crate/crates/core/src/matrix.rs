//! Dense complex square matrices and the linear-algebra kernels the rest of
//! the crate is built on: Kronecker products, partial traces, subsystem
//! reordering, and a Hermitian eigensolver.
//!
//! Everything is stored row-major as `Vec<Complex64>`. Dimensions stay at
//! desk scale (the exact engine caps out at [`DIM_CAP`]), so the kernels are
//! written for clarity over blocking tricks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on the total dimension the exact engine will allocate for.
pub const DIM_CAP: usize = 1 << 20;

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;

pub(crate) fn check_dim_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::DimensionCap {
            requested: dim,
            cap,
        })
    } else {
        Ok(())
    }
}

/// A dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from a row-major entry list. Errors unless the list
    /// has `dim * dim` entries.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Outer product |v⟩⟨v|.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        Self::from_fn(dim, |r, c| v[r] * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Matrix product `self * other` (ikj loop order).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.at(c, r).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    /// tr(self * other) without materializing the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        acc
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product; the left factor occupies the most significant
    /// index block.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = self
            .dim
            .checked_mul(other.dim)
            .ok_or(Error::DimensionCap {
                requested: usize::MAX,
                cap: DIM_CAP,
            })?;
        check_dim_cap(dim, DIM_CAP)?;
        let (da, db) = (self.dim, other.dim);
        let mut data = vec![Complex64::ZERO; dim * dim];
        for ra in 0..da {
            for ca in 0..da {
                let a = self.at(ra, ca);
                if a == Complex64::ZERO {
                    continue;
                }
                for rb in 0..db {
                    let dst_row = (ra * db + rb) * dim + ca * db;
                    for cb in 0..db {
                        data[dst_row + cb] = a * other.at(rb, cb);
                    }
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for r in 0..self.dim {
            for c in r..self.dim {
                if (self.at(r, c) - self.at(c, r).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint()
            .mul(self)
            .max_abs_diff(&Self::identity(self.dim))
            <= tol
    }
}

/// Partial trace of a matrix over the subsystems not listed in `keep`.
///
/// `dims` lists every subsystem dimension in big-endian order (the first
/// subsystem occupies the most significant index block); `keep` is a strictly
/// increasing list of subsystem indices to retain.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: total,
        });
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&s| s >= dims.len()) {
        return Err(Error::InvalidParameter(
            "keep must be a strictly increasing list of subsystem indices".into(),
        ));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();

    // stride of subsystem s in the flat index
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }

    let kept_dims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced_dim: usize = traced.iter().map(|&s| dims[s]).product();

    // flat index of a kept multi-index
    let kept_offset = |mut idx: usize| -> usize {
        let mut off = 0;
        for (pos, &s) in keep.iter().enumerate().rev() {
            off += (idx % kept_dims[pos]) * strides[s];
            idx /= kept_dims[pos];
        }
        off
    };
    let traced_offset = |mut idx: usize| -> usize {
        let mut off = 0;
        for &s in traced.iter().rev() {
            off += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        off
    };

    let mut out = CMatrix::zeros(out_dim);
    for kr in 0..out_dim {
        let row_base = kept_offset(kr);
        for kc in 0..out_dim {
            let col_base = kept_offset(kc);
            let mut acc = Complex64::ZERO;
            for td in 0..traced_dim {
                let off = traced_offset(td);
                acc += m.at(row_base + off, col_base + off);
            }
            out.set(kr, kc, acc);
        }
    }
    Ok(out)
}

/// Permutes subsystems: the new subsystem at position `p` is the old
/// subsystem `perm[p]`. `dims` describes the old layout.
pub fn reorder_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: total,
        });
    }
    let mut seen = vec![false; dims.len()];
    for &p in perm {
        if p >= dims.len() || seen[p] {
            return Err(Error::InvalidParameter(
                "perm must be a permutation of the subsystem indices".into(),
            ));
        }
        seen[p] = true;
    }
    if perm.len() != dims.len() {
        return Err(Error::InvalidParameter(
            "perm must cover every subsystem".into(),
        ));
    }

    let mut old_strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        old_strides[s] = old_strides[s + 1] * dims[s + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();

    // index map: old flat index -> new flat index
    let mut map = vec![0usize; total];
    for (old, slot) in map.iter_mut().enumerate() {
        let mut new_idx = 0;
        for p in 0..perm.len() {
            let digit = (old / old_strides[perm[p]]) % dims[perm[p]];
            new_idx = new_idx * new_dims[p] + digit;
        }
        *slot = new_idx;
    }

    let mut out = CMatrix::zeros(total);
    for r in 0..total {
        for c in 0..total {
            out.set(map[r], map[c], m.at(r, c));
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with matching eigenvector columns.
/// The input is assumed Hermitian; only the upper triangle drives the
/// rotations.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n);

    let scale = a.max_abs().max(1.0);
    let tol = 1e-14 * scale;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.at(p, q).norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // G restricted to (p, q):
                //   [ c        s        ]
                //   [-s e^{-i phi}  c e^{-i phi} ]
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -s * phase.conj();
                let gqq = c * phase.conj();

                // columns: A <- A G
                for i in 0..n {
                    let aip = a.at(i, p);
                    let aiq = a.at(i, q);
                    a.set(i, p, aip * gpp + aiq * gqp);
                    a.set(i, q, aip * gpq + aiq * gqq);
                }
                // rows: A <- G^dagger A
                for j in 0..n {
                    let apj = a.at(p, j);
                    let aqj = a.at(q, j);
                    a.set(p, j, gpp.conj() * apj + gqp.conj() * aqj);
                    a.set(q, j, gpq.conj() * apj + gqq.conj() * aqj);
                }
                // eigenvectors: V <- V G
                for i in 0..n {
                    let vip = v.at(i, p);
                    let viq = v.at(i, q);
                    v.set(i, p, vip * gpp + viq * gqp);
                    v.set(i, q, vip * gpq + viq * gqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));

    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut vecs = CMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vecs.set(row, new_col, v.at(row, old_col));
        }
    }
    (sorted_vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    *vals.last().expect("non-empty matrix")
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative is
/// rejected.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let n = m.dim();
    let (vals, vecs) = hermitian_eigen(m);
    let mut roots = Vec::with_capacity(n);
    for &val in &vals {
        if val < -1e-10 {
            return Err(Error::InvalidState(format!(
                "matrix is not PSD: eigenvalue {val}"
            )));
        }
        roots.push(val.max(0.0).sqrt());
    }
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for (e, root) in roots.iter().enumerate() {
                acc += vecs.at(i, e) * root * vecs.at(j, e).conj();
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent quadruple-loop tensor product used as the oracle for
    /// `CMatrix::kron`.
    fn kron_oracle(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (da, db) = (a.dim(), b.dim());
        let mut out = CMatrix::zeros(da * db);
        for ra in 0..da {
            for rb in 0..db {
                for ca in 0..da {
                    for cb in 0..db {
                        out.set(ra * db + rb, ca * db + cb, a.at(ra, ca) * b.at(rb, cb));
                    }
                }
            }
        }
        out
    }

    fn random_matrix(dim: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let m = random_matrix(dim, rng);
        m.add(&m.adjoint()).scale_re(0.5)
    }

    #[test]
    fn kron_identities() {
        let id2 = CMatrix::identity(2);
        assert_eq!(id2.kron(&id2).unwrap(), CMatrix::identity(4));

        // |0><0| (x) |1><1| = |01><01|
        let p0 = CMatrix::outer(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let p1 = CMatrix::outer(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let k = p0.kron(&p1).unwrap();
        let mut expected = CMatrix::zeros(4);
        expected.set(1, 1, Complex64::ONE);
        assert!(k.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn kron_matches_entrywise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (da, db) in [(2, 3), (4, 4), (3, 2)] {
            let a = random_matrix(da, &mut rng);
            let b = random_matrix(db, &mut rng);
            let k = a.kron(&b).unwrap();
            assert!(k.max_abs_diff(&kron_oracle(&a, &b)) < 1e-15);
        }
    }

    #[test]
    fn kron_respects_dim_cap() {
        let big = CMatrix::identity(2048);
        let err = big.kron(&CMatrix::identity(1024)).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { .. }));
    }

    #[test]
    fn mul_and_trace_product_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(5, &mut rng);
        let b = random_matrix(5, &mut rng);
        let direct = a.mul(&b).trace();
        let lazy = a.trace_product(&b);
        assert!((direct - lazy).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_bell_marginal() {
        let s = 1.0 / 2f64.sqrt();
        let bell = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let rho = CMatrix::outer(&bell);
        let reduced = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&CMatrix::identity(2).scale_re(0.5)) < 1e-14);
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let ab = a.kron(&b).unwrap();
        let reduced = partial_trace(&ab, &[2, 4], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let reduced_b = partial_trace(&ab, &[2, 4], &[1]).unwrap();
        assert!(reduced_b.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_hermitian(8, &mut rng);
        let reduced = partial_trace(&m, &[2, 2, 2], &[1]).unwrap();
        assert!((reduced.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = CMatrix::identity(6);
        assert!(partial_trace(&m, &[2, 2], &[0]).is_err());
        assert!(partial_trace(&m, &[2, 3], &[2]).is_err());
    }

    #[test]
    fn reorder_subsystems_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let ab = a.kron(&b).unwrap();
        let ba = b.kron(&a).unwrap();
        let swapped = reorder_subsystems(&ab, &[2, 4], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&ba) < 1e-13);
    }

    #[test]
    fn eigen_known_spectrum() {
        // diag(3, 1, -2) conjugated by nothing
        let mut m = CMatrix::zeros(3);
        m.set(0, 0, c(3.0, 0.0));
        m.set(1, 1, c(1.0, 0.0));
        m.set(2, 2, c(-2.0, 0.0));
        let (vals, _) = hermitian_eigen(&m);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for dim in [2, 5, 8] {
            let m = random_hermitian(dim, &mut rng);
            let (vals, vecs) = hermitian_eigen(&m);
            let mut rebuilt = CMatrix::zeros(dim);
            for e in 0..dim {
                for i in 0..dim {
                    for j in 0..dim {
                        let add = vecs.at(i, e) * vals[e] * vecs.at(j, e).conj();
                        rebuilt.set(i, j, rebuilt.at(i, j) + add);
                    }
                }
            }
            assert!(rebuilt.max_abs_diff(&m) < 1e-10, "dim {dim}");
            assert!(vecs.is_unitary(1e-10));
        }
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let m = random_matrix(6, &mut rng);
        let psd = m.mul(&m.adjoint()); // always PSD
        let root = sqrt_psd(&psd).unwrap();
        assert!(root.mul(&root).max_abs_diff(&psd) < 1e-10);
    }

    #[test]
    fn sqrt_psd_rejects_indefinite() {
        let mut m = CMatrix::identity(2);
        m.set(1, 1, c(-0.5, 0.0));
        assert!(sqrt_psd(&m).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kron_associativity(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(2, &mut rng);
            let b = random_matrix(3, &mut rng);
            let d = random_matrix(2, &mut rng);
            let left = a.kron(&b).unwrap().kron(&d).unwrap();
            let right = a.kron(&b.kron(&d).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) < 1e-12);
        }

        #[test]
        fn partial_trace_is_linear(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m1 = random_hermitian(4, &mut rng);
            let m2 = random_hermitian(4, &mut rng);
            let (alpha, beta) = (rng.random::<f64>(), rng.random::<f64>());
            let combo = m1.scale_re(alpha).add(&m2.scale_re(beta));
            let lhs = partial_trace(&combo, &[2, 2], &[1]).unwrap();
            let rhs = partial_trace(&m1, &[2, 2], &[1]).unwrap().scale_re(alpha)
                .add(&partial_trace(&m2, &[2, 2], &[1]).unwrap().scale_re(beta));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
