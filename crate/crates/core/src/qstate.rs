//! Multi-qubit state and operator types with physicality checks.
//!
//! Register convention is big-endian throughout: the first-listed subsystem
//! occupies the most significant index block, and qubit 0 of an `n`-qubit
//! register is the most significant bit of the basis index.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{check_dim_cap, min_eigenvalue, partial_trace, CMatrix, DIM_CAP};

pub const NORM_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue of a density matrix may dip to -PSD_TOL from
/// accumulated floating-point error on repeated Kronecker products.
pub const PSD_TOL: f64 = 1e-10;

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// A normalized pure state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// Builds a state vector, requiring unit norm within [`NORM_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amps.len())?;
        check_dim_cap(amps.len(), DIM_CAP)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state vector norm is {norm}, expected 1"
            )));
        }
        Ok(Self { amps, num_qubits })
    }

    /// Builds a state vector from unnormalized amplitudes by rescaling.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        let scaled = amps.iter().map(|a| a / norm).collect();
        Self::new(scaled)
    }

    /// The computational basis ket |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize
            .checked_shl(num_qubits as u32)
            .ok_or(Error::DimensionCap {
                requested: usize::MAX,
                cap: DIM_CAP,
            })?;
        check_dim_cap(dim, DIM_CAP)?;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Ok(Self { amps, num_qubits })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = self.dim() * other.dim();
        check_dim_cap(dim, DIM_CAP)?;
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self {
            amps,
            num_qubits: self.num_qubits + other.num_qubits,
        })
    }

    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("tensor power needs k >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..k {
            out = out.kron(self)?;
        }
        Ok(out)
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            mat: CMatrix::outer(&self.amps),
            num_qubits: self.num_qubits,
        }
    }

    /// |ψ⟩⟨ψ| as a raw matrix.
    pub fn projector(&self) -> CMatrix {
        CMatrix::outer(&self.amps)
    }
}

/// A density matrix on `num_qubits` qubits: Hermitian, unit trace, and
/// positive semidefinite up to [`PSD_TOL`].
///
/// Hermiticity and trace are checked on construction (O(d^2)); the PSD check
/// costs a full eigendecomposition and is exposed separately through
/// [`DensityMatrix::validate_psd`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    num_qubits: usize,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let num_qubits = qubits_for_dim(mat.dim())?;
        check_dim_cap(mat.dim(), DIM_CAP)?;
        if !mat.is_hermitian(crate::matrix::HERMITICITY_TOL) {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        Ok(Self { mat, num_qubits })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Full physicality check including the smallest eigenvalue. O(d^3).
    pub fn validate_psd(&self) -> Result<()> {
        let min = min_eigenvalue(&self.mat);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).re
    }

    /// tr(op * rho).
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        op.trace_product(&self.mat)
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mat = self.mat.kron(&other.mat)?;
        Ok(Self {
            mat,
            num_qubits: self.num_qubits + other.num_qubits,
        })
    }

    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("tensor power needs k >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..k {
            out = out.kron(self)?;
        }
        Ok(out)
    }

    /// Traces out every subsystem not listed in `keep`. `dims` must multiply
    /// to the full dimension.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        let reduced = partial_trace(&self.mat, dims, keep)?;
        DensityMatrix::new(reduced)
    }
}

/// A general operator on a power-of-two dimension, optionally flagged (and
/// then checked) Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(mat: CMatrix, hermitian: bool) -> Result<Self> {
        qubits_for_dim(mat.dim())?;
        check_dim_cap(mat.dim(), DIM_CAP)?;
        if hermitian && !mat.is_hermitian(crate::matrix::HERMITICITY_TOL) {
            return Err(Error::InvalidState(
                "operator flagged Hermitian fails the check".into(),
            ));
        }
        Ok(Self { mat, hermitian })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim), true)
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn kron(&self, other: &Self) -> Result<Operator> {
        Ok(Operator {
            mat: self.mat.kron(&other.mat)?,
            hermitian: self.hermitian && other.hermitian,
        })
    }
}

/// The cyclic shift unitary on `k` registers of dimension `d`: the content of
/// copy m moves to copy m+1 (mod k), i.e. |i_1 i_2 .. i_k⟩ ↦ |i_k i_1 .. i_{k-1}⟩.
pub fn cyclic_shift_operator(k: usize, d: usize) -> Result<Operator> {
    if k < 2 {
        return Err(Error::InvalidParameter("cyclic shift needs k >= 2".into()));
    }
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "per-copy dimension {d} must be a power of two >= 2"
        )));
    }
    let dim = checked_power(d, k)?;
    let perm = cyclic_shift_permutation(k, d);
    let mut mat = CMatrix::zeros(dim);
    for (x, &y) in perm.iter().enumerate() {
        mat.set(y, x, Complex64::ONE);
    }
    // SWAP (k = 2) is Hermitian; longer cycles are not.
    Operator::new(mat, k == 2)
}

/// Flat-index permutation realized by the cyclic shift: `map[x] = y` with
/// S|x⟩ = |y⟩.
pub(crate) fn cyclic_shift_permutation(k: usize, d: usize) -> Vec<usize> {
    let dim = d.pow(k as u32);
    let top = d.pow((k - 1) as u32);
    (0..dim)
        .map(|x| {
            let last = x % d; // digit of copy k
            let rest = x / d; // digits of copies 1..k-1
            last * top + rest
        })
        .collect()
}

pub(crate) fn checked_power(d: usize, k: usize) -> Result<usize> {
    let dim = d.checked_pow(k as u32).ok_or(Error::DimensionCap {
        requested: usize::MAX,
        cap: DIM_CAP,
    })?;
    check_dim_cap(dim, DIM_CAP)?;
    Ok(dim)
}

/// ⟨ψ|ρ|ψ⟩ for matching dimensions.
pub fn fidelity(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            got: rho.dim(),
        });
    }
    let applied = rho.matrix().apply(psi.amplitudes());
    let value: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(value.im.abs() < 1e-12, "fidelity imaginary residue {}", value.im);
    Ok(value.re)
}
