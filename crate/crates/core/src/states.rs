//! Target entangled states and the verification strategies measured against
//! them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, CMatrix};
use crate::qstate::{fidelity, Operator, StateVector};

/// (|00⟩ + |11⟩)/√2.
pub fn bell() -> StateVector {
    ghz(2).expect("two-qubit GHZ always builds")
}

/// (|0..0⟩ + |1..1⟩)/√2 on `n` qubits.
pub fn ghz(n: usize) -> Result<StateVector> {
    if n < 1 {
        return Err(Error::InvalidParameter("ghz needs n >= 1".into()));
    }
    let dim = crate::qstate::checked_power(2, n)?;
    let mut amps = vec![Complex64::ZERO; dim];
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = s;
    amps[dim - 1] = s;
    StateVector::new(amps)
}

/// Uniform superposition over the weight-`w` computational basis kets of `n`
/// qubits.
pub fn dicke(n: usize, w: usize) -> Result<StateVector> {
    if n < 1 {
        return Err(Error::InvalidParameter("dicke needs n >= 1".into()));
    }
    if w > n {
        return Err(Error::InvalidParameter(format!(
            "excitation count {w} exceeds qubit count {n}"
        )));
    }
    let dim = crate::qstate::checked_power(2, n)?;
    let count = binomial(n, w);
    let amp = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::ZERO; dim];
    for (idx, slot) in amps.iter_mut().enumerate() {
        if idx.count_ones() as usize == w {
            *slot = amp;
        }
    }
    StateVector::new(amps)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// A two-outcome verification strategy: the measurement effect `omega`
/// accepts the target with certainty and its second-largest eigenvalue
/// `lambda` sets the efficiency.
#[derive(Clone, Debug)]
pub struct Strategy {
    omega: Operator,
    lambda: f64,
    target: StateVector,
}

impl Strategy {
    /// The homogeneous strategy Ω = |ψ⟩⟨ψ| + λ(1 − |ψ⟩⟨ψ|), with spectrum
    /// {1} ∪ {λ × (d−1)}.
    pub fn homogeneous(target: &StateVector, lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1), got {lambda}"
            )));
        }
        let projector = target.projector();
        let rest = CMatrix::identity(target.dim()).sub(&projector);
        let omega = Operator::new(projector.add(&rest.scale_re(lambda)), true)?;
        Ok(Self {
            omega,
            lambda,
            target: target.clone(),
        })
    }

    /// Wraps a caller-supplied effect, verifying the strategy invariants:
    /// Ω|ψ⟩ = |ψ⟩, all eigenvalues in [0, 1], and second-largest equal to
    /// `lambda` within 1e-10.
    pub fn new(omega: Operator, lambda: f64, target: StateVector) -> Result<Self> {
        if omega.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: omega.dim(),
            });
        }
        let applied = omega.matrix().apply(target.amplitudes());
        let dev = applied
            .iter()
            .zip(target.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!(
                "target is not a fixed point of omega (deviation {dev})"
            )));
        }
        let (vals, _) = hermitian_eigen(omega.matrix());
        if vals[0] > 1.0 + 1e-10 || *vals.last().unwrap() < -1e-10 {
            return Err(Error::InvalidState(
                "omega eigenvalues fall outside [0, 1]".into(),
            ));
        }
        let second = vals.get(1).copied().unwrap_or(0.0);
        if (second - lambda).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "second-largest eigenvalue {second} does not match lambda {lambda}"
            )));
        }
        Ok(Self {
            omega,
            lambda,
            target,
        })
    }

    pub fn omega(&self) -> &Operator {
        &self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    /// Deterministic unit vector orthogonal to the target: Gram-Schmidt
    /// completion of the first computational basis ket not parallel to |ψ⟩.
    /// For the homogeneous strategy this is an eigenvector of Ω with
    /// eigenvalue λ.
    pub fn orthogonal_eigenstate(&self) -> StateVector {
        orthogonal_completion(&self.target)
    }

    /// tr(Ω ρ) for a state of matching dimension.
    pub fn acceptance_probability(&self, rho: &crate::qstate::DensityMatrix) -> Result<f64> {
        if rho.dim() != self.omega.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.omega.dim(),
                got: rho.dim(),
            });
        }
        Ok(rho.expectation(self.omega.matrix()).re)
    }
}

/// Gram-Schmidt completion used by [`Strategy::orthogonal_eigenstate`].
pub fn orthogonal_completion(target: &StateVector) -> StateVector {
    let dim = target.dim();
    for i in 0..dim {
        let overlap: Complex64 = target.amplitudes()[i].conj();
        let mut residual: Vec<Complex64> = target
            .amplitudes()
            .iter()
            .map(|a| -overlap * a)
            .collect();
        residual[i] += Complex64::ONE;
        let norm = residual.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let amps = residual.iter().map(|a| a / norm).collect();
            return StateVector::new(amps).expect("Gram-Schmidt output is normalized");
        }
    }
    unreachable!("every state of dimension >= 2 has an orthogonal completion")
}

/// tr(Ω σ) lower bound 1 − ε + λε together with the state needed to check
/// saturation lives in the noise module; this helper exposes the overlap
/// directly for tests and the CLI.
pub fn target_overlap(strategy: &Strategy, rho: &crate::qstate::DensityMatrix) -> Result<f64> {
    fidelity(strategy.target(), rho)
}
