//! Noisy-ensemble constructors covering independent and correlated noise.
//!
//! All five models share one normalization: every single-copy marginal has
//! fidelity 1 − ε with the target.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::qstate::{DensityMatrix, StateVector};
use crate::states::Strategy;

/// Which noise scenario produced the ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// Each copy independently mixed with the maximally mixed state.
    IndependentWhite,
    /// Each copy independently mixed with a fixed orthogonal state.
    OrthogonalMixture,
    /// Each copy coherently rotated towards an orthogonal state.
    UnitaryRotation,
    /// The whole k-copy ensemble mixed with the maximally mixed state.
    GlobalWhite,
    /// An adversarial pure rotation of the whole ensemble.
    GlobalUnitaryControl,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::IndependentWhite,
        NoiseKind::OrthogonalMixture,
        NoiseKind::UnitaryRotation,
        NoiseKind::GlobalWhite,
        NoiseKind::GlobalUnitaryControl,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::IndependentWhite => "independent_white",
            NoiseKind::OrthogonalMixture => "orthogonal_mixture",
            NoiseKind::UnitaryRotation => "unitary_rotation",
            NoiseKind::GlobalWhite => "global_white",
            NoiseKind::GlobalUnitaryControl => "global_unitary_control",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent_white" | "in" => Ok(NoiseKind::IndependentWhite),
            "orthogonal_mixture" | "mix" => Ok(NoiseKind::OrthogonalMixture),
            "unitary_rotation" | "ur" => Ok(NoiseKind::UnitaryRotation),
            "global_white" | "cn" => Ok(NoiseKind::GlobalWhite),
            "global_unitary_control" | "gu" => Ok(NoiseKind::GlobalUnitaryControl),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise kind '{other}'"
            ))),
        }
    }
}

/// A noise scenario with its per-copy infidelity and an optional explicit
/// orthogonal direction. When no direction is given, ensembles use the
/// strategy's λ-eigenstate so the mixture/rotation/adversary models realize
/// their worst case against that strategy.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    kind: NoiseKind,
    epsilon: f64,
    orthogonal: Option<StateVector>,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(Self {
            kind,
            epsilon,
            orthogonal: None,
        })
    }

    pub fn with_orthogonal_direction(mut self, psi_perp: StateVector) -> Self {
        self.orthogonal = Some(psi_perp);
        self
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The protocol purifies only below ε = 1/2; callers may want to warn
    /// their users above it.
    pub fn exceeds_purification_threshold(&self) -> bool {
        self.epsilon >= 0.5
    }

    /// Builds the k-copy ensemble this spec describes, relative to the given
    /// strategy's target.
    pub fn ensemble(&self, strategy: &Strategy, k: usize) -> Result<DensityMatrix> {
        let target = strategy.target();
        let perp = match &self.orthogonal {
            Some(p) => p.clone(),
            None => strategy.orthogonal_eigenstate(),
        };
        match self.kind {
            NoiseKind::IndependentWhite => white(target, self.epsilon)?.tensor_power(k),
            NoiseKind::OrthogonalMixture => {
                orthogonal_mixture(target, self.epsilon, &perp)?.tensor_power(k)
            }
            NoiseKind::UnitaryRotation => {
                unitary_rotation(target, self.epsilon, &perp)?.tensor_power(k)
            }
            NoiseKind::GlobalWhite => global_white(target, k, self.epsilon),
            NoiseKind::GlobalUnitaryControl => {
                global_unitary_control(target, k, self.epsilon, &perp)
            }
        }
    }
}

fn check_orthogonal(target: &StateVector, perp: &StateVector) -> Result<()> {
    if target.dim() != perp.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: perp.dim(),
        });
    }
    let overlap = target.inner(perp).norm();
    if overlap > 1e-10 {
        return Err(Error::InvalidState(format!(
            "orthogonal direction overlaps the target by {overlap}"
        )));
    }
    Ok(())
}

/// White noise on a single copy: (1−q)|ψ⟩⟨ψ| + q·1/d with q = dε/(d−1), so
/// the fidelity with the target is exactly 1 − ε.
pub fn white(target: &StateVector, epsilon: f64) -> Result<DensityMatrix> {
    let d = target.dim() as f64;
    let max = (d - 1.0) / d;
    if !(0.0..=max).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, {max}] for dimension {d}, got {epsilon}"
        )));
    }
    let q = d * epsilon / (d - 1.0);
    let mat = target
        .projector()
        .scale_re(1.0 - q)
        .add(&CMatrix::identity(target.dim()).scale_re(q / d));
    DensityMatrix::new(mat)
}

/// Incoherent mixture (1−ε)|ψ⟩⟨ψ| + ε|ψ⊥⟩⟨ψ⊥|.
pub fn orthogonal_mixture(
    target: &StateVector,
    epsilon: f64,
    psi_perp: &StateVector,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    check_orthogonal(target, psi_perp)?;
    let mat = target
        .projector()
        .scale_re(1.0 - epsilon)
        .add(&psi_perp.projector().scale_re(epsilon));
    DensityMatrix::new(mat)
}

/// Coherent rotation |ψ_ε⟩ = √(1−ε)|ψ⟩ + √ε|ψ⊥⟩ as a (pure) density matrix.
pub fn unitary_rotation(
    target: &StateVector,
    epsilon: f64,
    psi_perp: &StateVector,
) -> Result<DensityMatrix> {
    Ok(rotated_state(target, epsilon, psi_perp)?.density_matrix())
}

/// The rotated pure state behind [`unitary_rotation`].
pub fn rotated_state(
    target: &StateVector,
    epsilon: f64,
    psi_perp: &StateVector,
) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    check_orthogonal(target, psi_perp)?;
    let (a, b) = ((1.0 - epsilon).sqrt(), epsilon.sqrt());
    let amps = target
        .amplitudes()
        .iter()
        .zip(psi_perp.amplitudes())
        .map(|(t, p)| t * a + p * b)
        .collect();
    StateVector::new(amps)
}

/// Global white noise on the k-copy ensemble:
/// (1−q)|ψ⟩⟨ψ|^{⊗k} + q·1/d^k with q = dε/(d−1).
pub fn global_white(target: &StateVector, k: usize, epsilon: f64) -> Result<DensityMatrix> {
    if k < 1 {
        return Err(Error::InvalidParameter("global_white needs k >= 1".into()));
    }
    let d = target.dim() as f64;
    let max = (d - 1.0) / d;
    if !(0.0..=max).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, {max}] for dimension {d}, got {epsilon}"
        )));
    }
    let q = d * epsilon / (d - 1.0);
    let product = target.tensor_power(k)?;
    let dim = product.dim();
    let mat = product
        .projector()
        .scale_re(1.0 - q)
        .add(&CMatrix::identity(dim).scale_re(q / dim as f64));
    DensityMatrix::new(mat)
}

/// Adversarial global rotation: the pure state
/// √(1−kε)|ψ⟩^{⊗k} + √(kε)·|φ'⟩, where |φ'⟩ places |ψ⊥⟩ in each copy slot
/// with equal weight. Every single-copy marginal has fidelity 1 − ε.
pub fn global_unitary_control(
    target: &StateVector,
    k: usize,
    epsilon: f64,
    psi_perp: &StateVector,
) -> Result<DensityMatrix> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "global_unitary_control needs k >= 1".into(),
        ));
    }
    let ensemble_weight = k as f64 * epsilon;
    if !(0.0..=1.0).contains(&ensemble_weight) {
        return Err(Error::InvalidParameter(format!(
            "k * epsilon = {ensemble_weight} must lie in [0, 1]"
        )));
    }
    check_orthogonal(target, psi_perp)?;

    let dim = crate::qstate::checked_power(target.dim(), k)?;
    let mut amps = vec![Complex64::ZERO; dim];

    // |ψ⟩^{⊗k} part
    let product = target.tensor_power(k)?;
    let head = (1.0 - ensemble_weight).sqrt();
    for (slot, amp) in amps.iter_mut().zip(product.amplitudes()) {
        *slot = amp * head;
    }

    // (1/√k) Σ_m |ψ..ψ⊥_m..ψ⟩ part; the k placements are mutually orthogonal
    let tail = ensemble_weight.sqrt() / (k as f64).sqrt();
    for m in 0..k {
        let mut placed: Option<StateVector> = None;
        for copy in 0..k {
            let factor = if copy == m { psi_perp } else { target };
            placed = Some(match placed {
                None => factor.clone(),
                Some(acc) => acc.kron(factor)?,
            });
        }
        let placed = placed.expect("k >= 1");
        for (slot, amp) in amps.iter_mut().zip(placed.amplitudes()) {
            *slot += amp * tail;
        }
    }

    Ok(StateVector::new(amps)?.density_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::fidelity;
    use crate::states::{bell, dicke, ghz, Strategy};
    use approx::assert_abs_diff_eq;
    use nalgebra::{Complex, DMatrix};

    fn to_nalgebra(m: &CMatrix) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(m.dim(), m.dim(), |r, c| {
            let v = m.at(r, c);
            Complex::new(v.re, v.im)
        })
    }

    /// Independent spectral oracle (nalgebra) for the eigenvalues of a
    /// Hermitian matrix, descending.
    fn spectrum_oracle(m: &CMatrix) -> Vec<f64> {
        let mut vals: Vec<f64> = to_nalgebra(m)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    #[test]
    fn white_limits() {
        let target = bell();
        let pure = white(&target, 0.0).unwrap();
        assert!(pure.matrix().max_abs_diff(&target.projector()) < 1e-15);

        let depolarized = white(&target, 0.75).unwrap();
        assert!(depolarized
            .matrix()
            .max_abs_diff(&CMatrix::identity(4).scale_re(0.25))
            < 1e-15);

        assert!(white(&target, 0.76).is_err());
    }

    #[test]
    fn white_spectrum_matches_oracle() {
        // eigenvalues are 1 - q + q/d (once) and q/d (d-1 times)
        let target = bell();
        let eps = 0.01;
        let rho = white(&target, eps).unwrap();
        let vals = spectrum_oracle(rho.matrix());
        let q = 4.0 * eps / 3.0;
        assert_abs_diff_eq!(vals[0], 1.0 - q + q / 4.0, epsilon = 1e-12);
        for &v in &vals[1..] {
            assert_abs_diff_eq!(v, q / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_limits_and_rank() {
        let strategy = Strategy::homogeneous(&bell(), 1.0 / 3.0).unwrap();
        let perp = strategy.orthogonal_eigenstate();
        let pure = orthogonal_mixture(&bell(), 0.0, &perp).unwrap();
        assert!(pure.matrix().max_abs_diff(&bell().projector()) < 1e-15);
        let flipped = orthogonal_mixture(&bell(), 1.0, &perp).unwrap();
        assert!(flipped.matrix().max_abs_diff(&perp.projector()) < 1e-15);

        let mixed = orthogonal_mixture(&bell(), 0.3, &perp).unwrap();
        let rank = spectrum_oracle(mixed.matrix())
            .iter()
            .filter(|v| v.abs() > 1e-12)
            .count();
        assert_eq!(rank, 2);
    }

    #[test]
    fn rotation_is_pure_with_right_fidelity() {
        let strategy = Strategy::homogeneous(&bell(), 1.0 / 3.0).unwrap();
        let perp = strategy.orthogonal_eigenstate();
        let rho = unitary_rotation(&bell(), 0.01, &perp).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&bell(), &rho).unwrap(), 0.99, epsilon = 1e-12);
    }

    #[test]
    fn single_copy_fidelity_is_one_minus_epsilon_for_all_kinds() {
        let targets = [bell(), ghz(3).unwrap(), dicke(3, 1).unwrap()];
        for target in &targets {
            let strategy = Strategy::homogeneous(target, 1.0 / 3.0).unwrap();
            for &eps in &[0.0, 0.005, 0.01, 0.05, 0.2] {
                for kind in NoiseKind::ALL {
                    for k in [2usize, 3] {
                        if kind == NoiseKind::GlobalUnitaryControl && k as f64 * eps > 1.0 {
                            continue;
                        }
                        let ensemble = NoiseSpec::new(kind, eps)
                            .unwrap()
                            .ensemble(&strategy, k)
                            .unwrap();
                        let dims = vec![target.dim(); k];
                        for copy in 0..k {
                            let marginal = ensemble.partial_trace(&dims, &[copy]).unwrap();
                            let f = fidelity(target, &marginal).unwrap();
                            assert_abs_diff_eq!(f, 1.0 - eps, epsilon = 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constructors_yield_valid_density_matrices() {
        // Hermiticity and trace are enforced by DensityMatrix::new; this adds
        // the PSD check at dimensions where a full eigensolve is cheap.
        let targets = [bell(), ghz(3).unwrap(), dicke(3, 1).unwrap()];
        for target in &targets {
            let strategy = Strategy::homogeneous(target, 0.9).unwrap();
            for &eps in &[0.0, 0.005, 0.01, 0.05, 0.2] {
                for kind in NoiseKind::ALL {
                    for k in [2usize, 3, 4] {
                        if kind == NoiseKind::GlobalUnitaryControl && k as f64 * eps > 1.0 {
                            continue;
                        }
                        let dim = target.dim().pow(k as u32);
                        if dim > 256 {
                            continue;
                        }
                        let ensemble = NoiseSpec::new(kind, eps)
                            .unwrap()
                            .ensemble(&strategy, k)
                            .unwrap();
                        ensemble.validate_psd().unwrap();
                    }
                }
            }
        }
        // one larger spot check
        let strategy = Strategy::homogeneous(&ghz(3).unwrap(), 0.0).unwrap();
        let big = NoiseSpec::new(NoiseKind::GlobalWhite, 0.05)
            .unwrap()
            .ensemble(&strategy, 3)
            .unwrap();
        assert_eq!(big.dim(), 512);
        big.validate_psd().unwrap();
    }

    #[test]
    fn global_white_with_one_copy_equals_white() {
        let target = dicke(2, 1).unwrap();
        let a = global_white(&target, 1, 0.07).unwrap();
        let b = white(&target, 0.07).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);
    }

    #[test]
    fn adversarial_state_structure() {
        let strategy = Strategy::homogeneous(&bell(), 1.0 / 3.0).unwrap();
        let perp = strategy.orthogonal_eigenstate();
        let eps = 0.01;
        let k = 3;
        let rho = global_unitary_control(&bell(), k, eps, &perp).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);

        // eps = 0 collapses to the pure product
        let clean = global_unitary_control(&bell(), k, 0.0, &perp).unwrap();
        assert!(clean
            .matrix()
            .max_abs_diff(&bell().tensor_power(k).unwrap().projector())
            < 1e-14);

        // k * eps > 1 is rejected
        assert!(global_unitary_control(&bell(), 3, 0.4, &perp).is_err());
    }

    #[test]
    fn noise_kind_round_trips_labels() {
        for kind in NoiseKind::ALL {
            assert_eq!(kind.label().parse::<NoiseKind>().unwrap(), kind);
        }
        assert_eq!("cn".parse::<NoiseKind>().unwrap(), NoiseKind::GlobalWhite);
        assert!("bogus".parse::<NoiseKind>().is_err());
    }

    #[test]
    fn purification_threshold_flag() {
        let spec = NoiseSpec::new(NoiseKind::IndependentWhite, 0.6).unwrap();
        assert!(spec.exceeds_purification_threshold());
        let spec = NoiseSpec::new(NoiseKind::IndependentWhite, 0.3).unwrap();
        assert!(!spec.exceeds_purification_threshold());
    }
}
