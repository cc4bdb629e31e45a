//! The collective verification engine: exact operator-level evaluation of
//! the k-copy projection scheme and Monte Carlo sampling of rounds.
//!
//! A round applies the projection D = (1 + S)/2 to the k-copy ensemble
//! (realized by an ancilla post-selection, so the map is ρ ↦ DρD† with
//! weight tr(DρD†)), draws a uniformly random size-t subset, and measures
//! each selected copy with the two-outcome strategy {Ω, 1−Ω}.
//!
//! Because S is a permutation, DρD† is assembled from entry permutations of
//! ρ; no matrix product of full ensemble dimension is ever formed.

use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{sqrt_psd, CMatrix};
use crate::noise::NoiseSpec;
use crate::qstate::{cyclic_shift_permutation, DensityMatrix};
use crate::states::Strategy;

/// The scheme parameters: ensemble size k, measured subset size t, and the
/// failure budget δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheme {
    k: usize,
    t: usize,
    delta: f64,
}

impl Scheme {
    pub fn new(k: usize, t: usize, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "ensemble size k must be >= 2, got {k}"
            )));
        }
        if t < 1 || t > k {
            return Err(Error::InvalidParameter(format!(
                "measured subset size t must satisfy 1 <= t <= k, got {t}"
            )));
        }
        if delta <= 0.0 || delta >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { k, t, delta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Applies the projection Kraus operator to a k-copy ensemble, returning the
/// unnormalized output DρD† and its weight tr(DρD†).
///
/// For a product of k target states the output equals the input with weight
/// one.
pub fn swap_projection_apply(
    rho: &DensityMatrix,
    k: usize,
    d: usize,
) -> Result<(CMatrix, f64)> {
    let dim = crate::qstate::checked_power(d, k)?;
    if dim != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: dim,
        });
    }
    if k < 2 {
        return Err(Error::InvalidParameter("projection needs k >= 2".into()));
    }
    let perm = cyclic_shift_permutation(k, d);
    // inverse permutation: S|x> = |perm[x]>, so (S rho)[i][j] = rho[inv[i]][j]
    let mut inv = vec![0usize; dim];
    for (x, &y) in perm.iter().enumerate() {
        inv[y] = x;
    }
    let m = rho.matrix();
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        let si = inv[i];
        for j in 0..dim {
            let sj = inv[j];
            let sum = m.at(i, j) + m.at(si, sj) + m.at(si, j) + m.at(i, sj);
            out.set(i, j, sum * 0.25);
        }
    }
    let weight = out.trace().re;
    Ok((out, weight))
}

/// tr[(⊗_m F_m) · X] where `factors[m]` is a per-copy d×d factor and `None`
/// stands for the identity. Identity slots collapse to a diagonal sum, so
/// the cost is d^(k + #non-identity).
fn trace_factored(x: &CMatrix, d: usize, factors: &[Option<&CMatrix>]) -> Complex64 {
    fn rec(
        x: &CMatrix,
        d: usize,
        factors: &[Option<&CMatrix>],
        pos: usize,
        i: usize,
        j: usize,
        coeff: Complex64,
        acc: &mut Complex64,
    ) {
        if pos == factors.len() {
            *acc += coeff * x.at(j, i);
            return;
        }
        match factors[pos] {
            None => {
                for a in 0..d {
                    rec(x, d, factors, pos + 1, i * d + a, j * d + a, coeff, acc);
                }
            }
            Some(f) => {
                for a in 0..d {
                    for b in 0..d {
                        let w = f.at(a, b);
                        if w == Complex64::ZERO {
                            continue;
                        }
                        rec(x, d, factors, pos + 1, i * d + a, j * d + b, coeff * w, acc);
                    }
                }
            }
        }
    }
    let mut acc = Complex64::ZERO;
    rec(x, d, factors, 0, 0, 0, Complex64::ONE, &mut acc);
    acc
}

/// A k-copy ensemble with the projection already applied; the expensive part
/// of every exact evaluation, cached so that strategies and subset sizes can
/// be swept over it.
pub struct ProjectedEnsemble {
    projected: CMatrix,
    copies: usize,
    copy_dim: usize,
    weight: f64,
}

impl ProjectedEnsemble {
    pub fn new(ensemble: &DensityMatrix, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("projection needs k >= 2".into()));
        }
        let qubits = ensemble.num_qubits();
        if qubits % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "{qubits} qubits do not split into {k} equal copies"
            )));
        }
        let copy_dim = 1usize << (qubits / k);
        let (projected, weight) = swap_projection_apply(ensemble, k, copy_dim)?;
        Ok(Self {
            projected,
            copies: k,
            copy_dim,
            weight,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn copy_dim(&self) -> usize {
        self.copy_dim
    }

    pub fn projected_matrix(&self) -> &CMatrix {
        &self.projected
    }

    fn check_strategy(&self, strategy: &Strategy) -> Result<()> {
        if strategy.omega().dim() != self.copy_dim {
            return Err(Error::DimensionMismatch {
                expected: self.copy_dim,
                got: strategy.omega().dim(),
            });
        }
        Ok(())
    }

    /// tr[(Ω on the subset ⊗ 1 elsewhere) · DρD†] for one subset.
    fn subset_term(&self, strategy: &Strategy, subset: &[usize]) -> f64 {
        let omega = strategy.omega().matrix();
        let factors: Vec<Option<&CMatrix>> = (0..self.copies)
            .map(|m| subset.contains(&m).then_some(omega))
            .collect();
        trace_factored(&self.projected, self.copy_dim, &factors).re
    }

    /// The per-subset passing terms of the scheme average. For
    /// permutation-invariant ensembles all entries agree.
    pub fn subset_pass_terms(&self, strategy: &Strategy, t: usize) -> Result<Vec<f64>> {
        self.check_strategy(strategy)?;
        if t < 1 || t > self.copies {
            return Err(Error::InvalidParameter(format!(
                "subset size {t} out of range for {} copies",
                self.copies
            )));
        }
        Ok((0..self.copies)
            .combinations(t)
            .map(|subset| self.subset_term(strategy, &subset))
            .collect())
    }

    /// Joint probability that the ancilla and all t measured copies pass,
    /// averaged over the uniformly random subset choice.
    pub fn pass_probability(&self, strategy: &Strategy, t: usize) -> Result<f64> {
        let terms = self.subset_pass_terms(strategy, t)?;
        Ok(terms.iter().sum::<f64>() / terms.len() as f64)
    }

    /// Fidelity of one unmeasured copy with the target, conditioned on the
    /// round passing. Averages over subsets and unmeasured slots.
    pub fn unmeasured_fidelity(&self, strategy: &Strategy, t: usize) -> Result<f64> {
        self.check_strategy(strategy)?;
        if t >= self.copies {
            return Err(Error::NoUnmeasuredCopy);
        }
        let omega = strategy.omega().matrix();
        let target_projector = strategy.target().projector();
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for subset in (0..self.copies).combinations(t) {
            denominator += self.subset_term(strategy, &subset);
            let unmeasured: Vec<usize> =
                (0..self.copies).filter(|m| !subset.contains(m)).collect();
            let mut slot_sum = 0.0;
            for &slot in &unmeasured {
                let factors: Vec<Option<&CMatrix>> = (0..self.copies)
                    .map(|m| {
                        if subset.contains(&m) {
                            Some(omega)
                        } else if m == slot {
                            Some(&target_projector)
                        } else {
                            None
                        }
                    })
                    .collect();
                slot_sum += trace_factored(&self.projected, self.copy_dim, &factors).re;
            }
            numerator += slot_sum / unmeasured.len() as f64;
        }
        if denominator <= 0.0 {
            return Err(Error::InvalidState(
                "passing probability vanishes; conditional fidelity undefined".into(),
            ));
        }
        Ok(numerator / denominator)
    }
}

/// Exact joint passing probability of the scheme on an explicit ensemble.
pub fn pass_probability_exact(
    scheme: &Scheme,
    ensemble: &DensityMatrix,
    strategy: &Strategy,
) -> Result<f64> {
    ProjectedEnsemble::new(ensemble, scheme.k())?.pass_probability(strategy, scheme.t())
}

/// Exact post-selected fidelity of one unmeasured copy.
pub fn unmeasured_fidelity_exact(
    scheme: &Scheme,
    ensemble: &DensityMatrix,
    strategy: &Strategy,
) -> Result<f64> {
    ProjectedEnsemble::new(ensemble, scheme.k())?.unmeasured_fidelity(strategy, scheme.t())
}

/// What happened in one protocol round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub ancilla_passed: bool,
    /// All-t conjunction of the per-copy tests; `None` when the ancilla
    /// measurement already failed and no copy was measured.
    pub qsv_passed: Option<bool>,
    /// The measured subset, sorted ascending; empty when the ancilla failed.
    pub measured_indices: Vec<usize>,
}

impl RoundOutcome {
    /// Overall pass: ancilla and every measured copy accepted.
    pub fn passed(&self) -> bool {
        self.ancilla_passed && self.qsv_passed == Some(true)
    }
}

/// Aggregated statistics of a repeated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub rounds_attempted: u64,
    pub rounds_passed: u64,
    /// `None` when no rounds were attempted.
    pub pass_rate: Option<f64>,
    /// 95% Wilson score interval for the pass rate; `None` without rounds.
    pub wilson_ci_95: Option<(f64, f64)>,
    /// Exact post-selected infidelity of an unmeasured copy (not sampled);
    /// `None` when t = k.
    pub posted_unmeasured_infidelity: Option<f64>,
}

fn wilson_interval(passed: u64, attempted: u64) -> (f64, f64) {
    let z = 1.96f64;
    let n = attempted as f64;
    let p = passed as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-round sampler with every ensemble-level quantity precomputed. Rounds
/// are independent given their RNG streams.
pub struct RoundSampler {
    scheme: Scheme,
    weight: f64,
    post: CMatrix,
    omega_lifts: Vec<CMatrix>,
    sqrt_omega_lifts: Vec<CMatrix>,
    unmeasured_infidelity: Option<f64>,
}

impl RoundSampler {
    pub fn new(scheme: &Scheme, noise: &NoiseSpec, strategy: &Strategy) -> Result<Self> {
        let ensemble = noise.ensemble(strategy, scheme.k())?;
        let proj = ProjectedEnsemble::new(&ensemble, scheme.k())?;
        let weight = proj.weight();
        let unmeasured_infidelity = if scheme.t() < scheme.k() {
            Some(1.0 - proj.unmeasured_fidelity(strategy, scheme.t())?)
        } else {
            None
        };

        let d = proj.copy_dim();
        let k = proj.copies();
        let omega = strategy.omega().matrix().clone();
        let sqrt_omega = sqrt_psd(&omega)?;
        let lift = |op: &CMatrix, copy: usize| -> Result<CMatrix> {
            let left = CMatrix::identity(d.pow(copy as u32));
            let right = CMatrix::identity(d.pow((k - 1 - copy) as u32));
            left.kron(op)?.kron(&right)
        };
        let mut omega_lifts = Vec::with_capacity(k);
        let mut sqrt_omega_lifts = Vec::with_capacity(k);
        for copy in 0..k {
            omega_lifts.push(lift(&omega, copy)?);
            sqrt_omega_lifts.push(lift(&sqrt_omega, copy)?);
        }

        let post = if weight > f64::MIN_POSITIVE {
            proj.projected_matrix().scale_re(1.0 / weight)
        } else {
            // the ancilla never passes; this matrix is never consulted
            proj.projected_matrix().clone()
        };
        Ok(Self {
            scheme: *scheme,
            weight,
            post,
            omega_lifts,
            sqrt_omega_lifts,
            unmeasured_infidelity,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Exact ancilla-pass weight of the round.
    pub fn ancilla_weight(&self) -> f64 {
        self.weight
    }

    /// Exact post-selected infidelity of an unmeasured copy, `None` for t = k.
    pub fn unmeasured_infidelity(&self) -> Option<f64> {
        self.unmeasured_infidelity
    }

    /// Samples one round. Draw order is fixed (ancilla, subset, per-copy
    /// tests) so a per-round RNG stream fully determines the outcome.
    pub fn round(&self, rng: &mut impl Rng) -> RoundOutcome {
        if rng.random::<f64>() >= self.weight {
            return RoundOutcome {
                ancilla_passed: false,
                qsv_passed: None,
                measured_indices: Vec::new(),
            };
        }
        let mut indices: Vec<usize> =
            rand::seq::index::sample(rng, self.scheme.k(), self.scheme.t()).into_vec();
        indices.sort_unstable();

        let mut state = std::borrow::Cow::Borrowed(&self.post);
        let mut all_passed = true;
        for (step, &copy) in indices.iter().enumerate() {
            let p = self.omega_lifts[copy]
                .trace_product(&state)
                .re
                .clamp(0.0, 1.0);
            if rng.random::<f64>() >= p {
                all_passed = false;
                break;
            }
            let remaining = self.scheme.t() - step - 1;
            if remaining > 0 {
                // Lueders update on the accepted branch
                let root = &self.sqrt_omega_lifts[copy];
                let updated = root.mul(&state).mul(root).scale_re(1.0 / p);
                state = std::borrow::Cow::Owned(updated);
            }
        }
        RoundOutcome {
            ancilla_passed: true,
            qsv_passed: Some(all_passed),
            measured_indices: indices,
        }
    }
}

fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

/// Samples a single round with a fresh sampler. For repeated rounds use
/// [`run_experiment`], which caches the projected ensemble.
pub fn run_round(
    scheme: &Scheme,
    noise: &NoiseSpec,
    strategy: &Strategy,
    rng: &mut impl Rng,
) -> Result<RoundOutcome> {
    Ok(RoundSampler::new(scheme, noise, strategy)?.round(rng))
}

fn stats_from_counts(sampler: &RoundSampler, rounds: u64, passed: u64) -> RunStats {
    RunStats {
        rounds_attempted: rounds,
        rounds_passed: passed,
        pass_rate: (rounds > 0).then(|| passed as f64 / rounds as f64),
        wilson_ci_95: (rounds > 0).then(|| wilson_interval(passed, rounds)),
        posted_unmeasured_infidelity: sampler.unmeasured_infidelity(),
    }
}

/// Sequential experiment driver. Round i draws from ChaCha stream i of the
/// user seed, so the statistics are identical to the parallel driver's.
pub fn run_experiment_seq(
    scheme: &Scheme,
    noise: &NoiseSpec,
    strategy: &Strategy,
    rounds: u64,
    seed: u64,
) -> Result<RunStats> {
    let sampler = RoundSampler::new(scheme, noise, strategy)?;
    let passed = (0..rounds)
        .filter(|&i| sampler.round(&mut round_rng(seed, i)).passed())
        .count() as u64;
    Ok(stats_from_counts(&sampler, rounds, passed))
}

/// Parallel experiment driver; bit-identical to [`run_experiment_seq`] for
/// the same seed because rounds own disjoint counter-based RNG streams and
/// the aggregation is a commutative count.
#[cfg(feature = "parallel")]
pub fn run_experiment_par(
    scheme: &Scheme,
    noise: &NoiseSpec,
    strategy: &Strategy,
    rounds: u64,
    seed: u64,
) -> Result<RunStats> {
    use rayon::prelude::*;
    let sampler = RoundSampler::new(scheme, noise, strategy)?;
    let passed = (0..rounds)
        .into_par_iter()
        .filter(|&i| sampler.round(&mut round_rng(seed, i)).passed())
        .count() as u64;
    Ok(stats_from_counts(&sampler, rounds, passed))
}

/// Runs `rounds` independent protocol rounds and aggregates the outcome
/// statistics. Deterministic for a fixed seed regardless of thread count.
pub fn run_experiment(
    scheme: &Scheme,
    noise: &NoiseSpec,
    strategy: &Strategy,
    rounds: u64,
    seed: u64,
) -> Result<RunStats> {
    #[cfg(feature = "parallel")]
    {
        run_experiment_par(scheme, noise, strategy, rounds, seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_experiment_seq(scheme, noise, strategy, rounds, seed)
    }
}
