//! Closed-form passing probabilities, round/sample complexities, output
//! infidelities, baselines, and the Bernoulli significance test used to
//! discriminate noise models.
//!
//! Dimensions enter as `f64` so the formulas stay usable far beyond the
//! exact engine (d = 2^100 is fine; underflowing correction terms vanish
//! gracefully).

use crate::error::{Error, Result};
use crate::noise::NoiseKind;
use crate::protocol::Scheme;

/// Whether a quantity is computed from the exact closed form or from the
/// leading-order truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    FirstOrder,
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_order" | "first-order" | "fo" => Ok(Mode::FirstOrder),
            "exact" => Ok(Mode::Exact),
            other => Err(Error::InvalidParameter(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::FirstOrder => "first_order",
            Mode::Exact => "exact",
        })
    }
}

/// Exact passing probability under independent white noise:
/// [(1−ε+λε)^t + (1−ε)^k + ε^k λ^t/(d−1)^{k−1}] / 2.
pub fn pass_prob_independent(k: usize, t: usize, lambda: f64, epsilon: f64, d: f64) -> f64 {
    let (kf, tf) = (k as f64, t as f64);
    let accept = 1.0 - epsilon + lambda * epsilon;
    (accept.powf(tf)
        + (1.0 - epsilon).powf(kf)
        + epsilon.powf(kf) * lambda.powf(tf) / (d - 1.0).powf(kf - 1.0))
        / 2.0
}

/// Exact passing probability under an orthogonal mixture:
/// [(1−ε+λε)^t + (1−ε)^k + ε^k λ^t] / 2.
pub fn pass_prob_mixture(k: usize, t: usize, lambda: f64, epsilon: f64) -> f64 {
    let (kf, tf) = (k as f64, t as f64);
    let accept = 1.0 - epsilon + lambda * epsilon;
    (accept.powf(tf) + (1.0 - epsilon).powf(kf) + epsilon.powf(kf) * lambda.powf(tf)) / 2.0
}

/// Exact passing probability under a coherent rotation: (1−ε+λε)^t.
pub fn pass_prob_rotation(t: usize, lambda: f64, epsilon: f64) -> f64 {
    (1.0 - epsilon + lambda * epsilon).powf(t as f64)
}

/// Exact passing probability under global white noise:
/// 1 − q + (q/2)·([λ+(1−λ)/d]^t + ((d−1)λ^t + 1)/d^k) with q = dε/(d−1).
pub fn pass_prob_global_white(k: usize, t: usize, lambda: f64, epsilon: f64, d: f64) -> f64 {
    let (kf, tf) = (k as f64, t as f64);
    let q = d * epsilon / (d - 1.0);
    let a = lambda + (1.0 - lambda) / d;
    1.0 - q + q / 2.0 * (a.powf(tf) + ((d - 1.0) * lambda.powf(tf) + 1.0) / d.powf(kf))
}

/// Exact passing probability under global unitary control: 1 − ε(1−λ)t.
pub fn pass_prob_global_unitary(t: usize, lambda: f64, epsilon: f64) -> f64 {
    1.0 - epsilon * (1.0 - lambda) * t as f64
}

/// Leading-order truncations of the passing probabilities.
pub fn pass_prob_first_order(kind: NoiseKind, k: usize, t: usize, lambda: f64, epsilon: f64) -> f64 {
    let (kf, tf) = (k as f64, t as f64);
    match kind {
        NoiseKind::IndependentWhite | NoiseKind::OrthogonalMixture => {
            1.0 - (kf + tf * (1.0 - lambda)) * epsilon / 2.0
        }
        NoiseKind::UnitaryRotation | NoiseKind::GlobalUnitaryControl => {
            1.0 - (1.0 - lambda) * tf * epsilon
        }
        NoiseKind::GlobalWhite => 1.0 - epsilon * (1.0 + (1.0 - lambda) * tf) / 2.0,
    }
}

/// Passing probability dispatcher over noise kinds.
pub fn pass_probability(
    kind: NoiseKind,
    k: usize,
    t: usize,
    lambda: f64,
    epsilon: f64,
    d: f64,
    mode: Mode,
) -> f64 {
    match mode {
        Mode::FirstOrder => pass_prob_first_order(kind, k, t, lambda, epsilon),
        Mode::Exact => match kind {
            NoiseKind::IndependentWhite => pass_prob_independent(k, t, lambda, epsilon, d),
            NoiseKind::OrthogonalMixture => pass_prob_mixture(k, t, lambda, epsilon),
            NoiseKind::UnitaryRotation => pass_prob_rotation(t, lambda, epsilon),
            NoiseKind::GlobalWhite => pass_prob_global_white(k, t, lambda, epsilon, d),
            NoiseKind::GlobalUnitaryControl => pass_prob_global_unitary(t, lambda, epsilon),
        },
    }
}

fn ceil_count(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "count expression evaluated to {x}"
        )));
    }
    if x >= u64::MAX as f64 {
        return Err(Error::InvalidParameter("count overflows u64".into()));
    }
    Ok(x.ceil() as u64)
}

/// Rounds needed to reach confidence 1 − δ at per-round passing probability
/// p: ⌈ln δ⁻¹ / ln p⁻¹⌉. Requires 0 < p < 1.
pub fn rounds_for_confidence(p: f64, delta: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if p <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "passing probability {p} is not positive"
        )));
    }
    if p >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "passing probability {p} admits no rejection"
        )));
    }
    ceil_count((1.0 / delta).ln() / (1.0 / p).ln())
}

/// Real-valued (unceiled) leading-order round count for a noise kind.
/// Exposed for the ordering properties, which compare real values.
pub fn rounds_first_order_real(
    kind: NoiseKind,
    k: usize,
    t: usize,
    lambda: f64,
    epsilon: f64,
    delta: f64,
) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let big_l = (1.0 / delta).ln();
    let (kf, tf) = (k as f64, t as f64);
    let coeff = match kind {
        NoiseKind::IndependentWhite | NoiseKind::OrthogonalMixture => {
            2.0 / ((1.0 - lambda) * tf + kf)
        }
        NoiseKind::GlobalWhite => 2.0 / ((1.0 - lambda) * tf + 1.0),
        NoiseKind::UnitaryRotation | NoiseKind::GlobalUnitaryControl => {
            let denom = (1.0 - lambda) * tf;
            if denom <= 0.0 {
                return Err(Error::InvalidParameter(
                    "rotation-type noise with lambda = 1 never fails".into(),
                ));
            }
            1.0 / denom
        }
    };
    Ok(coeff * big_l / epsilon)
}

/// Round count, sample count, and output quality of one scheme against one
/// noise kind.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub rounds_m: u64,
    pub samples_n: u64,
    pub unmeasured_copies: u64,
    /// Exact post-selected infidelity of one unmeasured copy; `None` when
    /// t = k.
    pub output_infidelity: Option<f64>,
    pub mode: Mode,
}

/// Evaluates the scheme's complexity against a noise kind, in either mode.
/// The report always satisfies samples_n = t · rounds_m and
/// unmeasured_copies = (k − t) · rounds_m.
pub fn complexity(
    scheme: &Scheme,
    kind: NoiseKind,
    lambda: f64,
    epsilon: f64,
    d: f64,
    mode: Mode,
) -> Result<ComplexityReport> {
    let rounds_m = match mode {
        Mode::FirstOrder => ceil_count(rounds_first_order_real(
            kind,
            scheme.k(),
            scheme.t(),
            lambda,
            epsilon,
            scheme.delta(),
        )?)?,
        Mode::Exact => {
            let p = pass_probability(kind, scheme.k(), scheme.t(), lambda, epsilon, d, Mode::Exact);
            rounds_for_confidence(p, scheme.delta())?
        }
    };
    let output_infidelity = if scheme.t() < scheme.k() {
        Some(output_infidelity(
            kind,
            scheme.k(),
            scheme.t(),
            lambda,
            epsilon,
            d,
        )?)
    } else {
        None
    };
    Ok(ComplexityReport {
        rounds_m,
        samples_n: scheme.t() as u64 * rounds_m,
        unmeasured_copies: (scheme.k() - scheme.t()) as u64 * rounds_m,
        output_infidelity,
        mode,
    })
}

/// Exact post-selected infidelity of one unmeasured copy, per noise kind.
/// Requires t < k.
pub fn output_infidelity(
    kind: NoiseKind,
    k: usize,
    t: usize,
    lambda: f64,
    epsilon: f64,
    d: f64,
) -> Result<f64> {
    if t >= k {
        return Err(Error::NoUnmeasuredCopy);
    }
    let (kf, tf) = (k as f64, t as f64);
    let accept = 1.0 - epsilon + lambda * epsilon;
    let value = match kind {
        NoiseKind::IndependentWhite => {
            let num =
                epsilon * accept.powf(tf) + epsilon.powf(kf) * lambda.powf(tf) / (d - 1.0).powf(kf - 1.0);
            num / (2.0 * pass_prob_independent(k, t, lambda, epsilon, d))
        }
        NoiseKind::OrthogonalMixture => {
            let num = epsilon * accept.powf(tf) + epsilon.powf(kf) * lambda.powf(tf);
            num / (2.0 * pass_prob_mixture(k, t, lambda, epsilon))
        }
        // a coherent product rotation passes through the projection untouched
        NoiseKind::UnitaryRotation => epsilon,
        NoiseKind::GlobalWhite => {
            let q = d * epsilon / (d - 1.0);
            let a = lambda + (1.0 - lambda) / d;
            let fidelity_num = (1.0 - q) + q * (a.powf(tf) / d + 1.0 / d.powf(kf)) / 2.0;
            1.0 - fidelity_num / pass_prob_global_white(k, t, lambda, epsilon, d)
        }
        NoiseKind::GlobalUnitaryControl => epsilon / (1.0 - epsilon * (1.0 - lambda) * tf),
    };
    Ok(value)
}

/// Reference sample complexities to compare a scheme against.
#[derive(Clone, Debug, PartialEq)]
pub struct Baselines {
    /// Global-projection baseline ⌈ε⁻¹ ln δ⁻¹⌉.
    pub n_opt: u64,
    /// Standard per-copy verification ⌈1/(1−λ)·ε⁻¹ ln δ⁻¹⌉; `None` at λ = 1.
    pub n_std: Option<u64>,
    /// Lower bound on the sample count against an all-powerful adversary;
    /// `None` at λ = 0 where the bound degenerates.
    pub n_adv: Option<f64>,
    /// Rounds guaranteeing the unmeasured copies themselves (t = 1) under an
    /// ensemble-limited adversary; `None` at λ = 1.
    pub m_prime: Option<u64>,
}

pub fn baselines(lambda: f64, epsilon: f64, delta: f64) -> Result<Baselines> {
    if epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let big_l = (1.0 / delta).ln();
    let n_opt = ceil_count(big_l / epsilon)?;
    let n_std = if lambda < 1.0 {
        Some(ceil_count(big_l / ((1.0 - lambda) * epsilon))?)
    } else {
        None
    };
    let n_adv = if lambda > 0.0 {
        let ratio = delta.ln() / lambda.ln();
        Some(ratio * (1.0 + (1.0 - epsilon) / (lambda * epsilon)))
    } else {
        None
    };
    let m_prime = if lambda < 1.0 {
        Some(adversary_guarantee_rounds(1, lambda, epsilon, delta)?)
    } else {
        None
    };
    Ok(Baselines {
        n_opt,
        n_std,
        n_adv,
        m_prime,
    })
}

/// Rounds needed so the unmeasured copies themselves carry infidelity ε with
/// confidence 1 − δ under an ensemble-limited adversary:
/// ⌈ln δ⁻¹ / ln(1 + ε(1−λ)t)⌉.
pub fn adversary_guarantee_rounds(t: usize, lambda: f64, epsilon: f64, delta: f64) -> Result<u64> {
    let u = epsilon * (1.0 - lambda) * t as f64;
    if u <= 0.0 {
        return Err(Error::InvalidParameter(
            "guarantee rounds need epsilon > 0 and lambda < 1".into(),
        ));
    }
    // p' = 1 - u/(1+u), so ln(1/p') = ln(1+u)
    ceil_count((1.0 / delta).ln() / (1.0 + u).ln())
}

/// Plan for delivering verified copies to an online task.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlinePlan {
    pub rounds: u64,
    pub extra_samples: u64,
    /// Infidelity threshold achieved by that many rounds (leading-order
    /// inversion under independent white noise).
    pub achieved_epsilon: f64,
}

/// How many rounds and measured samples it takes to hand `copies_needed`
/// unmeasured copies to a task, and how tightly those copies end up verified.
pub fn online_task_plan(copies_needed: u64, scheme: &Scheme, lambda: f64) -> Result<OnlinePlan> {
    if scheme.t() >= scheme.k() {
        return Err(Error::NoUnmeasuredCopy);
    }
    if copies_needed == 0 {
        return Err(Error::InvalidParameter("copies_needed must be >= 1".into()));
    }
    let per_round = (scheme.k() - scheme.t()) as u64;
    let rounds = copies_needed.div_ceil(per_round);
    let big_l = (1.0 / scheme.delta()).ln();
    let coeff = (1.0 - lambda) * scheme.t() as f64 + scheme.k() as f64;
    let achieved_epsilon = 2.0 * big_l / (coeff * rounds as f64);
    Ok(OnlinePlan {
        rounds,
        extra_samples: scheme.t() as u64 * rounds,
        achieved_epsilon,
    })
}

/// As [`online_task_plan`] but inverts the exact independent-white passing
/// probability by bisection instead of the leading-order formula.
pub fn online_task_plan_exact(
    copies_needed: u64,
    scheme: &Scheme,
    lambda: f64,
    d: f64,
) -> Result<OnlinePlan> {
    let plan = online_task_plan(copies_needed, scheme, lambda)?;
    let rounds_f = plan.rounds as f64;
    let big_l = (1.0 / scheme.delta()).ln();
    // Find eps with L / ln(1/p_exact(eps)) = rounds; the left side is
    // decreasing in eps.
    let target = big_l / rounds_f;
    let f = |eps: f64| -> f64 {
        let p = pass_prob_independent(scheme.k(), scheme.t(), lambda, eps, d);
        (1.0 / p).ln()
    };
    let (mut lo, mut hi) = (1e-12, 0.5);
    if f(hi) < target {
        return Err(Error::InvalidParameter(
            "round budget cannot be met below the purification threshold".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(OnlinePlan {
        achieved_epsilon: 0.5 * (lo + hi),
        ..plan
    })
}

/// Kullback-Leibler divergence between Bernoulli(p) and Bernoulli(q), with
/// the conventions 0·ln 0 = 0 and +∞ on support mismatch.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Outcome of comparing an observed passing rate against one model's
/// prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceResult {
    pub observed_rate: f64,
    pub model_rate: f64,
    pub total_samples: u64,
    /// exp(−KL(observed ‖ model) · total_samples) ∈ [0, 1]; 1 iff the rates
    /// agree or no samples were taken.
    pub significance: f64,
}

pub fn significance(f_s: f64, model_rate: f64, n_total: u64) -> Result<SignificanceResult> {
    for (name, v) in [("observed rate", f_s), ("model rate", model_rate)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    let significance = if n_total == 0 {
        1.0
    } else {
        let kl = kl_bernoulli(f_s, model_rate);
        if kl.is_infinite() {
            0.0
        } else {
            (-kl * n_total as f64).exp()
        }
    };
    Ok(SignificanceResult {
        observed_rate: f_s,
        model_rate,
        total_samples: n_total,
        significance,
    })
}
