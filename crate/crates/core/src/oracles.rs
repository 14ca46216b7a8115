//! Independent ground truth for the mechanism builders.
//!
//! `krr_view_enumeration` walks every joint outcome of a tiny shuffled k-RR
//! instance and evaluates the adversary-view divergences exactly, with no
//! shared code with the PLD builders. `gaussian_shuffle_mc` is an unbiased
//! importance estimator of the hockey-stick divergence between shuffled
//! Gaussian outputs, sampling from the mixture side; its n = 1 case has the
//! closed-form Gaussian-mechanism delta as a cross-check.

use crate::error::{Error, Result};
use crate::krr::Adversary;
use crate::numeric::{log_sum_exp, normal_cdf, KahanSum};
use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Exact divergences of a small shuffled k-RR instance, computed over the
/// adversary's view space.
#[derive(Clone, Copy, Debug)]
pub struct ViewEnumerationResult {
    /// H_{e^ε}(View(X) ‖ View(X')).
    pub hockey_delta: f64,
    /// ℙ_{V ~ View(X)}(ratio ≥ e^ε), the tail form.
    pub tail_probability: f64,
    /// H_{e^ε}(View(X') ‖ View(X)), for the class-exchange symmetry check.
    pub reverse_hockey_delta: f64,
}

/// Relative slack used to classify ratio ties: view probabilities that are
/// mathematically equal can differ by a few ulps after summation.
const TIE_SLACK: f64 = 1e-12;

/// Enumerates every joint outcome of n users (truthful, or noise value
/// v ∈ [k]) and groups them into adversary-view equivalence classes: the
/// randomisation vector β plus the sorted output multiset (the shuffler
/// permutation enters only through the multiset). The differing user's
/// value is 1 under X and 2 under X'.
///
/// For the strong adversary the differing user submits truthfully — its
/// randomisation bit is observed, and the non-truthful branch carries no
/// privacy loss — so the enumeration conditions on that branch, matching
/// the count-ratio model the strong PLD builder implements. The weak
/// adversary does not see that bit and the differing user randomises like
/// everyone else.
pub fn krr_view_enumeration(
    n: u64,
    k: u64,
    gamma: f64,
    eps: f64,
    adversary: Adversary,
) -> Result<ViewEnumerationResult> {
    if n < 1 {
        return Err(Error::invalid(format!("n must be >= 1 (got {n})")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2 (got {k})")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must be in [0, 1] (got {gamma})")));
    }
    let outcomes = (k as u128 + 1).checked_pow(n as u32).unwrap_or(u128::MAX);
    if outcomes > 1_000_000 {
        return Err(Error::guard(format!(
            "view enumeration needs (k+1)^n = {outcomes} outcomes (limit 1e6)"
        )));
    }

    let n = n as usize;
    let k = k as usize;
    // choice 0 = truthful, 1..=k = noise value v.
    let choice_prob = |c: usize| -> f64 {
        if c == 0 {
            1.0 - gamma
        } else {
            gamma / k as f64
        }
    };

    // Accumulated (P_X, P_X') per view key (beta bits, sorted outputs).
    let mut views: BTreeMap<(u64, Vec<u8>), (f64, f64)> = BTreeMap::new();
    let mut choices = vec![0usize; n];
    loop {
        // The differing user is the last one; under the strong adversary it
        // stays truthful.
        let differing_choice = choices[n - 1];
        let skip = adversary == Adversary::Strong && differing_choice != 0;
        if !skip {
            let mut prob = 1.0;
            for (i, &c) in choices.iter().enumerate() {
                let visible = i < n - 1 || adversary == Adversary::Weak;
                if visible {
                    prob *= choice_prob(c);
                }
            }
            if prob > 0.0 {
                let mut beta = 0u64;
                let beta_len = match adversary {
                    Adversary::Strong => n, // β_n is observed but fixed to truthful
                    Adversary::Weak => n - 1,
                };
                for (i, &c) in choices.iter().take(beta_len).enumerate() {
                    if c != 0 {
                        beta |= 1 << i;
                    }
                }
                let mut out_x: Vec<u8> = Vec::with_capacity(n);
                let mut out_xp: Vec<u8> = Vec::with_capacity(n);
                for (i, &c) in choices.iter().enumerate() {
                    if c == 0 {
                        // truthful: everyone holds 1 except the differing
                        // user under X', who holds 2.
                        out_x.push(1);
                        out_xp.push(if i == n - 1 { 2 } else { 1 });
                    } else {
                        out_x.push(c as u8);
                        out_xp.push(c as u8);
                    }
                }
                out_x.sort_unstable();
                out_xp.sort_unstable();
                views.entry((beta, out_x)).or_insert((0.0, 0.0)).0 += prob;
                views.entry((beta, out_xp)).or_insert((0.0, 0.0)).1 += prob;
            }
        }
        // next choice vector
        let mut pos = 0;
        loop {
            if pos == n {
                break;
            }
            choices[pos] += 1;
            if choices[pos] <= k {
                break;
            }
            choices[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }

    let alpha = eps.exp();
    let mut total_x = KahanSum::new();
    let mut hockey = KahanSum::new();
    let mut reverse = KahanSum::new();
    let mut tail = KahanSum::new();
    for &(px, pxp) in views.values() {
        total_x.add(px);
        let h = px - alpha * pxp;
        if h > 0.0 {
            hockey.add(h);
        }
        let r = pxp - alpha * px;
        if r > 0.0 {
            reverse.add(r);
        }
        if pxp == 0.0 || px >= alpha * pxp * (1.0 - TIE_SLACK) {
            tail.add(px);
        }
    }
    debug_assert!((total_x.value() - 1.0).abs() < 1e-12);
    Ok(ViewEnumerationResult {
        hockey_delta: hockey.value().clamp(0.0, 1.0),
        tail_probability: tail.value().clamp(0.0, 1.0),
        reverse_hockey_delta: reverse.value().clamp(0.0, 1.0),
    })
}

/// Monte-Carlo estimate with its sampling error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

const MC_SHARD: u64 = 1 << 16;

/// Unbiased estimate of H_{e^ε}(ℳ(X') ‖ ℳ(X)) for the shuffled Gaussian
/// mechanism: ℳ(X) = N(0, σ²Iₙ), ℳ(X') the uniform mixture of N(e_i, σ²Iₙ).
/// Samples t ~ ℳ(X') and averages max(0, 1 − e^ε / r(t)) with
/// r = f_{X'}/f_X evaluated by log-sum-exp. Deterministic given the seed;
/// samples are sharded onto fixed-size substreams and recombined in order,
/// so the thread count does not affect the result.
pub fn gaussian_shuffle_mc(
    n: u64,
    sigma: f64,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if !(1..=8).contains(&n) {
        return Err(Error::invalid(format!("n must be in 1..=8 (got {n})")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be > 0 (got {sigma})")));
    }
    if samples < 1000 {
        return Err(Error::invalid(format!(
            "samples must be >= 1000 (got {samples})"
        )));
    }
    let dim = n as usize;
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let ln_n = (n as f64).ln();
    let shards = samples.div_ceil(MC_SHARD);
    let partials: Vec<(f64, f64)> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard + 1);
            let count = if shard == shards - 1 {
                samples - shard * MC_SHARD
            } else {
                MC_SHARD
            };
            let mut sum = 0.0f64;
            let mut sumsq = 0.0f64;
            let mut exponents = vec![0.0f64; dim];
            for _ in 0..count {
                let i = rng.gen_range(0..dim);
                for (j, e) in exponents.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let t = sigma * z + if j == i { 1.0 } else { 0.0 };
                    *e = (2.0 * t - 1.0) * inv_two_sigma_sq;
                }
                let log_r = log_sum_exp(&exponents) - ln_n;
                let arg = eps - log_r;
                let g = if arg >= 0.0 { 0.0 } else { -arg.exp_m1() };
                sum += g;
                sumsq += g * g;
            }
            (sum, sumsq)
        })
        .collect();
    let mut sum = KahanSum::new();
    let mut sumsq = KahanSum::new();
    for (s, s2) in partials {
        sum.add(s);
        sumsq.add(s2);
    }
    let nf = samples as f64;
    let estimate = (sum.value() / nf).clamp(0.0, 1.0);
    let variance = (sumsq.value() / nf - estimate * estimate).max(0.0);
    let std_error = (variance / nf).sqrt();
    Ok(McEstimate {
        estimate,
        std_error,
        samples,
        seed,
    })
}

/// Tight delta of the sensitivity-1 Gaussian mechanism:
/// Φ(1/(2σ) − εσ) − e^ε Φ(−1/(2σ) − εσ), the exact value the n = 1 MC
/// estimate must reproduce.
pub fn closed_form_gaussian_delta(sigma: f64, eps: f64) -> f64 {
    let a = 1.0 / (2.0 * sigma) - eps * sigma;
    let b = -1.0 / (2.0 * sigma) - eps * sigma;
    (normal_cdf(a) - eps.exp() * normal_cdf(b)).clamp(0.0, 1.0)
}
