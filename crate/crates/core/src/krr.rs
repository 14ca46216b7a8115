//! PLDs for the shuffled k-randomised-response mechanism.
//!
//! Each of n users reports the truth with probability 1 − γ and a uniform
//! value in [k] otherwise. The strong adversary knows which of the other
//! users randomised and analyses the ratio N₁/N₂ of residual counts in the
//! two differing classes, with the differing user's truthful submission
//! contributing the +1; the weak adversary additionally loses that user's
//! randomisation bit, which smooths the ratio through the privacy blanket
//! counts. Both builders enumerate the relevant count laws exactly (up to
//! Hoeffding windows when τ > 0) and emit the loss distribution under the
//! first dataset.
//!
//! k-RR deltas are tail probabilities of the composed loss, so queries on
//! these PLDs use the tail integral form, not the hockey-stick form.

use crate::error::{Error, Result};
use crate::numeric::{hoeffding_window, ln_binom_pmf, KahanSum};
use crate::pld::{Direction, DiscretePld, LossAtom};
use rayon::prelude::*;

/// Which view the adversary observes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adversary {
    Strong,
    Weak,
}

impl Adversary {
    pub fn as_str(self) -> &'static str {
        match self {
            Adversary::Strong => "strong",
            Adversary::Weak => "weak",
        }
    }
}

/// Whether the two differing-class counts are enumerated from their exact
/// joint law (the view distribution) or as independent marginals (a literal
/// reading of the count laws, kept for comparison only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JointModel {
    #[default]
    ViewJoint,
    IndependentMarginals,
}

/// Parameters of the shuffled k-RR mechanism.
#[derive(Clone, Copy, Debug)]
pub struct KrrParams {
    pub n: u64,
    /// Alphabet size k ≥ 2.
    pub k: u64,
    /// Probability that a user answers randomly.
    pub gamma: f64,
    /// Hoeffding truncation tolerance; 0 enumerates everything.
    pub tau: f64,
    pub adversary: Adversary,
    pub joint_model: JointModel,
}

impl KrrParams {
    pub fn new(n: u64, k: u64, gamma: f64) -> Self {
        Self {
            n,
            k,
            gamma,
            tau: 0.0,
            adversary: Adversary::Strong,
            joint_model: JointModel::default(),
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_adversary(mut self, adversary: Adversary) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn with_joint_model(mut self, joint_model: JointModel) -> Self {
        self.joint_model = joint_model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid(format!("n must be >= 1 (got {})", self.n)));
        }
        if self.k < 2 {
            return Err(Error::invalid(format!("k must be >= 2 (got {})", self.k)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!(
                "gamma must be in [0, 1] (got {})",
                self.gamma
            )));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::invalid(format!(
                "tau must be in [0, 1) (got {})",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Joint law of the blanket counts in the two differing classes:
/// ℙ(G₁ = a, G₂ = b) for the n − 1 non-differing users, each landing in a
/// given class with probability γ/k. Evaluated as Bin(n−1, 2γ/k) on the
/// total times a fair split, which is the same trinomial.
pub fn blanket_joint_mass(n: u64, k: u64, gamma: f64, a: u64, b: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid(format!("n must be >= 1 (got {n})")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2 (got {k})")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must be in [0, 1] (got {gamma})")));
    }
    if a + b > n - 1 {
        return Err(Error::invalid(format!(
            "(a, b) = ({a}, {b}) outside support: a + b must be <= n - 1 = {}",
            n - 1
        )));
    }
    let p2 = 2.0 * gamma / k as f64;
    Ok((ln_binom_pmf(a + b, n - 1, p2) + ln_binom_pmf(a, a + b, 0.5)).exp())
}

/// Dispatches on `params.adversary`.
pub fn build_krr_pld(params: &KrrParams) -> Result<DiscretePld> {
    match params.adversary {
        Adversary::Strong => build_krr_strong_pld(params),
        Adversary::Weak => build_krr_weak_pld(params),
    }
}

/// Strong-adversary PLD: atoms at log((a+1)/b) over the blanket counts,
/// with all mass on G₂ = 0 going to `infinity_mass` (closed form
/// (1 − γ/k)^{n−1}, independent of the joint model).
pub fn build_krr_strong_pld(params: &KrrParams) -> Result<DiscretePld> {
    params.validate()?;
    let KrrParams {
        n, k, gamma, tau, ..
    } = *params;
    let pk = gamma / k as f64;
    let infinity_mass = ((n as f64 - 1.0) * (-pk).ln_1p()).exp();
    let (a_lo, a_hi) = if tau > 0.0 {
        hoeffding_window(n - 1, pk, tau / 2.0)
    } else {
        (0, n - 1)
    };
    let (b_lo, b_hi) = if tau > 0.0 {
        hoeffding_window(n - 1, pk, tau / 2.0)
    } else {
        (0, n - 1)
    };
    let b_lo = b_lo.max(1);
    let joint = params.joint_model;
    let rows: Vec<Vec<LossAtom>> = (a_lo..=a_hi)
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            let ln_a_marginal = ln_binom_pmf(a, n - 1, pk);
            let b_cap = match joint {
                JointModel::ViewJoint => {
                    if a + 1 > n - 1 {
                        return out;
                    }
                    b_hi.min(n - 1 - a)
                }
                JointModel::IndependentMarginals => b_hi,
            };
            for b in b_lo..=b_cap {
                let ln_mass = match joint {
                    JointModel::ViewJoint => {
                        ln_binom_pmf(a + b, n - 1, 2.0 * pk) + ln_binom_pmf(a, a + b, 0.5)
                    }
                    JointModel::IndependentMarginals => ln_a_marginal + ln_binom_pmf(b, n - 1, pk),
                };
                let mass = ln_mass.exp();
                if mass > 0.0 {
                    let loss = ((a + 1) as f64).ln() - (b as f64).ln();
                    out.push(LossAtom::new(loss, mass));
                }
            }
            out
        })
        .collect();
    let atoms: Vec<LossAtom> = rows.into_iter().flatten().collect();
    let mut seen = KahanSum::new();
    for a in &atoms {
        seen.add(a.mass);
    }
    seen.add(infinity_mass);
    let truncated_mass = (1.0 - seen.value()).max(0.0);
    DiscretePld::new(atoms, infinity_mass, truncated_mass, Direction::NumOverDen).coalesce(0.0)
}

/// Weak-adversary PLD: stage the blanket size B, the blanket counts in the
/// two differing classes, and the differing user's report class, then emit
/// the smoothed ratio. γ > 0 is required (the denominator is γ(B+1)/k).
pub fn build_krr_weak_pld(params: &KrrParams) -> Result<DiscretePld> {
    params.validate()?;
    let KrrParams {
        n, k, gamma, tau, ..
    } = *params;
    if gamma == 0.0 {
        return Err(Error::invalid(
            "weak-adversary model needs gamma > 0 (ratio denominator vanishes)",
        ));
    }
    let kf = k as f64;
    let (m_lo, m_hi) = if tau > 0.0 {
        hoeffding_window(n - 1, gamma, tau / 3.0)
    } else {
        (0, n - 1)
    };
    // Report-class probabilities for the differing user under the first
    // dataset: its own class, the other differing class, anything else.
    let cat: [(f64, u64, u64); 3] = [
        (1.0 - gamma + gamma / kf, 1, 0),
        (gamma / kf, 0, 1),
        (gamma * (kf - 2.0) / kf, 0, 0),
    ];
    let joint = params.joint_model;
    // Independent-marginals reproduction mode: the two Bernoulli add-ons are
    // drawn independently instead of as one categorical report.
    let ind: [(f64, u64, u64); 4] = {
        let p1 = 1.0 - gamma + gamma / kf;
        let p2 = gamma / kf;
        [
            (p1 * p2, 1, 1),
            (p1 * (1.0 - p2), 1, 0),
            ((1.0 - p1) * p2, 0, 1),
            ((1.0 - p1) * (1.0 - p2), 0, 0),
        ]
    };
    let rows: Vec<Vec<LossAtom>> = (m_lo..=m_hi)
        .into_par_iter()
        .map(|m| {
            let mut out = Vec::new();
            let ln_pb = ln_binom_pmf(m, n - 1, gamma);
            if ln_pb == f64::NEG_INFINITY {
                return out;
            }
            let (c1_lo, c1_hi) = if tau > 0.0 {
                hoeffding_window(m, 1.0 / kf, tau / 3.0)
            } else {
                (0, m)
            };
            let (c2_lo, c2_hi) = if tau > 0.0 {
                hoeffding_window(m, 1.0 / kf, tau / 3.0)
            } else {
                (0, m)
            };
            let blanket_term = gamma / kf * (m + 1) as f64;
            for n1 in c1_lo..=c1_hi {
                for n2 in c2_lo..=c2_hi.min(m - n1) {
                    let ln_counts =
                        ln_binom_pmf(n1 + n2, m, 2.0 / kf) + ln_binom_pmf(n1, n1 + n2, 0.5);
                    if ln_counts == f64::NEG_INFINITY {
                        continue;
                    }
                    let stage = (ln_pb + ln_counts).exp();
                    if stage == 0.0 {
                        continue;
                    }
                    let add_ons: &[(f64, u64, u64)] = match joint {
                        JointModel::ViewJoint => &cat,
                        JointModel::IndependentMarginals => &ind,
                    };
                    for &(pc, d1, d2) in add_ons {
                        if pc <= 0.0 {
                            continue;
                        }
                        let num = (1.0 - gamma) * (n1 + d1) as f64 + blanket_term;
                        let den = (1.0 - gamma) * (n2 + d2) as f64 + blanket_term;
                        out.push(LossAtom::new(num.ln() - den.ln(), stage * pc));
                    }
                }
            }
            out
        })
        .collect();
    let atoms: Vec<LossAtom> = rows.into_iter().flatten().collect();
    let mut seen = KahanSum::new();
    for a in &atoms {
        seen.add(a.mass);
    }
    let truncated_mass = (1.0 - seen.value()).max(0.0);
    DiscretePld::new(atoms, 0.0, truncated_mass, Direction::NumOverDen).coalesce(0.0)
}

/// Closed-form baseline: the smallest ε ≤ 1 for which the analytic blanket
/// bound certifies (ε, δ)-DP at the given randomisation probability.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticEpsilon {
    pub epsilon: f64,
    /// The bound is only stated for ε ≤ 1.
    pub valid: bool,
}

/// Inverts γ = max(14·k·log(2/δ)/((n−1)ε²), 27·k/((n−1)ε)) for ε; flagged
/// invalid when the result exceeds the theorem's ε ≤ 1 range.
pub fn balle_analytic_epsilon(n: u64, k: u64, gamma: f64, delta: f64) -> Result<AnalyticEpsilon> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be >= 2 (got {n})")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2 (got {k})")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma must be in (0, 1] (got {gamma})")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1] (got {delta})")));
    }
    let nf = (n - 1) as f64;
    let kf = k as f64;
    let eps_noise = (14.0 * kf * (2.0 / delta).ln() / (nf * gamma)).sqrt();
    let eps_count = 27.0 * kf / (nf * gamma);
    let epsilon = eps_noise.max(eps_count);
    Ok(AnalyticEpsilon {
        epsilon,
        valid: epsilon <= 1.0,
    })
}
