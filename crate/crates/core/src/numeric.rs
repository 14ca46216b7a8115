//! Low-level numerical helpers shared by the mechanism builders.
//!
//! The binomial pmf follows Loader's saddle-point algorithm (stirlerr + bd0,
//! as in R's `dbinom`), which keeps the relative error near machine precision
//! even for trial counts in the millions. Plain log-gamma differences lose
//! several digits there, which is not good enough for the mass identities the
//! builders are tested against.

use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

const LN_2PI: f64 = 1.837877066409345483560659472811;

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// stirlerr(n) = ln(n!) − ln( sqrt(2πn) (n/e)^n ).
///
/// Series for n > 15; direct log-gamma evaluation below that, where the
/// absolute error of lgamma is harmless.
fn stirlerr(n: f64) -> f64 {
    if n <= 15.0 {
        return statrs::function::gamma::ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n
            - 0.5 * LN_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Binomial deviance term bd0(x, np) = x ln(x/np) + np − x, evaluated
/// without cancellation when x ≈ np.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// Log of the Binomial(n, p) pmf at x.
///
/// Returns `-inf` outside the support. Exact at the p ∈ {0, 1} and
/// x ∈ {0, n} boundaries.
pub fn ln_binom_pmf(x: u64, n: u64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p out of range: {p}");
    if x > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    let xf = x as f64;
    let q = 1.0 - p;
    if x == 0 {
        return if p > q { nf * q.ln() } else { nf * (-p).ln_1p() };
    }
    if x == n {
        return if p > q { nf * (-q).ln_1p() } else { nf * p.ln() };
    }
    let lc = stirlerr(nf) - stirlerr(xf) - stirlerr(nf - xf) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// Two-sided Hoeffding window for Bin(trials, p) with total neglected mass
/// at most `budget`: returns inclusive integer bounds, rounded outward and
/// clamped to the support. A zero budget (or zero trials) yields the full
/// support.
pub fn hoeffding_window(trials: u64, p: f64, budget: f64) -> (u64, u64) {
    if trials == 0 || budget <= 0.0 {
        return (0, trials);
    }
    let t = trials as f64;
    let c = ((2.0 / budget).ln() / (2.0 * t)).sqrt();
    let lo = ((p - c) * t).floor().max(0.0) as u64;
    let hi = (((p + c) * t).ceil() as u64).min(trials);
    (lo.min(trials), hi)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// log(Σ exp(x_i)); tolerates -inf entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Compensated (Kahan) accumulator for long sums of small masses.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_binom_pmf(x: u64, n: u64, p: f64) -> f64 {
        // Direct product evaluation; fine for tiny n.
        let mut choose = 1.0_f64;
        for i in 0..x {
            choose *= (n - i) as f64 / (i + 1) as f64;
        }
        choose * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
    }

    #[test]
    fn binom_pmf_small_cases() {
        for &(x, n, p) in &[
            (0u64, 0u64, 0.3),
            (1, 2, 0.5),
            (3, 10, 0.3),
            (0, 5, 0.2),
            (5, 5, 0.2),
            (7, 12, 0.8),
        ] {
            let got = ln_binom_pmf(x, n, p).exp();
            let want = exact_binom_pmf(x, n, p);
            assert!(
                (got - want).abs() <= 1e-14 * want.max(1e-300),
                "pmf({x},{n},{p}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn binom_pmf_boundaries() {
        assert_eq!(ln_binom_pmf(0, 10, 0.0), 0.0);
        assert_eq!(ln_binom_pmf(1, 10, 0.0), f64::NEG_INFINITY);
        assert_eq!(ln_binom_pmf(10, 10, 1.0), 0.0);
        assert_eq!(ln_binom_pmf(9, 10, 1.0), f64::NEG_INFINITY);
        assert_eq!(ln_binom_pmf(11, 10, 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn binom_pmf_matches_recurrence_large_n() {
        // pmf(k+1)/pmf(k) = (n-k)/(k+1) * p/q, rolled from the mode outward.
        let n = 200_000u64;
        let p = 0.0183;
        let mode = (n as f64 * p) as u64;
        let ln_mode = ln_binom_pmf(mode, n, p);
        let mut ln_ref = ln_mode;
        for k in mode..mode + 500 {
            ln_ref += ((n - k) as f64 / (k + 1) as f64).ln() + (p / (1.0 - p)).ln();
        }
        let got = ln_binom_pmf(mode + 500, n, p);
        assert!(
            (got - ln_ref).abs() < 1e-10,
            "got {got}, recurrence {ln_ref}"
        );
    }

    #[test]
    fn binom_row_sums_to_one() {
        let n = 5000u64;
        let p = 0.135;
        let mut total = KahanSum::new();
        for x in 0..=n {
            total.add(ln_binom_pmf(x, n, p).exp());
        }
        assert!((total.value() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn hoeffding_window_covers_budgeted_mass() {
        let (trials, p, budget) = (10_000u64, 0.2, 1e-10);
        let (lo, hi) = hoeffding_window(trials, p, budget);
        let mut outside = KahanSum::new();
        for x in 0..lo {
            outside.add(ln_binom_pmf(x, trials, p).exp());
        }
        for x in hi + 1..=trials {
            outside.add(ln_binom_pmf(x, trials, p).exp());
        }
        assert!(outside.value() <= budget, "outside mass {}", outside.value());
    }

    #[test]
    fn hoeffding_window_degenerate() {
        assert_eq!(hoeffding_window(0, 0.5, 1e-12), (0, 0));
        assert_eq!(hoeffding_window(10, 0.5, 0.0), (0, 10));
        let (lo, hi) = hoeffding_window(4, 0.5, 1e-15);
        assert_eq!((lo, hi), (0, 4));
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(0.25) - 0.5987063256829237).abs() < 1e-12);
        assert!((normal_cdf(-1.96) - 0.024997895148220435).abs() < 1e-12);
    }

    #[test]
    fn kahan_beats_naive_on_many_tiny_terms() {
        let mut ks = KahanSum::new();
        for _ in 0..10_000_000 {
            ks.add(1e-10);
        }
        assert!((ks.value() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[0.0, 0.0]);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
