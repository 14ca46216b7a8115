//! PLD of the dominating pair for general shuffled ε₀-LDP mechanisms.
//!
//! The pair (P, Q) lives on two-dimensional count vectors (a, b) with
//! a + b ∈ [1, n]. Both are mixtures of the same two component laws,
//!
//! ```text
//! P = q·P₁ + (1−q)·P₀,   Q = (1−q)·P₁ + q·P₀,   q = e^{ε₀}/(e^{ε₀}+1),
//! ```
//!
//! where P₁ = (A+1, C−A), P₀ = (A, C−A+1), C ~ Bin(n−1, e^{−ε₀}) and
//! A ~ Bin(C, ½). The full PLD has one atom per support point (O(n²) of
//! them); the truncated builder enumerates only a Hoeffding window on C and,
//! per C value, a window on A, recording everything it skipped in
//! `truncated_mass` (at most τ in total).

use crate::error::{Error, Result};
use crate::numeric::{hoeffding_window, ln_binom_pmf, KahanSum};
use crate::pld::{Direction, DiscretePld, LossAtom};
use rayon::prelude::*;

/// Default cap on the atom count of the exact O(n²) builder.
pub const DEFAULT_FULL_ATOM_CAP: usize = 50_000_000;

/// Direction selector for clones accounting. `MaxBoth` is resolved at
/// accounting time by evaluating both one-sided PLDs and taking the larger
/// delta; the PLD builders themselves require a concrete direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClonesDirection {
    NumOverDen,
    DenOverNum,
    MaxBoth,
}

impl From<Direction> for ClonesDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::NumOverDen => ClonesDirection::NumOverDen,
            Direction::DenOverNum => ClonesDirection::DenOverNum,
        }
    }
}

/// How a non-integer γ·n is mapped to the effective population of the
/// subsampled pair. Nearest matches the reference experiments; floor is
/// available because a smaller population is not conservative in any
/// provable direction and the choice deserves to be visible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SubsampleRounding {
    #[default]
    Nearest,
    Floor,
}

/// Parameters of the clones pair.
#[derive(Clone, Copy, Debug)]
pub struct ClonesParams {
    /// Number of users n ≥ 1.
    pub n: u64,
    /// Local DP parameter ε₀ > 0.
    pub eps0: f64,
    /// Truncation tolerance τ ∈ [0, 1); 0 selects the exact builder.
    pub tau: f64,
    /// Subsampling ratio γ ∈ (0, 1]; 1 means no subsampling.
    pub subsample_ratio: f64,
    pub direction: ClonesDirection,
    pub subsample_rounding: SubsampleRounding,
}

impl ClonesParams {
    pub fn new(n: u64, eps0: f64) -> Self {
        Self {
            n,
            eps0,
            tau: 0.0,
            subsample_ratio: 1.0,
            direction: ClonesDirection::NumOverDen,
            subsample_rounding: SubsampleRounding::default(),
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_subsample_ratio(mut self, gamma: f64) -> Self {
        self.subsample_ratio = gamma;
        self
    }

    pub fn with_direction(mut self, direction: ClonesDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_rounding(mut self, rounding: SubsampleRounding) -> Self {
        self.subsample_rounding = rounding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid(format!("n must be >= 1 (got {})", self.n)));
        }
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return Err(Error::invalid(format!(
                "eps0 must be > 0 and finite (got {})",
                self.eps0
            )));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::invalid(format!(
                "tau must be in [0, 1) (got {})",
                self.tau
            )));
        }
        if !(self.subsample_ratio > 0.0 && self.subsample_ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "subsample_ratio must be in (0, 1] (got {})",
                self.subsample_ratio
            )));
        }
        Ok(())
    }
}

/// ℙ(P₁ = (a, b)): zero for a = 0, otherwise the event C = a+b−1, A = a−1.
pub fn p1_mass(n: u64, eps0: f64, a: u64, b: u64) -> Result<f64> {
    check_support(n, eps0, a, b)?;
    if a == 0 {
        return Ok(0.0);
    }
    let i = a + b - 1;
    Ok((ln_binom_pmf(i, n - 1, (-eps0).exp()) + ln_binom_pmf(a - 1, i, 0.5)).exp())
}

/// ℙ(P₀ = (a, b)): zero for b = 0, otherwise the event C = a+b−1, A = a.
pub fn p0_mass(n: u64, eps0: f64, a: u64, b: u64) -> Result<f64> {
    check_support(n, eps0, a, b)?;
    if b == 0 {
        return Ok(0.0);
    }
    let i = a + b - 1;
    Ok((ln_binom_pmf(i, n - 1, (-eps0).exp()) + ln_binom_pmf(a, i, 0.5)).exp())
}

/// Masses of the mixture pair at one support point: (ℙ(P=(a,b)), ℙ(Q=(a,b))).
pub fn pair_mass(n: u64, eps0: f64, a: u64, b: u64) -> Result<(f64, f64)> {
    if a + b == 0 {
        return Err(Error::invalid("pair_mass requires a + b >= 1"));
    }
    let p1 = p1_mass(n, eps0, a, b)?;
    let p0 = p0_mass(n, eps0, a, b)?;
    let q = 1.0 / (1.0 + (-eps0).exp());
    let qc = (-eps0).exp() / (1.0 + (-eps0).exp());
    Ok((q * p1 + qc * p0, qc * p1 + q * p0))
}

/// Privacy loss log(ℙ(P=(a,b)) / ℙ(Q=(a,b))) in nats.
///
/// Evaluated as log(q·a + (1−q)·b) − log(q·b + (1−q)·a), which covers the
/// boundary rows b = 0 (loss +ε₀) and a = 0 (loss −ε₀) with the same
/// expression. Always in [−ε₀, ε₀].
pub fn loss_value(eps0: f64, a: u64, b: u64) -> Result<f64> {
    if a == 0 && b == 0 {
        return Err(Error::invalid("loss_value is undefined at (0, 0)"));
    }
    if !(eps0 > 0.0) {
        return Err(Error::invalid(format!("eps0 must be > 0 (got {eps0})")));
    }
    let q = 1.0 / (1.0 + (-eps0).exp());
    let qc = (-eps0).exp() / (1.0 + (-eps0).exp());
    Ok(loss_value_raw(q, qc, a as f64, b as f64))
}

#[inline]
fn loss_value_raw(q: f64, qc: f64, a: f64, b: f64) -> f64 {
    (q * a + qc * b).ln() - (q * b + qc * a).ln()
}

/// Loss transform induced by mixing the numerator with the denominator at
/// ratio γ: s ↦ log(γ·e^s + 1 − γ).
pub fn subsampled_loss(loss: f64, gamma: f64) -> f64 {
    (gamma * loss.exp() + (1.0 - gamma)).ln()
}

fn check_support(n: u64, eps0: f64, a: u64, b: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid(format!("n must be >= 1 (got {n})")));
    }
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return Err(Error::invalid(format!("eps0 must be > 0 and finite (got {eps0})")));
    }
    if a + b > n {
        return Err(Error::invalid(format!(
            "(a, b) = ({a}, {b}) outside support: a + b must be <= n = {n}"
        )));
    }
    Ok(())
}

/// How enumerated pair masses are turned into atoms.
#[derive(Clone, Copy)]
enum EmitMode {
    Plain(Direction),
    Subsampled(Direction, f64),
}

impl EmitMode {
    #[inline]
    fn atom(self, loss: f64, p_mass: f64, q_mass: f64) -> LossAtom {
        match self {
            EmitMode::Plain(Direction::NumOverDen) => LossAtom::new(loss, p_mass),
            EmitMode::Plain(Direction::DenOverNum) => LossAtom::new(-loss, q_mass),
            EmitMode::Subsampled(Direction::NumOverDen, g) => {
                LossAtom::new(subsampled_loss(loss, g), g * p_mass + (1.0 - g) * q_mass)
            }
            EmitMode::Subsampled(Direction::DenOverNum, g) => {
                LossAtom::new(-subsampled_loss(loss, g), q_mass)
            }
        }
    }
}

fn concrete_direction(params: &ClonesParams) -> Result<Direction> {
    match params.direction {
        ClonesDirection::NumOverDen => Ok(Direction::NumOverDen),
        ClonesDirection::DenOverNum => Ok(Direction::DenOverNum),
        ClonesDirection::MaxBoth => Err(Error::invalid(
            "MaxBoth is an accounting-time direction; build both sides via build_clones_plds",
        )),
    }
}

/// Atoms for one value of C = m, with the A-range widened by one on the
/// upper side so that both mixture components of every windowed (C, A)
/// outcome are captured: the outcome A = j feeds the points (j+1, m−j)
/// through P₁ and (j, m−j+1) through P₀.
fn row_atoms(n: u64, eps0: f64, m: u64, a_lo: u64, a_hi: u64, mode: EmitMode) -> Vec<LossAtom> {
    let p = (-eps0).exp();
    let q = 1.0 / (1.0 + p);
    let qc = p / (1.0 + p);
    let ln_pc = ln_binom_pmf(m, n - 1, p);
    let mut out = Vec::with_capacity((a_hi - a_lo + 1) as usize);
    for a in a_lo..=a_hi {
        let b = m + 1 - a;
        let p1 = if a >= 1 {
            (ln_pc + ln_binom_pmf(a - 1, m, 0.5)).exp()
        } else {
            0.0
        };
        let p0 = if b >= 1 {
            (ln_pc + ln_binom_pmf(a, m, 0.5)).exp()
        } else {
            0.0
        };
        let p_mass = q * p1 + qc * p0;
        let q_mass = qc * p1 + q * p0;
        if p_mass == 0.0 && q_mass == 0.0 {
            continue;
        }
        let loss = loss_value_raw(q, qc, a as f64, b as f64);
        let atom = mode.atom(loss, p_mass, q_mass);
        if atom.mass > 0.0 {
            out.push(atom);
        }
    }
    out
}

fn assemble(
    rows: Vec<Vec<LossAtom>>,
    truncated: bool,
    direction: Direction,
) -> Result<DiscretePld> {
    let atoms: Vec<LossAtom> = rows.into_iter().flatten().collect();
    let truncated_mass = if truncated {
        let mut total = KahanSum::new();
        for a in &atoms {
            total.add(a.mass);
        }
        (1.0 - total.value()).max(0.0)
    } else {
        0.0
    };
    DiscretePld::new(atoms, 0.0, truncated_mass, direction).coalesce(0.0)
}

fn build_pair_pld(
    n: u64,
    eps0: f64,
    tau: f64,
    mode: EmitMode,
    direction: Direction,
) -> Result<DiscretePld> {
    // n = 1 leaves the Hoeffding constant undefined; the support is a single
    // row anyway, so enumerate it exactly.
    let truncate = tau > 0.0 && n >= 2;
    let (m_lo, m_hi) = if truncate {
        hoeffding_window(n - 1, (-eps0).exp(), tau / 2.0)
    } else {
        (0, n - 1)
    };
    let rows: Vec<Vec<LossAtom>> = (m_lo..=m_hi)
        .into_par_iter()
        .map(|m| {
            let (a_lo, a_hi) = if truncate {
                let (j_lo, j_hi) = hoeffding_window(m, 0.5, tau / 2.0);
                (j_lo, (j_hi + 1).min(m + 1))
            } else {
                (0, m + 1)
            };
            row_atoms(n, eps0, m, a_lo, a_hi, mode)
        })
        .collect();
    assemble(rows, truncate, direction)
}

/// Exact O(n²) PLD of the clones pair. Requires τ = 0 and γ = 1.
pub fn build_clones_pld_full(params: &ClonesParams) -> Result<DiscretePld> {
    build_clones_pld_full_capped(params, DEFAULT_FULL_ATOM_CAP)
}

/// Exact builder with an explicit atom-count cap.
pub fn build_clones_pld_full_capped(params: &ClonesParams, cap: usize) -> Result<DiscretePld> {
    params.validate()?;
    if params.tau != 0.0 || params.subsample_ratio != 1.0 {
        return Err(Error::invalid(
            "build_clones_pld_full requires tau = 0 and subsample_ratio = 1",
        ));
    }
    let direction = concrete_direction(params)?;
    let n = params.n;
    let atom_count = (n as u128 * (n as u128 + 3)) / 2;
    if atom_count > cap as u128 {
        return Err(Error::guard(format!(
            "full clones build at n = {n} needs {atom_count} atoms (cap {cap}); use the truncated builder"
        )));
    }
    build_pair_pld(n, params.eps0, 0.0, EmitMode::Plain(direction), direction)
}

/// Hoeffding-truncated O(n·log(4/τ)) PLD; falls back to the exact builder
/// for τ = 0 and delegates to the subsampled builder for γ < 1.
pub fn build_clones_pld(params: &ClonesParams) -> Result<DiscretePld> {
    params.validate()?;
    if params.subsample_ratio < 1.0 {
        return build_subsampled_clones_pld(params);
    }
    if params.tau == 0.0 {
        return build_clones_pld_full(params);
    }
    let direction = concrete_direction(params)?;
    build_pair_pld(
        params.n,
        params.eps0,
        params.tau,
        EmitMode::Plain(direction),
        direction,
    )
}

/// PLD of the subsampled dominating pair (γ·P + (1−γ)·Q, Q), built on the
/// effective population round(γ·n). With γ = 1 the output is bit-identical
/// to [`build_clones_pld`].
pub fn build_subsampled_clones_pld(params: &ClonesParams) -> Result<DiscretePld> {
    params.validate()?;
    let gamma = params.subsample_ratio;
    if gamma == 1.0 {
        let mut unsub = *params;
        unsub.subsample_ratio = 1.0;
        return build_clones_pld(&unsub);
    }
    let direction = concrete_direction(params)?;
    let n_eff_f = match params.subsample_rounding {
        SubsampleRounding::Nearest => (gamma * params.n as f64).round(),
        SubsampleRounding::Floor => (gamma * params.n as f64).floor(),
    };
    if n_eff_f < 1.0 {
        return Err(Error::invalid(format!(
            "subsampled population gamma*n = {:.3} rounds below 1",
            gamma * params.n as f64
        )));
    }
    let n_eff = n_eff_f as u64;
    if params.tau == 0.0 {
        let atom_count = (n_eff as u128 * (n_eff as u128 + 3)) / 2;
        if atom_count > DEFAULT_FULL_ATOM_CAP as u128 {
            return Err(Error::guard(format!(
                "full subsampled build needs {atom_count} atoms; set tau > 0"
            )));
        }
    }
    build_pair_pld(
        n_eff,
        params.eps0,
        params.tau,
        EmitMode::Subsampled(direction, gamma),
        direction,
    )
}

/// Builds the PLDs an accounting query needs: one for a concrete direction,
/// both one-sided PLDs for `MaxBoth`.
pub fn build_clones_plds(params: &ClonesParams) -> Result<Vec<DiscretePld>> {
    match params.direction {
        ClonesDirection::MaxBoth => {
            let num = build_clones_pld(&params.with_direction(ClonesDirection::NumOverDen))?;
            let den = build_clones_pld(&params.with_direction(ClonesDirection::DenOverNum))?;
            Ok(vec![num, den])
        }
        _ => Ok(vec![build_clones_pld(params)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::KahanSum;
    use std::collections::BTreeMap;

    const LN2: f64 = std::f64::consts::LN_2;

    /// Independent oracle: walk the generative definition (C, A, Δ) with
    /// rolling-ratio binomial pmfs and accumulate the exact pair masses per
    /// support point. No shared code with the builders beyond f64.
    fn enumerate_pair(n: u64, eps0: f64) -> BTreeMap<(u64, u64), (f64, f64)> {
        let p = (-eps0).exp();
        let q = (eps0.exp()) / (eps0.exp() + 1.0);
        let mut map: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
        let mut pc = (1.0 - p).powi((n - 1) as i32); // P(C = 0)
        for c in 0..n {
            let mut pa = 0.5f64.powi(c as i32); // P(A = 0 | C = c)
            for a in 0..=c {
                let joint = pc * pa;
                // Δ = 1 (prob q): P at (A+1, C−A), Q at (A, C−A+1)
                let e1 = map.entry((a + 1, c - a)).or_insert((0.0, 0.0));
                e1.0 += q * joint;
                let e2 = map.entry((a, c - a + 1)).or_insert((0.0, 0.0));
                e2.1 += q * joint;
                // Δ = 0 (prob 1−q): P at (A, C−A+1), Q at (A+1, C−A)
                let e3 = map.entry((a, c - a + 1)).or_insert((0.0, 0.0));
                e3.0 += (1.0 - q) * joint;
                let e4 = map.entry((a + 1, c - a)).or_insert((0.0, 0.0));
                e4.1 += (1.0 - q) * joint;
                if a < c {
                    pa *= (c - a) as f64 / (a + 1) as f64;
                }
            }
            if c + 1 < n {
                pc *= ((n - 1 - c) as f64 / (c + 1) as f64) * (p / (1.0 - p));
            }
        }
        map
    }

    #[test]
    fn p1_mass_examples() {
        assert!((p1_mass(1, 0.7, 1, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p1_mass(3, LN2, 1, 0).unwrap() - 0.25).abs() < 1e-15);
        assert!((p1_mass(3, LN2, 2, 1).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(p1_mass(3, LN2, 0, 2).unwrap(), 0.0);
        assert!(p1_mass(3, LN2, 2, 2).is_err());
    }

    #[test]
    fn p0_mass_examples() {
        assert_eq!(p0_mass(10, 1.0, 5, 0).unwrap(), 0.0);
        assert!((p0_mass(3, LN2, 0, 2).unwrap() - 0.25).abs() < 1e-15);
        // Consistent with the generative law: P0=(1,1) means C=1, A=1.
        assert!((p0_mass(3, LN2, 1, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(p0_mass(3, LN2, 2, 2).is_err());
    }

    #[test]
    fn pair_masses_match_enumeration() {
        for &(n, eps0) in &[(1u64, LN2), (2, 1.0), (3, LN2), (7, 0.4), (25, 2.5)] {
            let oracle = enumerate_pair(n, eps0);
            for (&(a, b), &(pm_o, qm_o)) in &oracle {
                let (pm, qm) = pair_mass(n, eps0, a, b).unwrap();
                assert!(
                    (pm - pm_o).abs() <= 1e-13 + 1e-11 * pm_o,
                    "P mass at ({a},{b}) n={n}: {pm} vs oracle {pm_o}"
                );
                assert!(
                    (qm - qm_o).abs() <= 1e-13 + 1e-11 * qm_o,
                    "Q mass at ({a},{b}) n={n}: {qm} vs oracle {qm_o}"
                );
            }
        }
    }

    #[test]
    fn pair_mass_point_mass_at_n1() {
        let (pm, qm) = pair_mass(1, LN2, 1, 0).unwrap();
        assert!((pm - 2.0 / 3.0).abs() < 1e-15);
        assert!((qm - 1.0 / 3.0).abs() < 1e-15);
        let (pm, qm) = pair_mass(1, LN2, 0, 1).unwrap();
        assert!((pm - 1.0 / 3.0).abs() < 1e-15);
        assert!((qm - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn loss_value_examples() {
        assert_eq!(loss_value(1.3, 4, 4).unwrap(), 0.0);
        assert!((loss_value(1.3, 3, 0).unwrap() - 1.3).abs() < 1e-12);
        assert!((loss_value(1.3, 0, 5).unwrap() + 1.3).abs() < 1e-12);
        assert!(loss_value(1.3, 0, 0).is_err());
        // interior point against the mixture-mass definition
        let (pm, qm) = pair_mass(5, 0.9, 2, 1).unwrap();
        let s = loss_value(0.9, 2, 1).unwrap();
        assert!((s - (pm / qm).ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_range_bounded_by_eps0() {
        let eps0 = 2.7;
        for a in 0..=12u64 {
            for b in 0..=12u64 {
                if a + b == 0 {
                    continue;
                }
                let s = loss_value(eps0, a, b).unwrap();
                assert!(s.abs() <= eps0 + 1e-12, "loss {s} exceeds eps0 at ({a},{b})");
            }
        }
    }

    #[test]
    fn full_build_n1_is_binary_randomised_response() {
        let pld = build_clones_pld_full(&ClonesParams::new(1, LN2)).unwrap();
        assert_eq!(pld.atoms.len(), 2);
        assert_eq!(pld.infinity_mass, 0.0);
        assert_eq!(pld.truncated_mass, 0.0);
        let mut atoms = pld.atoms.clone();
        atoms.sort_by(|x, y| x.loss.total_cmp(&y.loss));
        assert!((atoms[0].loss + LN2).abs() < 1e-15);
        assert!((atoms[0].mass - 1.0 / 3.0).abs() < 1e-15);
        assert!((atoms[1].loss - LN2).abs() < 1e-15);
        assert!((atoms[1].mass - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_build_mass_at_loss_zero() {
        // n = 3, eps0 = ln 2: the only support point with loss 0 is (1, 1),
        // whose mixture mass is q/4 + (1−q)/4 = 1/4.
        let pld = build_clones_pld_full(&ClonesParams::new(3, LN2)).unwrap();
        let at_zero: f64 = pld
            .atoms
            .iter()
            .filter(|a| a.loss.abs() < 1e-14)
            .map(|a| a.mass)
            .sum();
        assert!((at_zero - 0.25).abs() < 1e-13, "mass at loss 0: {at_zero}");
    }

    #[test]
    fn full_build_sums_to_one_both_directions() {
        for direction in [ClonesDirection::NumOverDen, ClonesDirection::DenOverNum] {
            let pld = build_clones_pld_full(
                &ClonesParams::new(40, 1.5).with_direction(direction),
            )
            .unwrap();
            assert!((pld.total_mass() - 1.0).abs() < 1e-9);
            assert!(pld.validate().is_ok());
        }
    }

    #[test]
    fn directional_change_of_measure() {
        // Σ mass·e^{−loss} over the NumOverDen PLD recovers the Q total.
        let pld = build_clones_pld_full(&ClonesParams::new(60, 2.0)).unwrap();
        let mut s = KahanSum::new();
        for a in &pld.atoms {
            s.add(a.mass * (-a.loss).exp());
        }
        assert!((s.value() - 1.0).abs() < 1e-9, "got {}", s.value());
    }

    #[test]
    fn full_build_resource_guard() {
        let err = build_clones_pld_full_capped(&ClonesParams::new(5000, 1.0), 1000).unwrap_err();
        assert!(matches!(err, Error::ResourceGuard(_)));
    }

    #[test]
    fn truncated_small_n_equals_full_build() {
        let full = build_clones_pld_full(&ClonesParams::new(2, 1.0)).unwrap();
        let trunc = build_clones_pld(&ClonesParams::new(2, 1.0).with_tau(1e-15)).unwrap();
        assert_eq!(full.atoms.len(), trunc.atoms.len());
        for (x, y) in full.atoms.iter().zip(trunc.atoms.iter()) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
            assert_eq!(x.mass.to_bits(), y.mass.to_bits());
        }
        assert!(trunc.truncated_mass <= 1e-15);
    }

    #[test]
    fn truncated_mass_within_budget() {
        for &(n, eps0, tau) in &[(500u64, 1.0, 1e-9), (2000, 2.0, 1e-10), (2000, 4.0, 1e-6)] {
            let pld = build_clones_pld(&ClonesParams::new(n, eps0).with_tau(tau)).unwrap();
            assert!(
                pld.truncated_mass <= tau,
                "n={n} tau={tau}: truncated {}",
                pld.truncated_mass
            );
            assert!(pld.validate().is_ok());
        }
    }

    #[test]
    fn truncated_atom_count_linear_in_n() {
        let tau = 1e-12f64;
        let pld = build_clones_pld(&ClonesParams::new(10_000, 4.0).with_tau(tau)).unwrap();
        let bound = 2.0 * 10_000.0 * (4.0 / tau).ln();
        assert!((pld.atoms.len() as f64) < bound, "atoms {}", pld.atoms.len());
    }

    #[test]
    fn subsampled_identity_at_gamma_one() {
        let base = ClonesParams::new(300, 1.2).with_tau(1e-10);
        let plain = build_clones_pld(&base).unwrap();
        let sub = build_subsampled_clones_pld(&base.with_subsample_ratio(1.0)).unwrap();
        assert_eq!(plain.atoms.len(), sub.atoms.len());
        for (x, y) in plain.atoms.iter().zip(sub.atoms.iter()) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
            assert_eq!(x.mass.to_bits(), y.mass.to_bits());
        }
    }

    #[test]
    fn subsampled_loss_transform_values() {
        assert_eq!(subsampled_loss(0.0, 0.3), 0.0);
        let s = subsampled_loss(LN2, 0.5);
        assert!((s - 1.5f64.ln()).abs() < 1e-15);
        assert!((s - 0.4054651081081644).abs() < 1e-12);
    }

    #[test]
    fn subsampled_population_guard() {
        let err = build_subsampled_clones_pld(
            &ClonesParams::new(3, 1.0).with_subsample_ratio(0.1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn subsampled_masses_are_mixture_of_pair() {
        // gamma < 1 with whole gamma*n: atoms must carry gamma*p + (1-gamma)*q
        // at the transformed loss.
        let gamma = 0.5;
        let pld = build_subsampled_clones_pld(
            &ClonesParams::new(8, 1.0).with_subsample_ratio(gamma),
        )
        .unwrap();
        assert!((pld.total_mass() - 1.0).abs() < 1e-12);
        let n_eff = 4u64;
        let base = build_clones_pld_full(&ClonesParams::new(n_eff, 1.0)).unwrap();
        // Same atom count (transform is monotone, no new collisions).
        assert_eq!(pld.atoms.len(), base.atoms.len());
        let bound = subsampled_loss(1.0, gamma);
        for a in &pld.atoms {
            assert!(a.loss.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn maxboth_builds_both_sides() {
        let plds = build_clones_plds(
            &ClonesParams::new(10, 1.0).with_direction(ClonesDirection::MaxBoth),
        )
        .unwrap();
        assert_eq!(plds.len(), 2);
        assert_eq!(plds[0].direction, Direction::NumOverDen);
        assert_eq!(plds[1].direction, Direction::DenOverNum);
        let err = build_clones_pld(
            &ClonesParams::new(10, 1.0).with_direction(ClonesDirection::MaxBoth),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
