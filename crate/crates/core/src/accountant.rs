//! Grid discretisation, FFT composition and δ(ε) / ε(δ) evaluation.
//!
//! Atoms are placed on an equidistant grid over [−L, L) with every loss
//! rounded UP to the next grid point, so the grid path can only over-state
//! δ. Composition multiplies the spectra elementwise (circular convolution
//! with period 2L); the caller is expected to choose L large enough that the
//! composed density carries negligible mass near the boundary, and a warning
//! flag is raised when it does not.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::pld::{DiscretePld, LossAtom};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Mass within ten grid cells of either boundary above which the
/// wrap-around warning fires.
pub const BOUNDARY_MASS_WARN: f64 = 1e-8;

/// Which integral form a delta query evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralForm {
    /// δ(ε) = δ∞-term + Σ_{s > ε} (1 − e^{ε−s}) ω(s); the hockey-stick form.
    HockeyStick,
    /// δ(ε) = δ∞-term + Σ_{s ≥ ε} ω(s); used for the k-RR tight bounds.
    TailProbability,
}

/// Equidistant grid over [−L, L) with m cells; discretisation always rounds
/// losses up.
#[derive(Clone, Copy, Debug)]
pub struct AccountantConfig {
    pub half_width_l: f64,
    pub grid_size_m: usize,
}

impl AccountantConfig {
    pub fn new(half_width_l: f64, grid_size_m: usize) -> Result<Self> {
        let cfg = Self {
            half_width_l,
            grid_size_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_l > 0.0) || !self.half_width_l.is_finite() {
            return Err(Error::invalid(format!(
                "grid half-width L must be > 0 (got {})",
                self.half_width_l
            )));
        }
        if self.grid_size_m < 2 || self.grid_size_m % 2 != 0 {
            return Err(Error::invalid(format!(
                "grid size m must be a positive even integer (got {})",
                self.grid_size_m
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width_l / self.grid_size_m as f64
    }

    pub fn grid_point(&self, j: usize) -> f64 {
        -self.half_width_l + j as f64 * self.dx()
    }
}

/// A sequence of (PLD, count) entries composed adaptively.
#[derive(Clone, Debug)]
pub struct CompositionSpec {
    pub entries: Vec<(DiscretePld, u32)>,
}

impl CompositionSpec {
    pub fn new(entries: Vec<(DiscretePld, u32)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("composition spec needs at least one entry"));
        }
        if entries.iter().any(|(_, c)| *c < 1) {
            return Err(Error::invalid("composition counts must be >= 1"));
        }
        Ok(Self { entries })
    }

    /// Homogeneous self-composition of a single PLD.
    pub fn homogeneous(pld: DiscretePld, count: u32) -> Result<Self> {
        Self::new(vec![(pld, count)])
    }
}

/// One PLD placed on the grid: cell masses plus the conservative ledger
/// (infinity + truncated + right overflow).
#[derive(Clone, Debug)]
pub struct GridDensity {
    pub masses: Vec<f64>,
    pub infinity_ledger: f64,
}

/// Discretises a PLD onto the grid. Losses round up to the next grid point;
/// losses above L (or in the final cell, which has no grid point at or above
/// them) join the infinity ledger; losses below −L clamp to −L. Total mass
/// is preserved exactly.
pub fn discretize(pld: &DiscretePld, config: &AccountantConfig) -> Result<GridDensity> {
    config.validate()?;
    let report = pld.validate();
    if !report.is_ok() {
        return Err(Error::invalid(format!(
            "PLD invalid for discretisation: {}",
            report.violations.join("; ")
        )));
    }
    let m = config.grid_size_m;
    let dx = config.dx();
    let l = config.half_width_l;
    let mut masses = vec![0.0f64; m];
    let mut ledger = pld.infinity_mass + pld.truncated_mass;
    for atom in &pld.atoms {
        if atom.loss > l {
            ledger += atom.mass;
            continue;
        }
        let j = ((atom.loss + l) / dx).ceil();
        if j <= 0.0 {
            masses[0] += atom.mass;
        } else if (j as usize) >= m {
            ledger += atom.mass;
        } else {
            masses[j as usize] += atom.mass;
        }
    }
    Ok(GridDensity {
        masses,
        infinity_ledger: ledger,
    })
}

/// Composed grid density with precomputed suffix tables for O(1) δ queries.
#[derive(Clone, Debug)]
pub struct ComposedDensity {
    masses: Vec<f64>,
    infinity_mass: f64,
    config: AccountantConfig,
    boundary_mass: f64,
    /// suffix_mass[j] = Σ_{i ≥ j} masses[i]
    suffix_mass: Vec<f64>,
    /// suffix_exp[j] = Σ_{i ≥ j} masses[i]·e^{−x_i}
    suffix_exp: Vec<f64>,
}

impl ComposedDensity {
    fn from_grid(masses: Vec<f64>, infinity_mass: f64, config: AccountantConfig) -> Self {
        let m = masses.len();
        let mut suffix_mass = vec![0.0f64; m + 1];
        let mut suffix_exp = vec![0.0f64; m + 1];
        let mut ks_mass = KahanSum::new();
        let mut ks_exp = KahanSum::new();
        for j in (0..m).rev() {
            ks_mass.add(masses[j]);
            ks_exp.add(masses[j] * (-config.grid_point(j)).exp());
            suffix_mass[j] = ks_mass.value();
            suffix_exp[j] = ks_exp.value();
        }
        let edge = 10.min(m / 2);
        let boundary_mass = masses[..edge].iter().sum::<f64>()
            + masses[m - edge..].iter().sum::<f64>();
        Self {
            masses,
            infinity_mass,
            config,
            boundary_mass,
            suffix_mass,
            suffix_exp,
        }
    }

    pub fn grid_masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn composed_infinity_mass(&self) -> f64 {
        self.infinity_mass
    }

    pub fn config(&self) -> &AccountantConfig {
        &self.config
    }

    /// Composed mass within ten cells of either grid boundary.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    /// True when enough mass sits near ±L that circular wrap-around could
    /// matter; callers should re-run with a larger L.
    pub fn wraparound_warning(&self) -> bool {
        self.boundary_mass > BOUNDARY_MASS_WARN
    }

    /// δ(ε) under the requested integral form, clamped to [0, 1].
    pub fn delta_at(&self, eps: f64, form: IntegralForm) -> f64 {
        let m = self.config.grid_size_m;
        let dx = self.config.dx();
        let r = (eps + self.config.half_width_l) / dx;
        let delta = match form {
            IntegralForm::HockeyStick => {
                // first grid index strictly above eps
                let mut j0 = (r.floor() + 1.0).max(0.0) as usize;
                if j0 > m {
                    j0 = m;
                }
                self.infinity_mass + self.suffix_mass[j0] - eps.exp() * self.suffix_exp[j0]
            }
            IntegralForm::TailProbability => {
                let j0 = (r.ceil().max(0.0) as usize).min(m);
                self.infinity_mass + self.suffix_mass[j0]
            }
        };
        delta.clamp(0.0, 1.0)
    }
}

/// Discretises every entry, convolves via FFT (spectra raised to their
/// counts), and composes the infinity ledgers as 1 − Π(1 − d_i)^{c_i}.
/// A single-round spec (total count 1) skips the FFT entirely.
pub fn compose(spec: &CompositionSpec, config: &AccountantConfig) -> Result<ComposedDensity> {
    config.validate()?;
    if spec.entries.is_empty() {
        return Err(Error::invalid("composition spec needs at least one entry"));
    }
    let m = config.grid_size_m;
    let grids: Vec<GridDensity> = spec
        .entries
        .iter()
        .map(|(pld, _)| discretize(pld, config))
        .collect::<Result<_>>()?;

    let mut ln_surv = 0.0f64;
    let mut saturated = false;
    for (g, (_, count)) in grids.iter().zip(&spec.entries) {
        if g.infinity_ledger >= 1.0 {
            saturated = true;
        } else {
            ln_surv += *count as f64 * (-g.infinity_ledger).ln_1p();
        }
    }
    let infinity_mass = if saturated { 1.0 } else { -ln_surv.exp_m1() };

    let total_count: u64 = spec.entries.iter().map(|(_, c)| *c as u64).sum();
    if total_count == 1 {
        return Ok(ComposedDensity::from_grid(
            grids.into_iter().next().unwrap().masses,
            infinity_mass,
            *config,
        ));
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);

    let mut product: Vec<Complex<f64>> = vec![Complex::new(1.0, 0.0); m];
    for (g, (_, count)) in grids.iter().zip(&spec.entries) {
        // Rotate so index 0 carries loss 0; circular convolution then adds
        // positions modulo 2L.
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|t| Complex::new(g.masses[(t + m / 2) % m], 0.0))
            .collect();
        fft.process(&mut buf);
        for (acc, v) in product.iter_mut().zip(buf.iter()) {
            *acc *= v.powu(*count);
        }
    }
    ifft.process(&mut product);
    let scale = 1.0 / m as f64;
    let masses: Vec<f64> = (0..m)
        .map(|j| (product[(j + m / 2) % m].re * scale).max(0.0))
        .collect();
    Ok(ComposedDensity::from_grid(masses, infinity_mass, *config))
}

/// δ(ε) convenience wrapper over [`ComposedDensity::delta_at`].
pub fn delta_at(composed: &ComposedDensity, eps: f64, form: IntegralForm) -> f64 {
    composed.delta_at(eps, form)
}

/// Smallest ε ∈ [−L, L] with δ(ε) ≤ target, found by bisection on one
/// composed density; returns the conservative upper end of the final
/// bracket.
pub fn epsilon_for_delta(
    spec: &CompositionSpec,
    config: &AccountantConfig,
    target_delta: f64,
    form: IntegralForm,
) -> Result<f64> {
    if !(target_delta > 0.0 && target_delta < 1.0) {
        return Err(Error::invalid(format!(
            "target delta must be in (0, 1) (got {target_delta})"
        )));
    }
    let composed = compose(spec, config)?;
    epsilon_for_delta_composed(&composed, target_delta, form)
}

/// Bisection on an already-composed density.
pub fn epsilon_for_delta_composed(
    composed: &ComposedDensity,
    target_delta: f64,
    form: IntegralForm,
) -> Result<f64> {
    let l = composed.config().half_width_l;
    let delta_min = composed.delta_at(l, form);
    let delta_max = composed.delta_at(-l, form);
    if !(delta_min <= target_delta && target_delta <= delta_max) {
        return Err(Error::DeltaOutOfRange {
            target: target_delta,
            min: delta_min,
            max: delta_max,
        });
    }
    let mut lo = -l;
    let mut hi = l;
    for _ in 0..200 {
        if hi - lo <= 1e-9 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if composed.delta_at(mid, form) <= target_delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Grid-free exact δ(ε) for a single round, straight off the atoms. The FFT
/// path must approach this from above.
pub fn exact_delta_single(pld: &DiscretePld, eps: f64, form: IntegralForm) -> f64 {
    let mut s = KahanSum::new();
    s.add(pld.infinity_mass);
    s.add(pld.truncated_mass);
    match form {
        IntegralForm::HockeyStick => {
            let ee = eps.exp();
            for a in &pld.atoms {
                if a.loss > eps {
                    s.add(a.mass * (1.0 - ee * (-a.loss).exp()));
                }
            }
        }
        IntegralForm::TailProbability => {
            for a in &pld.atoms {
                if a.loss >= eps {
                    s.add(a.mass);
                }
            }
        }
    }
    s.value().clamp(0.0, 1.0)
}

/// Exact atom-level n_c-fold self-convolution; the test oracle for the FFT
/// path. Losses add, masses multiply, equal losses coalesce. Guarded at ten
/// million result atoms.
pub fn naive_compose(pld: &DiscretePld, n_c: u32) -> Result<DiscretePld> {
    if n_c < 1 {
        return Err(Error::invalid("n_c must be >= 1"));
    }
    const GUARD: usize = 10_000_000;
    let base = pld.coalesce(0.0)?;
    let mut atoms = base.atoms.clone();
    for _ in 1..n_c {
        if atoms.len().saturating_mul(base.atoms.len()) > GUARD {
            return Err(Error::guard(format!(
                "naive composition would exceed {GUARD} atoms"
            )));
        }
        let mut next = Vec::with_capacity(atoms.len() * base.atoms.len());
        for x in &atoms {
            for y in &base.atoms {
                next.push(LossAtom::new(x.loss + y.loss, x.mass * y.mass));
            }
        }
        atoms = DiscretePld::new(next, 0.0, 0.0, pld.direction)
            .coalesce(0.0)?
            .atoms;
    }
    let d_inf = pld.infinity_mass;
    let finite = 1.0 - pld.infinity_mass - pld.truncated_mass;
    let inf_composed = 1.0 - (1.0 - d_inf).powi(n_c as i32);
    let trunc_composed = (1.0 - finite.powi(n_c as i32) - inf_composed).max(0.0);
    Ok(DiscretePld::new(
        atoms,
        inf_composed,
        trunc_composed,
        pld.direction,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pld::Direction;

    fn pld(atoms: &[(f64, f64)], inf: f64, trunc: f64) -> DiscretePld {
        DiscretePld::new(
            atoms.iter().map(|&(l, m)| LossAtom::new(l, m)).collect(),
            inf,
            trunc,
            Direction::NumOverDen,
        )
    }

    fn cfg(l: f64, m: usize) -> AccountantConfig {
        AccountantConfig::new(l, m).unwrap()
    }

    #[test]
    fn discretize_rounds_up() {
        // dx = 0.1 on [-2, 2) with m = 40; atom at 0.15 lands on 0.2.
        let g = discretize(&pld(&[(0.15, 0.4), (0.0, 0.6)], 0.0, 0.0), &cfg(2.0, 40)).unwrap();
        let c = cfg(2.0, 40);
        let j = g.masses.iter().position(|&v| (v - 0.4).abs() < 1e-15).unwrap();
        assert!((c.grid_point(j) - 0.2).abs() < 1e-12);
        assert!((g.masses[20] - 0.6).abs() < 1e-15); // loss 0 already on-grid
    }

    #[test]
    fn discretize_overflow_rules() {
        let p = pld(&[(3.0, 0.05), (-3.0, 0.15), (0.0, 0.7)], 0.06, 0.04);
        let g = discretize(&p, &cfg(2.0, 40)).unwrap();
        // right overflow joins the ledger, left overflow clamps to -L
        assert!((g.infinity_ledger - (0.05 + 0.06 + 0.04)).abs() < 1e-15);
        assert!((g.masses[0] - 0.15).abs() < 1e-15);
        let total: f64 = g.masses.iter().sum::<f64>() + g.infinity_ledger;
        assert!((total - p.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn compose_point_mass_is_fixed_point() {
        let spec = CompositionSpec::homogeneous(pld(&[(0.0, 1.0)], 0.0, 0.0), 7).unwrap();
        let composed = compose(&spec, &cfg(4.0, 64)).unwrap();
        let mid = 32;
        assert!((composed.grid_masses()[mid] - 1.0).abs() < 1e-12);
        let off: f64 = composed
            .grid_masses()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != mid)
            .map(|(_, v)| v.abs())
            .sum();
        assert!(off < 1e-12);
    }

    #[test]
    fn compose_two_atom_binomial_expansion() {
        // s = 2.0 on a dx = 1 grid; squares and cross terms land on ±4 and 0.
        let p = 0.3;
        let spec =
            CompositionSpec::homogeneous(pld(&[(2.0, p), (-2.0, 1.0 - p)], 0.0, 0.0), 2).unwrap();
        let c = cfg(8.0, 16);
        let composed = compose(&spec, &c).unwrap();
        let at = |x: f64| composed.grid_masses()[((x + 8.0) / 1.0) as usize];
        assert!((at(4.0) - p * p).abs() < 1e-12);
        assert!((at(0.0) - 2.0 * p * (1.0 - p)).abs() < 1e-12);
        assert!((at(-4.0) - (1.0 - p) * (1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn compose_matches_naive_convolution_on_grid_atoms() {
        // Random-ish grid-aligned PLD, composed twice: FFT vs direct O(T^2).
        let c = cfg(8.0, 256);
        let dx = c.dx();
        let atoms: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let j = 100 + i;
                (-8.0 + j as f64 * dx, ((i * 37 + 11) % 97) as f64)
            })
            .collect();
        let total: f64 = atoms.iter().map(|(_, m)| m).sum();
        let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(l, m)| (l, m / total)).collect();
        let base = pld(&atoms, 0.0, 0.0);
        let spec = CompositionSpec::homogeneous(base.clone(), 3).unwrap();
        let composed = compose(&spec, &c).unwrap();
        let naive = naive_compose(&base, 3).unwrap();
        let naive_grid = discretize(&naive, &c).unwrap();
        for j in 0..c.grid_size_m {
            assert!(
                (composed.grid_masses()[j] - naive_grid.masses[j]).abs() < 1e-9,
                "cell {j}: fft {} vs naive {}",
                composed.grid_masses()[j],
                naive_grid.masses[j]
            );
        }
    }

    #[test]
    fn composed_infinity_mass_formula() {
        let spec = CompositionSpec::homogeneous(pld(&[(0.0, 0.9)], 0.1, 0.0), 3).unwrap();
        let composed = compose(&spec, &cfg(4.0, 64)).unwrap();
        let want = 1.0 - 0.9f64.powi(3);
        assert!((composed.composed_infinity_mass() - want).abs() < 1e-12);
    }

    #[test]
    fn delta_at_point_mass_zero() {
        let spec = CompositionSpec::homogeneous(pld(&[(0.0, 1.0)], 0.0, 0.0), 1).unwrap();
        let composed = compose(&spec, &cfg(4.0, 64)).unwrap();
        assert_eq!(composed.delta_at(0.1, IntegralForm::HockeyStick), 0.0);
        assert_eq!(composed.delta_at(0.1, IntegralForm::TailProbability), 0.0);
        // tail form includes the boundary cell
        assert_eq!(composed.delta_at(0.0, IntegralForm::TailProbability), 1.0);
    }

    #[test]
    fn delta_pure_infinity_composes() {
        let d = 0.2;
        let spec = CompositionSpec::homogeneous(pld(&[], d, 0.0), 4).unwrap();
        let composed = compose(&spec, &cfg(4.0, 64)).unwrap();
        let want = 1.0 - (1.0 - d).powi(4);
        for eps in [-1.0, 0.0, 2.0] {
            assert!(
                (composed.delta_at(eps, IntegralForm::HockeyStick) - want).abs() < 1e-12
            );
        }
    }

    #[test]
    fn exact_delta_examples() {
        let ln2 = std::f64::consts::LN_2;
        let rr = pld(&[(ln2, 2.0 / 3.0), (-ln2, 1.0 / 3.0)], 0.0, 0.0);
        assert_eq!(exact_delta_single(&rr, ln2, IntegralForm::HockeyStick), 0.0);
        let d0 = exact_delta_single(&rr, 0.0, IntegralForm::HockeyStick);
        assert!((d0 - 1.0 / 3.0).abs() < 1e-15);
        let inf_only = pld(&[], 0.2, 0.0);
        for eps in [-5.0, 0.0, 5.0] {
            assert_eq!(exact_delta_single(&inf_only, eps, IntegralForm::HockeyStick), 0.2);
        }
    }

    #[test]
    fn fft_delta_upper_bounds_exact_single_round() {
        let ln2 = std::f64::consts::LN_2;
        let rr = pld(&[(ln2, 2.0 / 3.0), (-ln2, 1.0 / 3.0)], 0.0, 0.0);
        let c = cfg(20.0, 1 << 16);
        let spec = CompositionSpec::homogeneous(rr.clone(), 1).unwrap();
        let composed = compose(&spec, &c).unwrap();
        for eps in [0.0, 0.2, 0.5, 0.69] {
            let fft = composed.delta_at(eps, IntegralForm::HockeyStick);
            let exact = exact_delta_single(&rr, eps, IntegralForm::HockeyStick);
            let gap = fft - exact;
            assert!(
                gap >= -1e-12 && gap <= (1.0 - (-c.dx()).exp()) + 1e-9,
                "eps {eps}: gap {gap}"
            );
        }
    }

    #[test]
    fn epsilon_for_delta_round_trip() {
        let ln2 = std::f64::consts::LN_2;
        let rr = pld(&[(ln2, 2.0 / 3.0), (-ln2, 1.0 / 3.0)], 0.0, 0.0);
        let c = cfg(20.0, 1 << 18);
        let spec = CompositionSpec::homogeneous(rr, 1).unwrap();
        let eps = epsilon_for_delta(&spec, &c, 1.0 / 3.0, IntegralForm::HockeyStick).unwrap();
        assert!(eps.abs() < 2.0 * c.dx() + 1e-6, "eps {eps}");
        let composed = compose(&spec, &c).unwrap();
        assert!(composed.delta_at(eps, IntegralForm::HockeyStick) <= 1.0 / 3.0 + 1e-12);
    }

    #[test]
    fn epsilon_for_delta_range_errors() {
        let spec = CompositionSpec::homogeneous(pld(&[(0.0, 0.9)], 0.1, 0.0), 1).unwrap();
        let c = cfg(4.0, 64);
        // achievable max is well below 1
        let err = epsilon_for_delta(&spec, &c, 0.9999999, IntegralForm::HockeyStick);
        assert!(err.is_err());
        let err2 = epsilon_for_delta(&spec, &c, 1e-9, IntegralForm::HockeyStick);
        assert!(matches!(err2, Err(Error::DeltaOutOfRange { .. })));
    }

    #[test]
    fn naive_compose_examples() {
        let point = pld(&[(0.0, 1.0)], 0.0, 0.0);
        let five = naive_compose(&point, 5).unwrap();
        assert_eq!(five.atoms.len(), 1);
        assert_eq!(five.atoms[0].loss, 0.0);
        assert!((five.atoms[0].mass - 1.0).abs() < 1e-15);

        let p = 0.25;
        let two = naive_compose(&pld(&[(1.0, p), (-1.0, 1.0 - p)], 0.0, 0.0), 2).unwrap();
        assert_eq!(two.atoms.len(), 3);
        let mass_at = |l: f64| {
            two.atoms
                .iter()
                .find(|a| (a.loss - l).abs() < 1e-12)
                .map(|a| a.mass)
                .unwrap()
        };
        assert!((mass_at(2.0) - p * p).abs() < 1e-15);
        assert!((mass_at(0.0) - 2.0 * p * (1.0 - p)).abs() < 1e-15);
        assert!((mass_at(-2.0) - (1.0 - p) * (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn naive_compose_guard() {
        let atoms: Vec<(f64, f64)> = (0..2000).map(|i| (i as f64 * 1e-4, 5e-4)).collect();
        let p = pld(&atoms, 0.0, 0.0);
        assert!(matches!(
            naive_compose(&p, 3),
            Err(Error::ResourceGuard(_))
        ));
    }

    #[test]
    fn grid_refinement_never_raises_delta() {
        let ln2 = std::f64::consts::LN_2;
        let rr = pld(&[(ln2, 0.6), (-ln2, 0.4)], 0.0, 0.0);
        for m_exp in [12usize, 14, 16] {
            let coarse = compose(
                &CompositionSpec::homogeneous(rr.clone(), 4).unwrap(),
                &cfg(20.0, 1 << m_exp),
            )
            .unwrap();
            let fine = compose(
                &CompositionSpec::homogeneous(rr.clone(), 4).unwrap(),
                &cfg(20.0, 1 << (m_exp + 1)),
            )
            .unwrap();
            for eps in [0.0, 0.7, 1.5] {
                let dc = coarse.delta_at(eps, IntegralForm::HockeyStick);
                let df = fine.delta_at(eps, IntegralForm::HockeyStick);
                assert!(df <= dc + 1e-9, "m=2^{m_exp} eps={eps}: {df} > {dc}");
            }
        }
    }

    #[test]
    fn wraparound_flag_fires_when_l_too_small() {
        let wide = pld(&[(1.9, 0.5), (-1.9, 0.5)], 0.0, 0.0);
        let composed = compose(
            &CompositionSpec::homogeneous(wide, 4).unwrap(),
            &cfg(2.0, 64),
        )
        .unwrap();
        assert!(composed.wraparound_warning());
    }

    #[test]
    fn config_validation() {
        assert!(AccountantConfig::new(0.0, 64).is_err());
        assert!(AccountantConfig::new(1.0, 63).is_err());
        assert!(AccountantConfig::new(1.0, 0).is_err());
        assert!(AccountantConfig::new(20.0, 1 << 20).is_ok());
    }
}
