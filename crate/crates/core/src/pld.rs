//! Discrete privacy loss distributions.
//!
//! A PLD is a finite list of (loss, mass) atoms together with two
//! out-of-band ledgers: `infinity_mass` for outcomes impossible under the
//! denominator distribution, and `truncated_mass` for mass a builder
//! deliberately dropped (tail truncation). Both ledgers are treated as loss
//! +∞ when a delta is evaluated, so truncation only ever makes bounds more
//! conservative.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use std::io::Write;

/// Tolerance on |total mass − 1| for a PLD to be considered valid.
pub const MASS_BALANCE_TOL: f64 = 1e-9;

/// One point mass of the privacy loss distribution, loss in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossAtom {
    pub loss: f64,
    pub mass: f64,
}

impl LossAtom {
    pub fn new(loss: f64, mass: f64) -> Self {
        Self { loss, mass }
    }
}

/// Which member of the dominating pair sits in the numerator of the
/// log-ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    NumOverDen,
    DenOverNum,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::NumOverDen => "num-over-den",
            Direction::DenOverNum => "den-over-num",
        }
    }
}

/// A discrete privacy loss distribution with explicit mass ledgers.
#[derive(Clone, Debug)]
pub struct DiscretePld {
    pub atoms: Vec<LossAtom>,
    /// Mass on outcomes with zero probability under the denominator.
    pub infinity_mass: f64,
    /// Mass dropped by tail truncation; accounted like infinity mass.
    pub truncated_mass: f64,
    pub direction: Direction,
}

/// Outcome of [`DiscretePld::validate`]: empty means valid.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl DiscretePld {
    pub fn new(atoms: Vec<LossAtom>, infinity_mass: f64, truncated_mass: f64, direction: Direction) -> Self {
        Self {
            atoms,
            infinity_mass,
            truncated_mass,
            direction,
        }
    }

    /// Sum of atom masses plus both ledgers.
    pub fn total_mass(&self) -> f64 {
        let mut s = KahanSum::new();
        for a in &self.atoms {
            s.add(a.mass);
        }
        s.add(self.infinity_mass);
        s.add(self.truncated_mass);
        s.value()
    }

    /// Checks every structural invariant and reports all violations. Never
    /// mutates the input.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, a) in self.atoms.iter().enumerate() {
            if !a.loss.is_finite() {
                report
                    .violations
                    .push(format!("non-finite loss in atoms at index {i}: {}", a.loss));
            }
            if !(a.mass >= 0.0) || !a.mass.is_finite() {
                report
                    .violations
                    .push(format!("negative or non-finite mass at index {i}: {}", a.mass));
            }
        }
        if !(0.0..=1.0).contains(&self.infinity_mass) {
            report
                .violations
                .push(format!("infinity_mass {} outside [0,1]", self.infinity_mass));
        }
        if !(0.0..=1.0).contains(&self.truncated_mass) {
            report
                .violations
                .push(format!("truncated_mass {} outside [0,1]", self.truncated_mass));
        }
        let total = self.total_mass();
        if !((total - 1.0).abs() <= MASS_BALANCE_TOL) {
            report.violations.push(format!("total mass {total}"));
        }
        report
    }

    /// Merges atoms whose losses lie within `loss_tolerance` of their sorted
    /// neighbour (merged loss is the mass-weighted mean; masses add). With a
    /// zero tolerance only bit-equal losses merge. Idempotent at fixed
    /// tolerance because surviving representatives are separated by more
    /// than the tolerance.
    pub fn coalesce(&self, loss_tolerance: f64) -> Result<DiscretePld> {
        if !(loss_tolerance >= 0.0) {
            return Err(Error::invalid(format!(
                "coalesce tolerance must be >= 0 (got {loss_tolerance})"
            )));
        }
        let mut atoms = self.atoms.clone();
        atoms.sort_unstable_by(|x, y| x.loss.total_cmp(&y.loss));
        let mut out: Vec<LossAtom> = Vec::with_capacity(atoms.len());
        let mut i = 0;
        while i < atoms.len() {
            let mut j = i + 1;
            while j < atoms.len() && atoms[j].loss - atoms[j - 1].loss <= loss_tolerance {
                j += 1;
            }
            if j == i + 1 {
                out.push(atoms[i]);
            } else if atoms[i].loss == atoms[j - 1].loss {
                // Bit-equal cluster (always the case at zero tolerance):
                // keep the loss exactly, a weighted mean could drift an ulp.
                let mass: f64 = atoms[i..j].iter().map(|a| a.mass).sum();
                out.push(LossAtom::new(atoms[i].loss, mass));
            } else {
                let mut mass = 0.0;
                let mut weighted = 0.0;
                for a in &atoms[i..j] {
                    mass += a.mass;
                    weighted += a.mass * a.loss;
                }
                let loss = if mass > 0.0 {
                    weighted / mass
                } else {
                    atoms[i..j].iter().map(|a| a.loss).sum::<f64>() / (j - i) as f64
                };
                out.push(LossAtom::new(loss, mass));
            }
            i = j;
        }
        Ok(DiscretePld::new(
            out,
            self.infinity_mass,
            self.truncated_mass,
            self.direction,
        ))
    }

    /// Writes the export format: `loss,mass` rows with 17 significant
    /// digits, then the two ledger values as trailing comment lines.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "loss,mass")?;
        for a in &self.atoms {
            writeln!(w, "{:.16e},{:.16e}", a.loss, a.mass)?;
        }
        writeln!(w, "# infinity_mass={:.16e}", self.infinity_mass)?;
        writeln!(w, "# truncated_mass={:.16e}", self.truncated_mass)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
