use shuffle_accountant::accountant::*;
use shuffle_accountant::pld::{DiscretePld, Direction, LossAtom};

fn main() {
    // statrs erfc precision check
    let x: f64 = -1.96;
    let phi = 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
    println!("statrs phi(-1.96) = {:.20e} (want 2.499789514822043414e-2, diff {:.3e})", phi, phi - 0.02499789514822043413658);
    let phi2 = 0.5 * statrs::function::erf::erfc(-0.25 / std::f64::consts::SQRT_2);
    println!("statrs phi(0.25) = {:.20e} diff {:.3e}", phi2, phi2 - 0.5987063256829237242409);

    // naive compose repro
    let c = AccountantConfig::new(8.0, 256).unwrap();
    let dx = c.dx();
    let atoms: Vec<LossAtom> = (0..40)
        .map(|i| {
            let j = 100 + i;
            LossAtom::new(-8.0 + j as f64 * dx, ((i * 37 + 11) % 97) as f64)
        })
        .collect();
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    let atoms: Vec<LossAtom> = atoms.iter().map(|a| LossAtom::new(a.loss, a.mass / total)).collect();
    let base = DiscretePld::new(atoms, 0.0, 0.0, Direction::NumOverDen);
    let naive = naive_compose(&base, 3).unwrap();
    println!("naive atoms: {}", naive.atoms.len());
    let min_loss = naive.atoms.iter().map(|a| a.loss).fold(f64::INFINITY, f64::min);
    let max_loss = naive.atoms.iter().map(|a| a.loss).fold(f64::NEG_INFINITY, f64::max);
    println!("naive loss range [{min_loss}, {max_loss}] (expect [-5.25, 2.0625])");
    let near = naive.atoms.iter().filter(|a| (a.loss + 5.125).abs() < 1e-12).count();
    println!("atoms at -5.125: {near}");
    let g = discretize(&naive, &c).unwrap();
    println!("naive grid cell 44..48: {:?}", &g.masses[44..48]);
}
