//! Follows one characteristic of the Heisenberg double Hamiltonian for the
//! quartic oscillator and prints centre, chord and the conserved value.

use semiclassics::dynamics::{integrate_double, ActionForm, IntegratorConfig};
use semiclassics::hamiltonian::HamiltonianSpec;
use semiclassics::symplectic::{ChordVector, DoublePhasePoint, PhasePoint};

fn main() -> semiclassics::Result<()> {
    let h = HamiltonianSpec::quartic();
    let hh = h.heisenberg_double();
    let start = DoublePhasePoint::new(PhasePoint::pq(0.4, 1.0), ChordVector::pq(0.3, -0.2))?;
    let times: Vec<f64> = (0..=8).map(|k| 0.25 * k as f64).collect();
    let bundle = integrate_double(&hh, &start, &times, ActionForm::Centre, &IntegratorConfig::default())?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>12}", "t", "p", "q", "xi_p", "xi_q", "H'(x, xi)");
    for k in 0..bundle.len() {
        let d = bundle.double_point(k)?;
        println!(
            "{:5.2} {:9.5} {:9.5} {:9.5} {:9.5} {:12.3e}",
            bundle.times[k],
            d.centre.p(0),
            d.centre.q(0),
            d.chord.p(0),
            d.chord.q(0),
            hh.value_at(&d)
        );
    }
    println!("energy drift {:.2e}, symplectic defect {:.2e}", bundle.max_energy_drift(), bundle.max_symplectic_defect());
    Ok(())
}
