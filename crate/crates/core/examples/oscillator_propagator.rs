//! The Weyl symbol of the harmonic oscillator's evolution operator through
//! its caustic: amplitude against `1/|cos(t/2)|`, and the Maslov jump.

use semiclassics::hamiltonian::HamiltonianSpec;
use semiclassics::propagators::{detect_caustics, weyl_propagator};
use semiclassics::surface::Evolution;
use semiclassics::symplectic::PhasePoint;

fn main() -> semiclassics::Result<()> {
    let evo = Evolution::new(HamiltonianSpec::harmonic());
    let x = PhasePoint::pq(0.5, -0.3);
    for t in [0.5, 1.5, 2.5, 3.0, 3.3, 4.0] {
        let v = weyl_propagator(&evo, &x, t)?;
        println!(
            "t = {t:3.1}: amplitude {:8.5} (exact {:8.5}), maslov {}",
            v.amplitude,
            1.0 / (t / 2.0).cos().abs(),
            v.maslov
        );
    }

    let times: Vec<f64> = (0..=70).map(|k| 0.1 * k as f64).collect();
    for e in detect_caustics(&evo, &x, &times)? {
        println!("{:?} caustic at t = {:.9} (tangential: {}, maslov {})", e.kind, e.time, e.tangential, e.maslov);
    }
    Ok(())
}
