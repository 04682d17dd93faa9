//! Evolves the line `δ(q − q0)` under `H = p³` with the numerically shot
//! reflection kernels and compares the chord function with its closed form
//! and with the small-chord approximation.

use semiclassics::grid::{Axis, Grid2};
use semiclassics::oracle::cubic::CubicClosedForm;
use semiclassics::surface::Evolution;
use semiclassics::symbols::{evolve_chord_from_line, small_chord_evolve_line};
use semiclassics::symplectic::ChordVector;

fn main() -> semiclassics::Result<()> {
    let (q0, t) = (0.3, 1.0);
    let cf = CubicClosedForm::new(1.0, 1.0);
    let evo = Evolution::new(cf.hamiltonian());
    let out = Grid2::new(Axis::new(-2.0, 2.0, 9)?, Axis::new(-1.0, 1.0, 3)?);

    let full = evolve_chord_from_line(q0, &evo, &out, t, 1.0)?;
    let small = small_chord_evolve_line(q0, &evo, &out, t, 1.0)?;
    println!("{:>6} {:>6} {:>24} {:>10} {:>10}", "xi_p", "xi_q", "A'(xi)", "|closed|", "small arg");
    for k in 0..out.len() {
        let [xp, xq] = out.point(k);
        let Ok(exact) = cf.chord_function(q0, &ChordVector::pq(xp, xq), t) else {
            println!("{xp:6.2} {xq:6.2} {:>24}", "(caustic)");
            continue;
        };
        let a = full.symbol.values[k];
        println!(
            "{xp:6.2} {xq:6.2} {:11.6} {:+11.6}i {:10.6} {:10.6}",
            a.re,
            a.im,
            exact.norm(),
            (small.symbol.values[k] / a).arg()
        );
    }
    println!("the small-chord phase error is (at/4) xi_p^3 / hbar");
    Ok(())
}
