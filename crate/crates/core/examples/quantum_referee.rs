//! The exact quantum chord function of a squeezed Gaussian under `H = p³`
//! approaches the semiclassical line result as the width shrinks, and only
//! for the forward orientation.

use semiclassics::oracle::cubic::CubicClosedForm;
use semiclassics::oracle::quantum::{cubic_chord_function, GaussianState};
use semiclassics::symplectic::ChordVector;
use semiclassics::Orientation;

fn main() -> semiclassics::Result<()> {
    let (q0, t) = (0.3, 1.0);
    let cf = CubicClosedForm::new(1.0, 1.0);
    let xi = ChordVector::pq(1.5, 0.5);
    let line = cf.chord_function(q0, &xi, t)?;
    println!("semiclassical line chord function {line:.6}");
    for sigma in [0.3, 0.1, 0.03, 0.01] {
        let state = GaussianState::new(q0, 0.0, sigma, 1.0)?;
        let errs: Vec<f64> = Orientation::both()
            .iter()
            .map(|&o| (cubic_chord_function(&state, 1.0, t, o, &xi) / state.delta_weight() - line).norm() / line.norm())
            .collect();
        println!("sigma {sigma:5.2}: relative error A {:.3e}, B {:.3e}", errs[0], errs[1]);
    }
    Ok(())
}
