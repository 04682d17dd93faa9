//! The finite-lattice quantum oracle: a quarter period of the oscillator
//! moves the centre-centre kernel of a reflection to the rotated node.

use std::f64::consts::FRAC_PI_2;

use semiclassics::oracle::dense::DenseOracle;
use semiclassics::symbols::{kernel_from_evolution_symbols, AutocorrelationKernel};

fn main() -> semiclassics::Result<()> {
    let n = 31;
    let oracle = DenseOracle::new(n, 1.0)?;
    println!("lattice spacing {:.5}", oracle.delta());
    // the adjoint Fourier matrix is the forward quarter-period propagator up to phase
    let v = oracle.fourier().adjoint();
    let k = kernel_from_evolution_symbols(&oracle, &v, FRAC_PI_2, AutocorrelationKernel::CentreCentre, [3, 0])?.kernel;
    let (best, value) = k
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.amplitude.total_cmp(&b.1.amplitude))
        .expect("non-empty kernel");
    println!(
        "reflection centre (3Δ, 0) lands at {:?} with mass {:.6}",
        k.grid.point(best),
        value.amplitude / n as f64
    );
    Ok(())
}
