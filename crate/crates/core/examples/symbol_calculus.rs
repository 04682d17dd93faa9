//! Weyl and chord symbols of a coherent state on a grid: trace, purity,
//! the symplectic Fourier transform and the commutator with a Hamiltonian.

use std::f64::consts::PI;

use num_complex::Complex64;
use semiclassics::grid::Grid2;
use semiclassics::hamiltonian::HamiltonianSpec;
use semiclassics::oracle::quantum::GaussianState;
use semiclassics::symbols::{chord_commutator_with_h, chord_product, overlap, symplectic_fourier, SymbolGrid, SymbolKind};

fn main() -> semiclassics::Result<()> {
    let hbar = 0.5;
    let state = GaussianState::new(0.4, -0.2, 0.5, hbar)?;
    let weyl = SymbolGrid::from_fn(SymbolKind::Weyl, Grid2::square(5.0, 51)?, hbar, |[p, q]| {
        Complex64::new(2.0 * PI * hbar * state.wigner(p, q), 0.0)
    })?;
    let chord = symplectic_fourier(&weyl)?;
    println!("trace (Weyl) {:.12}", weyl.trace()?.re);
    println!("trace (chord) {:.12}", chord.trace()?.re);
    println!("purity tr(rho^2) {:.12}", overlap(&weyl, &weyl)?.re);

    let squared = chord_product(&chord, &chord)?;
    println!("pure state: |rho*rho - rho| on the chord grid {:.2e}", squared.max_difference(&chord)?);

    let h = HamiltonianSpec::harmonic().with_hbar(hbar)?;
    let comm = symplectic_fourier(&chord_commutator_with_h(&h, &chord)?)?;
    // for the oscillator [H, rho] has Weyl symbol i hbar {H, W}
    let worst = comm.max_difference_fn(|[p, q]| {
        let w = 2.0 * PI * hbar * state.wigner(p, q);
        let (dq, dp) = (-(q - state.q0) / (state.sigma * state.sigma) * w, -4.0 * state.sigma * state.sigma * (p - state.p0) / (hbar * hbar) * w);
        Complex64::new(0.0, hbar * (q * dp - p * dq))
    });
    println!("oscillator commutator vs i hbar {{H, W}}: {worst:.2e}");
    Ok(())
}
