//! Independent references: closed forms and wavefunction-level quantum
//! calculations that never touch the characteristic machinery.

pub mod cubic;
pub mod dense;
pub mod quadratic;
pub mod quantum;
