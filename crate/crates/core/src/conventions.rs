//! The single global orientation switch.
//!
//! `Forward` evolves both tips `x ± ξ/2` of every double-phase-space
//! characteristic along the flow of `+H'`, so centres on the `ξ = 0` plane
//! follow the Liouville flow forward in time and an operator evolves as
//! `Â(t) = V_t Â V_t†` with `V_t = exp(-i t Ĥ'/ħ)`. `Backward` is the time
//! reverse (`Â(t) = V_t† Â V_t`). The discrete quantum oracle selects
//! `Forward`; `Backward` exists for the bring-up comparison only.
//! See `CONVENTIONS.md` at the crate root for the derivation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Orientation {
    #[default]
    #[serde(rename = "A")]
    Forward,
    #[serde(rename = "B")]
    Backward,
}

impl Orientation {
    /// Multiplier applied to the external Hamiltonian.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Backward => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Orientation::Forward => "A",
            Orientation::Backward => "B",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "A" | "a" | "forward" => Some(Orientation::Forward),
            "B" | "b" | "backward" => Some(Orientation::Backward),
            _ => None,
        }
    }

    pub fn both() -> [Orientation; 2] {
        [Orientation::Forward, Orientation::Backward]
    }
}
