//! The shipped example grammars.

use crate::grammar::Wtgc;
use crate::homomorphism::{parse_hom, TreeHom};
use crate::syntax::parse_grammar;

pub const FX1: &str = include_str!("../../../fixtures/fx1.wtg");
pub const FX2_G: &str = include_str!("../../../fixtures/fx2_g.wtg");
pub const FX2_GPRIME: &str = include_str!("../../../fixtures/fx2_gprime.wtg");
pub const FX3: &str = include_str!("../../../fixtures/fx3.wtg");
pub const FX3_HOM: &str = include_str!("../../../fixtures/fx3.hom");
pub const FX4: &str = include_str!("../../../fixtures/fx4.wtg");
pub const FX5: &str = include_str!("../../../fixtures/fx5.wtg");
pub const FX6: &str = include_str!("../../../fixtures/fx6.wtg");

/// Grammar fixtures by name.
pub const GRAMMARS: [(&str, &str); 7] = [
    ("fx1", FX1),
    ("fx2_g", FX2_G),
    ("fx2_gprime", FX2_GPRIME),
    ("fx3", FX3),
    ("fx4", FX4),
    ("fx5", FX5),
    ("fx6", FX6),
];

pub fn grammar(name: &str) -> Option<Wtgc> {
    GRAMMARS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_grammar(text).expect("fixture parses"))
}

pub fn fx3_hom() -> TreeHom {
    parse_hom(FX3_HOM).expect("fixture parses")
}
