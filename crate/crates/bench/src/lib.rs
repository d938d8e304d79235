//! Fixtures shared by the criterion benches.

use lutcim_core::{program, MultiplierConfig, MultiplierKind, MultiplierModel, UWord};

/// One programmed model per weight value for an `n x n` configuration.
pub fn models_for_every_weight(kind: MultiplierKind, n: u32) -> Vec<MultiplierModel> {
    let config = MultiplierConfig::square(kind, n).expect("supported configuration");
    (0..1u64 << n)
        .map(|w| program(config, UWord::new(n, w).expect("in range")).expect("matching width"))
        .collect()
}

pub fn inputs(n: u32) -> Vec<UWord> {
    (0..1u64 << n)
        .map(|y| UWord::new(n, y).expect("in range"))
        .collect()
}
