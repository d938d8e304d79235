//! Structural models of the LUT multipliers.
//!
//! Every variant multiplies a programmed weight `W` by an input `Y`. The
//! traditional design reads `W*Y` straight out of a full table. The
//! divide-and-conquer designs split `Y` into 2-bit chunks, look up `W*chunk`
//! in a small bank behind a 4:1 mux, and sum the shifted partial products
//! with a tree of traced adders. The two approximate designs keep only the
//! upper chunk of a 4-bit `Y` and replace the lower partial product with a
//! constant or with `W` itself.

mod bank;
mod model;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bitcore::UWord;
use crate::error::{Error, Result};

pub use bank::{BankLayout, CellRole, ConstantRail, LutBank, StoredCell};
pub use model::{adder_plan, program, ChunkMux, MultiplierModel};

/// Bits of `Y` handled by one lookup.
pub const CHUNK_WIDTH: u32 = 2;

/// Width of the multiplier the approximate variants are defined for.
pub const APPROX_WIDTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MultiplierKind {
    #[serde(rename = "traditional")]
    Traditional,
    #[serde(rename = "dc")]
    Dc,
    #[serde(rename = "opt-dc")]
    OptimizedDc,
    #[serde(rename = "approx-dc")]
    ApproxDc,
    #[serde(rename = "approx-dc2")]
    ApproxDc2,
}

impl MultiplierKind {
    pub const ALL: [MultiplierKind; 5] = [
        MultiplierKind::Traditional,
        MultiplierKind::Dc,
        MultiplierKind::OptimizedDc,
        MultiplierKind::ApproxDc,
        MultiplierKind::ApproxDc2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MultiplierKind::Traditional => "traditional",
            MultiplierKind::Dc => "dc",
            MultiplierKind::OptimizedDc => "opt-dc",
            MultiplierKind::ApproxDc => "approx-dc",
            MultiplierKind::ApproxDc2 => "approx-dc2",
        }
    }

    pub fn is_exact(&self) -> bool {
        !self.is_approximate()
    }

    pub fn is_approximate(&self) -> bool {
        matches!(self, MultiplierKind::ApproxDc | MultiplierKind::ApproxDc2)
    }

    fn is_chunked(&self) -> bool {
        matches!(self, MultiplierKind::Dc | MultiplierKind::OptimizedDc)
    }
}

impl fmt::Display for MultiplierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MultiplierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        MultiplierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown multiplier kind `{s}` (expected one of: traditional, dc, opt-dc, approx-dc, approx-dc2)"
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MultiplierConfig {
    kind: MultiplierKind,
    w_width: u32,
    y_width: u32,
    fanout_sharing: u32,
    fixed_zlsb: Option<UWord>,
}

impl MultiplierConfig {
    pub fn new(kind: MultiplierKind, w_width: u32, y_width: u32) -> Result<Self> {
        let config = Self {
            kind,
            w_width,
            y_width,
            fanout_sharing: 2,
            fixed_zlsb: match kind {
                MultiplierKind::ApproxDc => Some(UWord::zero(APPROX_WIDTH + CHUNK_WIDTH)?),
                _ => None,
            },
        };
        config.validate()?;
        Ok(config)
    }

    /// Square `n x n` configuration.
    pub fn square(kind: MultiplierKind, n: u32) -> Result<Self> {
        Self::new(kind, n, n)
    }

    /// Number of chunk muxes served by one bank.
    pub fn with_fanout_sharing(mut self, fanout_sharing: u32) -> Result<Self> {
        self.fanout_sharing = fanout_sharing;
        self.validate()?;
        Ok(self)
    }

    /// Constant used in place of the lower partial product (approx-dc only).
    pub fn with_fixed_zlsb(mut self, zlsb: UWord) -> Result<Self> {
        if self.kind != MultiplierKind::ApproxDc {
            return Err(Error::ConfigMismatch(format!(
                "a fixed lower partial product only applies to approx-dc, not {}",
                self.kind
            )));
        }
        self.fixed_zlsb = Some(zlsb);
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> MultiplierKind {
        self.kind
    }

    pub fn w_width(&self) -> u32 {
        self.w_width
    }

    pub fn y_width(&self) -> u32 {
        self.y_width
    }

    pub fn chunk_width(&self) -> u32 {
        CHUNK_WIDTH
    }

    pub fn fanout_sharing(&self) -> u32 {
        self.fanout_sharing
    }

    pub fn fixed_zlsb(&self) -> Option<UWord> {
        self.fixed_zlsb
    }

    pub fn chunks(&self) -> u32 {
        self.y_width / CHUNK_WIDTH
    }

    pub fn result_width(&self) -> u32 {
        self.w_width + self.y_width
    }

    /// Banks needed for the chunk muxes that actually read storage.
    pub fn bank_count(&self) -> u32 {
        match self.kind {
            MultiplierKind::Traditional => 0,
            MultiplierKind::ApproxDc | MultiplierKind::ApproxDc2 => 1,
            _ => self.chunks().div_ceil(self.fanout_sharing),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigMismatch(msg));
        let (w, y) = (self.w_width, self.y_width);
        if w == 0 || y == 0 || w + y > crate::bitcore::MAX_WIDTH {
            return bad(format!("{w}x{y} operands do not fit a 64-bit result"));
        }
        if self.fanout_sharing == 0 {
            return bad("fanout sharing must be at least 1".into());
        }
        match self.kind {
            MultiplierKind::Traditional => {
                if y > 16 {
                    return bad(format!("a full table for a {y}-bit input is not modelled"));
                }
            }
            k if k.is_chunked() => {
                if w < 2 {
                    return bad(format!("{k} needs a weight of at least 2 bits"));
                }
                if y % CHUNK_WIDTH != 0 {
                    return bad(format!(
                        "{k} needs an input width divisible by {CHUNK_WIDTH}, got {y}"
                    ));
                }
            }
            k => {
                if w != APPROX_WIDTH || y != APPROX_WIDTH {
                    return bad(format!("{k} is only defined for 4x4 operands, got {w}x{y}"));
                }
            }
        }
        if let Some(z) = self.fixed_zlsb {
            if z.width() != w + CHUNK_WIDTH {
                return bad(format!(
                    "the fixed lower partial product must be {} bits, got {}",
                    w + CHUNK_WIDTH,
                    z.width()
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in MultiplierKind::ALL {
            assert_eq!(k.as_str().parse::<MultiplierKind>().unwrap(), k);
        }
        assert!("optimized".parse::<MultiplierKind>().is_err());
    }

    #[test]
    fn config_validation() {
        use MultiplierKind::*;
        assert!(MultiplierConfig::square(OptimizedDc, 16).is_ok());
        assert!(MultiplierConfig::new(Dc, 4, 5).is_err());
        assert!(MultiplierConfig::square(ApproxDc, 8).is_err());
        assert!(MultiplierConfig::square(ApproxDc2, 4).is_ok());
        assert!(MultiplierConfig::square(Traditional, 3).is_ok());
        assert!(MultiplierConfig::square(Traditional, 17).is_err());
        assert!(MultiplierConfig::square(Dc, 4)
            .unwrap()
            .with_fanout_sharing(0)
            .is_err());
        let zlsb = UWord::new(6, 5).unwrap();
        assert!(MultiplierConfig::square(ApproxDc2, 4)
            .unwrap()
            .with_fixed_zlsb(zlsb)
            .is_err());
        assert!(MultiplierConfig::square(ApproxDc, 4)
            .unwrap()
            .with_fixed_zlsb(UWord::new(4, 5).unwrap())
            .is_err());
    }

    #[test]
    fn bank_counts_follow_fanout() {
        use MultiplierKind::*;
        let counts: Vec<u32> = [4, 8, 16]
            .iter()
            .map(|&n| {
                MultiplierConfig::square(OptimizedDc, n)
                    .unwrap()
                    .bank_count()
            })
            .collect();
        assert_eq!(counts, [1, 2, 4]);
        let unshared = MultiplierConfig::square(Dc, 4)
            .unwrap()
            .with_fanout_sharing(1)
            .unwrap();
        assert_eq!(unshared.bank_count(), 2);
        let wide = MultiplierConfig::new(OptimizedDc, 4, 6).unwrap();
        assert_eq!(wide.bank_count(), 2);
    }
}
