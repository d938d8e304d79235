//! Component counts (SRAM cells, 2:1 1-bit muxes, half and full adders)
//! per multiplier configuration, from closed forms and by walking a
//! programmed model, plus a weighted relative-area estimate.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::bitcore::UWord;
use crate::error::{Error, Result};
use crate::lutmul::{adder_plan, MultiplierConfig, MultiplierKind, MultiplierModel, APPROX_WIDTH};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ComponentCount {
    pub sram_cells: u64,
    pub mux2to1_1b: u64,
    pub half_adders: u64,
    pub full_adders: u64,
}

impl ComponentCount {
    pub const fn new(sram_cells: u64, mux2to1_1b: u64, half_adders: u64, full_adders: u64) -> Self {
        Self {
            sram_cells,
            mux2to1_1b,
            half_adders,
            full_adders,
        }
    }

    /// `self` needs at least as many of every component as `other`.
    pub fn dominates(&self, other: &ComponentCount) -> bool {
        self.sram_cells >= other.sram_cells
            && self.mux2to1_1b >= other.mux2to1_1b
            && self.half_adders >= other.half_adders
            && self.full_adders >= other.full_adders
    }

    pub fn as_array(&self) -> [u64; 4] {
        [
            self.sram_cells,
            self.mux2to1_1b,
            self.half_adders,
            self.full_adders,
        ]
    }
}

impl fmt::Display for ComponentCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sram={} mux={} ha={} fa={}",
            self.sram_cells, self.mux2to1_1b, self.half_adders, self.full_adders
        )
    }
}

/// Relative cost per component. The defaults are rough transistor counts
/// (6T SRAM cell, pass-gate mux, static CMOS adders) and only meant for
/// comparing configurations against each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaWeights {
    pub sram_cell: f64,
    pub mux2to1_1b: f64,
    pub half_adder: f64,
    pub full_adder: f64,
}

impl Default for AreaWeights {
    fn default() -> Self {
        Self {
            sram_cell: 6.0,
            mux2to1_1b: 6.0,
            half_adder: 14.0,
            full_adder: 28.0,
        }
    }
}

impl AreaWeights {
    pub fn new(sram_cell: f64, mux2to1_1b: f64, half_adder: f64, full_adder: f64) -> Result<Self> {
        let weights = Self {
            sram_cell,
            mux2to1_1b,
            half_adder,
            full_adder,
        };
        for (name, v) in weights.named() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Weights {
                    line: 0,
                    message: format!("{name} must be a positive number, got {v}"),
                });
            }
        }
        Ok(weights)
    }

    fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("sram_cell", self.sram_cell),
            ("mux2to1_1b", self.mux2to1_1b),
            ("half_adder", self.half_adder),
            ("full_adder", self.full_adder),
        ]
    }

    /// Parses `name=value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; unknown names and non-positive values are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut weights = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Weights { line, message };
            let (name, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name=value`, got `{content}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a number", value.trim())))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(err(format!("weight must be positive, got {value}")));
            }
            let slot = match name.trim() {
                "sram_cell" => &mut weights.sram_cell,
                "mux2to1_1b" => &mut weights.mux2to1_1b,
                "half_adder" => &mut weights.half_adder,
                "full_adder" => &mut weights.full_adder,
                other => return Err(err(format!("unknown component `{other}`"))),
            };
            *slot = value;
        }
        Ok(weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Weights {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }
}

pub fn weighted_area(c: &ComponentCount, w: &AreaWeights) -> f64 {
    c.sram_cells as f64 * w.sram_cell
        + c.mux2to1_1b as f64 * w.mux2to1_1b
        + c.half_adders as f64 * w.half_adder
        + c.full_adders as f64 * w.full_adder
}

/// Full table: `2^n` entries of `2n` bits behind a `2^n:1` mux tree.
pub fn count_traditional(n: u32) -> Result<ComponentCount> {
    if !(2..=16).contains(&n) {
        return Err(Error::UnsupportedWidth {
            kind: "traditional",
            width: n,
        });
    }
    let entries = 1u64 << n;
    let bits = 2 * n as u64;
    Ok(ComponentCount::new(
        entries * bits,
        (entries - 1) * bits,
        0,
        0,
    ))
}

fn chunked_config(kind: MultiplierKind, n: u32, fanout_sharing: u32) -> Result<MultiplierConfig> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::UnsupportedWidth {
            kind: kind.as_str(),
            width: n,
        });
    }
    MultiplierConfig::square(kind, n)?.with_fanout_sharing(fanout_sharing)
}

fn chunk_muxes_and_adders(config: &MultiplierConfig) -> Result<(u64, u64, u64)> {
    let n = config.w_width() as u64;
    let mux = config.chunks() as u64 * 3 * (n + 2);
    let plan = adder_plan(config)?;
    Ok((mux, plan.ha_count as u64, plan.fa_count as u64))
}

/// Storage-optimized divide and conquer: `2n + 2` cells per bank, one 4:1
/// `(n+2)`-bit mux per 2-bit chunk, adders from the reduction tree.
pub fn count_optimized_dc(n: u32, fanout_sharing: u32) -> Result<ComponentCount> {
    let config = chunked_config(MultiplierKind::OptimizedDc, n, fanout_sharing)?;
    let (mux, ha, fa) = chunk_muxes_and_adders(&config)?;
    let sram = (2 * n as u64 + 2) * config.bank_count() as u64;
    Ok(ComponentCount::new(sram, mux, ha, fa))
}

/// Unoptimized divide and conquer: every bank stores all four `(n+2)`-bit
/// entries. Only the 4-bit case has a published reference; wider widths
/// extrapolate the same construction.
pub fn count_dc(n: u32, fanout_sharing: u32) -> Result<ComponentCount> {
    let config = chunked_config(MultiplierKind::Dc, n, fanout_sharing)?;
    let (mux, ha, fa) = chunk_muxes_and_adders(&config)?;
    let sram = 4 * (n as u64 + 2) * config.bank_count() as u64;
    Ok(ComponentCount::new(sram, mux, ha, fa))
}

/// Whether `count_dc(n, _)` is an extrapolation beyond published figures.
pub fn dc_count_is_extrapolated(n: u32) -> bool {
    n != 4
}

/// Upper-chunk bank and mux only; a nonzero constant adds a two-cell rail
/// and the 4-bit partial-product adder.
pub fn count_approx_dc(fixed_zlsb: &UWord) -> Result<ComponentCount> {
    if fixed_zlsb.width() != APPROX_WIDTH + 2 {
        return Err(Error::UnsupportedWidth {
            kind: "approx-dc",
            width: fixed_zlsb.width().saturating_sub(2),
        });
    }
    Ok(if fixed_zlsb.value() == 0 {
        ComponentCount::new(10, 18, 0, 0)
    } else {
        ComponentCount::new(12, 18, 3, 3)
    })
}

pub fn count_approx_dc2() -> ComponentCount {
    ComponentCount::new(12, 18, 4, 1)
}

/// Closed-form count for any configuration the closed forms cover.
pub fn closed_form(config: &MultiplierConfig) -> Result<ComponentCount> {
    let n = config.w_width();
    let square = n == config.y_width();
    let unsupported = || Error::UnsupportedWidth {
        kind: config.kind().as_str(),
        width: n,
    };
    match config.kind() {
        MultiplierKind::Traditional if square => count_traditional(n),
        MultiplierKind::Dc if square => count_dc(n, config.fanout_sharing()),
        MultiplierKind::OptimizedDc if square => count_optimized_dc(n, config.fanout_sharing()),
        MultiplierKind::ApproxDc => count_approx_dc(
            &config
                .fixed_zlsb()
                .expect("approx-dc configurations carry a constant"),
        ),
        MultiplierKind::ApproxDc2 => Ok(count_approx_dc2()),
        _ => Err(unsupported()),
    }
}

/// Counts components by walking a programmed model: stored cells in every
/// bank or table, `(inputs - 1) * width` 2:1 muxes per selector, and the
/// adder cells of one traced evaluation.
pub fn structural_audit(model: &MultiplierModel) -> ComponentCount {
    let config = model.config();
    let mut count = ComponentCount::default();

    if let Some(table) = model.table() {
        let width = config.result_width() as u64;
        let entries = table.len() as u64;
        count.sram_cells = entries * width;
        count.mux2to1_1b = (entries - 1) * width;
        return count;
    }

    let banks = model.banks();
    count.sram_cells = banks
        .iter()
        .map(|b| b.stored_cell_count() as u64)
        .sum::<u64>()
        + model.rail().map_or(0, |r| r.stored_cell_count() as u64);
    count.mux2to1_1b = model
        .chunk_muxes()
        .iter()
        .map(|mux| {
            let bank = &banks[mux.bank];
            let inputs = (0..4u8).filter(|&c| !bank.wiring(c).is_empty()).count() as u64;
            (inputs - 1) * bank.output_width() as u64
        })
        .sum();

    let probe = UWord::zero(config.y_width()).expect("validated width");
    let (_, trace) = model
        .evaluate(&probe)
        .expect("probe input matches the configured width");
    count.half_adders = trace.ha_count as u64;
    count.full_adders = trace.fa_count as u64;
    count
}
