use serde::Serialize;

use super::bank::{ConstantRail, LutBank};
use super::{MultiplierConfig, MultiplierKind, CHUNK_WIDTH};
use crate::bitcore::{
    add_traced, add_with_plan, bit_length, plan_positions, Addend, AdderKind, AdderTrace, Span,
    UWord,
};
use crate::error::{Error, Result};

/// One 4:1 chunk mux and the bank feeding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChunkMux {
    pub chunk: u32,
    pub bank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
enum Storage {
    /// Entry `y` holds `W*y`.
    Table(Vec<u64>),
    Banks(Vec<LutBank>),
    /// Upper chunk only, optionally plus a constant lower partial product.
    ApproxDc {
        bank: LutBank,
        rail: Option<ConstantRail>,
    },
    /// Upper chunk only; the lower partial product is W read off the bank's
    /// weight cells, with its two MSBs tied to the rail's 0 cell.
    ApproxDc2 {
        bank: LutBank,
        rail: ConstantRail,
    },
}

/// A multiplier with its weight programmed in. Immutable; reprogramming
/// builds a new model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiplierModel {
    config: MultiplierConfig,
    programmed_w: UWord,
    storage: Storage,
}

pub fn program(config: MultiplierConfig, w: UWord) -> Result<MultiplierModel> {
    if w.width() != config.w_width() {
        return Err(Error::ConfigMismatch(format!(
            "weight is {} bits but the configuration expects {}",
            w.width(),
            config.w_width()
        )));
    }
    let storage = match config.kind() {
        MultiplierKind::Traditional => {
            let entries = 1u64 << config.y_width();
            Storage::Table((0..entries).map(|y| w.value() * y).collect())
        }
        MultiplierKind::Dc => {
            Storage::Banks((0..config.bank_count()).map(|_| LutBank::full(w)).collect())
        }
        MultiplierKind::OptimizedDc => Storage::Banks(
            (0..config.bank_count())
                .map(|_| LutBank::optimized(w))
                .collect(),
        ),
        MultiplierKind::ApproxDc => Storage::ApproxDc {
            bank: LutBank::optimized(w),
            rail: config
                .fixed_zlsb()
                .filter(|z| z.value() != 0)
                .map(|_| ConstantRail::default()),
        },
        MultiplierKind::ApproxDc2 => Storage::ApproxDc2 {
            bank: LutBank::optimized(w),
            rail: ConstantRail::default(),
        },
    };
    Ok(MultiplierModel {
        config,
        programmed_w: w,
        storage,
    })
}

/// Bits needed for the largest sum of `chunks` consecutive partial products.
fn node_width(w_width: u32, chunks: u32) -> u32 {
    let w_max = (1u128 << w_width) - 1;
    let y_max = (1u128 << (CHUNK_WIDTH * chunks)) - 1;
    bit_length(w_max * y_max)
}

struct Node<T> {
    item: T,
    offset: u32,
    chunks: u32,
}

/// Balanced pairwise reduction of per-chunk partial products. Adjacent nodes
/// are merged level by level; an odd node out is carried to the next level.
/// `merge(low, high, relative_shift, result_width, low_offset)`.
fn reduce_tree<T>(
    leaves: Vec<T>,
    w_width: u32,
    mut merge: impl FnMut(T, T, u32, u32, u32) -> Result<T>,
) -> Result<T> {
    let mut level: Vec<Node<T>> = leaves
        .into_iter()
        .enumerate()
        .map(|(i, item)| Node {
            item,
            offset: i as u32 * CHUNK_WIDTH,
            chunks: 1,
        })
        .collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut nodes = level.into_iter();
        while let Some(low) = nodes.next() {
            match nodes.next() {
                Some(high) => {
                    let chunks = low.chunks + high.chunks;
                    let item = merge(
                        low.item,
                        high.item,
                        high.offset - low.offset,
                        node_width(w_width, chunks),
                        low.offset,
                    )?;
                    next.push(Node {
                        item,
                        offset: low.offset,
                        chunks,
                    });
                }
                None => next.push(low),
            }
        }
        level = next;
    }
    Ok(level
        .pop()
        .expect("configuration guarantees at least one chunk")
        .item)
}

/// Cell plan of the approx-dc2 adder: `Z_MSB << 2` plus the 4-bit W, with the
/// top position wired straight from Z_MSB's MSB instead of a half adder.
fn approx_dc2_plan() -> Vec<AdderKind> {
    let mut plan = plan_positions(
        Span {
            offset: 2,
            width: 6,
        },
        Span {
            offset: 0,
            width: 4,
        },
        8,
    );
    plan[7] = AdderKind::Passthrough;
    plan
}

/// Static half/full adder allocation for a configuration, without data.
pub fn adder_plan(config: &MultiplierConfig) -> Result<AdderTrace> {
    match config.kind() {
        MultiplierKind::Dc | MultiplierKind::OptimizedDc => {
            let leaf_width = config.w_width() + CHUNK_WIDTH;
            let leaves = (0..config.chunks())
                .map(|_| (leaf_width, AdderTrace::default()))
                .collect();
            let (_, trace) = reduce_tree(
                leaves,
                config.w_width(),
                |(low_w, low_t), (high_w, high_t), shift, width, base| {
                    let plan = plan_positions(
                        Span {
                            offset: shift,
                            width: high_w,
                        },
                        Span {
                            offset: 0,
                            width: low_w,
                        },
                        width,
                    );
                    let mut trace = low_t;
                    trace.absorb(high_t, 0);
                    trace.absorb(AdderTrace::from_plan(&plan, 0), base);
                    Ok((width, trace))
                },
            )?;
            Ok(trace)
        }
        MultiplierKind::ApproxDc => match config.fixed_zlsb() {
            Some(z) if z.value() != 0 => Ok(AdderTrace::from_plan(
                &plan_positions(
                    Span {
                        offset: 2,
                        width: 6,
                    },
                    Span {
                        offset: 0,
                        width: 6,
                    },
                    8,
                ),
                0,
            )),
            _ => Err(Error::NoAdders(config.kind())),
        },
        MultiplierKind::ApproxDc2 => Ok(AdderTrace::from_plan(&approx_dc2_plan(), 0)),
        MultiplierKind::Traditional => Err(Error::NoAdders(config.kind())),
    }
}

impl MultiplierModel {
    pub fn config(&self) -> &MultiplierConfig {
        &self.config
    }

    pub fn kind(&self) -> MultiplierKind {
        self.config.kind()
    }

    pub fn weight(&self) -> UWord {
        self.programmed_w
    }

    /// Full product table (traditional only).
    pub fn table(&self) -> Option<&[u64]> {
        match &self.storage {
            Storage::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn banks(&self) -> &[LutBank] {
        match &self.storage {
            Storage::Table(_) => &[],
            Storage::Banks(b) => b,
            Storage::ApproxDc { bank, .. } | Storage::ApproxDc2 { bank, .. } => {
                std::slice::from_ref(bank)
            }
        }
    }

    pub fn rail(&self) -> Option<&ConstantRail> {
        match &self.storage {
            Storage::ApproxDc { rail, .. } => rail.as_ref(),
            Storage::ApproxDc2 { rail, .. } => Some(rail),
            _ => None,
        }
    }

    /// Every chunk mux in the datapath with the bank it reads.
    pub fn chunk_muxes(&self) -> Vec<ChunkMux> {
        match &self.storage {
            Storage::Table(_) => Vec::new(),
            Storage::Banks(_) => (0..self.config.chunks())
                .map(|chunk| ChunkMux {
                    chunk,
                    bank: (chunk / self.config.fanout_sharing()) as usize,
                })
                .collect(),
            Storage::ApproxDc { .. } | Storage::ApproxDc2 { .. } => {
                vec![ChunkMux { chunk: 1, bank: 0 }]
            }
        }
    }

    fn check_input(&self, y: &UWord) -> Result<()> {
        if y.width() != self.config.y_width() {
            return Err(Error::WidthMismatch {
                expected: self.config.y_width(),
                actual: y.width(),
            });
        }
        Ok(())
    }

    fn select_chunk(&self, mux: ChunkMux, y: &UWord) -> Result<UWord> {
        let lo = mux.chunk * CHUNK_WIDTH;
        let selector = y.slice(lo, lo + CHUNK_WIDTH - 1)?;
        self.banks()[mux.bank].select(&selector)
    }

    /// Routes `y` through the lookup storage, muxes, and adders. Returns the
    /// product (exact or approximate, by kind) at width `w_width + y_width`
    /// with the adder trace of this evaluation.
    pub fn evaluate(&self, y: &UWord) -> Result<(UWord, AdderTrace)> {
        self.check_input(y)?;
        let result_width = self.config.result_width();
        match &self.storage {
            Storage::Table(table) => Ok((
                UWord::new(result_width, table[y.value() as usize])?,
                AdderTrace::default(),
            )),
            Storage::Banks(_) => {
                let leaves = self
                    .chunk_muxes()
                    .into_iter()
                    .map(|mux| Ok((self.select_chunk(mux, y)?, AdderTrace::default())))
                    .collect::<Result<Vec<_>>>()?;
                let (sum, trace) = reduce_tree(
                    leaves,
                    self.config.w_width(),
                    |(low, low_t), (high, high_t), shift, width, base| {
                        let (sum, adder) = add_traced(Addend::at(high, shift), low, width)?;
                        let mut trace = low_t;
                        trace.absorb(high_t, 0);
                        trace.absorb(adder, base);
                        Ok((sum, trace))
                    },
                )?;
                Ok((sum.resize(result_width)?, trace))
            }
            Storage::ApproxDc { rail, .. } => {
                let z_msb = self.select_chunk(ChunkMux { chunk: 1, bank: 0 }, y)?;
                match (rail, self.config.fixed_zlsb()) {
                    (Some(rail), Some(constant)) => {
                        let z_lsb = rail.drive(&constant);
                        add_traced(Addend::at(z_msb, 2), z_lsb, result_width)
                    }
                    _ => Ok((z_msb.shl(2)?, AdderTrace::default())),
                }
            }
            Storage::ApproxDc2 { bank, .. } => {
                let z_msb = self.select_chunk(ChunkMux { chunk: 1, bank: 0 }, y)?;
                let z_lsb = bank.w_bits().expect("optimized bank stores W");
                add_with_plan(
                    Addend::at(z_msb, 2),
                    Addend::at(z_lsb, 0),
                    &approx_dc2_plan(),
                )
            }
        }
    }

    /// The approx-dc2 output with bit 7 taken directly from Z_MSB's MSB, as
    /// the simplified wiring has it, discarding any carry out of bit 6.
    /// `None` for other kinds.
    pub fn msb_wired_output(&self, y: &UWord) -> Result<Option<UWord>> {
        if self.kind() != MultiplierKind::ApproxDc2 {
            return Ok(None);
        }
        self.check_input(y)?;
        let z_msb = self.select_chunk(ChunkMux { chunk: 1, bank: 0 }, y)?;
        let (sum, _) = self.evaluate(y)?;
        let low = sum.value() & 0x7f;
        let top = u64::from(z_msb.bit(5)) << 7;
        UWord::new(8, low | top).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MultiplierKind::*;

    fn w(width: u32, value: u64) -> UWord {
        UWord::new(width, value).unwrap()
    }

    fn model(kind: MultiplierKind, n: u32, weight: u64) -> MultiplierModel {
        program(MultiplierConfig::square(kind, n).unwrap(), w(n, weight)).unwrap()
    }

    fn counts(t: &AdderTrace) -> (usize, usize) {
        (t.ha_count, t.fa_count)
    }

    #[test]
    fn program_checks_weight_width() {
        let config = MultiplierConfig::square(OptimizedDc, 4).unwrap();
        assert!(matches!(
            program(config, w(5, 3)),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn traditional_table() {
        let m = model(Traditional, 4, 6);
        let expected: Vec<u64> = (0..16).map(|y| 6 * y).collect();
        assert_eq!(m.table().unwrap(), &expected[..]);
        assert_eq!(m.table().unwrap()[15], 90);
    }

    #[test]
    fn optimized_bank_for_six() {
        let m = model(OptimizedDc, 4, 6);
        assert_eq!(m.banks().len(), 1);
        let bank = &m.banks()[0];
        assert_eq!(bank.zero_bit(), Some(false));
        assert_eq!(bank.w_bits(), Some(w(4, 0b0110)));
        assert_eq!(bank.three_w_msbs(), Some(w(5, 0b01001)));
        assert!(model(OptimizedDc, 4, 0)
            .banks()
            .iter()
            .flat_map(|b| b.cells())
            .all(|c| !c.value));
    }

    #[test]
    fn evaluate_examples() {
        let (out, trace) = model(OptimizedDc, 4, 6).evaluate(&w(4, 0b1010)).unwrap();
        assert_eq!(out.to_string(), "00111100");
        assert_eq!(counts(&trace), (3, 3));

        let (out, trace) = model(ApproxDc, 4, 15).evaluate(&w(4, 0b0111)).unwrap();
        assert_eq!(out.value(), 60);
        assert!(trace.is_empty());

        let (out, trace) = model(ApproxDc2, 4, 15).evaluate(&w(4, 0b1111)).unwrap();
        assert_eq!(out.value(), 195);
        assert_eq!(counts(&trace), (4, 1));

        for kind in [Traditional, Dc, OptimizedDc, ApproxDc] {
            assert_eq!(model(kind, 4, 11).evaluate(&w(4, 0)).unwrap().0.value(), 0);
        }
        assert_eq!(
            model(ApproxDc2, 4, 11)
                .evaluate(&w(4, 0))
                .unwrap()
                .0
                .value(),
            11
        );
    }

    #[test]
    fn evaluate_rejects_wrong_input_width() {
        let err = model(Dc, 4, 3).evaluate(&w(5, 1)).unwrap_err();
        assert_eq!(
            err,
            Error::WidthMismatch {
                expected: 4,
                actual: 5
            }
        );
    }

    #[test]
    fn adder_plans_match_component_tables() {
        let plan =
            |kind, n| counts(&adder_plan(&MultiplierConfig::square(kind, n).unwrap()).unwrap());
        assert_eq!(plan(OptimizedDc, 4), (3, 3));
        assert_eq!(plan(OptimizedDc, 8), (11, 21));
        assert_eq!(plan(OptimizedDc, 16), (31, 105));
        assert_eq!(plan(Dc, 8), (11, 21));
        assert_eq!(plan(ApproxDc2, 4), (4, 1));
        for kind in [Traditional, ApproxDc] {
            let config = MultiplierConfig::square(kind, 4).unwrap();
            assert_eq!(adder_plan(&config), Err(Error::NoAdders(kind)));
        }
        let fixed = MultiplierConfig::square(ApproxDc, 4)
            .unwrap()
            .with_fixed_zlsb(w(6, 0b010101))
            .unwrap();
        assert_eq!(counts(&adder_plan(&fixed).unwrap()), (3, 3));
    }

    #[test]
    fn dynamic_tags_match_static_plan() {
        for n in [4, 8] {
            let config = MultiplierConfig::square(OptimizedDc, n).unwrap();
            let plan = adder_plan(&config).unwrap();
            let m = model(OptimizedDc, n, (1 << n) - 1);
            let (_, trace) = m.evaluate(&w(n, (1 << n) - 1)).unwrap();
            let tags = |t: &AdderTrace| {
                t.per_position
                    .iter()
                    .map(|p| (p.bit, p.kind))
                    .collect::<Vec<_>>()
            };
            assert_eq!(tags(&plan), tags(&trace));
        }
    }

    #[test]
    fn exact_kinds_exhaustive_4x4() {
        for kind in [Traditional, Dc, OptimizedDc] {
            for wv in 0..16 {
                let m = model(kind, 4, wv);
                for yv in 0..16 {
                    assert_eq!(
                        m.evaluate(&w(4, yv)).unwrap().0,
                        w(8, wv * yv),
                        "{kind} {wv}x{yv}"
                    );
                }
            }
        }
    }

    #[test]
    fn dc_and_optimized_agree_on_wide_inputs() {
        // Sampled 16x16 and rectangular shapes; exhaustive 8x8 lives in the
        // acceptance suite.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for (ww, yw) in [(16, 16), (6, 10), (3, 2), (12, 4)] {
            for _ in 0..200 {
                let (wv, yv) = (next() & ((1 << ww) - 1), next() & ((1 << yw) - 1));
                let dc = program(MultiplierConfig::new(Dc, ww, yw).unwrap(), w(ww, wv)).unwrap();
                let opt = program(
                    MultiplierConfig::new(OptimizedDc, ww, yw).unwrap(),
                    w(ww, wv),
                )
                .unwrap();
                let y = w(yw, yv);
                assert_eq!(dc.evaluate(&y).unwrap().0.value(), wv * yv);
                assert_eq!(opt.evaluate(&y).unwrap().0, dc.evaluate(&y).unwrap().0);
            }
        }
    }

    #[test]
    fn approx_dc_with_fixed_constant() {
        let config = MultiplierConfig::square(ApproxDc, 4)
            .unwrap()
            .with_fixed_zlsb(w(6, 7))
            .unwrap();
        let m = program(config, w(4, 9)).unwrap();
        assert!(m.rail().is_some());
        let (out, trace) = m.evaluate(&w(4, 0b1110)).unwrap();
        assert_eq!(out.value(), ((9 * 3) << 2) + 7);
        assert_eq!(counts(&trace), (3, 3));
    }

    #[test]
    fn approx_identities_exhaustive() {
        for wv in 0..16 {
            let a1 = model(ApproxDc, 4, wv);
            let a2 = model(ApproxDc2, 4, wv);
            for yv in 0..16 {
                let y = w(4, yv);
                assert_eq!(a1.evaluate(&y).unwrap().0.value(), (wv * (yv >> 2)) << 2);
                assert_eq!(
                    a2.evaluate(&y).unwrap().0.value(),
                    ((wv * (yv >> 2)) << 2) + wv
                );
            }
        }
    }

    #[test]
    fn wired_msb_drops_carry_into_bit_seven() {
        // 15 * 2 = 30 = 011110: (30 << 2) + 15 = 135 needs the carry out of
        // bit 6, but Z_MSB's MSB is 0.
        let m = model(ApproxDc2, 4, 15);
        let y = w(4, 0b1000);
        assert_eq!(m.evaluate(&y).unwrap().0.value(), 135);
        assert_eq!(m.msb_wired_output(&y).unwrap().unwrap().value(), 7);
        assert!(m.evaluate(&y).unwrap().1.position(6).unwrap().carry_out);
        assert_eq!(model(Dc, 4, 1).msb_wired_output(&y).unwrap(), None);
    }

    #[test]
    fn chunk_muxes_share_banks() {
        let m = model(OptimizedDc, 8, 200);
        let banks: Vec<usize> = m.chunk_muxes().iter().map(|c| c.bank).collect();
        assert_eq!(banks, [0, 0, 1, 1]);
        assert_eq!(m.banks().len(), 2);
    }
}
