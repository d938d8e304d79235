use serde::Serialize;

use crate::bitcore::UWord;
use crate::error::{Error, Result};

/// What a stored cell holds, named by the entry it was programmed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRole {
    /// The single stored 0 every grounded mux input is tied to.
    Zero,
    /// Bit `i` of W.
    Weight(u32),
    /// Bit `i` of 3W (only bits 1.. are stored; bit 0 equals W's bit 0).
    TripleWeight(u32),
    /// Bit `bit` of entry W*selector, in a bank that stores every entry.
    Entry { selector: u8, bit: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StoredCell {
    pub role: CellRole,
    pub value: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BankLayout {
    /// Four full (w+2)-bit entries.
    Full,
    /// One zero cell, W, and the upper bits of 3W.
    Optimized,
}

/// The SRAM cells behind one 4:1 mux and the wiring from those cells to
/// each of the mux's four data inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LutBank {
    w: UWord,
    layout: BankLayout,
    cells: Vec<StoredCell>,
    /// `wiring[c][bit]` is the index of the cell driving output bit `bit`
    /// of entry `c`.
    wiring: [Vec<usize>; 4],
}

impl LutBank {
    /// Storage-optimized bank: W*00 is the zero cell on every bit, W*01 is W
    /// with grounded MSBs, W*10 reuses W one position up, and W*11 stores
    /// only the upper bits of 3W, taking its LSB from W.
    pub fn optimized(w: UWord) -> Self {
        let n = w.width();
        let triple = 3 * w.value();
        let mut cells = vec![StoredCell {
            role: CellRole::Zero,
            value: false,
        }];
        let weight_base = cells.len();
        cells.extend((0..n).map(|i| StoredCell {
            role: CellRole::Weight(i),
            value: w.bit(i),
        }));
        let triple_base = cells.len();
        cells.extend((1..n + 2).map(|i| StoredCell {
            role: CellRole::TripleWeight(i),
            value: (triple >> i) & 1 == 1,
        }));

        let zero = 0;
        let weight = |i: u32| weight_base + i as usize;
        let out = n + 2;
        let times_zero = vec![zero; out as usize];
        let times_one = (0..out)
            .map(|b| if b < n { weight(b) } else { zero })
            .collect();
        let times_two = (0..out)
            .map(|b| {
                if (1..=n).contains(&b) {
                    weight(b - 1)
                } else {
                    zero
                }
            })
            .collect();
        let times_three = (0..out)
            .map(|b| {
                if b == 0 {
                    weight(0)
                } else {
                    triple_base + (b - 1) as usize
                }
            })
            .collect();

        Self {
            w,
            layout: BankLayout::Optimized,
            cells,
            wiring: [times_zero, times_one, times_two, times_three],
        }
    }

    /// Unoptimized bank storing all four entries bit for bit.
    pub fn full(w: UWord) -> Self {
        let out = w.width() + 2;
        let mut cells = Vec::with_capacity(4 * out as usize);
        let mut wiring: [Vec<usize>; 4] = Default::default();
        for (selector, wires) in wiring.iter_mut().enumerate() {
            let entry = w.value() * selector as u64;
            for bit in 0..out {
                wires.push(cells.len());
                cells.push(StoredCell {
                    role: CellRole::Entry {
                        selector: selector as u8,
                        bit,
                    },
                    value: (entry >> bit) & 1 == 1,
                });
            }
        }
        Self {
            w,
            layout: BankLayout::Full,
            cells,
            wiring,
        }
    }

    pub fn weight(&self) -> UWord {
        self.w
    }

    pub fn layout(&self) -> BankLayout {
        self.layout
    }

    pub fn cells(&self) -> &[StoredCell] {
        &self.cells
    }

    pub fn stored_cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn output_width(&self) -> u32 {
        self.w.width() + 2
    }

    pub fn wiring(&self, selector: u8) -> &[usize] {
        &self.wiring[selector as usize & 3]
    }

    /// Reads the mux input chosen by a 2-bit selector through the wiring.
    pub fn select(&self, selector: &UWord) -> Result<UWord> {
        if selector.width() != 2 {
            return Err(Error::WidthMismatch {
                expected: 2,
                actual: selector.width(),
            });
        }
        let bits: Vec<bool> = self
            .wiring(selector.value() as u8)
            .iter()
            .map(|&cell| self.cells[cell].value)
            .collect();
        UWord::from_bits(&bits)
    }

    fn read_role(&self, pick: impl Fn(CellRole) -> Option<u32>) -> Option<UWord> {
        let mut bits: Vec<(u32, bool)> = self
            .cells
            .iter()
            .filter_map(|c| pick(c.role).map(|i| (i, c.value)))
            .collect();
        if bits.is_empty() {
            return None;
        }
        bits.sort_by_key(|&(i, _)| i);
        let bits: Vec<bool> = bits.into_iter().map(|(_, b)| b).collect();
        UWord::from_bits(&bits).ok()
    }

    pub fn zero_bit(&self) -> Option<bool> {
        self.cells
            .iter()
            .find(|c| c.role == CellRole::Zero)
            .map(|c| c.value)
    }

    pub fn w_bits(&self) -> Option<UWord> {
        self.read_role(|r| match r {
            CellRole::Weight(i) => Some(i),
            _ => None,
        })
    }

    /// The stored upper bits of 3W, as a (w+1)-bit word.
    pub fn three_w_msbs(&self) -> Option<UWord> {
        self.read_role(|r| match r {
            CellRole::TripleWeight(i) => Some(i),
            _ => None,
        })
    }
}

/// Two stored cells, a 0 and a 1, that constant operand bits are tied to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstantRail {
    cells: [StoredCell; 2],
}

impl Default for ConstantRail {
    fn default() -> Self {
        Self {
            cells: [
                StoredCell {
                    role: CellRole::Zero,
                    value: false,
                },
                StoredCell {
                    role: CellRole::Zero,
                    value: true,
                },
            ],
        }
    }
}

impl ConstantRail {
    pub fn stored_cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Reads a constant through the rail: bit `i` is wired to the 1 cell
    /// when the constant has it set, otherwise to the 0 cell.
    pub fn drive(&self, constant: &UWord) -> UWord {
        let bits: Vec<bool> = (0..constant.width())
            .map(|i| self.cells[usize::from(constant.bit(i))].value)
            .collect();
        UWord::from_bits(&bits).expect("constant width already validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(width: u32, value: u64) -> UWord {
        UWord::new(width, value).unwrap()
    }

    #[test]
    fn optimized_bank_inventory_for_six() {
        let bank = LutBank::optimized(w(4, 0b0110));
        assert_eq!(bank.stored_cell_count(), 10);
        assert_eq!(bank.zero_bit(), Some(false));
        assert_eq!(bank.w_bits(), Some(w(4, 0b0110)));
        // 3 * 6 = 18 = 010010; its five MSBs.
        assert_eq!(bank.three_w_msbs(), Some(w(5, 0b01001)));
    }

    #[test]
    fn zero_weight_stores_only_zeros() {
        let bank = LutBank::optimized(w(4, 0));
        assert!(bank.cells().iter().all(|c| !c.value));
    }

    #[test]
    fn select_reads_products() {
        let bank = LutBank::optimized(w(4, 6));
        assert_eq!(bank.select(&w(2, 0b10)).unwrap(), w(6, 0b001100));
        assert_eq!(bank.select(&w(2, 0)).unwrap(), w(6, 0));
        let bank = LutBank::optimized(w(4, 15));
        assert_eq!(bank.select(&w(2, 0b11)).unwrap(), w(6, 0b101101));
        assert!(bank.select(&w(3, 1)).is_err());
    }

    #[test]
    fn times_three_lsb_comes_from_weight() {
        let bank = LutBank::optimized(w(4, 9));
        let lsb_cell = bank.wiring(3)[0];
        assert_eq!(bank.cells()[lsb_cell].role, CellRole::Weight(0));
        // W*00 uses a single cell for every bit.
        assert!(bank.wiring(0).iter().all(|&c| c == 0));
    }

    #[test]
    fn reconstruction_exhaustive() {
        for width in 2..=8u32 {
            for value in 0..(1u64 << width) {
                let opt = LutBank::optimized(w(width, value));
                let full = LutBank::full(w(width, value));
                assert_eq!(opt.stored_cell_count(), 2 * width as usize + 2);
                assert_eq!(full.stored_cell_count(), 4 * (width as usize + 2));
                for c in 0..4u64 {
                    let sel = w(2, c);
                    assert_eq!(opt.select(&sel).unwrap().value(), value * c);
                    assert_eq!(full.select(&sel).unwrap().value(), value * c);
                }
            }
        }
    }

    #[test]
    fn rail_drives_constants() {
        let rail = ConstantRail::default();
        for v in 0..64 {
            assert_eq!(rail.drive(&w(6, v)).value(), v);
        }
    }
}
