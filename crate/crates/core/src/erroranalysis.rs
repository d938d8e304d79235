//! Exhaustive characterization of the approximate multipliers.
//!
//! The lower partial product of a 4x4 divide-and-conquer multiplier is
//! `W * c` with `W` in `0..16` and `c` in `0..4`. Enumerating those 64 pairs
//! gives its exact distribution, which values it can never take, and how far
//! (in Hamming distance) each 6-bit constant sits from it on average. The
//! error reports compare each approximate variant against the exact product
//! over all 256 `(W, Y)` pairs. Everything here is exact enumeration; no
//! sampling.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::bitcore::UWord;
use crate::error::{Error, Result};
use crate::lutmul::{program, MultiplierConfig, MultiplierKind, APPROX_WIDTH};

/// Bits of the lower partial product.
pub const ZLSB_WIDTH: u32 = 6;
const ZLSB_VALUES: usize = 1 << ZLSB_WIDTH;
const WEIGHTS: u64 = 16;
const SELECTORS: u64 = 4;
const PAIRS: u64 = WEIGHTS * SELECTORS;
const GRID: usize = 16;

/// Every equiprobable `(W, c)` pair's product, W-major.
fn lsb_products() -> impl Iterator<Item = u64> {
    (0..WEIGHTS).flat_map(|w| (0..SELECTORS).map(move |c| w * c))
}

/// Distribution of the lower partial product over `0..64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbDist {
    counts: [u64; ZLSB_VALUES],
}

impl ProbDist {
    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(value as usize).copied().unwrap_or(0)
    }

    pub fn probability(&self, value: u64) -> Ratio<u64> {
        Ratio::new(self.count(value), PAIRS)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(value, probability)` for the full `0..64` support.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Ratio<u64>)> + '_ {
        (0..ZLSB_VALUES as u64).map(|v| (v, self.probability(v)))
    }
}

pub fn product_distribution() -> ProbDist {
    let mut counts = [0u64; ZLSB_VALUES];
    for p in lsb_products() {
        counts[p as usize] += 1;
    }
    ProbDist { counts }
}

/// Values in `0..64` no `(W, c)` pair produces, ascending.
pub fn impossible_values() -> Vec<u64> {
    let dist = product_distribution();
    (0..ZLSB_VALUES as u64)
        .filter(|&v| dist.count(v) == 0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HammingEntry {
    pub candidate: u64,
    /// Sum of `popcount(candidate ^ W*c)` over all 64 pairs.
    pub total_bits: u64,
}

impl HammingEntry {
    /// Mean differing bits per pair.
    pub fn mean_bits(&self) -> Ratio<u64> {
        Ratio::new(self.total_bits, PAIRS)
    }

    /// Mean differing bits per pair, per bit of the 6-bit word.
    pub fn per_bit(&self) -> Ratio<u64> {
        Ratio::new(self.total_bits, PAIRS * ZLSB_WIDTH as u64)
    }
}

/// Average Hamming distance of each 6-bit candidate from the lower partial
/// product, ordered by candidate.
pub fn hamming_sweep() -> Vec<HammingEntry> {
    (0..ZLSB_VALUES as u64)
        .map(|candidate| {
            let z = UWord::new(ZLSB_WIDTH, candidate).expect("candidate < 64");
            let total_bits = lsb_products()
                .map(|p| {
                    let p = UWord::new(ZLSB_WIDTH, p).expect("product < 64");
                    z.hamming_distance(&p).expect("same width") as u64
                })
                .sum();
            HammingEntry {
                candidate,
                total_bits,
            }
        })
        .collect()
}

/// The candidate with the smallest average distance; ties go to the smaller.
pub fn best_fixed_approximant() -> u64 {
    hamming_sweep()
        .into_iter()
        .min_by_key(|e| (e.total_bits, e.candidate))
        .map(|e| e.candidate)
        .expect("sweep is non-empty")
}

/// Signed error `W*Y - approx(W, Y)`, indexed `[w][y]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorMatrix {
    cells: [[i64; GRID]; GRID],
}

impl ErrorMatrix {
    pub fn get(&self, w: usize, y: usize) -> i64 {
        self.cells[w][y]
    }

    pub fn rows(&self) -> &[[i64; GRID]; GRID] {
        &self.cells
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(w, row)| row.iter().enumerate().map(move |(y, &e)| (w, y, e)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorStats {
    pub mean_error: Ratio<i64>,
    pub mean_absolute_error: Ratio<i64>,
    pub max_error: i64,
    pub min_error: i64,
    pub zero_error_fraction: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub kind: MultiplierKind,
    pub matrix: ErrorMatrix,
    pub histogram: BTreeMap<i64, u64>,
    pub stats: ErrorStats,
}

/// Evaluates the approximate variant structurally for every `(W, Y)` pair of
/// a 4x4 multiplier and summarizes its error against the exact product.
pub fn error_report(kind: MultiplierKind) -> Result<ErrorReport> {
    if kind.is_exact() {
        return Err(Error::UnsupportedKind(kind));
    }
    let config = MultiplierConfig::square(kind, APPROX_WIDTH)?;
    let mut cells = [[0i64; GRID]; GRID];
    for (w, row) in cells.iter_mut().enumerate() {
        let model = program(config, UWord::new(APPROX_WIDTH, w as u64)?)?;
        for (y, cell) in row.iter_mut().enumerate() {
            let (approx, _) = model.evaluate(&UWord::new(APPROX_WIDTH, y as u64)?)?;
            *cell = (w * y) as i64 - approx.value() as i64;
        }
    }
    let matrix = ErrorMatrix { cells };

    let mut histogram = BTreeMap::new();
    let (mut sum, mut abs_sum, mut zeros) = (0i64, 0i64, 0i64);
    for (_, _, e) in matrix.iter() {
        *histogram.entry(e).or_insert(0) += 1;
        sum += e;
        abs_sum += e.abs();
        zeros += i64::from(e == 0);
    }
    let n = (GRID * GRID) as i64;
    let stats = ErrorStats {
        mean_error: Ratio::new(sum, n),
        mean_absolute_error: Ratio::new(abs_sum, n),
        max_error: *histogram.keys().next_back().expect("non-empty"),
        min_error: *histogram.keys().next().expect("non-empty"),
        zero_error_fraction: Ratio::new(zeros, n),
    };
    Ok(ErrorReport {
        kind,
        matrix,
        histogram,
        stats,
    })
}

pub fn ratio_to_f64<T>(r: &Ratio<T>) -> f64
where
    Ratio<T>: ToPrimitive,
{
    r.to_f64().unwrap_or(f64::NAN)
}

/// `value,probability,exact` for `0..64`.
pub fn write_distribution_csv<W: Write>(out: W, dist: &ProbDist) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["value", "probability", "exact"])?;
    for (value, p) in dist.iter() {
        wtr.write_record([
            value.to_string(),
            format!("{:.6}", ratio_to_f64(&p)),
            format!("{}/{}", p.numer(), p.denom()),
        ])?;
    }
    wtr.flush()
}

/// `candidate,avg_distance,avg_bits,exact`: per-bit and per-word averages,
/// and the per-bit average as an exact fraction.
pub fn write_hamming_csv<W: Write>(out: W, sweep: &[HammingEntry]) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["candidate", "avg_distance", "avg_bits", "exact"])?;
    for e in sweep {
        let per_bit = e.per_bit();
        wtr.write_record([
            e.candidate.to_string(),
            format!("{:.6}", ratio_to_f64(&per_bit)),
            format!("{:.6}", ratio_to_f64(&e.mean_bits())),
            format!("{}/{}", per_bit.numer(), per_bit.denom()),
        ])?;
    }
    wtr.flush()
}

/// 16 rows (W) by 16 columns (Y), no header.
pub fn write_heatmap_csv<W: Write>(out: W, matrix: &ErrorMatrix) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in matrix.rows() {
        wtr.write_record(row.iter().map(|e| e.to_string()))?;
    }
    wtr.flush()
}

/// `error,count`, ascending by error.
pub fn write_histogram_csv<W: Write>(
    out: W,
    histogram: &BTreeMap<i64, u64>,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["error", "count"])?;
    for (error, count) in histogram {
        wtr.write_record([error.to_string(), count.to_string()])?;
    }
    wtr.flush()
}
