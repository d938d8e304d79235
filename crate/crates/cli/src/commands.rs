use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context};
use lutcim_core::costmodel::{
    count_approx_dc, count_approx_dc2, count_dc, count_optimized_dc, count_traditional,
    dc_count_is_extrapolated,
};
use lutcim_core::erroranalysis::{self, ratio_to_f64};
use lutcim_core::nnharness::{mae_eval, parse_topology, QuantizedMlp};
use lutcim_core::{
    exact_mul, program, weighted_area, AdderKind, AreaWeights, ComponentCount, MultiplierConfig,
    MultiplierKind, UWord,
};
use serde::Serialize;

use crate::operand::parse_operand;
use crate::AnalyzeTarget;

/// A command failure, split by exit code.
pub enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Internal(e) => e,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

fn describe(word: &UWord) -> String {
    format!("{word} ({})", word.value())
}

pub fn mul(kind: MultiplierKind, w: &str, y: &str, width: Option<u32>, trace: bool) -> Outcome {
    let w = parse_operand(w, width).map_err(usage)?;
    let y = parse_operand(y, width).map_err(usage)?;
    let config = MultiplierConfig::new(kind, w.width(), y.width()).map_err(usage)?;
    let model = program(config, w).map_err(usage)?;
    let (product, adders) = model.evaluate(&y).map_err(internal)?;
    println!("{}", describe(&product));

    let exact = exact_mul(&w, &y).map_err(internal)?;
    if kind.is_approximate() {
        let error = exact.value() as i64 - product.value() as i64;
        println!("exact {}, error {error}", describe(&exact));
    } else if exact.value() != product.value() {
        return Err(internal(anyhow!(
            "{kind} returned {} but the exact product is {}",
            product.value(),
            exact.value()
        )));
    }

    if trace {
        println!("adders: ha={} fa={}", adders.ha_count, adders.fa_count);
        for p in &adders.per_position {
            let tag = match p.kind {
                AdderKind::Passthrough => "pass",
                AdderKind::Half => "ha",
                AdderKind::Full => "fa",
            };
            println!(
                "  bit {:>2}: {tag:<4} carry_out={}",
                p.bit,
                u8::from(p.carry_out)
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CostRow {
    kind: MultiplierKind,
    n: u32,
    sram: u64,
    mux: u64,
    ha: u64,
    fa: u64,
    area: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

const EXTRAPOLATED: &str = "dc counts beyond 4 bits are extrapolated from the 4-bit structure";

fn count_for(
    kind: MultiplierKind,
    n: u32,
    fanout: u32,
    zlsb: &UWord,
) -> lutcim_core::Result<ComponentCount> {
    let approx_only_4 = |name| {
        if n == 4 {
            Ok(())
        } else {
            Err(lutcim_core::Error::UnsupportedWidth {
                kind: name,
                width: n,
            })
        }
    };
    match kind {
        MultiplierKind::Traditional => count_traditional(n),
        MultiplierKind::Dc => count_dc(n, fanout),
        MultiplierKind::OptimizedDc => count_optimized_dc(n, fanout),
        MultiplierKind::ApproxDc => {
            approx_only_4(kind.as_str())?;
            count_approx_dc(zlsb)
        }
        MultiplierKind::ApproxDc2 => {
            approx_only_4(kind.as_str())?;
            Ok(count_approx_dc2())
        }
    }
}

fn cost_row(
    kind: MultiplierKind,
    n: u32,
    fanout: u32,
    zlsb: &UWord,
    weights: &AreaWeights,
) -> lutcim_core::Result<CostRow> {
    let c = count_for(kind, n, fanout, zlsb)?;
    let [sram, mux, ha, fa] = c.as_array();
    Ok(CostRow {
        kind,
        n,
        sram,
        mux,
        ha,
        fa,
        area: weighted_area(&c, weights),
        note: (kind == MultiplierKind::Dc && dc_count_is_extrapolated(n)).then_some(EXTRAPOLATED),
    })
}

pub fn cost(
    kind: Option<MultiplierKind>,
    all: bool,
    n: u32,
    weights: Option<&Path>,
    fanout: u32,
    zlsb: &str,
) -> Outcome {
    let weights = match weights {
        Some(path) => AreaWeights::load(path).map_err(usage)?,
        None => AreaWeights::default(),
    };
    let zlsb = parse_operand(zlsb, Some(erroranalysis::ZLSB_WIDTH)).map_err(usage)?;

    if !all {
        let kind = kind.ok_or_else(|| usage(anyhow!("--kind or --all is required")))?;
        let row = cost_row(kind, n, fanout, &zlsb, &weights).map_err(usage)?;
        println!("{}", serde_json::to_string(&row).map_err(internal)?);
        return Ok(());
    }

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for kind in MultiplierKind::ALL {
        match cost_row(kind, n, fanout, &zlsb, &weights) {
            Ok(row) => rows.push(row),
            Err(e) => skipped.push(format!("{kind}: {e}")),
        }
    }
    if rows.is_empty() {
        return Err(usage(anyhow!("no multiplier supports n={n}")));
    }
    println!(
        "{:<12} {:>8} {:>8} {:>6} {:>6} {:>12}",
        "kind", "sram", "mux", "ha", "fa", "area"
    );
    for r in &rows {
        let mark = if r.note.is_some() { " *" } else { "" };
        println!(
            "{:<12} {:>8} {:>8} {:>6} {:>6} {:>12.1}{mark}",
            r.kind.as_str(),
            r.sram,
            r.mux,
            r.ha,
            r.fa,
            r.area
        );
    }
    if rows.iter().any(|r| r.note.is_some()) {
        println!("* {EXTRAPOLATED}");
    }
    let area_of = |k| rows.iter().find(|r| r.kind == k).map(|r| r.area);
    if let (Some(t), Some(o)) = (
        area_of(MultiplierKind::Traditional),
        area_of(MultiplierKind::OptimizedDc),
    ) {
        println!("traditional / opt-dc area ratio: {:.4}", t / o);
    }
    for s in skipped {
        println!("skipped {s}");
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    let file = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(internal)?;
    Ok(BufWriter::new(file))
}

pub fn analyze(target: AnalyzeTarget, kind: Option<MultiplierKind>, out: &Path) -> Outcome {
    let report = match target {
        AnalyzeTarget::Heatmap | AnalyzeTarget::Histogram => {
            let kind =
                kind.ok_or_else(|| usage(anyhow!("--kind is required for this analysis")))?;
            Some(erroranalysis::error_report(kind).map_err(usage)?)
        }
        AnalyzeTarget::Dist | AnalyzeTarget::Hamming => None,
    };
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(internal)?;

    match (target, report) {
        (AnalyzeTarget::Dist, _) => {
            let dist = erroranalysis::product_distribution();
            let name = "distribution.csv";
            erroranalysis::write_distribution_csv(create(out, name)?, &dist).map_err(internal)?;
            let p0 = dist.probability(0);
            println!(
                "P(0) = {}/{} = {:.6}",
                p0.numer(),
                p0.denom(),
                ratio_to_f64(&p0)
            );
            let missing = erroranalysis::impossible_values();
            println!("{} of 64 values never occur", missing.len());
            println!("wrote {}", out.join(name).display());
        }
        (AnalyzeTarget::Hamming, _) => {
            let sweep = erroranalysis::hamming_sweep();
            let name = "hamming.csv";
            erroranalysis::write_hamming_csv(create(out, name)?, &sweep).map_err(internal)?;
            let best = erroranalysis::best_fixed_approximant();
            let entry = sweep
                .iter()
                .find(|e| e.candidate == best)
                .ok_or_else(|| internal(anyhow!("argmin {best} missing from sweep")))?;
            let per_bit = entry.per_bit();
            println!(
                "argmin {best}, mean Hamming distance per bit {}/{} = {:.4}",
                per_bit.numer(),
                per_bit.denom(),
                ratio_to_f64(&per_bit)
            );
            println!("wrote {}", out.join(name).display());
        }
        (target, Some(report)) => {
            let name = match target {
                AnalyzeTarget::Heatmap => format!("heatmap-{}.csv", report.kind),
                _ => format!("histogram-{}.csv", report.kind),
            };
            let file = create(out, &name)?;
            match target {
                AnalyzeTarget::Heatmap => erroranalysis::write_heatmap_csv(file, &report.matrix),
                _ => erroranalysis::write_histogram_csv(file, &report.histogram),
            }
            .map_err(internal)?;
            let s = &report.stats;
            println!(
                "{}: error range {}..{}",
                report.kind, s.min_error, s.max_error
            );
            println!(
                "mean error {:.4}, mean absolute error {:.4}, exact fraction {:.4}",
                ratio_to_f64(&s.mean_error),
                ratio_to_f64(&s.mean_absolute_error),
                ratio_to_f64(&s.zero_error_fraction)
            );
            println!("wrote {}", out.join(name).display());
        }
        (_, None) => unreachable!("error report is built for heatmap and histogram"),
    }
    Ok(())
}

pub fn nn(trials: usize, seed: u64, topology: &str) -> Outcome {
    let topology = parse_topology(topology).map_err(usage)?;
    let net = QuantizedMlp::random(&topology, seed).map_err(usage)?;
    for result in mae_eval(&net, trials, seed).map_err(usage)? {
        println!("{}", serde_json::to_string(&result).map_err(internal)?);
    }
    Ok(())
}

const VECTOR_W: &str = "0110";
const VECTORS: [(&str, u64); 4] = [("1010", 60), ("1011", 66), ("0011", 18), ("1100", 72)];

pub fn vectors() -> Outcome {
    let w = parse_operand(VECTOR_W, None).map_err(internal)?;
    let mut failures = 0;
    for kind in MultiplierKind::ALL.into_iter().filter(|k| k.is_exact()) {
        let model = MultiplierConfig::new(kind, 4, 4)
            .and_then(|c| program(c, w))
            .map_err(internal)?;
        for (y, expected) in VECTORS {
            let y = parse_operand(y, None).map_err(internal)?;
            let (got, _) = model.evaluate(&y).map_err(internal)?;
            let status = if got.value() == expected {
                "ok"
            } else {
                "MISMATCH"
            };
            if got.value() != expected {
                failures += 1;
            }
            println!(
                "{:<12} W={w} Y={y} -> {}  {status}",
                kind.as_str(),
                describe(&got)
            );
        }
    }
    if failures > 0 {
        return Err(internal(anyhow!("{failures} test vectors failed")));
    }
    Ok(())
}
