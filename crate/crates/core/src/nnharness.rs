//! Integer-only inference of a small feed-forward network in which every
//! weight-by-activation product goes through a chosen multiplier model, and
//! the mean absolute error of each variant against the ideal multiplier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitcore::UWord;
use crate::error::{Error, Result};
use crate::lutmul::{program, MultiplierConfig, MultiplierKind, MultiplierModel};

pub const OPERAND_BITS: u32 = 4;
pub const OPERAND_MAX: u8 = 15;
pub const DEFAULT_TOPOLOGY: [usize; 3] = [4, 8, 2];
pub const DEFAULT_TRIALS: usize = 100;
/// Hidden activations are `min(relu(acc) >> shift, 15)`.
pub const DEFAULT_REQUANT_SHIFT: u32 = 6;

/// Uniform quantization of `[min, max]` onto `0..=15`, rounding half up.
/// A constant vector maps to all zeros.
pub fn quantize(xs: &[f64]) -> Vec<u8> {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if hi <= lo {
        return vec![0; xs.len()];
    }
    let scale = f64::from(OPERAND_MAX) / (hi - lo);
    xs.iter()
        .map(|&x| {
            ((x - lo) * scale + 0.5)
                .floor()
                .clamp(0.0, f64::from(OPERAND_MAX)) as u8
        })
        .collect()
}

/// Parses a topology such as `4-8-2`.
pub fn parse_topology(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split('-')
        .map(|part| part.trim().parse::<usize>().ok().filter(|&d| d > 0))
        .collect::<Option<Vec<_>>>()
        .filter(|dims| dims.len() >= 2);
    dims.ok_or_else(|| {
        Error::ConfigMismatch(format!(
            "topology `{s}` must be two or more positive layer sizes joined by `-`, e.g. 4-8-2"
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layer {
    /// `weights[out][in]`, each in `0..=15`.
    weights: Vec<Vec<u8>>,
    bias: Vec<i64>,
}

impl Layer {
    pub fn new(weights: Vec<Vec<u8>>, bias: Vec<i64>) -> Result<Self> {
        if weights.len() != bias.len() {
            return Err(Error::DimMismatch {
                expected: weights.len(),
                actual: bias.len(),
            });
        }
        let inputs = weights.first().map_or(0, Vec::len);
        if inputs == 0 {
            return Err(Error::ConfigMismatch(
                "a layer needs at least one input and output".into(),
            ));
        }
        for row in &weights {
            if row.len() != inputs {
                return Err(Error::DimMismatch {
                    expected: inputs,
                    actual: row.len(),
                });
            }
            if let Some(&w) = row.iter().find(|&&w| w > OPERAND_MAX) {
                return Err(Error::OverflowValue {
                    width: OPERAND_BITS,
                    value: u64::from(w),
                });
            }
        }
        Ok(Self { weights, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weights[0].len()
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<u8>] {
        &self.weights
    }

    pub fn bias(&self) -> &[i64] {
        &self.bias
    }

    /// Accumulators before the rectifier.
    pub fn preactivations(&self, input: &[u8], engine: &ProductEngine) -> Result<Vec<i64>> {
        if input.len() != self.inputs() {
            return Err(Error::DimMismatch {
                expected: self.inputs(),
                actual: input.len(),
            });
        }
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, &b)| {
                row.iter()
                    .zip(input)
                    .try_fold(b, |acc, (&w, &x)| Ok(acc + engine.multiply(w, x)? as i64))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuantizedMlp {
    layers: Vec<Layer>,
    requant_shift: u32,
}

impl QuantizedMlp {
    pub fn new(layers: Vec<Layer>, requant_shift: u32) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ConfigMismatch(
                "a network needs at least one layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::DimMismatch {
                    expected: pair[0].outputs(),
                    actual: pair[1].inputs(),
                });
            }
        }
        Ok(Self {
            layers,
            requant_shift,
        })
    }

    /// Weights uniform in `0..=15`, biases uniform in `-16..=16`.
    pub fn random(topology: &[usize], seed: u64) -> Result<Self> {
        if topology.len() < 2 || topology.contains(&0) {
            return Err(Error::ConfigMismatch(format!(
                "invalid topology {topology:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = topology
            .windows(2)
            .map(|dims| {
                let weights = (0..dims[1])
                    .map(|_| {
                        (0..dims[0])
                            .map(|_| rng.gen_range(0..=OPERAND_MAX))
                            .collect()
                    })
                    .collect();
                let bias = (0..dims[1]).map(|_| rng.gen_range(-16..=16)).collect();
                Layer::new(weights, bias)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, DEFAULT_REQUANT_SHIFT)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn requant_shift(&self) -> u32 {
        self.requant_shift
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn topology(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    /// Rectified outputs of the last layer. Hidden layers are rectified and
    /// requantized to 4 bits before feeding the next layer.
    pub fn forward_with(&self, input: &[u8], engine: &ProductEngine) -> Result<Vec<i64>> {
        if let Some(&x) = input.iter().find(|&&x| x > OPERAND_MAX) {
            return Err(Error::OverflowValue {
                width: OPERAND_BITS,
                value: u64::from(x),
            });
        }
        let mut activations = input.to_vec();
        let last = self.layers.len() - 1;
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let rectified: Vec<i64> = layer
                .preactivations(&activations, engine)?
                .into_iter()
                .map(|a| a.max(0))
                .collect();
            if i == last {
                out = rectified;
            } else {
                activations = rectified
                    .iter()
                    .map(|&a| (a >> self.requant_shift).min(i64::from(OPERAND_MAX)) as u8)
                    .collect();
            }
        }
        Ok(out)
    }
}

/// One programmed 4x4 model per weight value, so products are routed through
/// the selected multiplier's storage and adders.
#[derive(Debug, Clone)]
pub struct ProductEngine {
    kind: MultiplierKind,
    models: Vec<MultiplierModel>,
}

impl ProductEngine {
    pub fn new(kind: MultiplierKind) -> Result<Self> {
        let config = MultiplierConfig::square(kind, OPERAND_BITS)?;
        let models = (0..=u64::from(OPERAND_MAX))
            .map(|w| program(config, UWord::new(OPERAND_BITS, w)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, models })
    }

    pub fn kind(&self) -> MultiplierKind {
        self.kind
    }

    pub fn multiply(&self, w: u8, x: u8) -> Result<u64> {
        let model = self.models.get(w as usize).ok_or(Error::OverflowValue {
            width: OPERAND_BITS,
            value: u64::from(w),
        })?;
        let (product, _) = model.evaluate(&UWord::new(OPERAND_BITS, u64::from(x))?)?;
        Ok(product.value())
    }
}

pub fn forward(net: &QuantizedMlp, input: &[u8], kind: MultiplierKind) -> Result<Vec<i64>> {
    net.forward_with(input, &ProductEngine::new(kind)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaeResult {
    pub variant: MultiplierKind,
    pub trials: usize,
    pub seed: u64,
    /// Sum of absolute output differences over all trials and outputs.
    pub mae_numerator: u64,
    /// `trials * output_dim`.
    pub mae_denominator: u64,
    pub mae_decimal: f64,
}

/// Mean absolute output error of every multiplier kind against the
/// traditional (ideal) one, over `trials` random input vectors drawn from a
/// generator seeded with `seed`.
pub fn mae_eval(net: &QuantizedMlp, trials: usize, seed: u64) -> Result<Vec<MaeResult>> {
    if trials == 0 {
        return Err(Error::ConfigMismatch(
            "at least one trial is required".into(),
        ));
    }
    let reference = ProductEngine::new(MultiplierKind::Traditional)?;
    let engines = MultiplierKind::ALL
        .iter()
        .map(|&k| ProductEngine::new(k))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut sums = vec![0u64; engines.len()];
    for _ in 0..trials {
        let input: Vec<u8> = (0..net.input_dim())
            .map(|_| rng.gen_range(0..=OPERAND_MAX))
            .collect();
        let ideal = net.forward_with(&input, &reference)?;
        for (engine, sum) in engines.iter().zip(sums.iter_mut()) {
            let got = net.forward_with(&input, engine)?;
            *sum += ideal
                .iter()
                .zip(&got)
                .map(|(a, b)| a.abs_diff(*b))
                .sum::<u64>();
        }
    }

    let denominator = (trials * net.output_dim()) as u64;
    Ok(engines
        .iter()
        .zip(sums)
        .map(|(engine, numerator)| MaeResult {
            variant: engine.kind(),
            trials,
            seed,
            mae_numerator: numerator,
            mae_denominator: denominator,
            mae_decimal: numerator as f64 / denominator as f64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use MultiplierKind::*;

    // Plain integer network with `*` for every product.
    fn reference_forward(net: &QuantizedMlp, input: &[u8]) -> Vec<i64> {
        let mut act: Vec<i64> = input.iter().map(|&x| x as i64).collect();
        let last = net.layers().len() - 1;
        for (i, layer) in net.layers().iter().enumerate() {
            let out: Vec<i64> = layer
                .weights()
                .iter()
                .zip(layer.bias())
                .map(|(row, b)| {
                    (b + row
                        .iter()
                        .zip(&act)
                        .map(|(&w, &x)| w as i64 * x)
                        .sum::<i64>())
                    .max(0)
                })
                .collect();
            act = if i == last {
                out
            } else {
                out.iter()
                    .map(|&a| (a >> net.requant_shift()).min(15))
                    .collect()
            };
        }
        act
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(&[0.0, 1.0]), [0, 15]);
        assert_eq!(quantize(&[2.5, 2.5, 2.5]), [0, 0, 0]);
        assert_eq!(quantize(&[0.0, 0.5, 1.0]), [0, 8, 15]);
        assert_eq!(quantize(&[]), Vec::<u8>::new());
        assert_eq!(quantize(&[-3.0, 3.0, 0.0]), [0, 15, 8]);
    }

    #[test]
    fn topology_parsing() {
        assert_eq!(parse_topology("4-8-2").unwrap(), [4, 8, 2]);
        assert_eq!(parse_topology("3-1").unwrap(), [3, 1]);
        for bad in ["", "4", "4-x-2", "4-0-2", "4--2", "4,8,2"] {
            assert!(parse_topology(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn layer_validation() {
        assert!(Layer::new(vec![vec![16]], vec![0]).is_err());
        assert!(Layer::new(vec![vec![1, 2], vec![3]], vec![0, 0]).is_err());
        assert!(Layer::new(vec![vec![1]], vec![0, 0]).is_err());
        let a = Layer::new(vec![vec![1, 2]], vec![0]).unwrap();
        let b = Layer::new(vec![vec![1, 2]], vec![0]).unwrap();
        assert!(matches!(
            QuantizedMlp::new(vec![a, b], 6),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn forward_examples() {
        let net = QuantizedMlp::random(&DEFAULT_TOPOLOGY, 3).unwrap();
        let input = [3, 15, 0, 9];
        assert_eq!(
            forward(&net, &input, OptimizedDc).unwrap(),
            forward(&net, &input, Traditional).unwrap()
        );
        assert!(matches!(
            forward(&net, &[1, 2, 3], Dc),
            Err(Error::DimMismatch {
                expected: 4,
                actual: 3
            })
        ));
        assert!(forward(&net, &[1, 2, 3, 16], Dc).is_err());

        // Zero input: only biases propagate.
        let single =
            QuantizedMlp::new(vec![Layer::new(vec![vec![15]], vec![4]).unwrap()], 6).unwrap();
        assert_eq!(forward(&single, &[0], Dc).unwrap(), [4]);
        assert_eq!(forward(&single, &[0], ApproxDc).unwrap(), [4]);
        // approx-dc2 adds W even when the input is zero.
        assert_eq!(forward(&single, &[0], ApproxDc2).unwrap(), [19]);
        // 15 * 7 = 105 exactly, 60 through approx-dc.
        assert_eq!(forward(&single, &[7], Traditional).unwrap(), [109]);
        assert_eq!(forward(&single, &[7], ApproxDc).unwrap(), [64]);
    }

    #[test]
    fn mae_properties() {
        let net = QuantizedMlp::random(&DEFAULT_TOPOLOGY, 7).unwrap();
        let results = mae_eval(&net, DEFAULT_TRIALS, 7).unwrap();
        let get = |k| results.iter().find(|r| r.variant == k).unwrap();
        for k in [Traditional, Dc, OptimizedDc] {
            assert_eq!(get(k).mae_numerator, 0);
        }
        assert!(get(ApproxDc).mae_numerator > 0);
        assert!(get(ApproxDc2).mae_decimal.is_finite());
        assert_eq!(get(Dc).mae_denominator, 200);
        assert_eq!(results, mae_eval(&net, DEFAULT_TRIALS, 7).unwrap());
        assert!(mae_eval(&net, 0, 7).is_err());
    }

    #[test]
    fn random_nets_are_seeded() {
        let a = QuantizedMlp::random(&[4, 8, 2], 11).unwrap();
        assert_eq!(a, QuantizedMlp::random(&[4, 8, 2], 11).unwrap());
        assert_ne!(a, QuantizedMlp::random(&[4, 8, 2], 12).unwrap());
        assert_eq!(a.topology(), [4, 8, 2]);
        assert!(QuantizedMlp::random(&[4], 1).is_err());
    }

    proptest! {
        #[test]
        fn exact_variants_match_reference(seed in any::<u64>(), input in proptest::collection::vec(0u8..=15, 4)) {
            let net = QuantizedMlp::random(&DEFAULT_TOPOLOGY, seed).unwrap();
            let expected = reference_forward(&net, &input);
            for kind in [Traditional, Dc, OptimizedDc] {
                prop_assert_eq!(&forward(&net, &input, kind).unwrap(), &expected);
            }
        }

        #[test]
        fn approx_dc_neuron_deviation_is_bounded(seed in any::<u64>(), input in proptest::collection::vec(0u8..=15, 4)) {
            let net = QuantizedMlp::random(&DEFAULT_TOPOLOGY, seed).unwrap();
            let layer = &net.layers()[0];
            let exact = layer.preactivations(&input, &ProductEngine::new(Traditional).unwrap()).unwrap();
            let approx = layer.preactivations(&input, &ProductEngine::new(ApproxDc).unwrap()).unwrap();
            for (e, a) in exact.iter().zip(&approx) {
                prop_assert!(e - a >= 0);
                prop_assert!(e - a <= 45 * layer.inputs() as i64);
            }
        }
    }
}
