//! Feedforward controller representation: layers, activations, concrete
//! forward evaluation, and the on-disk text format.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Activation::Relu => y.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-y).exp()),
            Activation::Tanh => y.tanh(),
            Activation::Identity => y,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Activation> {
        match tag {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    /// Upper bound on the Lipschitz constant over `y_range`, tightened by
    /// interval-evaluating the derivative. The small inflation covers the
    /// libm evaluations, which are not correctly rounded.
    pub fn lipschitz(&self, y_range: Interval) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y_range.hi <= 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Activation::Sigmoid => {
                // sigma' = s (1 - s), peak 1/4 at 0
                if y_range.contains(0.0) {
                    0.25
                } else {
                    let s = sigmoid_interval(y_range);
                    let d = s * (Interval::point(1.0) - s);
                    d.hi.min(0.25)
                }
            }
            Activation::Tanh => {
                // tanh' = 1 - tanh^2, peak 1 at 0
                if y_range.contains(0.0) {
                    1.0
                } else {
                    let t = tanh_interval(y_range);
                    let d = Interval::point(1.0) - t.pow(2);
                    d.hi.clamp(0.0, 1.0)
                }
            }
        }
    }
}

/// Enclosure of sigmoid over an interval (sigmoid is increasing); widened
/// by a few ulps for the transcendental evaluation error.
fn sigmoid_interval(y: Interval) -> Interval {
    let lo = Activation::Sigmoid.eval(y.lo);
    let hi = Activation::Sigmoid.eval(y.hi);
    Interval::new(
        (lo - 4.0 * f64::EPSILON * lo.abs().max(1e-300)).max(0.0),
        (hi + 4.0 * f64::EPSILON * hi.abs()).min(1.0),
    )
}

fn tanh_interval(y: Interval) -> Interval {
    let lo = y.lo.tanh();
    let hi = y.hi.tanh();
    Interval::new(
        (lo - 4.0 * f64::EPSILON * lo.abs().max(1e-300)).max(-1.0),
        (hi + 4.0 * f64::EPSILON * hi.abs().max(1e-300)).min(1.0),
    )
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One fully connected layer: `activation(W x + b)` applied element-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, |r| r.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNetwork {
    layers: Vec<Layer>,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown activation tag `{tag}`")]
    UnknownActivation { line: usize, tag: String },
    #[error("shape error: {0}")]
    Shape(String),
}

impl NeuralNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::Shape("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.is_empty() {
                return Err(NetworkError::Shape(format!("layer {} has no neurons", i + 1)));
            }
            if l.bias.len() != l.output_dim() {
                return Err(NetworkError::Shape(format!(
                    "layer {}: {} bias entries for {} neurons",
                    i + 1,
                    l.bias.len(),
                    l.output_dim()
                )));
            }
            let cols = l.input_dim();
            if l.weights.iter().any(|r| r.len() != cols) {
                return Err(NetworkError::Shape(format!("layer {}: ragged weight rows", i + 1)));
            }
            if i > 0 && layers[i - 1].output_dim() != cols {
                return Err(NetworkError::Shape(format!(
                    "layer {} expects {} inputs but layer {} outputs {}",
                    i + 1,
                    cols,
                    i,
                    layers[i - 1].output_dim()
                )));
            }
        }
        Ok(NeuralNetwork { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    /// Exact layer-by-layer evaluation.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut v = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.output_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let pre: f64 = row.iter().zip(&v).map(|(w, x)| w * x).sum::<f64>() + b;
                next.push(layer.activation.eval(pre));
            }
            v = next;
        }
        v
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parse the line-oriented text format:
    ///
    /// ```text
    /// n_inputs
    /// n_outputs
    /// M                      # hidden layer count
    /// <M lines: neurons per hidden layer>
    /// <M+1 lines: activation tag per layer, hidden first>
    /// <for each layer, for each neuron: incoming weights then the bias>
    /// ```
    ///
    /// `#` begins a comment line; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut tokens = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut last_line = 0usize;
        let mut next = |what: &str| -> Result<(usize, &str), NetworkError> {
            match tokens.next() {
                Some((line, tok)) => {
                    last_line = line;
                    Ok((line, tok))
                }
                None => Err(NetworkError::Parse {
                    line: last_line,
                    message: format!("file ended while reading {what}"),
                }),
            }
        };

        fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize, NetworkError> {
            tok.parse().map_err(|_| NetworkError::Parse {
                line,
                message: format!("expected {what} (a non-negative integer), found `{tok}`"),
            })
        }
        fn parse_f64(line: usize, tok: &str, what: &str) -> Result<f64, NetworkError> {
            tok.parse().map_err(|_| NetworkError::Parse {
                line,
                message: format!("expected {what} (a decimal number), found `{tok}`"),
            })
        }

        let (line, tok) = next("the input count")?;
        let n_inputs = parse_usize(line, tok, "the input count")?;
        let (line, tok) = next("the output count")?;
        let n_outputs = parse_usize(line, tok, "the output count")?;
        let (line, tok) = next("the hidden layer count")?;
        let m = parse_usize(line, tok, "the hidden layer count")?;

        let mut widths = vec![n_inputs];
        for i in 0..m {
            let what = format!("the width of hidden layer {}", i + 1);
            let (line, tok) = next(&what)?;
            widths.push(parse_usize(line, tok, &what)?);
        }
        widths.push(n_outputs);

        let mut activations = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let what = format!("the activation tag of layer {}", i + 1);
            let (line, tok) = next(&what)?;
            let act = Activation::from_tag(tok).ok_or_else(|| NetworkError::UnknownActivation {
                line,
                tag: tok.to_string(),
            })?;
            activations.push(act);
        }

        let mut layers = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let fan_in = widths[i];
            let fan_out = widths[i + 1];
            let mut weights = Vec::with_capacity(fan_out);
            let mut bias = Vec::with_capacity(fan_out);
            for j in 0..fan_out {
                let mut row = Vec::with_capacity(fan_in);
                for l in 0..fan_in {
                    let what = format!("weight {} of neuron {} in layer {}", l + 1, j + 1, i + 1);
                    let (line, tok) = next(&what)?;
                    row.push(parse_f64(line, tok, &what)?);
                }
                let what = format!("the bias of neuron {} in layer {}", j + 1, i + 1);
                let (line, tok) = next(&what)?;
                bias.push(parse_f64(line, tok, &what)?);
                weights.push(row);
            }
            layers.push(Layer {
                weights,
                bias,
                activation: activations[i],
            });
        }

        if let Some((line, tok)) = tokens.next() {
            return Err(NetworkError::Parse {
                line,
                message: format!("unexpected trailing token `{tok}`"),
            });
        }
        NeuralNetwork::new(layers)
    }
}

/// The two-hidden-layer demonstration network used across the test suite:
/// 2 inputs, two 2-neuron sigmoid hidden layers, 1 sigmoid output.
#[cfg(test)]
pub(crate) fn demo_network() -> NeuralNetwork {
    NeuralNetwork::new(vec![
        Layer {
            weights: vec![vec![1.5, 0.5], vec![-1.0, 2.0]],
            bias: vec![0.3, 0.0],
            activation: Activation::Sigmoid,
        },
        Layer {
            weights: vec![vec![-0.8, 3.0], vec![1.2, 0.1]],
            bias: vec![-1.0, -2.0],
            activation: Activation::Sigmoid,
        },
        Layer {
            weights: vec![vec![2.0, 1.0]],
            bias: vec![0.0],
            activation: Activation::Sigmoid,
        },
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_identity_network() {
        let net = NeuralNetwork::new(vec![
            Layer {
                weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                bias: vec![0.0, 0.0],
                activation: Activation::Identity,
            },
            Layer {
                weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                bias: vec![0.0, 0.0],
                activation: Activation::Identity,
            },
        ])
        .unwrap();
        assert_eq!(net.forward(&[3.5, -2.25]), vec![3.5, -2.25]);
    }

    #[test]
    fn forward_single_sigmoid_neuron() {
        let net = NeuralNetwork::new(vec![Layer {
            weights: vec![vec![0.0]],
            bias: vec![0.0],
            activation: Activation::Sigmoid,
        }])
        .unwrap();
        assert_eq!(net.forward(&[17.0]), vec![0.5]);
    }

    #[test]
    fn forward_demo_network_within_output_model_range() {
        // At z = 0 the demonstration inputs take their constant values
        // (1, -2); the concrete output must lie in the printed output
        // model's range 0.796 + [-0.265, 0.265].
        let out = demo_network().forward(&[1.0, -2.0]);
        assert_eq!(out.len(), 1);
        assert!(out[0] >= 0.796 - 0.265 && out[0] <= 0.796 + 0.265);
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Relu.eval(-1.0), 0.0);
        assert_eq!(Activation::Relu.eval(2.5), 2.5);
        assert_eq!(Activation::Tanh.eval(0.0), 0.0);
        assert_eq!(Activation::Identity.eval(-7.5), -7.5);
        assert!((Activation::Sigmoid.eval(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_bounds() {
        assert_eq!(
            Activation::Sigmoid.lipschitz(Interval::new(-10.0, 10.0)),
            0.25
        );
        assert_eq!(Activation::Relu.lipschitz(Interval::new(-5.0, -1.0)), 0.0);
        assert_eq!(Activation::Relu.lipschitz(Interval::new(-5.0, 1.0)), 1.0);
        assert_eq!(Activation::Tanh.lipschitz(Interval::new(-1.0, 2.0)), 1.0);
        // away from zero the bound tightens
        let l = Activation::Sigmoid.lipschitz(Interval::new(3.0, 8.0));
        assert!(l < 0.05 && l > 0.0);
    }

    #[test]
    fn lipschitz_dominates_sampled_slopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for act in [
            Activation::Relu,
            Activation::Sigmoid,
            Activation::Tanh,
            Activation::Identity,
        ] {
            for _ in 0..20 {
                let a: f64 = rng.gen_range(-6.0..6.0);
                let w: f64 = rng.gen_range(0.01..5.0);
                let y = Interval::new(a, a + w);
                let l = act.lipschitz(y);
                for _ in 0..1_000 {
                    let p = rng.gen_range(y.lo..=y.hi);
                    let q = rng.gen_range(y.lo..=y.hi);
                    if (p - q).abs() > 1e-12 {
                        let slope = (act.eval(p) - act.eval(q)).abs() / (p - q).abs();
                        assert!(
                            slope <= l + 1e-9,
                            "{act} slope {slope} exceeds bound {l} on {y}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn parse_minimal_identity_net() {
        let text = "# 1-1-1 identity network\n1\n1\n1\n1\nidentity\nidentity\n2.0\n0.5\n3.0\n-1.0\n";
        let net = NeuralNetwork::parse(text).unwrap();
        // forward(x) = w2 (w1 x + b1) + b2
        let x = 1.25;
        let expected = 3.0 * (2.0 * x + 0.5) - 1.0;
        assert_eq!(net.forward(&[x]), vec![expected]);
    }

    #[test]
    fn parse_demo_network_roundtrip() {
        let text = "\
# demonstration network
2
1
2
2
2
sigmoid
sigmoid
sigmoid
1.5
0.5
0.3
-1
2
0
-0.8
3
-1
1.2
0.1
-2
2
1
0
";
        let net = NeuralNetwork::parse(text).unwrap();
        let reference = demo_network();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(net.forward(&x), reference.forward(&x));
        }
    }

    #[test]
    fn parse_truncated_file_reports_missing_section() {
        let text = "2\n1\n1\n2\nsigmoid\nsigmoid\n0.5\n";
        let err = NeuralNetwork::parse(text).unwrap_err();
        match err {
            NetworkError::Parse { message, .. } => {
                assert!(message.contains("file ended"), "message: {message}");
                assert!(message.contains("weight") || message.contains("bias"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_unknown_activation() {
        let text = "1\n1\n0\nsoftplus\n1.0\n0.0\n";
        match NeuralNetwork::parse(text).unwrap_err() {
            NetworkError::UnknownActivation { tag, line } => {
                assert_eq!(tag, "softplus");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn forward_output_dim_matches_last_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let dims: Vec<usize> = (0..rng.gen_range(2..5))
                .map(|_| rng.gen_range(1..6))
                .collect();
            let mut layers = Vec::new();
            for w in dims.windows(2) {
                layers.push(Layer {
                    weights: (0..w[1])
                        .map(|_| (0..w[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
                        .collect(),
                    bias: (0..w[1]).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    activation: Activation::Tanh,
                });
            }
            let net = NeuralNetwork::new(layers).unwrap();
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert_eq!(net.forward(&x).len(), *dims.last().unwrap());
        }
    }
}
