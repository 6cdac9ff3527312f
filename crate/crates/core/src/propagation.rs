//! Taylor model enclosures for the input-output map of a feedforward
//! network.
//!
//! Both variants walk the network layer by layer, fitting a univariate
//! Bernstein interpolant with a certified remainder to each neuron's
//! activation over its pre-activation range, then composing it with the
//! incoming model. The plain variant intervalizes the remainder at every
//! layer; the symbolic variant keeps the remainder's image under the
//! per-layer linear parts as accumulated matrix products, which avoids the
//! wrapping effect of repeated interval evaluation.

use thiserror::Error;

use crate::bernstein::{BernsteinApprox, RemainderMode};
use crate::interval::Interval;
use crate::network::NeuralNetwork;
use crate::polynomial::SparsePolynomial;
use crate::taylor_model::{TMVector, TaylorModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbstractionConfig {
    /// Bernstein interpolation order per neuron.
    pub bernstein_order: usize,
    /// Number of midpoint samples for the error bound.
    pub samples: usize,
    pub mode: RemainderMode,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        AbstractionConfig {
            bernstein_order: 2,
            samples: 100,
            mode: RemainderMode::Sampled,
        }
    }
}

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("network expects {expected} inputs, input model has {actual} components")]
    ShapeMismatch { expected: usize, actual: usize },
}

/// Operation counters for the complexity characteristics of the two
/// variants: the plain pass performs one model-level linear map per layer,
/// the symbolic pass additionally refreshes its whole product array.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropagationStats {
    /// Taylor model linear maps (one per layer in both variants).
    pub tm_linear_maps: usize,
    /// Matrix-matrix products spent maintaining the symbolic product array.
    pub matrix_products: usize,
}

/// Layer-by-layer enclosure of the network output for a model input.
///
/// For every layer the incoming model gets the affine map applied, every
/// neuron's range is bounded, and the activation is replaced by its
/// Bernstein enclosure composed with the pre-activation model. The result
/// contains `net(x)` pointwise for every `x` enclosed by `input`.
pub fn nn_output_tm(
    net: &NeuralNetwork,
    input: &TMVector,
    cfg: &AbstractionConfig,
) -> Result<TMVector, PropagationError> {
    nn_output_tm_with_stats(net, input, cfg).map(|(v, _)| v)
}

pub fn nn_output_tm_with_stats(
    net: &NeuralNetwork,
    input: &TMVector,
    cfg: &AbstractionConfig,
) -> Result<(TMVector, PropagationStats), PropagationError> {
    check_shape(net, input)?;
    let mut stats = PropagationStats::default();
    let mut cur = input.clone();
    for layer in net.layers() {
        let pre = cur.linear_map(&layer.weights, &layer.bias);
        stats.tm_linear_maps += 1;
        let mut outs = Vec::with_capacity(pre.dim());
        for j in 0..pre.dim() {
            let t = pre.component(j);
            let approx = BernsteinApprox::build(
                layer.activation,
                t.range(),
                cfg.bernstein_order,
                cfg.samples,
                cfg.mode,
            );
            outs.push(TaylorModel::compose_univariate(&approx.poly, approx.rem, t));
        }
        cur = TMVector::new(outs);
    }
    Ok((cur, stats))
}

/// Running state of the symbolic-remainder pass after `i` layers: entry `j`
/// of `q_products` holds `Q_i * ... * Q_(j+1)`, entry `j` of `j_intervals`
/// holds the layer-`j+1` residual interval, and `phi` accumulates the
/// residual polynomials mapped forward by the later linear parts.
#[derive(Debug, Clone)]
pub struct SymbolicState {
    pub q_products: Vec<Mat>,
    pub j_intervals: Vec<Vec<Interval>>,
    pub phi: Vec<SparsePolynomial>,
}

/// Layer-by-layer enclosure keeping remainders symbolic under the linear
/// parts.
///
/// Each layer's composite map splits as `q(y) = Q y + q_R(y)` where `Q`
/// collects the coefficients of the linear terms; the residual `q_R` is
/// evaluated with model arithmetic while the images of the input remainder
/// and of the per-layer residual intervals under the chain of `Q` matrices
/// are evaluated from explicit matrix products.
pub fn nn_output_tm_symbolic(
    net: &NeuralNetwork,
    input: &TMVector,
    cfg: &AbstractionConfig,
) -> Result<TMVector, PropagationError> {
    nn_output_tm_symbolic_with_stats(net, input, cfg).map(|(v, _)| v)
}

pub fn nn_output_tm_symbolic_with_stats(
    net: &NeuralNetwork,
    input: &TMVector,
    cfg: &AbstractionConfig,
) -> Result<(TMVector, PropagationStats), PropagationError> {
    check_shape(net, input)?;
    let mut stats = PropagationStats::default();
    let domain = input.domain().clone();
    let order = input.order();

    let input_polys: Vec<SparsePolynomial> =
        input.components().iter().map(|c| c.poly.clone()).collect();
    let input_rems: Vec<Interval> = input.components().iter().map(|c| c.rem).collect();

    let mut state = SymbolicState {
        q_products: Vec::with_capacity(net.layers().len()),
        j_intervals: Vec::with_capacity(net.layers().len()),
        phi: Vec::new(),
    };
    let mut cur = input.clone();
    for layer in net.layers() {
        let width = layer.output_dim();
        let pre = cur.linear_map(&layer.weights, &layer.bias);
        stats.tm_linear_maps += 1;

        // Split each neuron's interpolant p_sigma(s) = c1 s + g(s); the
        // linear parts assemble Q = diag(c1) W, the residual part
        // phi_i + J_i = c1*b + g(pre) + I_sigma is plain model arithmetic.
        let mut q = Mat::zeros(width, cur.dim());
        let mut phi_layer = Vec::with_capacity(width);
        let mut j_layer = Vec::with_capacity(width);
        for j in 0..width {
            let t = pre.component(j);
            let approx = BernsteinApprox::build(
                layer.activation,
                t.range(),
                cfg.bernstein_order,
                cfg.samples,
                cfg.mode,
            );
            let c1 = approx.poly.coefficient(&[1]);
            for (l, w) in layer.weights[j].iter().enumerate() {
                q.set(j, l, c1 * w);
            }
            let linear = SparsePolynomial::from_terms(1, &[(&[1], c1)]);
            let g = approx.poly.sub(&linear);
            let mut residual = TaylorModel::compose_univariate(&g, approx.rem, t);
            let shift = c1 * layer.bias[j];
            if shift != 0.0 {
                residual = residual.add(&TaylorModel::constant(shift, domain.clone(), order));
            }
            phi_layer.push(residual.poly);
            j_layer.push(residual.rem);
        }

        // refresh the product array: q_products[l] becomes Q_i * ... * Q_(l+1)
        for prod in state.q_products.iter_mut() {
            *prod = q.mul(prod);
            stats.matrix_products += 1;
        }
        state.q_products.push(q.clone());

        // accumulated residual intervals, each mapped by one explicit product
        let mut jj = j_layer.clone();
        for (idx, old) in state.j_intervals.iter().enumerate() {
            add_assign(&mut jj, &state.q_products[idx + 1].mul_ivec(old));
        }
        state.j_intervals.push(j_layer);

        // accumulated residual polynomials
        state.phi = if state.phi.is_empty() {
            phi_layer
        } else {
            let mapped = q.mul_pvec(&state.phi);
            mapped
                .into_iter()
                .zip(phi_layer)
                .map(|(a, b)| a.add(&b))
                .collect()
        };

        // materialize the current model per the unfolded recurrence:
        // Q_i...Q_1 * p(z)  +  Q_i...Q_1 * I  +  Phi_i(z)  +  JJ_i
        let head = &state.q_products[0];
        let polys = head.mul_pvec(&input_polys);
        let rems = head.mul_ivec(&input_rems);
        let comps: Vec<TaylorModel> = polys
            .into_iter()
            .zip(state.phi.iter())
            .zip(rems.into_iter().zip(&jj))
            .map(|((qp, phi), (qi, j))| {
                let poly = qp.add(phi);
                // coefficient roundoff of the matrix/polynomial products
                let flops = 2 * (cur.dim() * (1 + qp.num_terms().max(phi.num_terms())));
                let mag = head.max_abs() * input_polys.iter().map(|p| p.max_abs_coeff()).fold(0.0, f64::max)
                    + phi.max_abs_coeff();
                let pad = flops as f64 * f64::EPSILON * mag;
                TaylorModel::new(
                    poly,
                    qi + *j + Interval::symmetric(pad),
                    domain.clone(),
                    order,
                )
            })
            .collect();
        cur = TMVector::new(comps);
    }
    Ok((cur, stats))
}

fn check_shape(net: &NeuralNetwork, input: &TMVector) -> Result<(), PropagationError> {
    if net.input_dim() != input.dim() {
        return Err(PropagationError::ShapeMismatch {
            expected: net.input_dim(),
            actual: input.dim(),
        });
    }
    Ok(())
}

fn add_assign(acc: &mut [Interval], inc: &[Interval]) {
    for (a, b) in acc.iter_mut().zip(inc) {
        *a = *a + *b;
    }
}

/// Small dense row-major matrix for the symbolic product bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(l, j);
                }
            }
        }
        out
    }

    /// Interval image of a box under this matrix, with an allowance for the
    /// accumulated floating error of the matrix entries themselves.
    pub fn mul_ivec(&self, v: &[Interval]) -> Vec<Interval> {
        assert_eq!(self.cols, v.len(), "matrix/vector shape mismatch");
        let vmag = v.iter().fold(0.0f64, |m, iv| m.max(iv.magnitude()));
        let pad = self.cols as f64 * 2.0 * f64::EPSILON * self.max_abs().max(1.0) * vmag;
        (0..self.rows)
            .map(|i| {
                let mut acc = Interval::zero();
                for (j, iv) in v.iter().enumerate() {
                    acc = acc + iv.scale(self.get(i, j));
                }
                acc + Interval::symmetric(pad)
            })
            .collect()
    }

    pub fn mul_pvec(&self, v: &[SparsePolynomial]) -> Vec<SparsePolynomial> {
        assert_eq!(self.cols, v.len(), "matrix/vector shape mismatch");
        let num_vars = v[0].num_vars();
        (0..self.rows)
            .map(|i| {
                let mut acc = SparsePolynomial::zero(num_vars);
                for (j, p) in v.iter().enumerate() {
                    let w = self.get(i, j);
                    if w != 0.0 {
                        acc = acc.add(&p.scale(w));
                    }
                }
                acc
            })
            .collect()
    }
}
