//! Bernstein-basis interpolation of activation functions over an interval,
//! with a sampled or Lipschitz-certified error remainder.
//!
//! Interpolation needs only continuity, so it covers ReLU as well as the
//! smooth activations, and it reproduces affine functions exactly at any
//! order.

use crate::interval::Interval;
use crate::network::Activation;
use crate::polynomial::{Domain, SparsePolynomial};

/// How the approximation error bound is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemainderMode {
    /// Max sampled error plus the fixed slack `(width)/m`.
    Sampled,
    /// Max sampled error plus `L * width / (2m)` where `L` bounds the
    /// Lipschitz constant of both the activation and the interpolant; sound
    /// whenever the Lipschitz bounds are.
    Rigorous,
}

/// A univariate polynomial enclosure of an activation on an input range:
/// for y in `input_range`, `sigma(y)` lies in `poly(y) + rem`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinApprox {
    pub poly: SparsePolynomial,
    pub rem: Interval,
    pub input_range: Interval,
}

impl BernsteinApprox {
    pub fn build(
        sigma: Activation,
        input_range: Interval,
        order: usize,
        samples: usize,
        mode: RemainderMode,
    ) -> BernsteinApprox {
        let poly = interpolate(sigma, input_range, order);
        let rem = remainder(sigma, &poly, input_range, samples, mode);
        BernsteinApprox {
            poly,
            rem,
            input_range,
        }
    }
}

fn binomial(k: usize, s: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..s.min(k - s) {
        acc = acc * (k - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Degree-`k` Bernstein interpolant of `sigma` on `y_range`:
///
/// `p(y) = sum_s sigma(lo + s*w/k) * C(k,s) * (y-lo)^s (hi-y)^(k-s) / w^k`
///
/// expanded to monomial form. A degenerate range yields the constant
/// `sigma(lo)`.
pub fn interpolate(sigma: Activation, y_range: Interval, k: usize) -> SparsePolynomial {
    assert!(k >= 1, "Bernstein order must be at least 1");
    let (lo, hi) = (y_range.lo, y_range.hi);
    let w = hi - lo;
    if w == 0.0 {
        return SparsePolynomial::constant(1, sigma.eval(lo));
    }

    // powers of (y - lo) and (hi - y)
    let rising = SparsePolynomial::from_terms(1, &[(&[0], -lo), (&[1], 1.0)]);
    let falling = SparsePolynomial::from_terms(1, &[(&[0], hi), (&[1], -1.0)]);
    let mut rise_pow = vec![SparsePolynomial::constant(1, 1.0)];
    let mut fall_pow = vec![SparsePolynomial::constant(1, 1.0)];
    for i in 1..=k {
        rise_pow.push(rise_pow[i - 1].mul(&rising));
        fall_pow.push(fall_pow[i - 1].mul(&falling));
    }

    let w_k = w.powi(k as i32);
    let mut p = SparsePolynomial::zero(1);
    for s in 0..=k {
        let node = lo + w * s as f64 / k as f64;
        let coeff = sigma.eval(node) * binomial(k, s) / w_k;
        if coeff != 0.0 {
            p = p.add(&rise_pow[s].mul(&fall_pow[k - s]).scale(coeff));
        }
    }
    p
}

/// Error bound `[-eps, eps]` for an interpolant `p` of `sigma` on
/// `y_range`, from `m` midpoint samples.
pub fn remainder(
    sigma: Activation,
    p: &SparsePolynomial,
    y_range: Interval,
    m: usize,
    mode: RemainderMode,
) -> Interval {
    assert!(m >= 1, "need at least one sample");
    let (lo, hi) = (y_range.lo, y_range.hi);
    let w = hi - lo;
    if w == 0.0 {
        return Interval::zero();
    }

    let slack = match mode {
        RemainderMode::Sampled => w / m as f64,
        RemainderMode::Rigorous => {
            let l_sigma = sigma.lipschitz(y_range);
            let l_poly = p
                .derivative_1d()
                .bound(&Domain::new(vec![y_range]))
                .magnitude();
            (l_sigma + l_poly) * w / (2.0 * m as f64)
        }
    };

    let mut eps: f64 = 0.0;
    for i in 1..=m {
        let c = lo + w * (i as f64 - 0.5) / m as f64;
        let diff = (p.eval(&[c]) - sigma.eval(c)).abs();
        eps = eps.max(diff + slack);
    }
    if mode == RemainderMode::Rigorous {
        // absorb the floating evaluation of the bound itself
        eps = eps.next_up().next_up();
    }
    Interval::symmetric(eps)
}
