//! Validated integration of polynomial ODEs: order-k solution expansion by
//! iterated Picard application, remainder certification by contraction,
//! and flowpipe emission over a control step.
//!
//! The local time variable is always the last polynomial variable of a
//! flowpipe model and ranges over `[0, delta]` within one substep.

use thiserror::Error;

use crate::interval::Interval;
use crate::polynomial::SparsePolynomial;
use crate::taylor_model::{TMVector, TaylorModel};

/// `x' = f(x)` with polynomial right-hand sides, one per state component.
/// Control inputs are represented as trailing state components with zero
/// derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialODE {
    rhs: Vec<SparsePolynomial>,
}

impl PolynomialODE {
    pub fn new(rhs: Vec<SparsePolynomial>) -> Self {
        let n = rhs.len();
        assert!(n > 0, "empty ODE");
        for (i, p) in rhs.iter().enumerate() {
            assert_eq!(
                p.num_vars(),
                n,
                "equation {i} is over {} variables, expected {n}",
                p.num_vars()
            );
        }
        PolynomialODE { rhs }
    }

    /// Build the extended square system from `n` state equations over
    /// `n + m` variables by appending `m` zero-derivative control rows.
    pub fn with_zero_derivative_controls(state_rhs: Vec<SparsePolynomial>, controls: usize) -> Self {
        let total = state_rhs.len() + controls;
        let mut rhs: Vec<SparsePolynomial> = state_rhs
            .into_iter()
            .map(|p| {
                assert_eq!(p.num_vars(), total, "state equation variable count");
                p
            })
            .collect();
        rhs.extend((0..controls).map(|_| SparsePolynomial::zero(total)));
        PolynomialODE { rhs }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn equation(&self, i: usize) -> &SparsePolynomial {
        &self.rhs[i]
    }

    pub fn equations(&self) -> &[SparsePolynomial] {
        &self.rhs
    }

    /// Concrete right-hand side evaluation at a full state vector.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.rhs.iter().map(|p| p.eval(x)).collect()
    }
}

/// One integration substep's reachable-set enclosure: a model vector over
/// `(z, t)` with `t in [0, delta]`, covering absolute times
/// `[t_offset, t_offset + delta]` within its control step.
#[derive(Debug, Clone)]
pub struct Flowpipe {
    pub tm: TMVector,
    pub step_index: usize,
    pub t_offset: f64,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(
        "remainder certification failed at substep {substep}, component {component} \
         (width {width:.3e} after {attempts} inflations); reduce the step size"
    )]
    ContractionFailure {
        substep: usize,
        component: usize,
        width: f64,
        attempts: usize,
    },
}

const MAX_INFLATIONS: usize = 30;

/// Cached powers of the state component models, shared across the
/// right-hand-side evaluations of one Picard application.
struct PowerCache<'a> {
    comps: &'a [TaylorModel],
    order: usize,
    pows: Vec<Vec<TaylorModel>>,
}

impl<'a> PowerCache<'a> {
    fn new(comps: &'a [TaylorModel], order: usize) -> Self {
        PowerCache {
            comps,
            order,
            pows: vec![Vec::new(); comps.len()],
        }
    }

    fn power(&mut self, var: usize, e: usize) -> &TaylorModel {
        debug_assert!(e >= 1);
        while self.pows[var].len() < e {
            let next = match self.pows[var].last() {
                None => self.comps[var].clone(),
                Some(prev) => prev.mul(&self.comps[var], self.order),
            };
            self.pows[var].push(next);
        }
        &self.pows[var][e - 1]
    }
}

/// Evaluate a polynomial right-hand side on a vector of models with
/// products truncated at `order`.
fn eval_rhs_on_tms(
    rhs: &SparsePolynomial,
    comps: &[TaylorModel],
    cache: &mut PowerCache,
    order: usize,
) -> TaylorModel {
    let domain = comps[0].domain.clone();
    let mut acc = TaylorModel::constant(0.0, domain.clone(), order);
    for (mono, c) in rhs.terms() {
        let mut factor: Option<TaylorModel> = None;
        for v in 0..rhs.num_vars() {
            let e = mono.exponent(v);
            if e == 0 {
                continue;
            }
            let pw = cache.power(v, e).clone();
            factor = Some(match factor {
                None => pw,
                Some(f) => f.mul(&pw, order),
            });
        }
        let term = match factor {
            None => TaylorModel::constant(*c, domain.clone(), order),
            Some(f) => f.scale(*c),
        };
        acc = acc.add(&term);
    }
    acc
}

/// One Picard application: `x0 + integral_0^t f(g(., s)) ds`. The
/// right-hand side is evaluated with products truncated at total degree
/// `k` and the integration then raises the time degree, so the result
/// polynomial has total degree at most `k + 1`; everything truncated along
/// the way is absorbed into the remainders. `g` ranges over `(z, t)`, `x0`
/// over `z` only.
pub fn picard_apply(f: &PolynomialODE, g: &TMVector, x0: &TMVector, k: usize) -> TMVector {
    let n = f.dim();
    assert_eq!(g.dim(), n, "model vector dimension mismatch");
    assert_eq!(x0.dim(), n, "initial set dimension mismatch");
    let t_idx = g.domain().dim() - 1;
    assert_eq!(x0.domain().dim() + 1, g.domain().dim(), "g must carry a time variable");
    let t_range = g.domain().get(t_idx);

    let g_k = g.with_order(k);
    let mut cache = PowerCache::new(g_k.components(), k);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let integrand = eval_rhs_on_tms(f.equation(j), g_k.components(), &mut cache, k);
        let ipoly = integrand.poly.integrate_time(t_idx);
        // enclosure of the integral of the remainder over t in [0, delta]
        let irem = Interval::new(0.0, t_range.hi) * integrand.rem;
        let integral = TaylorModel::new(ipoly, irem, g.domain().clone(), k + 1);
        let start = x0.component(j).lift_with_var(t_range).with_order(k + 1);
        out.push(start.add(&integral));
    }
    TMVector::new(out)
}

/// Order-k polynomial expansion of the local solution: `k + 1` Picard
/// applications starting from the time-constant extension of `x_local`,
/// keeping polynomial parts only. The result's polynomials are a fixed
/// point of the truncated Picard application.
pub fn solution_expansion(
    f: &PolynomialODE,
    x_local: &TMVector,
    delta: f64,
    k: usize,
) -> TMVector {
    let t_range = Interval::new(0.0, delta);
    let mut g = x_local.lift_with_var(t_range);
    for _ in 0..=k {
        g = strip_remainders(&picard_apply(f, &g, x_local, k));
    }
    g
}

fn strip_remainders(v: &TMVector) -> TMVector {
    TMVector::new(
        v.components()
            .iter()
            .map(|c| TaylorModel::new(c.poly.clone(), Interval::zero(), c.domain.clone(), c.order))
            .collect(),
    )
}

fn with_remainders(phi: &TMVector, rems: &[Interval]) -> TMVector {
    TMVector::new(
        phi.components()
            .iter()
            .zip(rems)
            .map(|(c, r)| TaylorModel::new(c.poly.clone(), *r, c.domain.clone(), c.order))
            .collect(),
    )
}

/// Find a remainder vector `R` such that the Picard application maps
/// `Phi + R` into itself over `t in [0, delta]`, which certifies that
/// `Phi + R` encloses the exact solution. Starts from twice the defect of
/// one application and doubles on failure; two extra applications tighten
/// the certified remainder.
pub fn remainder_certify(
    f: &PolynomialODE,
    phi: &TMVector,
    x_local: &TMVector,
    k: usize,
) -> Result<Vec<Interval>, FlowError> {
    let defect = picard_apply(f, phi, x_local, k);
    debug_assert!(polys_equal(phi, &defect), "expansion not converged");
    let mut r: Vec<Interval> = defect
        .components()
        .iter()
        .map(|c| Interval::symmetric(2.0 * c.rem.magnitude()))
        .collect();

    let mut attempts = 0;
    while attempts < MAX_INFLATIONS {
        if r.iter().any(|ri| !ri.lo.is_finite() || !ri.hi.is_finite()) {
            break; // the inflation diverged; an infinite box proves nothing
        }
        attempts += 1;
        let candidate = with_remainders(phi, &r);
        let image = picard_apply(f, &candidate, x_local, k);
        let contracted = image
            .components()
            .iter()
            .zip(&r)
            .all(|(c, ri)| c.rem.is_subset_of(ri));
        if contracted {
            let mut tight: Vec<Interval> =
                image.components().iter().map(|c| c.rem).collect();
            for _ in 0..2 {
                let refined = picard_apply(f, &with_remainders(phi, &tight), x_local, k);
                tight = refined.components().iter().map(|c| c.rem).collect();
            }
            return Ok(tight);
        }
        // widen only the components that escaped; inflating the satisfied
        // ones would feed coupled components a moving target
        for (ri, c) in r.iter_mut().zip(image.components()) {
            if !c.rem.is_subset_of(ri) {
                let grown = (2.0 * ri.magnitude()).max(1.1 * c.rem.magnitude());
                *ri = Interval::symmetric(grown);
            }
        }
    }

    let (component, width) = match r.iter().position(|ri| !ri.lo.is_finite() || !ri.hi.is_finite())
    {
        Some(i) => (i, f64::INFINITY),
        None => {
            let image = picard_apply(f, &with_remainders(phi, &r), x_local, k);
            image
                .components()
                .iter()
                .zip(&r)
                .enumerate()
                .filter(|(_, (c, ri))| !c.rem.is_subset_of(ri))
                .map(|(i, (_, ri))| (i, ri.width()))
                .next()
                .unwrap_or((0, r[0].width()))
        }
    };
    Err(FlowError::ContractionFailure {
        substep: 0,
        component,
        width,
        attempts: MAX_INFLATIONS,
    })
}

fn polys_equal(a: &TMVector, b: &TMVector) -> bool {
    a.components()
        .iter()
        .zip(b.components())
        .all(|(x, y)| x.poly == y.poly)
}

/// Integrate one control step of length `delta_c` in `n_substeps` flowpipe
/// substeps of size `delta_c / n_substeps`.
///
/// `x` holds the state components, `u` the (time-constant) control
/// components sharing `x`'s domain; the extended vector evolves under `f`,
/// which must cover all `x.dim() + u.dim()` components. Returned flowpipes
/// carry the state components only; `x_next` is the state part of the last
/// flowpipe evaluated at the end of the substep.
pub fn integrate_control_step(
    f: &PolynomialODE,
    x: &TMVector,
    u: Option<&TMVector>,
    delta_c: f64,
    n_substeps: usize,
    k: usize,
) -> Result<(Vec<Flowpipe>, TMVector), FlowError> {
    assert!(n_substeps >= 1);
    assert!(delta_c > 0.0);
    let n_states = x.dim();
    let mut local = match u {
        Some(u) => x.append(u),
        None => x.clone(),
    };
    assert_eq!(f.dim(), local.dim(), "ODE covers state and control components");
    let delta = delta_c / n_substeps as f64;

    let mut pipes = Vec::with_capacity(n_substeps);
    for i in 0..n_substeps {
        let phi = solution_expansion(f, &local, delta, k);
        let rems = remainder_certify(f, &phi, &local, k).map_err(|e| match e {
            FlowError::ContractionFailure {
                component,
                width,
                attempts,
                ..
            } => FlowError::ContractionFailure {
                substep: i,
                component,
                width,
                attempts,
            },
        })?;
        let enclosed = with_remainders(&phi, &rems);
        pipes.push(Flowpipe {
            tm: enclosed.head(n_states),
            step_index: i,
            t_offset: i as f64 * delta,
        });
        // substituting t keeps the total degree at k, so the next substep's
        // local initial set is a regular order-k model again
        local = enclosed.eval_time(delta).with_order(k);
    }
    Ok((pipes, local.head(n_states)))
}
