//! Taylor model arithmetic: pairs `(p, I)` of a bounded-degree polynomial
//! over a box domain and an interval remainder.
//!
//! A model stands for the set `{p(z) + r | z in domain, r in I}` and every
//! operation preserves point-wise containment of the functions it
//! overapproximates. Coefficient arithmetic runs in plain `f64`; each
//! operation widens its remainder by a symmetric roundoff pad sized from
//! the number of coefficient operations and a magnitude bound, which keeps
//! containment honest without interval coefficients.

use crate::interval::Interval;
use crate::polynomial::{Domain, SparsePolynomial};

/// Symmetric interval absorbing coefficient rounding error: one half-ulp
/// per floating operation at the given magnitude scale.
fn roundoff_pad(flops: usize, magnitude: f64) -> Interval {
    if flops == 0 || magnitude == 0.0 {
        return Interval::zero();
    }
    Interval::symmetric(flops as f64 * f64::EPSILON * magnitude)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorModel {
    pub poly: SparsePolynomial,
    pub rem: Interval,
    pub domain: Domain,
    pub order: usize,
}

impl TaylorModel {
    pub fn new(poly: SparsePolynomial, rem: Interval, domain: Domain, order: usize) -> Self {
        assert_eq!(poly.num_vars(), domain.dim(), "domain dimension mismatch");
        assert!(poly.degree() <= order, "polynomial degree exceeds order");
        TaylorModel {
            poly,
            rem,
            domain,
            order,
        }
    }

    pub fn constant(c: f64, domain: Domain, order: usize) -> Self {
        TaylorModel {
            poly: SparsePolynomial::constant(domain.dim(), c),
            rem: Interval::zero(),
            domain,
            order,
        }
    }

    /// Interval enclosure of the represented set: `B(p) + I`.
    pub fn range(&self) -> Interval {
        self.poly.bound(&self.domain) + self.rem
    }

    /// The represented set's slice at one domain point: `p(z) + I`.
    /// The polynomial evaluation itself is plain floating point; callers
    /// checking containment should allow for its roundoff.
    pub fn enclosure_at(&self, z: &[f64]) -> Interval {
        Interval::point(self.poly.eval(z)) + self.rem
    }

    pub fn add(&self, other: &TaylorModel) -> TaylorModel {
        assert_eq!(self.domain, other.domain, "domain mismatch");
        assert_eq!(self.order, other.order, "order mismatch");
        // merging disjoint monomials is exact; only overlaps round
        let flops = self.poly.overlap_count(&other.poly);
        let poly = self.poly.add(&other.poly);
        let mag = self.poly.max_abs_coeff().max(other.poly.max_abs_coeff());
        let pad = roundoff_pad(flops, mag);
        TaylorModel {
            poly,
            rem: self.rem + other.rem + pad,
            domain: self.domain.clone(),
            order: self.order,
        }
    }

    /// Order-`k` product: the polynomial product is truncated at degree `k`
    /// and the remainder follows
    /// `I_f*B(p_g) + B(p_f)*I_g + I_f*I_g + B(r_k)` with `r_k` the truncated
    /// part.
    pub fn mul(&self, other: &TaylorModel, k: usize) -> TaylorModel {
        assert_eq!(self.domain, other.domain, "domain mismatch");
        let (low, high) = self.poly.mul_split(&other.poly, k);

        let zero = Interval::zero();
        let mut rem = Interval::zero();
        if self.rem != zero {
            rem = rem + self.rem * other.poly.bound(&self.domain);
        }
        if other.rem != zero {
            rem = rem + self.poly.bound(&self.domain) * other.rem;
        }
        if self.rem != zero && other.rem != zero {
            rem = rem + self.rem * other.rem;
        }
        if !high.is_zero() {
            rem = rem + high.bound(&self.domain);
        }

        let flops = 2 * self.poly.num_terms() * other.poly.num_terms();
        let mag = self.poly.sum_abs_coeff() * other.poly.sum_abs_coeff();
        TaylorModel {
            poly: low,
            rem: rem + roundoff_pad(flops, mag),
            domain: self.domain.clone(),
            order: k,
        }
    }

    /// Substitute this model into a univariate polynomial `outer` (Horner,
    /// products truncated at this model's order) and add `outer_rem` to the
    /// final remainder. The result contains `sigma(f(z))` pointwise whenever
    /// `(outer, outer_rem)` overapproximates `sigma` on this model's range.
    pub fn compose_univariate(
        outer: &SparsePolynomial,
        outer_rem: Interval,
        t: &TaylorModel,
    ) -> TaylorModel {
        assert_eq!(outer.num_vars(), 1, "outer polynomial must be univariate");
        let k = t.order;
        let deg = outer.degree();
        let mut acc = TaylorModel::constant(outer.coefficient(&[deg]), t.domain.clone(), k);
        for j in (0..deg).rev() {
            acc = acc.mul(t, k);
            let c = outer.coefficient(&[j]);
            if c != 0.0 {
                acc = acc.add(&TaylorModel::constant(c, t.domain.clone(), k));
            }
        }
        acc.rem = acc.rem + outer_rem;
        acc
    }

    pub fn scale(&self, c: f64) -> TaylorModel {
        let poly = self.poly.scale(c);
        let pad = roundoff_pad(poly.num_terms(), poly.max_abs_coeff());
        TaylorModel {
            poly,
            rem: self.rem.scale(c) + pad,
            domain: self.domain.clone(),
            order: self.order,
        }
    }

    /// Re-truncate to a (possibly lower) order, bounding dropped terms into
    /// the remainder.
    pub fn with_order(&self, k: usize) -> TaylorModel {
        if self.poly.degree() <= k {
            let mut tm = self.clone();
            tm.order = k;
            return tm;
        }
        let (low, high) = self.poly.truncate(k);
        TaylorModel {
            poly: low,
            rem: self.rem + high.bound(&self.domain),
            domain: self.domain.clone(),
            order: k,
        }
    }

    /// Append one polynomial variable (used for the local time variable of
    /// flowpipes; the new variable does not occur yet).
    pub fn lift_with_var(&self, range: Interval) -> TaylorModel {
        TaylorModel {
            poly: self.poly.extend_vars(self.poly.num_vars() + 1),
            rem: self.rem,
            domain: self.domain.extended(range),
            order: self.order,
        }
    }

    /// Substitute the last variable by a point value and drop it.
    pub fn eval_last_var(&self, value: f64) -> TaylorModel {
        let last = self.poly.num_vars() - 1;
        assert!(
            self.domain.get(last).contains(value),
            "substituted value {value} outside the variable's range {}",
            self.domain.get(last)
        );
        let substituted = self.poly.eval_var_at(last, value);
        let mag = self.poly.sum_abs_coeff() * value.abs().max(1.0).powi(self.poly.degree() as i32);
        let pad = roundoff_pad(2 * self.poly.num_terms(), mag);
        TaylorModel {
            poly: substituted.drop_var(last),
            rem: self.rem + pad,
            domain: self.domain.without_last(),
            order: self.order,
        }
    }
}

/// A vector of Taylor models sharing one domain and order.
#[derive(Debug, Clone, PartialEq)]
pub struct TMVector {
    components: Vec<TaylorModel>,
}

impl TMVector {
    pub fn new(components: Vec<TaylorModel>) -> Self {
        assert!(!components.is_empty(), "empty TM vector");
        let d = &components[0].domain;
        let k = components[0].order;
        for c in &components[1..] {
            assert_eq!(&c.domain, d, "components must share a domain");
            assert_eq!(c.order, k, "components must share an order");
        }
        TMVector { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &TaylorModel {
        &self.components[i]
    }

    pub fn components(&self) -> &[TaylorModel] {
        &self.components
    }

    pub fn into_components(self) -> Vec<TaylorModel> {
        self.components
    }

    pub fn domain(&self) -> &Domain {
        &self.components[0].domain
    }

    pub fn order(&self) -> usize {
        self.components[0].order
    }

    pub fn range_box(&self) -> Vec<Interval> {
        self.components.iter().map(|c| c.range()).collect()
    }

    /// Affine image `W * v + b`; polynomials are scaled and merged exactly,
    /// remainders via interval arithmetic.
    pub fn linear_map(&self, w: &[Vec<f64>], b: &[f64]) -> TMVector {
        assert_eq!(w.len(), b.len(), "weight/bias row mismatch");
        let n = self.dim();
        let num_vars = self.components[0].poly.num_vars();
        let mut out = Vec::with_capacity(w.len());
        for (row, bias) in w.iter().zip(b) {
            assert_eq!(row.len(), n, "weight row length mismatch");
            let mut poly = SparsePolynomial::constant(num_vars, *bias);
            let mut rem = Interval::zero();
            let mut flops = 0usize;
            let mut mag = bias.abs();
            for (wl, tm) in row.iter().zip(&self.components) {
                if *wl != 0.0 {
                    let scaled = tm.poly.scale(*wl);
                    flops += scaled.num_terms() + poly.overlap_count(&scaled);
                    poly = poly.add(&scaled);
                    rem = rem + tm.rem.scale(*wl);
                    mag += wl.abs() * tm.poly.max_abs_coeff();
                }
            }
            out.push(TaylorModel {
                poly,
                rem: rem + roundoff_pad(flops, mag),
                domain: self.domain().clone(),
                order: self.order(),
            });
        }
        TMVector::new(out)
    }

    /// Substitute the shared trailing time variable by `t_value`; the
    /// result ranges over the domain variables only.
    pub fn eval_time(&self, t_value: f64) -> TMVector {
        TMVector::new(
            self.components
                .iter()
                .map(|c| c.eval_last_var(t_value))
                .collect(),
        )
    }

    /// Concatenate two vectors over the same domain and order.
    pub fn append(&self, other: &TMVector) -> TMVector {
        let mut comps = self.components.clone();
        comps.extend(other.components.iter().cloned());
        TMVector::new(comps)
    }

    /// Keep the first `n` components.
    pub fn head(&self, n: usize) -> TMVector {
        TMVector::new(self.components[..n].to_vec())
    }

    pub fn with_order(&self, k: usize) -> TMVector {
        TMVector::new(self.components.iter().map(|c| c.with_order(k)).collect())
    }

    pub fn lift_with_var(&self, range: Interval) -> TMVector {
        TMVector::new(
            self.components
                .iter()
                .map(|c| c.lift_with_var(range))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit1() -> Domain {
        Domain::unit(1)
    }

    fn tm1(terms: &[(usize, f64)], rem: Interval, order: usize) -> TaylorModel {
        let spec: Vec<(Vec<usize>, f64)> = terms.iter().map(|(e, c)| (vec![*e], *c)).collect();
        let refs: Vec<(&[usize], f64)> = spec.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
        TaylorModel::new(
            SparsePolynomial::from_terms(1, &refs),
            rem,
            unit1(),
            order,
        )
    }

    #[test]
    fn add_order4_example() {
        // (1 - 0.5 x^2, [-0.1, 0.1]) + (x + 0.1 x^4, [-0.2, 0.2]) over
        // x in [-1, 1]: polynomial part is exact, remainder is [-0.3, 0.3]
        // up to the roundoff pad.
        let a = tm1(&[(0, 1.0), (2, -0.5)], Interval::new(-0.1, 0.1), 4);
        let b = tm1(&[(1, 1.0), (4, 0.1)], Interval::new(-0.2, 0.2), 4);
        let s = a.add(&b);
        assert_eq!(
            s.poly,
            SparsePolynomial::from_terms(
                1,
                &[(&[0], 1.0), (&[1], 1.0), (&[2], -0.5), (&[4], 0.1)]
            )
        );
        assert!(Interval::new(-0.3, 0.3).is_subset_of(&s.rem));
        assert!(s.rem.is_subset_of(&Interval::new(-0.3, 0.3).inflate(1e-10)));
    }

    #[test]
    fn add_identity_and_cancellation() {
        let a = tm1(&[(1, 2.0), (3, -0.75)], Interval::new(-0.05, 0.1), 4);
        let zero = TaylorModel::constant(0.0, unit1(), 4);
        let s = a.add(&zero);
        assert_eq!(s.poly, a.poly);
        assert!(a.rem.is_subset_of(&s.rem) && s.rem.is_subset_of(&a.rem.inflate(1e-12)));

        let neg = TaylorModel::new(a.poly.scale(-1.0), Interval::zero(), unit1(), 4);
        let c = a.add(&neg);
        assert!(c.poly.is_zero());
        assert!(a.rem.is_subset_of(&c.rem));
    }

    #[test]
    fn mul_order4_example_against_formula() {
        // Interval-arithmetic oracle for each remainder term:
        //   I_f*B(p_g) = [-0.1,0.1]*[-1,1.1]   = [-0.11, 0.11]
        //   B(p_f)*I_g = [0.5,1]*[-0.2,0.2]    = [-0.2, 0.2]
        //   I_f*I_g    = [-0.02, 0.02]
        //   B(r_4)     = bound(-0.05 x^6)      = [-0.05, 0]
        // total [-0.38, 0.33]; the polynomial part is the hand expansion
        // truncated at order 4.
        let a = tm1(&[(0, 1.0), (2, -0.5)], Interval::new(-0.1, 0.1), 4);
        let b = tm1(&[(1, 1.0), (4, 0.1)], Interval::new(-0.2, 0.2), 4);
        let p = a.mul(&b, 4);
        assert_eq!(
            p.poly,
            SparsePolynomial::from_terms(1, &[(&[1], 1.0), (&[3], -0.5), (&[4], 0.1)])
        );
        assert!(Interval::new(-0.38, 0.33).is_subset_of(&p.rem));
        assert!(p.rem.is_subset_of(&Interval::new(-0.38, 0.33).inflate(1e-10)));
    }

    #[test]
    fn mul_identities() {
        let a = tm1(&[(0, 1.0), (2, -0.5)], Interval::new(-0.1, 0.1), 4);
        let one = TaylorModel::constant(1.0, unit1(), 4);
        let p = a.mul(&one, 4);
        assert_eq!(p.poly, a.poly);
        assert!(a.rem.is_subset_of(&p.rem) && p.rem.is_subset_of(&a.rem.inflate(1e-12)));

        let zero = TaylorModel::constant(0.0, unit1(), 4);
        let p = a.mul(&zero, 4);
        assert!(p.poly.is_zero());
        assert!(p.rem.contains(0.0) && p.rem.magnitude() < 1e-12);
    }

    #[test]
    fn compose_square_example() {
        // y^2 composed with (x, [-0.1, 0.1]) at order 2: expanding
        // (x + r)^2 gives remainder 2*[-0.1,0.1]*B(x) + [-0.1,0.1]^2
        // = [-0.21, 0.21].
        let t = tm1(&[(1, 1.0)], Interval::new(-0.1, 0.1), 2);
        let y2 = SparsePolynomial::from_terms(1, &[(&[2], 1.0)]);
        let c = TaylorModel::compose_univariate(&y2, Interval::zero(), &t);
        assert_eq!(c.poly, SparsePolynomial::from_terms(1, &[(&[2], 1.0)]));
        assert!(Interval::new(-0.21, 0.21).is_subset_of(&c.rem));
        assert!(c.rem.is_subset_of(&Interval::new(-0.21, 0.21).inflate(1e-10)));
    }

    #[test]
    fn compose_identity_and_constant() {
        let t = tm1(&[(0, 0.3), (1, 0.5), (2, -0.25)], Interval::new(-0.01, 0.02), 3);
        let id = SparsePolynomial::from_terms(1, &[(&[1], 1.0)]);
        let c = TaylorModel::compose_univariate(&id, Interval::zero(), &t);
        assert_eq!(c.poly, t.poly);
        assert!(t.rem.is_subset_of(&c.rem) && c.rem.is_subset_of(&t.rem.inflate(1e-12)));

        let k = SparsePolynomial::constant(1, 0.75);
        let c = TaylorModel::compose_univariate(&k, Interval::new(-0.5, 0.5), &t);
        assert_eq!(c.poly, SparsePolynomial::constant(1, 0.75));
        assert_eq!(c.rem, Interval::new(-0.5, 0.5));
    }

    #[test]
    fn range_examples() {
        let a = tm1(&[(1, 1.0)], Interval::new(-0.1, 0.1), 2);
        assert_eq!(a.range(), Interval::new(-1.1, 1.1));

        let c = tm1(&[(0, 2.5)], Interval::new(-0.5, 1.0), 2);
        assert_eq!(c.range(), Interval::new(2.0, 3.5));

        let sq = tm1(&[(2, 1.0)], Interval::zero(), 2);
        assert_eq!(sq.range(), Interval::new(0.0, 1.0));
    }

    #[test]
    fn eval_time_examples() {
        // models over (z, t) with t in [0, 0.5]
        let domain = Domain::unit(1).extended(Interval::new(0.0, 0.5));
        let rem = Interval::new(-0.01, 0.01);
        // z + t*z
        let a = TaylorModel::new(
            SparsePolynomial::from_terms(2, &[(&[1, 0], 1.0), (&[1, 1], 1.0)]),
            rem,
            domain.clone(),
            2,
        );
        let at0 = TMVector::new(vec![a]).eval_time(0.0);
        assert_eq!(
            at0.component(0).poly,
            SparsePolynomial::from_terms(1, &[(&[1], 1.0)])
        );
        assert!(rem.is_subset_of(&at0.component(0).rem));

        // z + t at t = 0.5
        let b = TaylorModel::new(
            SparsePolynomial::from_terms(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]),
            rem,
            domain,
            2,
        );
        let atd = TMVector::new(vec![b]).eval_time(0.5);
        assert_eq!(
            atd.component(0).poly,
            SparsePolynomial::from_terms(1, &[(&[0], 0.5), (&[1], 1.0)])
        );
    }

    #[test]
    #[should_panic(expected = "outside the variable's range")]
    fn eval_time_out_of_range_panics() {
        let domain = Domain::unit(1).extended(Interval::new(0.0, 0.5));
        let a = TaylorModel::new(
            SparsePolynomial::from_terms(2, &[(&[1, 0], 1.0)]),
            Interval::zero(),
            domain,
            2,
        );
        let _ = TMVector::new(vec![a]).eval_time(0.75);
    }

    #[test]
    fn linear_map_identity_and_constant() {
        let a = tm1(&[(1, 1.0)], Interval::new(-0.1, 0.1), 3);
        let b = tm1(&[(0, 0.5), (2, -1.0)], Interval::new(-0.2, 0.0), 3);
        let v = TMVector::new(vec![a.clone(), b.clone()]);

        let id = v.linear_map(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0]);
        assert_eq!(id.component(0).poly, a.poly);
        assert_eq!(id.component(1).poly, b.poly);
        assert!(a.rem.is_subset_of(&id.component(0).rem));

        let z = v.linear_map(&[vec![0.0, 0.0]], &[3.25]);
        assert_eq!(z.component(0).poly, SparsePolynomial::constant(1, 3.25));
        assert_eq!(z.component(0).rem, Interval::zero());
    }

    #[test]
    fn linear_map_reproduces_figure_preactivation() {
        // Second-hidden-layer output models feeding a 1x2 output map
        // W = [2, 1], b = 0; the result must match scale-and-add done by
        // hand and must contain sampled concrete values.
        let d2 = Domain::unit(2);
        let p21 = SparsePolynomial::from_terms(
            2,
            &[
                (&[0, 0], 0.308),
                (&[0, 1], -0.045),
                (&[1, 0], 0.023),
                (&[0, 2], 0.005),
                (&[1, 1], -0.005),
                (&[2, 0], -0.002),
            ],
        );
        let p22 = SparsePolynomial::from_terms(
            2,
            &[
                (&[0, 0], 0.930),
                (&[0, 1], 0.014),
                (&[1, 0], -0.007),
                (&[0, 2], -0.002),
                (&[1, 1], -0.002),
                (&[2, 0], -0.001),
            ],
        );
        let t21 = TaylorModel::new(p21.clone(), Interval::new(-0.457, 0.457), d2.clone(), 2);
        let t22 = TaylorModel::new(p22.clone(), Interval::new(-0.065, 0.065), d2.clone(), 2);
        let v = TMVector::new(vec![t21, t22]);
        let pre = v.linear_map(&[vec![2.0, 1.0]], &[0.0]);

        let expected_poly = p21.scale(2.0).add(&p22);
        assert_eq!(pre.component(0).poly, expected_poly);
        let expected_rem = Interval::new(-0.457, 0.457).scale(2.0) + Interval::new(-0.065, 0.065);
        assert!(expected_rem.is_subset_of(&pre.component(0).rem.inflate(1e-12)));
        assert!(pre.component(0).rem.is_subset_of(&expected_rem.inflate(1e-12)));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let z = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            let r1: f64 = rng.gen_range(-0.457..=0.457);
            let r2: f64 = rng.gen_range(-0.065..=0.065);
            let concrete = 2.0 * (p21.eval(&z) + r1) + (p22.eval(&z) + r2);
            let boxed = pre.component(0).enclosure_at(&z).inflate(1e-12);
            assert!(boxed.contains(concrete));
        }
    }

    #[test]
    fn pointwise_soundness_under_sampling() {
        // a represents f(z) = z - 0.5 z^3 exactly; b represents
        // g(z) = 0.3 + 0.25 z^4 + 0.05 sin(10 z) with the oscillation
        // absorbed in the remainder.
        let a = tm1(&[(1, 1.0), (3, -0.5)], Interval::zero(), 4);
        let b = tm1(&[(0, 0.3), (4, 0.25)], Interval::new(-0.05, 0.05), 4);
        let f = |z: f64| z - 0.5 * z * z * z;
        let g = |z: f64| 0.3 + 0.25 * z.powi(4) + 0.05 * (10.0 * z).sin();

        let sum = a.add(&b);
        let prod = a.mul(&b, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1_000 {
            let z = rng.gen_range(-1.0..=1.0);
            assert!(sum.enclosure_at(&[z]).inflate(1e-12).contains(f(z) + g(z)));
            assert!(prod.enclosure_at(&[z]).inflate(1e-12).contains(f(z) * g(z)));
        }

        // no catastrophic widening in addition
        let r = sum.range();
        let ab = a.range() + b.range();
        assert!(r.is_subset_of(&ab.inflate(1e-10)));
    }

    #[test]
    fn with_order_truncates_into_remainder() {
        let a = tm1(&[(1, 1.0), (4, 0.5)], Interval::zero(), 4);
        let t = a.with_order(2);
        assert_eq!(t.poly, SparsePolynomial::from_terms(1, &[(&[1], 1.0)]));
        assert!(Interval::new(0.0, 0.5).is_subset_of(&t.rem));
        assert_eq!(t.order, 2);
    }
}
