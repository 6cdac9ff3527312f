//! Sparse multivariate polynomials with order truncation and conservative
//! range bounding.
//!
//! Terms live in a `BTreeMap` keyed by graded-lex monomials, so iteration
//! order (and therefore every accumulated floating-point result) is
//! deterministic. Coefficient arithmetic is plain `f64`; rounding error is
//! accounted for by the Taylor model layer, not here.

use std::collections::BTreeMap;
use std::fmt;

use crate::interval::Interval;

/// Hard cap on the number of polynomial variables (state dimension plus
/// appended controls and the local time variable).
pub const MAX_VARS: usize = 16;

/// Exponent vector of one term, stored densely. Ordering is graded
/// lexicographic: total degree first, then lex on the exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    deg: u16,
    exp: [u8; MAX_VARS],
}

impl Monomial {
    pub fn from_exponents(exps: &[usize]) -> Self {
        assert!(exps.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut exp = [0u8; MAX_VARS];
        let mut deg = 0u16;
        for (slot, &e) in exp.iter_mut().zip(exps) {
            assert!(e <= u8::MAX as usize, "exponent too large: {e}");
            *slot = e as u8;
            deg += e as u16;
        }
        Monomial { deg, exp }
    }

    pub fn constant() -> Self {
        Monomial {
            deg: 0,
            exp: [0u8; MAX_VARS],
        }
    }

    pub fn degree(&self) -> usize {
        self.deg as usize
    }

    pub fn exponent(&self, var: usize) -> usize {
        self.exp[var] as usize
    }

    fn product(&self, other: &Monomial) -> Monomial {
        let mut exp = [0u8; MAX_VARS];
        for i in 0..MAX_VARS {
            let e = self.exp[i] as u16 + other.exp[i] as u16;
            assert!(e <= u8::MAX as u16, "exponent overflow");
            exp[i] = e as u8;
        }
        Monomial {
            deg: self.deg + other.deg,
            exp,
        }
    }
}

/// A multivariate polynomial in canonical form: no stored zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    num_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl SparsePolynomial {
    pub fn zero(num_vars: usize) -> Self {
        assert!(num_vars <= MAX_VARS);
        SparsePolynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        if c != 0.0 {
            p.terms.insert(Monomial::constant(), c);
        }
        p
    }

    /// The monomial `x_var`.
    pub fn var(num_vars: usize, var: usize) -> Self {
        assert!(var < num_vars);
        let mut exps = vec![0usize; num_vars];
        exps[var] = 1;
        let mut p = Self::zero(num_vars);
        p.terms.insert(Monomial::from_exponents(&exps), 1.0);
        p
    }

    pub fn from_terms(num_vars: usize, terms: &[(&[usize], f64)]) -> Self {
        let mut p = Self::zero(num_vars);
        for (exps, c) in terms {
            assert_eq!(exps.len(), num_vars, "exponent vector length");
            p.add_term(Monomial::from_exponents(exps), *c);
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .next_back()
            .map_or(0, |m| m.degree())
    }

    pub fn coefficient(&self, exps: &[usize]) -> f64 {
        assert_eq!(exps.len(), self.num_vars);
        self.terms
            .get(&Monomial::from_exponents(exps))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn constant_term(&self) -> f64 {
        self.terms
            .get(&Monomial::constant())
            .copied()
            .unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Number of monomials present in both polynomials; merging the rest is
    /// exact, only these incur coefficient additions.
    pub fn overlap_count(&self, other: &SparsePolynomial) -> usize {
        let (small, big) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .terms
            .keys()
            .filter(|m| big.terms.contains_key(m))
            .count()
    }

    pub fn sum_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert!(c.is_finite(), "non-finite coefficient");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &SparsePolynomial) -> SparsePolynomial {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, *c);
        }
        out
    }

    pub fn sub(&self, other: &SparsePolynomial) -> SparsePolynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> SparsePolynomial {
        if c == 0.0 {
            return SparsePolynomial::zero(self.num_vars);
        }
        let mut out = SparsePolynomial::zero(self.num_vars);
        for (m, a) in &self.terms {
            out.add_term(*m, a * c);
        }
        out
    }

    /// Exact distributive product.
    pub fn mul(&self, other: &SparsePolynomial) -> SparsePolynomial {
        let (mut low, high) = self.mul_split(other, usize::MAX);
        debug_assert!(high.is_zero());
        low.terms.extend(high.terms);
        low
    }

    /// Product split at total degree `k`: the first component holds all
    /// result terms of degree <= k, the second holds the rest. Accumulation
    /// order per monomial matches `mul` followed by `truncate` exactly.
    pub fn mul_split(&self, other: &SparsePolynomial, k: usize) -> (SparsePolynomial, SparsePolynomial) {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        let mut low = SparsePolynomial::zero(self.num_vars);
        let mut high = SparsePolynomial::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.product(mb);
                let c = ca * cb;
                if m.degree() <= k {
                    low.add_term(m, c);
                } else {
                    high.add_term(m, c);
                }
            }
        }
        (low, high)
    }

    /// Split into terms of total degree <= k and the remaining high part;
    /// `low + high` reconstructs the input exactly.
    pub fn truncate(&self, k: usize) -> (SparsePolynomial, SparsePolynomial) {
        let mut low = SparsePolynomial::zero(self.num_vars);
        let mut high = SparsePolynomial::zero(self.num_vars);
        for (m, c) in &self.terms {
            if m.degree() <= k {
                low.terms.insert(*m, *c);
            } else {
                high.terms.insert(*m, *c);
            }
        }
        (low, high)
    }

    /// Interval enclosure of the range over `domain`, by monomial-wise
    /// interval evaluation.
    pub fn bound(&self, domain: &Domain) -> Interval {
        assert_eq!(self.num_vars, domain.dim(), "domain dimension mismatch");
        let mut acc = Interval::zero();
        for (m, c) in &self.terms {
            let mut mono = Interval::point(1.0);
            for v in 0..self.num_vars {
                let e = m.exponent(v);
                if e > 0 {
                    mono = mono * domain.get(v).pow(e as u32);
                }
            }
            acc = acc + mono.scale(*c);
        }
        acc
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.num_vars, "point dimension mismatch");
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = *c;
            for v in 0..self.num_vars {
                let e = m.exponent(v);
                if e > 0 {
                    term *= point[v].powi(e as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Formal derivative of a univariate polynomial.
    pub fn derivative_1d(&self) -> SparsePolynomial {
        assert_eq!(self.num_vars, 1, "derivative_1d requires one variable");
        let mut out = SparsePolynomial::zero(1);
        for (m, c) in &self.terms {
            let e = m.exponent(0);
            if e > 0 {
                out.add_term(Monomial::from_exponents(&[e - 1]), c * e as f64);
            }
        }
        out
    }

    /// Antiderivative in variable `t_index` with zero constant of
    /// integration.
    pub fn integrate_time(&self, t_index: usize) -> SparsePolynomial {
        assert!(t_index < self.num_vars, "time index out of range");
        let mut out = SparsePolynomial::zero(self.num_vars);
        for (m, c) in &self.terms {
            let mut exps: Vec<usize> = (0..self.num_vars).map(|v| m.exponent(v)).collect();
            exps[t_index] += 1;
            out.add_term(Monomial::from_exponents(&exps), c / exps[t_index] as f64);
        }
        out
    }

    /// Horner substitution of `g` into the univariate `self`, truncated at
    /// total degree `k`. Returns the kept polynomial and an interval bound
    /// (over `domain`) on everything truncated away along the way.
    pub fn compose_univariate(
        &self,
        g: &SparsePolynomial,
        domain: &Domain,
        k: usize,
    ) -> (SparsePolynomial, Interval) {
        assert_eq!(self.num_vars, 1, "outer polynomial must be univariate");
        assert_eq!(g.num_vars(), domain.dim(), "domain dimension mismatch");
        let deg = self.degree();
        let coeff = |e: usize| self.coefficient(&[e]);
        let mut acc = SparsePolynomial::constant(g.num_vars, coeff(deg));
        let mut err = Interval::zero();
        let g_bound = g.bound(domain);
        for j in (0..deg).rev() {
            let (low, high) = acc.mul_split(g, k);
            // previously dropped terms get multiplied by g as well
            err = err * g_bound + high.bound(domain);
            acc = low;
            let c = coeff(j);
            if c != 0.0 {
                acc = acc.add(&SparsePolynomial::constant(g.num_vars, c));
            }
        }
        (acc, err)
    }

    /// Reinterpret over a larger variable set; new variables do not occur.
    pub fn extend_vars(&self, new_num_vars: usize) -> SparsePolynomial {
        assert!(new_num_vars >= self.num_vars && new_num_vars <= MAX_VARS);
        SparsePolynomial {
            num_vars: new_num_vars,
            terms: self.terms.clone(),
        }
    }

    /// Substitute `x_var = value`, folding the factor into coefficients.
    pub fn eval_var_at(&self, var: usize, value: f64) -> SparsePolynomial {
        assert!(var < self.num_vars);
        let mut out = SparsePolynomial::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            let mut exps: Vec<usize> = (0..self.num_vars).map(|v| m.exponent(v)).collect();
            exps[var] = 0;
            let factor = if e > 0 { value.powi(e as i32) } else { 1.0 };
            out.add_term(Monomial::from_exponents(&exps), c * factor);
        }
        out
    }

    /// Remove a variable that no longer occurs in any term.
    pub fn drop_var(&self, var: usize) -> SparsePolynomial {
        assert!(var < self.num_vars);
        let mut out = SparsePolynomial::zero(self.num_vars - 1);
        for (m, c) in &self.terms {
            assert_eq!(m.exponent(var), 0, "variable {var} still occurs");
            let exps: Vec<usize> = (0..self.num_vars)
                .filter(|&v| v != var)
                .map(|v| m.exponent(v))
                .collect();
            out.add_term(Monomial::from_exponents(&exps), *c);
        }
        out
    }

    /// Render with the given variable names, terms in graded-lex order.
    pub fn format_with_vars(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.num_vars);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mut factors = Vec::new();
            for v in 0..self.num_vars {
                match m.exponent(v) {
                    0 => {}
                    1 => factors.push(names[v].clone()),
                    e => factors.push(format!("{}^{}", names[v], e)),
                }
            }
            let mag = c.abs();
            let lead = if i == 0 {
                if *c < 0.0 {
                    "-".to_string()
                } else {
                    String::new()
                }
            } else if *c < 0.0 {
                " - ".to_string()
            } else {
                " + ".to_string()
            };
            out.push_str(&lead);
            if factors.is_empty() {
                out.push_str(&format!("{mag}"));
            } else if mag == 1.0 {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format!("{mag}*{}", factors.join("*")));
            }
        }
        out
    }
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.num_vars).map(|v| format!("x{v}")).collect();
        write!(f, "{}", self.format_with_vars(&names))
    }
}

/// A box in R^n: one interval per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    boxes: Vec<Interval>,
}

impl Domain {
    pub fn new(boxes: Vec<Interval>) -> Self {
        Domain { boxes }
    }

    /// The symmetric unit box `[-1, 1]^n`.
    pub fn unit(dim: usize) -> Self {
        Domain {
            boxes: vec![Interval::new(-1.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.boxes.len()
    }

    pub fn get(&self, i: usize) -> Interval {
        self.boxes[i]
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.boxes
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.boxes).all(|(xi, b)| b.contains(*xi))
    }

    /// Append one more variable's range.
    pub fn extended(&self, iv: Interval) -> Domain {
        let mut boxes = self.boxes.clone();
        boxes.push(iv);
        Domain { boxes }
    }

    /// Drop the last variable's range.
    pub fn without_last(&self) -> Domain {
        let mut boxes = self.boxes.clone();
        boxes.pop();
        Domain { boxes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1(terms: &[(usize, f64)]) -> SparsePolynomial {
        let spec: Vec<(Vec<usize>, f64)> = terms.iter().map(|(e, c)| (vec![*e], *c)).collect();
        let refs: Vec<(&[usize], f64)> = spec.iter().map(|(e, c)| (e.as_slice(), *c)).collect();
        SparsePolynomial::from_terms(1, &refs)
    }

    #[test]
    fn add_and_scale() {
        // (1 - 0.5 x^2) + (x + 0.1 x^4)
        let f = p1(&[(0, 1.0), (2, -0.5)]);
        let g = p1(&[(1, 1.0), (4, 0.1)]);
        let s = f.add(&g);
        assert_eq!(s, p1(&[(0, 1.0), (1, 1.0), (2, -0.5), (4, 0.1)]));

        assert_eq!(f.add(&SparsePolynomial::zero(1)), f);
        assert!(f.scale(0.0).is_zero());
    }

    #[test]
    fn mul_hand_expansion() {
        // (1 - 0.5 x^2)(x + 0.1 x^4) = x - 0.5 x^3 + 0.1 x^4 - 0.05 x^6
        let f = p1(&[(0, 1.0), (2, -0.5)]);
        let g = p1(&[(1, 1.0), (4, 0.1)]);
        let prod = f.mul(&g);
        assert_eq!(
            prod,
            p1(&[(1, 1.0), (3, -0.5), (4, 0.1), (6, -0.05)])
        );

        let one = SparsePolynomial::constant(1, 1.0);
        assert_eq!(f.mul(&one), f);
        assert!(f.mul(&SparsePolynomial::zero(1)).is_zero());
    }

    #[test]
    fn truncate_split() {
        let prod = p1(&[(1, 1.0), (3, -0.5), (4, 0.1), (6, -0.05)]);
        let (low, high) = prod.truncate(4);
        assert_eq!(low, p1(&[(1, 1.0), (3, -0.5), (4, 0.1)]));
        assert_eq!(high, p1(&[(6, -0.05)]));

        let (all, none) = prod.truncate(prod.degree());
        assert_eq!(all, prod);
        assert!(none.is_zero());

        let c = SparsePolynomial::constant(1, 3.5);
        let (lc, hc) = c.truncate(0);
        assert_eq!(lc, c);
        assert!(hc.is_zero());
    }

    #[test]
    fn mul_split_matches_mul_then_truncate() {
        let f = p1(&[(0, 1.0), (2, -0.5), (3, 0.25)]);
        let g = p1(&[(1, 1.0), (2, -0.125), (4, 0.1)]);
        for k in 0..=7 {
            let (low, high) = f.mul_split(&g, k);
            let (elow, ehigh) = f.mul(&g).truncate(k);
            assert_eq!(low, elow);
            assert_eq!(high, ehigh);
        }
    }

    #[test]
    fn bound_examples() {
        let unit = Domain::unit(1);
        assert_eq!(
            p1(&[(1, 1.0)]).bound(&unit),
            Interval::new(-1.0, 1.0)
        );
        assert_eq!(p1(&[(2, 1.0)]).bound(&unit), Interval::new(0.0, 1.0));

        // 1 + x - 0.5 x^2 + 0.1 x^4 over [-1,1]: monomial-wise sum is
        // [-0.5, 2.1]; it must cover the dense-sampled range, which is
        // [-0.4, 1.6] (the function is increasing on the interval).
        let f = p1(&[(0, 1.0), (1, 1.0), (2, -0.5), (4, 0.1)]);
        let b = f.bound(&unit);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let x = -1.0 + 2.0 * (i as f64) / 10_000.0;
            let v = f.eval(&[x]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(b.lo <= lo && hi <= b.hi);
        assert!((b.lo - -0.5).abs() < 1e-12 && (b.hi - 2.1).abs() < 1e-12);
        assert!((lo - -0.4).abs() < 1e-3 && (hi - 1.6).abs() < 1e-12);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p1(&[(1, 1.0), (3, -0.5)]).eval(&[1.0]), 0.5);
        assert_eq!(SparsePolynomial::constant(1, 7.25).eval(&[123.0]), 7.25);
        assert_eq!(
            p1(&[(0, 1.0), (1, 1.0), (2, -0.5), (4, 0.1)]).eval(&[0.0]),
            1.0
        );
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(
            p1(&[(0, 0.5), (1, 0.5)]).derivative_1d(),
            SparsePolynomial::constant(1, 0.5)
        );
        assert_eq!(p1(&[(2, 1.0)]).derivative_1d(), p1(&[(1, 2.0)]));
        assert!(SparsePolynomial::constant(1, 4.0)
            .derivative_1d()
            .is_zero());
    }

    #[test]
    fn integrate_examples() {
        // two variables (x, t), t is index 1
        let one = SparsePolynomial::constant(2, 1.0);
        assert_eq!(one.integrate_time(1), SparsePolynomial::var(2, 1));

        let t = SparsePolynomial::var(2, 1);
        assert_eq!(
            t.integrate_time(1),
            SparsePolynomial::from_terms(2, &[(&[0, 2], 0.5)])
        );

        let xt = SparsePolynomial::from_terms(2, &[(&[1, 1], 1.0)]);
        assert_eq!(
            xt.integrate_time(1),
            SparsePolynomial::from_terms(2, &[(&[1, 2], 0.5)])
        );
    }

    #[test]
    fn compose_examples() {
        let unit = Domain::unit(1);
        let y2 = p1(&[(2, 1.0)]);

        // y^2 into (x + 1), degree fits
        let g = p1(&[(0, 1.0), (1, 1.0)]);
        let (p, err) = y2.compose_univariate(&g, &unit, 2);
        assert_eq!(p, p1(&[(0, 1.0), (1, 2.0), (2, 1.0)]));
        assert_eq!(err, Interval::zero());

        // identity composition
        let id = p1(&[(1, 1.0)]);
        let g2 = p1(&[(0, 0.5), (1, 1.0), (3, -0.25)]);
        let (p, err) = id.compose_univariate(&g2, &unit, 3);
        assert_eq!(p, g2);
        assert_eq!(err, Interval::zero());

        // y^2 into x^2 truncated at 2: everything truncated, bound of x^4
        let (p, err) = y2.compose_univariate(&p1(&[(2, 1.0)]), &unit, 2);
        assert!(p.is_zero());
        assert!(Interval::new(0.0, 1.0).is_subset_of(&err));
        assert!(err.is_subset_of(&Interval::new(0.0, 1.0).inflate(1e-12)));
    }

    #[test]
    fn var_management() {
        let f = SparsePolynomial::from_terms(2, &[(&[1, 2], 3.0), (&[0, 1], -1.0)]);
        let g = f.extend_vars(3);
        assert_eq!(g.num_vars(), 3);
        assert_eq!(g.coefficient(&[1, 2, 0]), 3.0);

        let at = f.eval_var_at(1, 2.0);
        assert_eq!(at.coefficient(&[1, 0]), 12.0);
        assert_eq!(at.coefficient(&[0, 0]), -2.0);
        let dropped = at.drop_var(1);
        assert_eq!(dropped.num_vars(), 1);
        assert_eq!(dropped.coefficient(&[1]), 12.0);
    }

    #[test]
    #[should_panic(expected = "variable count mismatch")]
    fn add_dimension_mismatch_panics() {
        let f = SparsePolynomial::zero(1);
        let g = SparsePolynomial::zero(2);
        let _ = f.add(&g);
    }

    // Dyadic coefficients keep every product and sum exact in f64, so the
    // ring axioms can be checked as literal term-map equality.
    fn dyadic_poly(num_vars: usize) -> impl Strategy<Value = SparsePolynomial> {
        let term = (
            proptest::collection::vec(0usize..4, num_vars),
            (-64i32..=64).prop_map(|n| n as f64 / 16.0),
        );
        proptest::collection::vec(term, 0..8).prop_map(move |terms| {
            let refs: Vec<(&[usize], f64)> = terms
                .iter()
                .map(|(e, c)| (e.as_slice(), *c))
                .collect();
            SparsePolynomial::from_terms(num_vars, &refs)
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(f in dyadic_poly(3), g in dyadic_poly(3), h in dyadic_poly(3)) {
            prop_assert_eq!(f.add(&g).add(&h), f.add(&g.add(&h)));
            prop_assert_eq!(f.add(&g), g.add(&f));
            prop_assert_eq!(f.mul(&g), g.mul(&f));
            prop_assert_eq!(f.mul(&g.add(&h)), f.mul(&g).add(&f.mul(&h)));
        }

        #[test]
        fn truncate_reconstructs(f in dyadic_poly(3), k in 0usize..10) {
            let (low, high) = f.truncate(k);
            prop_assert_eq!(low.add(&high), f);
        }

        #[test]
        fn bound_contains_samples(f in dyadic_poly(2), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = Domain::new(vec![
                Interval::new(-1.5, 0.5),
                Interval::new(-0.25, 2.0),
            ]);
            let b = f.bound(&d);
            for _ in 0..100 {
                let x = [
                    rng.gen_range(-1.5..=0.5),
                    rng.gen_range(-0.25..=2.0),
                ];
                prop_assert!(b.inflate(1e-9 * (1.0 + b.magnitude())).contains(f.eval(&x)));
            }
        }

        #[test]
        fn derivative_inverts_integration(f in dyadic_poly(2)) {
            // f over (x, t): integrate in t, differentiate back by hand
            let int = f.integrate_time(1);
            for (m, c) in f.terms() {
                let mut exps = vec![m.exponent(0), m.exponent(1)];
                exps[1] += 1;
                let ci = int.coefficient(&exps);
                let back = ci * exps[1] as f64;
                prop_assert!((back - c).abs() <= 4.0 * f64::EPSILON * c.abs());
            }
        }
    }
}
