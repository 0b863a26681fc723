//! Truncated multivariate Taylor polynomials ("jets") for exact forward-mode
//! differentiation to arbitrary fixed order.
//!
//! A [`Jet`] in `m` variables of order `K` stores the Taylor coefficients
//! `f^{(α)}(z₀) / α!` of a function about an expansion point `z₀` for every
//! multi-index `|α| ≤ K`. Monomials are enumerated degree by degree in a fixed
//! order, so the coefficients of an order-`K−1` jet are a prefix of those of an
//! order-`K` jet in the same variables. Arithmetic between jets of different
//! orders truncates to the smaller one.
//!
//! Differentiating an order-`K` jet with respect to one variable gives an exact
//! order-`K−1` jet of the partial derivative. Every derivative the geometry code
//! needs (fundamental tensor, spray, connection, derivatives of lifted vector
//! fields and their brackets) comes out of one expansion of `F` this way.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

/// Highest supported jet order.
pub const MAX_ORDER: usize = 8;

/// Highest supported number of jet variables.
pub const MAX_VARS: usize = 16;

/// Enumeration of the monomials of a given degree bound, together with the
/// index tables needed for products and partial derivatives.
pub struct MonomialTable {
    nvars: usize,
    order: usize,
    /// Exponent vectors, flattened with stride `nvars`.
    exponents: Vec<u8>,
    /// `degree_start[d]` is the index of the first monomial of degree `d`.
    degree_start: Vec<usize>,
    /// Product triples `(i, j, k)` meaning `m_i · m_j = m_k`, sorted by degree of `m_k`.
    products: Vec<(u32, u32, u32)>,
    /// Per variable: `(source, target, factor)` for `∂ m_source = factor · m_target`.
    derivatives: Vec<Vec<(u32, u32, f64)>>,
    lower: Option<&'static MonomialTable>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of monomials of degree at most `order` in `nvars` variables.
pub fn monomial_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

impl MonomialTable {
    fn build(nvars: usize, order: usize, lower: Option<&'static MonomialTable>) -> Self {
        let mut exponents: Vec<u8> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exponents.len() / nvars.max(1));
            let mut current = vec![0u8; nvars];
            enumerate_degree(nvars, d, 0, &mut current, &mut exponents);
        }
        let count = if nvars == 0 { 1 } else { exponents.len() / nvars };
        degree_start.push(count);
        debug_assert_eq!(count, monomial_count(nvars, order));

        let mut index: HashMap<Vec<u8>, u32> = HashMap::with_capacity(count);
        for k in 0..count {
            index.insert(exponents[k * nvars..(k + 1) * nvars].to_vec(), k as u32);
        }
        let degree_of = |k: usize| -> usize {
            exponents[k * nvars..(k + 1) * nvars]
                .iter()
                .map(|&e| e as usize)
                .sum()
        };

        let mut products = Vec::new();
        let mut scratch = vec![0u8; nvars];
        for i in 0..count {
            let di = degree_of(i);
            let jmax = degree_start[order - di + 1];
            for j in 0..jmax {
                for v in 0..nvars {
                    scratch[v] = exponents[i * nvars + v] + exponents[j * nvars + v];
                }
                let k = index[&scratch];
                products.push((i as u32, j as u32, k));
            }
        }
        products.sort_by_key(|&(i, j, k)| (k, i, j));

        let mut derivatives = vec![Vec::new(); nvars];
        for (v, list) in derivatives.iter_mut().enumerate() {
            for k in 0..count {
                let e = exponents[k * nvars + v];
                if e == 0 {
                    continue;
                }
                scratch.copy_from_slice(&exponents[k * nvars..(k + 1) * nvars]);
                scratch[v] -= 1;
                list.push((k as u32, index[&scratch], e as f64));
            }
        }

        MonomialTable {
            nvars,
            order,
            exponents,
            degree_start,
            products,
            derivatives,
            lower,
        }
    }

    /// Shared table for `nvars` variables up to `order`.
    pub fn get(nvars: usize, order: usize) -> &'static MonomialTable {
        assert!(
            nvars <= MAX_VARS && order <= MAX_ORDER,
            "jet table ({nvars} vars, order {order}) exceeds supported size"
        );
        static TABLES: OnceLock<Mutex<HashMap<(usize, usize), &'static MonomialTable>>> =
            OnceLock::new();
        let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = tables.lock().unwrap().get(&(nvars, order)) {
            return t;
        }
        let lower = if order > 0 {
            Some(Self::get(nvars, order - 1))
        } else {
            None
        };
        let mut guard = tables.lock().unwrap();
        *guard
            .entry((nvars, order))
            .or_insert_with(|| Box::leak(Box::new(MonomialTable::build(nvars, order, lower))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.degree_start[self.order + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exponent vector of monomial `k`.
    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exponents[k * self.nvars..(k + 1) * self.nvars]
    }

    /// Index of the monomial with the given exponents, if it is within this order.
    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        let deg: usize = exps.iter().map(|&e| e as usize).sum();
        if exps.len() != self.nvars || deg > self.order {
            return None;
        }
        (self.degree_start[deg]..self.degree_start[deg + 1]).find(|&k| self.exponent(k) == exps)
    }
}

fn enumerate_degree(nvars: usize, remaining: usize, var: usize, cur: &mut [u8], out: &mut Vec<u8>) {
    if nvars == 0 {
        return;
    }
    if var == nvars - 1 {
        cur[var] = remaining as u8;
        out.extend_from_slice(cur);
        cur[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[var] = e as u8;
        enumerate_degree(nvars, remaining - e, var + 1, cur, out);
    }
    cur[var] = 0;
}

/// A truncated Taylor expansion in several variables.
#[derive(Clone)]
pub struct Jet {
    table: &'static MonomialTable,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.table.nvars)
            .field("order", &self.table.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        let table = MonomialTable::get(nvars, order);
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = value;
        Jet { table, coeffs }
    }

    /// The coordinate function `z_var`, expanded about `z_var = value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Self {
        assert!(var < nvars, "variable index {var} out of range for {nvars} vars");
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            // Degree-1 monomials are enumerated with the first variable first.
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// All coordinate functions of the expansion point `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(n, order, i, v))
            .collect()
    }

    /// Constant with the same shape as `self`.
    pub fn lift(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            table: self.table,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    pub fn nvars(&self) -> usize {
        self.table.nvars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn table(&self) -> &'static MonomialTable {
        self.table
    }

    /// First partial derivatives at the expansion point.
    pub fn gradient(&self) -> Vec<f64> {
        let n = self.nvars();
        if self.order() == 0 {
            return vec![0.0; n];
        }
        self.coeffs[1..=n].to_vec()
    }

    /// Taylor coefficient of the monomial with the given exponents (0 beyond the order).
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.table.index_of(exps).map_or(0.0, |k| self.coeffs[k])
    }

    /// Mixed partial derivative `∂^α f(z₀)`.
    pub fn derivative(&self, exps: &[u8]) -> f64 {
        let fact: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        self.coeff(exps) * fact
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let table = MonomialTable::get(self.nvars(), order);
        Jet {
            table,
            coeffs: self.coeffs[..table.len()].to_vec(),
        }
    }

    /// Exact partial derivative with respect to variable `var`, one order lower.
    ///
    /// Panics on an order-0 jet, which carries no derivative information.
    pub fn partial(&self, var: usize) -> Self {
        let lower = self
            .table
            .lower
            .expect("cannot differentiate an order-0 jet");
        let mut coeffs = vec![0.0; lower.len()];
        for &(src, dst, factor) in &self.table.derivatives[var] {
            // Sources of degree K map past the lower table; the list is sorted by source.
            let dst = dst as usize;
            if dst < coeffs.len() {
                coeffs[dst] += factor * self.coeffs[src as usize];
            }
        }
        Jet {
            table: lower,
            coeffs,
        }
    }

    fn binary(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.nvars(), other.nvars(), "jet variable count mismatch");
        let (table, len) = if self.order() <= other.order() {
            (self.table, self.coeffs.len())
        } else {
            (other.table, other.coeffs.len())
        };
        let coeffs = (0..len)
            .map(|k| op(self.coeffs[k], other.coeffs[k]))
            .collect();
        Jet { table, coeffs }
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.nvars(), other.nvars(), "jet variable count mismatch");
        let table = if self.order() <= other.order() {
            self.table
        } else {
            other.table
        };
        let mut coeffs = vec![0.0; table.len()];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, k) in &table.products {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { table, coeffs }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            table: self.table,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.coeffs[0] += s;
        r
    }

    /// `f ∘ self` for a univariate `f` given by its Taylor coefficients
    /// `f^{(k)}(a) / k!`, `k = 0..=order`, at `a = self.value()`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let k = self.order();
        debug_assert!(taylor.len() > k);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut r = self.lift(taylor[k]);
        for c in taylor[..k].iter().rev() {
            r = r.mul_jet(&h);
            r.coeffs[0] += c;
        }
        r
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s / a.powi(k as i32 + 1)
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            taylor.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&taylor)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, e: i32) -> Jet {
        if e < 0 {
            return self.powi(-e).recip();
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = e as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        result
    }

    pub fn exp(&self) -> Jet {
        let ea = self.value().exp();
        let taylor: Vec<f64> = (0..=self.order()).map(|k| ea / factorial(k)).collect();
        self.compose(&taylor)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    /// Euclidean dot product of two jet vectors.
    pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
        assert!(!a.is_empty() && a.len() == b.len());
        let mut acc = &a[0] * &b[0];
        for (u, v) in a.iter().zip(b).skip(1) {
            acc = acc + u * v;
        }
        acc
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

impl_binop!(Add, add, |a, b| a.binary(b, |x, y| x + y));
impl_binop!(Sub, sub, |a, b| a.binary(b, |x, y| x - y));
impl_binop!(Mul, mul, |a, b| a.mul_jet(b));
impl_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! impl_scalar_op {
    ($trait:ident, $method:ident, $jet_f64:expr, $f64_jet:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $jet_f64;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $f64_jet;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

impl_scalar_op!(Add, add, |a, s| a.add_scalar(s), |s, a| a.add_scalar(s));
impl_scalar_op!(Sub, sub, |a, s| a.add_scalar(-s), |s, a| a.scale(-1.0).add_scalar(s));
impl_scalar_op!(Mul, mul, |a, s| a.scale(s), |s, a| a.scale(s));
impl_scalar_op!(Div, div, |a, s| a.scale(1.0 / s), |s, a| a.recip().scale(s));
