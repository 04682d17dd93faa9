//! Sparse real polynomials in a fixed number of variables.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Adds `coeff · Π x_i^{e_i}`. Panics if the exponent vector has the wrong length.
    pub fn add_term(&mut self, exponents: Vec<u32>, coeff: f64) {
        assert_eq!(exponents.len(), self.nvars, "exponent vector length");
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents).or_insert(0.0);
        *entry += coeff;
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.add_term(e2, c * f64::from(e[var]));
        }
        out
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.nvars,
            (0..self.nvars).map(|v| self.derivative(v).eval(x)),
        )
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.nvars, self.nvars);
        for i in 0..self.nvars {
            let di = self.derivative(i);
            for j in i..self.nvars {
                let v = di.derivative(j).eval(x);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    pub fn scaled(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    /// Expands `P(x + s ξ / 2)` as a polynomial in `2n` variables `(x, ξ)`.
    pub fn shifted_by_half_chord(&self, s: f64) -> Polynomial {
        let n = self.nvars;
        let mut out = Polynomial::zero(2 * n);
        for (e, c) in &self.terms {
            // distribute each factor (x_i + s ξ_i / 2)^{e_i}
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(vec![0; 2 * n], *c)];
            for (i, &ei) in e.iter().enumerate() {
                let mut next = Vec::with_capacity(partial.len() * (ei as usize + 1));
                for (exps, coeff) in &partial {
                    for k in 0..=ei {
                        let mut ex = exps.clone();
                        ex[i] += ei - k;
                        ex[n + i] += k;
                        let w = binomial(ei, k) * (0.5 * s).powi(k as i32);
                        next.push((ex, coeff * w));
                    }
                }
                partial = next;
            }
            for (ex, coeff) in partial {
                out.add_term(ex, coeff);
            }
        }
        out
    }
}

/// Terms laid out flat for evaluation against a table of powers.
#[derive(Debug, Clone, PartialEq)]
struct Flat {
    coeffs: Vec<f64>,
    exps: Vec<usize>,
}

impl Flat {
    fn new(p: &Polynomial) -> Self {
        let mut coeffs = Vec::with_capacity(p.terms.len());
        let mut exps = Vec::with_capacity(p.terms.len() * p.nvars);
        for (e, c) in &p.terms {
            coeffs.push(*c);
            exps.extend(e.iter().map(|&k| k as usize));
        }
        Self { coeffs, exps }
    }

    fn eval(&self, powers: &[f64], nvars: usize, stride: usize) -> f64 {
        self.coeffs
            .iter()
            .zip(self.exps.chunks_exact(nvars.max(1)))
            .map(|(c, e)| c * e.iter().enumerate().map(|(v, &k)| powers[v * stride + k]).product::<f64>())
            .sum()
    }
}

/// A polynomial with its first and second derivative polynomials cached.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyJet {
    value: Polynomial,
    flat: Flat,
    grad: Vec<Flat>,
    hess: Vec<Flat>,
    stride: usize,
}

impl PolyJet {
    pub fn new(p: &Polynomial) -> Self {
        let n = p.nvars();
        let grad: Vec<Polynomial> = (0..n).map(|v| p.derivative(v)).collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for (i, gi) in grad.iter().enumerate() {
            for j in i..n {
                hess.push(Flat::new(&gi.derivative(j)));
            }
        }
        let top = p.terms.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0);
        Self {
            value: p.clone(),
            flat: Flat::new(p),
            grad: grad.iter().map(Flat::new).collect(),
            hess,
            stride: top as usize + 1,
        }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.value
    }

    /// `x_v^k` at index `v * stride + k`.
    fn powers(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.value.nvars);
        let mut pw = vec![1.0; x.len() * self.stride];
        for (v, &xv) in x.iter().enumerate() {
            for k in 1..self.stride {
                pw[v * self.stride + k] = pw[v * self.stride + k - 1] * xv;
            }
        }
        pw
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.flat.eval(&self.powers(x), x.len(), self.stride)
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let pw = self.powers(x);
        DVector::from_iterator(self.grad.len(), self.grad.iter().map(|g| g.eval(&pw, x.len(), self.stride)))
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let pw = self.powers(x);
        let n = self.grad.len();
        let mut h = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = self.hess[k].eval(&pw, x.len(), self.stride);
                h[(i, j)] = v;
                h[(j, i)] = v;
                k += 1;
            }
        }
        h
    }
}
