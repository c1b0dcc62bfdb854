//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_alpha = d^alpha f / alpha!`
//! of a function of up to four variables, truncated at a fixed total order.
//! Arithmetic on jets propagates exact derivatives, which the manufactured
//! solutions and the Eulerian residual checks rely on.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

const MAX_VARS: usize = 4;
const MAX_ORDER: usize = 4;

/// Monomial bookkeeping for jets of a given variable count and order.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<[u8; MAX_VARS]>,
    products: Vec<(usize, usize, usize)>,
    lookup: Vec<usize>,
}

fn lookup_key(e: &[u8; MAX_VARS]) -> usize {
    e.iter().fold(0, |acc, &x| acc * (MAX_ORDER + 1) + x as usize)
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        let mut exps = Vec::new();
        for deg in 0..=order {
            push_exps(nvars, deg, 0, [0; MAX_VARS], &mut exps);
        }
        let mut lookup = vec![usize::MAX; (MAX_ORDER + 1).pow(MAX_VARS as u32)];
        for (i, e) in exps.iter().enumerate() {
            lookup[lookup_key(e)] = i;
        }
        let mut products = Vec::new();
        for (ia, a) in exps.iter().enumerate() {
            for (ib, b) in exps.iter().enumerate() {
                let deg: usize = a.iter().zip(b).map(|(x, y)| (x + y) as usize).sum();
                if deg <= order {
                    let mut c = [0u8; MAX_VARS];
                    for v in 0..MAX_VARS {
                        c[v] = a[v] + b[v];
                    }
                    products.push((ia, ib, lookup[lookup_key(&c)]));
                }
            }
        }
        JetSpace {
            nvars,
            order,
            exps,
            products,
            lookup,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i][..self.nvars]
    }

    /// Index of the monomial with the given exponents, if within the order.
    pub fn index(&self, e: &[u8]) -> Option<usize> {
        if e.iter().map(|&x| x as usize).sum::<usize>() > self.order {
            return None;
        }
        let mut k = [0u8; MAX_VARS];
        k[..e.len()].copy_from_slice(e);
        Some(self.lookup[lookup_key(&k)])
    }
}

fn push_exps(nvars: usize, remaining: usize, var: usize, cur: [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if var + 1 == nvars {
        let mut e = cur;
        e[var] = remaining as u8;
        out.push(e);
        return;
    }
    for k in (0..=remaining).rev() {
        let mut e = cur;
        e[var] = k as u8;
        push_exps(nvars, remaining - k, var + 1, e, out);
    }
}

/// Shared space for `nvars <= 4` variables and order `<= 4`.
pub fn jet_space(nvars: usize, order: usize) -> &'static JetSpace {
    static SPACES: OnceLock<Vec<JetSpace>> = OnceLock::new();
    assert!(
        (1..=MAX_VARS).contains(&nvars) && order <= MAX_ORDER,
        "jet space ({nvars}, {order}) out of range"
    );
    let spaces = SPACES.get_or_init(|| {
        let mut v = Vec::new();
        for nv in 1..=MAX_VARS {
            for o in 0..=MAX_ORDER {
                v.push(JetSpace::build(nv, o));
            }
        }
        v
    });
    &spaces[(nvars - 1) * (MAX_ORDER + 1) + order]
}

/// Truncated Taylor expansion at a base point.
#[derive(Debug, Clone)]
pub struct Jet {
    sp: &'static JetSpace,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(sp: &'static JetSpace, v: f64) -> Self {
        let mut c = vec![0.0; sp.len()];
        c[0] = v;
        Jet { sp, c }
    }

    /// The coordinate function `x_i` at base value `v`.
    pub fn variable(sp: &'static JetSpace, i: usize, v: f64) -> Self {
        let mut j = Jet::constant(sp, v);
        if sp.order >= 1 {
            let mut e = [0u8; MAX_VARS];
            e[i] = 1;
            j.c[sp.lookup[lookup_key(&e)]] = 1.0;
        }
        j
    }

    /// All coordinate functions at the point `x`.
    pub fn variables(sp: &'static JetSpace, x: &[f64]) -> Vec<Jet> {
        x.iter().enumerate().map(|(i, &v)| Jet::variable(sp, i, v)).collect()
    }

    pub fn from_coeffs(sp: &'static JetSpace, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), sp.len());
        Jet { sp, c }
    }

    pub fn space(&self) -> &'static JetSpace {
        self.sp
    }

    pub fn order(&self) -> usize {
        self.sp.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative `d^alpha f` at the base point.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        match self.sp.index(alpha) {
            Some(i) => self.c[i] * alpha.iter().map(|&a| factorial(a as usize)).product::<f64>(),
            None => panic!("derivative order exceeds jet order"),
        }
    }

    /// First partial derivative in variable `i`.
    pub fn d1(&self, i: usize) -> f64 {
        let mut e = [0u8; MAX_VARS];
        e[i] = 1;
        self.derivative(&e[..self.sp.nvars])
    }

    /// Second partial derivative in variables `i`, `j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut e = [0u8; MAX_VARS];
        e[i] += 1;
        e[j] += 1;
        self.derivative(&e[..self.sp.nvars])
    }

    /// The jet of `d f / d x_i`, one order lower.
    pub fn diff(&self, i: usize) -> Jet {
        assert!(self.sp.order >= 1, "cannot differentiate an order-0 jet");
        let lower = jet_space(self.sp.nvars, self.sp.order - 1);
        let mut c = vec![0.0; lower.len()];
        for (k, e) in lower.exps.iter().enumerate() {
            let mut up = *e;
            up[i] += 1;
            c[k] = (up[i] as f64) * self.c[self.sp.lookup[lookup_key(&up)]];
        }
        Jet { sp: lower, c }
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.sp.order);
        let lower = jet_space(self.sp.nvars, order);
        let c = lower
            .exps
            .iter()
            .map(|e| self.c[self.sp.lookup[lookup_key(e)]])
            .collect();
        Jet { sp: lower, c }
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet {
            sp: self.sp,
            c: self.c.iter().map(|x| x * a).collect(),
        }
    }

    pub fn add_const(&self, a: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += a;
        j
    }

    /// `f(self)` given `taylor[k] = f^(k)(a0) / k!` at the base value `a0`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Jet::constant(self.sp, taylor[0]);
        let mut power = Jet::constant(self.sp, 1.0);
        for &t in taylor.iter().take(self.sp.order + 1).skip(1) {
            power = &power * &delta;
            out = &out + &power.scale(t);
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let t: Vec<f64> = (0..=self.sp.order)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
            .collect();
        self.compose(&t)
    }

    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut t = Vec::with_capacity(self.sp.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.sp.order {
            t.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut out = Jet::constant(self.sp, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let t: Vec<f64> = (0..=self.sp.order).map(|k| e / factorial(k)).collect();
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let t: Vec<f64> = (0..=self.sp.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let t: Vec<f64> = (0..=self.sp.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&t)
    }

    /// Evaluates the polynomial with Taylor coefficients `self` (centered at
    /// `center`) at the jet arguments `args`.
    pub fn substitute(&self, center: &[f64], args: &[Jet]) -> Jet {
        let nv = self.sp.nvars;
        assert_eq!(args.len(), nv);
        let sp = args[0].sp;
        let shifted: Vec<Jet> = args.iter().zip(center).map(|(a, &c)| a.add_const(-c)).collect();
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(nv);
        for s in &shifted {
            let mut p = vec![Jet::constant(sp, 1.0)];
            for k in 1..=self.sp.order {
                let next = &p[k - 1] * s;
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = Jet::constant(sp, 0.0);
        for (i, e) in self.sp.exps.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            let mut term = Jet::constant(sp, self.c[i]);
            for v in 0..nv {
                if e[v] > 0 {
                    term = &term * &powers[v][e[v] as usize];
                }
            }
            out = &out + &term;
        }
        out
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        debug_assert!(std::ptr::eq(self.sp, o.sp), "jet spaces differ");
        Jet {
            sp: self.sp,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        debug_assert!(std::ptr::eq(self.sp, o.sp), "jet spaces differ");
        Jet {
            sp: self.sp,
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        debug_assert!(std::ptr::eq(self.sp, o.sp), "jet spaces differ");
        let mut c = vec![0.0; self.sp.len()];
        for &(a, b, r) in &self.sp.products {
            c[r] += self.c[a] * o.c[b];
        }
        Jet { sp: self.sp, c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $f(self, o: Jet) -> Jet {
                (&self).$f(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $f(self, o: &Jet) -> Jet {
                (&self).$f(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $f(self, o: Jet) -> Jet {
                self.$f(&o)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_sizes() {
        assert_eq!(jet_space(2, 3).len(), 10);
        assert_eq!(jet_space(3, 3).len(), 20);
        assert_eq!(jet_space(1, 0).len(), 1);
    }

    #[test]
    fn product_rule_and_elementary_functions() {
        let sp = jet_space(2, 3);
        let v = Jet::variables(sp, &[0.3, -0.7]);
        // f = sin(x) * exp(x y) / (2 + y)
        let f = &(&v[0].sin() * &(&v[0] * &v[1]).exp()) * &v[1].add_const(2.0).recip();
        let (x, y) = (0.3f64, -0.7f64);
        let val = x.sin() * (x * y).exp() / (2.0 + y);
        assert!((f.value() - val).abs() < 1e-15);
        let fx = (x.cos() + y * x.sin()) * (x * y).exp() / (2.0 + y);
        assert!((f.d1(0) - fx).abs() < 1e-14);
        let h = 1e-4;
        let g = |x: f64, y: f64| x.sin() * (x * y).exp() / (2.0 + y);
        let fxy = (g(x + h, y + h) - g(x + h, y - h) - g(x - h, y + h) + g(x - h, y - h)) / (4.0 * h * h);
        assert!((f.d2(0, 1) - fxy).abs() < 1e-6);
        let fxxx = f.derivative(&[3, 0]);
        let num = (g(x + 2.0 * h, y) - 2.0 * g(x + h, y) + 2.0 * g(x - h, y) - g(x - 2.0 * h, y)) / (2.0 * h.powi(3));
        assert!((fxxx - num).abs() < 1e-5);
    }

    #[test]
    fn diff_and_substitute() {
        let sp = jet_space(2, 3);
        let v = Jet::variables(sp, &[0.5, 0.25]);
        let f = (&v[0] * &v[0]) * &v[1];
        let fx = f.diff(0);
        assert!((fx.value() - 2.0 * 0.5 * 0.25).abs() < 1e-15);
        assert!((fx.d1(1) - 1.0).abs() < 1e-15);
        // substituting x -> x + y, y -> y into x^2 y
        let args = vec![&v[0] + &v[1], v[1].clone()];
        let p = f.substitute(&[0.5, 0.25], &args);
        assert!((p.value() - 0.75 * 0.75 * 0.25).abs() < 1e-15);
        assert!((p.d1(1) - (2.0 * 0.75 * 0.25 + 0.75 * 0.75)).abs() < 1e-14);
    }

    #[test]
    fn powers_and_roots() {
        let sp = jet_space(1, 4);
        let x = Jet::variable(sp, 0, 2.0);
        let r = x.sqrt();
        assert!((r.derivative(&[2]) + 0.25 * 2f64.powf(-1.5)).abs() < 1e-15);
        let c = x.powi(3);
        assert!((c.derivative(&[3]) - 6.0).abs() < 1e-13);
        assert!((x.powf(3.0).derivative(&[2]) - 12.0).abs() < 1e-13);
    }
}
