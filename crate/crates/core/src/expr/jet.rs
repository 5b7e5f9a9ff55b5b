//! Second-order forward-mode jets.
//!
//! A `Jet2` carries a value with its gradient and Hessian with respect to the
//! chart coordinates. Every rule below is the exact second-order chain/product
//! rule, so derivatives carry no truncation error.

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n x n`.
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// The coordinate function `x^i` evaluated at `x`.
    pub fn variable(n: usize, i: usize, x: f64) -> Self {
        let mut j = Self::constant(n, x);
        j.grad[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn hess_at(&self, k: usize, l: usize) -> f64 {
        self.hess[k * self.dim() + l]
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().chain(&self.hess).all(|&d| d == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().chain(&self.hess).all(|d| d.is_finite())
    }

    /// Fills the upper triangle with `f(k, l)` and mirrors it, so the Hessian is symmetric bit-for-bit.
    fn symmetric(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for k in 0..n {
            for l in k..n {
                let v = f(k, l);
                h[k * n + l] = v;
                h[l * n + k] = v;
            }
        }
        h
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.dim();
        Self {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: Self::symmetric(n, |k, l| self.hess_at(k, l) + o.hess_at(k, l)),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.dim();
        Self {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess: Self::symmetric(n, |k, l| self.hess_at(k, l) - o.hess_at(k, l)),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
            hess: self.hess.iter().map(|a| -a).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self.value, o.value);
        Self {
            value: a * b,
            grad: (0..n).map(|k| a * o.grad[k] + b * self.grad[k]).collect(),
            hess: Self::symmetric(n, |k, l| {
                a * o.hess_at(k, l)
                    + b * self.hess_at(k, l)
                    + self.grad[k] * o.grad[l]
                    + self.grad[l] * o.grad[k]
            }),
        }
    }

    /// `f(self)` given `f(a)`, `f'(a)` and `f''(a)` at `a = self.value`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        Self {
            value: f0,
            grad: self.grad.iter().map(|g| f1 * g).collect(),
            hess: Self::symmetric(n, |k, l| {
                f1 * self.hess_at(k, l) + f2 * self.grad[k] * self.grad[l]
            }),
        }
    }

    pub fn recip(&self) -> Self {
        let a = self.value;
        self.compose(1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a))
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }
}
