//! Second-order forward-mode differentiation in two variables.
//!
//! A [`Jet2`] carries a value together with its first and second partial
//! derivatives with respect to `(u, v)`. Arithmetic on jets propagates the
//! chain rule exactly, so closed-form surfaces written against `Jet2` yield
//! exact 2-jets without symbolic work or finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    pub duu: f64,
    pub duv: f64,
    pub dvv: f64,
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Jet2 {
            v,
            du: 0.0,
            dv: 0.0,
            duu: 0.0,
            duv: 0.0,
            dvv: 0.0,
        }
    }

    /// The coordinate function `u` evaluated at `u`.
    pub const fn var_u(u: f64) -> Self {
        Jet2 {
            v: u,
            du: 1.0,
            dv: 0.0,
            duu: 0.0,
            duv: 0.0,
            dvv: 0.0,
        }
    }

    /// The coordinate function `v` evaluated at `v`.
    pub const fn var_v(v: f64) -> Self {
        Jet2 {
            v,
            du: 0.0,
            dv: 1.0,
            duu: 0.0,
            duv: 0.0,
            dvv: 0.0,
        }
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.v`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Jet2 {
            v: f,
            du: df * self.du,
            dv: df * self.dv,
            duu: d2f * self.du * self.du + df * self.duu,
            duv: d2f * self.du * self.dv + df * self.duv,
            dvv: d2f * self.dv * self.dv + df * self.dvv,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(self) -> Self {
        let t = self.v.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn atan(self) -> Self {
        let x = self.v;
        let d = 1.0 / (1.0 + x * x);
        self.chain(x.atan(), d, -2.0 * x * d * d)
    }

    /// Integer power.
    pub fn powi(self, n: i32) -> Self {
        let x = self.v;
        match n {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let nf = f64::from(n);
                self.chain(
                    x.powi(n),
                    nf * x.powi(n - 1),
                    nf * (nf - 1.0) * x.powi(n - 2),
                )
            }
        }
    }

    /// `atan2(self, x)` with both arguments carrying derivatives.
    pub fn atan2(self, x: Jet2) -> Self {
        let y = self;
        let r2 = y.v * y.v + x.v * x.v;
        // d atan2 = (x dy - y dx) / r2
        let gu = (x.v * y.du - y.v * x.du) / r2;
        let gv = (x.v * y.dv - y.v * x.dv) / r2;
        // differentiate the numerator and denominator once more
        let num_u = x.v * y.du - y.v * x.du;
        let num_v = x.v * y.dv - y.v * x.dv;
        let r2_u = 2.0 * (y.v * y.du + x.v * x.du);
        let r2_v = 2.0 * (y.v * y.dv + x.v * x.dv);
        let num_uu = x.du * y.du + x.v * y.duu - y.du * x.du - y.v * x.duu;
        let num_uv = x.dv * y.du + x.v * y.duv - y.dv * x.du - y.v * x.duv;
        let num_vv = x.dv * y.dv + x.v * y.dvv - y.dv * x.dv - y.v * x.dvv;
        Jet2 {
            v: y.v.atan2(x.v),
            du: gu,
            dv: gv,
            duu: (num_uu * r2 - num_u * r2_u) / (r2 * r2),
            duv: (num_uv * r2 - num_u * r2_v) / (r2 * r2),
            dvv: (num_vv * r2 - num_v * r2_v) / (r2 * r2),
        }
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            du: self.du + o.du,
            dv: self.dv + o.dv,
            duu: self.duu + o.duu,
            duv: self.duv + o.duv,
            dvv: self.dvv + o.dvv,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            du: -self.du,
            dv: -self.dv,
            duu: -self.duu,
            duv: -self.duv,
            dvv: -self.dvv,
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            du: self.du * o.v + self.v * o.du,
            dv: self.dv * o.v + self.v * o.dv,
            duu: self.duu * o.v + 2.0 * self.du * o.du + self.v * o.duu,
            duv: self.duv * o.v + self.du * o.dv + self.dv * o.du + self.v * o.duv,
            dvv: self.dvv * o.v + 2.0 * self.dv * o.dv + self.v * o.dvv,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let x = o.v;
        let recip = o.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
        self * recip
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, c: f64) -> Jet2 {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, c: f64) -> Jet2 {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 {
            v: self.v * c,
            du: self.du * c,
            dv: self.dv * c,
            duu: self.duu * c,
            duv: self.duv * c,
            dvv: self.dvv * c,
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    fn div(self, c: f64) -> Jet2 {
        self * (1.0 / c)
    }
}
