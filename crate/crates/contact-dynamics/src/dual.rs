//! Forward-mode dual numbers carrying a value together with its partial
//! derivatives with respect to a fixed variable list (chart coordinates
//! plus time). Used to differentiate parsed Hamiltonian expressions exactly.

/// Value plus gradient with respect to `d.len()` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Dual {
    pub fn constant(v: f64, nvars: usize) -> Self {
        Dual {
            v,
            d: vec![0.0; nvars],
        }
    }

    /// The variable with index `i` seeded with unit derivative.
    pub fn variable(v: f64, i: usize, nvars: usize) -> Self {
        let mut d = vec![0.0; nvars];
        d[i] = 1.0;
        Dual { v, d }
    }

    pub fn add(&self, o: &Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Dual {
        Dual {
            v: -self.v,
            d: self.d.iter().map(|a| -a).collect(),
        }
    }

    pub fn mul(&self, o: &Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self
                .d
                .iter()
                .zip(&o.d)
                .map(|(a, b)| a * o.v + self.v * b)
                .collect(),
        }
    }

    pub fn div(&self, o: &Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual {
            v: self.v * inv,
            d: self
                .d
                .iter()
                .zip(&o.d)
                .map(|(a, b)| (a - self.v * inv * b) * inv)
                .collect(),
        }
    }

    fn chain(&self, v: f64, dv: f64) -> Dual {
        Dual {
            v,
            d: self.d.iter().map(|a| dv * a).collect(),
        }
    }

    pub fn sin(&self) -> Dual {
        self.chain(self.v.sin(), self.v.cos())
    }

    pub fn cos(&self) -> Dual {
        self.chain(self.v.cos(), -self.v.sin())
    }

    pub fn tan(&self) -> Dual {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }

    pub fn exp(&self) -> Dual {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn log(&self) -> Dual {
        self.chain(self.v.ln(), 1.0 / self.v)
    }

    pub fn tanh(&self) -> Dual {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }

    /// Power with a constant exponent; integer exponents admit negative bases.
    pub fn powc(&self, k: f64) -> Dual {
        if k == k.trunc() && k.abs() < 64.0 {
            let ki = k as i32;
            self.chain(self.v.powi(ki), k * self.v.powi(ki - 1))
        } else {
            self.chain(self.v.powf(k), k * self.v.powf(k - 1.0))
        }
    }

    /// General power a^b = exp(b log a); requires a > 0.
    pub fn pow(&self, o: &Dual) -> Dual {
        o.mul(&self.log()).exp()
    }

    /// Standard mollifier bump: exp(-1/(1-u^2)) for |u| < 1, zero outside.
    pub fn bump(&self) -> Dual {
        let u = self.v;
        if u.abs() >= 1.0 {
            return Dual::constant(0.0, self.d.len());
        }
        let q = 1.0 - u * u;
        let v = (-1.0 / q).exp();
        self.chain(v, v * (-2.0 * u / (q * q)))
    }

    pub fn sigmoid(&self) -> Dual {
        let s = 1.0 / (1.0 + (-self.v).exp());
        self.chain(s, s * (1.0 - s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn arithmetic_rules() {
        let x = Dual::variable(3.0, 0, 2);
        let y = Dual::variable(5.0, 1, 2);
        let p = x.mul(&y);
        assert_eq!(p.v, 15.0);
        assert_eq!(p.d, vec![5.0, 3.0]);
        let q = x.div(&y);
        assert!((q.v - 0.6).abs() < 1e-15);
        assert!((q.d[0] - 0.2).abs() < 1e-15);
        assert!((q.d[1] + 3.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn unary_functions_match_finite_differences() {
        type UF = (fn(&Dual) -> Dual, fn(f64) -> f64);
        let cases: Vec<UF> = vec![
            (|d| d.sin(), f64::sin),
            (|d| d.cos(), f64::cos),
            (|d| d.tan(), f64::tan),
            (|d| d.exp(), f64::exp),
            (|d| d.tanh(), f64::tanh),
            (|d| d.sigmoid(), |x| 1.0 / (1.0 + (-x).exp())),
            (|d| d.bump(), |x| {
                if x.abs() < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }),
        ];
        for (dual_f, real_f) in cases {
            for i in -8..=8 {
                let x = i as f64 * 0.11;
                let d = dual_f(&Dual::variable(x, 0, 1));
                assert!((d.v - real_f(x)).abs() < 1e-14);
                assert!((d.d[0] - fd(real_f, x)).abs() < 1e-5, "x = {x}");
            }
        }
    }

    #[test]
    fn log_and_powers() {
        let x = Dual::variable(2.0, 0, 1);
        let l = x.log();
        assert!((l.d[0] - 0.5).abs() < 1e-15);
        let p = x.powc(3.0);
        assert_eq!(p.v, 8.0);
        assert_eq!(p.d[0], 12.0);
        let n = Dual::variable(-2.0, 0, 1).powc(2.0);
        assert_eq!(n.v, 4.0);
        assert_eq!(n.d[0], -4.0);
        let g = x.pow(&Dual::constant(0.5, 1));
        assert!((g.v - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((g.d[0] - 0.5 / 2.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bump_is_flat_at_the_boundary() {
        let d = Dual::variable(1.0, 0, 1).bump();
        assert_eq!(d.v, 0.0);
        assert_eq!(d.d[0], 0.0);
        let e = Dual::variable(0.999, 0, 1).bump();
        assert!(e.v > 0.0 && e.v < 1e-200);
    }
}
