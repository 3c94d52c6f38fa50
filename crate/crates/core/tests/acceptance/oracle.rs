//! Extended-precision reference formulas for the key-rate model, written
//! independently of the library on 256-bit binary floats.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

#[derive(Clone, Debug)]
pub struct Hp(BigFloat);

impl Hp {
    pub fn from(x: f64) -> Hp {
        Hp(BigFloat::from_f64(x, PREC))
    }

    pub fn to_f64(&self) -> f64 {
        let text = format!("{}", self.0);
        text.parse().unwrap_or_else(|_| panic!("cannot read back `{text}`"))
    }

    pub fn sqrt(&self) -> Hp {
        Hp(self.0.sqrt(PREC, RM))
    }

    pub fn ln(&self) -> Hp {
        CONSTS.with(|cc| Hp(self.0.ln(PREC, RM, &mut cc.borrow_mut())))
    }

    pub fn log2(&self) -> Hp {
        CONSTS.with(|cc| Hp(self.0.log2(PREC, RM, &mut cc.borrow_mut())))
    }

    pub fn exp(&self) -> Hp {
        CONSTS.with(|cc| Hp(self.0.exp(PREC, RM, &mut cc.borrow_mut())))
    }

    pub fn is_positive(&self) -> bool {
        !self.0.is_zero() && self.0.is_positive()
    }

    pub fn sq(&self) -> Hp {
        self * self
    }

    pub fn max(self, other: Hp) -> Hp {
        if (&self - &other).is_positive() {
            self
        } else {
            other
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Hp> for &Hp {
            type Output = Hp;
            fn $method(self, rhs: &Hp) -> Hp {
                Hp(self.0.$method(&rhs.0, PREC, RM))
            }
        }
        impl $tr<&Hp> for Hp {
            type Output = Hp;
            fn $method(self, rhs: &Hp) -> Hp {
                Hp(self.0.$method(&rhs.0, PREC, RM))
            }
        }
        impl $tr<Hp> for Hp {
            type Output = Hp;
            fn $method(self, rhs: Hp) -> Hp {
                Hp(self.0.$method(&rhs.0, PREC, RM))
            }
        }
        impl $tr<f64> for &Hp {
            type Output = Hp;
            fn $method(self, rhs: f64) -> Hp {
                Hp(self.0.$method(&Hp::from(rhs).0, PREC, RM))
            }
        }
        impl $tr<f64> for Hp {
            type Output = Hp;
            fn $method(self, rhs: f64) -> Hp {
                Hp(self.0.$method(&Hp::from(rhs).0, PREC, RM))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}

fn one() -> Hp {
    Hp::from(1.0)
}

pub fn transmittance(loss_db_per_km: f64, km: f64) -> Hp {
    // 10^(-x/10) = exp(-x ln(10) / 10)
    let x = Hp::from(loss_db_per_km) * Hp::from(km);
    (-(x * Hp::from(10.0).ln() / 10.0)).exp()
}

pub fn beta(rate: f64, snr: f64) -> Hp {
    let capacity = (Hp::from(snr) + 1.0).log2() / 2.0;
    Hp::from(rate) / capacity
}

pub fn delta_aep(d: f64, p_ec: f64, eps: f64) -> Hp {
    let p = Hp::from(p_ec);
    let e = Hp::from(eps);
    let inner = Hp::from(18.0) / (p.sq() * e.sq().sq());
    (Hp::from(d).sqrt() + 2.0).log2() * inner.log2().sqrt() * 4.0
}

pub fn theta(p_ec: f64, eps_s: f64, eps_h: f64) -> Hp {
    let es = Hp::from(eps_s);
    let first = (Hp::from(p_ec) * (one() - es.sq() / 3.0)).log2();
    let second = (Hp::from(2.0).sqrt() * Hp::from(eps_h)).log2() * 2.0;
    first + second
}

/// Thermal-state entropy in bits.
fn g(x: &Hp) -> Hp {
    if !x.is_positive() {
        return Hp::from(0.0);
    }
    let x1 = x + 1.0;
    &x1 * &x1.log2() - x * &x.log2()
}

/// Larger and smaller root of `t^2 - sum t + product`, square-rooted.
fn roots(sum: &Hp, product: &Hp) -> (Hp, Hp) {
    let disc = (sum.sq() - product * 4.0).max(Hp::from(0.0));
    let hi = (sum + &disc.sqrt()) / 2.0;
    let lo = (sum - &disc.sqrt()) / 2.0;
    (hi.sqrt(), lo.max(Hp::from(0.0)).sqrt())
}

pub struct Link {
    pub excess_noise: f64,
    pub electronic_noise: f64,
    pub efficiency: f64,
    pub loss_db_per_km: f64,
    pub km: f64,
}

pub fn holevo(va: f64, link: &Link) -> Hp {
    let t = transmittance(link.loss_db_per_km, link.km);
    let eta = Hp::from(link.efficiency);
    let v = Hp::from(va) + 1.0;
    let line = one() / &t - 1.0 + Hp::from(link.excess_noise);
    let det = (Hp::from(2.0) - &eta + Hp::from(link.electronic_noise) * 2.0) / &eta;
    let total = &line + &(&det / &t);

    let a = v.sq() * (one() - &t * 2.0) + &t * 2.0 + t.sq() * (&v + &line).sq();
    let b = t.sq() * (&v * &line + 1.0).sq();
    let (l1, l2) = roots(&a, &b);

    let scale = (&t * &(&v + &total)).sq();
    let rb = b.sqrt();
    let c_num = &a * &det.sq()
        + b.clone()
        + one()
        + &det * &(&v * &rb + &t * &(&v + &line)) * 2.0
        + &t * &(v.sq() - 1.0) * 2.0;
    let c = c_num / scale.clone();
    let d = (&v + &(&rb * &det)).sq() / scale;
    let (l3, l4) = roots(&c, &d);

    let term = |l: &Hp| g(&((l - 1.0) / 2.0));
    (term(&l1) + term(&l2) - term(&l3) - term(&l4)).max(Hp::from(0.0))
}

pub struct KeyInputs {
    pub fer: f64,
    pub snr: f64,
    pub va: f64,
    pub rate: f64,
    pub link: Link,
    pub alphabet: f64,
    pub eps_s: f64,
    pub eps_h: f64,
    pub n: f64,
    pub k: f64,
}

pub fn key_rate(x: &KeyInputs) -> Hp {
    let p_ec = 1.0 - x.fer;
    let i_ab = (Hp::from(x.snr) + 1.0).log2();
    let k = Hp::from(x.k);
    let bracket = beta(x.rate, x.snr) * i_ab - holevo(x.va, &x.link) - delta_aep(x.alphabet, p_ec, x.eps_s) / k.sqrt()
        + theta(p_ec, x.eps_s, x.eps_h) / k.clone();
    (Hp::from(x.k) / Hp::from(x.n) * Hp::from(p_ec) * bracket).max(Hp::from(0.0))
}
