//! Signed numbers stored as `sign · 2^log2`, used when a C⁺ expression
//! leaves the double range (e.g. `2^(−‖x‖)` far from the origin).

use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Ext {
    pub sign: i8,
    pub log2: f64,
}

impl Ext {
    pub const ZERO: Ext = Ext {
        sign: 0,
        log2: f64::NEG_INFINITY,
    };

    pub fn from_f64(v: f64) -> Ext {
        if v == 0.0 {
            Ext::ZERO
        } else {
            Ext {
                sign: if v > 0.0 { 1 } else { -1 },
                log2: v.abs().log2(),
            }
        }
    }

    pub fn positive_log2(log2: f64) -> Ext {
        if log2 == f64::NEG_INFINITY {
            Ext::ZERO
        } else {
            Ext { sign: 1, log2 }
        }
    }

    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.log2.exp2()
    }

    pub fn neg(self) -> Ext {
        Ext {
            sign: -self.sign,
            log2: self.log2,
        }
    }

    pub fn add(self, other: Ext) -> Ext {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log2 >= other.log2 {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (lo.log2 - hi.log2).exp2();
        if hi.sign == lo.sign {
            Ext {
                sign: hi.sign,
                log2: hi.log2 + ratio.ln_1p() / std::f64::consts::LN_2,
            }
        } else {
            let rest = 1.0 - ratio;
            if rest <= 0.0 {
                Ext::ZERO
            } else {
                Ext {
                    sign: hi.sign,
                    log2: hi.log2 + rest.log2(),
                }
            }
        }
    }

    pub fn mul(self, other: Ext) -> Ext {
        if self.sign == 0 || other.sign == 0 {
            return Ext::ZERO;
        }
        Ext {
            sign: self.sign * other.sign,
            log2: self.log2 + other.log2,
        }
    }

    pub fn recip(self) -> Ext {
        Ext {
            sign: self.sign,
            log2: -self.log2,
        }
    }

    pub fn cmp(self, other: Ext) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            o => return o,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.log2.total_cmp(&other.log2),
            _ => other.log2.total_cmp(&self.log2),
        }
    }

    pub fn min(self, other: Ext) -> Ext {
        if self.cmp(other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        if self.cmp(other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_f64_in_range() {
        let vals = [3.5, -2.0, 0.125, 7.0, -0.3, 0.0];
        for &a in &vals {
            for &b in &vals {
                let (ea, eb) = (Ext::from_f64(a), Ext::from_f64(b));
                assert!((ea.add(eb).to_f64() - (a + b)).abs() < 1e-12, "{a}+{b}");
                assert!((ea.mul(eb).to_f64() - a * b).abs() < 1e-12);
                assert_eq!(ea.min(eb).to_f64(), a.min(b));
                assert_eq!(ea.max(eb).to_f64(), a.max(b));
            }
        }
    }

    #[test]
    fn far_below_double_range() {
        let tiny = Ext::positive_log2(-5000.0);
        let sum = tiny.add(tiny);
        assert!((sum.log2 + 4999.0).abs() < 1e-12);
        assert_eq!(tiny.add(tiny.neg()), Ext::ZERO);
        assert_eq!(tiny.min(Ext::from_f64(1.0)), tiny);
    }
}
