//! Packed multi-indices.
//!
//! Exponents live in the bytes of a `u64`, one byte per variable, so a
//! monomial product is a single integer addition. At most eight variables,
//! each exponent below 256; every caller stays far inside both limits.

use std::fmt;

pub const MAX_VARS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(u64);

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn from_exps(exps: &[u32]) -> Self {
        assert!(exps.len() <= MAX_VARS, "too many variables");
        let mut packed = 0u64;
        for (i, &e) in exps.iter().enumerate() {
            assert!(e < 256, "exponent overflow");
            packed |= (e as u64) << (8 * i);
        }
        Mono(packed)
    }

    pub fn var(i: usize) -> Self {
        Mono(1u64 << (8 * i))
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> (8 * i)) & 0xff) as u32
    }

    /// Sum of all exponents.
    #[inline]
    pub fn total(self) -> u32 {
        (self.0.wrapping_mul(0x0101_0101_0101_0101) >> 56) as u32
    }

    #[inline]
    pub fn mul(self, other: Mono) -> Mono {
        Mono(self.0 + other.0)
    }

    /// Lowers exponent `i` by one, `None` when it is already zero.
    pub fn div_var(self, i: usize) -> Option<Mono> {
        (self.exp(i) > 0).then(|| Mono(self.0 - (1u64 << (8 * i))))
    }

    /// Quotient `self / other` when `other` divides `self`.
    pub fn div(self, other: Mono) -> Option<Mono> {
        (0..MAX_VARS)
            .all(|i| self.exp(i) >= other.exp(i))
            .then(|| Mono(self.0 - other.0))
    }

    pub fn exps(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exp(i)).collect()
    }

    /// Product of factorials of the exponents.
    pub fn factorial(self) -> u64 {
        (0..MAX_VARS)
            .map(|i| (1..=self.exp(i) as u64).product::<u64>())
            .product()
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<u32> = (0..MAX_VARS).map(|i| self.exp(i)).collect();
        let used = e.iter().rposition(|&x| x > 0).map_or(0, |p| p + 1);
        write!(f, "{:?}", &e[..used])
    }
}

/// All multi-indices in `nvars` variables with total degree exactly `deg`.
pub fn monomials_of_degree(nvars: usize, deg: u32) -> Vec<Mono> {
    fn rec(nvars: usize, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Mono>) {
        if i + 1 == nvars {
            cur.push(left);
            out.push(Mono::from_exps(cur));
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(nvars, i + 1, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if deg == 0 {
            out.push(Mono::ONE);
        }
        return out;
    }
    rec(nvars, 0, deg, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing() {
        let a = Mono::from_exps(&[2, 0, 3]);
        let b = Mono::from_exps(&[1, 4]);
        let c = a.mul(b);
        assert_eq!(c.exps(3), vec![3, 4, 3]);
        assert_eq!(c.total(), 10);
        assert_eq!(c.div(a), Some(b));
        assert_eq!(b.div(a), None);
        assert_eq!(a.factorial(), 2 * 6);
    }

    #[test]
    fn degree_enumeration() {
        assert_eq!(monomials_of_degree(2, 3).len(), 4);
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert!(monomials_of_degree(3, 2).iter().all(|m| m.total() == 2));
    }
}
