//! Linear systems whose coefficients and unknowns are jets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::mono::Mono;
use crate::scalar::Scalar;
use crate::symbol::HomSymbol;
use crate::xipoly::{CJet, XiPoly};

/// One equation `sum_i coeffs[i] X_i = rhs`.
#[derive(Clone, Debug)]
pub struct Row<T: Scalar> {
    pub coeffs: Vec<Jet<T>>,
    pub rhs: Jet<T>,
}

/// Numerators `(A, B)` of `(A + B w) / q2^p`.
pub type Numerators<T> = (XiPoly<T>, XiPoly<T>);

/// Numerators of every symbol over the largest common power of `q2`. Each
/// symbol is lifted with its own metric, so contexts need not be shared.
pub fn common_numerators<T: Scalar>(syms: &[&HomSymbol<T>]) -> Vec<Numerators<T>> {
    let p = syms.iter().map(|s| s.q2_power()).max().unwrap_or(0);
    syms.iter().map(|s| s.lifted(p)).collect()
}

pub fn numerator_sub<T: Scalar>(a: &Numerators<T>, b: &Numerators<T>) -> Numerators<T> {
    (a.0.sub(&b.0), a.1.sub(&b.1))
}

pub fn numerator_truncated<T: Scalar>(a: &Numerators<T>, k_y: u32) -> Numerators<T> {
    (a.0.truncated(0, k_y), a.1.truncated(0, k_y))
}

/// Largest coefficient magnitude of a numerator pair.
pub fn numerator_magnitude<T: Scalar>(a: &Numerators<T>) -> f64 {
    a.0.terms()
        .chain(a.1.terms())
        .map(|(_, c)| c.max_magnitude())
        .fold(0.0, f64::max)
}

/// Rows expressing `sum_i cols[i] X_i = rhs` for real jets `X_i`, one per
/// numerator monomial and per real/imaginary part.
pub fn numerator_rows<T: Scalar>(cols: &[Numerators<T>], rhs: &Numerators<T>) -> Vec<Row<T>> {
    let mut monos: BTreeSet<(bool, Mono)> = BTreeSet::new();
    for (e, o) in cols.iter().chain([rhs]) {
        monos.extend(e.terms().map(|(m, _)| (false, *m)));
        monos.extend(o.terms().map(|(m, _)| (true, *m)));
    }
    let pick = |parts: &Numerators<T>, odd: bool, m: Mono| if odd { parts.1.coeff(m) } else { parts.0.coeff(m) };
    let mut rows = Vec::with_capacity(2 * monos.len());
    for (odd, m) in monos {
        let cs: Vec<CJet<T>> = cols.iter().map(|c| pick(c, odd, m)).collect();
        let r = pick(rhs, odd, m);
        rows.push(Row {
            coeffs: cs.iter().map(|c| c.map(|z| z.re.clone())).collect(),
            rhs: r.map(|z| z.re.clone()),
        });
        rows.push(Row {
            coeffs: cs.iter().map(|c| c.map(|z| z.im.clone())).collect(),
            rhs: r.map(|z| z.im.clone()),
        });
    }
    rows
}

/// Rows of `sum_i (probes[i] - base) X_i = data - base`.
pub fn symbol_rows<T: Scalar>(probes: &[HomSymbol<T>], base: &HomSymbol<T>, data: &HomSymbol<T>, k_y: u32) -> Vec<Row<T>> {
    let mut all: Vec<&HomSymbol<T>> = probes.iter().collect();
    all.push(base);
    all.push(data);
    let nums: Vec<_> = common_numerators(&all).iter().map(|x| numerator_truncated(x, k_y)).collect();
    let (b, d) = (&nums[probes.len()], &nums[probes.len() + 1]);
    let cols: Vec<_> = nums[..probes.len()].iter().map(|c| numerator_sub(c, b)).collect();
    numerator_rows(&cols, &numerator_sub(d, b))
}

/// Gauss–Jordan elimination of the first `k` unknowns, pivoting on the
/// largest constant term. Returns the pivot rows (unit coefficient on their
/// own unknown, zero on the other eliminated ones) and the remaining rows,
/// whose first `k` coefficients vanish.
pub fn eliminate<T: Scalar>(rows: Vec<Row<T>>, k: usize) -> Result<(Vec<Row<T>>, Vec<Row<T>>)> {
    let mut rows: Vec<Row<T>> = rows
        .into_iter()
        .filter(|r| !(r.rhs.is_zero() && r.coeffs.iter().all(|c| c.is_zero())))
        .collect();
    for col in 0..k {
        let best = (col..rows.len())
            .filter(|&i| !rows[i].coeffs[col].constant_term().is_negligible())
            .max_by(|&a, &b| {
                let ma = rows[a].coeffs[col].constant_term().magnitude();
                let mb = rows[b].coeffs[col].constant_term().magnitude();
                ma.total_cmp(&mb)
            })
            .ok_or_else(|| Error::Degenerate(format!("unknown {col} is not determined by the data")))?;
        rows.swap(col, best);
        let inv = rows[col].coeffs[col].reciprocal()?;
        let pr = Row {
            coeffs: rows[col].coeffs.iter().map(|c| c * &inv).collect(),
            rhs: &rows[col].rhs * &inv,
        };
        for (i, row) in rows.iter_mut().enumerate() {
            if i == col || row.coeffs[col].is_zero() {
                continue;
            }
            let f = row.coeffs[col].clone();
            for (c, pc) in row.coeffs.iter_mut().zip(&pr.coeffs) {
                *c = &*c - &(&f * pc);
            }
            row.rhs = &row.rhs - &(&f * &pr.rhs);
        }
        rows[col] = pr;
    }
    let rest = rows.split_off(k);
    Ok((rows, rest))
}

/// Solves for all unknowns; every row not used as a pivot must reduce to
/// `0 = 0`.
pub fn solve<T: Scalar>(rows: Vec<Row<T>>, unknowns: usize) -> Result<Vec<Jet<T>>> {
    let (pivots, rest) = eliminate(rows, unknowns)?;
    if let Some(r) = rest.iter().find(|r| !r.rhs.is_zero()) {
        return Err(Error::Inconsistent(format!(
            "overdetermined system has a nonzero residual (max {:.3e})",
            r.rhs.max_magnitude()
        )));
    }
    Ok(pivots.into_iter().map(|r| r.rhs).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetShape;
    use crate::scalar::{rat, Rational};

    #[test]
    fn two_by_two_over_jets() {
        let s = JetShape::new(3, 0, 2);
        let y = Jet::<Rational>::variable(s, 1);
        let one = Jet::one(s);
        let x1 = &one + &y;
        let x2 = (&y * &y).scale(&rat(3, 1));
        // (1 + y) X1 + X2 = b1 ; y X1 + 2 X2 = b2 ; X1 - X2 = b3 (redundant)
        let a = [[&one + &y, one.clone()], [y.clone(), one.scale(&rat(2, 1))], [one.clone(), -&one]];
        let rows: Vec<Row<Rational>> = a
            .iter()
            .map(|r| Row { rhs: &(&r[0] * &x1) + &(&r[1] * &x2), coeffs: r.to_vec() })
            .collect();
        let sol = solve(rows.clone(), 2).unwrap();
        assert_eq!(sol[0], x1);
        assert_eq!(sol[1], x2);
        let mut bad = rows;
        bad[2].rhs = &bad[2].rhs + &one;
        assert!(matches!(solve(bad, 2), Err(Error::Inconsistent(_))));
    }
}
