//! Small dense matrices of jets.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::Scalar;

pub type JetMatrix<T> = Vec<Vec<Jet<T>>>;

/// Inverse and determinant by Gaussian elimination without pivoting.
///
/// With `require_spd` every pivot's constant term must be positive, which is
/// exactly positivity of the leading principal minors of the constant matrix.
pub fn inverse_and_det<T: Scalar>(m: &[Vec<Jet<T>>], require_spd: bool) -> Result<(JetMatrix<T>, Jet<T>)> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("matrix must be square and non-empty".into()));
    }
    let shape = m
        .iter()
        .flatten()
        .try_fold(m[0][0].shape(), |s, e| s.meet(&e.shape()))?;
    let mut a: JetMatrix<T> = m.iter().map(|r| r.iter().map(|e| e.truncated(shape.k_r, shape.k_y)).collect()).collect();
    let mut inv: JetMatrix<T> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Jet::one(shape) } else { Jet::zero(shape) }).collect())
        .collect();
    let mut det = Jet::one(shape);
    for k in 0..n {
        let p0 = a[k][k].constant_term();
        if require_spd && !(p0 > T::zero() && !p0.is_negligible()) {
            return Err(Error::NonPositive(format!("leading principal minor {} is not positive", k + 1)));
        }
        let pinv = a[k][k].reciprocal().map_err(|_| Error::Degenerate(format!("pivot {k} vanishes")))?;
        det = &det * &a[k][k];
        for j in 0..n {
            a[k][j] = &a[k][j] * &pinv;
            inv[k][j] = &inv[k][j] * &pinv;
        }
        for i in 0..n {
            if i == k || a[i][k].is_zero() {
                continue;
            }
            let f = a[i][k].clone();
            for j in 0..n {
                let t = &f * &a[k][j];
                a[i][j] = &a[i][j] - &t;
                let t = &f * &inv[k][j];
                inv[i][j] = &inv[i][j] - &t;
            }
        }
    }
    Ok((inv, det))
}

pub fn mat_mul<T: Scalar>(a: &[Vec<Jet<T>>], b: &[Vec<Jet<T>>]) -> JetMatrix<T> {
    let n = a.len();
    let shape = a[0][0].shape().meet(&b[0][0].shape()).expect("matrices over different charts");
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Jet::zero(shape), |acc, k| &acc + &(&a[i][k] * &b[k][j])))
                .collect()
        })
        .collect()
}

/// Determinant of a scalar matrix by elimination with partial pivoting.
pub fn scalar_det<T: Scalar>(m: &[Vec<T>]) -> T {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut det = T::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_negligible()) else {
            return T::zero();
        };
        if p != k {
            a.swap(p, k);
            det = det.neg_ref();
        }
        let pinv = a[k][k].inv().unwrap();
        det = det.mul_ref(&a[k][k]);
        for i in k + 1..n {
            let f = a[i][k].mul_ref(&pinv);
            for j in k..n {
                let t = f.mul_ref(&a[k][j]);
                a[i][j].sub_assign_ref(&t);
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetShape;
    use crate::scalar::{rat, Rational};

    #[test]
    fn inverse_of_diagonal_jet_matrix() {
        let s = JetShape::new(3, 3, 1);
        let r = Jet::<Rational>::variable(s, 0);
        let d = &Jet::one(s) + &r.scale(&rat(2, 1));
        let m = vec![vec![d.clone(), Jet::zero(s)], vec![Jet::zero(s), Jet::one(s)]];
        let (inv, det) = inverse_and_det(&m, true).unwrap();
        assert_eq!(det, d);
        assert_eq!(&inv[0][0] * &d, Jet::one(s));
        let id = mat_mul(&m, &inv);
        assert_eq!(id[0][1], Jet::zero(s));
    }

    #[test]
    fn indefinite_constant_term_is_rejected() {
        let s = JetShape::new(3, 1, 1);
        let m = vec![
            vec![Jet::<Rational>::one(s), Jet::constant(s, rat(2, 1))],
            vec![Jet::constant(s, rat(2, 1)), Jet::one(s)],
        ];
        assert!(matches!(inverse_and_det(&m, true), Err(Error::NonPositive(_))));
        assert!(inverse_and_det(&m, false).is_ok());
    }

    #[test]
    fn scalar_determinant() {
        let m: Vec<Vec<Rational>> = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(2, 1), rat(3, 1)]];
        assert_eq!(scalar_det(&m), rat(-2, 1));
    }
}
