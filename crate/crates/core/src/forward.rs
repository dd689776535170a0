//! Numerical DN ratios of rotationally symmetric weighted Laplacians on the
//! Euclidean unit disk, and their comparison with symbol partial sums.
//!
//! For `u = φ(ρ) e^{ikθ}` the equation `-Δu + ⟨∇V, ∇u⟩ = 0` reads
//! `φ'' + φ'/ρ - k²φ/ρ² = V'(ρ) φ'`. With `φ'/φ = k/ρ + z`,
//! `z' = V'(ρ)(k/ρ + z) - (2k + 1) z/ρ - z²`, `z(0) = 0`, and the inward
//! conormal ratio at `ρ = 1` is `-(k + z(1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::dn::dn_symbol_scalar;
use crate::geometry::{BoundaryMetricJet, WeightJet};
use crate::jet::{Jet, JetShape};
use crate::mono::Mono;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialProblem {
    /// `V(ρ) = sum_i v[i] ρ^i`.
    pub v: Vec<f64>,
    pub modes: Vec<u32>,
    /// Start of the integration; `z(ε) = 0`.
    pub eps: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl RadialProblem {
    pub fn new(v: Vec<f64>, modes: Vec<u32>) -> Self {
        RadialProblem { v, modes, eps: 1e-6, rtol: 1e-12, atol: 1e-14, max_steps: 200_000 }
    }

    /// `V(ρ) = a (1 - ρ)² / 2`.
    pub fn quadratic(a: f64, modes: Vec<u32>) -> Self {
        Self::new(vec![a / 2.0, -a, a / 2.0], modes)
    }

    fn dv(&self, rho: f64) -> f64 {
        self.v.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, c)| acc * rho + i as f64 * c)
    }

    /// Coefficients of `V` in `r = 1 - ρ`.
    pub fn v_in_r(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.v.len()];
        // (1 - r)^i = sum_j C(i, j) (-r)^j
        for (i, c) in self.v.iter().enumerate() {
            let mut binom = 1.0;
            for (j, o) in out.iter_mut().enumerate().take(i + 1) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *o += c * binom * sign;
                binom = binom * (i - j) as f64 / (j + 1) as f64;
            }
        }
        out
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` with the Dormand–Prince 5(4)
/// pair and standard step-size control.
pub fn dopri5(
    f: impl Fn(f64, f64) -> f64,
    t0: f64,
    y0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
    max_steps: usize,
) -> Result<f64> {
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0) * 1e-3;
    let mut k = [0.0; 7];
    k[0] = f(t, y);
    for _ in 0..max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        for s in 1..7 {
            let inc: f64 = (0..s).map(|j| A[s][j] * k[j]).sum();
            k[s] = f(t + C[s] * h, y + h * inc);
        }
        let y_new = y + h * (0..7).map(|j| B[j] * k[j]).sum::<f64>();
        let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = atol + rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if !ratio.is_finite() || !y_new.is_finite() {
            return Err(Error::Solver(format!("non-finite state at t = {t}")));
        }
        if ratio <= 1.0 {
            t += h;
            y = y_new;
            k[0] = k[6];
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Solver(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Solver(format!("no convergence within {max_steps} steps")))
}

/// Inward conormal ratio `∂_r u / u` at the boundary for mode `k`.
pub fn solve_mode(p: &RadialProblem, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Invalid("modes start at k = 1".into()));
    }
    if !(p.eps > 0.0 && p.eps < 1.0) {
        return Err(Error::Invalid(format!("cutoff {} outside (0, 1)", p.eps)));
    }
    let kf = k as f64;
    let rhs = |rho: f64, z: f64| p.dv(rho) * (kf / rho + z) - (2.0 * kf + 1.0) * z / rho - z * z;
    let z1 = dopri5(rhs, p.eps, 0.0, 1.0, p.rtol, p.atol, p.max_steps)?;
    Ok(-(kf + z1))
}

/// Grades `1` down to `1 - order` of the scalar symbol at the boundary of
/// the disk, evaluated at `ξ = k` and summed.
pub fn symbol_partial_sums(p: &RadialProblem, order: usize, modes: &[u32]) -> Result<Vec<f64>> {
    let depth = order + 1;
    let shape = JetShape::new(2, depth as u32 + 1, depth as u32);
    let r = |m: u32| Mono::from_exps(&[m]);
    // g_θθ = (1 - r)²
    let one_minus_r = Jet::<f64>::from_terms(shape, [(r(0), 1.0), (r(1), -1.0)]);
    let g = BoundaryMetricJet::from_lower(vec![vec![&one_minus_r * &one_minus_r]])?;
    let v = WeightJet::new(Jet::from_terms(
        shape,
        p.v_in_r().into_iter().enumerate().map(|(m, c)| (r(m as u32), c)),
    ));
    let d = dn_symbol_scalar(&g, &v, depth)?;
    Ok(modes
        .iter()
        .map(|&k| d.symbol.components().map(|c| c.eval_at_base(&[k as f64]).re).sum())
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: u32,
    pub numeric: f64,
    pub partial_sum: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticComparison {
    /// Lowest grade in the partial sum is `1 - order`.
    pub order: usize,
    pub rows: Vec<ComparisonRow>,
    /// Least-squares slope of `ln |error|` against `ln k`; absent when every
    /// error is at the round-off floor.
    pub slope: Option<f64>,
    pub pass: bool,
}

/// Errors below this are treated as the discretization floor.
const FLOOR: f64 = 1e-11;

/// Compares numeric ratios with the symbol partial sum through grade
/// `1 - order`; passes when the fitted decay exponent is at most
/// `-(order - 0.3)`.
pub fn asymptotic_compare(p: &RadialProblem, order: usize) -> Result<AsymptoticComparison> {
    let lo = p.modes.iter().copied().min().unwrap_or(0);
    let hi = p.modes.iter().copied().max().unwrap_or(0);
    if p.modes.len() < 3 || hi < 2 * lo.max(1) {
        return Err(Error::Invalid("need at least three modes spanning an octave".into()));
    }
    let sums = symbol_partial_sums(p, order, &p.modes)?;
    let rows = p
        .modes
        .iter()
        .zip(sums)
        .map(|(&k, s)| {
            let numeric = solve_mode(p, k)?;
            Ok(ComparisonRow { k, numeric, partial_sum: s, error: (numeric - s).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > FLOOR)
        .map(|r| ((r.k as f64).ln(), r.error.ln()))
        .collect();
    let slope = (pts.len() >= 3).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let pass = match slope {
        Some(s) => s <= -(order as f64 - 0.3),
        None => rows.iter().all(|r| r.error <= FLOOR),
    };
    Ok(AsymptoticComparison { order, rows, slope, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_modes() {
        let p = RadialProblem::new(vec![0.0], vec![]);
        for k in [1, 5, 40] {
            let v = solve_mode(&p, k).unwrap();
            assert!((v + k as f64).abs() < 1e-12 * k as f64);
        }
    }

    #[test]
    fn dopri_exponential() {
        let y = dopri5(|_, y| y, 0.0, 1.0, 1.0, 1e-12, 1e-14, 10_000).unwrap();
        assert!((y - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn weight_in_r() {
        let p = RadialProblem::quadratic(2.0, vec![]);
        let c = p.v_in_r();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15 && (c[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_weight_mode_matches_series() {
        // V = a ρ: z' = a(k/ρ + z) - (2k+1) z/ρ - z², compare two tolerances
        let mut p = RadialProblem::new(vec![0.0, 0.5], vec![]);
        let a = solve_mode(&p, 12).unwrap();
        p.rtol = 1e-9;
        let b = solve_mode(&p, 12).unwrap();
        assert!((a - b).abs() < 1e-7);
        assert!(a < -12.0 + 0.5);
    }
}
