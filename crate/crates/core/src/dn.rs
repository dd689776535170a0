//! Boundary symbols of the Dirichlet-to-Neumann maps.
//!
//! The observable symbol of a DN map is `density · b|_{r=0}` where `b` is the
//! symbol of the first-order factor: `∂_r u|_{r=0} = B u_0` modulo smoothing
//! operators, with `r` the inward normal distance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{factorize_gauge, factorize_scalar, FactorizationResult};
use crate::geometry::{BoundaryMetricJet, Density, GaugeData, GaugeTag, WeightJet};
use crate::jet::{Jet, JetShape};
use crate::matrix::JetMatrix;
use crate::mono::Mono;
use crate::scalar::Scalar;
use crate::symbol::{FormalSymbol, HomSymbol, SymbolCtx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Weighted conormal derivative of the scalar problem.
    Lambda0,
    /// Conormal derivative of the gauge problem along the parallel section.
    Lambda1,
}

#[derive(Clone, Debug)]
pub struct DNSymbolData<T: Scalar> {
    pub kind: MapKind,
    pub gauge: Option<GaugeTag>,
    /// Components of `b` at `r = 0`, grades `1` down to `2 - depth`.
    pub symbol: FormalSymbol<T>,
    /// Density at `r = 0`.
    pub density: Density<T>,
    pub n: usize,
    pub depth: usize,
    /// Truncation of the jets the data was computed from.
    pub source_shape: JetShape,
}

fn assemble<T: Scalar>(
    kind: MapKind,
    gauge: Option<GaugeTag>,
    g: &BoundaryMetricJet<T>,
    f: FactorizationResult<T>,
    density: Density<T>,
) -> Result<DNSymbolData<T>> {
    let ctx = g.ctx().restricted()?;
    Ok(DNSymbolData {
        kind,
        gauge,
        symbol: f.symbol.restrict_boundary(&ctx),
        density: density.restrict_boundary(),
        n: g.n(),
        depth: f.depth,
        source_shape: g.shape(),
    })
}

/// `Λ⁰`: symbol of `C` at the boundary with density `e^{-V} sqrt δ`.
pub fn dn_symbol_scalar<T: Scalar>(g: &BoundaryMetricJet<T>, v: &WeightJet<T>, depth: usize) -> Result<DNSymbolData<T>> {
    let f = factorize_scalar(g, v, depth)?;
    let density = Density::weighted_sqrt_delta(g.delta(), &v.v)?;
    assemble(MapKind::Lambda0, None, g, f, density)
}

/// `Λ¹_ζ` presented in gauge `s` (density `e^{-V} sqrt δ`) or `σ`
/// (density `sqrt δ`).
pub fn dn_symbol_gauge<T: Scalar>(
    g: &BoundaryMetricJet<T>,
    v: &WeightJet<T>,
    depth: usize,
    tag: GaugeTag,
) -> Result<DNSymbolData<T>> {
    let gauge = match tag {
        GaugeTag::GaugeS => GaugeData::gauge_s(g, v)?,
        GaugeTag::GaugeSigma => GaugeData::gauge_sigma(g, v)?,
        GaugeTag::Custom => return Err(Error::Invalid("DN data needs gauge s or gauge sigma".into())),
    };
    let f = factorize_gauge(g, &gauge, depth)?;
    assemble(MapKind::Lambda1, Some(tag), g, f, gauge.density.clone())
}

/// Square of the principal observable written as `e^{2ℓ} ρ · N^{αβ} ξ_α ξ_β`.
#[derive(Clone, Debug)]
pub struct PrincipalForm<T: Scalar> {
    /// `2ℓ`.
    pub log_factor: T,
    /// `ρ`.
    pub radicand: T,
    /// `N^{αβ}`, symmetric matrix of boundary jets.
    pub matrix: JetMatrix<T>,
}

impl<T: Scalar> DNSymbolData<T> {
    pub fn ctx(&self) -> &Arc<SymbolCtx<T>> {
        self.symbol.ctx()
    }

    pub fn component(&self, grade: i32) -> Result<&HomSymbol<T>> {
        self.symbol
            .get(grade)
            .ok_or_else(|| Error::Truncation(format!("grade {grade} not present at depth {}", self.depth)))
    }

    /// `unit · b_j`; the observable is this times `e^ℓ sqrt ρ`.
    pub fn observable_unit(&self, grade: i32) -> Result<HomSymbol<T>> {
        Ok(self.component(grade)?.mul_jet(&self.density.unit.complexify()))
    }

    /// Numerical observable at the base point.
    pub fn observable_f64(&self, grade: i32, xi: &[f64]) -> Result<num_complex::Complex<f64>> {
        Ok(self.observable_unit(grade)?.eval_at_base(xi) * self.density.constant_f64())
    }

    /// Squares the principal observable and reads off the quadratic form.
    pub fn principal_form(&self) -> Result<PrincipalForm<T>> {
        let p = self.observable_unit(1)?;
        let sq = p.checked_mul(&p)?;
        if !sq.odd().is_zero() || sq.q2_power() != 0 {
            return Err(Error::Inconsistent("squared principal symbol is not a quadratic form".into()));
        }
        let m = self.n - 1;
        let half = T::from_ratio(1, 2);
        let even = sq.even();
        let shape = even.shape();
        let mut matrix = vec![vec![Jet::zero(shape); m]; m];
        for a in 0..m {
            for b in a..m {
                let c = even.coeff(Mono::var(a).mul(Mono::var(b)));
                if !c.map(|z| z.im.clone()).is_zero() {
                    return Err(Error::Inconsistent("principal form is not real".into()));
                }
                let re = c.map(|z| z.re.clone());
                let e = if a == b { re } else { re.scale(&half) };
                matrix[a][b] = e.clone();
                matrix[b][a] = e;
            }
        }
        Ok(PrincipalForm {
            log_factor: self.density.log_factor.clone() * T::from_int(2),
            radicand: self.density.radicand.clone(),
            matrix,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    type R = Rational;

    #[test]
    fn flat_principal_observable() {
        let s = JetShape::new(3, 4, 3);
        let g = BoundaryMetricJet::<R>::flat(s);
        let dn = dn_symbol_scalar(&g, &WeightJet::zero(s), 3).unwrap();
        let v = dn.observable_f64(1, &[3.0, 4.0]).unwrap();
        assert!((v.re + 5.0).abs() < 1e-12);
        assert_eq!(dn.density.to_jet().unwrap(), Jet::one(s.boundary()));
    }

    #[test]
    fn constant_weight_only_changes_the_density() {
        let s = JetShape::new(3, 4, 3);
        let g = BoundaryMetricJet::<R>::flat(s);
        let a = dn_symbol_scalar(&g, &WeightJet::zero(s), 3).unwrap();
        let b = dn_symbol_scalar(&g, &WeightJet::new(Jet::constant(s, rat(2, 1))), 3).unwrap();
        assert_eq!(b.density.log_factor, rat(-2, 1));
        for j in -1..=1 {
            let x = b.component(j).unwrap().rehomed(a.ctx()).unwrap();
            assert!(x.equals(a.component(j).unwrap()).unwrap());
        }
    }
}
