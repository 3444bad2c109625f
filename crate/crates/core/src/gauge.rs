//! Maps between the original unknown `u`, the gauged unknown `v = e^{Y_ε} u`
//! (up to the renormalizing phase) and the primitive unknown `w = e^{-Y_ε} v`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridSpec};
use crate::noise::NoiseBundle;
use crate::C64;

#[derive(Debug, Clone)]
pub struct GaugeContext {
    pub bundle: Arc<NoiseBundle>,
    pub p: f64,
    pub c_eps: f64,
    /// `e^{+Y_ε}`
    pub exp_pos: Vec<f64>,
    /// `e^{−Y_ε}`
    pub exp_neg: Vec<f64>,
    /// `e^{−pY_ε}`, formed as `exp(p · log e^{−Y_ε})`.
    pub exp_neg_p: Vec<f64>,
}

impl GaugeContext {
    pub fn new(bundle: Arc<NoiseBundle>, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::config(format!("nonlinearity exponent must be positive, got {p}")));
        }
        let y = bundle.y_eps.real_parts();
        let exp_pos: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let exp_neg: Vec<f64> = y.iter().map(|v| (-v).exp()).collect();
        let exp_neg_p = exp_neg.iter().map(|e| (p * e.ln()).exp()).collect();
        Ok(GaugeContext {
            c_eps: bundle.c_eps,
            bundle,
            p,
            exp_pos,
            exp_neg,
            exp_neg_p,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.bundle.grid()
    }

    fn scaled(&self, f: &Field, weights: &[f64], phase: C64) -> Result<Field> {
        self.grid().check_same(f.grid())?;
        f.expect(Domain::Physical, "gauge map")?;
        let values = f
            .values()
            .iter()
            .zip(weights)
            .map(|(z, w)| z * *w * phase)
            .collect();
        Field::from_values(*f.grid(), values, Domain::Physical)
    }

    /// `w = e^{−Y_ε} v`
    pub fn to_primitive(&self, v: &Field) -> Result<Field> {
        self.scaled(v, &self.exp_neg, C64::new(1.0, 0.0))
    }

    /// `v = e^{Y_ε} w`
    pub fn from_primitive(&self, w: &Field) -> Result<Field> {
        self.scaled(w, &self.exp_pos, C64::new(1.0, 0.0))
    }

    /// `u = e^{−i c_ε t} e^{−Y_ε} v`
    pub fn to_original(&self, v: &Field, t: f64) -> Result<Field> {
        self.scaled(v, &self.exp_neg, C64::from_polar(1.0, -self.c_eps * t))
    }

    /// `e^{i c_ε t} e^{Y_ε} u`, the inverse of [`GaugeContext::to_original`].
    pub fn from_original(&self, u: &Field, t: f64) -> Result<Field> {
        self.scaled(u, &self.exp_pos, C64::from_polar(1.0, self.c_eps * t))
    }
}
