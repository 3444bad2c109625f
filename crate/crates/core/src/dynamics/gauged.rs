//! The gauged equation
//!
//! ```text
//! i ∂t v = Δv − 2∇Y_ε·∇v + (V_0 + s) v − λ e^{−pY_ε} v |v|^p
//! ```
//!
//! with `V_0 = |∇Y_ε|^2 − ΔY_ε + ξ_ε` and constant shift `s = −c_ε` when
//! renormalized, `s = 0` otherwise. Integrated by a Lawson (integrating
//! factor) RK4 that treats `Δ + s` exactly.

use crate::error::Result;
use crate::gauge::GaugeContext;
use crate::grid::{Domain, Field, GridSpec, Transformer};
use crate::C64;

use super::primitive::{abs_pow, two_thirds_mask};

pub struct GaugedSystem {
    grid: GridSpec,
    /// `V_0 = Ṽ_ε + c_ε`.
    v0: Vec<f64>,
    shift: f64,
    a1: Vec<f64>,
    a2: Vec<f64>,
    exp_neg_p: Vec<f64>,
    lambda: f64,
    p: f64,
    k2: Vec<f64>,
    kd: Vec<f64>,
    dealias: Option<Vec<f64>>,
    fft: Transformer,
    factor: Option<(f64, Vec<C64>)>,
    bufs: [Vec<C64>; 3],
}

impl GaugedSystem {
    pub fn new(ctx: &GaugeContext, lambda: f64, renormalize: bool, dealias: bool) -> Self {
        let grid = *ctx.grid();
        let b = &ctx.bundle;
        let zero = C64::new(0.0, 0.0);
        GaugedSystem {
            grid,
            v0: b.v_tilde.values().iter().map(|z| z.re + ctx.c_eps).collect(),
            shift: if renormalize { -ctx.c_eps } else { 0.0 },
            a1: b.grad_y_eps.0.real_parts(),
            a2: b.grad_y_eps.1.real_parts(),
            exp_neg_p: ctx.exp_neg_p.clone(),
            lambda,
            p: ctx.p,
            k2: grid.k_squared(),
            kd: grid.derivative_wavenumbers(),
            dealias: dealias.then(|| two_thirds_mask(&grid)),
            fft: Transformer::new(grid.n()),
            factor: None,
            bufs: [vec![zero; grid.len()], vec![zero; grid.len()], vec![zero; grid.len()]],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Fills `bufs[0] = v`, `bufs[1] = ∂1 v`, `bufs[2] = ∂2 v` from the
    /// spectral coefficients `a`.
    fn physical_with_gradient(&mut self, a: &[C64]) {
        let n = self.grid.n();
        let [v, g1, g2] = &mut self.bufs;
        for m1 in 0..n {
            let k1 = self.kd[m1];
            for m2 in 0..n {
                let i = m1 * n + m2;
                let z = a[i];
                v[i] = z;
                g1[i] = C64::new(-k1 * z.im, k1 * z.re);
                g2[i] = C64::new(-self.kd[m2] * z.im, self.kd[m2] * z.re);
            }
        }
        self.fft.inverse(v);
        self.fft.inverse(g1);
        self.fft.inverse(g2);
    }

    /// Spectral coefficients of `N(v) = −i(V_0 v − 2∇Y·∇v − λ v|v|^p e^{−pY})`.
    fn nonlinear_hat(&mut self, a: &[C64], out: &mut [C64]) {
        self.physical_with_gradient(a);
        let [v, g1, g2] = &self.bufs;
        for i in 0..out.len() {
            let z = v[i];
            let drift = 2.0 * (self.a1[i] * g1[i] + self.a2[i] * g2[i]);
            let nl = self.lambda * abs_pow(z.norm_sqr(), self.p) * self.exp_neg_p[i];
            let r = (self.v0[i] - nl) * z - drift;
            out[i] = C64::new(r.im, -r.re);
        }
        self.fft.forward(out);
        if let Some(mask) = &self.dealias {
            for (o, k) in out.iter_mut().zip(mask) {
                *o *= *k;
            }
        }
    }

    /// `e^{i(|k|^2 − s)τ}` for `τ = dt/2`.
    fn half_factor(&mut self, dt: f64) -> Vec<C64> {
        let rebuild = !matches!(&self.factor, Some((d, _)) if *d == dt);
        if rebuild {
            let e = self.k2.iter().map(|k| C64::from_polar(1.0, (k - self.shift) * 0.5 * dt)).collect();
            self.factor = Some((dt, e));
        }
        self.factor.as_ref().unwrap().1.clone()
    }

    /// One Lawson RK4 step on spectral coefficients `a`.
    pub fn step_hat(&mut self, a: &mut [C64], dt: f64) {
        let n = a.len();
        let e = self.half_factor(dt);
        let zero = C64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut tmp = vec![zero; n];
        self.nonlinear_hat(a, &mut k1);
        for i in 0..n {
            tmp[i] = e[i] * (a[i] + 0.5 * dt * k1[i]);
        }
        self.nonlinear_hat(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = e[i] * a[i] + 0.5 * dt * k2[i];
        }
        self.nonlinear_hat(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = e[i] * (e[i] * a[i] + dt * k3[i]);
        }
        self.nonlinear_hat(&tmp, &mut k4);
        for i in 0..n {
            let e2 = e[i] * e[i];
            a[i] = e2 * a[i] + dt / 6.0 * (e2 * k1[i] + 2.0 * e[i] * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// `∂t v` of the renormalized equation (`s = −c_ε` regardless of the
    /// shift used for stepping).
    pub fn time_derivative(&mut self, v: &Field, c_eps: f64) -> Result<Field> {
        self.grid.check_same(v.grid())?;
        v.expect(Domain::Physical, "time derivative")?;
        let mut a = v.values().to_vec();
        self.fft.forward(&mut a);
        let mut out = vec![C64::new(0.0, 0.0); a.len()];
        self.nonlinear_hat(&a, &mut out);
        let i = C64::new(0.0, 1.0);
        for idx in 0..a.len() {
            out[idx] += i * (self.k2[idx] + c_eps) * a[idx];
        }
        self.fft.inverse(&mut out);
        Field::from_values(self.grid, out, Domain::Physical)
    }

    pub fn forward(&mut self, v: &mut [C64]) {
        self.fft.forward(v);
    }

    pub fn inverse(&mut self, v: &mut [C64]) {
        self.fft.inverse(v);
    }
}
