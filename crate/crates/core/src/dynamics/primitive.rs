//! The primitive equation `i ∂t w = Δw + V w − λ|w|^p w` with a real,
//! time-independent potential `V`.

use crate::error::{Error, Result};
use crate::gauge::GaugeContext;
use crate::grid::{GridSpec, Transformer};
use crate::C64;

/// `|z|^p` with a fast path for the cubic case.
#[inline]
pub(crate) fn abs_pow(m2: f64, p: f64) -> f64 {
    if p == 2.0 {
        m2
    } else {
        m2.powf(0.5 * p)
    }
}

/// 2/3-rule mask in FFT order: keeps `|m1|, |m2| <= n/3`.
pub(crate) fn two_thirds_mask(grid: &GridSpec) -> Vec<f64> {
    let n = grid.n();
    let cut = (n / 3) as i64;
    let mut mask = Vec::with_capacity(grid.len());
    for m1 in 0..n {
        for m2 in 0..n {
            let keep = grid.frequency_index(m1).abs() <= cut && grid.frequency_index(m2).abs() <= cut;
            mask.push(if keep { 1.0 } else { 0.0 });
        }
    }
    mask
}

pub struct PrimitiveSystem {
    grid: GridSpec,
    potential: Vec<f64>,
    lambda: f64,
    p: f64,
    k2: Vec<f64>,
    dealias: Option<Vec<f64>>,
    fft: Transformer,
    linear: Option<(f64, Vec<C64>)>,
    etd: Option<EtdCoefficients>,
    scratch: Vec<C64>,
}

/// `φ_j(z) = Σ_m z^m / (m + j)!`, by series near the origin.
fn phi(z: C64) -> [C64; 4] {
    let one = C64::new(1.0, 0.0);
    if z.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (j, o) in out.iter_mut().enumerate() {
            let mut term = one;
            for k in 1..=j {
                term /= k as f64;
            }
            let mut m = 0;
            while term.norm() > 1e-18 {
                *o += term;
                m += 1;
                term *= z / (m + j) as f64;
            }
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - one) / z;
        let p2 = (p1 - one) / z;
        let p3 = (p2 - 0.5) / z;
        [e, p1, p2, p3]
    }
}

/// Cox–Matthews ETD-RK4 weights for the multiplier `e^{i dt |k|^2}`.
struct EtdCoefficients {
    dt: f64,
    full: Vec<C64>,
    half: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
}

impl EtdCoefficients {
    fn new(k2: &[f64], dt: f64) -> Self {
        let n = k2.len();
        let mut c = EtdCoefficients {
            dt,
            full: Vec::with_capacity(n),
            half: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        for &k in k2 {
            let z = C64::new(0.0, dt * k);
            let [e, p1, p2, p3] = phi(z);
            let [e2, h1, _, _] = phi(0.5 * z);
            c.full.push(e);
            c.half.push(e2);
            c.q.push(0.5 * dt * h1);
            c.f1.push(dt * (p1 - 3.0 * p2 + 4.0 * p3));
            c.f2.push(dt * 2.0 * (p2 - 2.0 * p3));
            c.f3.push(dt * (4.0 * p3 - p2));
        }
        c
    }
}

impl PrimitiveSystem {
    pub fn new(grid: GridSpec, potential: Vec<f64>, lambda: f64, p: f64, dealias: bool) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::usage("potential length does not match the grid"));
        }
        Ok(PrimitiveSystem {
            grid,
            potential,
            lambda,
            p,
            k2: grid.k_squared(),
            dealias: dealias.then(|| two_thirds_mask(&grid)),
            fft: Transformer::new(grid.n()),
            linear: None,
            etd: None,
            scratch: vec![C64::new(0.0, 0.0); grid.len()],
        })
    }

    /// Potential `ξ_ε − c_ε`, or `ξ_ε` when `renormalize` is false.
    pub fn from_context(ctx: &GaugeContext, lambda: f64, renormalize: bool, dealias: bool) -> Result<Self> {
        let shift = if renormalize { ctx.c_eps } else { 0.0 };
        let potential = ctx.bundle.xi_eps.values().iter().map(|z| z.re - shift).collect();
        PrimitiveSystem::new(*ctx.grid(), potential, lambda, ctx.p, dealias)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Exact flow of `i ∂t w = (V − λ|w|^p) w` over `tau`; `|w|` is invariant.
    pub fn phase(&self, w: &mut [C64], tau: f64) {
        for (z, v) in w.iter_mut().zip(&self.potential) {
            let rate = v - self.lambda * abs_pow(z.norm_sqr(), self.p);
            *z *= C64::from_polar(1.0, -tau * rate);
        }
    }

    /// Exact flow of `i ∂t w = Δw` over `dt`: multiplier `e^{+i dt |k|^2}`.
    pub fn linear(&mut self, w: &mut [C64], dt: f64) {
        let rebuild = !matches!(&self.linear, Some((d, _)) if *d == dt);
        if rebuild {
            let m = self.k2.iter().map(|k| C64::from_polar(1.0, dt * k)).collect();
            self.linear = Some((dt, m));
        }
        let (_, m) = self.linear.as_ref().unwrap();
        self.fft.forward(w);
        for (z, e) in w.iter_mut().zip(m) {
            *z *= e;
        }
        if let Some(mask) = &self.dealias {
            for (z, k) in w.iter_mut().zip(mask) {
                *z *= *k;
            }
        }
        self.fft.inverse(w);
    }

    /// One Strang step: half phase, full linear, half phase.
    pub fn strang_step(&mut self, w: &mut [C64], dt: f64) {
        self.phase(w, 0.5 * dt);
        self.linear(w, dt);
        self.phase(w, 0.5 * dt);
    }

    /// Fourth-order triple-jump composition of three Strang steps.
    pub fn triple_jump_step(&mut self, w: &mut [C64], dt: f64) {
        let c = 2f64.powf(1.0 / 3.0);
        let outer = 1.0 / (2.0 - c);
        let inner = -c / (2.0 - c);
        self.strang_step(w, outer * dt);
        self.strang_step(w, inner * dt);
        self.strang_step(w, outer * dt);
    }

    /// Transform of `−i(V − λ|w|^p) w`, masked when dealiasing.
    fn nonlinear_hat(&mut self, w: &[C64], out: &mut [C64]) {
        let minus_i = C64::new(0.0, -1.0);
        for ((o, z), v) in out.iter_mut().zip(w).zip(&self.potential) {
            *o = minus_i * (v - self.lambda * abs_pow(z.norm_sqr(), self.p)) * z;
        }
        self.fft.forward(out);
        if let Some(mask) = &self.dealias {
            for (o, k) in out.iter_mut().zip(mask) {
                *o *= *k;
            }
        }
    }

    /// Exponential-integrator RK4 step: the Laplacian is integrated exactly
    /// against a polynomial-in-time forcing, so a slowly varying rough
    /// forcing is resolved at every frequency.
    pub fn etd_rk4_step(&mut self, w: &mut [C64], dt: f64) {
        if !matches!(&self.etd, Some(c) if c.dt == dt) {
            self.etd = Some(EtdCoefficients::new(&self.k2, dt));
        }
        let n = w.len();
        let zero = C64::new(0.0, 0.0);
        let mut nu = vec![zero; n];
        let mut na = vec![zero; n];
        let mut nb = vec![zero; n];
        let mut a = vec![zero; n];
        let mut tmp = vec![zero; n];
        self.nonlinear_hat(w, &mut nu);
        self.fft.forward(w);
        let c = self.etd.take().unwrap();
        for i in 0..n {
            a[i] = c.half[i] * w[i] + c.q[i] * nu[i];
        }
        tmp.copy_from_slice(&a);
        self.fft.inverse(&mut tmp);
        self.nonlinear_hat(&tmp, &mut na);
        for i in 0..n {
            tmp[i] = c.half[i] * w[i] + c.q[i] * na[i];
        }
        self.fft.inverse(&mut tmp);
        self.nonlinear_hat(&tmp, &mut nb);
        for i in 0..n {
            tmp[i] = c.half[i] * a[i] + c.q[i] * (2.0 * nb[i] - nu[i]);
        }
        self.fft.inverse(&mut tmp);
        let mut nc = a;
        self.nonlinear_hat(&tmp, &mut nc);
        for i in 0..n {
            w[i] = c.full[i] * w[i] + c.f1[i] * nu[i] + c.f2[i] * (na[i] + nb[i]) + c.f3[i] * nc[i];
        }
        if let Some(mask) = &self.dealias {
            for (z, k) in w.iter_mut().zip(mask) {
                *z *= *k;
            }
        }
        self.fft.inverse(w);
        self.etd = Some(c);
    }

    /// `∂t w = −i(Δw + V w − λ|w|^p w)`.
    pub fn rhs(&mut self, w: &[C64], out: &mut [C64]) {
        self.scratch.copy_from_slice(w);
        self.fft.forward(&mut self.scratch);
        for (z, k) in self.scratch.iter_mut().zip(&self.k2) {
            *z *= -k;
        }
        self.fft.inverse(&mut self.scratch);
        let minus_i = C64::new(0.0, -1.0);
        if let Some(mask) = &self.dealias {
            for (o, z) in out.iter_mut().zip(w) {
                *o = -self.lambda * abs_pow(z.norm_sqr(), self.p) * z;
            }
            self.fft.forward(out);
            for (o, k) in out.iter_mut().zip(mask) {
                *o *= *k;
            }
            self.fft.inverse(out);
            for i in 0..w.len() {
                out[i] = minus_i * (self.scratch[i] + self.potential[i] * w[i] + out[i]);
            }
        } else {
            for i in 0..w.len() {
                let z = w[i];
                let nl = self.lambda * abs_pow(z.norm_sqr(), self.p);
                out[i] = minus_i * (self.scratch[i] + (self.potential[i] - nl) * z);
            }
        }
    }

    /// Classical RK4 step of [`PrimitiveSystem::rhs`].
    pub fn rk4_step(&mut self, w: &mut [C64], dt: f64) {
        let n = w.len();
        let zero = C64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut tmp = vec![zero; n];
        self.rhs(w, &mut k1);
        for i in 0..n {
            tmp[i] = w[i] + 0.5 * dt * k1[i];
        }
        self.rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = w[i] + 0.5 * dt * k2[i];
        }
        self.rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = w[i] + dt * k3[i];
        }
        self.rhs(&tmp, &mut k4);
        for i in 0..n {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    /// Spectral radius bound of the right side at amplitude `amp`.
    pub fn stiffness(&self, amp: f64) -> f64 {
        let kmax = self.k2.iter().cloned().fold(0.0, f64::max);
        let vmax = self.potential.iter().map(|v| v.abs()).fold(0.0, f64::max);
        kmax + vmax + self.lambda * abs_pow(amp * amp, self.p)
    }

    /// `dt · (max|V| + λ max|w|^p)`: phase rotated per step.
    pub fn phase_per_step(&self, w: &[C64], dt: f64) -> f64 {
        let vmax = self.potential.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let amp = w.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        dt * (vmax + self.lambda * abs_pow(amp, self.p))
    }
}
