//! Periodic-box discretization of the plane.
//!
//! A [`GridSpec`] describes the square box `[-L/2, L/2)^2` sampled with `n`
//! points per side. A [`Field`] holds `n*n` complex values in row-major order,
//! index `(j1, j2)` sitting at `x = (-L/2 + j1 h, -L/2 + j2 h)`, tagged as
//! physical values or as unitary DFT coefficients.
//!
//! Spectral coefficients are stored in FFT order: index `m` carries the
//! wavenumber `2π/L · m` for `m < n/2` and `2π/L · (m - n)` otherwise.
//! Derivative multipliers (odd symbols) vanish on the Nyquist index `n/2`.

mod fft;
pub mod snapshot;

use std::f64::consts::PI;
use std::fmt;

pub use fft::Transformer;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    box_length: f64,
    n: usize,
}

impl GridSpec {
    pub fn new(box_length: f64, n: usize) -> Result<Self> {
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::config(format!("box length must be positive, got {box_length}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::config(format!("points per side must be even and >= 8, got {n}")));
        }
        if n > u32::MAX as usize {
            return Err(Error::config("points per side exceeds u32"));
        }
        let h = box_length / n as f64;
        if h * n as f64 != box_length {
            return Err(Error::config(format!(
                "spacing L/n is not exact for L = {box_length}, n = {n}"
            )));
        }
        Ok(GridSpec { box_length, n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Cell area `h^2`, the quadrature weight.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Largest resolved wavenumber `πn/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.box_length
    }

    /// Physical coordinate of grid index `j` along one axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    /// Offset of index `j` from the origin in wrapped (kernel) layout, where
    /// index 0 is the origin and indices past `n/2` are negative offsets.
    #[inline]
    pub fn wrapped_offset(&self, j: usize) -> f64 {
        let s = if j < self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
        s * self.spacing()
    }

    /// Signed integer frequency index of FFT slot `m`.
    #[inline]
    pub fn frequency_index(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.box_length;
        (0..self.n).map(|m| dk * self.frequency_index(m) as f64).collect()
    }

    /// Wavenumbers for odd multipliers: the Nyquist slot is zeroed.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        k[self.n / 2] = 0.0;
        k
    }

    /// `|k|^2` over the full lattice in FFT order.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        let mut out = Vec::with_capacity(self.len());
        for k1 in &k {
            for k2 in &k {
                out.push(k1 * k1 + k2 * k2);
            }
        }
        out
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::usage(format!(
                "grid mismatch: (L = {}, n = {}) vs (L = {}, n = {})",
                self.box_length, self.n, other.box_length, other.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Physical,
    Spectral,
}

#[derive(Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<C64>,
    domain: Domain,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("domain", &self.domain)
            .field("len", &self.values.len())
            .finish()
    }
}

impl Field {
    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Field {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            domain,
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<C64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::usage(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field { grid, values, domain })
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Field::from_values(grid, values.iter().map(|&x| C64::new(x, 0.0)).collect(), Domain::Physical)
    }

    /// Physical field sampled from `f(x1, x2)`.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> C64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j1 in 0..n {
            let x1 = grid.coord(j1);
            for j2 in 0..n {
                values.push(f(x1, grid.coord(j2)));
            }
        }
        Field {
            grid,
            values,
            domain: Domain::Physical,
        }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Field::from_fn(grid, |x1, x2| C64::new(f(x1, x2), 0.0))
    }

    /// Constant physical field.
    pub fn constant(grid: GridSpec, c: C64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
            domain: Domain::Physical,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    #[inline]
    pub fn at(&self, j1: usize, j2: usize) -> C64 {
        self.values[j1 * self.grid.n + j2]
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn forward(&self) -> Result<Field> {
        self.expect(Domain::Physical, "forward transform")?;
        let mut out = self.clone();
        fft::plan(self.grid.n).forward(&mut out.values, &mut Vec::new());
        out.domain = Domain::Spectral;
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Field> {
        self.expect(Domain::Spectral, "inverse transform")?;
        let mut out = self.clone();
        fft::plan(self.grid.n).inverse(&mut out.values, &mut Vec::new());
        out.domain = Domain::Physical;
        Ok(out)
    }

    fn to_spectral(&self) -> Field {
        match self.domain {
            Domain::Spectral => self.clone(),
            Domain::Physical => self.forward().expect("tag checked"),
        }
    }

    fn restore_domain(&self, spectral: Field) -> Field {
        match self.domain {
            Domain::Spectral => spectral,
            Domain::Physical => spectral.inverse().expect("tag checked"),
        }
    }

    /// Multiplies the spectrum by `symbol(k1, k2)`, preserving the tag.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64, f64) -> C64) -> Field {
        let mut spec = self.to_spectral();
        let k = self.grid.wavenumbers();
        let n = self.grid.n;
        for (m1, k1) in k.iter().enumerate() {
            for (m2, k2) in k.iter().enumerate() {
                spec.values[m1 * n + m2] *= symbol(*k1, *k2);
            }
        }
        self.restore_domain(spec)
    }

    /// Multiplies the spectrum slot-by-slot by precomputed real weights in
    /// FFT order, preserving the tag.
    pub fn apply_symbol(&self, symbol: &[f64]) -> Result<Field> {
        if symbol.len() != self.values.len() {
            return Err(Error::usage("symbol length does not match the grid"));
        }
        let mut spec = self.to_spectral();
        for (z, s) in spec.values.iter_mut().zip(symbol) {
            *z *= *s;
        }
        Ok(self.restore_domain(spec))
    }

    /// Spectral gradient `(∂1 f, ∂2 f)`; Nyquist mode of each derivative zeroed.
    pub fn gradient(&self) -> (Field, Field) {
        let spec = self.to_spectral();
        let kd = self.grid.derivative_wavenumbers();
        let n = self.grid.n;
        let mut d1 = spec.clone();
        let mut d2 = spec;
        for m1 in 0..n {
            for m2 in 0..n {
                let idx = m1 * n + m2;
                d1.values[idx] *= C64::new(0.0, kd[m1]);
                d2.values[idx] *= C64::new(0.0, kd[m2]);
            }
        }
        (self.restore_domain(d1), self.restore_domain(d2))
    }

    /// Spectral Laplacian, multiplier `-|k|^2`.
    pub fn laplacian(&self) -> Field {
        let mut spec = self.to_spectral();
        for (z, k2) in spec.values.iter_mut().zip(self.grid.k_squared()) {
            *z *= -k2;
        }
        self.restore_domain(spec)
    }

    /// Periodic rectangle-rule quadrature `h^2 Σ f`.
    pub fn integrate(&self) -> Result<C64> {
        self.expect(Domain::Physical, "integrate")?;
        Ok(self.values.iter().sum::<C64>() * self.grid.cell_area())
    }

    /// `‖f‖_{L^2}^2` by quadrature in physical space.
    pub fn l2_norm_sq(&self) -> Result<f64> {
        self.expect(Domain::Physical, "L2 norm")?;
        Ok(self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area())
    }

    /// Spectral-side quadrature of `|f|^2`; equals [`Field::l2_norm_sq`] of the
    /// physical field by Plancherel.
    pub fn spectral_energy(&self) -> Result<f64> {
        self.expect(Domain::Spectral, "spectral energy")?;
        Ok(self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
            domain: self.domain,
        }
    }

    /// Pointwise combination of two fields on the same grid and domain.
    pub fn zip_with(&self, other: &Field, f: impl Fn(C64, C64) -> C64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        if self.domain != other.domain {
            return Err(Error::usage("domain tag mismatch"));
        }
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            domain: self.domain,
        })
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: C64) -> Field {
        self.map(|z| z * c)
    }

    /// Cyclic shift by `(s1, s2)` cells: `out[j] = self[j - s]`.
    pub fn roll(&self, s1: usize, s2: usize) -> Field {
        let n = self.grid.n;
        let mut out = self.clone();
        for j1 in 0..n {
            for j2 in 0..n {
                out.values[((j1 + s1) % n) * n + (j2 + s2) % n] = self.values[j1 * n + j2];
            }
        }
        out
    }

    pub(crate) fn expect(&self, domain: Domain, what: &str) -> Result<()> {
        if self.domain != domain {
            return Err(Error::usage(format!(
                "{what} requires a {domain:?} field, got {:?}",
                self.domain
            )));
        }
        Ok(())
    }
}
