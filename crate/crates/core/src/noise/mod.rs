//! Stochastic objects: white noise, its mollification, the truncated Green
//! function and the Wick-renormalized potentials derived from them.
//!
//! Kernels are applied as Fourier symbols. A kernel `K` sampled with its
//! centre at index 0 (wrapped layout) has symbol `K̂ = h^2 · DFT(K)`, so that
//! `F(K ∗ f) = K̂ · F(f)` under the unitary transform.

mod stats;

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use stats::{verify_stochastic_bounds, verify_stochastic_bounds_with, LadderRow, StochasticConfig, MIN_REALIZATIONS, StochasticReport};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridSpec};
use crate::C64;

/// Inner and outer radius of the Green-function cutoff `χ`.
pub const CUTOFF_INNER: f64 = 0.5;
pub const CUTOFF_OUTER: f64 = 1.0;
/// Minimum number of grid cells per mollifier radius.
pub const MIN_CELLS_PER_EPS: f64 = 4.0;

/// Deterministic generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Real white noise `ξ_j = g_j / h`, `g_j` i.i.d. standard normal, so that
/// `Var((ξ, f)) = ‖f‖^2_{L^2}` in the discrete pairing.
pub fn sample_white_noise(grid: &GridSpec, seed: u64, stream: u64) -> Field {
    let mut rng = rng_for(seed, stream);
    let inv_h = 1.0 / grid.spacing();
    let values = (0..grid.len())
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            C64::new(g * inv_h, 0.0)
        })
        .collect();
    Field::from_values(*grid, values, Domain::Physical).expect("length matches grid")
}

/// Unnormalized bump `exp(-1/(1-|x|^2))` on the unit disc.
pub fn bump_profile(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// The mollifier `ρ_ε(x) = ε^{-2} ρ(x/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::Range(format!("ε must lie in (0, 1/2], got {epsilon}")));
        }
        Ok(MollifierSpec { epsilon })
    }

    pub fn is_resolved(&self, grid: &GridSpec) -> bool {
        self.epsilon / grid.spacing() >= MIN_CELLS_PER_EPS
    }

    /// Samples of `ρ_ε` in wrapped layout, normalized so that `h^2 Σ ρ_ε = 1`.
    pub fn samples(&self, grid: &GridSpec) -> Field {
        let mut f = wrapped_radial(grid, |r| bump_profile(r / self.epsilon));
        let total: f64 = f.values().iter().map(|z| z.re).sum::<f64>() * grid.cell_area();
        if total > 0.0 {
            f = f.scale(C64::new(1.0 / total, 0.0));
        } else {
            // Support smaller than one cell: the discrete delta.
            f = Field::zeros(*grid, Domain::Physical);
            f.values_mut()[0] = C64::new(1.0 / grid.cell_area(), 0.0);
        }
        f
    }

    /// Real symbol `ρ̂_ε` in FFT order.
    pub fn symbol(&self, grid: &GridSpec) -> Vec<f64> {
        kernel_symbol(&self.samples(grid))
    }
}

/// Samples `g(|x|)` with the origin at index `(0, 0)` and periodic offsets.
fn wrapped_radial(grid: &GridSpec, g: impl Fn(f64) -> f64) -> Field {
    let n = grid.n();
    let mut values = Vec::with_capacity(grid.len());
    for j1 in 0..n {
        let x1 = grid.wrapped_offset(j1);
        for j2 in 0..n {
            let x2 = grid.wrapped_offset(j2);
            values.push(C64::new(g((x1 * x1 + x2 * x2).sqrt()), 0.0));
        }
    }
    Field::from_values(*grid, values, Domain::Physical).expect("length matches grid")
}

/// `h^2 · DFT` of a real even kernel in wrapped layout; the result is real.
fn kernel_symbol(samples: &Field) -> Vec<f64> {
    let g = samples.grid();
    let scale = g.cell_area() * g.n() as f64;
    samples
        .forward()
        .expect("kernel samples are physical")
        .values()
        .iter()
        .map(|z| z.re * scale)
        .collect()
}

/// Smooth cutoff `χ` with first and second derivatives: 1 on
/// `[0, CUTOFF_INNER]`, 0 on `[CUTOFF_OUTER, ∞)`.
pub fn cutoff_with_derivatives(r: f64) -> (f64, f64, f64) {
    let w = CUTOFF_OUTER - CUTOFF_INNER;
    let t = (r - CUTOFF_INNER) / w;
    if t <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    // s(t) = 1 / (1 + e^g), g = 1/t − 1/(1−t)
    let g = 1.0 / t - 1.0 / (1.0 - t);
    let s = 1.0 / (1.0 + g.exp());
    let c = (0.5 * g).cosh();
    let ss = 1.0 / (4.0 * c * c);
    let g1 = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
    let g2 = 2.0 / (t * t * t) - 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t));
    let s1 = -g1 * ss;
    let s2 = -g2 * ss + g1 * g1 * ss * (1.0 - 2.0 * s);
    (1.0 - s, -s1 / w, -s2 / (w * w))
}

/// `G(r) = (1/2π) log r · χ(r)` for `r > 0`.
pub fn green_radial(r: f64) -> f64 {
    if r >= CUTOFF_OUTER {
        return 0.0;
    }
    r.ln() / (2.0 * PI) * cutoff_with_derivatives(r).0
}

/// Smooth remainder `φ = ΔG − δ_0`, supported in the cutoff annulus.
pub fn green_remainder(r: f64) -> f64 {
    if r <= CUTOFF_INNER || r >= CUTOFF_OUTER {
        return 0.0;
    }
    let (_, c1, c2) = cutoff_with_derivatives(r);
    c1 / (PI * r) + r.ln() / (2.0 * PI) * (c2 + c1 / r)
}

/// Average of `log|x|` over the square of side `h` centred at the origin.
fn log_cell_average(h: f64) -> f64 {
    (0.5 * h).ln() + 0.5 * (2f64.ln() - 3.0 + 0.5 * PI)
}

fn check_box(grid: &GridSpec) -> Result<()> {
    if grid.box_length() <= 2.0 * CUTOFF_OUTER {
        return Err(Error::config(format!(
            "box length {} must exceed {} so the Green function support does not wrap",
            grid.box_length(),
            2.0 * CUTOFF_OUTER
        )));
    }
    Ok(())
}

/// Truncated Green function sampled in physical layout; the origin cell holds
/// the cell average of its logarithmic singularity.
pub fn truncated_green(grid: &GridSpec) -> Result<Field> {
    check_box(grid)?;
    let origin = log_cell_average(grid.spacing()) / (2.0 * PI);
    Ok(Field::from_real_fn(*grid, |x1, x2| {
        let r = (x1 * x1 + x2 * x2).sqrt();
        if r == 0.0 {
            origin
        } else {
            green_radial(r)
        }
    }))
}

/// `φ̂ = h^2 DFT(φ)`, FFT order.
pub fn remainder_symbol(grid: &GridSpec) -> Vec<f64> {
    kernel_symbol(&wrapped_radial(grid, green_remainder))
}

/// Symbol of `G`, built from `−|k|^2 Ĝ = 1 + φ̂` off the origin and the
/// exact mean `∫ G = ∫_0^1 r log r χ(r) dr` at `k = 0`.
pub fn green_symbol(grid: &GridSpec) -> Result<Vec<f64>> {
    check_box(grid)?;
    let phi = remainder_symbol(grid);
    let k2 = grid.k_squared();
    let mut out: Vec<f64> = phi.iter().zip(&k2).map(|(p, kk)| -(1.0 + p) / kk).collect();
    out[0] = green_mean();
    Ok(out)
}

fn green_mean() -> f64 {
    // ∫_0^{r0} r log r dr in closed form, then Simpson on the transition.
    let r0 = CUTOFF_INNER;
    let inner = 0.5 * r0 * r0 * r0.ln() - 0.25 * r0 * r0;
    let m = 4000;
    let w = (CUTOFF_OUTER - r0) / m as f64;
    let f = |r: f64| r * r.ln() * cutoff_with_derivatives(r).0;
    let mut acc = f(r0) + f(CUTOFF_OUTER);
    for i in 1..m {
        acc += f(r0 + i as f64 * w) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    inner + acc * w / 3.0
}

/// Symbols needed to build bundles at one `(grid, ε)`.
#[derive(Debug, Clone)]
pub struct NoiseKernels {
    pub grid: GridSpec,
    pub mollifier: MollifierSpec,
    pub rho_hat: Vec<f64>,
    pub green_hat: Vec<f64>,
    pub c_eps: f64,
}

impl NoiseKernels {
    /// No resolution check: use [`NoiseKernels::resolved`] before simulating.
    pub fn new(grid: &GridSpec, epsilon: f64) -> Result<Self> {
        let mollifier = MollifierSpec::new(epsilon)?;
        let rho_hat = mollifier.symbol(grid);
        let green_hat = green_symbol(grid)?;
        let c_eps = wick_constant(grid, &rho_hat, &green_hat);
        Ok(NoiseKernels {
            grid: *grid,
            mollifier,
            rho_hat,
            green_hat,
            c_eps,
        })
    }

    pub fn resolved(grid: &GridSpec, epsilon: f64) -> Result<Self> {
        let k = NoiseKernels::new(grid, epsilon)?;
        if !k.mollifier.is_resolved(grid) {
            return Err(Error::UnderResolved(format!(
                "ε = {epsilon} spans {:.3} cells, need at least {MIN_CELLS_PER_EPS}",
                epsilon / grid.spacing()
            )));
        }
        Ok(k)
    }
}

fn wick_constant(grid: &GridSpec, rho_hat: &[f64], green_hat: &[f64]) -> f64 {
    let kd = grid.derivative_wavenumbers();
    let n = grid.n();
    let mut acc = 0.0;
    for m1 in 0..n {
        for m2 in 0..n {
            let i = m1 * n + m2;
            let s = rho_hat[i] * green_hat[i];
            acc += (kd[m1] * kd[m1] + kd[m2] * kd[m2]) * s * s;
        }
    }
    acc / (grid.box_length() * grid.box_length())
}

/// `c_ε = E|∇Y_ε|^2`, evaluated exactly by Plancherel on the box.
pub fn compute_c_eps(grid: &GridSpec, epsilon: f64) -> Result<f64> {
    Ok(NoiseKernels::new(grid, epsilon)?.c_eps)
}

/// All objects derived from one noise realization at one `ε`.
#[derive(Debug, Clone)]
pub struct NoiseBundle {
    pub seed: u64,
    pub stream: u64,
    pub epsilon: f64,
    pub xi: Field,
    pub xi_eps: Field,
    pub y: Field,
    pub y_eps: Field,
    pub grad_y_eps: (Field, Field),
    pub c_eps: f64,
    /// `|∇Y_ε|^2 − c_ε`.
    pub wick: Field,
    /// `wick − (ΔY_ε − ξ_ε)`.
    pub v_tilde: Field,
    pub green_hat: Field,
}

fn real_part(f: Field) -> Field {
    f.map(|z| C64::new(z.re, 0.0))
}

/// Bundle for the white noise drawn from `(seed, stream)`.
pub fn build_bundle(grid: &GridSpec, seed: u64, stream: u64, epsilon: f64) -> Result<NoiseBundle> {
    let kernels = NoiseKernels::resolved(grid, epsilon)?;
    let xi = sample_white_noise(grid, seed, stream);
    bundle_from_noise(&kernels, xi, seed, stream)
}

/// Bundle for an injected noise field (for instance `ξ ≡ 0`).
pub fn bundle_from_noise(kernels: &NoiseKernels, xi: Field, seed: u64, stream: u64) -> Result<NoiseBundle> {
    let grid = kernels.grid;
    grid.check_same(xi.grid())?;
    if !kernels.mollifier.is_resolved(&grid) {
        return Err(Error::UnderResolved(format!(
            "ε = {} spans {:.3} cells, need at least {MIN_CELLS_PER_EPS}",
            kernels.mollifier.epsilon,
            kernels.mollifier.epsilon / grid.spacing()
        )));
    }
    bundle_from_noise_unchecked(kernels, xi, seed, stream)
}

/// [`bundle_from_noise`] without the resolution check, for coarse grids
/// used only as integrator test beds.
pub fn bundle_from_noise_unchecked(kernels: &NoiseKernels, xi: Field, seed: u64, stream: u64) -> Result<NoiseBundle> {
    let grid = kernels.grid;
    grid.check_same(xi.grid())?;
    let xi = real_part(xi);
    let xi_hat = xi.forward()?;
    let both: Vec<f64> = kernels.rho_hat.iter().zip(&kernels.green_hat).map(|(a, b)| a * b).collect();
    let xi_eps = real_part(xi_hat.apply_symbol(&kernels.rho_hat)?.inverse()?);
    let y = real_part(xi_hat.apply_symbol(&kernels.green_hat)?.inverse()?);
    let y_eps_hat = xi_hat.apply_symbol(&both)?;
    let y_eps = real_part(y_eps_hat.inverse()?);
    let (g1, g2) = y_eps_hat.gradient();
    let grad = (real_part(g1.inverse()?), real_part(g2.inverse()?));
    let lap = real_part(y_eps_hat.laplacian().inverse()?);
    let c_eps = kernels.c_eps;
    let wick = grad.0.zip_with(&grad.1, |a, b| C64::new(a.re * a.re + b.re * b.re - c_eps, 0.0))?;
    let smooth = lap.sub(&xi_eps)?;
    let v_tilde = wick.sub(&smooth)?;
    let green_hat = Field::from_real(grid, &kernels.green_hat)?;
    let green_hat = Field::from_values(grid, green_hat.into_values(), Domain::Spectral)?;
    Ok(NoiseBundle {
        seed,
        stream,
        epsilon: kernels.mollifier.epsilon,
        xi,
        xi_eps,
        y,
        y_eps,
        grad_y_eps: grad,
        c_eps,
        wick,
        v_tilde,
        green_hat,
    })
}

impl NoiseBundle {
    pub fn grid(&self) -> &GridSpec {
        self.xi.grid()
    }

    /// `φ ∗ ξ_ε = ΔY_ε − ξ_ε`.
    pub fn smooth_part(&self) -> Field {
        self.wick.sub(&self.v_tilde).expect("same grid")
    }

    /// Structured-text manifest: provenance, `c_ε` and field norms.
    pub fn manifest(&self) -> String {
        let g = self.grid();
        let mut s = String::new();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "stream = {}", self.stream).unwrap();
        writeln!(s, "eps = {}", self.epsilon).unwrap();
        writeln!(s, "grid_n = {}", g.n()).unwrap();
        writeln!(s, "box_L = {}", g.box_length()).unwrap();
        writeln!(s, "c_eps = {:.17e}", self.c_eps).unwrap();
        let named = [
            ("xi", &self.xi),
            ("xi_eps", &self.xi_eps),
            ("Y", &self.y),
            ("Y_eps", &self.y_eps),
            ("grad_Y_eps_1", &self.grad_y_eps.0),
            ("grad_Y_eps_2", &self.grad_y_eps.1),
            ("wick", &self.wick),
            ("v_tilde", &self.v_tilde),
        ];
        for (name, f) in named {
            let l2 = f.l2_norm_sq().unwrap_or(f64::NAN).sqrt();
            writeln!(s, "{name}.l2 = {l2:.17e}").unwrap();
            writeln!(s, "{name}.sup = {:.17e}", f.max_abs()).unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: f64, n: usize) -> GridSpec {
        GridSpec::new(l, n).unwrap()
    }

    #[test]
    fn white_noise_is_deterministic_and_real() {
        let g = grid(4.0, 32);
        let a = sample_white_noise(&g, 5, 0);
        let b = sample_white_noise(&g, 5, 0);
        assert_eq!(a, b);
        assert_ne!(a, sample_white_noise(&g, 5, 1));
        assert_ne!(a, sample_white_noise(&g, 6, 0));
        assert!(a.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn white_noise_pairing_variance() {
        let g = grid(4.0, 16);
        let f = Field::from_real_fn(g, |x, y| (-(x * x + y * y)).exp());
        let fn2 = f.l2_norm_sq().unwrap();
        let m = 10_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for k in 0..m {
            let p = sample_white_noise(&g, 1, k).mul(&f).unwrap().integrate().unwrap().re;
            s += p;
            s2 += p * p;
        }
        let mean = s / m as f64;
        let var = s2 / m as f64 - mean * mean;
        let r = var / fn2;
        assert!((0.97..=1.03).contains(&r), "ratio {r}");
    }

    #[test]
    fn white_noise_mean_is_clt_scaled() {
        let g = grid(4.0, 16);
        let m = 1000;
        let mut s = 0.0;
        for k in 0..m {
            // spatial mean ~ N(0, 1/L^2)
            let mean = sample_white_noise(&g, 2, k).integrate().unwrap().re / 16.0;
            s += mean * 4.0;
        }
        let z = s / (m as f64).sqrt();
        assert!(z.abs() < 4.0, "z {z}");
    }

    #[test]
    fn mollifier_mass_and_sign() {
        for (l, n, eps) in [(4.0, 64, 0.25), (3.0, 256, 0.0625), (16.0, 128, 0.5)] {
            let g = grid(l, n);
            let m = MollifierSpec::new(eps).unwrap();
            assert!(m.is_resolved(&g));
            let s = m.samples(&g);
            assert!(s.values().iter().all(|z| z.re >= 0.0));
            assert!((s.integrate().unwrap().re - 1.0).abs() < 1e-8);
            assert!((m.symbol(&g)[0] - 1.0).abs() < 1e-12);
        }
        assert!(MollifierSpec::new(0.0).is_err());
        assert!(MollifierSpec::new(0.6).is_err());
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        for &r in &[0.55, 0.62, 0.75, 0.9, 0.97] {
            let d = 1e-5;
            let (c, c1, c2) = cutoff_with_derivatives(r);
            let (cp, ..) = cutoff_with_derivatives(r + d);
            let (cm, ..) = cutoff_with_derivatives(r - d);
            assert!((c1 - (cp - cm) / (2.0 * d)).abs() < 1e-6 * (1.0 + c1.abs()));
            assert!((c2 - (cp - 2.0 * c + cm) / (d * d)).abs() < 1e-3 * (1.0 + c2.abs()));
        }
    }

    #[test]
    fn green_examples() {
        let g = grid(4.0, 64);
        let green = truncated_green(&g).unwrap();
        for j1 in 0..64 {
            for j2 in 0..64 {
                let (x, y) = (g.coord(j1), g.coord(j2));
                if (x * x + y * y).sqrt() >= CUTOFF_OUTER {
                    assert_eq!(green.at(j1, j2).re, 0.0);
                }
            }
        }
        let v = green_radial(0.1);
        assert!((v - 0.1f64.ln() / (2.0 * PI)).abs() < 1e-12);
        assert!(matches!(truncated_green(&grid(2.0, 64)), Err(Error::Config(_))));
        assert!(matches!(green_symbol(&grid(1.5, 64)), Err(Error::Config(_))));
    }

    #[test]
    fn log_cell_average_matches_quadrature() {
        let h = 0.1;
        let m = 400;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = -0.5 * h + (i as f64 + 0.5) * h / m as f64;
                let y = -0.5 * h + (j as f64 + 0.5) * h / m as f64;
                acc += 0.5 * (x * x + y * y).ln();
            }
        }
        acc /= (m * m) as f64;
        assert!((acc - log_cell_average(h)).abs() < 1e-4);
    }

    #[test]
    fn green_symbol_consistent_with_samples() {
        // Away from the aliased band the sampled Green function and the
        // spectral symbol describe the same kernel.
        let g = grid(4.0, 256);
        let sym = green_symbol(&g).unwrap();
        let samples = truncated_green(&g).unwrap();
        // move to wrapped layout: shift origin from index n/2 to 0
        let wrapped = samples.roll(128, 128);
        let sampled = kernel_symbol(&wrapped);
        let k = g.wavenumbers();
        for m1 in 0..8 {
            for m2 in 0..8 {
                let i = m1 * 256 + m2;
                assert!((sym[i] - sampled[i]).abs() < 5e-5, "k = ({}, {})", k[m1], k[m2]);
            }
        }
    }

    #[test]
    fn remainder_tail_decays() {
        let g = grid(3.0, 256);
        let phi = remainder_symbol(&g);
        assert!((phi[0] + 1.0).abs() < 1e-6, "φ̂(0) = {}", phi[0]);
        let k2 = g.k_squared();
        let half = 0.5 * g.nyquist();
        let sym = green_symbol(&g).unwrap();
        let tail = k2
            .iter()
            .zip(&sym)
            .filter(|(kk, _)| kk.sqrt() > half)
            .map(|(kk, s)| (-kk * s - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(tail < 1e-3, "tail {tail}");
    }

    #[test]
    fn c_eps_monotone_and_deterministic() {
        let g = grid(3.0, 256);
        let mut prev = 0.0;
        for j in 3..=6 {
            let c = compute_c_eps(&g, 2f64.powi(-j)).unwrap();
            assert!(c > prev && c > 0.0);
            prev = c;
        }
        assert_eq!(compute_c_eps(&g, 0.25).unwrap(), compute_c_eps(&g, 0.25).unwrap());
    }

    #[test]
    fn zero_noise_bundle() {
        let g = grid(4.0, 64);
        let k = NoiseKernels::resolved(&g, 0.25).unwrap();
        let b = bundle_from_noise(&k, Field::zeros(g, Domain::Physical), 0, 0).unwrap();
        assert!(b.y_eps.max_abs() == 0.0);
        for z in b.wick.values().iter().chain(b.v_tilde.values()) {
            assert_eq!(*z, C64::new(-k.c_eps, 0.0));
        }
    }

    #[test]
    fn bundle_identities() {
        let g = grid(4.0, 64);
        let b = build_bundle(&g, 3, 1, 0.25).unwrap();
        let lap = b.y_eps.laplacian();
        let expect = b.wick.sub(&lap.sub(&b.xi_eps).unwrap()).unwrap();
        assert!(b.v_tilde.sub(&expect).unwrap().max_abs() < 1e-9 * b.v_tilde.max_abs());
        assert!(b.xi.values().iter().all(|z| z.im == 0.0));
        let m = b.manifest();
        assert!(m.contains("seed = 3") && m.contains("stream = 1") && m.contains("c_eps = "));
    }

    #[test]
    fn bundle_preconditions() {
        let g = grid(4.0, 64);
        assert!(matches!(build_bundle(&g, 0, 0, 0.2), Err(Error::UnderResolved(_))));
        assert!(matches!(build_bundle(&g, 0, 0, 0.75), Err(Error::Range(_))));
        assert!(matches!(build_bundle(&grid(2.0, 256), 0, 0, 0.25), Err(Error::Config(_))));
    }
}
