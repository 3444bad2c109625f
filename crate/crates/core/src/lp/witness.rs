//! Numerical witnesses for the inequalities satisfied by the weighted norms.
//!
//! The constants in those inequalities are existential, so each check returns
//! the ratio of left to right side; callers gather ratios over a seeded corpus
//! and compare envelopes across resolutions.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{block_norms, lebesgue_norm, norm, weight_field, DyadicPartition, NormSpec};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Packet {
    center: (f64, f64),
    sigma: f64,
    amplitude: C64,
    wave: (f64, f64),
}

/// A grid-independent smooth test function: a sum of modulated Gaussians.
/// Sampling the same member on two grids gives the same continuum function.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMember {
    pub seed: u64,
    pub index: usize,
    packets: Vec<Packet>,
}

impl CorpusMember {
    pub fn sample(&self, grid: &GridSpec) -> Field {
        Field::from_fn(*grid, |x1, x2| {
            self.packets
                .iter()
                .map(|p| {
                    let (d1, d2) = (x1 - p.center.0, x2 - p.center.1);
                    let env = (-(d1 * d1 + d2 * d2) / (2.0 * p.sigma * p.sigma)).exp();
                    p.amplitude * env * C64::from_polar(1.0, p.wave.0 * x1 + p.wave.1 * x2)
                })
                .sum()
        })
    }
}

/// `count` smooth fields drawn from `seed`. Centres lie in `[-2, 2]^2`,
/// widths in `[0.4, 1.2]`, modulation wavenumbers below 3.
pub fn smooth_corpus(count: usize, seed: u64) -> Vec<CorpusMember> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let k = rng.random_range(1..=3);
            let packets = (0..k)
                .map(|_| {
                    let wave_r = rng.random_range(0.0..3.0);
                    let wave_t = rng.random_range(0.0..2.0 * PI);
                    Packet {
                        center: (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                        sigma: rng.random_range(0.4..1.2),
                        amplitude: C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..2.0 * PI)),
                        wave: (wave_r * wave_t.cos(), wave_r * wave_t.sin()),
                    }
                })
                .collect();
            CorpusMember { seed, index, packets }
        })
        .collect()
}

/// Min and max of a family of positive ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Envelope {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut env = Envelope {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
        };
        for v in values {
            env.min = env.min.min(v);
            env.max = env.max.max(v);
            env.count += 1;
        }
        env
    }

    /// `max / min`: the equivalence constant witnessed by the family.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    pub fn is_finite(&self) -> bool {
        self.count > 0 && self.min.is_finite() && self.max.is_finite() && self.min > 0.0
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    /// Structured text block with seed provenance.
    pub fn report(&self, title: &str, seed: u64, grid: &GridSpec) -> String {
        let mut s = String::new();
        writeln!(s, "[{title}]").unwrap();
        writeln!(s, "seed = {seed}").unwrap();
        writeln!(s, "grid_n = {}", grid.n()).unwrap();
        writeln!(s, "box_L = {}", grid.box_length()).unwrap();
        writeln!(s, "members = {}", self.count).unwrap();
        writeln!(s, "min = {:.12e}", self.min).unwrap();
        writeln!(s, "max = {:.12e}", self.max).unwrap();
        writeln!(s, "spread = {:.12e}", self.spread()).unwrap();
        s
    }
}

/// `‖f‖_{B^α_{p,q,μ}} / ‖f ⟨x⟩^μ‖_{B^α_{p,q}}`.
pub fn check_pull_weight(f: &Field, spec: &NormSpec) -> Result<f64> {
    let weighted = norm(f, spec)?;
    let pulled = f.mul(&weight_field(f.grid(), spec.mu))?;
    let mut plain = *spec;
    plain.mu = 0.0;
    Ok(weighted / norm(&pulled, &plain)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub levels: Vec<f64>,
    /// `c_N = N ‖Δ_N(⟨x⟩^δ f) − ⟨x⟩^δ Δ_N f‖_{L^p} / ‖f‖_{L^p}`.
    pub coefficients: Vec<f64>,
    pub sup: f64,
}

pub fn check_commutator(f: &Field, delta: f64, p: f64) -> Result<CommutatorReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::usage(format!("commutator exponent must lie in (0, 1), got {delta}")));
    }
    let part = DyadicPartition::shared(f.grid());
    let w = weight_field(f.grid(), delta);
    let f_norm = lebesgue_norm(f, p, 0.0)?;
    let wf = f.mul(&w)?;
    let blocks_wf = part.blocks(&wf)?;
    let blocks_f = part.blocks(f)?;
    let mut coefficients = Vec::with_capacity(blocks_f.len());
    for ((nl, a), b) in part.levels().iter().zip(&blocks_wf).zip(&blocks_f) {
        let comm = a.sub(&b.mul(&w)?)?;
        let c = if f_norm > 0.0 {
            nl * lebesgue_norm(&comm, p, 0.0)? / f_norm
        } else {
            0.0
        };
        coefficients.push(c);
    }
    let sup = coefficients.iter().cloned().fold(0.0, f64::max);
    Ok(CommutatorReport {
        levels: part.levels().to_vec(),
        coefficients,
        sup,
    })
}

/// `‖f‖_{H^α_μ} / (‖f‖_{H^{α0}_{μ0}}^{1−Θ} ‖f‖_{H^{α1}_{μ1}}^Θ)` with
/// `(α, μ)` the convex combination of the endpoints.
pub fn interpolation_ratio(f: &Field, end0: (f64, f64), end1: (f64, f64), theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::usage("interpolation parameter must lie in [0, 1]"));
    }
    let alpha = (1.0 - theta) * end0.0 + theta * end1.0;
    let mu = (1.0 - theta) * end0.1 + theta * end1.1;
    let mid = norm(f, &NormSpec::hs(alpha, mu))?;
    let n0 = norm(f, &NormSpec::hs(end0.0, end0.1))?;
    let n1 = norm(f, &NormSpec::hs(end1.0, end1.1))?;
    Ok(mid / (n0.powf(1.0 - theta) * n1.powf(theta)))
}

/// Parameters of the product estimate
/// `‖f1 f2‖_{B^{α−κ}_{p,p,μ1+μ2}} ≤ C ‖f1‖_{B^{α1}_{p1,p1,μ1}} ‖f2‖_{B^{α2}_{p2,p2,μ2}}`,
/// `α = min(α1, α2, α1 + α2)`, `1/p = 1/p1 + 1/p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub p1: f64,
    pub p2: f64,
    pub kappa: f64,
}

impl Default for ProductParams {
    fn default() -> Self {
        ProductParams {
            alpha1: 1.0,
            alpha2: 0.5,
            mu1: 0.5,
            mu2: -0.25,
            p1: 4.0,
            p2: 4.0,
            kappa: 0.1,
        }
    }
}

pub fn product_ratio(f1: &Field, f2: &Field, params: &ProductParams) -> Result<f64> {
    let ProductParams {
        alpha1,
        alpha2,
        mu1,
        mu2,
        p1,
        p2,
        kappa,
    } = *params;
    if alpha1 + alpha2 <= 0.0 || kappa <= 0.0 {
        return Err(Error::usage("product estimate needs α1 + α2 > 0 and κ > 0"));
    }
    let alpha = alpha1.min(alpha2).min(alpha1 + alpha2);
    let p = 1.0 / (1.0 / p1 + 1.0 / p2);
    let lhs = norm(&f1.mul(f2)?, &NormSpec::besov(alpha - kappa, p, p, mu1 + mu2))?;
    let r1 = norm(f1, &NormSpec::besov(alpha1, p1, p1, mu1))?;
    let r2 = norm(f2, &NormSpec::besov(alpha2, p2, p2, mu2))?;
    Ok(lhs / (r1 * r2))
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `|∫ f1 f2| / (‖f1‖_{B^α_{p,q,μ}} ‖f2‖_{B^{−α}_{p',q',−μ}})`.
pub fn duality_ratio(f1: &Field, f2: &Field, alpha: f64, p: f64, q: f64, mu: f64) -> Result<f64> {
    let pairing = f1.mul(f2)?.integrate()?.norm();
    let a = norm(f1, &NormSpec::besov(alpha, p, q, mu))?;
    let b = norm(f2, &NormSpec::besov(-alpha, conjugate(p), conjugate(q), -mu))?;
    Ok(pairing / (a * b))
}

/// `Σ_N N^γ ‖Δ_N f‖_{L^2_δ} / ‖f‖_{H^{γ+γ0}_δ}`.
pub fn sumup_ratio(f: &Field, gamma: f64, gamma0: f64, delta: f64) -> Result<f64> {
    let lhs: f64 = block_norms(f, 2.0, delta)?
        .iter()
        .map(|(nl, a)| nl.powf(gamma) * a)
        .sum();
    Ok(lhs / norm(f, &NormSpec::hs(gamma + gamma0, delta))?)
}

/// Cauchy-Schwarz constant `(Σ_N N^{−2γ0})^{1/2}` bounding [`sumup_ratio`].
pub fn sumup_bound(grid: &GridSpec, gamma0: f64) -> f64 {
    DyadicPartition::shared(grid)
        .levels()
        .iter()
        .map(|nl| nl.powf(-2.0 * gamma0))
        .sum::<f64>()
        .sqrt()
}
