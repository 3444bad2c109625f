//! Littlewood-Paley blocks and weighted function-space norms.
//!
//! The dyadic levels are `N = 1/2, 1, 2, 4, …, N_max`, with `N_max` the
//! smallest power of two at or above the largest lattice wavenumber `|k|`.
//! With a smooth radial cutoff `ψ` (1 on `[0, 1/2]`, 0 on `[1, ∞)`) the
//! symbols are `L̂(k) = ψ(|k|)` for `N = 1/2` and
//! `K̂(k/N) = ψ(|k|/2N) − ψ(|k|/N)` for `N ≥ 1`. They telescope to
//! `ψ(|k|/2N_max) = 1` on the whole lattice.

mod witness;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

pub use witness::{
    check_commutator, check_pull_weight, duality_ratio, interpolation_ratio, product_ratio,
    smooth_corpus, sumup_bound, sumup_ratio, CommutatorReport, CorpusMember, Envelope, ProductParams,
};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridSpec};

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Smooth step from 0 at `t <= 0` to 1 at `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = bump(1.0 - t);
    let b = bump(t);
    a / (a + b)
}

/// Radial cutoff: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn cutoff(r: f64) -> f64 {
    1.0 - smooth_step(2.0 * r - 1.0)
}

/// Symbol of the block at level `n_level`, evaluated at radius `r = |k|`.
pub fn block_symbol(n_level: f64, r: f64) -> f64 {
    if n_level < 1.0 {
        cutoff(r)
    } else {
        cutoff(r / (2.0 * n_level)) - cutoff(r / n_level)
    }
}

pub struct DyadicPartition {
    grid: GridSpec,
    levels: Vec<f64>,
    symbols: Vec<Vec<f64>>,
}

impl fmt::Debug for DyadicPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DyadicPartition")
            .field("grid", &self.grid)
            .field("levels", &self.levels)
            .finish()
    }
}

type PartitionCache = Mutex<HashMap<(usize, u64), Arc<DyadicPartition>>>;
static PARTITIONS: OnceLock<PartitionCache> = OnceLock::new();

impl DyadicPartition {
    pub fn new(grid: &GridSpec) -> Self {
        let radius: Vec<f64> = grid.k_squared().into_iter().map(f64::sqrt).collect();
        let corner = radius.iter().cloned().fold(0.0, f64::max);
        let mut levels = vec![0.5];
        let mut n_level = 1.0;
        loop {
            levels.push(n_level);
            if n_level >= corner {
                break;
            }
            n_level *= 2.0;
        }
        let symbols = levels
            .iter()
            .map(|&nl| radius.iter().map(|&r| block_symbol(nl, r)).collect())
            .collect();
        DyadicPartition {
            grid: *grid,
            levels,
            symbols,
        }
    }

    /// Process-wide shared partition for `grid`.
    pub fn shared(grid: &GridSpec) -> Arc<DyadicPartition> {
        let cache = PARTITIONS.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (grid.n(), grid.box_length().to_bits());
        let mut cache = cache.lock().expect("partition cache poisoned");
        cache.entry(key).or_insert_with(|| Arc::new(DyadicPartition::new(grid))).clone()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn n_max(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    fn level_index(&self, n_level: f64) -> Result<usize> {
        self.levels
            .iter()
            .position(|&l| l == n_level)
            .ok_or_else(|| {
                Error::Range(format!(
                    "level {n_level} is not a dyadic level in [1/2, {}]",
                    self.n_max()
                ))
            })
    }

    /// Symbol of level `n_level` in FFT order.
    pub fn symbol(&self, n_level: f64) -> Result<&[f64]> {
        Ok(&self.symbols[self.level_index(n_level)?])
    }

    pub fn project(&self, f: &Field, n_level: f64) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        f.apply_symbol(self.symbol(n_level)?)
    }

    /// All blocks of `f` in level order, as physical fields.
    pub fn blocks(&self, f: &Field) -> Result<Vec<Field>> {
        self.grid.check_same(f.grid())?;
        let spec = match f.domain() {
            Domain::Physical => f.forward()?,
            Domain::Spectral => f.clone(),
        };
        self.symbols
            .iter()
            .map(|s| spec.apply_symbol(s).and_then(|b| b.inverse()))
            .collect()
    }

    /// Largest `|Σ_N symbol_N(k) − 1|` over lattice points with
    /// `|k| < fraction · k_Nyquist`.
    pub fn unity_residual(&self, fraction: f64) -> f64 {
        let bound = fraction * self.grid.nyquist();
        let k2 = self.grid.k_squared();
        let mut worst: f64 = 0.0;
        for (i, kk) in k2.iter().enumerate() {
            if kk.sqrt() < bound {
                let total: f64 = self.symbols.iter().map(|s| s[i]).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }

    /// Range of `Σ_N N^{2α} symbol_N(k)^2 / ⟨k⟩^{2α}` over the lattice: the
    /// squared ratio between the (2,2) block norm and the ⟨k⟩-weighted
    /// Sobolev norm is confined to this interval.
    pub fn hs_symbol_envelope(&self, alpha: f64) -> (f64, f64) {
        let k2 = self.grid.k_squared();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (i, kk) in k2.iter().enumerate() {
            let w: f64 = self
                .levels
                .iter()
                .zip(&self.symbols)
                .map(|(nl, s)| nl.powf(2.0 * alpha) * s[i] * s[i])
                .sum();
            let r = w / (1.0 + kk).powf(alpha);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

/// `Δ_N f`. Levels outside `{1/2, 1, …, N_max}` are a range error.
pub fn lp_project(f: &Field, n_level: f64) -> Result<Field> {
    DyadicPartition::shared(f.grid()).project(f, n_level)
}

/// `⟨d(x)⟩^μ`, with `d` the distance to the origin on the torus.
pub fn weight_field(grid: &GridSpec, mu: f64) -> Field {
    let l = grid.box_length();
    let wrap = |x: f64| {
        let a = x.abs() % l;
        a.min(l - a)
    };
    Field::from_real_fn(*grid, |x1, x2| {
        let (d1, d2) = (wrap(x1), wrap(x2));
        (1.0 + d1 * d1 + d2 * d2).powf(0.5 * mu)
    })
}

fn weight_values(grid: &GridSpec, mu: f64) -> Option<Vec<f64>> {
    if mu == 0.0 {
        None
    } else {
        Some(weight_field(grid, mu).real_parts())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Lebesgue,
    SobolevW1p,
    SobolevHs,
    Besov,
    Holder,
}

/// Weighted norm descriptor. `p` and `q` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub kind: NormKind,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub mu: f64,
}

impl NormSpec {
    pub fn lebesgue(p: f64, mu: f64) -> Self {
        NormSpec {
            kind: NormKind::Lebesgue,
            alpha: 0.0,
            p,
            q: p,
            mu,
        }
    }

    pub fn w1p(p: f64, mu: f64) -> Self {
        NormSpec {
            kind: NormKind::SobolevW1p,
            alpha: 1.0,
            p,
            q: p,
            mu,
        }
    }

    pub fn hs(alpha: f64, mu: f64) -> Self {
        NormSpec {
            kind: NormKind::SobolevHs,
            alpha,
            p: 2.0,
            q: 2.0,
            mu,
        }
    }

    pub fn besov(alpha: f64, p: f64, q: f64, mu: f64) -> Self {
        NormSpec {
            kind: NormKind::Besov,
            alpha,
            p,
            q,
            mu,
        }
    }

    pub fn holder(alpha: f64, mu: f64) -> Self {
        NormSpec {
            kind: NormKind::Holder,
            alpha,
            p: f64::INFINITY,
            q: f64::INFINITY,
            mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x >= 1.0;
        if !ok(self.p) || !ok(self.q) {
            return Err(Error::usage(format!(
                "integrability p = {} and summability q = {} must lie in [1, ∞]",
                self.p, self.q
            )));
        }
        if !self.alpha.is_finite() || !self.mu.is_finite() {
            return Err(Error::usage("regularity and weight exponents must be finite"));
        }
        let alias = match self.kind {
            NormKind::SobolevHs => Some(2.0),
            NormKind::Holder => Some(f64::INFINITY),
            _ => None,
        };
        if let Some(pq) = alias {
            if self.p != pq || self.q != pq {
                return Err(Error::usage(format!("{:?} requires p = q = {pq}", self.kind)));
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            NormKind::Lebesgue => "lebesgue",
            NormKind::SobolevW1p => "sobolev_w1p",
            NormKind::SobolevHs => "sobolev_hs",
            NormKind::Besov => "besov",
            NormKind::Holder => "holder",
        }
    }

    pub const CSV_HEADER: &'static str = "kind,alpha,p,q,mu,value";

    pub fn csv_row(&self, value: f64) -> String {
        format!(
            "{},{},{},{},{},{:.17e}",
            self.kind_name(),
            self.alpha,
            self.p,
            self.q,
            self.mu,
            value
        )
    }
}

/// Quadrature `(h^2 Σ (w|f|)^p)^{1/p}` of already-physical values.
fn lp_of(values: &[crate::C64], weight: Option<&[f64]>, p: f64, cell: f64) -> f64 {
    lp_of_moduli(values.iter().map(|z| z.norm()), weight, p, cell)
}

fn lp_of_moduli(moduli: impl Iterator<Item = f64>, weight: Option<&[f64]>, p: f64, cell: f64) -> f64 {
    let w = |i: usize| weight.map_or(1.0, |w| w[i]);
    let terms = moduli.enumerate().map(|(i, m)| m * w(i));
    if p.is_infinite() {
        terms.fold(0.0, f64::max)
    } else if p == 2.0 {
        (terms.map(|t| t * t).sum::<f64>() * cell).sqrt()
    } else {
        (terms.map(|t| t.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

fn physical(f: &Field) -> Result<Field> {
    match f.domain() {
        Domain::Physical => Ok(f.clone()),
        Domain::Spectral => f.inverse(),
    }
}

/// `‖f‖_{L^p_μ}`.
pub fn lebesgue_norm(f: &Field, p: f64, mu: f64) -> Result<f64> {
    NormSpec::lebesgue(p, mu).validate()?;
    let f = physical(f)?;
    let w = weight_values(f.grid(), mu);
    Ok(lp_of(f.values(), w.as_deref(), p, f.grid().cell_area()))
}

/// Block norms `‖Δ_N f‖_{L^p_μ}` in level order, paired with the level.
pub fn block_norms(f: &Field, p: f64, mu: f64) -> Result<Vec<(f64, f64)>> {
    let part = DyadicPartition::shared(f.grid());
    let w = weight_values(f.grid(), mu);
    let cell = f.grid().cell_area();
    let real = f.domain() == Domain::Physical && f.values().iter().all(|z| z.im == 0.0);
    if !real {
        let blocks = part.blocks(f)?;
        return Ok(part
            .levels()
            .iter()
            .zip(blocks)
            .map(|(&nl, b)| (nl, lp_of(b.values(), w.as_deref(), p, cell)))
            .collect());
    }
    // Blocks of a real field are real: two levels share one inverse
    // transform as the real and imaginary parts of Δ_a f + i Δ_b f.
    let hat = f.forward()?;
    let i = crate::C64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(part.levels().len());
    for pair in part.levels().chunks(2) {
        let sa = part.symbol(pair[0])?;
        let sb = pair.get(1).map(|&l| part.symbol(l)).transpose()?;
        let values = hat
            .values()
            .iter()
            .enumerate()
            .map(|(j, z)| z * (sa[j] + i * sb.map_or(0.0, |s| s[j])))
            .collect();
        let g = Field::from_values(*f.grid(), values, Domain::Spectral)?.inverse()?;
        out.push((pair[0], lp_of_moduli(g.values().iter().map(|z| z.re.abs()), w.as_deref(), p, cell)));
        if let Some(&lb) = pair.get(1) {
            out.push((lb, lp_of_moduli(g.values().iter().map(|z| z.im.abs()), w.as_deref(), p, cell)));
        }
    }
    Ok(out)
}

fn besov_from_blocks(blocks: &[(f64, f64)], alpha: f64, q: f64) -> f64 {
    if q.is_infinite() {
        blocks.iter().map(|(nl, a)| nl.powf(alpha) * a).fold(0.0, f64::max)
    } else {
        blocks
            .iter()
            .map(|(nl, a)| (nl.powf(alpha) * a).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Evaluates the norm of `f` described by `spec`.
pub fn norm(f: &Field, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    match spec.kind {
        NormKind::Lebesgue => lebesgue_norm(f, spec.p, spec.mu),
        NormKind::SobolevW1p => {
            let f = physical(f)?;
            let (d1, d2) = f.gradient();
            let grad = d1.zip_with(&d2, |a, b| crate::C64::new((a.norm_sqr() + b.norm_sqr()).sqrt(), 0.0))?;
            Ok(lebesgue_norm(&f, spec.p, spec.mu)? + lebesgue_norm(&grad, spec.p, spec.mu)?)
        }
        NormKind::SobolevHs | NormKind::Besov | NormKind::Holder => {
            let blocks = block_norms(f, spec.p, spec.mu)?;
            Ok(besov_from_blocks(&blocks, spec.alpha, spec.q))
        }
    }
}

/// `‖⟨x⟩^μ F^{-1} ⟨k⟩^α F f‖_{L^2}`, the Fourier-multiplier form of the
/// weighted Sobolev norm. Equivalent to, but not equal to, the (2,2) block norm.
pub fn hs_fourier_norm(f: &Field, alpha: f64, mu: f64) -> Result<f64> {
    let g = f.apply_multiplier(|k1, k2| crate::C64::new((1.0 + k1 * k1 + k2 * k2).powf(0.5 * alpha), 0.0));
    lebesgue_norm(&g, 2.0, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> GridSpec {
        GridSpec::new(l, n).unwrap()
    }

    fn bump_field(g: GridSpec) -> Field {
        Field::from_real_fn(g, |x, y| (-(x * x + y * y)).exp())
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert_eq!(cutoff(3.0), 0.0);
        assert!((cutoff(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let c = cutoff(0.5 + 0.005 * i as f64);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn symbols_supported_in_annuli() {
        for &nl in &[1.0, 2.0, 8.0] {
            for i in 0..2000 {
                let r = i as f64 * 0.01 * nl;
                let s = block_symbol(nl, r);
                if r < 0.5 * nl || r > 2.0 * nl {
                    assert_eq!(s, 0.0, "N {nl} r {r}");
                }
                assert!((0.0..=1.0).contains(&s));
            }
        }
        assert_eq!(block_symbol(0.5, 1.0), 0.0);
    }

    #[test]
    fn partition_of_unity() {
        for (l, n) in [(16.0, 64), (16.0, 128), (4.0, 256), (3.0, 32)] {
            let part = DyadicPartition::new(&grid(l, n));
            assert!(part.unity_residual(0.9) < 1e-10);
            assert!(part.unity_residual(2.0) < 1e-10);
        }
    }

    #[test]
    fn levels_cover_corner() {
        let g = grid(16.0, 128);
        let part = DyadicPartition::new(&g);
        assert_eq!(part.levels()[0], 0.5);
        assert!(part.n_max() >= 2f64.sqrt() * g.nyquist());
        assert!(part.n_max() / 2.0 < 2f64.sqrt() * g.nyquist());
    }

    #[test]
    fn plane_wave_scaled_by_symbol() {
        let l = 2.0 * PI;
        let g = grid(l, 32);
        let f = Field::from_fn(g, |x, y| C64::from_polar(1.0, 3.0 * x + 4.0 * y));
        for &nl in &[2.0, 4.0, 8.0] {
            let p = lp_project(&f, nl).unwrap();
            let expect = f.scale(C64::new(block_symbol(nl, 5.0), 0.0));
            assert!(p.sub(&expect).unwrap().max_abs() < 1e-12);
        }
        assert!(block_symbol(4.0, 5.0) > 0.0);
    }

    #[test]
    fn constant_field_lives_in_low_block() {
        let g = grid(8.0, 16);
        let c = Field::constant(g, C64::new(2.0, -1.0));
        assert!(lp_project(&c, 0.5).unwrap().sub(&c).unwrap().max_abs() < 1e-12);
        let part = DyadicPartition::shared(&g);
        for &nl in &part.levels()[1..] {
            assert!(lp_project(&c, nl).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_level_rejected() {
        let g = grid(8.0, 16);
        let f = Field::zeros(g, Domain::Physical);
        let part = DyadicPartition::shared(&g);
        assert!(matches!(lp_project(&f, part.n_max() * 2.0), Err(Error::Range(_))));
        assert!(matches!(lp_project(&f, 3.0), Err(Error::Range(_))));
    }

    #[test]
    fn blocks_reconstruct_random_field() {
        use rand::{Rng, SeedableRng};
        let g = grid(10.0, 64);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vals = (0..g.len()).map(|_| C64::new(rng.random(), rng.random())).collect();
        let f = Field::from_values(g, vals, Domain::Physical).unwrap();
        let blocks = DyadicPartition::shared(&g).blocks(&f).unwrap();
        let mut sum = Field::zeros(g, Domain::Physical);
        for b in &blocks {
            sum = sum.add(b).unwrap();
        }
        let rel = (sum.sub(&f).unwrap().l2_norm_sq().unwrap() / f.l2_norm_sq().unwrap()).sqrt();
        assert!(rel < 1e-9, "rel {rel}");
    }

    #[test]
    fn weight_examples() {
        let g = grid(24.0, 48);
        let w0 = weight_field(&g, 0.0);
        assert!(w0.values().iter().all(|z| *z == C64::new(1.0, 0.0)));
        let w2 = weight_field(&g, 2.0);
        assert_eq!(w2.at(24, 24), C64::new(1.0, 0.0));
        let w1 = weight_field(&g, 1.0);
        // x = (3, 4) sits at index (24 + 6, 24 + 8) with h = 1/2.
        assert!((w1.at(30, 32).re - 26f64.sqrt()).abs() < 1e-14);
        assert!(w1.values().iter().all(|z| z.re > 0.0));
        // Wrapped distance is periodic: x = -L/2 equals distance L/2.
        assert!((w1.at(0, 24).re - (1.0f64 + 144.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        let g = grid(6.0, 32);
        let zero = Field::zeros(g, Domain::Physical);
        for spec in [
            NormSpec::lebesgue(3.0, 1.0),
            NormSpec::w1p(2.0, -0.5),
            NormSpec::hs(1.5, 0.1),
            NormSpec::besov(-0.5, 1.0, 4.0, 2.0),
            NormSpec::holder(0.5, -0.75),
        ] {
            assert_eq!(norm(&zero, &spec).unwrap(), 0.0);
        }
        let c = Field::constant(g, C64::new(0.6, 0.8));
        let v = norm(&c, &NormSpec::besov(0.0, 2.0, 2.0, 0.0)).unwrap();
        assert!((v - 6.0).abs() < 1e-12, "v {v}");
    }

    #[test]
    fn invalid_exponents_rejected() {
        let g = grid(6.0, 16);
        let f = Field::zeros(g, Domain::Physical);
        assert!(matches!(norm(&f, &NormSpec::besov(0.0, 0.5, 2.0, 0.0)), Err(Error::Usage(_))));
        assert!(matches!(norm(&f, &NormSpec::besov(0.0, 2.0, f64::NAN, 0.0)), Err(Error::Usage(_))));
        let mut bad = NormSpec::hs(1.0, 0.0);
        bad.p = 3.0;
        assert!(matches!(norm(&f, &bad), Err(Error::Usage(_))));
    }

    #[test]
    fn aliases_agree() {
        let g = grid(12.0, 64);
        let f = bump_field(g).map(|z| z * C64::new(0.5, 1.0));
        for (a, mu) in [(1.0, 0.0), (1.5, 0.1), (-0.5, -0.25)] {
            let x = norm(&f, &NormSpec::hs(a, mu)).unwrap();
            let y = norm(&f, &NormSpec::besov(a, 2.0, 2.0, mu)).unwrap();
            assert!(((x - y) / y).abs() < 1e-10);
            let x = norm(&f, &NormSpec::holder(a, mu)).unwrap();
            let y = norm(&f, &NormSpec::besov(a, f64::INFINITY, f64::INFINITY, mu)).unwrap();
            assert!(((x - y) / y).abs() < 1e-10);
        }
    }

    #[test]
    fn lebesgue_matches_analytic() {
        // ‖e^{-|x|^2}‖_{L^2} = sqrt(π/2); L^∞ norm 1.
        let g = grid(16.0, 64);
        let f = bump_field(g);
        let l2 = norm(&f, &NormSpec::lebesgue(2.0, 0.0)).unwrap();
        assert!((l2 - (PI / 2.0).sqrt()).abs() < 1e-8);
        assert!((norm(&f, &NormSpec::lebesgue(f64::INFINITY, 0.0)).unwrap() - 1.0).abs() < 1e-14);
        // ‖e^{-|x|^2}‖_{L^1} = π
        let l1 = norm(&f, &NormSpec::lebesgue(1.0, 0.0)).unwrap();
        assert!((l1 - PI).abs() < 1e-8);
        // ∫ (1+|x|^2) e^{-2|x|^2} = π/2 + π/4
        let w = norm(&f, &NormSpec::lebesgue(2.0, 1.0)).unwrap();
        assert!((w * w - 0.75 * PI).abs() < 1e-8);
    }

    #[test]
    fn w1p_matches_analytic() {
        // ∫|∇e^{-|x|^2}|^2 = ∫ 4|x|^2 e^{-2|x|^2} = π.
        let g = grid(16.0, 64);
        let v = norm(&bump_field(g), &NormSpec::w1p(2.0, 0.0)).unwrap();
        let expect = (PI / 2.0).sqrt() + PI.sqrt();
        assert!((v - expect).abs() < 1e-8);
    }

    #[test]
    fn hs_block_norm_within_symbol_envelope() {
        // The block form of H^1 differs from the ⟨k⟩ form by the ratio of the
        // two symbols; for a Gaussian the measured ratio must lie inside that
        // envelope, which is the only quantitative relation between them.
        for (l, n) in [(16.0, 128), (16.0, 256)] {
            let g = grid(l, n);
            let f = bump_field(g);
            let block = norm(&f, &NormSpec::hs(1.0, 0.0)).unwrap();
            let direct = hs_fourier_norm(&f, 1.0, 0.0).unwrap();
            let (lo, hi) = DyadicPartition::shared(&g).hs_symbol_envelope(1.0);
            let r = block / direct;
            assert!(r >= lo.sqrt() && r <= hi.sqrt(), "r {r} lo {lo} hi {hi}");
            assert!((0.6..0.8).contains(&r), "r {r}");
        }
    }

    #[test]
    fn csv_row_format() {
        let row = NormSpec::hs(1.5, 0.1).csv_row(2.0);
        assert!(row.starts_with("sobolev_hs,1.5,2,2,0.1,2.0"));
        assert_eq!(NormSpec::CSV_HEADER.split(',').count(), row.split(',').count());
    }

    #[test]
    fn paired_real_blocks_match_complex_route() {
        let g = grid(6.0, 64);
        let f = Field::from_real_fn(g, |x, y| (-(x * x + 0.5 * y * y)).exp() * (3.0 * x).cos() + 0.1 * (y * 7.0).sin());
        // Multiplying by i keeps every block modulus and forces the generic route.
        let rotated = f.scale(C64::new(0.0, 1.0));
        for (p, mu) in [(2.0, 0.0), (f64::INFINITY, -0.5), (3.0, 0.25)] {
            let a = block_norms(&f, p, mu).unwrap();
            let b = block_norms(&rotated, p, mu).unwrap();
            assert_eq!(a.len(), b.len());
            // Round-off is relative to the largest block, not to tiny top blocks.
            let scale = b.iter().map(|x| x.1).fold(0.0, f64::max);
            for ((la, va), (lb, vb)) in a.iter().zip(&b) {
                assert_eq!(la, lb);
                assert!((va - vb).abs() <= 1e-13 * scale, "level {la}: {va} vs {vb}");
            }
        }
    }
}
