//! Monte Carlo checks of the moment and convergence bounds of the noise
//! objects along a dyadic ε-ladder.

use std::fmt::Write as _;

use super::{bundle_from_noise, sample_white_noise, NoiseKernels};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::lp::{lebesgue_norm, norm, NormSpec};
use crate::par;
use crate::C64;

pub const MIN_REALIZATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticConfig {
    /// Decreasing list of mollifier radii.
    pub eps_list: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Integrability `r` of the gradient moment.
    pub r: f64,
    /// Weight decay `δ`; norms carry the weight `⟨x⟩^{-δ}`.
    pub delta: f64,
    /// Hölder regularity `α`.
    pub alpha: f64,
    /// Exponent `a` of `e^{aY_ε}`.
    pub a: f64,
}

impl StochasticConfig {
    pub fn new(eps_list: Vec<f64>, realizations: usize, seed: u64) -> Self {
        StochasticConfig {
            eps_list,
            realizations,
            seed,
            r: 4.0,
            delta: 0.75,
            alpha: 0.5,
            a: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub eps: f64,
    pub c_eps: f64,
    /// Mean of `‖∇Y_ε‖^2_{L^r_{-δ}} / |ln ε|`.
    pub grad_ratio: f64,
    pub grad_ratio_se: f64,
    /// Mean of `‖e^{aY_ε}‖_{C^α_{-δ}}` and its largest sample.
    pub exp_norm_mean: f64,
    pub exp_norm_max: f64,
    /// Mean of `‖ΔY_ε − ξ_ε‖_{C^1_{-δ}}`.
    pub smooth_norm_mean: f64,
    /// Monte Carlo mean of the spatial average of the Wick field.
    pub wick_mean: f64,
    pub wick_se: f64,
    /// Monte Carlo mean of the spatial average of `|∇Y_ε|^2`.
    pub grad_sq_mean: f64,
    pub grad_sq_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticReport {
    pub grid: GridSpec,
    pub config: StochasticConfig,
    pub rows: Vec<LadderRow>,
    /// Median over realizations of `‖:∇Y_ε²: − :∇Y_{ε'}²:‖_{C^{α−1}_{−δ}}` for
    /// consecutive ladder entries.
    pub wick_gap_median: Vec<f64>,
    /// Median of `‖Y_ε − Y_{ε'}‖_{C^α_{−δ}}`.
    pub y_gap_median: Vec<f64>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

impl StochasticReport {
    /// `max/min − 1` of the normalized gradient moments.
    pub fn grad_ratio_variation(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.grad_ratio).collect();
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    }

    pub fn wick_gaps_decreasing(&self) -> bool {
        strictly_decreasing(&self.wick_gap_median)
    }

    pub fn y_gaps_decreasing(&self) -> bool {
        strictly_decreasing(&self.y_gap_median)
    }

    pub fn exp_bound_finite(&self) -> bool {
        self.rows.iter().all(|r| r.exp_norm_max.is_finite())
    }

    /// Largest `|mean| / SE` of the Wick field's spatial average.
    pub fn wick_centering_z(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.wick_se > 0.0 { r.wick_mean.abs() / r.wick_se } else { 0.0 })
            .fold(0.0, f64::max)
    }

    /// Largest `|MC mean of |∇Y_ε|^2 − c_ε| / SE`.
    pub fn c_eps_route_z(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                if r.grad_sq_se > 0.0 {
                    (r.grad_sq_mean - r.c_eps).abs() / r.grad_sq_se
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        writeln!(s, "[stochastic_bounds]").unwrap();
        writeln!(s, "seed = {}", c.seed).unwrap();
        writeln!(s, "realizations = {}", c.realizations).unwrap();
        writeln!(s, "grid_n = {}", self.grid.n()).unwrap();
        writeln!(s, "box_L = {}", self.grid.box_length()).unwrap();
        writeln!(s, "r = {}", c.r).unwrap();
        writeln!(s, "delta = {}", c.delta).unwrap();
        writeln!(s, "alpha = {}", c.alpha).unwrap();
        writeln!(s, "a = {}", c.a).unwrap();
        writeln!(
            s,
            "\neps,c_eps,grad_ratio,grad_ratio_se,exp_norm_mean,exp_norm_max,smooth_norm_mean,wick_mean,wick_se,grad_sq_mean,grad_sq_se"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{},{:.17e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.eps,
                r.c_eps,
                r.grad_ratio,
                r.grad_ratio_se,
                r.exp_norm_mean,
                r.exp_norm_max,
                r.smooth_norm_mean,
                r.wick_mean,
                r.wick_se,
                r.grad_sq_mean,
                r.grad_sq_se
            )
            .unwrap();
        }
        writeln!(s, "\npair,wick_gap_median,y_gap_median").unwrap();
        for (i, (w, y)) in self.wick_gap_median.iter().zip(&self.y_gap_median).enumerate() {
            writeln!(s, "{i},{w:.10e},{y:.10e}").unwrap();
        }
        writeln!(s, "\ngrad_ratio_variation = {:.6e}", self.grad_ratio_variation()).unwrap();
        writeln!(s, "wick_gaps_decreasing = {}", self.wick_gaps_decreasing()).unwrap();
        writeln!(s, "y_gaps_decreasing = {}", self.y_gaps_decreasing()).unwrap();
        writeln!(s, "exp_bound_finite = {}", self.exp_bound_finite()).unwrap();
        writeln!(s, "wick_centering_z = {:.6e}", self.wick_centering_z()).unwrap();
        writeln!(s, "c_eps_route_z = {:.6e}", self.c_eps_route_z()).unwrap();
        s
    }
}

struct Sample {
    grad_ratio: Vec<f64>,
    exp_norm: Vec<f64>,
    smooth_norm: Vec<f64>,
    wick_mean: Vec<f64>,
    grad_sq_mean: Vec<f64>,
    wick_gap: Vec<f64>,
    y_gap: Vec<f64>,
}

/// White-noise campaign: realization `m` uses `(seed, stream = m)`, shared by
/// every ε on the ladder.
pub fn verify_stochastic_bounds(grid: &GridSpec, config: &StochasticConfig) -> Result<StochasticReport> {
    let seed = config.seed;
    verify_stochastic_bounds_with(grid, config, |m| sample_white_noise(grid, seed, m as u64))
}

/// Campaign over an arbitrary noise source, realization index to field.
pub fn verify_stochastic_bounds_with<S>(grid: &GridSpec, config: &StochasticConfig, source: S) -> Result<StochasticReport>
where
    S: Fn(usize) -> Field + Sync,
{
    if config.realizations < MIN_REALIZATIONS {
        return Err(Error::Statistics(format!(
            "{} realizations requested, at least {MIN_REALIZATIONS} required",
            config.realizations
        )));
    }
    if config.eps_list.is_empty() {
        return Err(Error::usage("empty ε list"));
    }
    let kernels: Vec<NoiseKernels> = config
        .eps_list
        .iter()
        .map(|&e| NoiseKernels::resolved(grid, e))
        .collect::<Result<_>>()?;
    let area = grid.box_length() * grid.box_length();
    let holder = NormSpec::holder(config.alpha, -config.delta);
    let holder_wick = NormSpec::holder(config.alpha - 1.0, -config.delta);
    let c1 = NormSpec::holder(1.0, -config.delta);

    let samples: Vec<Result<Sample>> = par::map_indexed(config.realizations, |m| {
        let xi = source(m);
        let mut out = Sample {
            grad_ratio: vec![],
            exp_norm: vec![],
            smooth_norm: vec![],
            wick_mean: vec![],
            grad_sq_mean: vec![],
            wick_gap: vec![],
            y_gap: vec![],
        };
        let mut prev: Option<(Field, Field)> = None;
        for k in &kernels {
            let b = bundle_from_noise(k, xi.clone(), config.seed, m as u64)?;
            let grad_mod = b.grad_y_eps.0.zip_with(&b.grad_y_eps.1, |a, c| {
                C64::new((a.norm_sqr() + c.norm_sqr()).sqrt(), 0.0)
            })?;
            let gn = lebesgue_norm(&grad_mod, config.r, -config.delta)?;
            out.grad_ratio.push(gn * gn / b.epsilon.ln().abs());
            let e = b.y_eps.map(|z| C64::new((config.a * z.re).exp(), 0.0));
            out.exp_norm.push(norm(&e, &holder)?);
            out.smooth_norm.push(norm(&b.smooth_part(), &c1)?);
            out.wick_mean.push(b.wick.integrate()?.re / area);
            out.grad_sq_mean.push(b.wick.integrate()?.re / area + b.c_eps);
            if let Some((pw, py)) = &prev {
                out.wick_gap.push(norm(&b.wick.sub(pw)?, &holder_wick)?);
                out.y_gap.push(norm(&b.y_eps.sub(py)?, &holder)?);
            }
            prev = Some((b.wick, b.y_eps));
        }
        Ok(out)
    });
    let samples: Vec<Sample> = samples.into_iter().collect::<Result<_>>()?;

    let column = |pick: &dyn Fn(&Sample) -> f64| -> Vec<f64> { samples.iter().map(pick).collect() };
    let rows = kernels
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let (grad_ratio, grad_ratio_se) = mean_se(&column(&|s| s.grad_ratio[i]));
            let exp = column(&|s| s.exp_norm[i]);
            let (exp_norm_mean, _) = mean_se(&exp);
            let (smooth_norm_mean, _) = mean_se(&column(&|s| s.smooth_norm[i]));
            let (wick_mean, wick_se) = mean_se(&column(&|s| s.wick_mean[i]));
            let (grad_sq_mean, grad_sq_se) = mean_se(&column(&|s| s.grad_sq_mean[i]));
            LadderRow {
                eps: k.mollifier.epsilon,
                c_eps: k.c_eps,
                grad_ratio,
                grad_ratio_se,
                exp_norm_mean,
                exp_norm_max: exp.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                smooth_norm_mean,
                wick_mean,
                wick_se,
                grad_sq_mean,
                grad_sq_se,
            }
        })
        .collect();
    let pairs = kernels.len().saturating_sub(1);
    let wick_gap_median = (0..pairs).map(|i| median(&column(&|s| s.wick_gap[i]))).collect();
    let y_gap_median = (0..pairs).map(|i| median(&column(&|s| s.y_gap[i]))).collect();
    Ok(StochasticReport {
        grid: *grid,
        config: config.clone(),
        rows,
        wick_gap_median,
        y_gap_median,
    })
}
