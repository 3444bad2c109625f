//! ε-ladders sharing one noise realization: Cauchy gaps of the gauged
//! solutions and the effect of the renormalizing phase.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use super::config::{take_sim_config, KvConfig};
use super::linear_fit;
use super::manifest::{find_completed, sha256_hex, RunManifest};
use crate::dynamics::{evolve_with, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::gauge::GaugeContext;
use crate::grid::{snapshot, Field, GridSpec};
use crate::lp::{norm, NormSpec};
use crate::noise::{bundle_from_noise, sample_white_noise, MollifierSpec, NoiseKernels};
use crate::par;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    /// Grid, dynamics and noise coupling shared by every member; `eps` and
    /// `renormalize` are overridden per run.
    pub base: SimConfig,
    /// Strictly decreasing mollifier radii.
    pub eps_list: Vec<f64>,
    /// Steps between gap samples; the final time is always sampled.
    pub sample_every: usize,
    pub norm: NormSpec,
    pub weak_norm: NormSpec,
    /// Datum `exp(−|x|^2 / width^2)`.
    pub datum_width: f64,
}

impl LadderConfig {
    pub fn new(base: SimConfig, eps_list: Vec<f64>) -> Self {
        LadderConfig {
            sample_every: base.cadence,
            base,
            eps_list,
            norm: NormSpec::hs(1.5, 0.1),
            weak_norm: NormSpec::lebesgue(2.0, -0.25),
            datum_width: 1.0,
        }
    }

    /// The dyadic ladder `ε = 2^{−3}, …, 2^{−6}` on one grid with `h = 1/256`,
    /// so the finest radius spans four cells: box side 2.25, `n = 576`,
    /// ETD-RK4 with `dt = 2.5e−4` and 2/3 dealiasing, `T = 0.5`, gaps sampled
    /// every 0.05.
    pub fn standard() -> Self {
        let base = SimConfig {
            grid: GridSpec::new(2.25, 576).expect("valid grid"),
            dt: 2.5e-4,
            t_final: 0.5,
            cadence: 200,
            scheme: Scheme::EtdPrimitive,
            dealias: true,
            record_energy: false,
            ..SimConfig::default()
        };
        let mut cfg = LadderConfig::new(base, (3..=6).map(|k| 2f64.powi(-k)).collect());
        cfg.datum_width = 0.3;
        cfg
    }

    /// Reads the simulation keys plus `eps_list`, `sample_every`,
    /// `datum_width`, `norm_s`, `norm_mu` and `weak_mu` over [`LadderConfig::standard`].
    pub fn from_kv(kv: &mut KvConfig) -> Result<Self> {
        let standard = LadderConfig::standard();
        let base = take_sim_config(kv, &standard.base)?;
        let eps_list = kv.take_f64_list("eps_list")?.unwrap_or(standard.eps_list);
        let mut cfg = LadderConfig::new(base, eps_list);
        cfg.datum_width = standard.datum_width;
        if let Some(v) = kv.take_usize("sample_every")? {
            cfg.sample_every = v;
        }
        if let Some(v) = kv.take_f64("datum_width")? {
            cfg.datum_width = v;
        }
        let s = kv.take_f64("norm_s")?.unwrap_or(1.5);
        let mu = kv.take_f64("norm_mu")?.unwrap_or(0.1);
        cfg.norm = NormSpec::hs(s, mu);
        if let Some(mu) = kv.take_f64("weak_mu")? {
            cfg.weak_norm = NormSpec::lebesgue(2.0, mu);
        }
        Ok(cfg)
    }

    pub fn echo(&self) -> String {
        let mut s = self.base.echo();
        let eps: Vec<String> = self.eps_list.iter().map(|e| e.to_string()).collect();
        writeln!(s, "eps_list = {}", eps.join(", ")).unwrap();
        writeln!(s, "sample_every = {}", self.sample_every).unwrap();
        writeln!(s, "datum_width = {}", self.datum_width).unwrap();
        writeln!(s, "norm_s = {}", self.norm.alpha).unwrap();
        writeln!(s, "norm_mu = {}", self.norm.mu).unwrap();
        writeln!(s, "weak_mu = {}", self.weak_norm.mu).unwrap();
        s
    }

    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.eps_list.len() < 2 {
            return Err(Error::config("a ladder needs at least two radii"));
        }
        if !self.eps_list.windows(2).all(|w| w[1] < w[0]) {
            return Err(Error::config("eps_list must be strictly decreasing"));
        }
        if self.sample_every == 0 {
            return Err(Error::config("sample_every must be at least 1"));
        }
        if !(self.datum_width > 0.0) {
            return Err(Error::config("datum_width must be positive"));
        }
        self.norm.validate()?;
        self.weak_norm.validate()?;
        let ok = resolvable(&self.base.grid, &self.eps_list);
        if ok.len() != self.eps_list.len() {
            return Err(Error::UnderResolved(format!(
                "need eps >= 4h = {}; resolvable sub-ladder: {:?}",
                4.0 * self.base.grid.spacing(),
                ok
            )));
        }
        Ok(())
    }
}

/// Radii of `eps_list` that span at least four cells of `grid`.
pub fn resolvable(grid: &GridSpec, eps_list: &[f64]) -> Vec<f64> {
    eps_list
        .iter()
        .cloned()
        .filter(|&e| MollifierSpec::new(e).is_ok_and(|m| m.is_resolved(grid)))
        .collect()
}

/// `exp(−|x|^2 / width^2)`.
pub fn gaussian_datum(grid: &GridSpec, width: f64) -> Field {
    Field::from_real_fn(*grid, |x, y| (-(x * x + y * y) / (width * width)).exp())
}

/// One ladder member sampled at the shared gap times.
#[derive(Debug, Clone)]
pub struct MemberRun {
    pub eps: f64,
    pub c_eps: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub xi_hash: String,
    pub resumed: bool,
}

fn member_config(cfg: &LadderConfig, eps: f64, renormalize: bool) -> SimConfig {
    SimConfig {
        eps,
        renormalize,
        cadence: cfg.sample_every,
        record_energy: false,
        ..cfg.base.clone()
    }
}

fn run_member(
    cfg: &LadderConfig,
    eps: f64,
    renormalize: bool,
    xi: &Field,
    xi_hash: &str,
    out_dir: Option<&Path>,
    index: usize,
) -> Result<MemberRun> {
    let mcfg = member_config(cfg, eps, renormalize);
    let kernels = NoiseKernels::resolved(&mcfg.grid, eps)?;
    let key_text = format!(
        "{}datum_width = {}\nxi = {xi_hash}\n",
        mcfg.echo(),
        cfg.datum_width
    );
    let mut manifest = RunManifest::new("ladder-member", &key_text);
    if let Some(dir) = out_dir {
        if let Some(done) = find_completed(dir, &manifest.key)? {
            let snapshots = done
                .files
                .iter()
                .map(|f| snapshot::read(&dir.join(&f.path)))
                .collect::<Result<Vec<Field>>>()?;
            let times = sample_times(&mcfg);
            if snapshots.len() == times.len() {
                return Ok(MemberRun {
                    eps,
                    c_eps: kernels.c_eps,
                    times,
                    snapshots,
                    xi_hash: xi_hash.to_string(),
                    resumed: true,
                });
            }
        }
    }
    let start = Instant::now();
    let bundle = bundle_from_noise(&kernels, xi.clone(), mcfg.seed, mcfg.stream)?;
    let ctx = GaugeContext::new(Arc::new(bundle), mcfg.p)?;
    let v0 = gaussian_datum(&mcfg.grid, cfg.datum_width);
    let traj = evolve_with(&mcfg, &ctx, &v0)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (i, v) in traj.snapshots.iter().enumerate() {
            let rel = format!("member_{:016x}_{index}_{i}.wnf", key_prefix(&manifest.key));
            snapshot::write(&dir.join(&rel), v)?;
            manifest.add_file(dir, &rel)?;
        }
        manifest.seeds.push(("noise".into(), mcfg.seed, mcfg.stream));
        manifest.hashes.push(("xi".into(), xi_hash.to_string()));
        manifest.steps = mcfg.steps() as u64;
        manifest.wall_clock_s = start.elapsed().as_secs_f64();
        manifest.append(dir)?;
    }
    Ok(MemberRun {
        eps,
        c_eps: ctx.c_eps,
        times: traj.times,
        snapshots: traj.snapshots,
        xi_hash: xi_hash.to_string(),
        resumed: false,
    })
}

fn key_prefix(key: &str) -> u64 {
    u64::from_str_radix(&key[..16], 16).unwrap_or(0)
}

fn sample_times(cfg: &SimConfig) -> Vec<f64> {
    let steps = cfg.steps();
    let mut t = vec![0.0];
    for s in 1..=steps {
        if s % cfg.cadence == 0 || s == steps {
            t.push(s as f64 * cfg.dt);
        }
    }
    t
}

/// Evolves every ladder member from the same noise `xi` (drawn from the base
/// seed when `None`). With `out_dir`, members already recorded in its
/// manifest are reloaded instead of recomputed.
pub fn run_members(cfg: &LadderConfig, renormalize: bool, xi: Option<Field>, out_dir: Option<&Path>) -> Result<Vec<MemberRun>> {
    cfg.validate()?;
    let grid = cfg.base.grid;
    let xi = match xi {
        Some(f) => {
            grid.check_same(f.grid())?;
            f
        }
        None => sample_white_noise(&grid, cfg.base.seed, cfg.base.stream),
    };
    let xi_hash = sha256_hex(&snapshot::encode(&xi));
    par::map_indexed(cfg.eps_list.len(), |i| {
        run_member(cfg, cfg.eps_list[i], renormalize, &xi, &xi_hash, out_dir, i)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub eps: Vec<f64>,
    pub c_eps: Vec<f64>,
    pub times: Vec<f64>,
    pub norm: NormSpec,
    pub weak_norm: NormSpec,
    /// `series[k][i]`: gap of pair `(k, k+1)` at `times[i]`.
    pub series: Vec<Vec<f64>>,
    pub weak_series: Vec<Vec<f64>>,
    /// `g_k = max_i series[k][i]`.
    pub gaps: Vec<f64>,
    pub weak_gaps: Vec<f64>,
    /// Slope of `log2 g_k` against `k = −log2 ε_k`.
    pub rate: f64,
    pub xi_hashes: Vec<String>,
}

impl ConvergenceReport {
    /// `k = −log2 ε` of the finer member of each pair.
    pub fn levels(&self) -> Vec<f64> {
        self.eps[1..].iter().map(|e| -e.log2()).collect()
    }

    pub fn final_gaps(&self) -> Vec<f64> {
        self.series.iter().map(|s| *s.last().unwrap_or(&f64::NAN)).collect()
    }

    pub fn monotone(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] < w[0])
    }

    /// Every member consumed the same noise realization.
    pub fn coupled(&self) -> bool {
        self.xi_hashes.windows(2).all(|w| w[0] == w[1])
    }

    pub fn passed(&self) -> bool {
        self.monotone() && self.coupled()
    }

    pub const CSV_HEADER: &'static str = "k,eps_coarse,eps_fine,gap,weak_gap,final_gap";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        let finals = self.final_gaps();
        for (i, k) in self.levels().iter().enumerate() {
            writeln!(
                s,
                "{k},{:e},{:e},{:.10e},{:.10e},{:.10e}",
                self.eps[i],
                self.eps[i + 1],
                self.gaps[i],
                self.weak_gaps[i],
                finals[i]
            )
            .unwrap();
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("[convergence]\n");
        writeln!(s, "norm = {} alpha={} mu={}", self.norm.kind_name(), self.norm.alpha, self.norm.mu).unwrap();
        writeln!(s, "weak_norm = {} mu={}", self.weak_norm.kind_name(), self.weak_norm.mu).unwrap();
        for (e, c) in self.eps.iter().zip(&self.c_eps) {
            writeln!(s, "c_eps({e}) = {c:.12}").unwrap();
        }
        s.push_str(&self.to_csv());
        writeln!(s, "rate = {:.4}", self.rate).unwrap();
        writeln!(s, "monotone = {}", self.monotone()).unwrap();
        writeln!(s, "coupled = {}", self.coupled()).unwrap();
        s
    }
}

/// Gaps between consecutive members after multiplying member `k` by
/// `phase(k, t)`.
fn ladder_gaps(cfg: &LadderConfig, members: &[MemberRun], phase: impl Fn(usize, f64) -> C64 + Sync) -> Result<ConvergenceReport> {
    let times = members[0].times.clone();
    let pairs = members.len() - 1;
    let tasks = pairs * times.len();
    let values = par::map_indexed(tasks, |task| -> Result<(f64, f64)> {
        let (k, i) = (task / times.len(), task % times.len());
        let t = times[i];
        let a = members[k].snapshots[i].scale(phase(k, t));
        let b = members[k + 1].snapshots[i].scale(phase(k + 1, t));
        let d = a.sub(&b)?;
        Ok((norm(&d, &cfg.norm)?, norm(&d, &cfg.weak_norm)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut series = vec![Vec::new(); pairs];
    let mut weak_series = vec![Vec::new(); pairs];
    for (task, (g, w)) in values.into_iter().enumerate() {
        series[task / times.len()].push(g);
        weak_series[task / times.len()].push(w);
    }
    let sup = |s: &Vec<f64>| s.iter().cloned().fold(0.0, f64::max);
    let gaps: Vec<f64> = series.iter().map(sup).collect();
    let weak_gaps = weak_series.iter().map(sup).collect();
    let eps: Vec<f64> = members.iter().map(|m| m.eps).collect();
    let ks: Vec<f64> = eps[1..].iter().map(|e| -e.log2()).collect();
    let lg: Vec<f64> = gaps.iter().map(|g| g.log2()).collect();
    let rate = if gaps.len() >= 2 && gaps.iter().all(|g| *g > 0.0) {
        linear_fit(&ks, &lg).0
    } else {
        f64::NAN
    };
    Ok(ConvergenceReport {
        eps,
        c_eps: members.iter().map(|m| m.c_eps).collect(),
        times,
        norm: cfg.norm,
        weak_norm: cfg.weak_norm,
        series,
        weak_series,
        gaps,
        weak_gaps,
        rate,
        xi_hashes: members.iter().map(|m| m.xi_hash.clone()).collect(),
    })
}

/// Renormalized ladder: gaps of `v_ε = e^{i c_ε t} e^{Y_ε} u_ε`.
pub fn run_convergence(cfg: &LadderConfig, out_dir: Option<&Path>) -> Result<ConvergenceReport> {
    run_convergence_with(cfg, None, out_dir)
}

/// [`run_convergence`] with an injected noise field.
pub fn run_convergence_with(cfg: &LadderConfig, xi: Option<Field>, out_dir: Option<&Path>) -> Result<ConvergenceReport> {
    let members = run_members(cfg, true, xi, out_dir)?;
    ladder_gaps(cfg, &members, |_, _| C64::new(1.0, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenormReport {
    /// Gaps of `e^{i c_ε t} e^{Y_ε} u_ε`.
    pub corrected: ConvergenceReport,
    /// Gaps of `e^{Y_ε} u_ε`.
    pub uncorrected: ConvergenceReport,
}

impl RenormReport {
    /// Required excess of the uncorrected over the corrected finest-pair gap
    /// at the final time.
    pub const REQUIRED_RATIO: f64 = 10.0;

    /// Uncorrected over corrected finest-pair gap at the final time.
    pub fn finest_ratio(&self) -> f64 {
        let u = *self.uncorrected.final_gaps().last().unwrap_or(&f64::NAN);
        let c = *self.corrected.final_gaps().last().unwrap_or(&f64::NAN);
        u / c
    }

    pub fn passed(&self) -> bool {
        self.corrected.monotone() && self.finest_ratio() >= Self::REQUIRED_RATIO
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("[renormalization]\n");
        s.push_str("corrected:\n");
        s.push_str(&self.corrected.to_csv());
        s.push_str("uncorrected:\n");
        s.push_str(&self.uncorrected.to_csv());
        writeln!(s, "finest_ratio = {:.4}", self.finest_ratio()).unwrap();
        writeln!(s, "corrected_monotone = {}", self.corrected.monotone()).unwrap();
        s
    }
}

/// Runs the ladder with `renormalize = off`, so each member computes
/// `e^{Y_ε} u_ε`, and compares it with and without the phase `e^{i c_ε t}`.
pub fn run_renormalization_demo(cfg: &LadderConfig, out_dir: Option<&Path>) -> Result<RenormReport> {
    let members = run_members(cfg, false, None, out_dir)?;
    let c: Vec<f64> = members.iter().map(|m| m.c_eps).collect();
    let corrected = ladder_gaps(cfg, &members, |k, t| C64::from_polar(1.0, c[k] * t))?;
    let uncorrected = ladder_gaps(cfg, &members, |_, _| C64::new(1.0, 0.0))?;
    Ok(RenormReport { corrected, uncorrected })
}
