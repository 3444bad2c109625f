//! `wicknls` command-line front end.
//!
//! Exit codes: 0 pass, 1 criterion failure, 2 usage or configuration error,
//! 3 numerical abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use wicknls::dynamics::{context_for, default_initial, evolve, SimConfig};
use wicknls::grid::snapshot;
use wicknls::harness::{
    audit_config, emit_results, run_energy_audit, run_convergence, run_renormalization_demo, run_stochastic_campaign, sha256_hex, take_sim_config,
    KvConfig, LadderConfig, Report, RunManifest,
};
use wicknls::noise::{StochasticConfig, MIN_REALIZATIONS};
use wicknls::{Error, GridSpec};

#[derive(Parser)]
#[command(name = "wicknls", version, about = "Gauged NLS with mollified white-noise potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a noise realization and write its fields and manifest.
    SampleNoise {
        #[command(flatten)]
        common: Common,
        /// Destination of the white-noise snapshot.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one trajectory and write snapshots and the energy ledger.
    Simulate(Common),
    /// Cauchy gaps along an eps ladder sharing one noise realization.
    Converge(Common),
    /// Modified-energy residual at dt and successive halvings.
    EnergyAudit(Common),
    /// Monte Carlo moment and convergence checks of the noise objects.
    StochasticBounds(Common),
    /// Ladder gaps with and without the renormalizing phase.
    RenormDemo(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long = "box-L")]
    box_l: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

impl Common {
    fn load(&self) -> Result<KvConfig, Error> {
        let mut kv = match &self.config {
            Some(path) => KvConfig::load(path)?,
            None => KvConfig::default(),
        };
        if let Some(v) = self.eps {
            kv.set("eps", v);
        }
        if let Some(v) = self.seed {
            kv.set("seed", v);
        }
        if let Some(v) = self.grid_n {
            kv.set("grid_n", v);
        }
        if let Some(v) = self.box_l {
            kv.set("box_L", v);
        }
        if let Some(v) = self.dt {
            kv.set("dt", v);
        }
        if let Some(v) = self.t_final {
            kv.set("T", v);
        }
        if let Some(v) = self.p {
            kv.set("p", v);
        }
        if let Some(v) = self.lambda {
            kv.set("lambda", v);
        }
        Ok(kv)
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SampleNoise { common, out } => sample_noise(common, out.as_deref()),
        Command::Simulate(c) => simulate(c),
        Command::Converge(c) => converge(c),
        Command::EnergyAudit(c) => energy_audit(c),
        Command::StochasticBounds(c) => stochastic_bounds(c),
        Command::RenormDemo(c) => renorm_demo(c),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e @ Error::NumericalAbort { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn verdict(pass: bool) -> Outcome {
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn sample_noise(c: &Common, out: Option<&Path>) -> Result<Outcome, Error> {
    let mut kv = c.load()?;
    let cfg = take_sim_config(&mut kv, &SimConfig::default())?;
    kv.finish()?;
    let start = Instant::now();
    let ctx = context_for(&cfg)?;
    let dir = &c.out_dir;
    std::fs::create_dir_all(dir)?;
    let xi_path = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("xi.wnf"));
    let b = &ctx.bundle;
    snapshot::write(&xi_path, &b.xi)?;
    snapshot::write(&dir.join("xi_eps.wnf"), &b.xi_eps)?;
    snapshot::write(&dir.join("y_eps.wnf"), &b.y_eps)?;
    std::fs::write(dir.join("bundle.txt"), b.manifest())?;
    let mut m = RunManifest::new("sample-noise", &cfg.echo());
    m.seeds.push(("noise".into(), cfg.seed, cfg.stream));
    m.hashes.push(("xi".into(), sha256_hex(&snapshot::encode(&b.xi))));
    for rel in ["xi_eps.wnf", "y_eps.wnf", "bundle.txt"] {
        m.add_file(dir, rel)?;
    }
    if out.is_none() {
        m.add_file(dir, "xi.wnf")?;
    }
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.append(dir)?;
    print!("{}", b.manifest());
    Ok(Outcome::Pass)
}

fn simulate(c: &Common) -> Result<Outcome, Error> {
    let mut kv = c.load()?;
    let cfg = take_sim_config(&mut kv, &SimConfig::default())?;
    kv.finish()?;
    let dir = &c.out_dir;
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let v0 = default_initial(&cfg.grid);
    let traj = match evolve(&cfg, &v0) {
        Ok(t) => t,
        Err(Error::NumericalAbort { time, reason, last_good }) => {
            if let Some(f) = &last_good {
                snapshot::write(&dir.join("last_good.wnf"), f)?;
            }
            return Err(Error::NumericalAbort { time, reason, last_good });
        }
        Err(e) => return Err(e),
    };
    let mut m = RunManifest::new("simulate", &cfg.echo());
    m.seeds.push(("noise".into(), cfg.seed, cfg.stream));
    for (i, v) in traj.snapshots.iter().enumerate() {
        let rel = format!("snap_{i:05}.wnf");
        snapshot::write(&dir.join(&rel), v)?;
        m.add_file(dir, &rel)?;
    }
    let mut info = cfg.echo();
    info.push_str("\n[times]\n");
    for t in &traj.times {
        info.push_str(&format!("{t}\n"));
    }
    info.push_str("\n[bundle]\n");
    info.push_str(&traj.bundle_manifest);
    for w in &traj.warnings {
        info.push_str(&format!("warning = {w}\n"));
        eprintln!("warning: {w}");
    }
    std::fs::write(dir.join("trajectory.txt"), info)?;
    m.add_file(dir, "trajectory.txt")?;
    if cfg.record_energy {
        for p in emit_results(&[Report::Ledger(traj.ledger.clone())], dir)? {
            m.add_file(dir, &p.file_name().unwrap().to_string_lossy())?;
        }
        println!("mass_drift = {:e}", traj.mass_drift());
        println!("h1_drift = {:e}", traj.h1_drift());
        println!("audit_residual = {:e}", traj.ledger.audit_residual());
    }
    m.steps = cfg.steps() as u64;
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.append(dir)?;
    Ok(Outcome::Pass)
}

fn ladder_config(c: &Common) -> Result<LadderConfig, Error> {
    let mut kv = c.load()?;
    if let Some(e) = c.eps {
        // A single --eps sets the finest radius of a four-level dyadic ladder.
        kv.take_f64("eps")?;
        kv.set("eps_list", (0..4).rev().map(|k| (e * 2f64.powi(k)).to_string()).collect::<Vec<_>>().join(", "));
    }
    let cfg = LadderConfig::from_kv(&mut kv)?;
    kv.finish()?;
    Ok(cfg)
}

fn converge(c: &Common) -> Result<Outcome, Error> {
    let cfg = ladder_config(c)?;
    let start = Instant::now();
    let report = run_convergence(&cfg, Some(&c.out_dir))?;
    print!("{}", report.to_text());
    let mut m = RunManifest::new("converge", &cfg.echo());
    m.seeds.push(("noise".into(), cfg.base.seed, cfg.base.stream));
    m.hashes.push(("xi".into(), report.xi_hashes[0].clone()));
    std::fs::write(c.out_dir.join("convergence.txt"), report.to_text())?;
    m.add_file(&c.out_dir, "convergence.txt")?;
    let pass = report.passed();
    for p in emit_results(&[Report::Convergence(report)], &c.out_dir)? {
        m.add_file(&c.out_dir, &p.file_name().unwrap().to_string_lossy())?;
    }
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.append(&c.out_dir)?;
    Ok(verdict(pass))
}

fn renorm_demo(c: &Common) -> Result<Outcome, Error> {
    let cfg = ladder_config(c)?;
    let start = Instant::now();
    let report = run_renormalization_demo(&cfg, Some(&c.out_dir))?;
    print!("{}", report.to_text());
    let mut m = RunManifest::new("renorm-demo", &cfg.echo());
    m.seeds.push(("noise".into(), cfg.base.seed, cfg.base.stream));
    std::fs::write(c.out_dir.join("renorm.txt"), report.to_text())?;
    m.add_file(&c.out_dir, "renorm.txt")?;
    let pass = report.passed();
    for p in emit_results(&[Report::Renormalization(report)], &c.out_dir)? {
        m.add_file(&c.out_dir, &p.file_name().unwrap().to_string_lossy())?;
    }
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.append(&c.out_dir)?;
    Ok(verdict(pass))
}

fn energy_audit(c: &Common) -> Result<Outcome, Error> {
    let mut kv = c.load()?;
    let cfg = take_sim_config(&mut kv, &audit_config())?;
    let halvings = kv.take_usize("audit_halvings")?.unwrap_or(1);
    let tolerance = kv.take_f64("audit_tolerance")?.unwrap_or(1e-3);
    let min_ratio = kv.take_f64("audit_min_ratio")?.unwrap_or(3.0);
    kv.finish()?;
    let start = Instant::now();
    let mut run = run_energy_audit(&cfg, halvings)?;
    print!("{}", run.report.to_text());
    println!("shrink_ratio = {:.4}", run.shrink_ratio());
    let pass = run.passed(tolerance, min_ratio);
    let mut m = RunManifest::new("energy-audit", &cfg.echo());
    m.seeds.push(("noise".into(), cfg.seed, cfg.stream));
    let reports = vec![Report::Audit(run.report.clone()), Report::Ledger(run.ledgers.swap_remove(0))];
    for p in emit_results(&reports, &c.out_dir)? {
        m.add_file(&c.out_dir, &p.file_name().unwrap().to_string_lossy())?;
    }
    m.wall_clock_s = start.elapsed().as_secs_f64();
    m.append(&c.out_dir)?;
    Ok(verdict(pass))
}

fn stochastic_bounds(c: &Common) -> Result<Outcome, Error> {
    let mut kv = c.load()?;
    let n = kv.take_usize("grid_n")?.unwrap_or(768);
    let l = kv.take_f64("box_L")?.unwrap_or(3.0);
    let grid = GridSpec::new(l, n)?;
    let eps_list = kv
        .take_f64_list("eps_list")?
        .unwrap_or_else(|| (3..=6).map(|k| 2f64.powi(-k)).collect());
    let m = kv.take_usize("realizations")?.unwrap_or(100);
    let seed = kv.take_u64("seed")?.unwrap_or(0);
    let mut cfg = StochasticConfig::new(eps_list, m, seed);
    if let Some(v) = kv.take_f64("r")? {
        cfg.r = v;
    }
    if let Some(v) = kv.take_f64("delta")? {
        cfg.delta = v;
    }
    if let Some(v) = kv.take_f64("alpha")? {
        cfg.alpha = v;
    }
    if let Some(v) = kv.take_f64("a")? {
        cfg.a = v;
    }
    kv.finish()?;
    if m < MIN_REALIZATIONS {
        eprintln!("note: at least {MIN_REALIZATIONS} realizations are required");
    }
    let report = run_stochastic_campaign(&grid, &cfg, Some(&c.out_dir))?;
    print!("{}", report.to_text());
    let pass = report.grad_ratio_variation() < 0.5 && report.wick_gaps_decreasing();
    emit_results(&[Report::Stochastic(report)], &c.out_dir)?;
    Ok(verdict(pass))
}
