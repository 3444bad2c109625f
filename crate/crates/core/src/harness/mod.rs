//! Experiment harness: configuration files, run manifests, ε-ladders,
//! stochastic campaigns and result emission.

mod audit;
mod campaign;
pub mod config;
mod emit;
mod ladder;
pub mod manifest;

pub use audit::{audit_config, run_energy_audit, AuditRun};
pub use campaign::run_stochastic_campaign;
pub use config::{sim_config_from_text, take_sim_config, KvConfig};
pub use emit::{emit_results, LinePlot, Report, Series};
pub use ladder::{
    gaussian_datum, resolvable, run_convergence, run_convergence_with, run_members, run_renormalization_demo,
    ConvergenceReport, LadderConfig, MemberRun, RenormReport,
};
pub use manifest::{find_completed, read_manifests, sha256_file, sha256_hex, RunManifest};

/// Least-squares line `y ≈ slope·x + intercept`; returns
/// `(slope, intercept, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}
