//! Modified-energy audit: one noise realization, the same datum, and a
//! sequence of halved time steps.

use crate::dynamics::{context_for, default_initial, evolve_with, SimConfig};
use crate::energetics::{AuditReport, EnergyLedger};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Audit defaults: `n = 64` on a box of side 6, where `e^{−|x|^2}` is
/// periodic to round-off, `dt = 2e−4`, `T = 0.5`, a ledger row every step.
pub fn audit_config() -> SimConfig {
    SimConfig {
        grid: GridSpec::new(6.0, 64).expect("valid grid"),
        dt: 2e-4,
        t_final: 0.5,
        cadence: 1,
        ..SimConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct AuditRun {
    pub report: AuditReport,
    /// One ledger per time step, coarsest first.
    pub ledgers: Vec<EnergyLedger>,
}

impl AuditRun {
    /// `R(dt) / R(dt/2)` for the first pair.
    pub fn shrink_ratio(&self) -> f64 {
        self.report.residuals[0] / self.report.residuals[1]
    }

    pub fn passed(&self, tolerance: f64, min_ratio: f64) -> bool {
        self.report.residuals[0] < tolerance && self.shrink_ratio() >= min_ratio
    }
}

/// Runs `cfg` at `dt, dt/2, …, dt/2^halvings`, keeping ledger rows at the
/// same physical times.
pub fn run_energy_audit(cfg: &SimConfig, halvings: usize) -> Result<AuditRun> {
    if halvings == 0 {
        return Err(Error::config("an audit needs at least one halving"));
    }
    if !cfg.record_energy {
        return Err(Error::config("an audit needs record_energy = on"));
    }
    cfg.validate()?;
    let ctx = context_for(cfg)?;
    let v0 = default_initial(&cfg.grid);
    let mut dts = Vec::new();
    let mut residuals = Vec::new();
    let mut ledgers = Vec::new();
    for h in 0..=halvings {
        let scale = 1usize << h;
        let run = SimConfig {
            dt: cfg.dt / scale as f64,
            cadence: cfg.cadence * scale,
            ..cfg.clone()
        };
        let traj = evolve_with(&run, &ctx, &v0)?;
        dts.push(run.dt);
        residuals.push(traj.ledger.audit_residual());
        ledgers.push(traj.ledger);
    }
    Ok(AuditRun {
        report: AuditReport::from_runs(dts, residuals),
        ledgers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_missing_halving_or_ledger() {
        let cfg = audit_config();
        assert!(run_energy_audit(&cfg, 0).is_err());
        let quiet = SimConfig { record_energy: false, ..cfg };
        assert!(run_energy_audit(&quiet, 1).is_err());
    }

    #[test]
    fn short_audit_shrinks_with_dt() {
        let cfg = SimConfig {
            dt: 4e-3,
            t_final: 0.1,
            ..audit_config()
        };
        let run = run_energy_audit(&cfg, 1).unwrap();
        assert_eq!(run.ledgers.len(), 2);
        assert_eq!(run.ledgers[0].rows.len(), run.ledgers[1].rows.len());
        assert!(run.shrink_ratio() > 1.0, "{:?}", run.report);
    }
}
