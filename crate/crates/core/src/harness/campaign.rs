//! Monte Carlo campaigns over the noise objects.

use std::path::Path;
use std::time::Instant;

use super::manifest::RunManifest;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::noise::{verify_stochastic_bounds, StochasticConfig, StochasticReport};

/// Runs the stochastic checks; with `out_dir`, writes the report and appends
/// a manifest entry.
pub fn run_stochastic_campaign(grid: &GridSpec, cfg: &StochasticConfig, out_dir: Option<&Path>) -> Result<StochasticReport> {
    if cfg.realizations == 0 {
        return Err(Error::Statistics("a campaign needs at least one realization".into()));
    }
    let start = Instant::now();
    let report = verify_stochastic_bounds(grid, cfg)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("stochastic.txt"), report.to_text())?;
        let echo = format!(
            "grid_n = {}\nbox_L = {}\neps_list = {:?}\nrealizations = {}\nseed = {}\nr = {}\ndelta = {}\nalpha = {}\na = {}\n",
            grid.n(),
            grid.box_length(),
            cfg.eps_list,
            cfg.realizations,
            cfg.seed,
            cfg.r,
            cfg.delta,
            cfg.alpha,
            cfg.a
        );
        let mut m = RunManifest::new("stochastic-bounds", &echo);
        m.seeds.push(("master".into(), cfg.seed, 0));
        m.add_file(dir, "stochastic.txt")?;
        m.wall_clock_s = start.elapsed().as_secs_f64();
        m.append(dir)?;
    }
    Ok(report)
}
