//! Conserved and dissipated functionals of the gauged equation
//!
//! ```text
//! i ∂t v = Δv − 2∇A·∇v + V v − λ e^{−pA} v |v|^p
//! ```
//!
//! with time-independent `A = Y_ε`, `V = Ṽ_ε`: the weighted mass, the
//! weighted `H^1` energy and the modified energy `E = ∫|Δv|^2 e^{−2A} + F − λG`
//! whose time derivative is `−λH`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gauge::GaugeContext;
use crate::grid::{Domain, Field};
use crate::lp::{norm, NormSpec};

/// Relative floor inside `|v|^{p−2}` and `|v|^{p−4}`: `(|v|^2 + floor)`,
/// `floor = FLOOR_REL · max|v|^2`.
pub const FLOOR_REL: f64 = 1e-14;

/// Time-independent coefficient fields shared by every functional.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub v: Vec<f64>,
    /// `e^{−2A}`
    pub e2: Vec<f64>,
    /// `e^{−(p+2)A}`
    pub ep2: Vec<f64>,
    pub p: f64,
    pub cell: f64,
}

impl Coefficients {
    pub fn from_context(ctx: &GaugeContext) -> Self {
        let b = &ctx.bundle;
        Coefficients {
            a1: b.grad_y_eps.0.real_parts(),
            a2: b.grad_y_eps.1.real_parts(),
            v: b.v_tilde.real_parts(),
            e2: ctx.exp_neg.iter().map(|e| e * e).collect(),
            ep2: ctx.exp_neg_p.iter().zip(&ctx.exp_neg).map(|(ep, e)| ep * e * e).collect(),
            p: ctx.p,
            cell: ctx.grid().cell_area(),
        }
    }
}

fn physical(f: &Field, what: &str) -> Result<()> {
    if f.domain() != Domain::Physical {
        return Err(Error::usage(format!("{what} must be a physical field")));
    }
    Ok(())
}

/// `∫ |v|^2 e^{−2A}`.
pub fn mass(v: &Field, ctx: &GaugeContext) -> Result<f64> {
    ctx.grid().check_same(v.grid())?;
    physical(v, "v")?;
    let e = &ctx.exp_neg;
    Ok(v.values().iter().zip(e).map(|(z, e)| z.norm_sqr() * e * e).sum::<f64>() * ctx.grid().cell_area())
}

/// `∫ ½|∇v|^2 e^{−2A} − ½|v|^2 V e^{−2A} + λ/(p+2) |v|^{p+2} e^{−(p+2)A}`.
pub fn h1_energy(v: &Field, ctx: &GaugeContext, lambda: f64, p: f64) -> Result<f64> {
    ctx.grid().check_same(v.grid())?;
    physical(v, "v")?;
    let c = Coefficients::from_context(ctx);
    let (g1, g2) = v.gradient();
    let mut acc = 0.0;
    for i in 0..v.values().len() {
        let z = v.values()[i];
        let m2 = z.norm_sqr();
        let grad2 = g1.values()[i].norm_sqr() + g2.values()[i].norm_sqr();
        let ep2 = c.e2[i] * (-p * ctx.bundle.y_eps.values()[i].re).exp();
        acc += 0.5 * grad2 * c.e2[i] - 0.5 * m2 * c.v[i] * c.e2[i] + lambda / (p + 2.0) * m2.powf(0.5 * (p + 2.0)) * ep2;
    }
    Ok(acc * c.cell)
}

/// One sampled time of the energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LedgerRow {
    pub time: f64,
    pub mass: f64,
    pub h1_energy: f64,
    pub modified_energy: f64,
    /// `∫|Δv|^2 e^{−2A}`
    pub laplacian_term: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    /// Trapezoidal `∫_0^t H dτ`.
    pub h_integral: f64,
    pub f_terms: [f64; 5],
    pub g_terms: [f64; 5],
    pub h_terms: [f64; 4],
}

/// Evaluates every term of `E`, `F`, `G`, `H` at `v` with time derivative `dv`.
pub fn modified_energy(v: &Field, dv: &Field, ctx: &GaugeContext, lambda: f64, p: f64) -> Result<LedgerRow> {
    ctx.grid().check_same(v.grid())?;
    ctx.grid().check_same(dv.grid())?;
    physical(v, "v")?;
    physical(dv, "∂t v")?;
    let c = Coefficients::from_context(ctx);
    let ep2: Vec<f64> = if p == ctx.p {
        c.ep2.clone()
    } else {
        ctx.bundle.y_eps.values().iter().zip(&c.e2).map(|(y, e2)| e2 * (-p * y.re).exp()).collect()
    };
    let (g1, g2) = v.gradient();
    let lap = v.laplacian();
    let vs = v.values();
    let ts = dv.values();
    let max2 = vs.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    // A zero field gets a unit floor; every term carrying it is multiplied by zero.
    let floor = if max2 > 0.0 { FLOOR_REL * max2 } else { 1.0 };

    let mut f = [0.0; 5];
    let mut g = [0.0; 5];
    let mut h = [0.0; 4];
    let mut lap_term = 0.0;
    for i in 0..vs.len() {
        let z = vs[i];
        let dz = ts[i];
        let (d1, d2) = (g1.values()[i], g2.values()[i]);
        let lz = lap.values()[i];
        let (a1, a2) = (c.a1[i], c.a2[i]);
        let pot = c.v[i];
        let e2 = c.e2[i];
        let ep = ep2[i];

        let m2 = z.norm_sqr();
        let r2 = m2 + floor;
        let abs_p = m2.powf(0.5 * p);
        let grad2 = d1.norm_sqr() + d2.norm_sqr();
        // ∇A·∇v and its conjugate pairing
        let a_dot = d1 * a1 + d2 * a2;
        let a_dot_bar = a_dot.conj();
        // ∇(e^{−2A}) = −2∇A e^{−2A}
        let (ge1, ge2) = (-2.0 * a1 * e2, -2.0 * a2 * e2);
        // ∇|v|^2 = 2 Re(v̄ ∇v)
        let (gm1, gm2) = (2.0 * (z.conj() * d1).re, 2.0 * (z.conj() * d2).re);
        let gm_sq = gm1 * gm1 + gm2 * gm2;
        // ∇|v|^p = (p/2) |v|^{p−2} ∇|v|^2
        let s_pm2 = r2.powf(0.5 * (p - 2.0));
        let (gp1, gp2) = (0.5 * p * s_pm2 * gm1, 0.5 * p * s_pm2 * gm2);
        // ∂t|v|^2 = 2 Re(v̄ ∂t v)
        let dm2 = 2.0 * (z.conj() * dz).re;
        let dt_abs_p = 0.5 * p * s_pm2 * dm2;
        let dt_abs_pm2 = 0.5 * (p - 2.0) * r2.powf(0.5 * (p - 4.0)) * dm2;
        let dt_vabs = dz * abs_p + z * dt_abs_p;

        lap_term += lz.norm_sqr() * e2;

        f[0] += -4.0 * (lz * a_dot_bar).re * e2;
        f[1] += 4.0 * a_dot.norm_sqr() * e2;
        f[2] += 2.0 * (z * pot * (d1.conj() * ge1 + d2.conj() * ge2)).re;
        f[3] += 2.0 * (lz * z.conj()).re * pot * e2;
        f[4] += m2 * pot * pot * e2;

        g[0] += -grad2 * abs_p * ep;
        g[1] += -2.0 * (z * (d1.conj() * gp1 + d2.conj() * gp2)).re * ep;
        g[2] += 0.25 * p * gm_sq * s_pm2 * ep;
        g[3] += 2.0 / (p + 2.0) * m2 * abs_p * pot * ep;
        g[4] += 2.0 * p * (z * abs_p * a_dot_bar).re * ep;

        h[0] += -grad2 * dt_abs_p * ep;
        h[1] += -2.0 * (dz * (d1.conj() * gp1 + d2.conj() * gp2)).re * ep;
        h[2] += -0.25 * p * gm_sq * dt_abs_pm2 * ep;
        h[3] += 2.0 * p * (dt_vabs * a_dot_bar).re * ep;
    }
    let cell = c.cell;
    for x in f.iter_mut().chain(g.iter_mut()).chain(h.iter_mut()) {
        *x *= cell;
    }
    lap_term *= cell;
    let fs: f64 = f.iter().sum();
    let gs: f64 = g.iter().sum();
    let hs: f64 = h.iter().sum();
    Ok(LedgerRow {
        time: 0.0,
        mass: mass(v, ctx)?,
        h1_energy: h1_energy(v, ctx, lambda, p)?,
        modified_energy: lap_term + fs - lambda * gs,
        laplacian_term: lap_term,
        f: fs,
        g: gs,
        h: hs,
        h_integral: 0.0,
        f_terms: f,
        g_terms: g,
        h_terms: h,
    })
}

/// Time series of [`LedgerRow`]s.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub lambda: f64,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn new(lambda: f64) -> Self {
        EnergyLedger { lambda, rows: Vec::new() }
    }

    /// Appends a row at `time`, accumulating `∫H` by the trapezoid rule.
    pub fn push(&mut self, time: f64, mut row: LedgerRow) -> Result<()> {
        row.time = time;
        row.h_integral = match self.rows.last() {
            None => 0.0,
            Some(prev) => {
                if !(time > prev.time) {
                    return Err(Error::usage(format!("ledger times must increase: {} then {time}", prev.time)));
                }
                prev.h_integral + 0.5 * (time - prev.time) * (prev.h + row.h)
            }
        };
        self.rows.push(row);
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "time,mass,h1_energy,modified_energy,laplacian_term,F,G,H,H_integral";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.time, r.mass, r.h1_energy, r.modified_energy, r.laplacian_term, r.f, r.g, r.h, r.h_integral
            )
            .unwrap();
        }
        s
    }

    /// `max_t |R(t)| / max(|E(0)|, 1)` with `R(t) = E(t) − E(0) + λ∫_0^t H`.
    pub fn audit_residual(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let e0 = first.modified_energy;
        let scale = e0.abs().max(1.0);
        self.rows
            .iter()
            .map(|r| (r.modified_energy - e0 + self.lambda * r.h_integral).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest relative drift of the mass column.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.rows.iter().map(|r| r.mass))
    }

    pub fn h1_drift(&self) -> f64 {
        relative_drift(self.rows.iter().map(|r| r.h1_energy))
    }
}

fn relative_drift(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let Some(&x0) = xs.first() else { return 0.0 };
    let scale = x0.abs().max(f64::MIN_POSITIVE);
    xs.iter().map(|x| (x - x0).abs() / scale).fold(0.0, f64::max)
}

/// Result of auditing the modified-energy identity at a sequence of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub dts: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log2(R(dt) / R(dt/2))` for consecutive entries.
    pub orders: Vec<f64>,
}

impl AuditReport {
    pub fn from_runs(dts: Vec<f64>, residuals: Vec<f64>) -> Self {
        let orders = residuals
            .windows(2)
            .zip(dts.windows(2))
            .map(|(r, d)| (r[0] / r[1]).ln() / (d[0] / d[1]).ln())
            .collect();
        AuditReport { dts, residuals, orders }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("[energy_audit]\ndt,normalized_residual\n");
        for (d, r) in self.dts.iter().zip(&self.residuals) {
            writeln!(s, "{d:e},{r:.10e}").unwrap();
        }
        for (i, o) in self.orders.iter().enumerate() {
            writeln!(s, "order_{i} = {o:.4}").unwrap();
        }
        s
    }
}

/// Residual of `E(t) − E(0) + λ∫H` along a recorded ledger.
pub fn energy_audit(ledger: &EnergyLedger) -> f64 {
    ledger.audit_residual()
}

/// Norms of `v` for each requested spec, in order.
pub fn weighted_diagnostics(v: &Field, specs: &[NormSpec]) -> Result<Vec<f64>> {
    specs.iter().map(|s| norm(v, s)).collect()
}

/// Default diagnostic specs: `H^2_{−δ}` and `H^{s}_{δ̄}` with `δ = 0.25`,
/// `s = 1.5`, `δ̄ = 0.1`.
pub fn default_diagnostic_specs() -> Vec<NormSpec> {
    vec![NormSpec::hs(2.0, -0.25), NormSpec::hs(1.5, 0.1)]
}

/// Least-squares slope of `log y` against `log x`; the growth exponent of
/// `y ~ x^C`.
pub fn fitted_log_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    crate::harness::linear_fit(&lx, &ly).0
}

/// `v` with `∂t v` zero, for evaluating the static parts of a row.
pub fn static_row(v: &Field, ctx: &GaugeContext, lambda: f64, p: f64) -> Result<LedgerRow> {
    let zero = Field::zeros(*v.grid(), Domain::Physical);
    modified_energy(v, &zero, ctx, lambda, p)
}
