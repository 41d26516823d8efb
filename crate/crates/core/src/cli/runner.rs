//! Subcommand dispatch. Every subcommand turns a config into report rows;
//! rows come out in a fixed order so output depends only on (config, seed).

use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepSuite, Tolerances};
use super::report::{Report, ReportRow};
use crate::disorder::{sample_couplings, sample_rng, Method};
use crate::error::{Error, Result};
use crate::gauge::{check_hamiltonian_invariance, gauge_transform_couplings, GaugeConfig};
use crate::nishimori::{
    field_probe, long_range_order_bound, magnetization_bound, susceptibility_bound, verify_identities, verify_nm_moment,
    BoundReport, IdentityReport, Relation, Scenario,
};
use crate::operators::{z_diagonal, Observable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyGauge,
    VerifyIdentities,
    Bounds,
    Susceptibility,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyGauge => "verify-gauge",
            Command::VerifyIdentities => "verify-identities",
            Command::Bounds => "bounds",
            Command::Susceptibility => "susceptibility",
            Command::Sweep => "sweep",
        }
    }
}

/// Runs `cmd` on a dedicated pool of `threads` workers (all cores when
/// `None`) and wraps the rows in a report carrying the resolved config.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Report> {
    let resolved = cfg.resolved()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))?;
    let rows = pool.install(|| run(cmd, &resolved))?;
    Ok(Report::new(cmd.name(), resolved, rows))
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    match cmd {
        Command::VerifyGauge => timed(cfg, verify_gauge),
        Command::VerifyIdentities => timed(cfg, identities),
        Command::Bounds => timed(cfg, bounds),
        Command::Susceptibility => timed(cfg, susceptibility),
        Command::Sweep => sweep(cfg),
    }
}

fn timed(cfg: &ExperimentConfig, f: fn(&ExperimentConfig) -> Result<Vec<ReportRow>>) -> Result<Vec<ReportRow>> {
    let start = Instant::now();
    let mut rows = f(cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    for r in &mut rows {
        r.seed = cfg.seed;
        r.wall_time = elapsed;
    }
    Ok(rows)
}

fn verify_gauge(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let scn = cfg.scenario()?;
    let tol = cfg.tolerances.gauge;
    let n = scn.n_sites();
    let params = scn.describe();
    let bonds: Vec<usize> = scn
        .families
        .iter()
        .flat_map(|f| f.bonds().iter().map(|b| b.mask()))
        .collect();
    let per_sample = (0..cfg.gauge.samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = sample_rng(cfg.seed, i as u64);
            let j = sample_couplings(&scn.ensemble, &scn.families, &mut rng)?;
            let tau = GaugeConfig::random(n, &mut rng);
            let inv = check_hamiltonian_invariance(&scn.lattice, &scn.families, &j, &tau, scn.field, scn.beta)?;
            let jt = gauge_transform_couplings(&scn.families, &j, &tau);
            let sg = scn.gibbs(&scn.hamiltonian(&j)?)?;
            let sgt = scn.gibbs(&scn.hamiltonian(&jt)?)?;
            let mut transport: f64 = 0.0;
            for &m in &bonds {
                let op = Observable::Diagonal(z_diagonal(n, m));
                let sign = crate::operators::z_sign(tau.mask(), m);
                transport = transport.max((sgt.expectation(&op)? - sign * sg.expectation(&op)?).abs());
            }
            Ok((inv.max(), transport))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(2 * per_sample.len());
    for (i, (inv, transport)) in per_sample.into_iter().enumerate() {
        for (name, v) in [("hamiltonian_invariance", inv), ("expectation_transport", transport)] {
            let mut r = ReportRow::new("verify-gauge", format!("{name}:sample={i}"), params.clone(), v);
            r.bound = Some(tol);
            r.margin = Some(tol - v);
            r.passed = v <= tol;
            r.method = "per-sample".into();
            rows.push(r);
        }
    }
    Ok(rows)
}

fn exact_tolerance(t: &Tolerances, method: Method) -> f64 {
    match method {
        Method::Enumeration => t.enumeration,
        Method::Quadrature { .. } => t.quadrature,
        Method::Mc => f64::INFINITY,
    }
}

fn identity_rows(reports: &[IdentityReport], tol_exact: f64, cfg: &ExperimentConfig, params: &str) -> Vec<ReportRow> {
    reports
        .iter()
        .map(|r| {
            let mut row = ReportRow::new(&r.identity, r.observable.clone(), params, r.lhs.estimate);
            row.error = r.lhs.error;
            row.reference = Some(r.rhs.estimate);
            row.sigmas = Some(r.sigmas);
            row.margin = Some(tol_exact - r.diff.abs());
            row.method = r.lhs.method.to_string();
            row.passed = r.within(tol_exact, cfg.tolerances.mc_sigmas);
            // Monte Carlo checks are judged in aggregate below; off-manifold
            // runs are controls.
            row.control = r.lhs.method == Method::Mc || !r.on_manifold;
            row
        })
        .collect()
}

fn mc_aggregate(rows: &[ReportRow], cfg: &ExperimentConfig, params: &str) -> Option<ReportRow> {
    let mc: Vec<&ReportRow> = rows.iter().filter(|r| r.method == Method::Mc.to_string()).collect();
    if mc.is_empty() {
        return None;
    }
    let frac = mc.iter().filter(|r| r.passed).count() as f64 / mc.len() as f64;
    let mut r = ReportRow::new("mc_pass_fraction", format!("checks={}", mc.len()), params, frac);
    r.bound = Some(cfg.tolerances.mc_pass_fraction);
    r.margin = Some(frac - cfg.tolerances.mc_pass_fraction);
    r.method = Method::Mc.to_string();
    r.passed = frac >= cfg.tolerances.mc_pass_fraction;
    r.control = cfg.classical_scale != 1.0;
    Some(r)
}

fn identities(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let scn = cfg.scenario()?;
    let params = scn.describe();
    let method = scn.method.tag();
    let mut rows = Vec::new();
    if scn.on_manifold() {
        rows.extend(identity_rows(
            &verify_identities(&scn)?,
            exact_tolerance(&cfg.tolerances, method),
            cfg,
            &params,
        ));
    }
    let moment_tol = match method {
        Method::Enumeration => cfg.tolerances.nm_moment,
        m => exact_tolerance(&cfg.tolerances, m),
    };
    rows.extend(identity_rows(&verify_nm_moment(&scn)?, moment_tol, cfg, &params));
    if let Some(agg) = mc_aggregate(&rows, cfg, &params) {
        rows.push(agg);
    }
    Ok(rows)
}

fn bound_rows(b: &BoundReport, tol: f64, params: &str) -> Vec<ReportRow> {
    let mc = b.method == Method::Mc;
    let violation = b.chain_violation();
    let mut head = ReportRow::new("bounds", b.name.clone(), params, b.quantity);
    head.bound = Some(b.bound);
    head.margin = Some(b.margin);
    head.method = b.method.to_string();
    head.passed = b.margin >= -tol && violation <= tol;
    // Monte Carlo noise can produce small violations; they are findings.
    head.control = mc;
    let mut rows = vec![head];
    for (k, s) in b.chain.iter().enumerate() {
        let step_violation = match s.relation {
            Relation::Start => 0.0,
            Relation::Eq => (b.chain[k - 1].value - s.value).abs(),
            Relation::Le => b.chain[k - 1].value - s.value,
        };
        let mut r = ReportRow::new("bounds_chain", format!("{}[{k}] {}", b.name, s.label), params, s.value);
        r.margin = Some(-step_violation);
        r.method = b.method.to_string();
        r.passed = step_violation <= tol;
        r.control = mc;
        rows.push(r);
    }
    if b.clamped > 0 {
        let mut r = ReportRow::new("bounds_clamped", b.name.clone(), params, b.clamped as f64);
        r.method = b.method.to_string();
        r.control = true;
        rows.push(r);
    }
    rows
}

fn is_parameter_error(e: &Error) -> bool {
    matches!(e, Error::Parameter(_))
}

fn bounds(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let scn = cfg.scenario()?;
    let params = scn.describe();
    let tol = cfg.tolerances.bound_margin;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (name, f) in [
        ("long_range_order", long_range_order_bound as fn(&Scenario) -> Result<BoundReport>),
        ("magnetization", magnetization_bound),
    ] {
        match f(&scn) {
            Ok(b) => rows.extend(bound_rows(&b, tol, &params)),
            Err(e) if is_parameter_error(&e) => {
                log::info!("{name} bound skipped: {e}");
                skipped.push(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::config("ensemble", skipped.join("; ")));
    }
    Ok(rows)
}

fn susceptibility(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let scn = cfg.scenario()?;
    let params = scn.describe();
    let t = &cfg.tolerances;
    let rep = susceptibility_bound(&scn).map_err(|e| match e {
        Error::Parameter(m) => Error::config("ensemble", m),
        e => e,
    })?;
    let method = rep.bound.method.to_string();
    let control = rep.bound.method == Method::Mc;
    let mut rows = bound_rows(&rep.bound, t.bound_margin, &params);

    let rel = rep.fd_relative_error();
    let mut fd = ReportRow::new("susceptibility", format!("finite_difference(step={})", rep.step), &params, rep.finite_difference);
    fd.reference = Some(rep.bound.quantity);
    fd.error = rel;
    fd.bound = Some(t.fd_relative);
    fd.margin = Some(t.fd_relative - rel);
    fd.passed = rel <= t.fd_relative;
    fd.method = method.clone();
    rows.push(fd);

    let mut c = ReportRow::new("susceptibility", "C_L", &params, rep.c_l);
    c.method = method.clone();
    c.control = control;
    rows.push(c);

    let mut chi = ReportRow::new("susceptibility", "max|(s_i;s_j)|", &params, rep.max_abs_truncated);
    chi.bound = Some(2.0);
    chi.margin = Some(2.0 - rep.max_abs_truncated);
    chi.passed = rep.max_abs_truncated <= 2.0 + t.bound_margin;
    chi.method = method.clone();
    rows.push(chi);

    if !cfg.sweep.mu1.is_empty() {
        for a in field_probe(&scn, &cfg.sweep.mu1)? {
            let mut r = ReportRow::new("field_probe", format!("mu1={}", a.mu1), &params, a.susceptibility);
            r.reference = Some(a.susceptibility_zero);
            r.bound = Some(a.magnetization);
            r.method = method.clone();
            r.control = true;
            rows.push(r);
        }
    }
    Ok(rows)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let s = &cfg.sweep;
    let betas = if s.beta.is_empty() { vec![cfg.beta()?] } else { s.beta.clone() };
    let hs = if s.h.is_empty() { vec![cfg.thermal.h] } else { s.h.clone() };
    let mu1s: Vec<Option<f64>> = if s.mu1.is_empty() {
        vec![None]
    } else {
        if !cfg.ensemble.orders().contains(&1) {
            return Err(Error::config("sweep.mu1", "ensemble has no p = 1 family"));
        }
        s.mu1.iter().copied().map(Some).collect()
    };
    let suite: fn(&ExperimentConfig) -> Result<Vec<ReportRow>> = match s.suite {
        SweepSuite::Identities => identities,
        SweepSuite::Bounds => bounds,
        SweepSuite::Susceptibility => susceptibility,
    };
    let mut rows = Vec::new();
    for &beta in &betas {
        for &h in &hs {
            for &mu1 in &mu1s {
                let mut point = cfg.clone();
                point.thermal.beta = beta;
                point.thermal.nishimori = false;
                point.thermal.h = h;
                point.sweep.mu1.clear();
                if let Some(mu) = mu1 {
                    point.ensemble = cfg.ensemble.with_mean(1, mu);
                }
                point.validate()?;
                let mut part = timed(&point, suite)?;
                if let Some(mu) = mu1 {
                    for r in &mut part {
                        r.parameters.push_str(&format!(";mu1={mu}"));
                    }
                }
                rows.extend(part);
            }
        }
    }
    Ok(rows)
}
