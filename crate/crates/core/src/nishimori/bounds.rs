//! Finite-volume instances of the long-range-order, magnetization and
//! susceptibility bounds, reported with every intermediate step of the
//! inequality chain.

use serde::{Deserialize, Serialize};

use crate::disorder::{Ensemble, Method};
use crate::error::{Error, Result};
use crate::gibbs::Rotated;
use crate::operators::{z_diagonal, Observable};

use super::{map_samples, method_of, weighted_means, Scenario};

/// Relation of a chain step to the step before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Start,
    Eq,
    Le,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub label: String,
    pub value: f64,
    pub relation: Relation,
}

/// `quantity ≤ bound`, with a signed margin. Violations are reported, not
/// raised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub quantity: f64,
    pub bound: f64,
    pub margin: f64,
    pub chain: Vec<ChainStep>,
    pub method: Method,
    pub n: usize,
    pub context: String,
    /// Negative classical averages clamped to zero before a square root.
    pub clamped: usize,
}

impl BoundReport {
    fn new(name: &str, chain: Vec<ChainStep>, method: Method, n: usize, context: String, clamped: usize) -> Self {
        let quantity = chain[0].value;
        let bound = chain[chain.len() - 1].value;
        Self {
            name: name.to_string(),
            quantity,
            bound,
            margin: bound - quantity,
            chain,
            method,
            n,
            context,
            clamped,
        }
    }

    /// Largest violation over the chain: `prev - cur` for `≤` steps and
    /// `|prev - cur|` for equalities. Non-positive when every step holds.
    pub fn chain_violation(&self) -> f64 {
        self.chain
            .windows(2)
            .map(|w| match w[1].relation {
                Relation::Le => w[0].value - w[1].value,
                Relation::Eq => (w[0].value - w[1].value).abs(),
                Relation::Start => 0.0,
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn step(label: &str, value: f64, relation: Relation) -> ChainStep {
    ChainStep {
        label: label.to_string(),
        value,
        relation,
    }
}

/// Negative averages above this are roundoff of an exact zero and are
/// clamped silently.
const ROUNDOFF_FLOOR: f64 = -1e-12;

fn sqrt_clamped(x: f64, clamped: &mut usize) -> f64 {
    if x >= 0.0 {
        return x.sqrt();
    }
    if x < ROUNDOFF_FLOOR {
        *clamped += 1;
        log::warn!("negative disorder average {x:e} clamped to zero before square root");
    }
    0.0
}

fn require_even_glass(ens: &Ensemble, what: &str) -> Result<()> {
    if let Some(p) = ens.orders().into_iter().find(|&p| p != 1 && p % 2 == 1) {
        return Err(Error::Parameter(format!("{what} needs even orders besides p = 1, found p = {p}")));
    }
    Ok(())
}

fn require_no_field(ens: &Ensemble, what: &str) -> Result<()> {
    if !ens.is_inert(1) {
        return Err(Error::Parameter(format!("{what} needs mu_1 = delta_1 = 0")));
    }
    Ok(())
}

fn site_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)))
}

/// `E⟨o_1²⟩_β^h ≤ sqrt(E⟨(|Λ|⁻¹ Σ_i τ_i)²⟩_NM)` with its full chain.
pub fn long_range_order_bound(scn: &Scenario) -> Result<BoundReport> {
    require_no_field(&scn.ensemble, "long-range-order bound")?;
    require_even_glass(&scn.ensemble, "long-range-order bound")?;
    let nm = scn.nishimori_point()?;
    let source = scn.source()?;
    let n = scn.n_sites();
    let rows = map_samples(&source, |s| {
        let h = scn.hamiltonian(&s.couplings)?;
        let sg = scn.gibbs(&h)?;
        let cl = scn.classical(&s.couplings, &nm)?;
        let mut out = Vec::with_capacity(6 * n * n);
        for (i, j) in site_pairs(n) {
            let mask = (1 << i) ^ (1 << j);
            let a = sg.expectation(&Observable::Diagonal(z_diagonal(n, mask)))?;
            let c = cl.correlator_mask(mask);
            out.extend([a, a * c, a.abs() * c.abs(), c.abs(), c * c, c]);
        }
        Ok(out)
    })?;
    let m = weighted_means(&rows);
    let norm = 1.0 / (n * n) as f64;
    let sum_col = |k: usize| norm * (0..n * n).map(|p| m[6 * p + k]).sum::<f64>();
    let mut clamped = 0;
    let sqrt_terms = norm
        * (0..n * n)
            .map(|p| sqrt_clamped(m[6 * p + 4], &mut clamped))
            .sum::<f64>();
    let sq = sum_col(4);
    let lin = sum_col(5);
    let chain = vec![
        step("E<o_1^2>", sum_col(0), Relation::Start),
        step("|L|^-2 sum E<s_i s_j><t_i t_j>", sum_col(1), Relation::Eq),
        step("|L|^-2 sum E|<s_i s_j>||<t_i t_j>|", sum_col(2), Relation::Le),
        step("|L|^-2 sum E|<t_i t_j>|", sum_col(3), Relation::Le),
        step("|L|^-2 sum sqrt(E<t_i t_j>^2)", sqrt_terms, Relation::Le),
        step("sqrt(|L|^-2 sum E<t_i t_j>^2)", sqrt_clamped(sq, &mut clamped), Relation::Le),
        step("sqrt(E<(|L|^-1 sum t_i)^2>)", sqrt_clamped(lin, &mut clamped), Relation::Eq),
    ];
    Ok(BoundReport::new(
        "long_range_order",
        chain,
        method_of(&source),
        source.len(),
        scn.describe(),
        clamped,
    ))
}

/// `E⟨o_1⟩_β^h ≤ sqrt(|Λ|⁻¹ Σ_i E⟨τ_i⟩_NM)` with its full chain.
pub fn magnetization_bound(scn: &Scenario) -> Result<BoundReport> {
    require_even_glass(&scn.ensemble, "magnetization bound")?;
    if scn.ensemble.mean(1).is_some_and(|m| m < 0.0) {
        return Err(Error::Parameter("magnetization bound needs a non-negative mean field".into()));
    }
    let nm = scn.nishimori_point()?;
    let source = scn.source()?;
    let n = scn.n_sites();
    let rows = map_samples(&source, |s| {
        let h = scn.hamiltonian(&s.couplings)?;
        let sg = scn.gibbs(&h)?;
        let cl = scn.classical(&s.couplings, &nm)?;
        let mut out = Vec::with_capacity(6 * n);
        for i in 0..n {
            let s1 = sg.expectation(&Observable::Diagonal(z_diagonal(n, 1 << i)))?;
            let t = cl.correlator_mask(1 << i);
            out.extend([s1, s1 * t, s1.abs() * t.abs(), t.abs(), t * t, t]);
        }
        Ok(out)
    })?;
    let m = weighted_means(&rows);
    let norm = 1.0 / n as f64;
    let col = |k: usize| norm * (0..n).map(|i| m[6 * i + k]).sum::<f64>();
    let mut clamped = 0;
    let sqrt_sq = norm * (0..n).map(|i| sqrt_clamped(m[6 * i + 4], &mut clamped)).sum::<f64>();
    let sqrt_lin = norm * (0..n).map(|i| sqrt_clamped(m[6 * i + 5], &mut clamped)).sum::<f64>();
    let chain = vec![
        step("E<o_1>", col(0), Relation::Start),
        step("|L|^-1 sum E<s_i><t_i>", col(1), Relation::Eq),
        step("|L|^-1 sum E|<s_i>||<t_i>|", col(2), Relation::Le),
        step("|L|^-1 sum E|<t_i>|", col(3), Relation::Le),
        step("|L|^-1 sum sqrt(E<t_i>^2)", sqrt_sq, Relation::Le),
        step("|L|^-1 sum sqrt(E<t_i>)", sqrt_lin, Relation::Eq),
        step("sqrt(|L|^-1 sum E<t_i>)", sqrt_clamped(col(5), &mut clamped), Relation::Le),
    ];
    Ok(BoundReport::new(
        "magnetization",
        chain,
        method_of(&source),
        source.len(),
        scn.describe(),
        clamped,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityReport {
    /// Chain from `m_L'(0)` to `(2β/|Λ|) Σ_ij sqrt(E⟨τ_iτ_j⟩_NM)`.
    pub bound: BoundReport,
    /// Central difference of `m_L(μ_1)` at zero.
    pub finite_difference: f64,
    pub step: f64,
    /// `(1/|Λ|) Σ_ij sqrt(E⟨τ_iτ_j⟩_NM)`.
    pub c_l: f64,
    /// Largest `|(σ_i; σ_j)|` over every sample and pair.
    pub max_abs_truncated: f64,
}

impl SusceptibilityReport {
    pub fn fd_relative_error(&self) -> f64 {
        let q = self.bound.quantity;
        (self.finite_difference - q).abs() / q.abs().max(f64::MIN_POSITIVE)
    }
}

/// Step for the finite-difference cross-check of `m_L'(0)`.
pub const SUSCEPTIBILITY_FD_STEP: f64 = 1e-5;

fn site_ops(n: usize) -> Vec<Observable> {
    (0..n).map(|i| Observable::Diagonal(z_diagonal(n, 1 << i))).collect()
}

fn magnetization_op(n: usize) -> Observable {
    let dim = 1usize << n;
    Observable::Diagonal(
        (0..dim)
            .map(|b| (n as i64 - 2 * b.count_ones() as i64) as f64)
            .collect(),
    )
}

/// `m_L'(0) = (β/|Λ|) Σ_ij E(σ_i; σ_j)` bounded by
/// `(2β/|Λ|) Σ_ij sqrt(E⟨τ_iτ_j⟩_NM)`, plus the finite-volume constant
/// `C_L` and a finite-difference cross-check of `m_L'(0)`.
pub fn susceptibility_bound(scn: &Scenario) -> Result<SusceptibilityReport> {
    require_no_field(&scn.ensemble, "susceptibility bound")?;
    require_even_glass(&scn.ensemble, "susceptibility bound")?;
    let nm = scn.nishimori_point()?;
    let source = scn.source()?;
    let n = scn.n_sites();
    let beta = scn.beta;
    let eps = SUSCEPTIBILITY_FD_STEP;
    let ops = site_ops(n);
    let mag = magnetization_op(n);
    let rows = map_samples(&source, |s| {
        let h = scn.hamiltonian(&s.couplings)?;
        let sg = scn.gibbs(&h)?;
        let cl = scn.classical(&s.couplings, &nm)?;
        let rot: Vec<Rotated> = ops.iter().map(|o| sg.rotate(o)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(5 * n * n + 3);
        let mut worst: f64 = 0.0;
        for (i, j) in site_pairs(n) {
            let chi = sg.truncated_rotated(&rot[i], &rot[j]);
            let c = cl.correlator_mask((1 << i) ^ (1 << j));
            worst = worst.max(chi.abs());
            out.extend([chi, chi * c, chi.abs() * c.abs(), c.abs(), c * c, c]);
        }
        let plus = scn.gibbs(&h.with_longitudinal_field(eps))?.expectation(&mag)?;
        let minus = scn.gibbs(&h.with_longitudinal_field(-eps))?.expectation(&mag)?;
        out.push((plus - minus) / (2.0 * eps * n as f64));
        out.push(worst);
        Ok(out)
    })?;
    let m = weighted_means(&rows);
    let pairs = n * n;
    let col = |k: usize| (0..pairs).map(|p| m[6 * p + k]).sum::<f64>();
    let mut clamped = 0;
    let sqrt_sq: f64 = (0..pairs).map(|p| sqrt_clamped(m[6 * p + 4], &mut clamped)).sum();
    let sqrt_lin: f64 = (0..pairs).map(|p| sqrt_clamped(m[6 * p + 5], &mut clamped)).sum();
    let scale = beta / n as f64;
    let chain = vec![
        step("m_L'(0)", scale * col(0), Relation::Start),
        step("(b/|L|) sum E(s_i;s_j)<t_i t_j>", scale * col(1), Relation::Eq),
        step("(b/|L|) sum E|(s_i;s_j)||<t_i t_j>|", scale * col(2), Relation::Le),
        step("(2b/|L|) sum E|<t_i t_j>|", 2.0 * scale * col(3), Relation::Le),
        step("(2b/|L|) sum sqrt(E<t_i t_j>^2)", 2.0 * scale * sqrt_sq, Relation::Le),
        step("(2b/|L|) sum sqrt(E<t_i t_j>)", 2.0 * scale * sqrt_lin, Relation::Eq),
    ];
    let max_abs_truncated = rows
        .iter()
        .map(|(_, r)| r[r.len() - 1])
        .fold(0.0, f64::max);
    Ok(SusceptibilityReport {
        bound: BoundReport::new(
            "susceptibility",
            chain,
            method_of(&source),
            source.len(),
            scn.describe(),
            clamped,
        ),
        finite_difference: m[6 * pairs],
        step: eps,
        c_l: sqrt_lin / n as f64,
        max_abs_truncated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldProbeRow {
    pub mu1: f64,
    /// `m_L(μ_1) = E⟨o_1⟩`.
    pub magnetization: f64,
    /// `m_L'(μ_1)`.
    pub susceptibility: f64,
    /// `m_L'(0)`, repeated on every row for comparison.
    pub susceptibility_zero: f64,
}

/// Exploratory report of `m_L'(μ_1)` against `m_L'(0)` for a deterministic
/// longitudinal field `μ_1` (`Δ_1 = 0`). Nothing is asserted.
pub fn field_probe(scn: &Scenario, mu1_grid: &[f64]) -> Result<Vec<FieldProbeRow>> {
    require_no_field(&scn.ensemble, "field probe")?;
    let source = scn.source()?;
    let n = scn.n_sites();
    let mag = magnetization_op(n);
    let mut grid = vec![0.0];
    grid.extend_from_slice(mu1_grid);
    let rows = map_samples(&source, |s| {
        let h = scn.hamiltonian(&s.couplings)?;
        let mut out = Vec::with_capacity(2 * grid.len());
        for &mu in &grid {
            let sg = scn.gibbs(&h.with_longitudinal_field(mu))?;
            let rm = sg.rotate(&mag)?;
            out.push(sg.expectation_rotated(&rm) / n as f64);
            out.push(scn.beta / n as f64 * sg.truncated_rotated(&rm, &rm));
        }
        Ok(out)
    })?;
    let m = weighted_means(&rows);
    let zero = m[1];
    Ok(mu1_grid
        .iter()
        .enumerate()
        .map(|(k, &mu1)| FieldProbeRow {
            mu1,
            magnetization: m[2 * (k + 1)],
            susceptibility: m[2 * (k + 1) + 1],
            susceptibility_zero: zero,
        })
        .collect())
}
