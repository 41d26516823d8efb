use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::disorder::{jackknife_mean, DisorderAverage, Method};
use crate::error::Result;
use crate::gibbs::Rotated;
use crate::lattice::Bond;
use crate::operators::{z_diagonal, Observable};

use super::{map_samples, method_of, Scenario};

/// Relative size below which a Monte Carlo difference counts as zero.
const ROUNDOFF_SCALE: f64 = 1e-12;

/// One disorder-averaged identity `E[lhs] = E[rhs]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub observable: String,
    pub lhs: DisorderAverage,
    pub rhs: DisorderAverage,
    /// `lhs - rhs`.
    pub diff: f64,
    /// `|diff|` over its jackknife error for Monte Carlo; `|diff|` itself
    /// for exact methods.
    pub sigmas: f64,
    pub on_manifold: bool,
}

impl IdentityReport {
    /// Exact methods compare `|diff|` with `tol`; Monte Carlo compares
    /// `sigmas` with `max_sigmas`.
    pub fn within(&self, tol: f64, max_sigmas: f64) -> bool {
        if self.lhs.method == Method::Mc {
            self.sigmas <= max_sigmas
        } else {
            self.diff.abs() <= tol
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    OnePoint,
    TwoPointProduct,
    TwoPointJoint,
    Duhamel,
    TruncatedDuhamel,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::OnePoint => "one_point",
            Kind::TwoPointProduct => "two_point_product",
            Kind::TwoPointJoint => "two_point_joint",
            Kind::Duhamel => "duhamel",
            Kind::TruncatedDuhamel => "truncated_duhamel",
        }
    }

    fn needs_rotation(self) -> bool {
        matches!(self, Kind::Duhamel | Kind::TruncatedDuhamel)
    }
}

struct Check {
    kind: Kind,
    x: usize,
    y: usize,
}

/// Flattened list of every bond plus the checks over them.
struct Plan {
    bonds: Vec<Bond>,
    checks: Vec<Check>,
}

impl Plan {
    fn new(scn: &Scenario, kinds: &[Kind]) -> Self {
        let mut bonds = Vec::new();
        let mut groups = Vec::new();
        for fam in &scn.families {
            let start = bonds.len();
            bonds.extend(fam.bonds().iter().cloned());
            groups.push(start..bonds.len());
        }
        let mut checks = Vec::new();
        for &kind in kinds {
            for g in &groups {
                if kind == Kind::OnePoint {
                    checks.extend(g.clone().map(|x| Check { kind, x, y: x }));
                } else {
                    for x in g.clone() {
                        checks.extend((x..g.end).map(|y| Check { kind, x, y }));
                    }
                }
            }
        }
        Self { bonds, checks }
    }

    fn label(&self, c: &Check) -> String {
        if c.kind == Kind::OnePoint {
            format!("X={}", self.bonds[c.x])
        } else {
            format!("X={};Y={}", self.bonds[c.x], self.bonds[c.y])
        }
    }
}

fn reduce(identity: &str, observable: String, rows: &[(f64, f64, f64)], method: Method, on_manifold: bool) -> Result<IdentityReport> {
    let n = rows.len();
    if method == Method::Mc {
        let l: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let r: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.1 - r.2).collect();
        let (le, lerr) = jackknife_mean(&l)?;
        let (re, rerr) = jackknife_mean(&r)?;
        let (de, derr) = jackknife_mean(&d)?;
        // Pairs that agree sample by sample (X = Y) differ only by roundoff,
        // whose jackknife error is roundoff too; floor the error there.
        let floor = ROUNDOFF_SCALE * le.abs().max(re.abs()).max(1.0);
        let err = derr.max(floor);
        let sigmas = if de.abs() <= floor { 0.0 } else { de.abs() / err };
        return Ok(IdentityReport {
            identity: identity.to_string(),
            observable,
            lhs: DisorderAverage { estimate: le, error: lerr, method, n },
            rhs: DisorderAverage { estimate: re, error: rerr, method, n },
            diff: de,
            sigmas,
            on_manifold,
        });
    }
    let (l, r) = rows.iter().fold((0.0, 0.0), |acc, &(w, a, b)| (acc.0 + w * a, acc.1 + w * b));
    Ok(IdentityReport {
        identity: identity.to_string(),
        observable,
        lhs: DisorderAverage { estimate: l, error: 0.0, method, n },
        rhs: DisorderAverage { estimate: r, error: 0.0, method, n },
        diff: l - r,
        sigmas: (l - r).abs(),
        on_manifold,
    })
}

fn run(scn: &Scenario, kinds: &[Kind]) -> Result<Vec<IdentityReport>> {
    let nm = scn.nishimori_point()?;
    let source = scn.source()?;
    let plan = Plan::new(scn, kinds);
    let n = scn.n_sites();
    let needs_rotation = kinds.iter().any(|k| k.needs_rotation());

    let per_sample = map_samples(&source, |s| {
        let h = scn.hamiltonian(&s.couplings)?;
        let sg = scn.gibbs(&h)?;
        let cl = scn.classical(&s.couplings, &nm)?;
        let ops: Vec<Observable> = plan
            .bonds
            .iter()
            .map(|b| Observable::Diagonal(z_diagonal(n, b.mask())))
            .collect();
        let one: Vec<f64> = ops.iter().map(|o| sg.expectation(o)).collect::<Result<_>>()?;
        let rotated: Vec<Rotated> = if needs_rotation {
            ops.iter().map(|o| sg.rotate(o)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        plan.checks
            .iter()
            .map(|c| {
                let (bx, by) = (&plan.bonds[c.x], &plan.bonds[c.y]);
                let pair_mask = bx.mask() ^ by.mask();
                Ok(match c.kind {
                    Kind::OnePoint => {
                        let q = one[c.x];
                        (q, q * cl.correlator_mask(bx.mask()))
                    }
                    Kind::TwoPointProduct => {
                        let q = one[c.x] * one[c.y];
                        (q, q * cl.correlator_mask(pair_mask))
                    }
                    Kind::TwoPointJoint => {
                        let q = sg.expectation(&Observable::Diagonal(z_diagonal(n, pair_mask)))?;
                        (q, q * cl.correlator_mask(pair_mask))
                    }
                    Kind::Duhamel => {
                        let q = sg.duhamel_rotated(&rotated[c.x], &rotated[c.y]);
                        (q, q * cl.correlator_mask(pair_mask))
                    }
                    Kind::TruncatedDuhamel => {
                        let q = sg.truncated_rotated(&rotated[c.x], &rotated[c.y]);
                        (q, q * cl.correlator_mask(pair_mask))
                    }
                })
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    })?;

    let method = method_of(&source);
    plan.checks
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let rows: Vec<(f64, f64, f64)> = per_sample.iter().map(|(w, v)| (*w, v[k].0, v[k].1)).collect();
            reduce(c.kind.name(), plan.label(c), &rows, method, scn.on_manifold())
        })
        .collect()
}

/// `E⟨σ^z_X⟩ = E⟨σ^z_X⟩⟨τ_X⟩_NM` for every bond `X`.
pub fn verify_one_point(scn: &Scenario) -> Result<Vec<IdentityReport>> {
    run(scn, &[Kind::OnePoint])
}

/// Product and joint two-point identities for every bond pair within a family.
pub fn verify_two_point(scn: &Scenario) -> Result<Vec<IdentityReport>> {
    run(scn, &[Kind::TwoPointProduct, Kind::TwoPointJoint])
}

/// Plain and truncated Duhamel identities for every bond pair within a family.
pub fn verify_duhamel_identity(scn: &Scenario) -> Result<Vec<IdentityReport>> {
    run(scn, &[Kind::Duhamel, Kind::TruncatedDuhamel])
}

/// All one-point, two-point and Duhamel identities from one pass over the
/// disorder.
pub fn verify_identities(scn: &Scenario) -> Result<Vec<IdentityReport>> {
    run(
        scn,
        &[
            Kind::OnePoint,
            Kind::TwoPointProduct,
            Kind::TwoPointJoint,
            Kind::Duhamel,
            Kind::TruncatedDuhamel,
        ],
    )
}

/// Classical moment identity `E⟨τ_X τ_Y⟩² = E⟨τ_X τ_Y⟩` over distinct bond
/// pairs within each family and all distinct site pairs.
pub fn verify_nm_moment(scn: &Scenario) -> Result<Vec<IdentityReport>> {
    let nm = scn.nishimori_point()?;
    let source = scn.source()?;
    let mut seen = BTreeSet::new();
    let mut pairs: Vec<(String, usize)> = Vec::new();
    for fam in &scn.families {
        for (a, x) in fam.bonds().iter().enumerate() {
            for y in &fam.bonds()[a + 1..] {
                let label = format!("X={x};Y={y}");
                if seen.insert(label.clone()) {
                    pairs.push((label, x.mask() ^ y.mask()));
                }
            }
        }
    }
    let n = scn.n_sites();
    for i in 0..n {
        for j in i + 1..n {
            let label = format!("X={{{i}}};Y={{{j}}}");
            if seen.insert(label.clone()) {
                pairs.push((label, (1 << i) | (1 << j)));
            }
        }
    }
    let per_sample = map_samples(&source, |s| {
        let cl = scn.classical(&s.couplings, &nm)?;
        Ok(pairs.iter().map(|(_, m)| cl.correlator_mask(*m)).collect::<Vec<f64>>())
    })?;
    let method = method_of(&source);
    pairs
        .iter()
        .enumerate()
        .map(|(k, (label, _))| {
            let rows: Vec<(f64, f64, f64)> = per_sample
                .iter()
                .map(|(w, v)| (*w, v[k] * v[k], v[k]))
                .collect();
            reduce("nm_moment", label.clone(), &rows, method, scn.on_manifold())
        })
        .collect()
}
