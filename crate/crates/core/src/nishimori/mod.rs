//! Disorder-averaged identities and correlation bounds on the Nishimori
//! manifold.
//!
//! Every check pairs the quantum Gibbs state at `(β, h)` with the classical
//! Ising model whose per-order inverse temperatures sit on the manifold,
//! both evaluated on the same coupling realization.

mod bounds;
mod identities;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{
    nishimori_point_with, CouplingSample, DeterministicField, DisorderBudget, DisorderMethod, DisorderSource, Ensemble,
    Method, NishimoriPoint, WeightedSample,
};
use crate::error::{Error, Result};
use crate::gibbs::{SpectralGibbs, DEFAULT_QUANTUM_CAP};
use crate::lattice::{BondFamily, Lattice};
use crate::operators::{assemble_hamiltonian, z_sign, Hamiltonian};

pub use bounds::{
    field_probe, long_range_order_bound, magnetization_bound, susceptibility_bound, FieldProbeRow, BoundReport, ChainStep,
    Relation, SusceptibilityReport,
};
pub use identities::{
    verify_duhamel_identity, verify_identities, verify_nm_moment, verify_one_point, verify_two_point, IdentityReport,
};

/// Default classical enumeration cap in spins.
pub const DEFAULT_CLASSICAL_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub quantum_spins: usize,
    pub classical_spins: usize,
    #[serde(flatten)]
    pub disorder: DisorderBudget,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            quantum_spins: DEFAULT_QUANTUM_CAP,
            classical_spins: DEFAULT_CLASSICAL_CAP,
            disorder: DisorderBudget::default(),
        }
    }
}

/// Normalized classical Boltzmann weights `∝ exp(Σ_p β_p Σ_X J^p_X τ_X)`
/// over all `2^N` spin configurations.
#[derive(Clone, Debug)]
pub struct ClassicalNMState {
    weights: Vec<f64>,
}

impl ClassicalNMState {
    pub fn new(lat: &Lattice, families: &[BondFamily], j: &CouplingSample, nm: &NishimoriPoint) -> Result<Self> {
        Self::with_cap(lat, families, j, nm, DEFAULT_CLASSICAL_CAP)
    }

    pub fn with_cap(
        lat: &Lattice,
        families: &[BondFamily],
        j: &CouplingSample,
        nm: &NishimoriPoint,
        cap: usize,
    ) -> Result<Self> {
        let n = lat.volume();
        if n > cap {
            return Err(Error::Budget {
                what: "classical spins",
                requested: n as u128,
                limit: cap as u128,
            });
        }
        if j.families() != families.len() {
            return Err(Error::MissingCoupling(format!(
                "{} families but couplings for {}",
                families.len(),
                j.families()
            )));
        }
        let mut terms = Vec::new();
        for (f, fam) in families.iter().enumerate() {
            let beta = nm
                .beta(fam.order())
                .ok_or_else(|| Error::Nishimori(format!("no β for order {}", fam.order())))?;
            for (bond, &v) in fam.bonds().iter().zip(j.family(f)) {
                let k = beta * v;
                if k != 0.0 {
                    terms.push((bond.mask(), k));
                }
            }
        }
        let log_w: Vec<f64> = (0..1usize << n)
            .map(|b| terms.iter().map(|&(m, k)| k * z_sign(b, m)).sum())
            .collect();
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨τ_X⟩` for the sites in `mask`.
    pub fn correlator_mask(&self, mask: usize) -> f64 {
        self.weights.iter().enumerate().map(|(b, w)| w * z_sign(b, mask)).sum()
    }

    pub fn correlator(&self, sites: &[usize]) -> f64 {
        self.correlator_mask(sites.iter().fold(0, |m, &i| m | (1 << i)))
    }
}

pub fn classical_nm_correlator(state: &ClassicalNMState, sites: &[usize]) -> f64 {
    state.correlator(sites)
}

/// One disorder-averaged experiment: geometry, ensemble, thermal point and
/// averaging method.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub lattice: Lattice,
    pub families: Vec<BondFamily>,
    pub ensemble: Ensemble,
    /// Quantum inverse temperature.
    pub beta: f64,
    /// Transverse field.
    pub field: f64,
    pub method: DisorderMethod,
    pub seed: u64,
    pub budget: Budget,
    pub deterministic_field: DeterministicField,
    /// Multiplies every classical β; 1 on the manifold.
    pub classical_scale: f64,
}

impl Scenario {
    pub fn new(lattice: Lattice, families: Vec<BondFamily>, ensemble: Ensemble, beta: f64, field: f64, method: DisorderMethod) -> Self {
        Self {
            lattice,
            families,
            ensemble,
            beta,
            field,
            method,
            seed: 0,
            budget: Budget::default(),
            deterministic_field: DeterministicField::default(),
            classical_scale: 1.0,
        }
    }

    pub fn on_manifold(&self) -> bool {
        self.classical_scale == 1.0
    }

    pub fn nishimori_point(&self) -> Result<NishimoriPoint> {
        let nm = nishimori_point_with(&self.ensemble, self.deterministic_field, Some(self.beta))?;
        Ok(if self.on_manifold() { nm } else { nm.scaled(self.classical_scale) })
    }

    pub fn source(&self) -> Result<DisorderSource> {
        DisorderSource::new(&self.method, &self.ensemble, &self.families, self.seed, self.budget.disorder)
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.volume()
    }

    pub fn hamiltonian(&self, j: &CouplingSample) -> Result<Hamiltonian> {
        assemble_hamiltonian(&self.lattice, &self.families, j, self.field)
    }

    pub fn gibbs(&self, h: &Hamiltonian) -> Result<SpectralGibbs> {
        SpectralGibbs::with_cap(h, self.beta, self.budget.quantum_spins)
    }

    pub fn classical(&self, j: &CouplingSample, nm: &NishimoriPoint) -> Result<ClassicalNMState> {
        ClassicalNMState::with_cap(&self.lattice, &self.families, j, nm, self.budget.classical_spins)
    }

    /// Short `key=value` description used in report rows.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "L={};d={};beta={};h={};method={}",
            self.lattice.side(),
            self.lattice.dim(),
            self.beta,
            self.field,
            self.method.tag()
        );
        if !self.on_manifold() {
            s.push_str(&format!(";classical_scale={}", self.classical_scale));
        }
        if let Ok(nm) = self.nishimori_point() {
            if !nm.deterministic.is_empty() {
                s.push_str(&format!(";deterministic_beta_orders={:?}", nm.deterministic));
            }
        }
        s
    }
}

/// Runs `f` on every disorder sample in parallel and returns `(weight, value)`
/// in sample order, so reductions are independent of the thread count.
pub(crate) fn map_samples<T, F>(source: &DisorderSource, f: F) -> Result<Vec<(f64, T)>>
where
    T: Send,
    F: Fn(&WeightedSample) -> Result<T> + Sync,
{
    (0..source.len())
        .into_par_iter()
        .map(|i| {
            let s = source.sample(i)?;
            let v = f(&s)?;
            Ok((s.weight, v))
        })
        .collect()
}

/// Weighted column sums of sample-major rows.
pub(crate) fn weighted_means(rows: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.1.len());
    let mut acc = vec![0.0; width];
    for (w, row) in rows {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += w * v;
        }
    }
    acc
}

pub(crate) fn method_of(source: &DisorderSource) -> Method {
    source.method()
}
