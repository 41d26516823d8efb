//! Gauge transformations `J_X → τ_X J_X`, `σ^z_X → τ_X σ^z_X`.
//!
//! `U(τ)` flips every site with `τ_j = -1`, which in the computational basis
//! is the permutation `b ↦ b XOR mask(τ)`. It is never stored as a matrix.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::{CouplingSample, Ensemble};
use crate::error::{Error, Result};
use crate::gibbs::SpectralGibbs;
use crate::lattice::{Bond, BondFamily, Lattice};
use crate::operators::assemble_hamiltonian;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeConfig {
    tau: Vec<i8>,
}

impl GaugeConfig {
    pub fn new(tau: Vec<i8>) -> Result<Self> {
        if let Some(bad) = tau.iter().find(|&&t| t != 1 && t != -1) {
            return Err(Error::Parameter(format!("gauge entries must be ±1, got {bad}")));
        }
        Ok(Self { tau })
    }

    pub fn identity(n: usize) -> Self {
        Self { tau: vec![1; n] }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            tau: (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.tau
    }

    /// Bit mask of the flipped sites.
    pub fn mask(&self) -> usize {
        self.tau
            .iter()
            .enumerate()
            .filter(|(_, &t)| t < 0)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// `τ_X = Π_{i ∈ X} τ_i`.
    pub fn product(&self, sites: &[usize]) -> f64 {
        sites.iter().map(|&i| self.tau[i] as f64).product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaugeUnitary {
    mask: usize,
    dim: usize,
}

impl GaugeUnitary {
    pub fn mask(&self) -> usize {
        self.mask
    }

    #[inline]
    pub fn apply(&self, b: usize) -> usize {
        b ^ self.mask
    }

    /// `U D U†` for a diagonal `D`.
    pub fn conjugate_diagonal(&self, diag: &[f64]) -> Vec<f64> {
        (0..diag.len()).map(|b| diag[self.apply(b)]).collect()
    }

    pub fn conjugate_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |a, b| m[(self.apply(a), self.apply(b))])
    }

    /// The permutation as an explicit index table.
    pub fn permutation(&self) -> Vec<usize> {
        (0..self.dim).map(|b| self.apply(b)).collect()
    }
}

pub fn gauge_unitary(tau: &GaugeConfig) -> GaugeUnitary {
    GaugeUnitary {
        mask: tau.mask(),
        dim: 1 << tau.len(),
    }
}

pub fn gauge_transform_couplings(families: &[BondFamily], j: &CouplingSample, tau: &GaugeConfig) -> CouplingSample {
    j.map(|f, k, v| v * tau.product(families[f].bonds()[k].sites()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Max-norm of `H(Jτ, h) - U(τ) H(J, h) U(τ)†`.
    pub matrix_residual: f64,
    /// Largest eigenvalue difference, relative to `max(1, |E|)`.
    pub spectrum_residual: f64,
    /// `|log Z(Jτ) - log Z(J)|` relative to `max(1, |log Z|)`.
    pub log_z_residual: f64,
}

impl InvarianceReport {
    pub fn max(&self) -> f64 {
        self.matrix_residual.max(self.spectrum_residual).max(self.log_z_residual)
    }
}

pub fn check_hamiltonian_invariance(
    lat: &Lattice,
    families: &[BondFamily],
    j: &CouplingSample,
    tau: &GaugeConfig,
    field: f64,
    beta: f64,
) -> Result<InvarianceReport> {
    if tau.len() != lat.volume() {
        return Err(Error::Dimension {
            expected: lat.volume(),
            got: tau.len(),
        });
    }
    let u = gauge_unitary(tau);
    let h = assemble_hamiltonian(lat, families, j, field)?;
    let jt = gauge_transform_couplings(families, j, tau);
    let ht = assemble_hamiltonian(lat, families, &jt, field)?;

    let matrix_residual = if h.is_diagonal() {
        ht.diag()
            .iter()
            .zip(u.conjugate_diagonal(h.diag()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        (ht.to_dense() - u.conjugate_dense(&h.to_dense())).amax()
    };

    let sg = SpectralGibbs::new(&h, beta)?;
    let sgt = SpectralGibbs::new(&ht, beta)?;
    let spectrum_residual = sg
        .energies()
        .iter()
        .zip(sgt.energies())
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    let log_z_residual = (sg.log_z() - sgt.log_z()).abs() / sg.log_z().abs().max(1.0);
    Ok(InvarianceReport {
        matrix_residual,
        spectrum_residual,
        log_z_residual,
    })
}

/// `Π_X exp((μ_p/Δ_p²) J_X (τ_X - 1))`, the factor relating `P(Jτ)` to `P(J)`.
pub fn covariance_factor(ens: &Ensemble, families: &[BondFamily], j: &CouplingSample, tau: &GaugeConfig) -> Result<f64> {
    let mut exponent = 0.0;
    for (f, fam) in families.iter().enumerate() {
        let q = ens
            .gaussian(fam.order())
            .ok_or_else(|| Error::MissingCoupling(format!("no Gaussian parameters for order {}", fam.order())))?;
        if q.delta <= 0.0 {
            return Err(Error::Parameter(format!(
                "covariance factor needs delta > 0 for order {}",
                fam.order()
            )));
        }
        let b = q.mu / (q.delta * q.delta);
        for (bond, &v) in fam.bonds().iter().zip(j.family(f)) {
            exponent += b * v * (tau.product(bond.sites()) - 1.0);
        }
    }
    Ok(exponent.exp())
}

/// `τ_X` for every bond of every family, in coupling order.
pub fn bond_signs(families: &[BondFamily], tau: &GaugeConfig) -> Vec<Vec<f64>> {
    families
        .iter()
        .map(|f| f.bonds().iter().map(|b: &Bond| tau.product(b.sites())).collect())
        .collect()
}
