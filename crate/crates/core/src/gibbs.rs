//! Gibbs states of a single coupling realization via exact diagonalization.
//!
//! All thermal quantities are evaluated in the energy eigenbasis. Energies are
//! measured from the ground state before exponentiation, so nothing overflows
//! at large β. A Hamiltonian without transverse field is already diagonal and
//! skips the eigensolver entirely.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use nalgebra_lapack::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::{Hamiltonian, Observable};

/// Default limit on spins for the dense eigensolver path.
pub const DEFAULT_QUANTUM_CAP: usize = 14;

/// Below this value of β|E_m - E_n| the Duhamel kernel is taken at its
/// degenerate limit.
pub const DEGENERATE_GAP: f64 = 1e-7;

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// Parallelism lives in the disorder loop; a threaded BLAS underneath it
/// would oversubscribe cores and make rounding depend on its thread count.
fn single_threaded_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    // SAFETY: plain setter in the linked OpenBLAS, called once.
    ONCE.call_once(|| unsafe { openblas_set_num_threads(1) });
}

#[derive(Clone, Debug)]
enum EigenBasis {
    /// Eigenstate `k` is computational basis state `perm[k]`.
    Computational(Vec<usize>),
    /// Column `k` is eigenvector `k`.
    Dense(DMatrix<f64>),
}

/// An operator expressed in the energy eigenbasis of a [`SpectralGibbs`].
#[derive(Clone, Debug)]
pub enum Rotated {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Rotated {
    fn entry(&self, m: usize, n: usize) -> f64 {
        match self {
            Rotated::Diagonal(d) => {
                if m == n {
                    d[m]
                } else {
                    0.0
                }
            }
            Rotated::Dense(a) => a[(m, n)],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralGibbs {
    beta: f64,
    energies: Vec<f64>,
    probs: Vec<f64>,
    log_z: f64,
    /// `log Σ_k exp(-β (E_k - E_0))`.
    log_z_shifted: f64,
    basis: EigenBasis,
    duhamel_kernel: OnceLock<DMatrix<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureValue {
    pub psi: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("inverse temperature {beta} must be finite and non-negative")))
    }
}

impl SpectralGibbs {
    /// Diagonalizes `h` at inverse temperature `beta`, using the classical
    /// path when there is no transverse field.
    pub fn new(h: &Hamiltonian, beta: f64) -> Result<Self> {
        Self::with_cap(h, beta, DEFAULT_QUANTUM_CAP)
    }

    pub fn with_cap(h: &Hamiltonian, beta: f64, quantum_cap: usize) -> Result<Self> {
        if h.is_diagonal() {
            return Self::from_diagonal(h.diag(), beta);
        }
        if h.n_spins() > quantum_cap {
            return Err(Error::Budget {
                what: "quantum spins",
                requested: h.n_spins() as u128,
                limit: quantum_cap as u128,
            });
        }
        Self::from_dense(h.to_dense(), beta)
    }

    pub fn from_diagonal(energies: &[f64], beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if energies.is_empty() {
            return Err(Error::Empty("energies"));
        }
        let mut perm: Vec<usize> = (0..energies.len()).collect();
        perm.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
        let sorted = perm.iter().map(|&k| energies[k]).collect();
        Ok(Self::assemble(beta, sorted, EigenBasis::Computational(perm)))
    }

    /// Full symmetric eigendecomposition of `matrix`.
    pub fn from_dense(matrix: DMatrix<f64>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: matrix.ncols(),
            });
        }
        single_threaded_blas();
        let eig = SymmetricEigen::try_new(matrix).ok_or(Error::Eigensolver(dim))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self::assemble(beta, energies, EigenBasis::Dense(vectors)))
    }

    fn assemble(beta: f64, energies: Vec<f64>, basis: EigenBasis) -> Self {
        let e0 = energies[0];
        let boltzmann: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let sum: f64 = boltzmann.iter().sum();
        let log_z_shifted = sum.ln();
        let probs = boltzmann.iter().map(|w| w / sum).collect();
        Self {
            beta,
            log_z: log_z_shifted - beta * e0,
            log_z_shifted,
            energies,
            probs,
            basis,
            duhamel_kernel: OnceLock::new(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Energies in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Boltzmann probability of each eigenstate.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.basis, EigenBasis::Computational(_))
    }

    /// Eigenvectors as columns of a dense matrix.
    pub fn eigenvectors(&self) -> DMatrix<f64> {
        match &self.basis {
            EigenBasis::Dense(v) => v.clone(),
            EigenBasis::Computational(perm) => {
                let dim = perm.len();
                DMatrix::from_fn(dim, dim, |r, c| if perm[c] == r { 1.0 } else { 0.0 })
            }
        }
    }

    /// Max-norm of `VᵀV - I` and relative Frobenius error of `V diag(E) Vᵀ`
    /// against `reference`.
    pub fn diagnostics(&self, reference: &DMatrix<f64>) -> (f64, f64) {
        let v = self.eigenvectors();
        let dim = self.dim();
        let gram = v.transpose() * &v;
        let ortho = (gram - DMatrix::identity(dim, dim)).amax();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.energies));
        let rebuilt = &v * d * v.transpose();
        let scale = reference.norm().max(f64::MIN_POSITIVE);
        (ortho, (rebuilt - reference).norm() / scale)
    }

    fn check_dim(&self, a: &Observable) -> Result<()> {
        if a.dim() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                got: a.dim(),
            })
        }
    }

    /// Expresses `a` in the energy eigenbasis.
    pub fn rotate(&self, a: &Observable) -> Result<Rotated> {
        self.check_dim(a)?;
        Ok(match (&self.basis, a) {
            (EigenBasis::Computational(perm), Observable::Diagonal(d)) => {
                Rotated::Diagonal(perm.iter().map(|&b| d[b]).collect())
            }
            (EigenBasis::Computational(perm), Observable::Dense(m)) => {
                let dim = perm.len();
                Rotated::Dense(DMatrix::from_fn(dim, dim, |r, c| m[(perm[r], perm[c])]))
            }
            (EigenBasis::Dense(v), Observable::Diagonal(d)) => {
                let mut scaled = v.clone();
                for (mut row, &x) in scaled.row_iter_mut().zip(d) {
                    row *= x;
                }
                Rotated::Dense(v.transpose() * scaled)
            }
            (EigenBasis::Dense(v), Observable::Dense(m)) => Rotated::Dense(v.transpose() * m * v),
        })
    }

    pub fn expectation_rotated(&self, a: &Rotated) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| p * a.entry(k, k)).sum()
    }

    /// `Tr(A e^{-βH}) / Z`.
    pub fn expectation(&self, a: &Observable) -> Result<f64> {
        self.check_dim(a)?;
        if let (EigenBasis::Dense(v), Observable::Diagonal(d)) = (&self.basis, a) {
            // Σ_k p_k Σ_b V_bk² a_b without forming the rotated matrix.
            let mut total = 0.0;
            for (k, p) in self.probs.iter().enumerate() {
                let col = v.column(k);
                total += p * col.iter().zip(d).map(|(x, y)| x * x * y).sum::<f64>();
            }
            return Ok(total);
        }
        Ok(self.expectation_rotated(&self.rotate(a)?))
    }

    /// Duhamel kernel `w_mn / Z`, including the Boltzmann factor.
    pub fn duhamel_kernel(&self) -> &DMatrix<f64> {
        self.duhamel_kernel.get_or_init(|| {
            let dim = self.dim();
            let e0 = self.energies[0];
            DMatrix::from_fn(dim, dim, |m, n| {
                let (em, en) = (self.energies[m], self.energies[n]);
                let mid = 0.5 * (em + en) - e0;
                let half = 0.5 * self.beta * (em - en).abs();
                (-self.beta * mid - self.log_z_shifted + ln_sinhc(half)).exp()
            })
        })
    }

    pub fn duhamel_rotated(&self, a: &Rotated, b: &Rotated) -> f64 {
        match (a, b) {
            (Rotated::Diagonal(x), Rotated::Diagonal(y)) => {
                self.probs.iter().zip(x).zip(y).map(|((p, u), v)| p * u * v).sum()
            }
            (Rotated::Diagonal(x), other) | (other, Rotated::Diagonal(x)) => self
                .probs
                .iter()
                .enumerate()
                .map(|(k, p)| p * x[k] * other.entry(k, k))
                .sum(),
            (Rotated::Dense(x), Rotated::Dense(y)) => {
                let w = self.duhamel_kernel();
                let dim = self.dim();
                let mut total = 0.0;
                for n in 0..dim {
                    for m in 0..dim {
                        total += x[(m, n)] * y[(n, m)] * w[(m, n)];
                    }
                }
                total
            }
        }
    }

    /// `(A, B) = ∫_0^1 dt ⟨e^{tβH} A e^{-tβH} B⟩`.
    pub fn duhamel(&self, a: &Observable, b: &Observable) -> Result<f64> {
        Ok(self.duhamel_rotated(&self.rotate(a)?, &self.rotate(b)?))
    }

    /// `(A; B) = (A, B) - ⟨A⟩⟨B⟩`.
    pub fn truncated_duhamel(&self, a: &Observable, b: &Observable) -> Result<f64> {
        let ra = self.rotate(a)?;
        let rb = self.rotate(b)?;
        Ok(self.truncated_rotated(&ra, &rb))
    }

    pub fn truncated_rotated(&self, a: &Rotated, b: &Rotated) -> f64 {
        self.duhamel_rotated(a, b) - self.expectation_rotated(a) * self.expectation_rotated(b)
    }

    /// `ψ_L = log Z / |Λ_L|`.
    pub fn pressure_density(&self, lat: &Lattice) -> PressureValue {
        PressureValue {
            psi: self.log_z / lat.volume() as f64,
        }
    }
}

/// `ln(sinh(y) / y)` for `y >= 0`.
fn ln_sinhc(y: f64) -> f64 {
    if 2.0 * y < DEGENERATE_GAP {
        0.0
    } else if y < 20.0 {
        (y.sinh() / y).ln()
    } else {
        y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2 - y.ln()
    }
}

pub fn spectral_decompose(h: &Hamiltonian, beta: f64) -> Result<SpectralGibbs> {
    SpectralGibbs::new(h, beta)
}

pub fn gibbs_expectation(sg: &SpectralGibbs, a: &Observable) -> Result<f64> {
    sg.expectation(a)
}

pub fn duhamel(sg: &SpectralGibbs, a: &Observable, b: &Observable) -> Result<f64> {
    sg.duhamel(a, b)
}

pub fn truncated_duhamel(sg: &SpectralGibbs, a: &Observable, b: &Observable) -> Result<f64> {
    sg.truncated_duhamel(a, b)
}

pub fn pressure_density(sg: &SpectralGibbs, lat: &Lattice) -> PressureValue {
    sg.pressure_density(lat)
}
