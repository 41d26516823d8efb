//! Coupling ensembles, the Nishimori manifold, and the three ways of
//! averaging over quenched disorder: seeded Monte Carlo, tensor
//! Gauss-Hermite quadrature, and exact enumeration of binomial signs.

mod quadrature;
mod stats;

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::BondFamily;

pub use quadrature::{gauss_hermite, QuadratureGrid};
pub use stats::{disorder_average, jackknife, jackknife_mean, DisorderAverage, Method};

/// Default cap on bonds for exact binomial enumeration.
pub const DEFAULT_ENUMERATION_BONDS: usize = 16;
/// Default cap on tensor quadrature nodes.
pub const DEFAULT_QUADRATURE_NODES: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Explicit,
    MonteCarlo { seed: u64, index: u64 },
    Quadrature { node: u64 },
    Enumeration { index: u64 },
}

/// One realization of every coupling `J^p_X`, grouped by family in the same
/// order as the families passed to the sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSample {
    values: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl CouplingSample {
    pub fn from_values(values: Vec<Vec<f64>>) -> Self {
        Self {
            values,
            provenance: Provenance::Explicit,
        }
    }

    pub fn with_provenance(values: Vec<Vec<f64>>, provenance: Provenance) -> Self {
        Self { values, provenance }
    }

    pub fn families(&self) -> usize {
        self.values.len()
    }

    pub fn family(&self, f: usize) -> &[f64] {
        &self.values[f]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(fi, fam)| fam.iter().enumerate().map(|(k, &j)| f(fi, k, j)).collect())
            .collect();
        Self {
            values,
            provenance: self.provenance.clone(),
        }
    }

    /// Same couplings with every order-`p` family shifted by `delta`.
    pub fn shifted(&self, families: &[BondFamily], p: usize, delta: f64) -> Self {
        self.map(|fi, _, j| if families[fi].order() == p { j + delta } else { j })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub p: usize,
    pub mu: f64,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    pub p: usize,
    pub mu: f64,
    pub r: f64,
}

impl GaussianParams {
    /// Normal density with mean `mu` and standard deviation `delta`.
    pub fn density(&self, j: f64) -> f64 {
        let var = self.delta * self.delta;
        (-(j - self.mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    pub fn is_inert(&self) -> bool {
        self.mu == 0.0 && self.delta == 0.0
    }
}

/// `K(r) = ½ log(r / (1 - r))`.
pub fn binomial_k(r: f64) -> f64 {
    0.5 * (r / (1.0 - r)).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum Ensemble {
    Gaussian(Vec<GaussianParams>),
    Binomial(Vec<BinomialParams>),
}

impl Ensemble {
    pub fn orders(&self) -> Vec<usize> {
        match self {
            Ensemble::Gaussian(ps) => ps.iter().map(|q| q.p).collect(),
            Ensemble::Binomial(ps) => ps.iter().map(|q| q.p).collect(),
        }
    }

    pub fn gaussian(&self, p: usize) -> Option<&GaussianParams> {
        match self {
            Ensemble::Gaussian(ps) => ps.iter().find(|q| q.p == p),
            Ensemble::Binomial(_) => None,
        }
    }

    pub fn binomial(&self, p: usize) -> Option<&BinomialParams> {
        match self {
            Ensemble::Binomial(ps) => ps.iter().find(|q| q.p == p),
            Ensemble::Gaussian(_) => None,
        }
    }

    /// Mean coupling of order `p`.
    pub fn mean(&self, p: usize) -> Option<f64> {
        match self {
            Ensemble::Gaussian(_) => self.gaussian(p).map(|q| q.mu),
            Ensemble::Binomial(_) => self.binomial(p).map(|q| q.mu * (2.0 * q.r - 1.0)),
        }
    }

    /// True when order `p` carries no coupling at all.
    pub fn is_inert(&self, p: usize) -> bool {
        match self {
            Ensemble::Gaussian(_) => self.gaussian(p).map_or(true, GaussianParams::is_inert),
            Ensemble::Binomial(_) => self.binomial(p).map_or(true, |q| q.mu == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for p in self.orders() {
            if p == 0 || !seen.insert(p) {
                return Err(Error::Parameter(format!("ensemble order {p} is zero or repeated")));
            }
        }
        match self {
            Ensemble::Gaussian(ps) => {
                for q in ps {
                    if !q.mu.is_finite() || !(q.delta.is_finite() && q.delta >= 0.0) {
                        return Err(Error::Parameter(format!(
                            "order {}: need finite mu and delta >= 0 (mu={}, delta={})",
                            q.p, q.mu, q.delta
                        )));
                    }
                }
            }
            Ensemble::Binomial(ps) => {
                for q in ps {
                    if !q.mu.is_finite() || q.mu < 0.0 || !(0.0..=1.0).contains(&q.r) {
                        return Err(Error::Parameter(format!(
                            "order {}: need mu >= 0 and r in [0, 1] (mu={}, r={})",
                            q.p, q.mu, q.r
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn require(&self, families: &[BondFamily]) -> Result<()> {
        for fam in families {
            if !self.orders().contains(&fam.order()) {
                return Err(Error::MissingCoupling(format!(
                    "ensemble has no parameters for order {}",
                    fam.order()
                )));
            }
        }
        Ok(())
    }

    pub fn with_mean(&self, p: usize, mu: f64) -> Self {
        match self {
            Ensemble::Gaussian(ps) => Ensemble::Gaussian(
                ps.iter()
                    .map(|q| if q.p == p { GaussianParams { mu, ..*q } } else { *q })
                    .collect(),
            ),
            Ensemble::Binomial(ps) => Ensemble::Binomial(
                ps.iter()
                    .map(|q| if q.p == p { BinomialParams { mu, ..*q } } else { *q })
                    .collect(),
            ),
        }
    }
}

/// Independent draws for every bond: `J = Δ g + μ` with standard normal `g`,
/// or `±μ` with probabilities `r` and `1 - r`.
pub fn sample_couplings<R: Rng + ?Sized>(
    ens: &Ensemble,
    families: &[BondFamily],
    rng: &mut R,
) -> Result<CouplingSample> {
    ens.require(families)?;
    let values = families
        .iter()
        .map(|fam| {
            let p = fam.order();
            (0..fam.len())
                .map(|_| match ens {
                    Ensemble::Gaussian(_) => {
                        let q = ens.gaussian(p).expect("checked by require");
                        let g: f64 = rng.sample(StandardNormal);
                        q.delta * g + q.mu
                    }
                    Ensemble::Binomial(_) => {
                        let q = ens.binomial(p).expect("checked by require");
                        if rng.gen::<f64>() < q.r {
                            q.mu
                        } else {
                            -q.mu
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(CouplingSample::from_values(values))
}

/// The generator for Monte Carlo sample `index`: one ChaCha8 stream per
/// sample under the experiment seed.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// How a deterministic family (`Δ_p = 0`, `μ_p ≠ 0`) enters the classical
/// Nishimori weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicField {
    #[default]
    Reject,
    /// Use the quantum inverse temperature for that family.
    QuantumBeta,
}

/// Per-order inverse temperatures `β_p` of the classical model on the
/// Nishimori manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NishimoriPoint {
    betas: Vec<(usize, f64)>,
    /// Orders whose β was set by [`DeterministicField::QuantumBeta`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deterministic: Vec<usize>,
}

impl NishimoriPoint {
    pub fn from_betas(betas: Vec<(usize, f64)>) -> Self {
        Self {
            betas,
            deterministic: Vec::new(),
        }
    }

    pub fn beta(&self, p: usize) -> Option<f64> {
        self.betas.iter().find(|(q, _)| *q == p).map(|&(_, b)| b)
    }

    pub fn betas(&self) -> &[(usize, f64)] {
        &self.betas
    }

    /// The common β when every non-inert order shares it.
    pub fn common_beta(&self, ens: &Ensemble) -> Option<f64> {
        let mut it = self
            .betas
            .iter()
            .filter(|(p, _)| !ens.is_inert(*p))
            .map(|&(_, b)| b);
        let first = it.next()?;
        it.all(|b| ((b - first) / first.abs().max(1e-300)).abs() < 1e-12)
            .then_some(first)
    }

    /// Every β multiplied by `factor`; used for off-manifold controls.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            betas: self.betas.iter().map(|&(p, b)| (p, b * factor)).collect(),
            deterministic: self.deterministic.clone(),
        }
    }
}

impl fmt::Display for NishimoriPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (p, b)) in self.betas.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "beta_{p}={b}")?;
        }
        Ok(())
    }
}

/// `β_p = μ_p / Δ_p²` (Gaussian) or `β_p = K(r_p) / μ_p` (binomial).
///
/// The binomial weight is `exp(K(r) J / μ)`, so the coupling-space inverse
/// temperature is `K(r_p)/μ_p`; it equals `K(r_p)` for unit couplings.
pub fn nishimori_point(ens: &Ensemble) -> Result<NishimoriPoint> {
    nishimori_point_with(ens, DeterministicField::Reject, None)
}

/// Like [`nishimori_point`], but inert orders (`μ = Δ = 0`) get β = 0 and
/// deterministic orders follow `policy`.
pub fn nishimori_point_with(ens: &Ensemble, policy: DeterministicField, quantum_beta: Option<f64>) -> Result<NishimoriPoint> {
    let strict = quantum_beta.is_none() && policy == DeterministicField::Reject;
    ens.validate()?;
    let mut betas = Vec::new();
    let mut deterministic = Vec::new();
    match ens {
        Ensemble::Gaussian(ps) => {
            for q in ps {
                if q.delta > 0.0 {
                    betas.push((q.p, q.mu / (q.delta * q.delta)));
                } else if q.mu == 0.0 && !strict {
                    betas.push((q.p, 0.0));
                } else {
                    match (policy, quantum_beta) {
                        (DeterministicField::QuantumBeta, Some(b)) => {
                            betas.push((q.p, b));
                            deterministic.push(q.p);
                        }
                        _ => {
                            return Err(Error::Nishimori(format!(
                                "order {} has delta = 0 (mu = {})",
                                q.p, q.mu
                            )))
                        }
                    }
                }
            }
        }
        Ensemble::Binomial(ps) => {
            for q in ps {
                if q.r > 0.0 && q.r < 1.0 && q.mu > 0.0 {
                    betas.push((q.p, binomial_k(q.r) / q.mu));
                } else if q.mu == 0.0 && !strict {
                    betas.push((q.p, 0.0));
                } else {
                    return Err(Error::Nishimori(format!(
                        "order {} needs 0 < r < 1 and mu > 0 (r = {}, mu = {})",
                        q.p, q.r, q.mu
                    )));
                }
            }
        }
    }
    Ok(NishimoriPoint { betas, deterministic })
}

/// A coupling realization with its weight in a disorder average.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub weight: f64,
    pub couplings: CouplingSample,
}

/// Every binomial sign configuration with its product weight. Bit `k` of
/// the configuration index flips bond `k` (in family-major order) to `-μ`.
#[derive(Clone, Debug)]
pub struct BinomialEnumeration {
    shape: Vec<usize>,
    params: Vec<BinomialParams>,
}

impl BinomialEnumeration {
    pub fn new(ens: &Ensemble, families: &[BondFamily], max_bonds: usize) -> Result<Self> {
        let Ensemble::Binomial(_) = ens else {
            return Err(Error::Parameter("enumeration needs a binomial ensemble".into()));
        };
        ens.validate()?;
        ens.require(families)?;
        let bonds: usize = families.iter().map(BondFamily::len).sum();
        if bonds > max_bonds || bonds >= 63 {
            return Err(Error::Budget {
                what: "enumerated bonds",
                requested: bonds as u128,
                limit: max_bonds as u128,
            });
        }
        Ok(Self {
            shape: families.iter().map(BondFamily::len).collect(),
            params: families
                .iter()
                .map(|f| *ens.binomial(f.order()).expect("checked by require"))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        1 << self.shape.iter().sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, index: usize) -> WeightedSample {
        let mut bit = 0;
        let mut weight = 1.0;
        let values = self
            .shape
            .iter()
            .zip(&self.params)
            .map(|(&n, q)| {
                (0..n)
                    .map(|_| {
                        let minus = (index >> bit) & 1 == 1;
                        bit += 1;
                        if minus {
                            weight *= 1.0 - q.r;
                            -q.mu
                        } else {
                            weight *= q.r;
                            q.mu
                        }
                    })
                    .collect()
            })
            .collect();
        WeightedSample {
            weight,
            couplings: CouplingSample::with_provenance(values, Provenance::Enumeration { index: index as u64 }),
        }
    }
}

pub fn enumerate_binomial(ens: &Ensemble, families: &[BondFamily]) -> Result<Vec<WeightedSample>> {
    let e = BinomialEnumeration::new(ens, families, DEFAULT_ENUMERATION_BONDS)?;
    Ok((0..e.len()).map(|i| e.sample(i)).collect())
}

pub fn quadrature_grid(ens: &Ensemble, families: &[BondFamily], order: usize) -> Result<Vec<WeightedSample>> {
    let g = QuadratureGrid::new(ens, families, order, DEFAULT_QUADRATURE_NODES as u128)?;
    Ok((0..g.len()).map(|i| g.sample(i)).collect())
}

/// Which disorder average to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DisorderMethod {
    Mc { samples: usize },
    Quadrature { order: usize },
    Enumeration,
}

impl DisorderMethod {
    pub fn tag(&self) -> Method {
        match self {
            DisorderMethod::Mc { .. } => Method::Mc,
            DisorderMethod::Quadrature { order } => Method::Quadrature { order: *order },
            DisorderMethod::Enumeration => Method::Enumeration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisorderBudget {
    pub enumeration_bonds: usize,
    pub quadrature_nodes: u64,
}

impl Default for DisorderBudget {
    fn default() -> Self {
        Self {
            enumeration_bonds: DEFAULT_ENUMERATION_BONDS,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
        }
    }
}

/// An indexable sequence of weighted coupling realizations.
#[derive(Clone, Debug)]
pub enum DisorderSource {
    MonteCarlo {
        ensemble: Ensemble,
        families: Vec<BondFamily>,
        seed: u64,
        samples: usize,
    },
    Quadrature(QuadratureGrid),
    Enumeration(BinomialEnumeration),
}

impl DisorderSource {
    pub fn new(
        method: &DisorderMethod,
        ens: &Ensemble,
        families: &[BondFamily],
        seed: u64,
        budget: DisorderBudget,
    ) -> Result<Self> {
        ens.validate()?;
        ens.require(families)?;
        Ok(match *method {
            DisorderMethod::Mc { samples } => {
                if samples == 0 {
                    return Err(Error::Empty("Monte Carlo samples"));
                }
                DisorderSource::MonteCarlo {
                    ensemble: ens.clone(),
                    families: families.to_vec(),
                    seed,
                    samples,
                }
            }
            DisorderMethod::Quadrature { order } => {
                DisorderSource::Quadrature(QuadratureGrid::new(ens, families, order, budget.quadrature_nodes as u128)?)
            }
            DisorderMethod::Enumeration => {
                DisorderSource::Enumeration(BinomialEnumeration::new(ens, families, budget.enumeration_bonds)?)
            }
        })
    }

    pub fn len(&self) -> usize {
        match self {
            DisorderSource::MonteCarlo { samples, .. } => *samples,
            DisorderSource::Quadrature(g) => g.len(),
            DisorderSource::Enumeration(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn method(&self) -> Method {
        match self {
            DisorderSource::MonteCarlo { .. } => Method::Mc,
            DisorderSource::Quadrature(g) => Method::Quadrature { order: g.order() },
            DisorderSource::Enumeration(_) => Method::Enumeration,
        }
    }

    pub fn sample(&self, index: usize) -> Result<WeightedSample> {
        match self {
            DisorderSource::MonteCarlo {
                ensemble,
                families,
                seed,
                samples,
            } => {
                let mut rng = sample_rng(*seed, index as u64);
                let j = sample_couplings(ensemble, families, &mut rng)?;
                Ok(WeightedSample {
                    weight: 1.0 / *samples as f64,
                    couplings: CouplingSample::with_provenance(
                        j.values,
                        Provenance::MonteCarlo {
                            seed: *seed,
                            index: index as u64,
                        },
                    ),
                })
            }
            DisorderSource::Quadrature(g) => Ok(g.sample(index)),
            DisorderSource::Enumeration(e) => Ok(e.sample(index)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_bonds, Boundary, InteractionShape, Lattice};

    fn chain(n: usize, p2: bool) -> Vec<BondFamily> {
        let lat = Lattice::new(n, 1).unwrap();
        let mut f = vec![enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap()];
        if p2 {
            f.push(enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap());
        }
        f
    }

    #[test]
    fn degenerate_gaussian_is_constant() {
        let ens = Ensemble::Gaussian(vec![GaussianParams { p: 1, mu: 1.0, delta: 0.0 }]);
        let j = sample_couplings(&ens, &chain(4, false), &mut sample_rng(3, 0)).unwrap();
        assert!(j.family(0).iter().all(|&x| x == 1.0));
    }

    #[test]
    fn binomial_r_one_is_all_plus() {
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 1, mu: 0.7, r: 1.0 }]);
        let j = sample_couplings(&ens, &chain(5, false), &mut sample_rng(9, 4)).unwrap();
        assert!(j.family(0).iter().all(|&x| x == 0.7));
    }

    #[test]
    fn gaussian_sample_mean_within_four_standard_errors() {
        let (mu, delta) = (0.8, 1.5);
        let ens = Ensemble::Gaussian(vec![GaussianParams { p: 1, mu, delta }]);
        let lat = Lattice::new(1, 1).unwrap();
        let fam = vec![enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap()];
        let mut rng = sample_rng(2024, 0);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_couplings(&ens, &fam, &mut rng).unwrap().family(0)[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - mu).abs() < 4.0 * delta / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let ens = Ensemble::Gaussian(vec![GaussianParams { p: 1, mu: 0.0, delta: 1.0 }, GaussianParams { p: 2, mu: 0.0, delta: 1.0 }]);
        let fams = chain(4, true);
        let a = sample_couplings(&ens, &fams, &mut sample_rng(1, 5)).unwrap();
        let b = sample_couplings(&ens, &fams, &mut sample_rng(1, 5)).unwrap();
        let c = sample_couplings(&ens, &fams, &mut sample_rng(1, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn nishimori_points() {
        let g = |mu, delta| Ensemble::Gaussian(vec![GaussianParams { p: 2, mu, delta }]);
        assert_eq!(nishimori_point(&g(1.0, 1.0)).unwrap().beta(2), Some(1.0));
        assert_eq!(nishimori_point(&g(2.0, 1.0)).unwrap().beta(2), Some(2.0));
        assert!(matches!(nishimori_point(&g(1.0, 0.0)), Err(Error::Nishimori(_))));

        let b = |r| Ensemble::Binomial(vec![BinomialParams { p: 2, mu: 1.0, r }]);
        assert_eq!(nishimori_point(&b(0.5)).unwrap().beta(2), Some(0.0));
        assert!((nishimori_point(&b(0.9)).unwrap().beta(2).unwrap() - 0.5 * 9f64.ln()).abs() < 1e-15);
        assert!(nishimori_point(&b(1.0)).is_err());
        assert!(nishimori_point(&b(0.0)).is_err());
    }

    #[test]
    fn nishimori_round_trip() {
        for (mu, delta) in [(0.3, 0.7), (1.0, 1.0), (2.5, 0.4), (1e-3, 3.0)] {
            let ens = Ensemble::Gaussian(vec![GaussianParams { p: 2, mu, delta }]);
            let b = nishimori_point(&ens).unwrap().beta(2).unwrap();
            assert!((b * delta * delta - mu).abs() <= 1e-14 * mu.max(1.0));
        }
    }

    #[test]
    fn deterministic_policies() {
        let ens = Ensemble::Gaussian(vec![
            GaussianParams { p: 1, mu: 0.2, delta: 0.0 },
            GaussianParams { p: 2, mu: 1.0, delta: 1.0 },
        ]);
        assert!(nishimori_point_with(&ens, DeterministicField::Reject, Some(3.0)).is_err());
        let nm = nishimori_point_with(&ens, DeterministicField::QuantumBeta, Some(3.0)).unwrap();
        assert_eq!(nm.beta(1), Some(3.0));
        assert_eq!(nm.deterministic, vec![1]);

        let inert = Ensemble::Gaussian(vec![
            GaussianParams { p: 1, mu: 0.0, delta: 0.0 },
            GaussianParams { p: 2, mu: 0.5, delta: 1.0 },
        ]);
        let nm = nishimori_point_with(&inert, DeterministicField::Reject, Some(3.0)).unwrap();
        assert_eq!(nm.beta(1), Some(0.0));
        assert_eq!(nm.common_beta(&inert), Some(0.5));
        assert!(nishimori_point(&inert).is_err());
    }

    #[test]
    fn enumeration_weights() {
        let lat = Lattice::new(2, 1).unwrap();
        let fam = vec![enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap()];
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 1, mu: 1.0, r: 0.5 }]);
        let all = enumerate_binomial(&ens, &fam).unwrap();
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|s| s.weight == 0.25));

        let one = Lattice::new(1, 1).unwrap();
        let fam = vec![enumerate_bonds(&one, &InteractionShape::site(1), Boundary::Periodic).unwrap()];
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 1, mu: 1.0, r: 0.9 }]);
        let w: Vec<f64> = enumerate_binomial(&ens, &fam).unwrap().iter().map(|s| s.weight).collect();
        assert_eq!(w.len(), 2);
        assert!((w[0] - 0.9).abs() < 1e-16 && (w[1] - 0.1).abs() < 1e-16);
    }

    #[test]
    fn enumeration_normalized_and_budgeted() {
        let fams = chain(5, true);
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 1, mu: 0.3, r: 0.77 }, BinomialParams { p: 2, mu: 1.0, r: 0.61 }]);
        let all = enumerate_binomial(&ens, &fams).unwrap();
        assert_eq!(all.len(), 1 << 10);
        let total: f64 = all.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-13, "{total}");
        assert!(matches!(BinomialEnumeration::new(&ens, &fams, 8), Err(Error::Budget { .. })));
    }

    #[test]
    fn missing_order_rejected() {
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 1, mu: 1.0, r: 0.6 }]);
        assert!(matches!(enumerate_binomial(&ens, &chain(3, true)), Err(Error::MissingCoupling(_))));
    }

    #[test]
    fn ensemble_serde_shape() {
        let ens = Ensemble::Binomial(vec![BinomialParams { p: 2, mu: 1.0, r: 0.8 }]);
        let s = serde_json::to_string(&ens).unwrap();
        assert_eq!(s, r#"{"kind":"binomial","params":[{"p":2,"mu":1.0,"r":0.8}]}"#);
        assert_eq!(serde_json::from_str::<Ensemble>(&s).unwrap(), ens);
    }
}
