use crate::error::{Error, Result};
use crate::lattice::BondFamily;

use super::{CouplingSample, Ensemble, Provenance, WeightedSample};

/// Gauss-Hermite nodes and weights for `∫ e^{-x²} f(x) dx`, ascending.
///
/// Newton iteration on the orthonormal Hermite recurrence, with the usual
/// asymptotic starting guesses.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature order must be positive");
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[m - 1] = 0.0;
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Tensor-product Gauss-Hermite grid over every Gaussian coupling.
///
/// Node `i` is decoded in mixed radix with the first bond varying fastest.
/// Bonds with `Δ = 0` contribute a single node at `μ`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    order: usize,
    /// Per family: bond count, mean, and the √2Δ-scaled nodes.
    families: Vec<(usize, f64, Vec<f64>)>,
    unit_weights: Vec<f64>,
    nodes: usize,
}

impl QuadratureGrid {
    pub fn new(ens: &Ensemble, families: &[BondFamily], order: usize, max_nodes: u128) -> Result<Self> {
        let Ensemble::Gaussian(_) = ens else {
            return Err(Error::Parameter("quadrature needs a Gaussian ensemble".into()));
        };
        if order == 0 {
            return Err(Error::Parameter("quadrature order must be positive".into()));
        }
        ens.validate()?;
        ens.require(families)?;
        let (x, w) = gauss_hermite(order);
        let norm: f64 = w.iter().sum();
        let unit_weights: Vec<f64> = w.iter().map(|v| v / norm).collect();
        let mut total: u128 = 1;
        let mut fams = Vec::new();
        for fam in families {
            let q = ens.gaussian(fam.order()).expect("checked by require");
            let nodes = if q.delta > 0.0 {
                x.iter().map(|&xi| std::f64::consts::SQRT_2 * q.delta * xi).collect()
            } else {
                Vec::new()
            };
            if !nodes.is_empty() {
                total = total.saturating_mul((order as u128).saturating_pow(fam.len() as u32));
            }
            fams.push((fam.len(), q.mu, nodes));
        }
        if total > max_nodes {
            return Err(Error::Budget {
                what: "quadrature nodes",
                requested: total,
                limit: max_nodes,
            });
        }
        Ok(Self {
            order,
            families: fams,
            unit_weights,
            nodes: total as usize,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn sample(&self, index: usize) -> WeightedSample {
        let mut rest = index;
        let mut weight = 1.0;
        let values = self
            .families
            .iter()
            .map(|(n, mu, nodes)| {
                (0..*n)
                    .map(|_| {
                        if nodes.is_empty() {
                            return *mu;
                        }
                        let k = rest % self.order;
                        rest /= self.order;
                        weight *= self.unit_weights[k];
                        mu + nodes[k]
                    })
                    .collect()
            })
            .collect();
        WeightedSample {
            weight,
            couplings: CouplingSample::with_provenance(values, Provenance::Quadrature { node: index as u64 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::GaussianParams;
    use crate::lattice::{enumerate_bonds, Boundary, InteractionShape, Lattice};

    fn double_factorial_moment(k: u32) -> f64 {
        // E[g^k] for standard normal g.
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|v| v as f64).product()
        }
    }

    #[test]
    fn hermite_moments_exact() {
        for n in [1, 2, 5, 10, 20, 31] {
            let (x, w) = gauss_hermite(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let sqrt_pi = std::f64::consts::PI.sqrt();
            for k in 0..(2 * n as u32).min(24) {
                let est: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi / sqrt_pi * (std::f64::consts::SQRT_2 * xi).powi(k as i32))
                    .sum();
                let exact = double_factorial_moment(k);
                let scale = double_factorial_moment(k + k % 2);
                assert!((est - exact).abs() <= 1e-12 * scale, "n={n} k={k} {est} {exact}");
            }
        }
    }

    fn single_bond(mu: f64, delta: f64, order: usize) -> QuadratureGrid {
        let lat = Lattice::new(1, 1).unwrap();
        let fam = enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap();
        let ens = Ensemble::Gaussian(vec![GaussianParams { p: 1, mu, delta }]);
        QuadratureGrid::new(&ens, &[fam], order, 1_000_000).unwrap()
    }

    #[test]
    fn order_one_is_the_mean() {
        let g = single_bond(0.7, 1.3, 1);
        assert_eq!(g.len(), 1);
        let s = g.sample(0);
        assert_eq!(s.weight, 1.0);
        assert!((s.couplings.family(0)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn first_two_moments() {
        let (mu, delta) = (0.4, 1.7);
        let g = single_bond(mu, delta, 10);
        let (m1, m2, tw) = (0..g.len()).map(|i| g.sample(i)).fold((0.0, 0.0, 0.0), |acc, s| {
            let j = s.couplings.family(0)[0];
            (acc.0 + s.weight * j, acc.1 + s.weight * j * j, acc.2 + s.weight)
        });
        assert!((tw - 1.0).abs() < 1e-12);
        assert!((m1 - mu).abs() < 1e-12);
        assert!((m2 - (mu * mu + delta * delta)).abs() < 1e-12);
    }

    #[test]
    fn tensor_grid_budget() {
        let lat = Lattice::new(4, 1).unwrap();
        let fam = enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap();
        let ens = Ensemble::Gaussian(vec![GaussianParams { p: 2, mu: 1.0, delta: 1.0 }]);
        let g = QuadratureGrid::new(&ens, std::slice::from_ref(&fam), 20, 1_000_000).unwrap();
        assert_eq!(g.len(), 160_000);
        assert!(matches!(
            QuadratureGrid::new(&ens, &[fam], 20, 100_000),
            Err(Error::Budget { .. })
        ));
    }
}
