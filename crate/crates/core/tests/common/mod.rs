#![allow(dead_code)]

use gaugelab::disorder::{BinomialParams, DisorderMethod, Ensemble, GaussianParams};
use gaugelab::lattice::{enumerate_bonds, Boundary, BondFamily, InteractionShape, Lattice};
use gaugelab::nishimori::Scenario;

/// 1D periodic chain with a site family (p = 1) and a nearest-neighbour
/// family (p = 2).
pub fn chain(side: usize) -> (Lattice, Vec<BondFamily>) {
    let lat = Lattice::new(side, 1).unwrap();
    let fams = vec![
        enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap(),
        enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap(),
    ];
    (lat, fams)
}

/// Chain with the nearest-neighbour family only.
pub fn pair_chain(side: usize) -> (Lattice, Vec<BondFamily>) {
    let lat = Lattice::new(side, 1).unwrap();
    let fams = vec![enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap()];
    (lat, fams)
}

pub fn binomial(params: &[(usize, f64, f64)]) -> Ensemble {
    Ensemble::Binomial(params.iter().map(|&(p, mu, r)| BinomialParams { p, mu, r }).collect())
}

pub fn gaussian(params: &[(usize, f64, f64)]) -> Ensemble {
    Ensemble::Gaussian(params.iter().map(|&(p, mu, delta)| GaussianParams { p, mu, delta }).collect())
}

pub fn enumeration(side: usize, ens: Ensemble, beta: f64, h: f64) -> Scenario {
    let (lat, fams) = if ens.orders().contains(&1) { chain(side) } else { pair_chain(side) };
    Scenario::new(lat, fams, ens, beta, h, DisorderMethod::Enumeration)
}
