mod common;

use common::chain;
use gaugelab::disorder::CouplingSample;
use gaugelab::gibbs::SpectralGibbs;
use gaugelab::lattice::{BondFamily, Lattice};
use gaugelab::operators::{assemble_hamiltonian, order_operator, z_diagonal, Observable};
use proptest::prelude::*;

const FD_STEP: f64 = 1e-5;

fn gibbs(lat: &Lattice, fams: &[BondFamily], j: &CouplingSample, h: f64, beta: f64) -> SpectralGibbs {
    SpectralGibbs::new(&assemble_hamiltonian(lat, fams, j, h).unwrap(), beta).unwrap()
}

fn couplings() -> CouplingSample {
    CouplingSample::from_values(vec![vec![0.3, -0.2, 0.45, 0.1], vec![1.0, -0.6, 0.8, 1.3]])
}

fn observables(lat: &Lattice, fams: &[BondFamily]) -> Vec<(&'static str, Observable)> {
    let n = lat.volume();
    vec![
        ("s_1", Observable::Diagonal(z_diagonal(n, 1 << 1))),
        ("s_X", Observable::Diagonal(z_diagonal(n, fams[1].bonds()[2].mask()))),
        ("o_1", Observable::Diagonal(order_operator(lat, &fams[0]).unwrap())),
    ]
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn derivative_identity() {
    let (lat, fams) = chain(4);
    let j = couplings();
    for (beta, h) in [(0.7, 0.5), (1.5, 1.2)] {
        let sg = gibbs(&lat, &fams, &j, h, beta);
        for (f, fam) in fams.iter().enumerate() {
            let p = fam.order();
            let o_p = Observable::Diagonal(order_operator(&lat, &fams[f]).unwrap());
            let plus = gibbs(&lat, &fams, &j.shifted(&fams, p, FD_STEP), h, beta);
            let minus = gibbs(&lat, &fams, &j.shifted(&fams, p, -FD_STEP), h, beta);
            for (name, obs) in observables(&lat, &fams) {
                let fd = (plus.expectation(&obs).unwrap() - minus.expectation(&obs).unwrap()) / (2.0 * FD_STEP);
                let exact = beta * fam.len() as f64 * sg.truncated_duhamel(&obs, &o_p).unwrap();
                assert!(relative(fd, exact) <= 1e-6, "p={p} f={name} fd={fd} exact={exact}");
            }
            let psi = |s: &SpectralGibbs| s.pressure_density(&lat).psi;
            let fd = (psi(&plus) - psi(&minus)) / (2.0 * FD_STEP);
            let exact = beta * fam.len() as f64 / lat.volume() as f64 * sg.expectation(&o_p).unwrap();
            assert!(relative(fd, exact) <= 1e-6, "psi p={p} fd={fd} exact={exact}");
        }
    }
}

#[test]
fn diagonal_fast_path_matches_dense() {
    let (lat, fams) = chain(4);
    let h = assemble_hamiltonian(&lat, &fams, &couplings(), 0.0).unwrap();
    assert!(h.is_diagonal());
    for beta in [0.3, 2.0, 25.0] {
        let fast = SpectralGibbs::new(&h, beta).unwrap();
        let dense = SpectralGibbs::from_dense(h.to_dense(), beta).unwrap();
        assert!(fast.is_classical() && !dense.is_classical());
        assert!((fast.log_z() - dense.log_z()).abs() < 1e-10);
        for (_, a) in observables(&lat, &fams) {
            assert!((fast.expectation(&a).unwrap() - dense.expectation(&a).unwrap()).abs() < 1e-10);
            for (_, b) in observables(&lat, &fams) {
                let d = (fast.duhamel(&a, &b).unwrap() - dense.duhamel(&a, &b).unwrap()).abs();
                assert!(d < 1e-10);
            }
        }
    }
}

#[test]
fn large_beta_pressure_tracks_ground_energy() {
    let (lat, fams) = chain(3);
    let j = CouplingSample::from_values(vec![vec![0.2, -0.4, 0.1], vec![1.0, 0.5, -0.7]]);
    let h = assemble_hamiltonian(&lat, &fams, &j, 0.0).unwrap();
    let e0 = h.diag().iter().copied().fold(f64::INFINITY, f64::min);
    let beta = 200.0;
    let sg = SpectralGibbs::new(&h, beta).unwrap();
    let psi = sg.pressure_density(&lat).psi;
    let leading = -beta * e0 / 3.0;
    assert!(psi >= leading && psi - leading <= (8f64).ln() / 3.0);
}

fn arb_system() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (
        prop::collection::vec(-2.0..2.0f64, 3),
        prop::collection::vec(-2.0..2.0f64, 3),
        0.0..2.5f64,
        0.01..8.0f64,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlations_are_bounded((j1, j2, h, beta) in arb_system()) {
        let (lat, fams) = chain(3);
        let sg = gibbs(&lat, &fams, &CouplingSample::from_values(vec![j1, j2]), h, beta);
        let ops: Vec<Observable> = (1..8).map(|m| Observable::Diagonal(z_diagonal(3, m))).collect();
        for a in &ops {
            prop_assert!(sg.expectation(a).unwrap().abs() <= 1.0 + 1e-12);
            for b in &ops {
                let ab = sg.duhamel(a, b).unwrap();
                let ba = sg.duhamel(b, a).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12);
                prop_assert!(sg.truncated_duhamel(a, b).unwrap().abs() <= 2.0 + 1e-12);
            }
            // Duhamel is a positive inner product bounded by the Gibbs one.
            let aa = sg.duhamel(a, a).unwrap();
            let gibbs_aa = sg.expectation(&a.product(a).unwrap()).unwrap();
            prop_assert!(aa >= -1e-12 && aa <= gibbs_aa + 1e-12);
        }
    }

    #[test]
    fn probabilities_normalized((j1, j2, h, beta) in arb_system()) {
        let (lat, fams) = chain(3);
        let sg = gibbs(&lat, &fams, &CouplingSample::from_values(vec![j1, j2]), h, beta);
        let total: f64 = sg.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(sg.energies().windows(2).all(|w| w[0] <= w[1]));
    }
}
