//! Pauli-z products and the transverse-field mixed p-spin Hamiltonian in the
//! computational basis.
//!
//! Basis state `b` assigns site `i` the z-eigenvalue `1 - 2 * ((b >> i) & 1)`,
//! so bit value 0 is spin up. Everything here is real: in this basis the
//! Hamiltonian has a diagonal coupling part and a real off-diagonal
//! transverse part, and σ^y never appears.

use nalgebra::DMatrix;

use crate::disorder::CouplingSample;
use crate::error::{Error, Result};
use crate::lattice::{Bond, BondFamily, Lattice};

/// z-eigenvalue product over the sites in `mask` for basis state `b`.
#[inline]
pub fn z_sign(b: usize, mask: usize) -> f64 {
    if (b & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Basis index for a ket label written with site 0 first, e.g. `"0101"`.
pub fn basis_index(label: &str) -> Result<usize> {
    label.chars().enumerate().try_fold(0usize, |b, (i, c)| match c {
        '0' => Ok(b),
        '1' => Ok(b | (1 << i)),
        _ => Err(Error::Parameter(format!("bad ket label {label:?}"))),
    })
}

/// An operator on the `2^N`-dimensional spin space.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// Diagonal in the computational basis; holds the diagonal.
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Observable {
    pub fn dim(&self) -> usize {
        match self {
            Observable::Diagonal(d) => d.len(),
            Observable::Dense(m) => m.nrows(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Observable::Diagonal(vec![1.0; dim])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Observable::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Observable::Dense(m) => m.clone(),
        }
    }

    /// Operator product; stays diagonal when both factors are.
    pub fn product(&self, other: &Observable) -> Result<Observable> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(match (self, other) {
            (Observable::Diagonal(a), Observable::Diagonal(b)) => {
                Observable::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Observable::Dense(self.to_dense() * other.to_dense()),
        })
    }
}

/// σ^z_X as its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct ZProduct {
    sites: Bond,
    diag: Vec<f64>,
}

impl ZProduct {
    pub fn sites(&self) -> &Bond {
        &self.sites
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn into_observable(self) -> Observable {
        Observable::Diagonal(self.diag)
    }
}

impl From<ZProduct> for Observable {
    fn from(z: ZProduct) -> Self {
        z.into_observable()
    }
}

pub fn z_diagonal(n_spins: usize, mask: usize) -> Vec<f64> {
    (0..1usize << n_spins).map(|b| z_sign(b, mask)).collect()
}

pub fn z_product(lat: &Lattice, sites: &[usize]) -> Result<ZProduct> {
    let volume = lat.volume();
    if let Some(&site) = sites.iter().find(|&&s| s >= volume) {
        return Err(Error::SiteOutOfRange { site, volume });
    }
    let sites = Bond::new(sites.to_vec());
    let diag = z_diagonal(volume, sites.mask());
    Ok(ZProduct { sites, diag })
}

/// Σ_i σ^x_i: unit entries between basis states at Hamming distance one.
pub fn transverse_term(lat: &Lattice) -> DMatrix<f64> {
    let n = lat.volume();
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        for i in 0..n {
            m[(b ^ (1 << i), b)] = 1.0;
        }
    }
    m
}

/// `o_p = |B_p|^{-1} Σ_{X ∈ B_p} σ^z_X`.
pub fn order_operator(lat: &Lattice, family: &BondFamily) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily(format!("order {}", family.order())));
    }
    let n = lat.volume();
    let masks: Vec<usize> = family.bonds().iter().map(Bond::mask).collect();
    let norm = masks.len() as f64;
    Ok((0..1usize << n)
        .map(|b| masks.iter().map(|&m| z_sign(b, m)).sum::<f64>() / norm)
        .collect())
}

/// `H = diag(coupling energies) - h Σ_i σ^x_i`, kept in structured form.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_spins: usize,
    diag: Vec<f64>,
    field: f64,
}

impl Hamiltonian {
    pub fn from_parts(n_spins: usize, diag: Vec<f64>, field: f64) -> Result<Self> {
        if diag.len() != 1 << n_spins {
            return Err(Error::Dimension {
                expected: 1 << n_spins,
                got: diag.len(),
            });
        }
        Ok(Self { n_spins, diag, field })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Diagonal coupling energies `-Σ J_X σ^z_X`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn is_diagonal(&self) -> bool {
        self.field == 0.0
    }

    /// Adds a uniform longitudinal term `-mu Σ_i σ^z_i`.
    pub fn with_longitudinal_field(&self, mu: f64) -> Self {
        let mut diag = self.diag.clone();
        for (b, e) in diag.iter_mut().enumerate() {
            let up = self.n_spins as i64 - 2 * b.count_ones() as i64;
            *e -= mu * up as f64;
        }
        Self {
            n_spins: self.n_spins,
            diag,
            field: self.field,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (b, &e) in self.diag.iter().enumerate() {
            m[(b, b)] = e;
            if self.field != 0.0 {
                for i in 0..self.n_spins {
                    m[(b ^ (1 << i), b)] = -self.field;
                }
            }
        }
        m
    }
}

/// Diagonal energies `-Σ_p Σ_X J^p_X σ^z_X` for every basis state.
pub fn coupling_energies(lat: &Lattice, families: &[BondFamily], couplings: &CouplingSample) -> Result<Vec<f64>> {
    if couplings.families() != families.len() {
        return Err(Error::MissingCoupling(format!(
            "{} families but couplings for {}",
            families.len(),
            couplings.families()
        )));
    }
    let mut terms = Vec::new();
    for (f, family) in families.iter().enumerate() {
        let values = couplings.family(f);
        if values.len() != family.len() {
            return Err(Error::MissingCoupling(format!(
                "order-{} family has {} bonds but {} couplings",
                family.order(),
                family.len(),
                values.len()
            )));
        }
        for (bond, &j) in family.bonds().iter().zip(values) {
            if bond.sites().iter().any(|&s| s >= lat.volume()) {
                return Err(Error::SiteOutOfRange {
                    site: *bond.sites().last().unwrap_or(&0),
                    volume: lat.volume(),
                });
            }
            if j != 0.0 {
                terms.push((bond.mask(), j));
            }
        }
    }
    Ok((0..1usize << lat.volume())
        .map(|b| -terms.iter().map(|&(m, j)| j * z_sign(b, m)).sum::<f64>())
        .collect())
}

pub fn assemble_hamiltonian(
    lat: &Lattice,
    families: &[BondFamily],
    couplings: &CouplingSample,
    field: f64,
) -> Result<Hamiltonian> {
    if !field.is_finite() {
        return Err(Error::Parameter(format!("transverse field {field} is not finite")));
    }
    let diag = coupling_energies(lat, families, couplings)?;
    Hamiltonian::from_parts(lat.volume(), diag, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_bonds, Boundary, InteractionShape};

    #[test]
    fn single_z() {
        let lat = Lattice::new(1, 1).unwrap();
        assert_eq!(z_product(&lat, &[0]).unwrap().diag(), &[1.0, -1.0]);
    }

    #[test]
    fn pair_z_is_tensor_product() {
        let lat = Lattice::new(2, 1).unwrap();
        assert_eq!(z_product(&lat, &[0, 1]).unwrap().diag(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn empty_z_is_identity() {
        let lat = Lattice::new(3, 1).unwrap();
        assert!(z_product(&lat, &[]).unwrap().diag().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn z_rejects_bad_site() {
        let lat = Lattice::new(3, 1).unwrap();
        assert!(matches!(
            z_product(&lat, &[3]),
            Err(Error::SiteOutOfRange { site: 3, volume: 3 })
        ));
    }

    #[test]
    fn transverse_single_site_is_pauli_x() {
        let lat = Lattice::new(1, 1).unwrap();
        let m = transverse_term(&lat);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn transverse_rows_and_trace() {
        let lat = Lattice::new(2, 1).unwrap();
        let m = transverse_term(&lat);
        for r in 0..4 {
            assert_eq!(m.row(r).iter().filter(|&&x| x == 1.0).count(), 2);
            assert_eq!(m[(r, r)], 0.0);
        }
        assert_eq!(transverse_term(&Lattice::new(3, 1).unwrap()).trace(), 0.0);
    }

    fn one_bond(lat: &Lattice, j: f64) -> (Vec<BondFamily>, CouplingSample) {
        let fam = enumerate_bonds(lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap();
        (vec![fam], CouplingSample::from_values(vec![vec![j]]))
    }

    #[test]
    fn single_site_field_only() {
        let lat = Lattice::new(1, 1).unwrap();
        let h = assemble_hamiltonian(&lat, &[], &CouplingSample::from_values(vec![]), 1.0).unwrap();
        assert_eq!(h.to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
    }

    #[test]
    fn bond_without_field_is_diagonal() {
        let lat = Lattice::new(2, 1).unwrap();
        let (fams, j) = one_bond(&lat, 1.0);
        let h = assemble_hamiltonian(&lat, &fams, &j, 0.0).unwrap();
        assert!(h.is_diagonal());
        assert_eq!(h.diag(), &[-1.0, 1.0, 1.0, -1.0]);
        let dense = h.to_dense();
        assert_eq!(dense, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, -1.0])));
    }

    #[test]
    fn bond_with_field_matches_direct_eigensolve() {
        // Oracle: characteristic polynomial of the 4x4 matrix, solved by hand.
        // H = -J zz - h (x1 + x2) splits into the symmetric sector
        // {|00>,|11>,(|01>+|10>)/√2} and the antisymmetric state with energy +J.
        // Symmetric block [[-J,0,-√2h],[0,-J,-√2h],[-√2h,-√2h,J]] gives
        // eigenvalues -J and ±√(J² + 4h²).
        let lat = Lattice::new(2, 1).unwrap();
        let (fams, j) = one_bond(&lat, 1.0);
        let h = assemble_hamiltonian(&lat, &fams, &j, 1.0).unwrap();
        let dense = h.to_dense();
        assert_eq!(dense, dense.transpose());
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let r = 5f64.sqrt();
        let expected = [-r, -1.0, 1.0, r];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn missing_coupling_is_reported() {
        let lat = Lattice::new(3, 1).unwrap();
        let fam = enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap();
        let j = CouplingSample::from_values(vec![vec![1.0, 1.0]]);
        assert!(matches!(
            assemble_hamiltonian(&lat, &[fam], &j, 0.5),
            Err(Error::MissingCoupling(_))
        ));
    }

    #[test]
    fn order_operator_entries() {
        let lat = Lattice::new(2, 1).unwrap();
        let f1 = enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap();
        let o1 = order_operator(&lat, &f1).unwrap();
        assert_eq!(o1[basis_index("00").unwrap()], 1.0);
        assert_eq!(o1[basis_index("01").unwrap()], 0.0);

        let lat4 = Lattice::new(4, 1).unwrap();
        let f2 = enumerate_bonds(&lat4, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap();
        let o2 = order_operator(&lat4, &f2).unwrap();
        assert_eq!(o2[basis_index("0101").unwrap()], -1.0);
        assert!(o2.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn longitudinal_field_matches_site_family() {
        let lat = Lattice::new(3, 1).unwrap();
        let f1 = enumerate_bonds(&lat, &InteractionShape::site(1), Boundary::Periodic).unwrap();
        let j = CouplingSample::from_values(vec![vec![0.3; 3]]);
        let direct = assemble_hamiltonian(&lat, &[f1], &j, 0.7).unwrap();
        let zero = Hamiltonian::from_parts(3, vec![0.0; 8], 0.7).unwrap();
        assert_eq!(zero.with_longitudinal_field(0.3).diag().len(), 8);
        for (a, b) in direct.diag().iter().zip(zero.with_longitudinal_field(0.3).diag()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn global_flip_symmetry_for_even_orders() {
        let lat = Lattice::new(4, 1).unwrap();
        let f2 = enumerate_bonds(&lat, &InteractionShape::pair(1, 0), Boundary::Periodic).unwrap();
        let j = CouplingSample::from_values(vec![vec![0.3, -1.2, 0.8, 2.0]]);
        let h = assemble_hamiltonian(&lat, &[f2], &j, 0.4).unwrap();
        let full = (1 << 4) - 1;
        for b in 0..16 {
            assert_eq!(h.diag()[b], h.diag()[b ^ full]);
        }
    }
}
