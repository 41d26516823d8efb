//! Hypercubic lattices and translate-generated bond families.
//!
//! Sites of an `L^d` lattice are numbered so that coordinate `k` contributes
//! `x_k * L^k`; site 0 is the origin. A bond is a sorted set of distinct
//! sites. Families are stored in lexicographic bond order so the coupling
//! vector of a sample lines up with the same bonds on every run.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice accepted by [`Lattice::new`]; matches the classical
/// enumeration budget.
pub const DEFAULT_SITE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    side: usize,
    dim: usize,
    volume: usize,
}

impl Lattice {
    pub fn new(side: usize, dim: usize) -> Result<Self> {
        Self::with_cap(side, dim, DEFAULT_SITE_CAP)
    }

    /// Builds `[0, side-1]^dim`, rejecting volumes above `cap`.
    pub fn with_cap(side: usize, dim: usize, cap: usize) -> Result<Self> {
        if side == 0 || dim == 0 {
            return Err(Error::Lattice(format!(
                "side and dimension must be positive (side={side}, dim={dim})"
            )));
        }
        let volume = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .ok_or_else(|| Error::Lattice(format!("{side}^{dim} overflows")))?;
        if volume > cap {
            return Err(Error::Budget {
                what: "lattice sites",
                requested: volume as u128,
                limit: cap as u128,
            });
        }
        Ok(Self { side, dim, volume })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        (0..self.dim)
            .map(|_| {
                let c = rest % self.side;
                rest /= self.side;
                c
            })
            .collect()
    }

    pub fn site(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: coords.len(),
            });
        }
        let mut site = 0;
        for &c in coords.iter().rev() {
            if c >= self.side {
                return Err(Error::Lattice(format!(
                    "coordinate {c} outside [0, {}]",
                    self.side - 1
                )));
            }
            site = site * self.side + c;
        }
        Ok(site)
    }

    /// Translates `origin` by `offset`. `None` when an open boundary is crossed.
    fn translate(&self, origin: &[usize], offset: &[i64], boundary: Boundary) -> Option<usize> {
        let side = self.side as i64;
        let mut site = 0usize;
        for k in (0..self.dim).rev() {
            let raw = origin[k] as i64 + offset[k];
            let c = match boundary {
                Boundary::Periodic => raw.rem_euclid(side),
                Boundary::Open if (0..side).contains(&raw) => raw,
                Boundary::Open => return None,
            };
            site = site * self.side + c as usize;
        }
        Some(site)
    }
}

/// A shape `A_p`: `p` distinct offset vectors, one of which is the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct InteractionShape {
    offsets: Vec<Vec<i64>>,
}

impl InteractionShape {
    pub fn new(offsets: Vec<Vec<i64>>) -> Result<Self> {
        let Some(first) = offsets.first() else {
            return Err(Error::Shape("no offsets".into()));
        };
        let dim = first.len();
        if dim == 0 || offsets.iter().any(|o| o.len() != dim) {
            return Err(Error::Shape("offsets must share a positive dimension".into()));
        }
        if !offsets.iter().any(|o| o.iter().all(|&c| c == 0)) {
            return Err(Error::Shape("offsets must contain the origin".into()));
        }
        let distinct: BTreeSet<_> = offsets.iter().collect();
        if distinct.len() != offsets.len() {
            return Err(Error::Shape("offsets must be distinct".into()));
        }
        Ok(Self { offsets })
    }

    /// Single-site shape `{0}` in `dim` dimensions.
    pub fn site(dim: usize) -> Self {
        Self {
            offsets: vec![vec![0; dim]],
        }
    }

    /// Nearest-neighbour pair along axis `axis`.
    pub fn pair(dim: usize, axis: usize) -> Self {
        let mut step = vec![0; dim];
        step[axis] = 1;
        Self {
            offsets: vec![vec![0; dim], step],
        }
    }

    pub fn order(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        self.offsets[0].len()
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }
}

impl TryFrom<Vec<Vec<i64>>> for InteractionShape {
    type Error = Error;

    fn try_from(offsets: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(offsets)
    }
}

impl From<InteractionShape> for Vec<Vec<i64>> {
    fn from(shape: InteractionShape) -> Self {
        shape.offsets
    }
}

/// Sorted, duplicate-free set of lattice sites.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bond(Vec<usize>);

impl Bond {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Self(sites)
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bit mask with bit `i` set for every site `i` in the bond.
    pub fn mask(&self) -> usize {
        self.0.iter().fold(0, |m, &i| m | (1 << i))
    }
}

impl fmt::Display for Bond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

/// The set `B_p` of all translates of the shapes of order `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondFamily {
    order: usize,
    boundary: Boundary,
    bonds: Vec<Bond>,
}

impl BondFamily {
    /// Translates every shape over the lattice and collects the distinct
    /// site sets. All shapes must have the same order.
    pub fn from_shapes(lat: &Lattice, shapes: &[InteractionShape], boundary: Boundary) -> Result<Self> {
        let Some(first) = shapes.first() else {
            return Err(Error::Shape("family has no shapes".into()));
        };
        let order = first.order();
        let mut bonds = BTreeSet::new();
        for shape in shapes {
            if shape.order() != order {
                return Err(Error::Shape(format!(
                    "mixed orders {} and {} in one family",
                    order,
                    shape.order()
                )));
            }
            if shape.dim() != lat.dim() {
                return Err(Error::Dimension {
                    expected: lat.dim(),
                    got: shape.dim(),
                });
            }
            for origin in 0..lat.volume() {
                let base = lat.coords(origin);
                let sites: Option<Vec<usize>> = shape
                    .offsets()
                    .iter()
                    .map(|off| lat.translate(&base, off, boundary))
                    .collect();
                let Some(sites) = sites else { continue };
                let bond = Bond::new(sites);
                if bond.len() != order {
                    return Err(Error::Shape(format!(
                        "shape {:?} wraps onto itself on a side-{} lattice",
                        shape.offsets(),
                        lat.side()
                    )));
                }
                bonds.insert(bond);
            }
        }
        if bonds.is_empty() {
            return Err(Error::EmptyFamily(format!(
                "order {order} shapes do not fit a side-{} {boundary} lattice",
                lat.side()
            )));
        }
        Ok(Self {
            order,
            boundary,
            bonds: bonds.into_iter().collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }
}

pub fn build_lattice(side: usize, dim: usize, cap: usize) -> Result<Lattice> {
    Lattice::with_cap(side, dim, cap)
}

pub fn enumerate_bonds(lat: &Lattice, shape: &InteractionShape, boundary: Boundary) -> Result<BondFamily> {
    BondFamily::from_shapes(lat, std::slice::from_ref(shape), boundary)
}
