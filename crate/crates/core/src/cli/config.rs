//! Declarative experiment configuration.
//!
//! A config is one TOML file. Every optional key has an explicit default,
//! and the resolved config (defaults filled in) is echoed into each JSON
//! report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disorder::{nishimori_point_with, DeterministicField, DisorderMethod, Ensemble};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, BondFamily, InteractionShape, Lattice};
use crate::nishimori::{Budget, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub side: usize,
    pub dim: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

/// One family `B_p`, generated by the translates of each shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub p: usize,
    pub shapes: Vec<Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    /// Ignored when `nishimori` is set.
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
    /// Take β from the ensemble's Nishimori point. Every non-inert order
    /// must share one β.
    #[serde(default)]
    pub nishimori: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub enumeration: f64,
    pub quadrature: f64,
    pub mc_sigmas: f64,
    /// Fraction of Monte Carlo checks that must fall within `mc_sigmas`.
    pub mc_pass_fraction: f64,
    /// Smallest acceptable bound margin and chain step violation.
    pub bound_margin: f64,
    pub fd_relative: f64,
    pub gauge: f64,
    pub nm_moment: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            enumeration: 1e-10,
            quadrature: 1e-6,
            mc_sigmas: 3.0,
            mc_pass_fraction: 0.95,
            bound_margin: 1e-9,
            fd_relative: 1e-6,
            gauge: 1e-10,
            nm_moment: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SweepSuite {
    Identities,
    #[default]
    Bounds,
    Susceptibility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub suite: SweepSuite,
    /// Empty grids keep the base value.
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    /// Mean of the p = 1 family; also the field probe grid.
    #[serde(default)]
    pub mu1: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            suite: SweepSuite::default(),
            beta: Vec::new(),
            h: Vec::new(),
            mu1: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfigSection {
    /// Random `(J, τ)` pairs checked by `verify-gauge`.
    pub samples: usize,
}

impl Default for GaugeConfigSection {
    fn default() -> Self {
        Self { samples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("gaugelab-out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub families: Vec<FamilyConfig>,
    pub ensemble: Ensemble,
    pub thermal: ThermalConfig,
    pub disorder: DisorderMethod,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub deterministic_field: DeterministicField,
    /// Multiplies every classical β. Anything other than 1 is an
    /// off-manifold control whose rows never fail a run.
    #[serde(default = "one")]
    pub classical_scale: f64,
    #[serde(default)]
    pub gauge: GaugeConfigSection,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

fn keyed(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(key, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .and_then(|s| text.get(..s.start))
                .and_then(|head| head.lines().rev().find(|l| l.trim_start().starts_with('[')))
                .map(|l| l.trim().trim_matches(|c| c == '[' || c == ']').to_string())
                .unwrap_or_else(|| "<root>".into());
            Error::config(key, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks everything that does not need a disorder sample.
    pub fn validate(&self) -> Result<()> {
        self.lattice()?;
        self.families()?;
        self.ensemble.validate().map_err(keyed("ensemble"))?;
        if !(self.thermal.beta.is_finite() && self.thermal.beta >= 0.0) {
            return Err(Error::config("thermal.beta", "must be finite and non-negative"));
        }
        if !self.thermal.h.is_finite() {
            return Err(Error::config("thermal.h", "must be finite"));
        }
        if !(self.classical_scale.is_finite() && self.classical_scale > 0.0) {
            return Err(Error::config("classical_scale", "must be positive"));
        }
        match self.disorder {
            DisorderMethod::Mc { samples: 0 } => return Err(Error::config("disorder.samples", "must be positive")),
            DisorderMethod::Quadrature { order: 0 } => {
                return Err(Error::config("disorder.order", "must be positive"))
            }
            DisorderMethod::Quadrature { .. } if !matches!(self.ensemble, Ensemble::Gaussian(_)) => {
                return Err(Error::config("disorder.method", "quadrature needs a gaussian ensemble"))
            }
            DisorderMethod::Enumeration if !matches!(self.ensemble, Ensemble::Binomial(_)) => {
                return Err(Error::config("disorder.method", "enumeration needs a binomial ensemble"))
            }
            _ => {}
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.enumeration", t.enumeration),
            ("tolerances.quadrature", t.quadrature),
            ("tolerances.mc_sigmas", t.mc_sigmas),
            ("tolerances.bound_margin", t.bound_margin),
            ("tolerances.fd_relative", t.fd_relative),
            ("tolerances.gauge", t.gauge),
            ("tolerances.nm_moment", t.nm_moment),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, "must be finite and non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&t.mc_pass_fraction) {
            return Err(Error::config("tolerances.mc_pass_fraction", "must lie in [0, 1]"));
        }
        self.beta()?;
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let l = &self.lattice;
        Lattice::with_cap(l.side, l.dim, self.budget.quantum_spins).map_err(keyed("lattice"))
    }

    pub fn families(&self) -> Result<Vec<BondFamily>> {
        let lat = self.lattice()?;
        if self.families.is_empty() {
            return Err(Error::config("families", "at least one family is required"));
        }
        let mut seen = Vec::new();
        self.families
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let key = format!("families[{i}]");
                if seen.contains(&f.p) {
                    return Err(Error::config(key, format!("order p = {} listed twice", f.p)));
                }
                seen.push(f.p);
                if f.shapes.is_empty() {
                    return Err(Error::config(key, "needs at least one shape"));
                }
                let shapes = f
                    .shapes
                    .iter()
                    .map(|s| {
                        let shape = InteractionShape::new(s.clone()).map_err(keyed(&key))?;
                        if shape.order() != f.p {
                            return Err(Error::config(
                                &key,
                                format!("shape has {} offsets but p = {}", shape.order(), f.p),
                            ));
                        }
                        Ok(shape)
                    })
                    .collect::<Result<Vec<_>>>()?;
                BondFamily::from_shapes(&lat, &shapes, self.lattice.boundary).map_err(keyed(&key))
            })
            .collect()
    }

    /// Quantum β, either explicit or from the Nishimori point.
    pub fn beta(&self) -> Result<f64> {
        if !self.thermal.nishimori {
            return Ok(self.thermal.beta);
        }
        let nm = nishimori_point_with(&self.ensemble, DeterministicField::Reject, Some(0.0))
            .map_err(keyed("thermal.nishimori"))?;
        nm.common_beta(&self.ensemble).ok_or_else(|| {
            Error::config(
                "thermal.nishimori",
                format!("orders do not share one Nishimori β ({nm}); set thermal.beta instead"),
            )
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let mut scn = Scenario::new(
            self.lattice()?,
            self.families()?,
            self.ensemble.clone(),
            self.beta()?,
            self.thermal.h,
            self.disorder.clone(),
        );
        scn.seed = self.seed;
        scn.budget = self.budget;
        scn.deterministic_field = self.deterministic_field;
        scn.classical_scale = self.classical_scale;
        Ok(scn)
    }

    /// The config as it was actually run: β resolved, defaults explicit.
    pub fn resolved(&self) -> Result<Self> {
        let mut out = self.clone();
        out.thermal.beta = self.beta()?;
        Ok(out)
    }
}
