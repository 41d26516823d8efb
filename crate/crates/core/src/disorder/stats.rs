use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Mc,
    Quadrature { order: usize },
    Enumeration,
}

impl Method {
    /// Exact methods carry no sampling error.
    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::Mc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mc => f.write_str("mc"),
            Method::Quadrature { order } => write!(f, "quadrature{order}"),
            Method::Enumeration => f.write_str("enumeration"),
        }
    }
}

/// A disorder-averaged estimate. `error` is the jackknife standard error for
/// Monte Carlo and zero for quadrature and enumeration, whose remaining
/// error is deterministic (quadrature truncation is tracked by its order).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderAverage {
    pub estimate: f64,
    pub error: f64,
    pub method: Method,
    pub n: usize,
}

/// Jackknife estimate and standard error of `f` applied to column means.
///
/// `columns[c][i]` is observable `c` on sample `i`.
pub fn jackknife<F>(columns: &[&[f64]], f: F) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let Some(first) = columns.first() else {
        return Err(Error::Empty("jackknife columns"));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::Empty("jackknife samples"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: columns.iter().map(|c| c.len()).find(|&l| l != n).unwrap_or(n),
        });
    }
    let sums: Vec<f64> = columns.iter().map(|c| c.iter().sum()).collect();
    let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let full = f(&means);
    if n == 1 {
        return Ok((full, 0.0));
    }
    let mut loo = vec![0.0; columns.len()];
    let thetas: Vec<f64> = (0..n)
        .map(|i| {
            for (c, col) in columns.iter().enumerate() {
                loo[c] = (sums[c] - col[i]) / (n - 1) as f64;
            }
            f(&loo)
        })
        .collect();
    let mean_theta = thetas.iter().sum::<f64>() / n as f64;
    let var = thetas.iter().map(|t| (t - mean_theta).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok((full, var.sqrt()))
}

pub fn jackknife_mean(values: &[f64]) -> Result<(f64, f64)> {
    jackknife(&[values], |m| m[0])
}

/// Averages per-sample values. Monte Carlo ignores `weights` (equal weights)
/// and reports a jackknife error; exact methods take the weighted sum.
pub fn disorder_average(values: &[f64], weights: &[f64], method: Method) -> Result<DisorderAverage> {
    if values.is_empty() {
        return Err(Error::Empty("disorder average"));
    }
    let (estimate, error) = match method {
        Method::Mc => jackknife_mean(values)?,
        _ => {
            if weights.len() != values.len() {
                return Err(Error::Dimension {
                    expected: values.len(),
                    got: weights.len(),
                });
            }
            (values.iter().zip(weights).map(|(v, w)| v * w).sum(), 0.0)
        }
    };
    Ok(DisorderAverage {
        estimate,
        error,
        method,
        n: values.len(),
    })
}
