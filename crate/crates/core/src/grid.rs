//! Sampled functions on one- and two-dimensional grids of divergence levels.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values of a function on a tensor grid.
///
/// Two-dimensional values are row-major with the first axis outer:
/// `values[i * n_t + j]` is the value at `(axes[0][i], axes[1][j])`.
/// Infinite values mark points excluded from envelopes; `mask[k]` is true
/// exactly when `values[k]` is finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "an axis needs at least two points");
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

fn check_axis(a: &[f64]) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::TooFewPoints(a.len()));
    }
    if a.iter().any(|v| !v.is_finite()) || a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("grid axis must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl GridFunction {
    /// Builds a one-dimensional grid function.
    pub fn new_1d(axis: Vec<f64>, values: Vec<f64>) -> Result<GridFunction> {
        check_axis(&axis)?;
        if values.len() != axis.len() {
            return Err(Error::AlphabetMismatch { left: axis.len(), right: values.len() });
        }
        GridFunction::finish(vec![axis], values)
    }

    /// Builds a two-dimensional grid function from row-major values.
    pub fn new_2d(s_axis: Vec<f64>, t_axis: Vec<f64>, values: Vec<f64>) -> Result<GridFunction> {
        check_axis(&s_axis)?;
        check_axis(&t_axis)?;
        if values.len() != s_axis.len() * t_axis.len() {
            return Err(Error::AlphabetMismatch { left: s_axis.len() * t_axis.len(), right: values.len() });
        }
        GridFunction::finish(vec![s_axis, t_axis], values)
    }

    fn finish(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<GridFunction> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber { context: "GridFunction values" });
        }
        let mask = values.iter().map(|v| v.is_finite()).collect();
        Ok(GridFunction { axes, values, mask })
    }

    pub fn is_2d(&self) -> bool {
        self.axes.len() == 2
    }

    /// Number of points along each axis.
    pub fn shape(&self) -> (usize, usize) {
        if self.is_2d() {
            (self.axes[0].len(), self.axes[1].len())
        } else {
            (self.axes[0].len(), 1)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (_, nt) = self.shape();
        self.values[i * nt + j]
    }

    /// Coordinates of flat index `k`; the second coordinate is 0 in 1D.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        if self.is_2d() {
            let nt = self.axes[1].len();
            (self.axes[0][k / nt], self.axes[1][k % nt])
        } else {
            (self.axes[0][k], 0.0)
        }
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Largest spacing along any axis.
    pub fn max_step(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    /// Applies `f` to every value, keeping the axes.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::finish(self.axes.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Multiplies axes and values by `factor` (for example `1 / ln 2` to convert nats to bits).
    pub fn rescaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            axes: self.axes.iter().map(|a| a.iter().map(|v| v * factor).collect()).collect(),
            values: self.values.iter().map(|v| v * factor).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Suffix minimum over `{s' >= s, t' >= t}` on the grid (the grid form of
    /// the increasing lower envelope).
    pub fn suffix_min(&self) -> GridFunction {
        let (ns, nt) = self.shape();
        let mut out = self.values.clone();
        for i in (0..ns).rev() {
            for j in (0..nt).rev() {
                let mut v = out[i * nt + j];
                if i + 1 < ns {
                    v = v.min(out[(i + 1) * nt + j]);
                }
                if j + 1 < nt {
                    v = v.min(out[i * nt + j + 1]);
                }
                out[i * nt + j] = v;
            }
        }
        GridFunction::finish(self.axes.clone(), out).expect("no NaN introduced")
    }

    /// Prefix maximum over `{s' <= s, t' <= t}` on the grid.
    pub fn prefix_max(&self) -> GridFunction {
        let (ns, nt) = self.shape();
        let mut out = self.values.clone();
        for i in 0..ns {
            for j in 0..nt {
                let mut v = out[i * nt + j];
                if i > 0 {
                    v = v.max(out[(i - 1) * nt + j]);
                }
                if j > 0 {
                    v = v.max(out[i * nt + j - 1]);
                }
                out[i * nt + j] = v;
            }
        }
        GridFunction::finish(self.axes.clone(), out).expect("no NaN introduced")
    }
}
