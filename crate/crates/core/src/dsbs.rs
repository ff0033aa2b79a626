//! Closed forms for the doubly symmetric binary distribution.
//!
//! `P_XY = [[(1+ρ)/4, (1-ρ)/4], [(1-ρ)/4, (1+ρ)/4]]` with `ρ ∈ (0, 1)`.
//! Every value returned by this module is in bits.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::JointDist;
use crate::envelopes::{lower_convex_envelope, upper_concave_envelope};
use crate::error::{Error, Result};
use crate::grid::{uniform_axis, GridFunction};
use crate::numeric::{bisect, golden_min, scan_max};

/// Parameters of a doubly symmetric binary distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsbsParams {
    pub rho: f64,
    pub kappa: f64,
}

impl DsbsParams {
    pub fn new(rho: f64) -> Result<DsbsParams> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::OutOfRange { what: "rho (must lie in (0, 1))", value: rho });
        }
        let log_kappa = 2.0 * ((1.0 + rho) / (1.0 - rho)).ln();
        let kappa = log_kappa.exp();
        if !kappa.is_finite() {
            return Err(Error::OutOfRange { what: "rho (kappa overflows)", value: rho });
        }
        Ok(DsbsParams { rho, kappa })
    }

    pub fn joint(&self) -> JointDist {
        JointDist::dsbs(self.rho).expect("rho validated")
    }

    fn cells(&self) -> [f64; 4] {
        let d = (1.0 + self.rho) / 4.0;
        let o = (1.0 - self.rho) / 4.0;
        [d, o, o, d]
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn h2(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfRange { what: "h2 argument", value: a });
    }
    Ok(h2_unchecked(a))
}

fn h2_unchecked(a: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(a) + term(1.0 - a)
}

/// Inverse of `h2` restricted to `[0, 1/2]`, by bisection to `1e-14`.
pub fn h2inv(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange { what: "h2inv argument", value: v });
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    if v == 1.0 {
        return Ok(0.5);
    }
    Ok(bisect(|a| h2_unchecked(a) - v, 0.0, 0.5, 1e-15))
}

/// `D((a, 1-a) || (1/2, 1/2)) = 1 - h2(a)` in bits.
pub fn d_bin(a: f64) -> f64 {
    (1.0 - h2_unchecked(a)).max(0.0)
}

/// The optimal cell of the coupling and how far it was moved by clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PStar {
    pub p: f64,
    pub clamp_distance: f64,
}

/// Optimal `Q(0,0)` of the minimum relative entropy coupling of `(a, 1-a)` and `(b, 1-b)`.
///
/// The radical `((κ-1)(a+b) + 1 - sqrt(disc)) / (2(κ-1))` is evaluated in
/// the equivalent form `2κab / ((κ-1)(a+b) + 1 + sqrt(disc))`, which avoids
/// cancellation for large `κ`.
pub fn p_star(a: f64, b: f64, params: &DsbsParams) -> Result<PStar> {
    for (what, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { what: if what == "a" { "p_star a" } else { "p_star b" }, value: v });
        }
    }
    let k = params.kappa;
    let bb = (k - 1.0) * (a + b) + 1.0;
    let disc = bb * bb - 4.0 * k * (k - 1.0) * a * b;
    if disc < -1e-12 * bb * bb.max(1.0) {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let p = 2.0 * k * a * b / (bb + disc.max(0.0).sqrt());
    let lo = (a + b - 1.0).max(0.0);
    let hi = a.min(b);
    let clamped = p.max(lo).min(hi);
    Ok(PStar { p: clamped, clamp_distance: (clamped - p).abs() })
}

/// `D_{a,b}(p)` in bits: divergence of the coupling with `Q(0,0) = p`.
pub fn d_ab(a: f64, b: f64, p: f64, params: &DsbsParams) -> f64 {
    let q = [p, a - p, b - p, 1.0 + p - a - b];
    let c = params.cells();
    q.iter()
        .zip(c)
        .map(|(&qi, ci)| {
            let qi = qi.max(0.0);
            if qi > 0.0 {
                qi * (qi / ci).log2()
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .max(0.0)
}

/// `𝔻(a, b)` in bits.
pub fn dd(a: f64, b: f64, params: &DsbsParams) -> Result<f64> {
    if a == 0.5 && b == 0.5 {
        return Ok(0.0);
    }
    let ps = p_star(a, b, params)?;
    Ok(d_ab(a, b, ps.p, params))
}

fn dd_unchecked(a: f64, b: f64, params: &DsbsParams) -> f64 {
    dd(a, b, params).unwrap_or(f64::NAN)
}

fn level_root(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange { what: "divergence level in bits (must lie in [0, 1])", value: s });
    }
    h2inv(1.0 - s)
}

/// `φ̲(s, t) = 𝔻(h2inv(1-s), h2inv(1-t))`.
pub fn phi_lower(s: f64, t: f64, params: &DsbsParams) -> Result<f64> {
    dd(level_root(s)?, level_root(t)?, params)
}

/// `φ̄(s, t) = 𝔻(h2inv(1-s), 1 - h2inv(1-t))`.
pub fn phi_upper(s: f64, t: f64, params: &DsbsParams) -> Result<f64> {
    dd(level_root(s)?, 1.0 - level_root(t)?, params)
}

/// `ψ̲(α, β) = min_{s>=α, t>=β} φ̲(s, t)`.
///
/// `𝔻` is jointly convex with its minimum at `(1/2, 1/2)`, so the minimum over
/// the box `[0, a_α] x [0, b_β]` lies on one of the two faces adjacent to that point.
pub fn psi_lower(alpha: f64, beta: f64, params: &DsbsParams) -> Result<f64> {
    let a = level_root(alpha)?;
    let b = level_root(beta)?;
    let (_, v1) = golden_min(|y| dd_unchecked(a, y, params), 0.0, b, 1e-13);
    let (_, v2) = golden_min(|x| dd_unchecked(x, b, params), 0.0, a, 1e-13);
    Ok(v1.min(v2))
}

/// `φ_r(s)`: `min_t φ̲(s,t) - t/r` for `r >= 1` or `r < 0`, `max_t φ̄(s,t) - t/r` for `0 < r < 1`.
pub fn phi_r(s: f64, r: f64, params: &DsbsParams) -> Result<f64> {
    if r == 0.0 || r.is_nan() {
        return Err(Error::OutOfRange { what: "r", value: r });
    }
    let a = level_root(s)?;
    if r >= 1.0 || r < 0.0 {
        let (_, v) = golden_min(|b| dd_unchecked(a, b, params) - d_bin(b) / r, 0.0, 0.5, 1e-13);
        Ok(v)
    } else {
        let (_, v) = scan_max(|b| dd_unchecked(a, b, params) - d_bin(b) / r, 0.5, 1.0, 2000, 1e-13);
        Ok(v)
    }
}

/// The sampled DSBS surfaces on a uniform grid over `[0, 1]` bits.
#[derive(Debug, Clone, Serialize)]
pub struct DsbsSurfaces {
    pub params: DsbsParams,
    pub r: f64,
    pub phi_lower: GridFunction,
    pub psi_lower: GridFunction,
    pub phi_upper: GridFunction,
    pub phi_r: GridFunction,
}

fn fill_2d(axis: &[f64], f: impl Fn(f64, f64) -> Result<f64> + Sync) -> Result<GridFunction> {
    let n = axis.len();
    let values: Result<Vec<f64>> = (0..n * n).into_par_iter().map(|k| f(axis[k / n], axis[k % n])).collect();
    GridFunction::new_2d(axis.to_vec(), axis.to_vec(), values?)
}

/// Samples `φ̲`, `ψ̲`, `φ̄` on `resolution x resolution` points and `φ_r` on `resolution` points.
pub fn binary_surfaces(params: &DsbsParams, resolution: usize, r: f64) -> Result<DsbsSurfaces> {
    if resolution < 2 {
        return Err(Error::TooFewPoints(resolution));
    }
    let axis = uniform_axis(0.0, 1.0, resolution);
    let phi_lower_g = fill_2d(&axis, |s, t| phi_lower(s, t, params))?;
    let psi_lower_g = fill_2d(&axis, |s, t| psi_lower(s, t, params))?;
    let phi_upper_g = fill_2d(&axis, |s, t| phi_upper(s, t, params))?;
    let phi_r_vals: Result<Vec<f64>> = axis.par_iter().map(|&s| phi_r(s, r, params)).collect();
    Ok(DsbsSurfaces {
        params: *params,
        r,
        phi_lower: phi_lower_g,
        psi_lower: psi_lower_g,
        phi_upper: phi_upper_g,
        phi_r: GridFunction::new_1d(axis, phi_r_vals?)?,
    })
}

/// The four surfaces of the DSBS figure: `φ̲`, `Θ̲`, `Θ̄` and `Θ_{q'}`, all in bits.
#[derive(Debug, Clone, Serialize)]
pub struct Fig1Data {
    pub phi_lower: GridFunction,
    pub theta_lower: GridFunction,
    pub theta_upper: GridFunction,
    pub theta_qprime: GridFunction,
}

/// Computes the figure data for correlation `params.rho` and order `q` (so `r = q'`).
pub fn fig1_data(params: &DsbsParams, resolution: usize, q: f64) -> Result<Fig1Data> {
    let r = crate::measures::holder_conjugate(q);
    if !r.is_finite() || r == 0.0 {
        return Err(Error::OutOfRange { what: "q (its conjugate must be finite and nonzero)", value: q });
    }
    let s = binary_surfaces(params, resolution, r)?;
    let theta_lower = lower_convex_envelope(&s.psi_lower)?.grid.suffix_min();
    let theta_upper = upper_concave_envelope(&s.phi_upper)?.grid.prefix_max();
    let theta_qprime = if r >= 1.0 {
        lower_convex_envelope(&s.phi_r)?.grid.suffix_min()
    } else {
        upper_concave_envelope(&s.phi_r)?.grid.prefix_max()
    };
    Ok(Fig1Data { phi_lower: s.phi_lower, theta_lower, theta_upper, theta_qprime })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p9() -> DsbsParams {
        DsbsParams::new(0.9).unwrap()
    }

    #[test]
    fn kappa_is_exact_square() {
        assert!((p9().kappa - 361.0).abs() < 1e-10);
        assert!(DsbsParams::new(1.0).is_err());
        assert!(DsbsParams::new(0.0).is_err());
    }

    #[test]
    fn h2_examples() {
        assert_eq!(h2(0.5).unwrap(), 1.0);
        assert_eq!(h2(0.0).unwrap(), 0.0);
        assert_eq!(h2inv(0.0).unwrap(), 0.0);
        let a = h2inv(0.5).unwrap();
        assert!((a - 0.110028).abs() < 1e-6);
        assert!((h2(a).unwrap() - 0.5).abs() < 1e-13);
        assert!(h2(1.5).is_err());
        assert!(h2inv(-0.1).is_err());
    }

    #[test]
    fn p_star_examples() {
        for rho in [0.1, 0.5, 0.9] {
            let p = DsbsParams::new(rho).unwrap();
            assert!((p_star(0.5, 0.5, &p).unwrap().p - (1.0 + rho) / 4.0).abs() < 1e-15);
        }
        let ps = p_star(0.25, 0.25, &p9()).unwrap();
        assert!((ps.p - (181.0 - 271f64.sqrt()) / 720.0).abs() < 1e-15);
        assert!((ps.p - 0.228525).abs() < 1e-6);
        assert_eq!(p_star(0.0, 0.7, &p9()).unwrap().p, 0.0);
        assert_eq!(p_star(0.3, 0.0, &p9()).unwrap().p, 0.0);
    }

    #[test]
    fn dd_examples() {
        assert!(dd(0.5, 0.5, &p9()).unwrap().abs() < 1e-15);
        assert!((dd(0.25, 0.25, &p9()).unwrap() - 0.198_894_016_827_322).abs() < 1e-12);
        assert!((dd(0.0, 0.0, &p9()).unwrap() - (4.0f64 / 1.9).log2()).abs() < 1e-14);
    }

    #[test]
    fn surface_corners() {
        let p = p9();
        assert!(phi_lower(0.0, 0.0, &p).unwrap().abs() < 1e-15);
        assert!((phi_lower(1.0, 1.0, &p).unwrap() - (4.0f64 / 1.9).log2()).abs() < 1e-14);
        assert!((phi_upper(1.0, 1.0, &p).unwrap() - 40f64.log2()).abs() < 1e-12);
        for s in [0.1, 0.3, 0.77] {
            assert!(phi_lower(s, 0.0, &p).unwrap() > s);
            assert!((psi_lower(s, 0.0, &p).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_r_at_zero_is_zero_for_r_at_least_one() {
        for r in [1.0, 2.0, 5.0] {
            assert!(phi_r(0.0, r, &p9()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn stationarity_of_p_star() {
        let p = p9();
        for &(a, b) in &[(0.2, 0.3), (0.45, 0.1), (0.7, 0.6), (0.9, 0.2)] {
            let ps = p_star(a, b, &p).unwrap().p;
            let odds = ps * (1.0 + ps - a - b) - p.kappa * (a - ps) * (b - ps);
            assert!(odds.abs() < 1e-12 * p.kappa, "{a} {b} {odds}");
            let h = 1e-7;
            assert!(d_ab(a, b, ps + h, &p) >= d_ab(a, b, ps, &p));
            assert!(d_ab(a, b, ps - h, &p) >= d_ab(a, b, ps, &p));
        }
    }
}
