//! Exponent functionals on finite alphabets.
//!
//! Covers the pairing exponent `φ(Q_X, Q_Y)`, the piecewise `η`, the level-set
//! surfaces `φ̲` and `φ̄`, the curves `φ_r`, one-shot and envelope-form forward
//! exponents, and Rényi concentration functions.
//!
//! Divergence level sets are swept along mixture rays from `P` toward boundary
//! points of the simplex. On a binary alphabet the two rays toward the vertices
//! cover each level set exactly; on larger alphabets the sweep yields upper
//! bounds for infima and lower bounds for suprema.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{FiniteDist, JointDist};
use crate::envelopes::{lower_convex_envelope, upper_concave_envelope, EnvelopeResult};
use crate::error::{Error, Result};
use crate::grid::{uniform_axis, GridFunction};
use crate::measures::{canon_order, holder_conjugate, kl_raw, renyi, OrderPair};
use crate::numeric::{bisect, golden_min};
use crate::schrodinger::{min_entropy_coupling, CouplingProblem, CouplingSolver};
use crate::xreal::{log_sum_exp, xdiv, XReal};

/// Largest alphabet accepted by the level-set sweeps.
pub const MAX_SWEEP_ALPHABET: usize = 6;

const INNER_TOL: f64 = 1e-12;
const INNER_MAX_ROUNDS: usize = 10_000;

/// Resolution and solver settings shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceConfig {
    /// Number of grid points per divergence axis.
    pub resolution: usize,
    /// Ray targets placed in the interior of each simplex edge (alphabets of size 3 or more).
    pub edge_points: usize,
    pub solver: CouplingSolver,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig { resolution: 201, edge_points: 8, solver: CouplingSolver::Auto }
    }
}

/// `φ(Q_X, Q_Y) = -log Σ P_XY (Q_X/P_X)^{1/p} (Q_Y/P_Y)^{1/q}` in nats.
///
/// Cells with `P_XY = 0` contribute nothing, a zero factor annihilates an
/// infinite one, and an infinite term gives `-inf`.
pub fn phi_pair(pxy: &JointDist, qx: &FiniteDist, qy: &FiniteDist, p: f64, q: f64) -> Result<XReal> {
    for v in [p, q] {
        if v.is_nan() || canon_order(v) == 0.0 {
            return Err(Error::OrderOutOfRange(format!("phi_pair needs nonzero orders, got {v}")));
        }
    }
    if qx.len() != pxy.nx() {
        return Err(Error::AlphabetMismatch { left: pxy.nx(), right: qx.len() });
    }
    if qy.len() != pxy.ny() {
        return Err(Error::AlphabetMismatch { left: pxy.ny(), right: qy.len() });
    }
    let (px, py) = pxy.marginals();
    let (ex, ey) = (xdiv(1.0, canon_order(p))?, xdiv(1.0, canon_order(q))?);
    let log_ratio = |a: f64, b: f64| if a > 0.0 { (a / b).ln() } else { f64::NEG_INFINITY };
    let part = |e: f64, l: f64| if e == 0.0 { 0.0 } else { e * l };
    let mut terms = Vec::with_capacity(pxy.probs().len());
    for x in 0..pxy.nx() {
        for y in 0..pxy.ny() {
            let w = pxy.get(x, y);
            if w == 0.0 {
                continue;
            }
            let a = part(ex, log_ratio(qx.probs()[x], px.probs()[x]));
            let b = part(ey, log_ratio(qy.probs()[y], py.probs()[y]));
            if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                continue;
            }
            if a == f64::INFINITY || b == f64::INFINITY {
                return Ok(XReal::NEG_INF);
            }
            terms.push(w.ln() + a + b);
        }
    }
    if terms.is_empty() {
        return Ok(XReal::INF);
    }
    XReal::new(-log_sum_exp(&terms))
}

/// The piecewise function `η_{p,p̂}(α, s)`.
pub fn eta(p: f64, phat: f64, alpha: f64, s: f64) -> Result<XReal> {
    let o = OrderPair::new(p, phat)?;
    let d = alpha - s;
    let v = if o.p >= 0.0 && o.phat >= 0.0 {
        xdiv(d, o.p)?.max(xdiv(d, o.phat)?)
    } else if o.p > 0.0 && o.phat < 0.0 {
        xdiv(d, o.p)?
    } else if o.phat > 0.0 && o.p < 0.0 {
        xdiv(d, o.phat)?
    } else {
        f64::NEG_INFINITY
    };
    XReal::new(v)
}

fn both_nonpositive(o: OrderPair) -> bool {
    o.p <= 0.0 && o.phat <= 0.0
}

/// Boundary points of the probability simplex on `k` letters used as ray targets:
/// the vertices, plus `edge_points` equally spaced interior points on every edge when `k >= 3`.
pub fn ray_targets(k: usize, edge_points: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..k {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        out.push(v);
    }
    if k >= 3 {
        for i in 0..k {
            for j in i + 1..k {
                for m in 1..=edge_points {
                    let w = m as f64 / (edge_points + 1) as f64;
                    let mut v = vec![0.0; k];
                    v[i] = w;
                    v[j] = 1.0 - w;
                    out.push(v);
                }
            }
        }
    }
    out
}

fn support_targets(p: &FiniteDist, edge_points: usize) -> Vec<Vec<f64>> {
    let support = p.support();
    ray_targets(support.len(), edge_points)
        .into_iter()
        .map(|t| {
            let mut full = vec![0.0; p.len()];
            for (k, &i) in support.iter().enumerate() {
                full[i] = t[k];
            }
            full
        })
        .collect()
}

fn mix(p: &[f64], target: &[f64], lam: f64) -> Vec<f64> {
    p.iter().zip(target).map(|(&a, &b)| (1.0 - lam) * a + lam * b).collect()
}

fn renyi_level(q: &[f64], p: &FiniteDist, order: f64) -> f64 {
    let qd = FiniteDist::new(q).expect("mixture of distributions is a distribution");
    renyi(&qd, p, order).expect("same alphabet").get()
}

/// Distributions on the rays from `p` toward `targets` whose Rényi divergence
/// of the given order from `p` equals `level`. Rays that never reach the level are skipped.
pub fn level_set(p: &FiniteDist, order: f64, level: f64, targets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let base = p.probs();
    let mut out = Vec::new();
    if level == 0.0 {
        out.push(base.to_vec());
        return out;
    }
    for target in targets {
        let top = renyi_level(target, p, order);
        let reach = |v: f64| {
            if top >= 0.0 {
                level > 0.0 && level <= v
            } else {
                level < 0.0 && level >= v
            }
        };
        let close = top.is_finite() && (level - top).abs() <= 1e-12 * top.abs().max(1.0);
        if close {
            out.push(target.clone());
            continue;
        }
        if !reach(top) {
            continue;
        }
        let lam = bisect(|l| renyi_level(&mix(base, target, l), p, order) - level, 0.0, 1.0, 1e-15);
        out.push(mix(base, target, lam));
    }
    out
}

fn check_sweep_size(pxy: &JointDist) -> Result<()> {
    for k in [pxy.nx(), pxy.ny()] {
        if k > MAX_SWEEP_ALPHABET {
            return Err(Error::AlphabetTooLarge(k));
        }
    }
    Ok(())
}

fn level_axis(p: &FiniteDist, resolution: usize) -> Result<Vec<f64>> {
    let top = p.alpha_max();
    if top <= 0.0 {
        return Err(Error::Invalid("a marginal is a point mass, so every divergence level is 0".into()));
    }
    if resolution < 2 {
        return Err(Error::TooFewPoints(resolution));
    }
    let mut axis = uniform_axis(0.0, top, resolution);
    let breaks: Vec<f64> = p.probs().iter().filter(|&&m| m > 0.0).map(|m| -m.ln()).filter(|&b| b < top).collect();
    let near = 1e-9 * top;
    axis.retain(|v| !breaks.iter().any(|b| (v - b).abs() <= near));
    axis.extend(breaks);
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    Ok(axis)
}

/// The surfaces `φ̲` and `φ̄` sampled on `[0, α_max] x [0, β_max]` in nats.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSurfaces {
    pub phi_lower: GridFunction,
    pub phi_upper: GridFunction,
}

/// Samples `φ̲(s, t)` and `φ̄(s, t)` by sweeping the KL level sets of both marginals.
///
/// Points where no swept pair reaches the levels are masked (`+inf` for `φ̲`, `-inf` for `φ̄`).
pub fn phi_surfaces(pxy: &JointDist, cfg: &SurfaceConfig) -> Result<LevelSurfaces> {
    check_sweep_size(pxy)?;
    let (px, py) = pxy.marginals();
    let s_axis = level_axis(&px, cfg.resolution)?;
    let t_axis = level_axis(&py, cfg.resolution)?;
    let tx = support_targets(&px, cfg.edge_points);
    let ty = support_targets(&py, cfg.edge_points);
    let xs: Vec<Vec<Vec<f64>>> = s_axis.par_iter().map(|&s| level_set(&px, 1.0, s, &tx)).collect();
    let ys: Vec<Vec<Vec<f64>>> = t_axis.par_iter().map(|&t| level_set(&py, 1.0, t, &ty)).collect();
    let nt = t_axis.len();
    let pairs: Result<Vec<(f64, f64)>> = (0..s_axis.len() * nt)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for qx in &xs[i] {
                for qy in &ys[j] {
                    let v = cfg.solver.value(pxy, qx, qy)?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            Ok((lo, hi))
        })
        .collect();
    let (lo, hi): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
    Ok(LevelSurfaces {
        phi_lower: GridFunction::new_2d(s_axis.clone(), t_axis.clone(), lo)?,
        phi_upper: GridFunction::new_2d(s_axis, t_axis, hi)?,
    })
}

/// `Θ̲` on the grid: the lower convex envelope of `φ̲` followed by the suffix minimum.
pub fn theta_lower_grid(phi_lower: &GridFunction) -> Result<GridFunction> {
    Ok(lower_convex_envelope(phi_lower)?.grid.suffix_min())
}

/// `ψ̲(α, β) = inf_{s >= α, t >= β} φ̲(s, t)` on the grid of `phi_lower`.
///
/// Every coupling satisfies `D(Q_XY || P_XY) >= max(D(Q_X || P_X), D(Q_Y || P_Y))`, with
/// equality for `Q_X P_{Y|X}` (respectively `Q_Y P_{X|Y}`). Grid points where the
/// single-letter concentration `η̄_{1→1}` reaches the other level therefore take the
/// value `max(α, β)` exactly; the remaining points use the suffix minimum of `φ̲`.
pub fn psi_lower_grid(pxy: &JointDist, phi_lower: &GridFunction, cfg: &SurfaceConfig) -> Result<GridFunction> {
    let (sa, ta) = (&phi_lower.axes[0], &phi_lower.axes[1]);
    let mut values = phi_lower.suffix_min().values;
    let reach = |j: &JointDist, axis: &[f64]| -> Result<Vec<f64>> {
        axis.par_iter()
            .map(|&a| Ok(renyi_concentration_single(j, 1.0, 1.0, a, Bound::Upper, cfg)?.get()))
            .collect()
    };
    let reach_y = reach(pxy, sa)?;
    let reach_x = reach(&pxy.transpose(), ta)?;
    let nt = ta.len();
    for (i, &s) in sa.iter().enumerate() {
        for (j, &t) in ta.iter().enumerate() {
            if (s >= t && reach_y[i] >= t) || (t >= s && reach_x[j] >= s) {
                values[i * nt + j] = s.max(t);
            }
        }
    }
    Ok(GridFunction::new_2d(sa.clone(), ta.clone(), values)?.suffix_min())
}

/// `Θ̄` on the grid: the upper concave envelope of `φ̄` followed by the prefix maximum.
pub fn theta_upper_grid(phi_upper: &GridFunction) -> Result<GridFunction> {
    Ok(upper_concave_envelope(phi_upper)?.grid.prefix_max())
}

/// Grid points where `Θ̄` coincides with the upper concave envelope of `φ̄` within `tol`.
pub fn effective_region(phi_upper: &GridFunction, tol: f64) -> Result<Vec<bool>> {
    let env = upper_concave_envelope(phi_upper)?.grid;
    let theta = env.prefix_max();
    Ok(env.values.iter().zip(&theta.values).map(|(a, b)| (a - b).abs() <= tol).collect())
}

/// Conditional rows `P_{Y|X=x}` for letters with `P_X(x) > 0`.
fn channel(pxy: &JointDist) -> (FiniteDist, FiniteDist, Vec<Option<Vec<f64>>>) {
    let (px, py) = pxy.marginals();
    let rows = (0..pxy.nx())
        .map(|x| {
            let m = px.probs()[x];
            (m > 0.0).then(|| (0..pxy.ny()).map(|y| pxy.get(x, y) / m).collect())
        })
        .collect();
    (px, py, rows)
}

/// `min_{Q_Y} 𝔻(Q_X, Q_Y || P_XY) - D(Q_Y || P_Y) / r` for `r < 0` or `r >= 1`, in nats.
///
/// The objective is convex in `Q_{Y|X}` for these orders. Alternates the Gibbs
/// update `Q_{Y|X=x} ∝ P_{Y|X=x} (P_Y/Q_Y)^c` with `c = -1/r` against an update
/// of `Q_Y` (damped for `r < 0`), and returns the objective at the final coupling.
pub fn phi_q_inner(pxy: &JointDist, qx: &[f64], r: f64) -> Result<f64> {
    let (v, residual) = gibbs_inner(pxy, qx, r)?;
    if residual < INNER_TOL {
        Ok(v)
    } else {
        Err(Error::NoConvergence { iterations: INNER_MAX_ROUNDS, residual })
    }
}

/// Objective of [`phi_q_inner`] at the last iterate and the final change in `Q_Y`.
fn gibbs_inner(pxy: &JointDist, qx: &[f64], r: f64) -> Result<(f64, f64)> {
    if !(r < 0.0 || r >= 1.0) {
        return Err(Error::OutOfRange { what: "r (the alternating solver needs r < 0 or r >= 1)", value: r });
    }
    let (px, py, rows) = channel(pxy);
    if qx.iter().zip(px.probs()).any(|(&a, &b)| a > 0.0 && b == 0.0) {
        return Ok((f64::INFINITY, 0.0));
    }
    let c = -1.0 / canon_order(r);
    let damping = if c > 0.0 { 1.0 / (1.0 + c) } else { 1.0 };
    let ny = pxy.ny();
    let pyv = py.probs();
    let mut qy = pyv.to_vec();
    let mut cond = vec![vec![0.0; ny]; pxy.nx()];
    let mut change = f64::INFINITY;
    for _ in 0..INNER_MAX_ROUNDS {
        let mut next = vec![0.0; ny];
        for (x, row) in rows.iter().enumerate() {
            let (Some(row), true) = (row, qx[x] > 0.0) else { continue };
            let logs: Vec<f64> = (0..ny)
                .map(|y| if row[y] > 0.0 { row[y].ln() + c * (pyv[y].ln() - qy[y].ln()) } else { f64::NEG_INFINITY })
                .collect();
            let z = log_sum_exp(&logs);
            for y in 0..ny {
                cond[x][y] = (logs[y] - z).exp();
                next[y] += qx[x] * cond[x][y];
            }
        }
        change = next.iter().zip(&qy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < INNER_TOL {
            break;
        }
        for y in 0..ny {
            qy[y] = (1.0 - damping) * qy[y] + damping * next[y];
        }
    }
    let mut value = 0.0;
    let mut marg = vec![0.0; ny];
    for (x, row) in rows.iter().enumerate() {
        let (Some(row), true) = (row, qx[x] > 0.0) else { continue };
        value += qx[x] * (qx[x] / px.probs()[x]).ln();
        for y in 0..ny {
            let q = cond[x][y];
            marg[y] += qx[x] * q;
            if q > 0.0 {
                value += qx[x] * q * (q / row[y]).ln();
            }
        }
    }
    let dy: f64 = marg.iter().zip(pyv).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).ln()).sum();
    Ok((value + c * dy.max(0.0), change))
}

/// Extremum of `g` on `[0, 1]` and its location: the best of `samples` uniform
/// points, refined by golden section inside the bracket around the best sample.
fn ray_extremum(g: impl Fn(f64) -> Result<f64>, lower: bool, samples: usize) -> Result<(f64, f64)> {
    let sign = if lower { 1.0 } else { -1.0 };
    let grid = uniform_axis(0.0, 1.0, samples.max(3));
    let vals: Vec<f64> = grid.iter().map(|&l| Ok(sign * g(l)?)).collect::<Result<_>>()?;
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty grid");
    let (lo, hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let mut err = None;
    let (at, refined) = golden_min(
        |l| match g(l) {
            Ok(v) => sign * v,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if refined < vals[k] { (at, sign * refined) } else { (grid[k], sign * vals[k]) })
}

/// Points sampled per ray in the `0 < r < 1` branch of [`phi_q_curve`] when `|Y| >= 3`.
const RAY_SAMPLES: usize = 33;
/// Best rays used as starting points of [`ascend_qy`].
const ASCENT_STARTS: usize = 3;
const ASCENT_ROUNDS: usize = 500;

/// Local maximum of `𝔻(Q_X, Q_Y) - λ D(Q_Y || P_Y)` over `Q_Y`, starting from `start`.
///
/// The gradient of `𝔻` in `Q_Y` is the column potential `v` of the optimal coupling,
/// so each step moves `Q_Y` geometrically toward `P_Y e^{v/λ}`. Steps are accepted
/// only when they increase the objective, and the support of `start` is kept.
fn ascend_qy(pxy: &JointDist, qx: &FiniteDist, start: Vec<f64>, lambda: f64) -> Result<f64> {
    let (_, py) = pxy.marginals();
    let py = py.probs();
    let eval = |qy: &[f64]| -> Result<(f64, Vec<f64>)> {
        let prob = CouplingProblem::new(pxy.clone(), qx.clone(), FiniteDist::new(qy)?)?;
        let sol = min_entropy_coupling(&prob, 1e-13, 100_000)?;
        Ok((sol.value_nats - lambda * kl_raw(qy, py), sol.log_v))
    };
    let mut q = start;
    let (mut f, mut v) = eval(&q)?;
    if !f.is_finite() || v.is_empty() {
        return Ok(f);
    }
    let mut eta: f64 = 1.0;
    for _ in 0..ASCENT_ROUNDS {
        let logt: Vec<f64> =
            (0..q.len()).map(|y| if q[y] > 0.0 { py[y].ln() + v[y] / lambda } else { f64::NEG_INFINITY }).collect();
        let z = log_sum_exp(&logt);
        let improved = loop {
            let logs: Vec<f64> = (0..q.len())
                .map(|y| if q[y] > 0.0 { (1.0 - eta) * q[y].ln() + eta * (logt[y] - z) } else { f64::NEG_INFINITY })
                .collect();
            let norm = log_sum_exp(&logs);
            let cand: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
            let (fc, vc) = eval(&cand)?;
            if fc > f {
                let gain = fc - f;
                q = cand;
                f = fc;
                v = vc;
                eta = (2.0 * eta).min(1.0);
                break Some(gain);
            }
            eta /= 2.0;
            if eta < 1e-12 {
                break None;
            }
        };
        match improved {
            Some(gain) if gain > 1e-15 * f.abs().max(1.0) => {}
            _ => break,
        }
    }
    Ok(f)
}

/// `φ_r(s)` on `[0, α_max]` in nats.
///
/// For `r >= 1` it is `inf φ(Q_X, Q_Y) - D(Q_Y || P_Y)/r` over `D(Q_X || P_X) = s`
/// and for `0 < r < 1` the corresponding supremum with `φ` replaced by the coupling
/// value. For `r >= 1` the inner minimum over `Q_Y` is [`phi_q_inner`]; when its
/// iteration stalls, and for `0 < r < 1`, `Q_Y` runs over the rays toward the support
/// targets, each sampled and refined by golden section. For `0 < r < 1` and `|Y| >= 3`
/// the best rays then seed [`ascend_qy`].
/// For `r < 0` it is the maximum over the KL level set of [`phi_q_inner`].
pub fn phi_q_curve(pxy: &JointDist, r: f64, cfg: &SurfaceConfig) -> Result<GridFunction> {
    let r = canon_order(r);
    if r == 0.0 || r.is_nan() {
        return Err(Error::OutOfRange { what: "r", value: r });
    }
    check_sweep_size(pxy)?;
    let (px, py) = pxy.marginals();
    let axis = level_axis(&px, cfg.resolution)?;
    let targets = support_targets(&px, cfg.edge_points);
    if r < 0.0 {
        let values: Result<Vec<f64>> = axis
            .par_iter()
            .map(|&s| {
                let mut best = f64::NEG_INFINITY;
                for qx in level_set(&px, 1.0, s, &targets) {
                    best = best.max(phi_q_inner(pxy, &qx, r)?);
                }
                Ok(best)
            })
            .collect();
        return GridFunction::new_1d(axis, values?);
    }
    let lower = r >= 1.0;
    let inv_r = xdiv(1.0, r)?;
    let ty = support_targets(&py, cfg.edge_points);
    let samples = if py.len() <= 2 { cfg.resolution } else { RAY_SAMPLES.min(cfg.resolution) };
    let values: Result<Vec<f64>> = axis
        .par_iter()
        .map(|&s| {
            let mut best = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
            for qx in level_set(&px, 1.0, s, &targets) {
                if lower {
                    let (v, residual) = gibbs_inner(pxy, &qx, r)?;
                    if residual < INNER_TOL {
                        best = best.min(v);
                        continue;
                    }
                }
                let mut found = Vec::with_capacity(ty.len());
                for target in &ty {
                    let g = |l: f64| {
                        let qy = mix(py.probs(), target, l);
                        let d = cfg.solver.value(pxy, &qx, &qy)?;
                        Ok(d - kl_raw(&qy, py.probs()) * inv_r)
                    };
                    let (at, v) = ray_extremum(g, lower, samples)?;
                    best = if lower { best.min(v) } else { best.max(v) };
                    found.push((v, mix(py.probs(), target, at)));
                }
                if !lower && py.len() >= 3 {
                    found.sort_by(|a, b| b.0.total_cmp(&a.0));
                    let qxd = FiniteDist::new(&qx)?;
                    for (_, start) in found.into_iter().take(ASCENT_STARTS) {
                        best = best.max(ascend_qy(pxy, &qxd, start, inv_r)?);
                    }
                }
            }
            Ok(best)
        })
        .collect();
    GridFunction::new_1d(axis, values?)
}

/// The envelope of a `φ_r` curve (lower convex for `r >= 1`, upper concave otherwise)
/// and `Θ_r` on the grid (its suffix minimum, respectively prefix maximum).
pub fn theta_r_curve(phi_r: &GridFunction, r: f64) -> Result<(EnvelopeResult, GridFunction)> {
    if canon_order(r) >= 1.0 {
        let env = lower_convex_envelope(phi_r)?;
        let theta = env.grid.suffix_min();
        Ok((env, theta))
    } else {
        let env = upper_concave_envelope(phi_r)?;
        let theta = env.grid.prefix_max();
        Ok((env, theta))
    }
}

/// `Θ_r(α)` evaluated exactly on the envelope returned by [`theta_r_curve`].
pub fn theta_r_at(env: &EnvelopeResult, r: f64, alpha: f64) -> Result<f64> {
    if canon_order(r) >= 1.0 {
        env.increasing_lower(alpha, 0.0)
    } else {
        env.increasing_upper(alpha, 0.0)
    }
}

/// Orders and entropy levels of a two-function exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentQuery {
    pub x_orders: OrderPair,
    pub y_orders: OrderPair,
    pub alpha: f64,
    pub beta: f64,
}

impl ExponentQuery {
    pub fn new(p: f64, phat: f64, q: f64, qhat: f64, alpha: f64, beta: f64) -> Result<ExponentQuery> {
        Ok(ExponentQuery { x_orders: OrderPair::new(p, phat)?, y_orders: OrderPair::new(q, qhat)?, alpha, beta })
    }

    /// The same query with `p` and `p̂` exchanged.
    pub fn swap_x(self) -> ExponentQuery {
        ExponentQuery { x_orders: self.x_orders.swapped(), ..self }
    }

    /// The same query with `q` and `q̂` exchanged.
    pub fn swap_y(self) -> ExponentQuery {
        ExponentQuery { y_orders: self.y_orders.swapped(), ..self }
    }
}

/// Forward (infimum) or reverse (supremum) exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Reverse,
}

fn entropy_level_set(p: &FiniteDist, o: OrderPair, level: f64, edge_points: usize) -> Result<Vec<Vec<f64>>> {
    let order = xdiv(o.phat, o.p)?;
    let mutual = !(o.p > 0.0 && o.phat >= 0.0);
    let set = level_set(p, order, level, &support_targets(p, edge_points));
    Ok(set
        .into_iter()
        .filter(|q| !mutual || q.iter().zip(p.probs()).all(|(&a, &b)| b == 0.0 || a > 0.0))
        .collect())
}

/// One-shot exponent: the infimum (forward) or supremum (reverse) of
/// `φ(Q_X, Q_Y) + α/p + β/q` over `D_{p̂/p}(Q_X||P_X) = α`, `D_{q̂/q}(Q_Y||P_Y) = β`.
pub fn lambda_oneshot(query: &ExponentQuery, pxy: &JointDist, direction: Direction, cfg: &SurfaceConfig) -> Result<XReal> {
    check_sweep_size(pxy)?;
    let (p, q) = (query.x_orders.p, query.y_orders.p);
    for v in [p, q] {
        if v == 0.0 || v.is_infinite() {
            return Err(Error::OrderOutOfRange(format!("one-shot exponents need finite nonzero p and q, got {v}")));
        }
    }
    let (px, py) = pxy.marginals();
    let xs = entropy_level_set(&px, query.x_orders, query.alpha, cfg.edge_points)?;
    let ys = entropy_level_set(&py, query.y_orders, query.beta, cfg.edge_points)?;
    if xs.is_empty() {
        return Err(Error::InfeasibleLevel { level: query.alpha });
    }
    if ys.is_empty() {
        return Err(Error::InfeasibleLevel { level: query.beta });
    }
    let offset = query.alpha / p + query.beta / q;
    let mut best = match direction {
        Direction::Forward => XReal::INF,
        Direction::Reverse => XReal::NEG_INF,
    };
    for qx in &xs {
        let qxd = FiniteDist::new(qx)?;
        for qy in &ys {
            let v = phi_pair(pxy, &qxd, &FiniteDist::new(qy)?, p, q)?;
            let v = XReal::new(v.get() + offset)?;
            best = match direction {
                Direction::Forward => best.min(v),
                Direction::Reverse => best.max(v),
            };
        }
    }
    Ok(best)
}

fn star_objective(v: f64, s: f64, t: f64, query: &ExponentQuery) -> Result<f64> {
    let ex = eta(query.x_orders.p, query.x_orders.phat, query.alpha, s)?.get();
    let ey = eta(query.y_orders.p, query.y_orders.phat, query.beta, t)?.get();
    xadd3(v, ex, ey)
}

fn xadd3(a: f64, b: f64, c: f64) -> Result<f64> {
    crate::xreal::xadd(crate::xreal::xadd(a, b)?, c)
}

/// `Λ̲*(α, β) = inf_{s,t} φ̆(s,t) + η_{p,p̂}(α,s) + η_{q,q̂}(β,t)` evaluated
/// exactly on the lower convex envelope `phi_lower_env` of `φ̲`.
///
/// The objective is piecewise linear with kinks only on the facet edges and the
/// lines `s = α`, `t = β`, so its infimum is attained on the arrangement points of the envelope.
pub fn lambda_forward_star(phi_lower_env: &EnvelopeResult, query: &ExponentQuery) -> Result<XReal> {
    if both_nonpositive(query.x_orders) || both_nonpositive(query.y_orders) {
        return Ok(XReal::NEG_INF);
    }
    let mut best = f64::INFINITY;
    for (s, t, v) in phi_lower_env.arrangement_points(query.alpha, query.beta) {
        best = best.min(star_objective(v, s, t, query)?);
    }
    XReal::new(best)
}

/// `Λ̲*` restricted to the grid points of an envelope grid (an upper bound on the exact value).
pub fn lambda_forward_star_grid(phi_lower_breve: &GridFunction, query: &ExponentQuery) -> Result<XReal> {
    if both_nonpositive(query.x_orders) || both_nonpositive(query.y_orders) {
        return Ok(XReal::NEG_INF);
    }
    let mut best = f64::INFINITY;
    for k in 0..phi_lower_breve.values.len() {
        if phi_lower_breve.mask[k] {
            let (s, t) = phi_lower_breve.coords(k);
            best = best.min(star_objective(phi_lower_breve.values[k], s, t, query)?);
        }
    }
    XReal::new(best)
}

/// Which side of a Rényi concentration function is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    Upper,
    Lower,
}

/// Single-letter value or its dimension-free limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Letter {
    Single,
    Star,
}

/// Output distribution `Q_X ∘ P_{Y|X}`.
fn push_forward(qx: &[f64], rows: &[Option<Vec<f64>>], ny: usize) -> Vec<f64> {
    let mut qy = vec![0.0; ny];
    for (x, row) in rows.iter().enumerate() {
        if let Some(row) = row {
            for y in 0..ny {
                qy[y] += qx[x] * row[y];
            }
        }
    }
    qy
}

/// Single-letter Rényi concentration: the supremum (upper) or infimum (lower) of
/// `D_q(Q_X ∘ P_{Y|X} || P_Y)` over `D_p(Q_X || P_X) = α`.
pub fn renyi_concentration_single(pxy: &JointDist, p: f64, q: f64, alpha: f64, bound: Bound, cfg: &SurfaceConfig) -> Result<XReal> {
    check_sweep_size(pxy)?;
    let (px, py, rows) = channel(pxy);
    let set = level_set(&px, canon_order(p), alpha, &support_targets(&px, cfg.edge_points));
    if set.is_empty() {
        return Err(Error::InfeasibleLevel { level: alpha });
    }
    let mut best = match bound {
        Bound::Upper => XReal::NEG_INF,
        Bound::Lower => XReal::INF,
    };
    for qx in &set {
        let qy = FiniteDist::new(&push_forward(qx, &rows, pxy.ny()))?;
        let v = renyi(&qy, &py, q)?;
        best = match bound {
            Bound::Upper => best.max(v),
            Bound::Lower => best.min(v),
        };
    }
    Ok(best)
}

/// Rényi concentration values at several levels `alphas` (nats).
///
/// The star form is available for the upper function with `q > 1` (any `p`),
/// for `p = q = 1` (upper concave envelope of the single-letter curve), for the
/// upper function with `0 < q < 1` and `p = 1`, and for the lower function with
/// `q < 0` and `p = 1`. Other combinations return [`Error::Unsupported`].
pub fn renyi_concentration_curve(
    pxy: &JointDist,
    p: f64,
    q: f64,
    alphas: &[f64],
    bound: Bound,
    letter: Letter,
    cfg: &SurfaceConfig,
) -> Result<Vec<XReal>> {
    let (p, q) = (canon_order(p), canon_order(q));
    if q == 0.0 || q.is_infinite() || q.is_nan() {
        return Err(Error::OrderOutOfRange(format!("q must be finite and nonzero, got {q}")));
    }
    if letter == Letter::Single {
        return alphas.iter().map(|&a| renyi_concentration_single(pxy, p, q, a, bound, cfg)).collect();
    }
    let (px, _) = pxy.marginals();
    if q == 1.0 {
        if p != 1.0 || bound != Bound::Upper {
            return Err(Error::Unsupported("the star form with q = 1 is available for p = 1, upper bound".into()));
        }
        let mut axis = level_axis(&px, cfg.resolution)?;
        let top = axis[axis.len() - 1];
        axis.extend(alphas.iter().copied().filter(|a| (0.0..=top).contains(a)));
        axis.sort_by(f64::total_cmp);
        axis.dedup();
        let vals: Result<Vec<f64>> = axis
            .par_iter()
            .map(|&a| Ok(renyi_concentration_single(pxy, 1.0, 1.0, a, Bound::Upper, cfg)?.get()))
            .collect();
        let env = upper_concave_envelope(&GridFunction::new_1d(axis, vals?)?)?;
        return alphas.iter().map(|&a| XReal::new(env.eval(a, 0.0)?)).collect();
    }
    let qc = holder_conjugate(q);
    match (bound, q > 1.0) {
        (Bound::Upper, true) => {
            let curve = phi_q_curve(pxy, qc, cfg)?;
            let env = lower_convex_envelope(&curve)?;
            alphas
                .iter()
                .map(|&a| {
                    let mut gamma = f64::INFINITY;
                    for (s, _, v) in env.arrangement_points(a, 0.0) {
                        gamma = gamma.min(crate::xreal::xadd(v, eta(p, 1.0, a, s)?.get())?);
                    }
                    XReal::new(qc * (a - gamma))
                })
                .collect()
        }
        (Bound::Upper, false) if q > 0.0 && p == 1.0 => reverse_star(pxy, qc, alphas, cfg),
        (Bound::Lower, false) if q < 0.0 && p == 1.0 => reverse_star(pxy, qc, alphas, cfg),
        _ => Err(Error::Unsupported(format!(
            "no star form for the {} bound with p = {p}, q = {q}",
            if bound == Bound::Upper { "upper" } else { "lower" }
        ))),
    }
}

fn reverse_star(pxy: &JointDist, qc: f64, alphas: &[f64], cfg: &SurfaceConfig) -> Result<Vec<XReal>> {
    let curve = phi_q_curve(pxy, qc, cfg)?;
    let env = upper_concave_envelope(&curve)?;
    alphas.iter().map(|&a| XReal::new(qc * (a - env.eval(a, 0.0)?))).collect()
}

/// Rényi concentration at a single level; see [`renyi_concentration_curve`].
pub fn renyi_concentration(
    pxy: &JointDist,
    p: f64,
    q: f64,
    alpha: f64,
    bound: Bound,
    letter: Letter,
    cfg: &SurfaceConfig,
) -> Result<XReal> {
    Ok(renyi_concentration_curve(pxy, p, q, &[alpha], bound, letter, cfg)?[0])
}
