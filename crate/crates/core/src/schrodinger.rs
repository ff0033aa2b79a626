//! Minimum relative entropy couplings with prescribed marginals.
//!
//! The value `𝔻(Q_X, Q_Y || P_XY) = min D(Q_XY || P_XY)` over couplings of
//! `Q_X` and `Q_Y` is computed by iterative proportional fitting in the log
//! domain. The scaling potentials double as a dual certificate. A closed form
//! for `2 x 2` tables and a direct evaluation of the variational formula
//! `-log ∫ e^{-c} ∏ P_i^{s_i}` complete the module.

use serde::Serialize;

use crate::dist::{FiniteDist, JointDist};
use crate::error::{Error, Result};
use crate::measures::kl_raw;
use crate::xreal::{log_sum_exp_iter, xmul, XReal};

/// Default L1 tolerance on the row marginals.
pub const DEFAULT_MARGINAL_TOL: f64 = 1e-12;
/// Default iteration cap for IPF.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Two target marginals and the reference joint law.
#[derive(Debug, Clone)]
pub struct CouplingProblem {
    pub pxy: JointDist,
    pub qx: FiniteDist,
    pub qy: FiniteDist,
}

/// How a coupling solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouplingStatus {
    /// IPF reached the marginal tolerance.
    Converged,
    /// A target marginal charges a letter the reference marginal does not; value `+inf`.
    NotAbsolutelyContinuous,
    /// No coupling is supported inside the support of `P_XY`; value `+inf`.
    Infeasible,
}

/// Output of [`min_entropy_coupling`].
#[derive(Debug, Clone, Serialize)]
pub struct CouplingSolution {
    /// Row-major optimal coupling; empty when the value is infinite.
    pub coupling: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub value_nats: f64,
    /// Primal value minus the dual value of the returned potentials.
    pub dual_gap: f64,
    pub iterations: usize,
    /// L1 error of the row marginals at exit (columns are exact).
    pub marginal_error: f64,
    pub status: CouplingStatus,
    /// Row potentials `u = log(Q/P) - v`; `-inf` on rows outside the support of `Q_X`.
    pub log_u: Vec<f64>,
    /// Column potentials; `-inf` on columns outside the support of `Q_Y`.
    pub log_v: Vec<f64>,
}

impl CouplingSolution {
    fn infinite(prob: &CouplingProblem, status: CouplingStatus) -> CouplingSolution {
        CouplingSolution {
            coupling: Vec::new(),
            nx: prob.pxy.nx(),
            ny: prob.pxy.ny(),
            value_nats: f64::INFINITY,
            dual_gap: 0.0,
            iterations: 0,
            marginal_error: f64::INFINITY,
            status,
            log_u: Vec::new(),
            log_v: Vec::new(),
        }
    }

    pub fn value(&self) -> XReal {
        XReal::from_f64(self.value_nats)
    }

    /// The coupling as a validated joint distribution, if finite.
    pub fn coupling_dist(&self) -> Option<JointDist> {
        if self.coupling.is_empty() {
            None
        } else {
            JointDist::from_flat(self.nx, self.ny, &self.coupling).ok()
        }
    }
}

impl CouplingProblem {
    pub fn new(pxy: JointDist, qx: FiniteDist, qy: FiniteDist) -> Result<CouplingProblem> {
        if qx.len() != pxy.nx() {
            return Err(Error::AlphabetMismatch { left: pxy.nx(), right: qx.len() });
        }
        if qy.len() != pxy.ny() {
            return Err(Error::AlphabetMismatch { left: pxy.ny(), right: qy.len() });
        }
        Ok(CouplingProblem { pxy, qx, qy })
    }

    /// The dual objective `-log Σ P e^{f+g} + E_{Q_X}[f] + E_{Q_Y}[g]`.
    ///
    /// Entries equal to `-inf` are allowed on letters outside the target supports.
    pub fn dual_pair_value(&self, logf: &[f64], logg: &[f64]) -> Result<f64> {
        if logf.len() != self.pxy.nx() || logg.len() != self.pxy.ny() {
            return Err(Error::AlphabetMismatch { left: self.pxy.nx() + self.pxy.ny(), right: logf.len() + logg.len() });
        }
        if logf.iter().chain(logg).any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Invalid("dual potentials must be finite or -inf".into()));
        }
        let ny = self.pxy.ny();
        let terms = self
            .pxy
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(k, &p)| p.ln() + logf[k / ny] + logg[k % ny]);
        let lz = log_sum_exp_iter(terms);
        let ef: f64 = self.qx.probs().iter().zip(logf).map(|(&q, &f)| xmul(q, f)).sum();
        let eg: f64 = self.qy.probs().iter().zip(logg).map(|(&q, &g)| xmul(q, g)).sum();
        let v = -lz + ef + eg;
        if v.is_nan() {
            return Err(Error::NotANumber { context: "dual_pair_value" });
        }
        Ok(v)
    }
}

/// Edmonds-Karp maximum flow on a small dense graph with float capacities.
fn max_flow(cap: &mut [Vec<f64>], s: usize, t: usize) -> f64 {
    let n = cap.len();
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 1e-15 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut aug = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = prev[v];
            aug = aug.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= aug;
            cap[v][u] += aug;
            v = u;
        }
        flow += aug;
    }
}

/// True when some coupling of `qx`, `qy` is supported inside the support of `pxy`.
pub fn coupling_feasible(pxy: &JointDist, qx: &[f64], qy: &[f64]) -> bool {
    let (nx, ny) = (pxy.nx(), pxy.ny());
    let n = nx + ny + 2;
    let (s, t) = (nx + ny, nx + ny + 1);
    let mut cap = vec![vec![0.0; n]; n];
    for x in 0..nx {
        cap[s][x] = qx[x];
        for y in 0..ny {
            if pxy.get(x, y) > 0.0 {
                cap[x][nx + y] = f64::INFINITY;
            }
        }
    }
    for y in 0..ny {
        cap[nx + y][t] = qy[y];
    }
    max_flow(&mut cap, s, t) >= 1.0 - 1e-12
}

/// Solves the minimum relative entropy coupling problem by log-domain IPF.
pub fn min_entropy_coupling(prob: &CouplingProblem, marginal_tol: f64, max_iter: usize) -> Result<CouplingSolution> {
    if !(marginal_tol > 0.0) {
        return Err(Error::OutOfRange { what: "marginal_tol", value: marginal_tol });
    }
    let (px, py) = prob.pxy.marginals();
    if !prob.qx.abs_cont(&px) || !prob.qy.abs_cont(&py) {
        return Ok(CouplingSolution::infinite(prob, CouplingStatus::NotAbsolutelyContinuous));
    }
    let (nx, ny) = (prob.pxy.nx(), prob.pxy.ny());
    let qx = prob.qx.probs();
    let qy = prob.qy.probs();
    if !coupling_feasible(&prob.pxy, qx, qy) {
        return Ok(CouplingSolution::infinite(prob, CouplingStatus::Infeasible));
    }
    if qx == px.probs() && qy == py.probs() {
        return Ok(CouplingSolution {
            coupling: prob.pxy.probs().to_vec(),
            nx,
            ny,
            value_nats: 0.0,
            dual_gap: 0.0,
            iterations: 0,
            marginal_error: 0.0,
            status: CouplingStatus::Converged,
            log_u: vec![0.0; nx],
            log_v: vec![0.0; ny],
        });
    }
    let mut lp = vec![f64::NEG_INFINITY; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let p = prob.pxy.get(x, y);
            if p > 0.0 && qx[x] > 0.0 && qy[y] > 0.0 {
                lp[x * ny + y] = p.ln();
            }
        }
    }
    let lqx: Vec<f64> = qx.iter().map(|q| q.ln()).collect();
    let lqy: Vec<f64> = qy.iter().map(|q| q.ln()).collect();
    let mut u = vec![0.0; nx];
    let mut v = vec![0.0; ny];
    for x in 0..nx {
        if qx[x] == 0.0 {
            u[x] = f64::NEG_INFINITY;
        }
    }
    let mut iterations = 0;
    let mut err = f64::INFINITY;
    let mut prev_err = f64::INFINITY;
    let mut rises = 0usize;
    let mut damping = false;
    let update_v = |u: &[f64], v: &mut [f64]| {
        for y in 0..ny {
            if qy[y] == 0.0 {
                v[y] = f64::NEG_INFINITY;
                continue;
            }
            let l = log_sum_exp_iter((0..nx).map(|x| lp[x * ny + y] + u[x]));
            v[y] = lqy[y] - l;
        }
    };
    let row_error = |u: &[f64], v: &[f64]| -> f64 {
        (0..nx)
            .map(|x| {
                let m: f64 = (0..ny).map(|y| (lp[x * ny + y] + u[x] + v[y]).exp()).sum();
                let m = if m.is_nan() { 0.0 } else { m };
                (m - qx[x]).abs()
            })
            .sum()
    };
    update_v(&u, &mut v);
    while iterations < max_iter {
        iterations += 1;
        for x in 0..nx {
            if qx[x] == 0.0 {
                continue;
            }
            let l = log_sum_exp_iter((0..ny).map(|y| lp[x * ny + y] + v[y]));
            let target = lqx[x] - l;
            u[x] = if damping { 0.5 * u[x] + 0.5 * target } else { target };
        }
        update_v(&u, &mut v);
        err = row_error(&u, &v);
        if err <= marginal_tol {
            break;
        }
        if err > prev_err {
            rises += 1;
            if rises >= 3 {
                damping = true;
            }
        } else {
            rises = 0;
        }
        prev_err = err;
    }
    if err > marginal_tol {
        return Err(Error::NoConvergence { iterations, residual: err });
    }
    let mut coupling = vec![0.0; nx * ny];
    let mut value = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let w = lp[x * ny + y] + u[x] + v[y];
            if w > f64::NEG_INFINITY {
                let q = w.exp();
                coupling[x * ny + y] = q;
                value += q * (u[x] + v[y]);
            }
        }
    }
    let value = value.max(0.0);
    let dual = prob.dual_pair_value(&u, &v)?;
    Ok(CouplingSolution {
        coupling,
        nx,
        ny,
        value_nats: value,
        dual_gap: value - dual,
        iterations,
        marginal_error: err,
        status: CouplingStatus::Converged,
        log_u: u,
        log_v: v,
    })
}

/// Convenience wrapper returning `𝔻(Q_X, Q_Y || P_XY)` in nats with default settings.
pub fn dd_value(pxy: &JointDist, qx: &[f64], qy: &[f64]) -> Result<f64> {
    let prob = CouplingProblem::new(pxy.clone(), FiniteDist::new(qx)?, FiniteDist::new(qy)?)?;
    Ok(min_entropy_coupling(&prob, DEFAULT_MARGINAL_TOL, DEFAULT_MAX_ITER)?.value_nats)
}

/// Optimal `Q(0,0)` for a strictly positive `2 x 2` table with marginals `(a, 1-a)`, `(b, 1-b)`.
///
/// The optimum equates the cross ratio of the coupling with that of `pxy`.
pub fn coupling_2x2_cell(pxy: &JointDist, a: f64, b: f64) -> f64 {
    let (p00, p01, p10, p11) = (pxy.get(0, 0), pxy.get(0, 1), pxy.get(1, 0), pxy.get(1, 1));
    if a + b > 1.0 {
        let flipped = JointDist::from_flat(2, 2, &[p11, p10, p01, p00]).expect("valid table");
        let p = coupling_2x2_cell(&flipped, 1.0 - a, 1.0 - b);
        return clamp_cell(p - 1.0 + a + b, a, b);
    }
    let kappa = (p00 * p11) / (p01 * p10);
    let bb = (kappa - 1.0) * (a + b) + 1.0;
    let disc = (bb * bb - 4.0 * (kappa - 1.0) * kappa * a * b).max(0.0);
    let denom = bb + disc.sqrt();
    let p = if denom > 0.0 { 2.0 * kappa * a * b / denom } else { a.min(b) };
    clamp_cell(p, a, b)
}

fn clamp_cell(p: f64, a: f64, b: f64) -> f64 {
    p.max((a + b - 1.0).max(0.0)).min(a.min(b))
}

/// `𝔻` in nats for a strictly positive `2 x 2` table, via the closed-form optimal cell.
pub fn coupling_2x2_value(pxy: &JointDist, a: f64, b: f64) -> f64 {
    let (px, py) = pxy.marginals();
    if a == px.probs()[0] && b == py.probs()[0] {
        return 0.0;
    }
    let p = coupling_2x2_cell(pxy, a, b);
    let q = [p, a - p, b - p, 1.0 - a - b + p];
    let q = q.map(|v| v.max(0.0));
    kl_raw(&q, pxy.probs())
}

/// Strategy for evaluating `𝔻` inside sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum CouplingSolver {
    /// Always iterate IPF.
    Ipf,
    /// Closed form for strictly positive `2 x 2` tables, IPF otherwise.
    #[default]
    Auto,
}

impl CouplingSolver {
    /// `𝔻(qx, qy || pxy)` in nats; `+inf` when no absolutely continuous coupling exists.
    pub fn value(self, pxy: &JointDist, qx: &[f64], qy: &[f64]) -> Result<f64> {
        if self == CouplingSolver::Auto && pxy.is_binary() && pxy.probs().iter().all(|&p| p > 0.0) {
            return Ok(coupling_2x2_value(pxy, qx[0], qy[0]));
        }
        let (px, py) = pxy.marginals();
        let absent = |q: &[f64], p: &FiniteDist| q.iter().zip(p.probs()).any(|(&a, &b)| a > 0.0 && b == 0.0);
        if absent(qx, &px) || absent(qy, &py) {
            return Ok(f64::INFINITY);
        }
        let prob = CouplingProblem {
            pxy: pxy.clone(),
            qx: FiniteDist::new(qx)?,
            qy: FiniteDist::new(qy)?,
        };
        Ok(min_entropy_coupling(&prob, 1e-13, DEFAULT_MAX_ITER)?.value_nats)
    }
}

/// `-log β` with `β = Σ_x e^{-c(x)} ∏_i P_i(x)^{s_i}`.
///
/// Powers follow `0^s = 0` for `s > 0`, `0^0 = 1`, `0^s = inf` for `s < 0`,
/// and a product containing both `0` and `inf` factors is `0`.
/// `β = 0` yields `+inf` and `β = inf` yields `-inf`.
pub fn variational_log_integral(dists: &[FiniteDist], weights: &[f64], cost: &[XReal]) -> Result<XReal> {
    let k = check_variational(dists, weights, cost)?;
    let mut terms = Vec::with_capacity(k);
    for x in 0..k {
        let mut has_zero = cost[x].is_pos_inf();
        let mut has_inf = cost[x].is_neg_inf();
        let mut acc = if cost[x].is_finite() { -cost[x].get() } else { 0.0 };
        for (d, &s) in dists.iter().zip(weights) {
            let p = d.probs()[x];
            if p == 0.0 {
                if s > 0.0 {
                    has_zero = true;
                } else if s < 0.0 {
                    has_inf = true;
                }
            } else {
                acc += s * p.ln();
            }
        }
        terms.push(if has_zero {
            f64::NEG_INFINITY
        } else if has_inf {
            f64::INFINITY
        } else {
            acc
        });
    }
    XReal::new(-log_sum_exp_iter(terms.iter().copied()))
}

fn check_variational(dists: &[FiniteDist], weights: &[f64], cost: &[XReal]) -> Result<usize> {
    if dists.is_empty() {
        return Err(Error::Empty);
    }
    if dists.len() != weights.len() {
        return Err(Error::AlphabetMismatch { left: dists.len(), right: weights.len() });
    }
    let k = dists[0].len();
    for d in dists {
        d.check_same(&dists[0])?;
    }
    if cost.len() != k {
        return Err(Error::AlphabetMismatch { left: k, right: cost.len() });
    }
    let sw: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite()) || (sw - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("weights must be finite and sum to 1, got sum {sw}")));
    }
    Ok(k)
}

/// The objective `Σ_i s_i D(Q || P_i) + E_Q[c]` at a point `q` absolutely
/// continuous with respect to every `P_i`; `None` otherwise.
pub fn variational_objective(dists: &[FiniteDist], weights: &[f64], cost: &[XReal], q: &[f64]) -> Option<f64> {
    let mut total = 0.0;
    for (d, &s) in dists.iter().zip(weights) {
        let dv = kl_raw(q, d.probs());
        if !dv.is_finite() {
            return None;
        }
        total += s * dv;
    }
    for (&qx, c) in q.iter().zip(cost) {
        if qx > 0.0 {
            if !c.is_finite() {
                return None;
            }
            total += qx * c.get();
        }
    }
    Some(total)
}

/// Minimizes [`variational_objective`] over the simplex lattice with spacing `step`.
///
/// Supports alphabets of size 2 and 3.
pub fn variational_grid_minimum(dists: &[FiniteDist], weights: &[f64], cost: &[XReal], step: f64) -> Result<f64> {
    let k = check_variational(dists, weights, cost)?;
    let m = (1.0 / step).round() as usize;
    if m == 0 {
        return Err(Error::OutOfRange { what: "grid step", value: step });
    }
    let mut best = f64::INFINITY;
    let mut consider = |q: &[f64]| {
        if let Some(v) = variational_objective(dists, weights, cost, q) {
            if v < best {
                best = v;
            }
        }
    };
    match k {
        1 => consider(&[1.0]),
        2 => {
            for i in 0..=m {
                let a = i as f64 / m as f64;
                consider(&[a, 1.0 - a]);
            }
        }
        3 => {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let a = i as f64 / m as f64;
                    let b = j as f64 / m as f64;
                    consider(&[a, b, ((m - i - j) as f64 / m as f64).max(0.0)]);
                }
            }
        }
        _ => return Err(Error::Unsupported(format!("grid minimization on an alphabet of size {k}"))),
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs(rho: f64) -> JointDist {
        JointDist::dsbs(rho).unwrap()
    }

    fn fd(v: &[f64]) -> FiniteDist {
        FiniteDist::new(v).unwrap()
    }

    #[test]
    fn trivial_marginals_give_zero() {
        let p = JointDist::new(&[vec![0.2, 0.3], vec![0.1, 0.4]]).unwrap();
        let (px, py) = p.marginals();
        let sol = min_entropy_coupling(&CouplingProblem::new(p.clone(), px, py).unwrap(), 1e-12, 1000).unwrap();
        assert!(sol.value_nats.abs() < 1e-14);
        for (a, b) in sol.coupling.iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-13);
        }
        let d = dsbs(0.9);
        let h = fd(&[0.5, 0.5]);
        let sol = min_entropy_coupling(&CouplingProblem::new(d, h.clone(), h).unwrap(), 1e-12, 1000).unwrap();
        assert!(sol.value_nats.abs() < 1e-14);
    }

    #[test]
    fn dsbs_quarter_anchor() {
        let q = fd(&[0.25, 0.75]);
        let sol = min_entropy_coupling(&CouplingProblem::new(dsbs(0.9), q.clone(), q).unwrap(), 1e-12, 100_000).unwrap();
        assert_eq!(sol.status, CouplingStatus::Converged);
        assert!((sol.value_nats - 0.137_862_826_994_100_6).abs() < 1e-10);
        assert!((sol.value_nats / 2f64.ln() - 0.19898).abs() < 1e-4);
        let p_star = (181.0 - 271f64.sqrt()) / 720.0;
        assert!((sol.coupling[0] - p_star).abs() < 1e-10);
        assert!((p_star - 0.228525).abs() < 1e-6);
        assert!(sol.dual_gap.abs() < 1e-10);
        assert!((coupling_2x2_cell(&dsbs(0.9), 0.25, 0.25) - p_star).abs() < 1e-15);
        assert!((coupling_2x2_value(&dsbs(0.9), 0.25, 0.25) - sol.value_nats).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_non_absolutely_continuous() {
        let p = JointDist::new(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let sol = min_entropy_coupling(
            &CouplingProblem::new(p.clone(), fd(&[0.5, 0.5]), fd(&[0.3, 0.7])).unwrap(),
            1e-12,
            1000,
        )
        .unwrap();
        assert_eq!(sol.status, CouplingStatus::Infeasible);
        assert_eq!(sol.value(), XReal::INF);
        let p2 = JointDist::new(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        let sol = min_entropy_coupling(&CouplingProblem::new(p2, fd(&[0.5, 0.5]), fd(&[0.5, 0.5])).unwrap(), 1e-12, 10)
            .unwrap();
        assert_eq!(sol.status, CouplingStatus::NotAbsolutelyContinuous);
    }

    #[test]
    fn zero_cells_stay_zero() {
        let p = JointDist::new(&[vec![0.3, 0.2, 0.0], vec![0.0, 0.25, 0.25]]).unwrap();
        let sol = min_entropy_coupling(&CouplingProblem::new(p, fd(&[0.6, 0.4]), fd(&[0.2, 0.5, 0.3])).unwrap(), 1e-12, 100_000)
            .unwrap();
        assert_eq!(sol.coupling[2], 0.0);
        assert_eq!(sol.coupling[3], 0.0);
        assert!(sol.dual_gap > -1e-10 && sol.dual_gap < 1e-8);
    }

    #[test]
    fn product_form_of_optimum() {
        let p = JointDist::new(&[vec![0.1, 0.2, 0.05], vec![0.15, 0.1, 0.4]]).unwrap();
        let prob = CouplingProblem::new(p.clone(), fd(&[0.7, 0.3]), fd(&[0.2, 0.3, 0.5])).unwrap();
        let sol = min_entropy_coupling(&prob, 1e-12, 100_000).unwrap();
        for x in 0..2 {
            for y in 0..3 {
                let lhs = (sol.coupling[x * 3 + y] / p.get(x, y)).ln();
                assert!((lhs - sol.log_u[x] - sol.log_v[y]).abs() < 1e-8);
            }
        }
        let recomputed = kl_raw(&sol.coupling, p.probs());
        assert!((recomputed - sol.value_nats).abs() < 1e-12);
        assert!(prob.dual_pair_value(&[0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_ipf_for_asymmetric_table() {
        let p = JointDist::new(&[vec![0.5, 0.1], vec![0.15, 0.25]]).unwrap();
        for &(a, b) in &[(0.1, 0.2), (0.8, 0.9), (0.5, 0.05), (0.95, 0.3), (0.999, 0.001)] {
            let ipf = CouplingSolver::Ipf.value(&p, &[a, 1.0 - a], &[b, 1.0 - b]).unwrap();
            let cf = coupling_2x2_value(&p, a, b);
            assert!((ipf - cf).abs() < 1e-10, "{a} {b}: {ipf} vs {cf}");
        }
    }

    #[test]
    fn variational_examples() {
        let p = fd(&[0.3, 0.7]);
        let zero = [XReal::ZERO, XReal::ZERO];
        assert!(variational_log_integral(&[p.clone()], &[1.0], &zero).unwrap().get().abs() < 1e-15);
        assert!(variational_log_integral(&[p.clone(), p.clone()], &[2.0, -1.0], &zero).unwrap().get().abs() < 1e-15);
        let v = variational_log_integral(&[fd(&[0.5, 0.5]), fd(&[0.9, 0.1])], &[0.5, 0.5], &zero).unwrap().get();
        let oracle = -(0.45f64.sqrt() + 0.05f64.sqrt()).ln();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 0.111_571_775_657_104_86).abs() < 1e-14);
        let g = variational_grid_minimum(&[fd(&[0.5, 0.5]), fd(&[0.9, 0.1])], &[0.5, 0.5], &zero, 1e-3).unwrap();
        assert!((g - v).abs() < 1e-4);
    }

    #[test]
    fn variational_degenerate_beta() {
        let zero = [XReal::ZERO, XReal::ZERO];
        let v = variational_log_integral(&[fd(&[1.0, 0.0]), fd(&[0.0, 1.0])], &[0.5, 0.5], &zero).unwrap();
        assert_eq!(v, XReal::INF);
        let v = variational_log_integral(&[fd(&[0.5, 0.5]), fd(&[0.0, 1.0])], &[2.0, -1.0], &zero).unwrap();
        assert_eq!(v, XReal::NEG_INF);
        let v = variational_log_integral(&[fd(&[0.5, 0.5])], &[1.0], &[XReal::INF, XReal::INF]).unwrap();
        assert_eq!(v, XReal::INF);
    }
}
