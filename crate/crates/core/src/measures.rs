//! Norms of every extended order, `(p, p̂)`-entropies with their continuous
//! extensions, Rényi divergences and entropy ranges.
//!
//! Orders are plain `f64` values in the extended reals; any order with
//! `|p| >= ORDER_INF` is treated as the corresponding infinity.

use serde::Serialize;

use crate::dist::FiniteDist;
use crate::error::{Error, Result};
use crate::xreal::{log_sum_exp_iter, xmul, XReal};

/// Orders at least this large in magnitude are treated as infinite.
pub const ORDER_INF: f64 = 1e6;

/// Maps large orders to the matching infinity.
pub fn canon_order(p: f64) -> f64 {
    if p >= ORDER_INF {
        f64::INFINITY
    } else if p <= -ORDER_INF {
        f64::NEG_INFINITY
    } else {
        p
    }
}

/// A nonnegative function on a finite alphabet, not identically zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphabetFunction {
    values: Vec<f64>,
}

impl AlphabetFunction {
    pub fn new(values: Vec<f64>) -> Result<AlphabetFunction> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::Invalid("function is identically zero".into()));
        }
        Ok(AlphabetFunction { values })
    }

    /// Indicator of a subset given as a membership mask.
    pub fn indicator(members: &[bool]) -> Result<AlphabetFunction> {
        AlphabetFunction::new(members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())
    }

    pub fn constant(k: usize, c: f64) -> Result<AlphabetFunction> {
        AlphabetFunction::new(vec![c; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise power `f^s` for `s > 0`.
    pub fn powf(&self, s: f64) -> Result<AlphabetFunction> {
        if s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::OutOfRange { what: "exponent of AlphabetFunction::powf", value: s });
        }
        AlphabetFunction::new(self.values.iter().map(|v| v.powf(s)).collect())
    }
}

/// A pair of orders `(p, p̂)`, never `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderPair {
    pub p: f64,
    pub phat: f64,
}

impl OrderPair {
    pub fn new(p: f64, phat: f64) -> Result<OrderPair> {
        if p.is_nan() || phat.is_nan() {
            return Err(Error::NotANumber { context: "OrderPair" });
        }
        let (p, phat) = (canon_order(p), canon_order(phat));
        if p == 0.0 && phat == 0.0 {
            return Err(Error::OrderOutOfRange("(p, p̂) = (0, 0)".into()));
        }
        Ok(OrderPair { p, phat })
    }

    pub fn swapped(self) -> OrderPair {
        OrderPair { p: self.phat, phat: self.p }
    }
}

/// Values of `f` and `log P` restricted to the support of `P`.
struct OnSupport {
    logp: Vec<f64>,
    f: Vec<f64>,
}

impl OnSupport {
    fn new(f: &AlphabetFunction, p: &FiniteDist) -> Result<OnSupport> {
        if f.len() != p.len() {
            return Err(Error::AlphabetMismatch { left: f.len(), right: p.len() });
        }
        let mut logp = Vec::new();
        let mut vals = Vec::new();
        for (&fx, &px) in f.values().iter().zip(p.probs()) {
            if px > 0.0 {
                logp.push(px.ln());
                vals.push(fx);
            }
        }
        Ok(OnSupport { logp, f: vals })
    }

    fn has_zero(&self) -> bool {
        self.f.iter().any(|&v| v == 0.0)
    }

    fn all_zero(&self) -> bool {
        self.f.iter().all(|&v| v == 0.0)
    }

    fn max(&self) -> f64 {
        self.f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn min(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn mass_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.logp.iter().zip(&self.f).filter(|(_, &v)| pred(v)).map(|(lp, _)| lp.exp()).sum()
    }

    /// `log E[f^p]` over cells with `f > 0`.
    fn log_moment(&self, p: f64) -> f64 {
        let it = self.logp.iter().zip(&self.f).filter(|(_, &v)| v > 0.0).map(move |(lp, v)| lp + p * v.ln());
        log_sum_exp_iter(it)
    }

    fn log_norm(&self, p: f64) -> f64 {
        let p = canon_order(p);
        if p == f64::INFINITY {
            return self.max().ln();
        }
        if p == f64::NEG_INFINITY {
            return self.min().ln();
        }
        if p == 0.0 {
            if self.has_zero() {
                return f64::NEG_INFINITY;
            }
            return self.logp.iter().zip(&self.f).map(|(lp, v)| lp.exp() * v.ln()).sum();
        }
        if p < 0.0 && self.has_zero() {
            return f64::NEG_INFINITY;
        }
        if self.all_zero() {
            return f64::NEG_INFINITY;
        }
        self.log_moment(p) / p
    }
}

/// `log ||f||_p` under `P`; `-inf` when the norm is zero.
pub fn log_norm(f: &AlphabetFunction, p_dist: &FiniteDist, p: f64) -> Result<f64> {
    if p.is_nan() {
        return Err(Error::NotANumber { context: "order" });
    }
    Ok(OnSupport::new(f, p_dist)?.log_norm(p))
}

/// The norm `||f||_p` under `P` for any extended order `p`.
pub fn p_norm(f: &AlphabetFunction, p_dist: &FiniteDist, p: f64) -> Result<XReal> {
    Ok(XReal::from_f64(log_norm(f, p_dist, p)?.exp()))
}

fn ent_same_order(s: &OnSupport, p: f64) -> f64 {
    if p == f64::INFINITY {
        let m = s.max();
        return -s.mass_where(|v| v == m).ln();
    }
    if p == f64::NEG_INFINITY {
        if s.has_zero() {
            return f64::INFINITY;
        }
        let m = s.min();
        return -s.mass_where(|v| v == m).ln();
    }
    if p < 0.0 && s.has_zero() {
        return f64::INFINITY;
    }
    if s.all_zero() {
        return f64::INFINITY;
    }
    let z = s.log_moment(p);
    let mut acc = 0.0;
    for (lp, &v) in s.logp.iter().zip(&s.f) {
        if v > 0.0 {
            let w = lp + p * v.ln();
            acc += (w - z).exp() * (p * v.ln() - z);
        }
    }
    acc.max(0.0)
}

/// The `(p, p̂)`-entropy of `f` under `P`, including every continuous extension.
pub fn ent(f: &AlphabetFunction, p_dist: &FiniteDist, orders: OrderPair) -> Result<XReal> {
    let s = OnSupport::new(f, p_dist)?;
    let (a, b) = (canon_order(orders.p), canon_order(orders.phat));
    let v = ent_inner(&s, a, b)?;
    XReal::new(v)
}

fn ent_inner(s: &OnSupport, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(ent_same_order(s, a));
    }
    if a == 0.0 || b == 0.0 {
        let o = if a == 0.0 { b } else { a };
        if o > 0.0 || !s.has_zero() {
            return Ok(-s.mass_where(|v| v > 0.0).ln());
        }
        return Ok(f64::NEG_INFINITY);
    }
    let sign_prod = a.signum() * b.signum();
    let degenerate = if sign_prod > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => {
            let la = s.log_norm(a);
            let lb = s.log_norm(b);
            if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
                return Ok(degenerate);
            }
            Ok(a * b / (a - b) * (la - lb))
        }
        (false, false) => {
            let (lo, hi) = (s.min(), s.max());
            Ok(if lo == hi { 0.0 } else { f64::NEG_INFINITY })
        }
        _ => {
            let (o, inf) = if a.is_finite() { (a, b) } else { (b, a) };
            let lo = s.log_norm(o);
            let linf = s.log_norm(inf);
            if lo == f64::NEG_INFINITY && linf == f64::NEG_INFINITY {
                return Ok(degenerate);
            }
            let diff = lo - linf;
            Ok(xmul(-o, diff))
        }
    }
}

/// Rényi divergence `D_s(Q || P)` for any extended order `s`.
pub fn renyi(q: &FiniteDist, p: &FiniteDist, s: f64) -> Result<XReal> {
    q.check_same(p)?;
    if s.is_nan() {
        return Err(Error::NotANumber { context: "order" });
    }
    let s = canon_order(s);
    let qs = q.probs();
    let ps = p.probs();
    let q_out = qs.iter().zip(ps).any(|(&a, &b)| a > 0.0 && b == 0.0);
    let q_missing = qs.iter().zip(ps).any(|(&a, &b)| a == 0.0 && b > 0.0);
    let both = || qs.iter().zip(ps).filter(|(&a, &b)| a > 0.0 && b > 0.0);
    let v = if s == 1.0 {
        if q_out {
            f64::INFINITY
        } else {
            both().map(|(&a, &b)| a * (a / b).ln()).sum::<f64>().max(0.0)
        }
    } else if s == 0.0 {
        let m: f64 = qs.iter().zip(ps).filter(|(&a, _)| a > 0.0).map(|(_, &b)| b).sum();
        (-m.ln()).max(0.0)
    } else if s == f64::INFINITY {
        if q_out {
            f64::INFINITY
        } else {
            both().map(|(&a, &b)| (a / b).ln()).fold(f64::NEG_INFINITY, f64::max)
        }
    } else if s == f64::NEG_INFINITY {
        if q_missing {
            f64::NEG_INFINITY
        } else {
            both().map(|(&a, &b)| (a / b).ln()).fold(f64::INFINITY, f64::min)
        }
    } else if s > 1.0 && q_out {
        f64::INFINITY
    } else if s < 0.0 && q_missing {
        f64::NEG_INFINITY
    } else {
        let l = log_sum_exp_iter(both().map(|(&a, &b)| s * a.ln() + (1.0 - s) * b.ln()));
        if l == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            l / (s - 1.0)
        }
    };
    XReal::new(v)
}

/// Kullback-Leibler divergence in nats.
pub fn kl(q: &FiniteDist, p: &FiniteDist) -> Result<f64> {
    Ok(renyi(q, p, 1.0)?.get())
}

/// Kullback-Leibler divergence between raw probability slices (no validation).
pub fn kl_raw(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

/// Rényi divergence between raw probability slices for finite `s` (no validation).
pub fn renyi_raw(q: &[f64], p: &[f64], s: f64) -> f64 {
    if s == 1.0 {
        return kl_raw(q, p);
    }
    let qd = FiniteDist::new(q).expect("valid raw distribution");
    let pd = FiniteDist::new(p).expect("valid raw distribution");
    renyi(&qd, &pd, s).expect("same alphabet").get()
}

/// Hölder conjugate `q / (q - 1)`; the conjugate of 1 is taken to be `+inf`.
pub fn holder_conjugate(q: f64) -> f64 {
    let q = canon_order(q);
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// The tilted distribution `Q ∝ P f^p` and the divergence `D_{p̂/p}(Q || P)`,
/// which coincides with the `(p, p̂)`-entropy of `f`.
pub fn ent_equals_renyi_witness(
    f: &AlphabetFunction,
    p_dist: &FiniteDist,
    orders: OrderPair,
) -> Result<(FiniteDist, XReal)> {
    let (p, phat) = (canon_order(orders.p), canon_order(orders.phat));
    if p == 0.0 || !p.is_finite() {
        return Err(Error::OrderOutOfRange(format!("witness needs a finite nonzero p, got {p}")));
    }
    let s = OnSupport::new(f, p_dist)?;
    let ln = s.log_norm(p);
    if !ln.is_finite() {
        return Err(Error::OrderOutOfRange(format!("||f||_{p} is degenerate")));
    }
    let z = p * ln;
    let mut q = vec![0.0; p_dist.len()];
    for (x, (&fx, &px)) in f.values().iter().zip(p_dist.probs()).enumerate() {
        if px > 0.0 && fx > 0.0 {
            q[x] = (px.ln() + p * fx.ln() - z).exp();
        }
    }
    let q = FiniteDist::new(&q)?;
    let order = if phat.is_infinite() { phat * p.signum() } else { phat / p };
    let d = renyi(&q, p_dist, order)?;
    Ok((q, d))
}

/// The set of attainable `(p, p̂)`-entropies: an interval, or a finite set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeInterval {
    pub lo: XReal,
    pub hi: XReal,
    pub lo_closed: bool,
    pub hi_closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrete_set: Option<Vec<f64>>,
}

impl RangeInterval {
    fn point(v: f64) -> RangeInterval {
        RangeInterval {
            lo: XReal::from_f64(v),
            hi: XReal::from_f64(v),
            lo_closed: true,
            hi_closed: true,
            discrete_set: None,
        }
    }

    /// Membership up to an absolute tolerance `tol` (applied to closed ends and
    /// to discrete points; open ends are strict).
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if let Some(set) = &self.discrete_set {
            return set.iter().any(|&v| (v - x).abs() <= tol);
        }
        let (lo, hi) = (self.lo.get(), self.hi.get());
        let lo_ok = if self.lo_closed { x >= lo - tol } else { x > lo };
        let hi_ok = if self.hi_closed { x <= hi + tol } else { x < hi };
        lo_ok && hi_ok
    }
}

/// Largest support size for which the discrete entropy set is enumerated.
pub const DISCRETE_RANGE_MAX_SUPPORT: usize = 20;

/// The range of `(p, p̂)`-entropies over all nonnegative functions.
pub fn entropy_range(p_dist: &FiniteDist, orders: OrderPair) -> Result<RangeInterval> {
    let (a, b) = (canon_order(orders.p), canon_order(orders.phat));
    if p_dist.is_dirac() {
        return Ok(RangeInterval::point(0.0));
    }
    let (lo_o, hi_o) = if a <= b { (a, b) } else { (b, a) };
    if lo_o == f64::NEG_INFINITY && hi_o == f64::INFINITY {
        return Ok(RangeInterval::point(0.0));
    }
    let amax = p_dist.alpha_max();
    if lo_o == 0.0 || hi_o == 0.0 {
        let other = if lo_o == 0.0 { hi_o } else { lo_o };
        if other < 0.0 {
            return Ok(RangeInterval::point(0.0));
        }
        let supp: Vec<f64> = p_dist.support().iter().map(|&i| p_dist.probs()[i]).collect();
        if supp.len() > DISCRETE_RANGE_MAX_SUPPORT {
            return Err(Error::SizeLimit(format!("support of size {} for a discrete entropy range", supp.len())));
        }
        let mut set: Vec<f64> = (1u64..(1u64 << supp.len()))
            .map(|mask| {
                let m: f64 = supp.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p).sum();
                (-m.ln()).max(0.0)
            })
            .collect();
        set.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        set.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
        return Ok(RangeInterval {
            lo: XReal::from_f64(set[0]),
            hi: XReal::from_f64(*set.last().expect("nonempty")),
            lo_closed: true,
            hi_closed: true,
            discrete_set: Some(set),
        });
    }
    if lo_o > 0.0 {
        return Ok(RangeInterval {
            lo: XReal::ZERO,
            hi: XReal::from_f64(amax),
            lo_closed: true,
            hi_closed: true,
            discrete_set: None,
        });
    }
    if hi_o < 0.0 {
        return Ok(RangeInterval {
            lo: XReal::ZERO,
            hi: XReal::from_f64(amax),
            lo_closed: true,
            hi_closed: false,
            discrete_set: None,
        });
    }
    Ok(RangeInterval { lo: XReal::NEG_INF, hi: XReal::ZERO, lo_closed: false, hi_closed: true, discrete_set: None })
}
