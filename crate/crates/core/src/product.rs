//! Exact computations on product measures `P_XY^{⊗n}`.
//!
//! Type-class combinatorics, type-based test functions, exact pairings summed
//! over joint types, exhaustive set probabilities, and the finite-n checks of
//! the small-set expansion sandwich, q-stability and Hölder duality.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{FiniteDist, JointDist};
use crate::envelopes::EnvelopeResult;
use crate::error::{Error, Result};
use crate::measures::{canon_order, holder_conjugate, log_norm, AlphabetFunction, OrderPair};
use crate::xreal::log_sum_exp;

/// Largest `|X|^n` for an explicit set.
pub const EXPLICIT_SET_LIMIT: usize = 1 << 20;
/// Largest `|X|^n * |Y|^n` for an explicit product table.
pub const PRODUCT_TABLE_LIMIT: usize = 1 << 26;
/// Largest number of joint types summed by [`pairing_log`].
pub const JOINT_TYPE_LIMIT: u64 = 200_000_000;
/// Largest dense index of marginal types.
const DENSE_TYPE_LIMIT: u64 = 1 << 24;

/// Table of `ln k!` for `k <= n`, built by cumulative summation.
#[derive(Debug, Clone)]
pub struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub fn new(n: usize) -> LnFactorial {
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).ln();
            t.push(acc);
        }
        LnFactorial(t)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// `ln (n! / Π c_i!)` with `n = Σ c_i`.
    pub fn multinomial(&self, counts: &[u32]) -> f64 {
        let n: usize = counts.iter().map(|&c| c as usize).sum();
        self.0[n] - counts.iter().map(|&c| self.0[c as usize]).sum::<f64>()
    }
}

/// Letter counts of a sequence of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeVector {
    pub counts: Vec<u32>,
}

impl TypeVector {
    pub fn new(counts: Vec<u32>) -> Result<TypeVector> {
        if counts.is_empty() {
            return Err(Error::Empty);
        }
        Ok(TypeVector { counts })
    }

    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// The empirical distribution `counts / n`.
    pub fn empirical(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Type of a sequence given by its letters.
    pub fn of_sequence(seq: &[usize], k: usize) -> TypeVector {
        let mut counts = vec![0u32; k];
        for &x in seq {
            counts[x] += 1;
        }
        TypeVector { counts }
    }

    /// `ln |T|`, the log-size of the type class.
    pub fn log_class_size(&self, lf: &LnFactorial) -> f64 {
        lf.multinomial(&self.counts)
    }

    /// `ln P^{⊗n}(x^n)` for any `x^n` of this type.
    pub fn log_seq_prob(&self, p: &FiniteDist) -> f64 {
        let mut acc = 0.0;
        for (&c, &pi) in self.counts.iter().zip(p.probs()) {
            if c > 0 {
                if pi == 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += c as f64 * pi.ln();
            }
        }
        acc
    }

    /// `ln P^{⊗n}(T)`, the log-probability of the whole type class.
    pub fn log_class_prob(&self, p: &FiniteDist, lf: &LnFactorial) -> f64 {
        let s = self.log_seq_prob(p);
        if s == f64::NEG_INFINITY {
            s
        } else {
            self.log_class_size(lf) + s
        }
    }

    /// `D(T || P)` in nats.
    pub fn divergence(&self, p: &FiniteDist) -> f64 {
        crate::measures::kl_raw(&self.empirical(), p.probs())
    }

    fn dense_index(&self, n: usize) -> usize {
        let mut idx = 0usize;
        let mut radix = 1usize;
        for &c in &self.counts[..self.counts.len() - 1] {
            idx += c as usize * radix;
            radix *= n + 1;
        }
        idx
    }
}

/// `ln` of the multinomial coefficient of a type.
pub fn type_class_log_size(t: &TypeVector) -> f64 {
    t.log_class_size(&LnFactorial::new(t.n()))
}

/// Calls `f` on every composition of `n` into `k` nonnegative parts, in lexicographic order.
pub fn for_each_composition(n: u32, k: usize, mut f: impl FnMut(&[u32])) {
    if k == 0 {
        return;
    }
    let mut c = vec![0u32; k];
    c[k - 1] = n;
    loop {
        f(&c);
        // Advance to the next composition in lexicographic order of the first k-1 parts.
        let mut i = k as isize - 2;
        loop {
            if i < 0 {
                return;
            }
            let iu = i as usize;
            if c[k - 1] > 0 {
                c[iu] += 1;
                c[k - 1] -= 1;
                break;
            }
            c[k - 1] += c[iu];
            c[iu] = 0;
            i -= 1;
        }
    }
}

/// Every type of length `n` on `k` letters.
pub fn all_types(n: usize, k: usize) -> Vec<TypeVector> {
    let mut out = Vec::new();
    for_each_composition(n as u32, k, |c| out.push(TypeVector { counts: c.to_vec() }));
    out
}

fn binom(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Number of types of length `n` on `k` letters.
pub fn type_count(n: usize, k: usize) -> u64 {
    binom((n + k - 1) as u64, (k - 1) as u64)
}

/// A function of the type of `x^n`: `f(x^n) = exp(n μ_{T(x^n)})`.
///
/// Types missing from `mu` (or with `μ = -inf`) carry the value 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeFunction {
    pub n: usize,
    pub k: usize,
    pub types: Vec<TypeVector>,
    pub mu: Vec<f64>,
}

impl TypeFunction {
    pub fn new(n: usize, k: usize, types: Vec<TypeVector>, mu: Vec<f64>) -> Result<TypeFunction> {
        if types.len() != mu.len() {
            return Err(Error::AlphabetMismatch { left: types.len(), right: mu.len() });
        }
        for t in &types {
            if t.n() != n || t.k() != k {
                return Err(Error::Invalid(format!("type {:?} is not a type of length {n} on {k} letters", t.counts)));
            }
        }
        if mu.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Invalid("per-letter log-weights must be finite or -inf".into()));
        }
        if mu.iter().all(|&v| v == f64::NEG_INFINITY) {
            return Err(Error::Invalid("a type function needs at least one finite weight".into()));
        }
        Ok(TypeFunction { n, k, types, mu })
    }

    /// The constant function `e^{n c}`.
    pub fn constant(n: usize, k: usize, c: f64) -> Result<TypeFunction> {
        let types = all_types(n, k);
        let mu = vec![c; types.len()];
        TypeFunction::new(n, k, types, mu)
    }

    /// The indicator of a union of type classes.
    pub fn indicator(n: usize, k: usize, members: &[TypeVector]) -> Result<TypeFunction> {
        TypeFunction::new(n, k, members.to_vec(), vec![0.0; members.len()])
    }

    fn dense(&self) -> Result<Vec<f64>> {
        let size = (self.n as u64 + 1).saturating_pow(self.k as u32 - 1);
        if size > DENSE_TYPE_LIMIT {
            return Err(Error::SizeLimit(format!("{} letters at n = {}", self.k, self.n)));
        }
        let mut d = vec![f64::NEG_INFINITY; size as usize];
        for (t, &m) in self.types.iter().zip(&self.mu) {
            d[t.dense_index(self.n)] = self.n as f64 * m;
        }
        Ok(d)
    }

    /// Pairs `(ln P^{⊗n}(T), n μ_T)` over every type of positive probability.
    fn log_measure(&self, p: &FiniteDist) -> Result<Vec<(f64, f64)>> {
        if p.len() != self.k {
            return Err(Error::AlphabetMismatch { left: self.k, right: p.len() });
        }
        let lf = LnFactorial::new(self.n);
        let d = self.dense()?;
        Ok(all_types(self.n, self.k)
            .iter()
            .map(|t| (t.log_class_prob(p, &lf), d[t.dense_index(self.n)]))
            .filter(|(w, _)| *w > f64::NEG_INFINITY)
            .collect())
    }

    /// `(1/n) ln ||f||_p` under `P^{⊗n}` for any extended order.
    pub fn log_norm(&self, p: &FiniteDist, order: f64) -> Result<f64> {
        let m = self.log_measure(p)?;
        Ok(measure_log_norm(&m, self.total_log_mass(p)?, canon_order(order)) / self.n as f64)
    }

    fn total_log_mass(&self, p: &FiniteDist) -> Result<f64> {
        Ok(log_sum_exp(&self.log_measure(p)?.iter().map(|(w, _)| *w).collect::<Vec<_>>()))
    }

    /// `(1/n) Ent_{p,p̂}(f)` under `P^{⊗n}` for finite nonzero orders.
    pub fn ent(&self, p: &FiniteDist, orders: OrderPair) -> Result<f64> {
        let (a, b) = (orders.p, orders.phat);
        if a == 0.0 || b == 0.0 || a.is_infinite() || b.is_infinite() {
            return Err(Error::OrderOutOfRange(format!("type-function entropies need finite nonzero orders, got ({a}, {b})")));
        }
        let m = self.log_measure(p)?;
        let total = log_sum_exp(&m.iter().map(|(w, _)| *w).collect::<Vec<_>>());
        let nf = self.n as f64;
        if a == b {
            let has_zero = m.iter().any(|(_, v)| *v == f64::NEG_INFINITY);
            if a < 0.0 && has_zero {
                return Ok(f64::INFINITY);
            }
            let terms: Vec<f64> = m.iter().filter(|(_, v)| v.is_finite()).map(|(w, v)| w + a * v).collect();
            let z = log_sum_exp(&terms);
            let mut acc = 0.0;
            for (w, v) in m.iter().filter(|(_, v)| v.is_finite()) {
                let t = w + a * v;
                acc += (t - z).exp() * (a * v - z + total);
            }
            return Ok(acc.max(0.0) / nf);
        }
        let la = measure_log_norm(&m, total, a);
        let lb = measure_log_norm(&m, total, b);
        if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
            return Ok(if a.signum() == b.signum() { f64::INFINITY } else { f64::NEG_INFINITY });
        }
        Ok(a * b / (a - b) * (la - lb) / nf)
    }

    /// Expands to an explicit function on all `k^n` sequences (first letter most significant).
    pub fn to_explicit(&self) -> Result<Vec<f64>> {
        let size = checked_pow(self.k, self.n, EXPLICIT_SET_LIMIT)?;
        let d = self.dense()?;
        Ok((0..size)
            .map(|idx| {
                let t = TypeVector::of_sequence(&digits(idx, self.k, self.n), self.k);
                (d[t.dense_index(self.n)]).exp()
            })
            .collect())
    }
}

/// `ln ||f||_p` for a discrete measure given as `(ln weight, ln f)` pairs with total log-mass `total`.
fn measure_log_norm(m: &[(f64, f64)], total: f64, p: f64) -> f64 {
    let has_zero = m.iter().any(|(_, v)| *v == f64::NEG_INFINITY);
    if p == f64::INFINITY {
        return m.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    }
    if p == f64::NEG_INFINITY {
        return m.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    }
    if p == 0.0 {
        if has_zero {
            return f64::NEG_INFINITY;
        }
        return m.iter().map(|(w, v)| (w - total).exp() * v).sum();
    }
    if p < 0.0 && has_zero {
        return f64::NEG_INFINITY;
    }
    let terms: Vec<f64> = m.iter().filter(|(_, v)| v.is_finite()).map(|(w, v)| w - total + p * v).collect();
    log_sum_exp(&terms) / p
}

/// Constants of the type-function constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstructionConstants {
    /// Bump added to the distinguished type when `p = p̂`.
    pub delta: f64,
    /// Per-letter log-weight of the other types when all orders are negative.
    pub b: f64,
}

impl Default for ConstructionConstants {
    fn default() -> Self {
        ConstructionConstants { delta: 0.1, b: 10.0 }
    }
}

/// Which construction rule applies to an order pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignCase {
    /// `p, p̂ > 0`, `p != p̂`.
    PositiveDistinct,
    /// `p = p̂ > 0`.
    PositiveEqual,
    /// Exactly one of `p, p̂` is negative.
    Mixed,
    /// `p, p̂ < 0`.
    Negative,
}

pub fn sign_case(o: OrderPair) -> Result<SignCase> {
    let (p, ph) = (o.p, o.phat);
    if p == 0.0 || ph == 0.0 || p.is_infinite() || ph.is_infinite() {
        return Err(Error::UnsupportedSignCase(format!("no construction for orders ({p}, {ph})")));
    }
    Ok(match (p > 0.0, ph > 0.0) {
        (true, true) if p == ph => SignCase::PositiveEqual,
        (true, true) => SignCase::PositiveDistinct,
        (false, false) => SignCase::Negative,
        _ => SignCase::Mixed,
    })
}

/// Builds the type function `f = Σ_T e^{n μ_T} 1_T` whose per-letter
/// `(p, p̂)`-entropy approaches `alpha` as `n` grows.
pub fn construct_type_function(
    p: &FiniteDist,
    n: usize,
    orders: OrderPair,
    alpha: f64,
    consts: &ConstructionConstants,
) -> Result<TypeFunction> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let case = sign_case(orders)?;
    let (op, oh) = match case {
        SignCase::Mixed if orders.p < 0.0 => (orders.phat, orders.p),
        _ => (orders.p, orders.phat),
    };
    let types: Vec<TypeVector> = all_types(n, p.len())
        .into_iter()
        .filter(|t| t.counts.iter().zip(p.probs()).all(|(&c, &pi)| c == 0 || pi > 0.0))
        .collect();
    let s: Vec<f64> = types.iter().map(|t| t.divergence(p)).collect();
    let star = s
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - alpha).abs().total_cmp(&(b.1 - alpha).abs()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one type");
    let shift = (1.0 / op - 1.0 / oh) * alpha;
    let mu: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(i, &si)| match case {
            SignCase::PositiveDistinct => (si / op).min(si / oh + shift),
            SignCase::PositiveEqual => si / op + if i == star { consts.delta } else { 0.0 },
            SignCase::Mixed => {
                if i == star {
                    si / oh + shift
                } else {
                    si / op
                }
            }
            SignCase::Negative => {
                if i == star {
                    si / op
                } else {
                    consts.b
                }
            }
        })
        .collect();
    TypeFunction::new(n, p.len(), types, mu)
}

/// `-(1/n) ln <f, g>` under `P_XY^{⊗n}`, summed exactly over joint types.
///
/// The sum is split by the count of the first cell; each chunk is reduced to
/// `(max, Σ exp(· - max))` and chunks are merged in a fixed order, so the result
/// does not depend on the number of worker threads.
pub fn pairing_log(pxy: &JointDist, f: &TypeFunction, g: &TypeFunction) -> Result<f64> {
    if f.n != g.n {
        return Err(Error::Invalid(format!("type functions of lengths {} and {}", f.n, g.n)));
    }
    if f.k != pxy.nx() || g.k != pxy.ny() {
        return Err(Error::AlphabetMismatch { left: pxy.nx() * pxy.ny(), right: f.k * g.k });
    }
    let n = f.n;
    let (nx, ny) = (pxy.nx(), pxy.ny());
    let cells = nx * ny;
    if type_count(n, cells) > JOINT_TYPE_LIMIT {
        return Err(Error::SizeLimit(format!("{} joint types", type_count(n, cells))));
    }
    let fd = f.dense()?;
    let gd = g.dense()?;
    let lf = LnFactorial::new(n);
    let logp: Vec<f64> = pxy.probs().iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let radix = n + 1;
    let term = |c: &[u32]| -> f64 {
        let mut s = lf.get(n);
        for (k, &ck) in c.iter().enumerate() {
            if ck > 0 {
                if logp[k] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                s += ck as f64 * logp[k] - lf.get(ck as usize);
            }
        }
        let (mut ix, mut r) = (0usize, 1usize);
        for x in 0..nx - 1 {
            ix += (0..ny).map(|y| c[x * ny + y] as usize).sum::<usize>() * r;
            r *= radix;
        }
        let (mut iy, mut r) = (0usize, 1usize);
        for y in 0..ny - 1 {
            iy += (0..nx).map(|x| c[x * ny + y] as usize).sum::<usize>() * r;
            r *= radix;
        }
        s + fd[ix] + gd[iy]
    };
    let chunks: Vec<(f64, f64)> = (0..=n as u32)
        .into_par_iter()
        .map(|c0| {
            let mut buf = vec![0u32; cells];
            buf[0] = c0;
            let mut vals = Vec::new();
            if cells == 1 {
                vals.push(term(&buf));
            } else {
                for_each_composition(n as u32 - c0, cells - 1, |rest| {
                    buf[1..].copy_from_slice(rest);
                    vals.push(term(&buf));
                });
            }
            let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return (m, 0.0);
            }
            (m, vals.iter().map(|v| (v - m).exp()).sum())
        })
        .collect();
    let m = chunks.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let total: f64 = chunks.iter().filter(|c| c.0 > f64::NEG_INFINITY).map(|c| c.1 * (c.0 - m).exp()).sum();
    Ok(-(m + total.ln()) / n as f64)
}

/// Per-letter quantities of a pair of type functions under a two-function query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingExponent {
    pub n: usize,
    /// `-(1/n) ln <f, g>`.
    pub pair_log: f64,
    /// `(1/n) ln ||f||_p`.
    pub log_norm_f: f64,
    /// `(1/n) ln ||g||_q`.
    pub log_norm_g: f64,
    /// Realized `(1/n) Ent_{p,p̂}(f)`.
    pub alpha_n: f64,
    /// Realized `(1/n) Ent_{q,q̂}(g)`.
    pub beta_n: f64,
    /// `-(1/n) ln(<f,g> / (||f||_p ||g||_q)) + α_n/p + β_n/q`.
    pub exponent: f64,
}

/// Evaluates the exact finite-n exponent of `(f, g)` at its realized entropies.
pub fn pairing_exponent(
    pxy: &JointDist,
    f: &TypeFunction,
    g: &TypeFunction,
    x_orders: OrderPair,
    y_orders: OrderPair,
) -> Result<PairingExponent> {
    let (px, py) = pxy.marginals();
    let pair_log = pairing_log(pxy, f, g)?;
    let log_norm_f = f.log_norm(&px, x_orders.p)?;
    let log_norm_g = g.log_norm(&py, y_orders.p)?;
    let alpha_n = f.ent(&px, x_orders)?;
    let beta_n = g.ent(&py, y_orders)?;
    let exponent = pair_log + log_norm_f + log_norm_g + alpha_n / x_orders.p + beta_n / y_orders.p;
    Ok(PairingExponent { n: f.n, pair_log, log_norm_f, log_norm_g, alpha_n, beta_n, exponent })
}

fn checked_pow(k: usize, n: usize, limit: usize) -> Result<usize> {
    let mut v: usize = 1;
    for _ in 0..n {
        v = v.checked_mul(k).filter(|&v| v <= limit).ok_or_else(|| Error::SizeLimit(format!("{k}^{n} exceeds {limit}")))?;
    }
    Ok(v)
}

/// Letters of the sequence with index `idx` (first letter most significant).
pub fn digits(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for i in (0..n).rev() {
        d[i] = idx % k;
        idx /= k;
    }
    d
}

/// A subset of `X^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SetOnProduct {
    /// Membership of every sequence, indexed with the first letter most significant.
    Explicit { n: usize, k: usize, members: Vec<bool> },
    /// A union of type classes.
    TypeUnion { n: usize, k: usize, types: Vec<TypeVector> },
}

impl SetOnProduct {
    pub fn explicit(n: usize, k: usize, members: Vec<bool>) -> Result<SetOnProduct> {
        let size = checked_pow(k, n, EXPLICIT_SET_LIMIT)?;
        if members.len() != size {
            return Err(Error::AlphabetMismatch { left: size, right: members.len() });
        }
        Ok(SetOnProduct::Explicit { n, k, members })
    }

    /// The set of the listed sequences.
    pub fn from_sequences(n: usize, k: usize, seqs: &[Vec<usize>]) -> Result<SetOnProduct> {
        let size = checked_pow(k, n, EXPLICIT_SET_LIMIT)?;
        let mut members = vec![false; size];
        for s in seqs {
            if s.len() != n || s.iter().any(|&x| x >= k) {
                return Err(Error::Invalid(format!("sequence {s:?} is not in a {k}-letter alphabet of length {n}")));
            }
            members[s.iter().fold(0, |acc, &x| acc * k + x)] = true;
        }
        Ok(SetOnProduct::Explicit { n, k, members })
    }

    pub fn full(n: usize, k: usize) -> Result<SetOnProduct> {
        let size = checked_pow(k, n, EXPLICIT_SET_LIMIT)?;
        Ok(SetOnProduct::Explicit { n, k, members: vec![true; size] })
    }

    pub fn n(&self) -> usize {
        match self {
            SetOnProduct::Explicit { n, .. } | SetOnProduct::TypeUnion { n, .. } => *n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            SetOnProduct::Explicit { k, .. } | SetOnProduct::TypeUnion { k, .. } => *k,
        }
    }

    /// Membership mask over all sequences.
    pub fn to_members(&self) -> Result<Vec<bool>> {
        match self {
            SetOnProduct::Explicit { members, .. } => Ok(members.clone()),
            SetOnProduct::TypeUnion { n, k, types } => {
                let size = checked_pow(*k, *n, EXPLICIT_SET_LIMIT)?;
                Ok((0..size).map(|idx| types.contains(&TypeVector::of_sequence(&digits(idx, *k, *n), *k))).collect())
            }
        }
    }
}

/// Probabilities of every sequence pair under `P_XY^{⊗n}`, with both marginals.
#[derive(Debug, Clone)]
pub struct ProductTable {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    /// `P_X^{⊗n}(x^n)` indexed by sequence.
    pub px: Vec<f64>,
    /// `P_Y^{⊗n}(y^n)` indexed by sequence.
    pub py: Vec<f64>,
    /// `P_XY^{⊗n}(x^n, y^n)` with `x^n` as the row.
    pub joint: Vec<f64>,
}

fn kron_power(base: &[f64], n: usize) -> Vec<f64> {
    let mut v = vec![1.0];
    for _ in 0..n {
        v = v.iter().flat_map(|&a| base.iter().map(move |&b| a * b)).collect();
    }
    v
}

impl ProductTable {
    pub fn new(pxy: &JointDist, n: usize) -> Result<ProductTable> {
        let (nx, ny) = (pxy.nx(), pxy.ny());
        let xs = checked_pow(nx, n, EXPLICIT_SET_LIMIT)?;
        let ys = checked_pow(ny, n, EXPLICIT_SET_LIMIT)?;
        if xs.checked_mul(ys).map_or(true, |v| v > PRODUCT_TABLE_LIMIT) {
            return Err(Error::SizeLimit(format!("{xs} x {ys} sequence pairs")));
        }
        let (px, py) = pxy.marginals();
        let joint: Vec<f64> = (0..xs * ys)
            .into_par_iter()
            .map(|k| {
                let (dx, dy) = (digits(k / ys, nx, n), digits(k % ys, ny, n));
                dx.iter().zip(&dy).map(|(&x, &y)| pxy.get(x, y)).product()
            })
            .collect();
        Ok(ProductTable { n, nx, ny, px: kron_power(px.probs(), n), py: kron_power(py.probs(), n), joint })
    }

    pub fn x_size(&self) -> usize {
        self.px.len()
    }

    pub fn y_size(&self) -> usize {
        self.py.len()
    }

    fn check_x(&self, a: &[bool]) -> Result<()> {
        if a.len() != self.x_size() {
            return Err(Error::AlphabetMismatch { left: self.x_size(), right: a.len() });
        }
        Ok(())
    }

    fn check_y(&self, b: &[bool]) -> Result<()> {
        if b.len() != self.y_size() {
            return Err(Error::AlphabetMismatch { left: self.y_size(), right: b.len() });
        }
        Ok(())
    }

    pub fn log_prob_x(&self, a: &[bool]) -> Result<f64> {
        self.check_x(a)?;
        Ok(self.px.iter().zip(a).filter(|(_, &m)| m).map(|(v, _)| v).sum::<f64>().ln())
    }

    pub fn log_prob_y(&self, b: &[bool]) -> Result<f64> {
        self.check_y(b)?;
        Ok(self.py.iter().zip(b).filter(|(_, &m)| m).map(|(v, _)| v).sum::<f64>().ln())
    }

    /// `ln P_XY^{⊗n}(A x B)`.
    pub fn log_prob_pair(&self, a: &[bool], b: &[bool]) -> Result<f64> {
        self.check_x(a)?;
        self.check_y(b)?;
        let ys = self.y_size();
        let mut total = 0.0;
        for (x, _) in a.iter().enumerate().filter(|(_, &m)| m) {
            let row = &self.joint[x * ys..(x + 1) * ys];
            total += row.iter().zip(b).filter(|(_, &m)| m).map(|(v, _)| v).sum::<f64>();
        }
        Ok(total.ln())
    }

    /// `P_{X|Y}^{⊗n}(A | y^n)` for every `y^n` (0 where `P_Y^{⊗n}(y^n) = 0`).
    pub fn conditional(&self, a: &[bool]) -> Result<Vec<f64>> {
        self.check_x(a)?;
        let ys = self.y_size();
        let mut c = vec![0.0; ys];
        for (x, _) in a.iter().enumerate().filter(|(_, &m)| m) {
            for (y, cy) in c.iter_mut().enumerate() {
                *cy += self.joint[x * ys + y];
            }
        }
        for (cy, &p) in c.iter_mut().zip(&self.py) {
            *cy = if p > 0.0 { (*cy / p).min(1.0) } else { 0.0 };
        }
        Ok(c)
    }

    fn py_dist(&self) -> Result<FiniteDist> {
        FiniteDist::new(&self.py)
    }
}

/// `(ln P_X^{⊗n}(A), ln P_Y^{⊗n}(B), ln P_XY^{⊗n}(A x B))`.
///
/// Two type unions are summed over joint types; otherwise both sets are
/// expanded and the probabilities are enumerated.
pub fn exact_joint_prob_sets(pxy: &JointDist, a: &SetOnProduct, b: &SetOnProduct) -> Result<(f64, f64, f64)> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::Invalid(format!("sets of lengths {} and {}", n, b.n())));
    }
    if let (SetOnProduct::TypeUnion { types: ta, .. }, SetOnProduct::TypeUnion { types: tb, .. }) = (a, b) {
        let f = TypeFunction::indicator(n, pxy.nx(), ta)?;
        let g = TypeFunction::indicator(n, pxy.ny(), tb)?;
        let (px, py) = pxy.marginals();
        let nf = n as f64;
        return Ok((nf * f.log_norm(&px, 1.0)?, nf * g.log_norm(&py, 1.0)?, -nf * pairing_log(pxy, &f, &g)?));
    }
    let table = ProductTable::new(pxy, n)?;
    let (ma, mb) = (a.to_members()?, b.to_members()?);
    Ok((table.log_prob_x(&ma)?, table.log_prob_y(&mb)?, table.log_prob_pair(&ma, &mb)?))
}

/// One verified inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub n: usize,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for an inequality `lhs <= rhs`.
    pub margin: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// Records `lhs <= rhs + tol`.
    pub fn le(check: &str, n: usize, params: serde_json::Value, lhs: f64, rhs: f64, tol: f64) -> CheckRecord {
        let margin = if lhs == rhs { 0.0 } else { rhs - lhs };
        CheckRecord { check: check.to_string(), n, params, lhs, rhs, margin, pass: margin >= -tol }
    }
}

/// Levels at or below this magnitude are treated as exactly zero.
pub const ZERO_LEVEL: f64 = 1e-12;

/// Outcome of one small-set expansion sandwich check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `-(1/n) ln P_XY^{⊗n}(A x B)`.
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
    /// `exponent - lower`.
    pub lower_margin: f64,
    /// `upper - exponent`.
    pub upper_margin: f64,
    pub pass: bool,
}

fn clamp_to_span(env: &EnvelopeResult, axis: usize, v: f64) -> f64 {
    let ax = &env.grid.axes[axis];
    v.clamp(ax[0], ax[ax.len() - 1])
}

/// Checks `Θ̲(α,β) - tol <= -(1/n) ln P(A x B) <= Θ̄-bound + tol` for explicit sets.
///
/// `phi_lower_env` is the lower convex envelope of `φ̲` (or of `ψ̲`, which has the
/// same increasing envelope) and `phi_upper_env` the upper concave envelope of
/// `φ̄`, both in nats. The upper bound is the envelope
/// value when `α, β > 0`, `α` when `β = 0` and `β` when `α = 0`.
pub fn verify_sse_sandwich(
    table: &ProductTable,
    a: &[bool],
    b: &[bool],
    phi_lower_env: &EnvelopeResult,
    phi_upper_env: &EnvelopeResult,
    tol: f64,
) -> Result<SandwichReport> {
    let nf = table.n as f64;
    let alpha = -table.log_prob_x(a)? / nf;
    let beta = -table.log_prob_y(b)? / nf;
    let exponent = -table.log_prob_pair(a, b)? / nf;
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Invalid("sandwich sets must have positive probability".into()));
    }
    let (sa, sb) = (clamp_to_span(phi_lower_env, 0, alpha.max(0.0)), clamp_to_span(phi_lower_env, 1, beta.max(0.0)));
    let lower = phi_lower_env.increasing_lower(sa, sb)?;
    let upper = if beta.abs() <= ZERO_LEVEL {
        alpha.max(0.0)
    } else if alpha.abs() <= ZERO_LEVEL {
        beta.max(0.0)
    } else {
        phi_upper_env.eval(clamp_to_span(phi_upper_env, 0, alpha), clamp_to_span(phi_upper_env, 1, beta))?
    };
    let lower_margin = exponent - lower;
    let upper_margin = upper - exponent;
    let pass = lower_margin >= -tol && upper_margin >= -tol;
    Ok(SandwichReport { n: table.n, alpha, beta, exponent, lower, upper, lower_margin, upper_margin, pass })
}

impl SandwichReport {
    pub fn to_records(&self, tol: f64) -> [CheckRecord; 2] {
        let params = serde_json::json!({ "alpha": self.alpha, "beta": self.beta });
        [
            CheckRecord::le("sse_lower", self.n, params.clone(), self.lower, self.exponent, tol),
            CheckRecord::le("sse_upper", self.n, params, self.exponent, self.upper, tol),
        ]
    }
}

/// `ln ||P_{X|Y}^{⊗n}(A|·)||_q` under `P_Y^{⊗n}`; `-inf` when the norm is 0.
pub fn qstability_norm(table: &ProductTable, a: &[bool], q: f64) -> Result<f64> {
    if q == 0.0 || q.is_nan() {
        return Err(Error::OrderOutOfRange(format!("q-stability needs q != 0, got {q}")));
    }
    let c = table.conditional(a)?;
    if c.iter().all(|&v| v == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    log_norm(&AlphabetFunction::new(c)?, &table.py_dist()?, q)
}

/// Outcome of a Hölder duality check for one set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub q: f64,
    /// `ln ||P(A|·)||_q`.
    pub log_norm: f64,
    /// Largest (for `q >= 1`) or smallest (for `q < 1`) sampled `ln(<1_A, g> / ||g||_{q'})`.
    pub extreme_sampled: f64,
    pub violations: usize,
    /// `|ln ratio(g*) - ln norm|` for the extremal `g* ∝ P(A|·)^{q-1}`, when defined.
    pub extremal_gap: Option<f64>,
    pub pass: bool,
}

fn log_ratio(c: &[f64], g: &[f64], py: &FiniteDist, qc: f64) -> Result<f64> {
    let inner: f64 = py.probs().iter().zip(c).zip(g).map(|((p, c), g)| p * c * g).sum();
    let ln = log_norm(&AlphabetFunction::new(g.to_vec())?, py, qc)?;
    Ok(inner.ln() - ln)
}

/// Samples `g >= 0` on `Y^n` and checks that `<1_A, g>/||g||_{q'}` stays on the
/// correct side of `||P(A|·)||_q`, and that the extremal `g` attains it within `1e-10`.
pub fn holder_duality_check<R: Rng>(table: &ProductTable, a: &[bool], q: f64, samples: usize, rng: &mut R) -> Result<HolderReport> {
    let q = canon_order(q);
    let qc = holder_conjugate(q);
    let py = table.py_dist()?;
    let c = table.conditional(a)?;
    let ln = qstability_norm(table, a, q)?;
    let upper = q >= 1.0;
    let side_ok = |r: f64| {
        let slack = 1e-12 * ln.abs().max(1.0);
        if upper {
            r <= ln + slack
        } else {
            r >= ln - slack
        }
    };
    let mut extreme = if upper { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut violations = 0;
    let ys = table.y_size();
    for i in 0..=samples {
        let g: Vec<f64> = if i == 0 { vec![1.0; ys] } else { (0..ys).map(|_| rng.gen_range(1e-3..1.0)).collect() };
        let r = log_ratio(&c, &g, &py, qc)?;
        if !side_ok(r) {
            violations += 1;
        }
        extreme = if upper { extreme.max(r) } else { extreme.min(r) };
    }
    let has_zero = c.iter().zip(py.probs()).any(|(&v, &p)| p > 0.0 && v == 0.0);
    let extremal_gap = if q.is_finite() && ln.is_finite() && !(q < 1.0 && has_zero) {
        let g: Vec<f64> = c.iter().map(|&v| if v > 0.0 { v.powf(q - 1.0) } else { 0.0 }).collect();
        Some((log_ratio(&c, &g, &py, qc)? - ln).abs())
    } else {
        None
    };
    let pass = violations == 0 && extremal_gap.map_or(true, |gap| gap <= 1e-10);
    Ok(HolderReport { q, log_norm: ln, extreme_sampled: extreme, violations, extremal_gap, pass })
}

/// A uniformly random subset of `{0, .., size-1}` with a uniformly random
/// cardinality in `1..=size`, as a membership mask.
pub fn stratified_subset<R: Rng>(size: usize, rng: &mut R) -> Vec<bool> {
    let card = rng.gen_range(1..=size);
    let mut idx: Vec<usize> = (0..size).collect();
    for i in 0..card {
        let j = rng.gen_range(i..size);
        idx.swap(i, j);
    }
    let mut m = vec![false; size];
    for &i in &idx[..card] {
        m[i] = true;
    }
    m
}

/// Membership mask of the nonempty subset with bit pattern `bits`.
pub fn subset_from_bits(bits: u64, size: usize) -> Vec<bool> {
    (0..size).map(|i| bits >> i & 1 == 1).collect()
}
