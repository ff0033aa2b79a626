//! Lower convex and upper concave envelopes of sampled functions, their
//! increasing versions, and shape diagnostics.
//!
//! A 1D envelope is the lower hull of `(x, g(x))` by monotone chain. A 2D
//! envelope is the lower hull of the lifted cloud `(s, t, g(s, t))`. Infinite
//! samples are excluded. Queries locate the supporting facet and interpolate
//! the original samples, so at hull vertices the envelope returns the input
//! value bit for bit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hull::{convex_hull_2d, convex_hull_3d, lower_hull_1d, orient2, Hull3};

/// Which envelope was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeKind {
    LowerConvex,
    UpperConcave,
}

impl EnvelopeKind {
    fn sign(self) -> f64 {
        match self {
            EnvelopeKind::LowerConvex => 1.0,
            EnvelopeKind::UpperConcave => -1.0,
        }
    }
}

/// A supporting simplex: two grid indices in 1D, three in 2D.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facet {
    pub vertices: Vec<usize>,
}

/// Facet and barycentric weights supporting the envelope at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    pub facet: usize,
    pub weights: [f64; 3],
}

#[derive(Debug, Clone, Default)]
struct Locator {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

/// An envelope together with the facets that define it.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeResult {
    pub kind: EnvelopeKind,
    /// Envelope values on the input grid (`+inf`/`-inf` outside the span of valid points).
    pub grid: GridFunction,
    pub facets: Vec<Facet>,
    /// Supporting facet and weights per grid point, when inside the span.
    pub support: Vec<Option<Support>>,
    /// The input samples.
    pub source: GridFunction,
    /// True for grid points that are vertices of some facet.
    pub is_vertex: Vec<bool>,
    #[serde(skip)]
    locator: Locator,
    #[serde(skip)]
    hull_1d: Vec<usize>,
    #[serde(skip)]
    extreme_vertex: Option<usize>,
}

const BARY_TOL: f64 = 1e-12;

/// Lower convex envelope of the valid samples of `g`.
pub fn lower_convex_envelope(g: &GridFunction) -> Result<EnvelopeResult> {
    build(g, EnvelopeKind::LowerConvex)
}

/// Upper concave envelope of the valid samples of `g`.
pub fn upper_concave_envelope(g: &GridFunction) -> Result<EnvelopeResult> {
    build(g, EnvelopeKind::UpperConcave)
}

fn build(g: &GridFunction, kind: EnvelopeKind) -> Result<EnvelopeResult> {
    if g.is_2d() {
        build_2d(g, kind)
    } else {
        build_1d(g, kind)
    }
}

fn build_1d(g: &GridFunction, kind: EnvelopeKind) -> Result<EnvelopeResult> {
    let sign = kind.sign();
    let valid: Vec<usize> = (0..g.values.len()).filter(|&k| g.mask[k]).collect();
    if valid.len() < 2 {
        return Err(Error::TooFewPoints(valid.len()));
    }
    let pts: Vec<[f64; 2]> = valid.iter().map(|&k| [g.axes[0][k], sign * g.values[k]]).collect();
    let hull: Vec<usize> = lower_hull_1d(&pts).into_iter().map(|i| valid[i]).collect();
    let facets = hull.windows(2).map(|w| Facet { vertices: vec![w[0], w[1]] }).collect();
    let mut is_vertex = vec![false; g.values.len()];
    for &k in &hull {
        is_vertex[k] = true;
    }
    let mut env = EnvelopeResult {
        kind,
        grid: g.clone(),
        facets,
        support: vec![None; g.values.len()],
        source: g.clone(),
        is_vertex,
        locator: Locator::default(),
        hull_1d: hull,
        extreme_vertex: None,
    };
    let mut values = Vec::with_capacity(g.values.len());
    for k in 0..g.values.len() {
        match env.locate_1d(g.axes[0][k]) {
            Some((f, w)) => {
                env.support[k] = Some(Support { facet: f, weights: [w, 1.0 - w, 0.0] });
                values.push(env.interp(f, &[w, 1.0 - w, 0.0], g.axes[0][k], 0.0));
            }
            None => values.push(sign * f64::INFINITY),
        }
    }
    env.grid = GridFunction::new_1d(g.axes[0].clone(), values)?;
    Ok(env)
}

fn build_2d(g: &GridFunction, kind: EnvelopeKind) -> Result<EnvelopeResult> {
    let sign = kind.sign();
    let (ns, nt) = g.shape();
    let valid: Vec<usize> = (0..g.values.len()).filter(|&k| g.mask[k]).collect();
    if valid.len() < 3 {
        return Err(Error::TooFewPoints(valid.len()));
    }
    let pts3: Vec<[f64; 3]> = valid
        .iter()
        .map(|&k| {
            let (s, t) = g.coords(k);
            [s, t, sign * g.values[k]]
        })
        .collect();
    let tris: Vec<[usize; 3]> = match convex_hull_3d(&pts3)? {
        Hull3::Solid(faces) => faces
            .into_iter()
            .filter(|f| {
                let p = |i: usize| [pts3[f[i]][0], pts3[f[i]][1]];
                orient2(p(0), p(1), p(2)) < 0.0
            })
            .collect(),
        Hull3::Coplanar => {
            let pts2: Vec<[f64; 2]> = pts3.iter().map(|p| [p[0], p[1]]).collect();
            let h = convex_hull_2d(&pts2);
            if h.len() < 3 {
                return Err(Error::DegenerateGeometry);
            }
            (1..h.len() - 1).map(|i| [h[0], h[i], h[i + 1]]).collect()
        }
    };
    let facets: Vec<Facet> = tris.iter().map(|f| Facet { vertices: f.iter().map(|&i| valid[i]).collect() }).collect();
    let mut is_vertex = vec![false; g.values.len()];
    for f in &facets {
        for &k in &f.vertices {
            is_vertex[k] = true;
        }
    }
    let mut counts = vec![0usize; (ns - 1) * (nt - 1)];
    let cell_ranges: Vec<(usize, usize, usize, usize)> = facets
        .iter()
        .map(|f| {
            let is: Vec<usize> = f.vertices.iter().map(|&k| k / nt).collect();
            let js: Vec<usize> = f.vertices.iter().map(|&k| k % nt).collect();
            let (i0, i1) = (*is.iter().min().expect("3"), *is.iter().max().expect("3"));
            let (j0, j1) = (*js.iter().min().expect("3"), *js.iter().max().expect("3"));
            (i0, i1.max(i0 + 1).min(ns - 1), j0, j1.max(j0 + 1).min(nt - 1))
        })
        .collect();
    for &(i0, i1, j0, j1) in &cell_ranges {
        for ci in i0..i1 {
            for cj in j0..j1 {
                counts[ci * (nt - 1) + cj] += 1;
            }
        }
    }
    let mut offsets = vec![0usize; counts.len() + 1];
    for c in 0..counts.len() {
        offsets[c + 1] = offsets[c] + counts[c];
    }
    let mut fill = offsets.clone();
    let mut items = vec![0usize; offsets[counts.len()]];
    for (fi, &(i0, i1, j0, j1)) in cell_ranges.iter().enumerate() {
        for ci in i0..i1 {
            for cj in j0..j1 {
                let c = ci * (nt - 1) + cj;
                items[fill[c]] = fi;
                fill[c] += 1;
            }
        }
    }
    let mut env = EnvelopeResult {
        kind,
        grid: g.clone(),
        facets,
        support: Vec::new(),
        source: g.clone(),
        is_vertex,
        locator: Locator { offsets, items },
        hull_1d: Vec::new(),
        extreme_vertex: None,
    };
    env.extreme_vertex = env.vertices().into_iter().min_by(|&a, &b| (sign * g.values[a]).total_cmp(&(sign * g.values[b])).then(a.cmp(&b)));
    let evaluated: Vec<(f64, Option<Support>)> = (0..g.values.len())
        .into_par_iter()
        .map(|k| {
            if env.is_vertex[k] {
                let (f, w) = env.locate_2d(g.coords(k).0, g.coords(k).1).unwrap_or((0, [1.0, 0.0, 0.0]));
                return (g.values[k], Some(Support { facet: f, weights: w }));
            }
            let (s, t) = g.coords(k);
            match env.locate_2d(s, t) {
                Some((f, w)) => (env.interp(f, &w, s, t), Some(Support { facet: f, weights: w })),
                None => (sign * f64::INFINITY, None),
            }
        })
        .collect();
    let (values, support): (Vec<f64>, Vec<Option<Support>>) = evaluated.into_iter().unzip();
    env.support = support;
    env.grid = GridFunction::new_2d(g.axes[0].clone(), g.axes[1].clone(), values)?;
    Ok(env)
}

fn cell_index(axis: &[f64], x: f64) -> usize {
    let n = axis.len();
    match axis.binary_search_by(|v| v.partial_cmp(&x).expect("finite")) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

impl EnvelopeResult {
    fn vertex_xy(&self, k: usize) -> [f64; 2] {
        let (s, t) = self.source.coords(k);
        [s, t]
    }

    fn interp(&self, f: usize, w: &[f64; 3], s: f64, t: f64) -> f64 {
        let verts = &self.facets[f].vertices;
        for &k in verts {
            if self.vertex_xy(k) == [s, t] || (!self.source.is_2d() && self.source.axes[0][k] == s) {
                return self.source.values[k];
            }
        }
        verts.iter().zip(w).map(|(&k, &wk)| wk * self.source.values[k]).sum()
    }

    fn locate_1d(&self, s: f64) -> Option<(usize, f64)> {
        let h = &self.hull_1d;
        let xs = &self.source.axes[0];
        let (first, last) = (xs[h[0]], xs[h[h.len() - 1]]);
        if s < first || s > last || h.len() < 2 {
            return None;
        }
        let pos = h.partition_point(|&k| xs[k] <= s);
        let f = pos.saturating_sub(1).min(h.len() - 2);
        let (a, b) = (xs[h[f]], xs[h[f + 1]]);
        Some((f, (b - s) / (b - a)))
    }

    fn barycentric(&self, f: usize, s: f64, t: f64) -> [f64; 3] {
        let v = &self.facets[f].vertices;
        let a = self.vertex_xy(v[0]);
        let b = self.vertex_xy(v[1]);
        let c = self.vertex_xy(v[2]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let wa = ((b[0] - s) * (c[1] - t) - (b[1] - t) * (c[0] - s)) / det;
        let wb = ((c[0] - s) * (a[1] - t) - (c[1] - t) * (a[0] - s)) / det;
        [wa, wb, 1.0 - wa - wb]
    }

    fn locate_2d(&self, s: f64, t: f64) -> Option<(usize, [f64; 3])> {
        let ax = &self.source.axes;
        let (s0, s1) = (ax[0][0], ax[0][ax[0].len() - 1]);
        let (t0, t1) = (ax[1][0], ax[1][ax[1].len() - 1]);
        if !(s >= s0 && s <= s1 && t >= t0 && t <= t1) {
            return None;
        }
        let nt = ax[1].len();
        let c = cell_index(&ax[0], s) * (nt - 1) + cell_index(&ax[1], t);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &f in &self.locator.items[self.locator.offsets[c]..self.locator.offsets[c + 1]] {
            let w = self.barycentric(f, s, t);
            if !w.iter().all(|v| v.is_finite()) {
                continue;
            }
            let m = w[0].min(w[1]).min(w[2]);
            if m >= -BARY_TOL && best.map_or(true, |(_, _, bm)| m > bm) {
                best = Some((f, w, m));
            }
        }
        best.map(|(f, w, _)| (f, w))
    }

    /// Envelope value at an arbitrary point of the span (second coordinate ignored in 1D).
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        if self.source.is_2d() {
            let (f, w) = self.locate_2d(s, t).ok_or(Error::OutOfSpan(s, t))?;
            Ok(self.interp(f, &w, s, t))
        } else {
            let (f, w) = self.locate_1d(s).ok_or(Error::OutOfSpan(s, t))?;
            let h = &self.hull_1d;
            let (ka, kb) = (h[f], h[f + 1]);
            let xs = &self.source.axes[0];
            if s == xs[ka] {
                return Ok(self.source.values[ka]);
            }
            if s == xs[kb] {
                return Ok(self.source.values[kb]);
            }
            Ok(w * self.source.values[ka] + (1.0 - w) * self.source.values[kb])
        }
    }

    /// Indices of the grid points that are facet vertices.
    pub fn vertices(&self) -> Vec<usize> {
        (0..self.is_vertex.len()).filter(|&k| self.is_vertex[k]).collect()
    }

    /// Points where a piecewise-linear objective built from the envelope and
    /// functions with kinks only on `s = alpha` or `t = beta` can attain its
    /// extremum: facet vertices, facet edges crossing those two lines, and
    /// `(alpha, beta)` itself when it lies in the span. Each entry is `(s, t, value)`.
    pub fn arrangement_points(&self, alpha: f64, beta: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        if let Ok(v) = self.eval(alpha, beta) {
            out.push((alpha, beta, v));
        }
        for k in self.vertices() {
            let (s, t) = self.source.coords(k);
            out.push((s, t, self.source.values[k]));
        }
        if self.source.is_2d() {
            for f in &self.facets {
                let v = &f.vertices;
                for e in 0..3 {
                    let (ka, kb) = (v[e], v[(e + 1) % 3]);
                    let (pa, pb) = (self.vertex_xy(ka), self.vertex_xy(kb));
                    let (va, vb) = (self.source.values[ka], self.source.values[kb]);
                    for (axis, level) in [(0usize, alpha), (1usize, beta)] {
                        let (da, db) = (pa[axis] - level, pb[axis] - level);
                        if da * db < 0.0 {
                            let lam = da / (da - db);
                            let s = pa[0] + lam * (pb[0] - pa[0]);
                            let t = pa[1] + lam * (pb[1] - pa[1]);
                            let (s, t) = if axis == 0 { (alpha, t) } else { (s, beta) };
                            out.push((s, t, va + lam * (vb - va)));
                        }
                    }
                }
            }
        }
        out
    }

    fn extremum_over_region(&self, alpha: f64, beta: f64, upper: bool) -> Result<f64> {
        let ax = &self.source.axes;
        let in_axis = |a: &[f64], x: f64| x >= a[0] && x <= a[a.len() - 1];
        if !in_axis(&ax[0], alpha) || (self.source.is_2d() && !in_axis(&ax[1], beta)) {
            return Err(Error::OutOfSpan(alpha, beta));
        }
        let two_d = self.source.is_2d();
        let in_region = |s: f64, t: f64| {
            if upper {
                s <= alpha && (!two_d || t <= beta)
            } else {
                s >= alpha && (!two_d || t >= beta)
            }
        };
        let pts: Vec<(f64, f64, f64)> = if two_d {
            self.region_candidates_2d(alpha, beta, &in_region)
        } else {
            self.arrangement_points(alpha, beta)
        };
        let pts = pts.into_iter().filter(|&(s, t, _)| in_region(s, t));
        Ok(if upper {
            pts.map(|p| p.2).fold(f64::NEG_INFINITY, f64::max)
        } else {
            pts.map(|p| p.2).fold(f64::INFINITY, f64::min)
        })
    }

    /// Candidate extremizers over a quadrant for a 2D envelope.
    ///
    /// When the global extremum lies in the region it is the answer. Otherwise
    /// the extremum over the region lies on one of the lines `s = alpha`,
    /// `t = beta`, where the envelope is piecewise linear with kinks at the
    /// crossings of facet edges; only facets registered in the grid cells along
    /// those lines are inspected.
    fn region_candidates_2d(&self, alpha: f64, beta: f64, in_region: &dyn Fn(f64, f64) -> bool) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        if let Some(k) = self.extreme_vertex {
            let (s, t) = self.source.coords(k);
            if in_region(s, t) {
                out.push((s, t, self.source.values[k]));
                return out;
            }
        }
        if let Ok(v) = self.eval(alpha, beta) {
            out.push((alpha, beta, v));
        }
        let ax = &self.source.axes;
        let (ns, nt) = (ax[0].len(), ax[1].len());
        let mut seen = vec![false; self.facets.len()];
        for (axis, level) in [(0usize, alpha), (1usize, beta)] {
            let c = cell_index(&ax[axis], level);
            let lines = [c.saturating_sub(1), c, (c + 1).min(ax[axis].len() - 2)];
            seen.iter_mut().for_each(|v| *v = false);
            for &line in &lines {
                let cells: Vec<usize> = if axis == 0 {
                    (0..nt - 1).map(|cj| line * (nt - 1) + cj).collect()
                } else {
                    (0..ns - 1).map(|ci| ci * (nt - 1) + line).collect()
                };
                for cell in cells {
                    for &f in &self.locator.items[self.locator.offsets[cell]..self.locator.offsets[cell + 1]] {
                        if std::mem::replace(&mut seen[f], true) {
                            continue;
                        }
                        let v = &self.facets[f].vertices;
                        for e in 0..3 {
                            let (ka, kb) = (v[e], v[(e + 1) % 3]);
                            let (pa, pb) = (self.vertex_xy(ka), self.vertex_xy(kb));
                            let (va, vb) = (self.source.values[ka], self.source.values[kb]);
                            let (da, db) = (pa[axis] - level, pb[axis] - level);
                            if da == 0.0 {
                                out.push((pa[0], pa[1], va));
                            }
                            if da * db < 0.0 {
                                let lam = da / (da - db);
                                let s = pa[0] + lam * (pb[0] - pa[0]);
                                let t = pa[1] + lam * (pb[1] - pa[1]);
                                let (s, t) = if axis == 0 { (alpha, t) } else { (s, beta) };
                                out.push((s, t, va + lam * (vb - va)));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `min` of the envelope over `{s >= alpha, t >= beta}` (`beta` ignored in 1D).
    pub fn increasing_lower(&self, alpha: f64, beta: f64) -> Result<f64> {
        self.extremum_over_region(alpha, beta, false)
    }

    /// `max` of the envelope over `{s <= alpha, t <= beta}` (`beta` ignored in 1D).
    pub fn increasing_upper(&self, alpha: f64, beta: f64) -> Result<f64> {
        self.extremum_over_region(alpha, beta, true)
    }
}

/// Result of comparing envelope-then-increasing against increasing-then-envelope.
#[derive(Debug, Clone, Serialize)]
pub struct ExchangeReport {
    pub discrepancy: f64,
    pub tolerance: f64,
    pub lipschitz: f64,
    pub step: f64,
    pub pass: bool,
}

/// Largest absolute slope between adjacent valid grid points.
pub fn lipschitz_estimate(g: &GridFunction) -> f64 {
    let (ns, nt) = g.shape();
    let mut l: f64 = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            let k = i * nt + j;
            if !g.mask[k] {
                continue;
            }
            if i + 1 < ns && g.mask[k + nt] {
                l = l.max((g.values[k + nt] - g.values[k]).abs() / (g.axes[0][i + 1] - g.axes[0][i]));
            }
            if g.is_2d() && j + 1 < nt && g.mask[k + 1] {
                l = l.max((g.values[k + 1] - g.values[k]).abs() / (g.axes[1][j + 1] - g.axes[1][j]));
            }
        }
    }
    l
}

/// Computes the lower convex envelope of `g` then its grid increasing envelope,
/// and the increasing envelope first then the convex envelope, and compares them.
pub fn envelope_exchange_check(g: &GridFunction) -> Result<ExchangeReport> {
    let a = lower_convex_envelope(g)?.grid.suffix_min();
    let b = lower_convex_envelope(&g.suffix_min())?.grid;
    let mut disc: f64 = 0.0;
    for k in 0..a.values.len() {
        if a.mask[k] && b.mask[k] {
            disc = disc.max((a.values[k] - b.values[k]).abs());
        }
    }
    let lipschitz = lipschitz_estimate(g);
    let step = g.max_step();
    let tolerance = 2.0 * step * lipschitz;
    Ok(ExchangeReport { discrepancy: disc, tolerance, lipschitz, step, pass: disc <= tolerance + 1e-12 })
}

/// Smallest second difference over valid consecutive triples along the axes
/// and (in 2D) both diagonals. Nonnegative for convex samples on a uniform grid.
pub fn min_second_difference(g: &GridFunction) -> f64 {
    let (ns, nt) = g.shape();
    let idx = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i >= ns as isize || j >= nt as isize {
            return None;
        }
        let k = i as usize * nt + j as usize;
        if g.mask[k] {
            Some(g.values[k])
        } else {
            None
        }
    };
    let dirs: &[(isize, isize)] = if g.is_2d() { &[(1, 0), (0, 1), (1, 1), (1, -1)] } else { &[(1, 0)] };
    let mut m = f64::INFINITY;
    for i in 0..ns as isize {
        for j in 0..nt as isize {
            let Some(c) = idx(i, j) else { continue };
            for &(di, dj) in dirs {
                if let (Some(a), Some(b)) = (idx(i - di, j - dj), idx(i + di, j + dj)) {
                    m = m.min(a + b - 2.0 * c);
                }
            }
        }
    }
    m
}

/// Smallest forward difference along each axis (nonnegative for nondecreasing samples).
pub fn min_forward_difference(g: &GridFunction) -> f64 {
    let (ns, nt) = g.shape();
    let mut m = f64::INFINITY;
    for i in 0..ns {
        for j in 0..nt {
            let k = i * nt + j;
            if !g.mask[k] {
                continue;
            }
            if i + 1 < ns && g.mask[k + nt] {
                m = m.min(g.values[k + nt] - g.values[k]);
            }
            if g.is_2d() && j + 1 < nt && g.mask[k + 1] {
                m = m.min(g.values[k + 1] - g.values[k]);
            }
        }
    }
    m
}
