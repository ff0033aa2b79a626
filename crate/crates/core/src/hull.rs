//! Convex hulls with exact orientation predicates.
//!
//! Orientation signs come from adaptive-precision determinants, so the hull
//! is combinatorially correct for the given floating-point input even when
//! many points are coplanar up to rounding.

use std::collections::HashMap;

use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::error::{Error, Result};

fn c2(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: [f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

/// Positive when `a, b, c` turn counterclockwise.
pub fn orient2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(c2(a), c2(b), c2(c))
}

/// Positive when `d` lies below the plane through `a, b, c` oriented counterclockwise from above.
pub fn orient3(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> f64 {
    orient3d(c3(a), c3(b), c3(c), c3(d))
}

/// Indices of the lower convex hull of points sorted by strictly increasing `x`.
///
/// Points lying on a hull edge are dropped.
pub fn lower_hull_1d(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        while h.len() >= 2 && orient2(pts[h[h.len() - 2]], pts[h[h.len() - 1]], pts[i]) <= 0.0 {
            h.pop();
        }
        h.push(i);
    }
    h
}

/// Counterclockwise convex hull of planar points, without collinear boundary points.
pub fn convex_hull_2d(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).expect("finite coordinates"));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && orient2(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && orient2(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Face {
    v: [usize; 3],
    nb: [usize; 3],
    alive: bool,
    outside: Vec<usize>,
}

/// Outcome of a 3D hull computation.
pub enum Hull3 {
    /// Outward-oriented triangles of a full-dimensional hull.
    Solid(Vec<[usize; 3]>),
    /// All points are coplanar.
    Coplanar,
}

/// Convex hull of points in 3D by quickhull with exact predicates.
///
/// Returns the outward-oriented triangles (counterclockwise seen from outside).
/// Points exactly on the hull boundary are not used as vertices.
pub fn convex_hull_3d(pts: &[[f64; 3]]) -> Result<Hull3> {
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let above = |f: &[usize; 3], q: usize| orient3(pts[f[0]], pts[f[1]], pts[f[2]], pts[q]) < 0.0;

    let lex = |a: usize, b: usize| pts[a].partial_cmp(&pts[b]).expect("finite coordinates");
    let i0 = (0..pts.len()).min_by(|&a, &b| lex(a, b).then(a.cmp(&b))).expect("nonempty");
    let i1 = (0..pts.len()).max_by(|&a, &b| lex(a, b).then(b.cmp(&a))).expect("nonempty");
    if pts[i0] == pts[i1] {
        return Err(Error::DegenerateGeometry);
    }
    let collinear = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
        orient2([a[0], a[1]], [b[0], b[1]], [c[0], c[1]]) == 0.0
            && orient2([a[0], a[2]], [b[0], b[2]], [c[0], c[2]]) == 0.0
            && orient2([a[1], a[2]], [b[1], b[2]], [c[1], c[2]]) == 0.0
    };
    let area2 = |q: usize| {
        let (a, b, c) = (pts[i0], pts[i1], pts[q]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let x = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    };
    let mut i2 = None;
    let mut best = -1.0;
    for q in 0..pts.len() {
        if collinear(pts[i0], pts[i1], pts[q]) {
            continue;
        }
        let a = area2(q);
        if a > best {
            best = a;
            i2 = Some(q);
        }
    }
    let Some(i2) = i2 else {
        return Err(Error::DegenerateGeometry);
    };
    let mut i3 = None;
    let mut best = 0.0;
    for q in 0..pts.len() {
        let o = orient3(pts[i0], pts[i1], pts[i2], pts[q]).abs();
        if o > best {
            best = o;
            i3 = Some(q);
        }
    }
    let Some(i3) = i3 else {
        return Ok(Hull3::Coplanar);
    };

    let simplex = [i0, i1, i2, i3];
    let mut faces: Vec<Face> = Vec::new();
    for omit in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&k| k != omit).map(|k| simplex[k]).collect();
        let mut v = [others[0], others[1], others[2]];
        if above(&v, simplex[omit]) {
            v.swap(1, 2);
        }
        faces.push(Face { v, nb: [usize::MAX; 3], alive: true, outside: Vec::new() });
    }
    let mut edge_map: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for e in 0..3 {
            edge_map.insert((f.v[e], f.v[(e + 1) % 3]), (fi, e));
        }
    }
    for fi in 0..4 {
        for e in 0..3 {
            let (a, b) = (faces[fi].v[e], faces[fi].v[(e + 1) % 3]);
            faces[fi].nb[e] = edge_map[&(b, a)].0;
        }
    }
    for q in 0..pts.len() {
        if simplex.contains(&q) {
            continue;
        }
        for f in faces.iter_mut() {
            if above(&f.v, q) {
                f.outside.push(q);
                break;
            }
        }
    }

    let mut stack: Vec<usize> = (0..4).filter(|&f| !faces[f].outside.is_empty()).collect();
    let mut seen: Vec<u32> = vec![0; 4];
    let mut vis: Vec<bool> = vec![false; 4];
    let mut gen: u32 = 0;
    while let Some(f0) = stack.pop() {
        if !faces[f0].alive || faces[f0].outside.is_empty() {
            continue;
        }
        let fv = faces[f0].v;
        let mut apex = faces[f0].outside[0];
        let mut far = -1.0;
        for &q in &faces[f0].outside {
            let d = -orient3(pts[fv[0]], pts[fv[1]], pts[fv[2]], pts[q]);
            if d > far || (d == far && q < apex) {
                far = d;
                apex = q;
            }
        }
        gen += 1;
        let mut visible = vec![f0];
        seen[f0] = gen;
        vis[f0] = true;
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut k = 0;
        while k < visible.len() {
            let g = visible[k];
            k += 1;
            for e in 0..3 {
                let h = faces[g].nb[e];
                if seen[h] != gen {
                    seen[h] = gen;
                    vis[h] = above(&faces[h].v, apex);
                    if vis[h] {
                        visible.push(h);
                        continue;
                    }
                }
                if !vis[h] {
                    horizon.push((g, e));
                }
            }
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &g in &visible {
            faces[g].alive = false;
            orphans.extend(faces[g].outside.drain(..).filter(|&q| q != apex));
        }
        let mut starts: HashMap<usize, usize> = HashMap::with_capacity(horizon.len());
        let mut ends: HashMap<usize, usize> = HashMap::with_capacity(horizon.len());
        let first_new = faces.len();
        for &(g, e) in &horizon {
            let u = faces[g].v[e];
            let w = faces[g].v[(e + 1) % 3];
            let h = faces[g].nb[e];
            let nf = faces.len();
            faces.push(Face { v: [u, w, apex], nb: [h, usize::MAX, usize::MAX], alive: true, outside: Vec::new() });
            seen.push(0);
            vis.push(false);
            for he in 0..3 {
                if faces[h].v[he] == w && faces[h].v[(he + 1) % 3] == u {
                    faces[h].nb[he] = nf;
                }
            }
            starts.insert(u, nf);
            ends.insert(w, nf);
        }
        for nf in first_new..faces.len() {
            let [u, w, _] = faces[nf].v;
            faces[nf].nb[1] = starts[&w];
            faces[nf].nb[2] = ends[&u];
        }
        for q in orphans {
            for nf in first_new..faces.len() {
                if above(&faces[nf].v, q) {
                    faces[nf].outside.push(q);
                    break;
                }
            }
        }
        for nf in first_new..faces.len() {
            if !faces[nf].outside.is_empty() {
                stack.push(nf);
            }
        }
    }
    Ok(Hull3::Solid(faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_hull_has_twelve_triangles() {
        let mut pts = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    pts.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        let Hull3::Solid(faces) = convex_hull_3d(&pts).unwrap() else { panic!("expected solid") };
        let mut verts: Vec<usize> = faces.iter().flatten().copied().collect();
        verts.sort();
        verts.dedup();
        assert_eq!(verts.len(), 8);
        assert_eq!(faces.len(), 12);
        for f in &faces {
            for q in 0..pts.len() {
                assert!(orient3(pts[f[0]], pts[f[1]], pts[f[2]], pts[q]) >= 0.0);
            }
        }
    }

    #[test]
    fn coplanar_and_collinear_inputs() {
        let pts: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, (i * i % 7) as f64, 1.0]).collect();
        assert!(matches!(convex_hull_3d(&pts).unwrap(), Hull3::Coplanar));
        let line: Vec<[f64; 3]> = (0..5).map(|i| [i as f64, 2.0 * i as f64, 0.5]).collect();
        assert!(matches!(convex_hull_3d(&line), Err(Error::DegenerateGeometry)));
    }

    #[test]
    fn hulls_1d_and_2d() {
        let pts: Vec<[f64; 2]> = (0..11).map(|i| [i as f64 / 10.0, ((i as f64) / 10.0).sqrt()]).collect();
        assert_eq!(lower_hull_1d(&pts), vec![0, 10]);
        let sq = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let h = convex_hull_2d(&sq);
        assert_eq!(h.len(), 4);
        assert!(!h.contains(&2) && !h.contains(&5));
    }
}
