//! Small scalar routines: bisection, golden-section search and scan-and-refine maximization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Root of a monotone function on `[lo, hi]` by bisection.
///
/// `g(lo)` and `g(hi)` must have opposite signs (or one of them be zero).
/// Returns the midpoint of the final bracket once it is narrower than `tol`.
pub fn bisect(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let glo = g(lo);
    if glo == 0.0 {
        return lo;
    }
    let ghi = g(hi);
    if ghi == 0.0 {
        return hi;
    }
    let lo_neg = glo < 0.0;
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum of a convex (or unimodal) function on `[lo, hi]`.
///
/// Both endpoints are always evaluated, so minima at the boundary are exact.
pub fn golden_min(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut best = (lo, g(lo));
    if hi <= lo {
        return best;
    }
    let ghi = g(hi);
    if ghi < best.1 {
        best = (hi, ghi);
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    for (x, v) in [(c, gc), (d, gd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Maximum of a possibly multimodal function on `[lo, hi]`: a uniform scan of
/// `scan` intervals followed by golden-section refinement around the best sample.
pub fn scan_max(mut g: impl FnMut(f64) -> f64, lo: f64, hi: f64, scan: usize, tol: f64) -> (f64, f64) {
    let scan = scan.max(2);
    let h = (hi - lo) / scan as f64;
    let mut best = (lo, g(lo));
    let mut best_i = 0;
    for i in 1..=scan {
        let x = if i == scan { hi } else { lo + h * i as f64 };
        let v = g(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_min(|x| -g(x), a, b, tol);
    if -v > best.1 {
        (x, -v)
    } else {
        best
    }
}
