//! Golden-section search for unimodal objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: u32,
}

/// Maximize a concave (more generally, unimodal) `f` on `[lo, hi]`.
///
/// Stops when the bracket width drops below `max(tol_abs, tol_rel * |x|)`
/// or after `max_iter` interval reductions. `-inf` objective values are
/// handled transparently (they simply lose every comparison), which is how
/// overflowing evaluations participate.
pub fn golden_max<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
    tol_abs: f64,
    max_iter: u32,
) -> GoldenResult {
    debug_assert!(lo <= hi);
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (a + b);
        if (b - a) <= tol_abs.max(tol_rel * mid.abs()) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    // Return the best probed point rather than the bracket midpoint so the
    // reported objective value is one that was actually evaluated.
    let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    GoldenResult { x, fx, iterations }
}

/// Minimize a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
    tol_abs: f64,
    max_iter: u32,
) -> GoldenResult {
    let r = golden_max(|x| -f(x), lo, hi, tol_rel, tol_abs, max_iter);
    GoldenResult { x: r.x, fx: -r.fx, iterations: r.iterations }
}
