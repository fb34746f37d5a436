//! Scalar minimization helpers shared by the learners and the line search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// Final bracket; contains the minimizer of a unimodal function.
    pub lo: f64,
    pub hi: f64,
}

/// Golden-section search for a minimizer of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`. Returns `(x, f(x))` for the
/// best point probed, endpoints included.
pub fn golden_section(f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let m = golden_search(f, lo, hi, tol);
    (m.x, m.value)
}

/// [`golden_section`] that also reports the final bracket.
pub fn golden_search(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    let mut best = if fb < fa { (b, fb) } else { (a, fa) };
    if b - a <= tol {
        return Minimum {
            x: best.0,
            value: best.1,
            lo: a,
            hi: b,
        };
    }

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // 200 iterations shrink any finite bracket below f64 resolution.
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
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
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Minimum {
        x: best.0,
        value: best.1,
        lo: a,
        hi: b,
    }
}
