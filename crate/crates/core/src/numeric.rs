//! Small root-finding, quadrature and line-search helpers.

/// Result of bisecting a function across a sign change.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: u32,
}

impl Bracket {
    /// Endpoint with the smaller `|f|`.
    pub fn best(&self) -> (f64, f64) {
        if self.f_lo.abs() <= self.f_hi.abs() {
            (self.lo, self.f_lo)
        } else {
            (self.hi, self.f_hi)
        }
    }
}

/// Bisects `[lo, hi]`, where `f(lo) >= 0 > f(hi)` or vice versa, until
/// `|f(mid)| < tol` or the interval can no longer be split in `f64`.
///
/// With `tol = 0.0` the bracket is shrunk to adjacent floats.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    tol: f64,
) -> Bracket {
    let lo_positive = f_lo >= 0.0;
    let mut iterations = 0;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        iterations += 1;
        if (f_mid >= 0.0) == lo_positive {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        if f_mid.abs() < tol {
            break;
        }
    }
    Bracket {
        lo,
        hi,
        f_lo,
        f_hi,
        iterations,
    }
}

/// Outcome of adaptive Simpson integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    /// Every leaf met its share of the tolerance, or the summed estimate
    /// is within the tolerance.
    pub converged: bool,
}

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if b <= a {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut q = Quadrature {
        value: 0.0,
        error: 0.0,
        converged: true,
    };
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH, &mut q);
    // leaves cut off at the depth limit still count if the total error fits
    q.converged = q.converged || q.error <= tol;
    q
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    q: &mut Quadrature,
) {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 || m <= a || m >= b {
        if delta.abs() > 15.0 * tol {
            q.converged = false;
        }
        q.value += left + right + delta / 15.0;
        q.error += delta.abs() / 15.0;
        return;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, q);
    simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, q);
}

/// Golden-section search for the maximizer of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
