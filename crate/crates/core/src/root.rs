//! Bracketed scalar root finding.

/// Bisection on a sign-changing bracket `[a, b]` until the bracket is shorter
/// than `xtol`. Returns `None` if `f(a)` and `f(b)` share a strict sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Sign-scan `f` on `n` equally spaced points of `[lo, hi]` and refine every
/// bracket by bisection. Grid points where `f` vanishes exactly count as roots.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, xtol: f64) -> Vec<f64> {
    assert!(n >= 2, "scan needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < n && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            if let Some(r) = bisect(&f, grid[i], grid[i + 1], xtol) {
                roots.push(r);
            }
        }
    }
    roots
}
