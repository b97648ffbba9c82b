//! Gauss–Legendre rules and adaptive Simpson integration.

use super::AsymptoticsError;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A Gauss–Legendre rule mapped to `[a, b]`.
pub fn gl_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (m + h * xi, h * wi))
        .collect()
}

/// Composite Gauss–Legendre rule on `[a, b]`, one `n`-point panel between
/// consecutive breakpoints.
pub fn gl_panels(n: usize, a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    panels(a, b, breakpoints)
        .windows(2)
        .flat_map(|p| gl_on(n, p[0], p[1]))
        .collect()
}

/// Sorted cut points `a, ..., b` including interior breakpoints.
pub fn panels(a: f64, b: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    cuts
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]`, splitting first at the
/// given breakpoints. `tol` is an absolute tolerance over the whole interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64, AsymptoticsError> {
    if b <= a {
        return Ok(0.0);
    }
    let cuts = panels(a, b, breakpoints);
    let mut total = 0.0;
    for p in cuts.windows(2) {
        let (lo, hi) = (p[0], p[1]);
        let share = tol * (hi - lo) / (b - a);
        let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(&f, lo, hi, flo, fmid, fhi, whole, share, MAX_DEPTH)?;
    }
    Ok(total)
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
) -> Result<f64, AsymptoticsError> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-12 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(AsymptoticsError::Quadrature { a, b });
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 32] {
            let rule = gl_on(n, 0.0, 2.0);
            let deg = 2 * n - 1;
            let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert_abs_diff_eq!(approx / exact, 1.0, epsilon = 1e-13);
        }
        let (_, w) = gauss_legendre(32);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_honours_breakpoints() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { x.sin() };
        let v = adaptive_simpson(f, 0.0, 1.0, &[0.3], 1e-13).unwrap();
        assert_abs_diff_eq!(v, 0.3 + 0.3f64.cos() - 1f64.cos(), epsilon = 1e-12);
    }

    #[test]
    fn panel_cuts() {
        assert_eq!(panels(0.0, 1.0, &[0.5, 2.0, 0.5]), vec![0.0, 0.5, 1.0]);
    }
}
