//! Piecewise cubic Hermite interpolation of vector-valued time series.

/// Hermite basis weights at fractional position `s ∈ [0, 1]` of a cell of
/// width `h`: `(value0, slope0, value1, slope1)`.
#[inline]
pub fn hermite_weights(s: f64, h: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        2.0 * s3 - 3.0 * s2 + 1.0,
        h * (s3 - 2.0 * s2 + s),
        -2.0 * s3 + 3.0 * s2,
        h * (s3 - s2),
    ]
}

/// Evaluates the Hermite cubic on one cell into `out`.
pub fn hermite_eval(w: &[f64; 4], y0: &[f64], d0: &[f64], y1: &[f64], d1: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = w[0] * y0[i] + w[1] * d0[i] + w[2] * y1[i] + w[3] * d1[i];
    }
}

/// Slopes of the natural cubic spline through `(times[i], values[i])`,
/// per component. The tridiagonal system is shared by all components and
/// solved once with the Thomas algorithm.
pub fn natural_spline_slopes(times: &[f64], values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = times.len();
    let dim = values.first().map_or(0, Vec::len);
    if n < 2 {
        return vec![vec![0.0; dim]; n];
    }
    let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let delta = |i: usize, c: usize| (values[i + 1][c] - values[i][c]) / h[i];

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![vec![0.0; dim]; n];
    diag[0] = 2.0;
    sup[0] = 1.0;
    for c in 0..dim {
        rhs[0][c] = 3.0 * delta(0, c);
    }
    for i in 1..n - 1 {
        sub[i] = h[i];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i - 1];
        for c in 0..dim {
            rhs[i][c] = 3.0 * (h[i] * delta(i - 1, c) + h[i - 1] * delta(i, c));
        }
    }
    sub[n - 1] = 1.0;
    diag[n - 1] = 2.0;
    for c in 0..dim {
        rhs[n - 1][c] = 3.0 * delta(n - 2, c);
    }

    // Forward sweep.
    for i in 1..n {
        let m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        let (head, tail) = rhs.split_at_mut(i);
        for (r, p) in tail[0].iter_mut().zip(&head[i - 1]) {
            *r -= m * p;
        }
    }
    // Back substitution.
    for c in 0..dim {
        rhs[n - 1][c] /= diag[n - 1];
    }
    for i in (0..n - 1).rev() {
        let (head, tail) = rhs.split_at_mut(i + 1);
        for (r, nx) in head[i].iter_mut().zip(&tail[0]) {
            *r = (*r - sup[i] * nx) / diag[i];
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let df = |t: f64| -2.0 + t + 9.0 * t * t;
        let (t0, t1) = (0.3, 0.8);
        for s in [0.0, 0.1, 0.5, 0.77, 1.0] {
            let w = hermite_weights(s, t1 - t0);
            let mut out = [0.0];
            hermite_eval(&w, &[f(t0)], &[df(t0)], &[f(t1)], &[df(t1)], &mut out);
            assert!((out[0] - f(t0 + s * (t1 - t0))).abs() < 1e-14);
        }
    }

    #[test]
    fn spline_slopes_exact_for_lines_and_two_points() {
        let times = vec![0.0, 0.5, 1.5, 2.0, 3.0];
        let values: Vec<Vec<f64>> = times.iter().map(|t| vec![2.0 * t - 1.0, -t]).collect();
        let slopes = natural_spline_slopes(&times, &values);
        for s in &slopes {
            assert!((s[0] - 2.0).abs() < 1e-13);
            assert!((s[1] + 1.0).abs() < 1e-13);
        }
        let two = natural_spline_slopes(&[0.0, 2.0], &[vec![1.0], vec![5.0]]);
        assert!((two[0][0] - 2.0).abs() < 1e-15 && (two[1][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spline_slopes_converge_for_smooth_data() {
        let n = 201;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values: Vec<Vec<f64>> = times.iter().map(|t| vec![(3.0 * t).sin()]).collect();
        let slopes = natural_spline_slopes(&times, &values);
        // away from the natural end conditions the slope is accurate
        let mid = n / 2;
        assert!((slopes[mid][0] - 3.0 * (3.0 * times[mid]).cos()).abs() < 1e-7);
    }
}
