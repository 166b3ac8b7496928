/// Natural cubic spline through `(t_j, y_j)` with uniformly spaced knots.
#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    t0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub(crate) fn uniform(t0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2 && h > 0.0);
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the interior second derivatives
            let k = n - 2;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<f64> = (1..n - 1).map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h)).collect();
            for i in 1..k {
                let f = 1.0 / diag[i - 1];
                diag[i] -= f;
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
            }
        }
        Self { t0, h, y, m }
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let n = self.y.len();
        let s = ((t - self.t0) / self.h).clamp(0.0, (n - 1) as f64);
        let j = (s.floor() as usize).min(n - 2);
        let a = s - j as f64;
        let b = 1.0 - a;
        let h2 = self.h * self.h / 6.0;
        b * self.y[j] + a * self.y[j + 1] + h2 * ((b * b * b - b) * self.m[j] + (a * a * a - a) * self.m[j + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_reproduces_lines() {
        let s = CubicSpline::uniform(1.0, 0.5, vec![0.0, 2.0, -1.0, 3.0, 0.5]);
        for (j, y) in [0.0, 2.0, -1.0, 3.0, 0.5].iter().enumerate() {
            assert!((s.eval(1.0 + 0.5 * j as f64) - y).abs() < 1e-12);
        }
        let line = CubicSpline::uniform(0.0, 1.0, vec![1.0, 3.0, 5.0, 7.0]);
        assert!((line.eval(1.7) - 4.4).abs() < 1e-12);
    }

    #[test]
    fn second_derivative_is_continuous() {
        let s = CubicSpline::uniform(0.0, 1.0, vec![0.0, 1.0, -2.0, 0.5, 4.0, 1.0]);
        let d2 = |t: f64| {
            let e = 1e-4;
            (s.eval(t + e) - 2.0 * s.eval(t) + s.eval(t - e)) / (e * e)
        };
        for knot in 1..5 {
            let t = knot as f64;
            assert!((d2(t - 1e-3) - d2(t + 1e-3)).abs() < 0.1);
        }
    }
}
