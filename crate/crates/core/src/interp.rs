//! Monotone piecewise-cubic Hermite interpolation of radial samples.
//!
//! Slopes come from the three-point (parabolic) estimate, clipped with the
//! Fritsch–Carlson/Hyman bound `|d| ≤ 3 min(|δ_left|, |δ_right|)` and set to
//! zero at discrete extrema.

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn limited_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    if d0 * d1 <= 0.0 {
        return 0.0;
    }
    let m = (h1 * d0 + h0 * d1) / (h0 + h1);
    let cap = 3.0 * d0.abs().min(d1.abs());
    m.signum() * m.abs().min(cap)
}

impl MonotoneCubic {
    /// `knots` strictly increasing. `left_slope` fixes the derivative at the
    /// first knot (zero for radial symmetry at the origin); the last slope
    /// uses the limited one-sided secant.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, left_slope: Option<f64>) -> Self {
        assert_eq!(knots.len(), values.len());
        assert!(knots.len() >= 2);
        let m = knots.len();
        let secant: Vec<f64> = (0..m - 1)
            .map(|k| (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]))
            .collect();
        let mut slopes = vec![0.0; m];
        for k in 1..m - 1 {
            slopes[k] = limited_slope(knots[k] - knots[k - 1], knots[k + 1] - knots[k], secant[k - 1], secant[k]);
        }
        slopes[0] = left_slope.unwrap_or(secant[0]);
        slopes[m - 1] = secant[m - 2];
        Self { knots, values, slopes }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.knots.len() - 2),
        }
    }

    /// Value at `x`; `None` outside the knot range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self.segment(x);
        let h = self.knots[k + 1] - self.knots[k];
        let t = (x - self.knots[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1])
    }
}
