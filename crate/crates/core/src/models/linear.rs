/// `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearModel {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearModel {
    pub const fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub const fn constant(value: f64) -> Self {
        Self {
            slope: 0.0,
            intercept: value,
        }
    }

    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Ordinary least squares over `(x, y)` pairs. Degenerate inputs (one
    /// point, or zero variance in `x`) yield the constant mean of `y`.
    pub fn fit<I>(points: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)> + Clone,
    {
        let mut n = 0.0;
        let mut mean_x = 0.0;
        let mut mean_y = 0.0;
        for (x, y) in points.clone() {
            n += 1.0;
            mean_x += x;
            mean_y += y;
        }
        if n == 0.0 {
            return Self::default();
        }
        mean_x /= n;
        mean_y /= n;

        // Centered second pass for numerical stability.
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (x, y) in points {
            let dx = x - mean_x;
            sxx += dx * dx;
            sxy += dx * (y - mean_y);
        }
        if sxx <= 0.0 || !sxx.is_finite() {
            return Self::constant(mean_y);
        }
        let slope = sxy / sxx;
        Self::new(slope, mean_y - slope * mean_x)
    }
}
