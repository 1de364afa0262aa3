//! Piecewise cubic Hermite interpolation with known nodal slopes.

#[derive(Debug, Clone)]
pub struct Hermite<'a> {
    x: &'a [f64],
    y: &'a [f64],
    dy: &'a [f64],
}

impl<'a> Hermite<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], dy: &'a [f64]) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == dy.len(), "interpolation data shape");
        Self { x, y, dy }
    }

    fn cell(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.cell(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        if t == x0 {
            return self.y[i];
        }
        if t == x1 {
            return self.y[i + 1];
        }
        let h = x1 - x0;
        let s = (t - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]
    }

    pub fn eval_slope(&self, t: f64) -> f64 {
        let i = self.cell(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.y[i] + d10 * self.dy[i] + d01 * self.y[i + 1] + d11 * self.dy[i + 1]
    }
}
