use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Half-width of the sampling window used for unbounded intervals.
const UNBOUNDED_HALF_WIDTH: f64 = 5.0;
/// Fraction of a finite interval trimmed from each end when sampling.
const FINITE_TRIM: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValue {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WarpingKind {
    Constant { c: f64 },
    /// `a cosh(b t)`
    Cosh { a: f64, b: f64 },
    /// `a exp(b t)`
    Exp { a: f64, b: f64 },
    /// `a cos(b t)`
    Cos { a: f64, b: f64 },
    /// `Σ cᵢ tⁱ`
    Polynomial { coeffs: Vec<f64> },
    Tabulated(CubicSpline),
}

/// Natural cubic spline through `(tᵢ, yᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(t: &[f64], y: &[f64]) -> Result<Self> {
        let n = t.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidArgument(format!(
                "spline needs >= 3 nodes and matching lengths, got {} and {}",
                n,
                y.len()
            )));
        }
        if t.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite spline node".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("spline nodes must be strictly increasing".into()));
        }
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            diag[i - 1] = (h0 + h1) / 3.0;
            upper[i - 1] = h1 / 6.0;
            rhs[i - 1] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for i in 1..k {
            let lower = (t[i + 1] - t[i]) / 6.0;
            let f = lower / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        for i in (0..k).rev() {
            let next = if i + 1 < k { m[i + 2] } else { 0.0 };
            m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self { t: t.to_vec(), y: y.to_vec(), m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p => (p - 1).min(self.t.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> WarpValue {
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let rho = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) * h * mi / 6.0
            + (3.0 * b * b - 1.0) * h * mj / 6.0;
        let d2 = a * mi + b * mj;
        WarpValue { rho, d1, d2 }
    }

    /// `∫_lo^hi S(t) dt`, exact piecewise (3-point Gauss rule on cubics).
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return -self.integral(hi, lo);
        }
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut total = 0.0;
        let mut a = lo;
        while a < hi {
            let i = self.segment(a);
            let b = if i + 2 < self.t.len() { self.t[i + 1].min(hi) } else { hi };
            let b = if b <= a { hi } else { b };
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in nodes.iter().zip(&weights) {
                total += w * r * self.eval(c + r * x).rho;
            }
            a = b;
        }
        total
    }
}

/// A positive warping function `ρ` on an open interval `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingFunction {
    kind: WarpingKind,
    lo: f64,
    hi: f64,
    window: (f64, f64),
}

impl WarpingFunction {
    pub fn new(kind: WarpingKind, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!("invalid interval ({lo}, {hi})")));
        }
        let params_finite = match &kind {
            WarpingKind::Constant { c } => c.is_finite(),
            WarpingKind::Cosh { a, b } | WarpingKind::Exp { a, b } | WarpingKind::Cos { a, b } => {
                a.is_finite() && b.is_finite()
            }
            WarpingKind::Polynomial { coeffs } => {
                !coeffs.is_empty() && coeffs.iter().all(|c| c.is_finite())
            }
            WarpingKind::Tabulated(_) => true,
        };
        if !params_finite {
            return Err(Error::InvalidArgument("warping parameters must be finite".into()));
        }
        if let WarpingKind::Cos { b, .. } = kind {
            if b == 0.0 {
                return Err(Error::InvalidArgument("cos warping needs b != 0".into()));
            }
        }
        let window = default_window(lo, hi);
        let w = Self { kind, lo, hi, window };
        w.check_positive()?;
        Ok(w)
    }

    fn check_positive(&self) -> Result<()> {
        for t in self.sample_points(1001) {
            let r = self.eval_raw(t).rho;
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidArgument(format!("warping function not positive at t = {t}: {r}")));
            }
        }
        Ok(())
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(WarpingKind::Constant { c }, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn cosh(a: f64, b: f64) -> Result<Self> {
        Self::new(WarpingKind::Cosh { a, b }, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn exp(a: f64, b: f64) -> Result<Self> {
        Self::new(WarpingKind::Exp { a, b }, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `a cos(b t)` on its positivity interval `(−π/2|b|, π/2|b|)`.
    pub fn cos(a: f64, b: f64) -> Result<Self> {
        let half = FRAC_PI_2 / b.abs();
        Self::new(WarpingKind::Cos { a, b }, -half, half)
    }

    pub fn polynomial(coeffs: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        Self::new(WarpingKind::Polynomial { coeffs }, lo, hi)
    }

    /// Natural cubic spline through the table; the interval is the closed
    /// node range and evaluation outside it is an error.
    pub fn tabulated(t: &[f64], rho: &[f64]) -> Result<Self> {
        let s = CubicSpline::new(t, rho)?;
        let (lo, hi) = s.domain();
        let mut w = Self::new(WarpingKind::Tabulated(s), lo, hi)?;
        w.window = (lo, hi);
        w.check_positive()?;
        Ok(w)
    }

    /// Same function on a sub-interval.
    pub fn restricted(&self, lo: f64, hi: f64) -> Result<Self> {
        if lo < self.lo || hi > self.hi {
            return Err(Error::InvalidArgument(format!(
                "({lo}, {hi}) is not inside ({}, {})",
                self.lo, self.hi
            )));
        }
        Self::new(self.kind.clone(), lo, hi)
    }

    /// Overrides the sampling window used by audits and certificates.
    pub fn with_window(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || !self.contains(lo) || !self.contains(hi) {
            return Err(Error::InvalidArgument(format!("window [{lo}, {hi}] not inside the interval")));
        }
        let w = Self { window: (lo, hi), ..self.clone() };
        w.check_positive()?;
        Ok(w)
    }

    pub fn kind(&self) -> &WarpingKind {
        &self.kind
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn sampling_window(&self) -> (f64, f64) {
        self.window
    }

    pub fn contains(&self, t: f64) -> bool {
        match self.kind {
            WarpingKind::Tabulated(_) => t >= self.lo && t <= self.hi,
            _ => t > self.lo && t < self.hi,
        }
    }

    /// `n` evenly spaced points covering the sampling window.
    pub fn sample_points(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.window;
        match n {
            0 => vec![],
            1 => vec![0.5 * (a + b)],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<WarpValue> {
        if !self.contains(t) {
            return Err(Error::OutsideInterval { t, lo: self.lo, hi: self.hi });
        }
        Ok(self.eval_raw(t))
    }

    fn eval_raw(&self, t: f64) -> WarpValue {
        match &self.kind {
            WarpingKind::Constant { c } => WarpValue { rho: *c, d1: 0.0, d2: 0.0 },
            WarpingKind::Cosh { a, b } => {
                let (s, c) = ((b * t).sinh(), (b * t).cosh());
                WarpValue { rho: a * c, d1: a * b * s, d2: a * b * b * c }
            }
            WarpingKind::Exp { a, b } => {
                let e = (b * t).exp();
                WarpValue { rho: a * e, d1: a * b * e, d2: a * b * b * e }
            }
            WarpingKind::Cos { a, b } => {
                let (s, c) = (b * t).sin_cos();
                WarpValue { rho: a * c, d1: -a * b * s, d2: -a * b * b * c }
            }
            WarpingKind::Polynomial { coeffs } => {
                let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2 = d2 * t + 2.0 * d1;
                    d1 = d1 * t + p;
                    p = p * t + c;
                }
                WarpValue { rho: p, d1, d2 }
            }
            WarpingKind::Tabulated(s) => s.eval(t),
        }
    }

    /// `∫_{t0}^{t1} ρ(s) ds`.
    pub fn primitive(&self, t0: f64, t1: f64) -> Result<f64> {
        for t in [t0, t1] {
            if !self.contains(t) {
                return Err(Error::OutsideInterval { t, lo: self.lo, hi: self.hi });
            }
        }
        Ok(match &self.kind {
            WarpingKind::Constant { c } => c * (t1 - t0),
            WarpingKind::Cosh { a, b } if *b != 0.0 => a / b * ((b * t1).sinh() - (b * t0).sinh()),
            WarpingKind::Cosh { a, .. } => a * (t1 - t0),
            WarpingKind::Exp { a, b } if *b != 0.0 => a / b * ((b * t1).exp() - (b * t0).exp()),
            WarpingKind::Exp { a, .. } => a * (t1 - t0),
            WarpingKind::Cos { a, b } => a / b * ((b * t1).sin() - (b * t0).sin()),
            WarpingKind::Polynomial { coeffs } => {
                let anti = |t: f64| {
                    coeffs
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (i, c)| acc * t + c / (i + 1) as f64)
                        * t
                };
                anti(t1) - anti(t0)
            }
            WarpingKind::Tabulated(s) => s.integral(t0, t1),
        })
    }
}

fn default_window(lo: f64, hi: f64) -> (f64, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let trim = FINITE_TRIM * (hi - lo);
            (lo + trim, hi - trim)
        }
        (true, false) => (lo + FINITE_TRIM, lo + 2.0 * UNBOUNDED_HALF_WIDTH),
        (false, true) => (hi - 2.0 * UNBOUNDED_HALF_WIDTH, hi - FINITE_TRIM),
        (false, false) => (-UNBOUNDED_HALF_WIDTH, UNBOUNDED_HALF_WIDTH),
    }
}
