//! The radial Cauchy problem `(w z')' + A w z = 0`, `z(r₀⁺) = 1`,
//! `(w z')(r₀⁺) = 0`, integrated as the first-order system
//! `z' = y / w`, `y' = −A w z` with an embedded Dormand–Prince 5(4) pair.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Offset applied to the initial radius when `w(r₀) = 0`.
pub const ORIGIN_OFFSET: f64 = 1e-8;

#[derive(Clone)]
pub enum ProfileFn {
    Constant(f64),
    /// Piecewise-linear interpolation of `(r, value)` samples, clamped at
    /// the ends.
    Table { r: Vec<f64>, v: Vec<f64> },
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ProfileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileFn::Constant(c) => write!(f, "Constant({c})"),
            ProfileFn::Table { r, .. } => write!(f, "Table({} samples)", r.len()),
            ProfileFn::Func(_) => write!(f, "Func"),
        }
    }
}

impl ProfileFn {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ProfileFn::Func(Arc::new(f))
    }

    pub fn table(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != v.len() {
            return Err(Error::InvalidArgument("profile table needs >= 2 matching samples".into()));
        }
        if r.windows(2).any(|p| p[1] <= p[0]) || r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("profile radii must be finite and increasing".into()));
        }
        Ok(ProfileFn::Table { r, v })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ProfileFn::Constant(c) => *c,
            ProfileFn::Func(f) => f(x),
            ProfileFn::Table { r, v } => {
                let n = r.len();
                if x <= r[0] {
                    return v[0];
                }
                if x >= r[n - 1] {
                    return v[n - 1];
                }
                let i = r.partition_point(|&ri| ri <= x) - 1;
                let s = (x - r[i]) / (r[i + 1] - r[i]);
                v[i] + s * (v[i + 1] - v[i])
            }
        }
    }
}

/// Weighted boundary volume `w(r)` and mean potential `A(r)` on `[r₀, R]`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub w: ProfileFn,
    pub a: ProfileFn,
    pub r0: f64,
    pub r_max: f64,
}

impl RadialProfile {
    pub fn new(w: ProfileFn, a: ProfileFn, r0: f64, r_max: f64) -> Result<Self> {
        if !(r0.is_finite() && r_max.is_finite() && r0 < r_max) {
            return Err(Error::InvalidArgument(format!("invalid radial domain [{r0}, {r_max}]")));
        }
        Ok(Self { w, a, r0, r_max })
    }

    /// Reads two-column `(r, w)` and `(r, A)` tables (whitespace or comma
    /// separated, `#` comments). The domain is the overlap of both tables.
    pub fn from_tables(w_text: &str, a_text: &str) -> Result<Self> {
        let (rw, w) = parse_two_columns(w_text)?;
        let (ra, a) = parse_two_columns(a_text)?;
        let r0 = rw[0].max(ra[0]);
        let r_max = rw[rw.len() - 1].min(ra[ra.len() - 1]);
        Self::new(ProfileFn::table(rw, w)?, ProfileFn::table(ra, a)?, r0, r_max)
    }

    pub fn with_horizon(&self, r_max: f64) -> Result<Self> {
        Self::new(self.w.clone(), self.a.clone(), self.r0, r_max)
    }
}

pub fn parse_two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if vals.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected two columns", no + 1)));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", no + 1)));
        match (p(vals[0]), p(vals[1])) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            // A non-numeric first row is a header.
            _ if xs.is_empty() => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok((xs, ys))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    pub rtol: f64,
    /// Width below which a bracketed zero is accepted, relative to `max(1, r)`.
    pub zero_tol: f64,
    pub max_steps: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, zero_tol: 1e-13, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    /// Accepted step endpoints, starting at the (possibly offset) initial radius.
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// `y = w z'`.
    pub y: Vec<f64>,
    /// `z' = y / w` at each node.
    pub dz: Vec<f64>,
    pub zeros: Vec<f64>,
}

impl RadialSolution {
    pub fn start(&self) -> f64 {
        self.r[0]
    }

    pub fn end(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Cubic Hermite interpolation of `z`; clamped outside the grid.
    pub fn z_at(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x <= self.r[0] {
            return self.z[0];
        }
        if x >= self.r[n - 1] {
            return self.z[n - 1];
        }
        let i = self.r.partition_point(|&ri| ri <= x) - 1;
        let h = self.r[i + 1] - self.r[i];
        let s = (x - self.r[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.z[i] + h10 * h * self.dz[i] + h01 * self.z[i + 1] + h11 * h * self.dz[i + 1]
    }

    /// `r,z,wz_prime` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,z,wz_prime\n");
        for i in 0..self.r.len() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.r[i], self.z[i], self.y[i]));
        }
        s
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct System<'a> {
    prof: &'a RadialProfile,
}

impl System<'_> {
    fn rhs(&self, r: f64, s: [f64; 2]) -> Result<[f64; 2]> {
        let w = self.prof.w.eval(r);
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Precondition(format!("w(r) = {w} is not positive at r = {r}")));
        }
        let a = self.prof.a.eval(r);
        Ok([s[1] / w, -a * w * s[0]])
    }

    /// One Dormand–Prince step; returns the 5th-order state, the error
    /// estimate and the first stage.
    fn step(&self, r: f64, s: [f64; 2], k1: [f64; 2], h: f64) -> Result<([f64; 2], [f64; 2])> {
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for i in 1..7 {
            let mut st = s;
            for j in 0..i {
                st[0] += h * A[i][j] * k[j][0];
                st[1] += h * A[i][j] * k[j][1];
            }
            if i == 6 {
                k[6] = self.rhs(r + h, st)?;
                let mut err = [0.0; 2];
                for j in 0..7 {
                    err[0] += h * E[j] * k[j][0];
                    err[1] += h * E[j] * k[j][1];
                }
                return Ok((st, err));
            }
            k[i] = self.rhs(r + C[i] * h, st)?;
        }
        unreachable!()
    }
}

pub fn radial_cauchy_solve(prof: &RadialProfile) -> Result<RadialSolution> {
    radial_cauchy_solve_with(prof, RadialOptions::default())
}

pub fn radial_cauchy_solve_with(prof: &RadialProfile, opts: RadialOptions) -> Result<RadialSolution> {
    let sys = System { prof };
    let mut r = prof.r0;
    if prof.w.eval(r) <= 0.0 {
        r += ORIGIN_OFFSET;
    }
    let end = prof.r_max;
    for k in 1..=10_000 {
        let x = r + (end - r) * k as f64 / 10_000.0;
        let w = prof.w.eval(x);
        if !(w > 0.0) {
            return Err(Error::Precondition(format!("w(r) = {w} is not positive at r = {x}")));
        }
    }
    let mut s = [1.0, 0.0];
    let mut k1 = sys.rhs(r, s)?;
    let mut out = RadialSolution {
        r: vec![r],
        z: vec![s[0]],
        y: vec![s[1]],
        dz: vec![k1[0]],
        zeros: Vec::new(),
    };
    let mut h = ((end - r) * 1e-3).min(1e-2);
    let tiny = f64::MIN_POSITIVE * 1e10;
    for _ in 0..opts.max_steps {
        if r >= end {
            return Ok(out);
        }
        let last = end - r <= h * (1.0 + 1e-12);
        if last {
            h = end - r;
        }
        let (s1, err) = sys.step(r, s, k1, h)?;
        let mut e: f64 = 0.0;
        for c in 0..2 {
            let scale = tiny + opts.rtol * s[c].abs().max(s1[c].abs()).max((h * k1[c]).abs());
            e = e.max(err[c].abs() / scale);
        }
        if !e.is_finite() {
            h *= 0.2;
            continue;
        }
        if e <= 1.0 {
            let r1 = if last { end } else { r + h };
            if s[0] != 0.0 && (s1[0] == 0.0 || s[0].signum() != s1[0].signum()) {
                out.zeros.push(refine_zero(&sys, r, s, k1, h, opts.zero_tol)?);
            }
            r = r1;
            s = s1;
            k1 = sys.rhs(r, s)?;
            out.r.push(r);
            out.z.push(s[0]);
            out.y.push(s[1]);
            out.dz.push(k1[0]);
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
        }
        if r + h == r {
            return Err(Error::NoConvergence { iterations: out.r.len(), residual: e });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_steps, residual: f64::NAN })
}

fn refine_zero(sys: &System<'_>, r: f64, s: [f64; 2], k1: [f64; 2], h: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, h);
    let z0 = s[0];
    while hi - lo > tol * (r + hi).abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let (sm, _) = sys.step(r, s, k1, mid)?;
        if sm[0] == 0.0 {
            return Ok(r + mid);
        }
        if sm[0].signum() == z0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(r + 0.5 * (lo + hi))
}

/// Divergence diagnostics for `∫ f` from increments over `[R/4, R/2]` and
/// `[R/2, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralTrend {
    pub first_increment: f64,
    pub second_increment: f64,
    pub ratio: f64,
    /// Positive increments that do not decay (ratio ≥ 0.75).
    pub diverging: bool,
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn trend(f: &dyn Fn(f64) -> f64, start: f64, horizon: f64) -> IntegralTrend {
    let q = (horizon / 4.0).max(start);
    let m = (horizon / 2.0).max(q);
    let i1 = simpson(f, q, m, 4000);
    let i2 = simpson(f, m, horizon, 4000);
    let ratio = i2 / i1;
    IntegralTrend { first_increment: i1, second_increment: i2, ratio, diverging: i2 > 0.0 && ratio >= 0.75 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oscillation {
    Oscillatory,
    NonOscillatoryUpTo(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub classification: Oscillation,
    pub zeros: Vec<f64>,
    /// Trend of `∫ 1/w`.
    pub inverse_w: IntegralTrend,
    /// Trend of `∫ A w`.
    pub aw: IntegralTrend,
    /// Both integrals appear to diverge.
    pub criterion_satisfied: bool,
}

pub fn oscillation_classify(prof: &RadialProfile, horizon: f64) -> Result<OscillationReport> {
    let p = prof.with_horizon(horizon)?;
    let sol = radial_cauchy_solve(&p)?;
    let start = sol.start();
    let inv_w = |r: f64| 1.0 / p.w.eval(r);
    let aw = |r: f64| p.a.eval(r) * p.w.eval(r);
    let inverse_w = trend(&inv_w, start, horizon);
    let aw = trend(&aw, start, horizon);
    let classification = if sol.zeros.len() >= 2 {
        Oscillation::Oscillatory
    } else {
        Oscillation::NonOscillatoryUpTo(horizon)
    };
    Ok(OscillationReport {
        classification,
        zeros: sol.zeros,
        criterion_satisfied: inverse_w.diverging && aw.diverging,
        inverse_w,
        aw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(w: ProfileFn, a: ProfileFn, r_max: f64) -> RadialProfile {
        RadialProfile::new(w, a, 0.0, r_max).unwrap()
    }

    #[test]
    fn zero_potential_keeps_z_constant() {
        let p = prof(ProfileFn::func(|r| r), ProfileFn::Constant(0.0), 50.0);
        let s = radial_cauchy_solve(&p).unwrap();
        assert!(s.zeros.is_empty());
        assert!(s.z.iter().all(|&z| z == 1.0));
        assert!(s.y.iter().all(|&y| y == 0.0));
        assert_eq!(s.start(), ORIGIN_OFFSET);
    }

    #[test]
    fn damped_oscillator_zero_spacing() {
        // z'' + 2z' + 2z = 0, z = e^{-r}(cos r + sin r): zeros at 3π/4 + kπ.
        let p = RadialProfile::new(ProfileFn::func(|r| (2.0 * r).exp()), ProfileFn::Constant(2.0), 0.0, 20.0)
            .unwrap();
        let s = radial_cauchy_solve(&p).unwrap();
        assert!(s.zeros.len() >= 5);
        for (k, z) in s.zeros.iter().enumerate() {
            let want = 0.75 * std::f64::consts::PI + k as f64 * std::f64::consts::PI;
            assert!((z - want).abs() < 1e-8, "{k}: {z} vs {want}");
        }
        let mid: f64 = 1.2345;
        let exact = (-mid).exp() * (mid.cos() + mid.sin());
        assert!((s.z_at(mid) - exact).abs() < 1e-9);
    }

    #[test]
    fn interior_degeneracy_is_an_error() {
        let p = RadialProfile::new(ProfileFn::func(|r| 1.0 - r), ProfileFn::Constant(1.0), 0.0, 2.0).unwrap();
        assert!(matches!(radial_cauchy_solve(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn table_parsing_and_csv() {
        let p = RadialProfile::from_tables("r w\n0 1\n1 1\n2 1\n", "0, 0\n3, 0\n").unwrap();
        assert_eq!((p.r0, p.r_max), (0.0, 2.0));
        let s = radial_cauchy_solve(&p).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("r,z,wz_prime\n"));
        assert_eq!(csv.lines().count(), s.r.len() + 1);
        assert!(parse_two_columns("0 1\n1 x\n").is_err());
    }

    #[test]
    fn classification_examples() {
        let osc = oscillation_classify(&prof(ProfileFn::func(|r| r), ProfileFn::Constant(1.0), 1.0), 60.0).unwrap();
        assert_eq!(osc.classification, Oscillation::Oscillatory);
        assert!(osc.criterion_satisfied);
        let neg = oscillation_classify(&prof(ProfileFn::func(|r| r), ProfileFn::Constant(-1.0), 1.0), 30.0).unwrap();
        assert!(neg.zeros.is_empty());
        assert!(!neg.aw.diverging);
        let fast = oscillation_classify(
            &prof(ProfileFn::func(|r| (2.0 * r).exp()), ProfileFn::Constant(0.5), 1.0),
            200.0,
        )
        .unwrap();
        assert!(fast.zeros.is_empty());
        assert!(!fast.inverse_w.diverging);
    }
}
