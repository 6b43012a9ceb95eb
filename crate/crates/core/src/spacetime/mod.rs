//! Generalized Robertson–Walker spacetimes `I ×_ρ F` with metric
//! `ḡ = −dt² + ρ(t)² g_F`.
//!
//! Fibers are either of constant sectional curvature `κ_F`, described in the
//! conformally flat chart `g_F = φ(x)² δ` with `φ = 2 / (1 + κ_F |x|²)`
//! (stereographic sphere, Poincaré ball or flat coordinates), or a
//! two-dimensional triangle mesh whose pointwise curvature is the angle
//! defect. In both cases the fiber curvature at a point is a scalar `K_F`
//! and the ambient curvature tensors have the closed forms
//!
//! ```text
//! Riem = ρ²(K_F + ρ'² − ρρ'') G_F + (ρ''/ρ) Ḡ
//! Ric  = (m−1)(K_F − ρρ'' + ρ'²) g_F + m (ρ''/ρ) ḡ
//! ```
//!
//! where `G(X,Y,Z,W) = g(X,Z)g(Y,W) − g(X,W)g(Y,Z)`.

pub mod audit;
mod warping;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::meshlab::{self, SurfaceMesh};

pub use warping::{CubicSpline, WarpValue, WarpingFunction, WarpingKind};

/// Default sample count for curvature audits.
pub const DEFAULT_AUDIT_SAMPLES: usize = 1000;
/// Default sample count for the sectional-curvature bound certifier.
pub const DEFAULT_CERTIFY_SAMPLES: usize = 10_000;
/// Default tolerance for the constant-curvature conditions.
pub const DEFAULT_CC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FiberGeometry {
    ConstantCurvature { kappa: f64 },
    /// Per-vertex Gaussian curvature of a 2-D mesh fiber.
    Mesh { curvature: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberModel {
    dim: usize,
    geometry: FiberGeometry,
}

impl FiberModel {
    pub fn constant_curvature(dim: usize, kappa: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("fiber dimension must be >= 2, got {dim}")));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidArgument("fiber curvature must be finite".into()));
        }
        Ok(Self { dim, geometry: FiberGeometry::ConstantCurvature { kappa } })
    }

    /// Two-dimensional fiber whose curvature is the angle-defect density of
    /// `mesh`.
    pub fn from_mesh(mesh: &SurfaceMesh) -> Result<Self> {
        let report = meshlab::angle_defect_curvature(mesh)?;
        Ok(Self { dim: 2, geometry: FiberGeometry::Mesh { curvature: report.curvature } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> &FiberGeometry {
        &self.geometry
    }

    pub fn constant_kappa(&self) -> Option<f64> {
        match self.geometry {
            FiberGeometry::ConstantCurvature { kappa } => Some(kappa),
            FiberGeometry::Mesh { .. } => None,
        }
    }

    /// Radius of the chart ball; finite only for hyperbolic fibers.
    pub fn chart_radius(&self) -> f64 {
        match self.geometry {
            FiberGeometry::ConstantCurvature { kappa } if kappa < 0.0 => 1.0 / (-kappa).sqrt(),
            _ => f64::INFINITY,
        }
    }

    pub fn check_point(&self, p: &FiberPoint) -> Result<()> {
        match (&self.geometry, p) {
            (FiberGeometry::ConstantCurvature { kappa }, FiberPoint::Chart(x)) => {
                if x.len() != self.dim {
                    return Err(Error::InvalidArgument(format!(
                        "chart point has {} coordinates, fiber dimension is {}",
                        x.len(),
                        self.dim
                    )));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite chart coordinate".into()));
                }
                let r2: f64 = x.iter().map(|c| c * c).sum();
                if 1.0 + kappa * r2 <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "chart point |x|² = {r2} outside the model disk"
                    )));
                }
                Ok(())
            }
            (FiberGeometry::Mesh { curvature }, FiberPoint::Vertex(i)) => {
                if *i >= curvature.len() {
                    return Err(Error::InvalidArgument(format!("vertex {i} out of range")));
                }
                Ok(())
            }
            _ => Err(Error::InvalidArgument("fiber point kind does not match fiber model".into())),
        }
    }

    /// Conformal factor `φ` of the fiber metric at `p` (`g_F = φ² δ`).
    /// Mesh fibers use a local orthonormal frame, so `φ = 1`.
    pub fn conformal_factor(&self, p: &FiberPoint) -> f64 {
        match (&self.geometry, p) {
            (FiberGeometry::ConstantCurvature { kappa }, FiberPoint::Chart(x)) => {
                chart_conformal_factor(*kappa, x)
            }
            _ => 1.0,
        }
    }

    /// Sectional curvature of the fiber at `p`.
    pub fn curvature_at(&self, p: &FiberPoint) -> f64 {
        match (&self.geometry, p) {
            (FiberGeometry::ConstantCurvature { kappa }, _) => *kappa,
            (FiberGeometry::Mesh { curvature }, FiberPoint::Vertex(i)) => curvature[*i],
            (FiberGeometry::Mesh { .. }, FiberPoint::Chart(_)) => f64::NAN,
        }
    }
}

/// `φ(x) = 2 / (1 + κ|x|²)`, or `1` for a flat fiber.
pub fn chart_conformal_factor(kappa: f64, x: &[f64]) -> f64 {
    if kappa == 0.0 {
        return 1.0;
    }
    let r2: f64 = x.iter().map(|c| c * c).sum();
    2.0 / (1.0 + kappa * r2)
}

/// Gradient of `σ = ln φ` in chart coordinates.
pub fn chart_log_factor_gradient(kappa: f64, x: &[f64]) -> Vec<f64> {
    if kappa == 0.0 {
        return vec![0.0; x.len()];
    }
    let r2: f64 = x.iter().map(|c| c * c).sum();
    let d = 1.0 + kappa * r2;
    x.iter().map(|c| -2.0 * kappa * c / d).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiberPoint {
    Chart(Vec<f64>),
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasePoint {
    pub t: f64,
    pub fiber: FiberPoint,
}

impl BasePoint {
    pub fn chart(t: f64, x: &[f64]) -> Self {
        Self { t, fiber: FiberPoint::Chart(x.to_vec()) }
    }

    pub fn vertex(t: f64, i: usize) -> Self {
        Self { t, fiber: FiberPoint::Vertex(i) }
    }
}

/// Tangent vector `a ∂_t + v` with `v` in fiber chart components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: BasePoint,
    pub a: f64,
    pub v: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: BasePoint, a: f64, v: Vec<f64>) -> Self {
        Self { base, a, v }
    }

    /// The unit timelike vector `∂_t`.
    pub fn d_t(base: BasePoint, m: usize) -> Self {
        Self { base, a: 1.0, v: vec![0.0; m] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { base: self.base.clone(), a: s * self.a, v: self.v.iter().map(|x| s * x).collect() }
    }
}

/// Causal character of a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Causal {
    Spacelike,
    Timelike,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureMode {
    Riem,
    Ric,
    Sect,
}

/// Scalar coefficients of the curvature tensors at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureCoefficients {
    /// Coefficient of `G_F` in `Riem`: `ρ²(K_F + ρ'² − ρρ'')`.
    pub riem_fiber: f64,
    /// Coefficient of `Ḡ` in `Riem`, also of `ḡ` in `Ric / m`: `ρ''/ρ`.
    pub ambient: f64,
    /// Coefficient of `g_F` in `Ric`: `(m−1)(K_F − ρρ'' + ρ'²)`.
    pub ric_fiber: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrwSpacetime {
    warping: WarpingFunction,
    fiber: FiberModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCurvatureReport {
    pub kappa_bar: Option<f64>,
    /// `max |ρ''/ρ − κ̄|` over samples, with `κ̄` the sample mean.
    pub ratio_deviation: f64,
    /// `max |ρρ'' − ρ'² − κ_F|` over samples.
    pub fiber_deviation: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectBoundReport {
    pub certificate: Option<f64>,
    /// `min_t [(C₂ − ρρ'' + ρ'²)/ρ² − max(C₁ − ρ''/ρ, 0)]`.
    pub min_margin: f64,
    pub argmin: f64,
    pub window: (f64, f64),
    /// True when the sampling window is a truncation of an unbounded interval.
    pub truncated: bool,
    pub samples: usize,
}

impl GrwSpacetime {
    pub fn new(warping: WarpingFunction, fiber: FiberModel) -> Self {
        Self { warping, fiber }
    }

    /// Lorentz–Minkowski space as the product `ℝ × ℝ^m`.
    pub fn minkowski(m: usize) -> Result<Self> {
        Ok(Self::new(WarpingFunction::constant(1.0)?, FiberModel::constant_curvature(m, 0.0)?))
    }

    /// De Sitter space of curvature `κ̄ > 0`: `ρ = cosh(√κ̄ t)` over `S^m(κ̄)`.
    pub fn de_sitter(m: usize, kappa_bar: f64) -> Result<Self> {
        if !(kappa_bar > 0.0) {
            return Err(Error::InvalidArgument(format!("de Sitter needs κ̄ > 0, got {kappa_bar}")));
        }
        Ok(Self::new(
            WarpingFunction::cosh(1.0, kappa_bar.sqrt())?,
            FiberModel::constant_curvature(m, kappa_bar)?,
        ))
    }

    /// Steady state region: `ρ = eᵗ` over a flat fiber.
    pub fn steady_state(m: usize) -> Result<Self> {
        Ok(Self::new(WarpingFunction::exp(1.0, 1.0)?, FiberModel::constant_curvature(m, 0.0)?))
    }

    /// Anti-de Sitter chart of curvature `κ̄ < 0`: `ρ = cos(√−κ̄ t)` over
    /// hyperbolic space `H^m(κ̄)`.
    pub fn anti_de_sitter(m: usize, kappa_bar: f64) -> Result<Self> {
        if !(kappa_bar < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "anti-de Sitter needs κ̄ < 0, got {kappa_bar}"
            )));
        }
        Ok(Self::new(
            WarpingFunction::cos(1.0, (-kappa_bar).sqrt())?,
            FiberModel::constant_curvature(m, kappa_bar)?,
        ))
    }

    /// Reads a spacetime from `key = value` text.
    ///
    /// Either `model = minkowski | de-sitter | steady-state | anti-de-sitter`
    /// (with `dim` and `kappa`), or an explicit `warping` kind
    /// (`constant`, `cosh`, `exp`, `cos`, `polynomial`, `tabulated`) with its
    /// parameters `a`, `b`, `c`, `coeffs`, `t_nodes`, `rho_nodes`, optional
    /// `t_min`, `t_max`, plus `dim` and `kappa_f`. `window_min` and
    /// `window_max` override the sampling window.
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let dim: usize = kv.get_or("dim", 2)?;
        let mut st = if let Some(model) = kv.get_str("model") {
            let kappa: f64 = kv.get_or("kappa", 1.0)?;
            match model {
                "minkowski" => Self::minkowski(dim)?,
                "de-sitter" => Self::de_sitter(dim, kappa)?,
                "steady-state" => Self::steady_state(dim)?,
                "anti-de-sitter" => Self::anti_de_sitter(dim, -kappa.abs())?,
                other => return Err(Error::Parse(format!("unknown model {other:?}"))),
            }
        } else {
            let kind = kv.require::<String>("warping")?;
            let a: f64 = kv.get_or("a", 1.0)?;
            let b: f64 = kv.get_or("b", 1.0)?;
            let mut w = match kind.as_str() {
                "constant" => WarpingFunction::constant(kv.get_or("c", 1.0)?)?,
                "cosh" => WarpingFunction::cosh(a, b)?,
                "exp" => WarpingFunction::exp(a, b)?,
                "cos" => WarpingFunction::cos(a, b)?,
                "polynomial" => {
                    let coeffs = kv
                        .get_list("coeffs")?
                        .ok_or_else(|| Error::Parse("polynomial warping needs coeffs".into()))?;
                    let lo = kv.get_or("t_min", f64::NEG_INFINITY)?;
                    let hi = kv.get_or("t_max", f64::INFINITY)?;
                    WarpingFunction::polynomial(coeffs, lo, hi)?
                }
                "tabulated" => {
                    let ts = kv
                        .get_list("t_nodes")?
                        .ok_or_else(|| Error::Parse("tabulated warping needs t_nodes".into()))?;
                    let rs = kv
                        .get_list("rho_nodes")?
                        .ok_or_else(|| Error::Parse("tabulated warping needs rho_nodes".into()))?;
                    WarpingFunction::tabulated(&ts, &rs)?
                }
                other => return Err(Error::Parse(format!("unknown warping kind {other:?}"))),
            };
            if kind != "polynomial" && kind != "tabulated" {
                let lo = kv.get::<f64>("t_min")?;
                let hi = kv.get::<f64>("t_max")?;
                if lo.is_some() || hi.is_some() {
                    let (l0, h0) = w.interval();
                    w = w.restricted(lo.unwrap_or(l0), hi.unwrap_or(h0))?;
                }
            }
            Self::new(w, FiberModel::constant_curvature(dim, kv.get_or("kappa_f", 0.0)?)?)
        };
        let wlo = kv.get::<f64>("window_min")?;
        let whi = kv.get::<f64>("window_max")?;
        if wlo.is_some() || whi.is_some() {
            let (l0, h0) = st.warping.sampling_window();
            st.warping = st.warping.with_window(wlo.unwrap_or(l0), whi.unwrap_or(h0))?;
        }
        Ok(st)
    }

    pub fn warping(&self) -> &WarpingFunction {
        &self.warping
    }

    pub fn fiber(&self) -> &FiberModel {
        &self.fiber
    }

    /// Fiber dimension `m`; the spacetime has dimension `m + 1`.
    pub fn dim(&self) -> usize {
        self.fiber.dim
    }

    pub fn check_base(&self, p: &BasePoint) -> Result<()> {
        self.warping.eval(p.t)?;
        self.fiber.check_point(&p.fiber)
    }

    fn check_vector(&self, v: &TangentVector) -> Result<()> {
        if v.v.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "tangent vector has {} fiber components, expected {}",
                v.v.len(),
                self.dim()
            )));
        }
        if !v.a.is_finite() || v.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tangent vector".into()));
        }
        Ok(())
    }

    fn common_base<'a>(&self, vs: &[&'a TangentVector]) -> Result<&'a BasePoint> {
        let base = &vs[0].base;
        for v in vs {
            if v.base != *base {
                return Err(Error::BasePointMismatch);
            }
            self.check_vector(v)?;
        }
        self.check_base(base)?;
        Ok(base)
    }

    /// `g_F(v, w)` at a base point.
    pub fn fiber_inner(&self, base: &BasePoint, v: &[f64], w: &[f64]) -> f64 {
        let phi = self.fiber.conformal_factor(&base.fiber);
        phi * phi * v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }

    fn inner_unchecked(&self, rho: f64, x: &TangentVector, y: &TangentVector) -> f64 {
        -x.a * y.a + rho * rho * self.fiber_inner(&x.base, &x.v, &y.v)
    }

    /// `ḡ(V, W) = −a_V a_W + ρ(t)² g_F(v, w)`.
    pub fn metric_eval(&self, v: &TangentVector, w: &TangentVector) -> Result<f64> {
        let base = self.common_base(&[v, w])?;
        let rho = self.warping.eval(base.t)?.rho;
        Ok(self.inner_unchecked(rho, v, w))
    }

    pub fn causal_character(&self, v: &TangentVector) -> Result<Causal> {
        let q = self.metric_eval(v, v)?;
        let scale = v.a * v.a + 1e-300;
        Ok(if q.abs() <= 1e-14 * scale {
            Causal::Null
        } else if q > 0.0 {
            Causal::Spacelike
        } else {
            Causal::Timelike
        })
    }

    pub fn coefficients(&self, base: &BasePoint) -> Result<CurvatureCoefficients> {
        let w = self.warping.eval(base.t)?;
        let k = self.fiber.curvature_at(&base.fiber);
        Ok(self.coefficients_at(w, k))
    }

    pub fn coefficients_at(&self, w: WarpValue, fiber_curvature: f64) -> CurvatureCoefficients {
        let m = self.dim() as f64;
        let WarpValue { rho, d1, d2 } = w;
        let shift = fiber_curvature + d1 * d1 - rho * d2;
        CurvatureCoefficients {
            riem_fiber: rho * rho * shift,
            ambient: d2 / rho,
            ric_fiber: (m - 1.0) * shift,
        }
    }

    /// `Riem(X, Y, Z, W)`.
    pub fn riemann(
        &self,
        x: &TangentVector,
        y: &TangentVector,
        z: &TangentVector,
        w: &TangentVector,
    ) -> Result<f64> {
        let base = self.common_base(&[x, y, z, w])?;
        let c = self.coefficients(base)?;
        let rho = self.warping.eval(base.t)?.rho;
        let gf = |p: &TangentVector, q: &TangentVector| self.fiber_inner(base, &p.v, &q.v);
        let gb = |p: &TangentVector, q: &TangentVector| self.inner_unchecked(rho, p, q);
        let kn_f = gf(x, z) * gf(y, w) - gf(x, w) * gf(y, z);
        let kn_b = gb(x, z) * gb(y, w) - gb(x, w) * gb(y, z);
        Ok(c.riem_fiber * kn_f + c.ambient * kn_b)
    }

    /// `Ric(X, Y)`.
    pub fn ricci(&self, x: &TangentVector, y: &TangentVector) -> Result<f64> {
        let base = self.common_base(&[x, y])?;
        let c = self.coefficients(base)?;
        let rho = self.warping.eval(base.t)?.rho;
        let m = self.dim() as f64;
        Ok(c.ric_fiber * self.fiber_inner(base, &x.v, &y.v)
            + m * c.ambient * self.inner_unchecked(rho, x, y))
    }

    /// `Sect(Π)` of the plane spanned by `X, Y`.
    pub fn sectional(&self, x: &TangentVector, y: &TangentVector) -> Result<f64> {
        let base = self.common_base(&[x, y])?;
        let rho = self.warping.eval(base.t)?.rho;
        let xx = self.inner_unchecked(rho, x, x);
        let yy = self.inner_unchecked(rho, y, y);
        let xy = self.inner_unchecked(rho, x, y);
        let den = xx * yy - xy * xy;
        let scale = (xx.abs() * yy.abs()).max(xy * xy).max(f64::MIN_POSITIVE);
        if den.abs() <= 1e-12 * scale {
            return Err(Error::DegeneratePlane(den));
        }
        Ok(self.riemann(x, y, x, y)? / den)
    }

    /// Dispatches on `mode`: `Riem` takes four vectors, `Ric` and `Sect` two.
    pub fn curvature(&self, mode: CurvatureMode, args: &[&TangentVector]) -> Result<f64> {
        let need = match mode {
            CurvatureMode::Riem => 4,
            CurvatureMode::Ric | CurvatureMode::Sect => 2,
        };
        if args.len() != need {
            return Err(Error::InvalidArgument(format!(
                "{mode:?} takes {need} vectors, got {}",
                args.len()
            )));
        }
        match mode {
            CurvatureMode::Riem => self.riemann(args[0], args[1], args[2], args[3]),
            CurvatureMode::Ric => self.ricci(args[0], args[1]),
            CurvatureMode::Sect => self.sectional(args[0], args[1]),
        }
    }

    /// Orthonormal frame `∂_t, e_i/(ρφ)` at `base`, with signs `ε`.
    pub fn orthonormal_frame(&self, base: &BasePoint) -> Result<Vec<(f64, TangentVector)>> {
        self.check_base(base)?;
        let m = self.dim();
        let rho = self.warping.eval(base.t)?.rho;
        let phi = self.fiber.conformal_factor(&base.fiber);
        let mut frame = vec![(-1.0, TangentVector::d_t(base.clone(), m))];
        for i in 0..m {
            let mut v = vec![0.0; m];
            v[i] = 1.0 / (rho * phi);
            frame.push((1.0, TangentVector::new(base.clone(), 0.0, v)));
        }
        Ok(frame)
    }

    /// `Σ ε_i Riem(X, E_i, Y, E_i)` over an orthonormal frame.
    pub fn ricci_frame_trace(&self, x: &TangentVector, y: &TangentVector) -> Result<f64> {
        let frame = self.orthonormal_frame(&x.base)?;
        let mut s = 0.0;
        for (eps, e) in &frame {
            s += eps * self.riemann(x, e, y, e)?;
        }
        Ok(s)
    }

    /// Scalar curvature as the frame trace of `Ric`.
    pub fn scalar_curvature(&self, base: &BasePoint) -> Result<f64> {
        let frame = self.orthonormal_frame(base)?;
        let mut s = 0.0;
        for (eps, e) in &frame {
            s += eps * self.ricci(e, e)?;
        }
        Ok(s)
    }

    /// Returns `κ̄` when `ρ''/ρ ≡ κ̄` and `ρρ'' − ρ'² ≡ κ_F` on the sampling
    /// window, within [`DEFAULT_CC_TOL`].
    pub fn constant_curvature_audit(&self, samples: usize) -> Option<f64> {
        self.constant_curvature_report(samples, DEFAULT_CC_TOL).ok().and_then(|r| r.kappa_bar)
    }

    pub fn constant_curvature_report(&self, samples: usize, tol: f64) -> Result<ConstantCurvatureReport> {
        let kappa_f = self.fiber.constant_kappa().ok_or_else(|| {
            Error::Precondition("constant-curvature audit needs a constant-curvature fiber".into())
        })?;
        if samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let ts = self.warping.sample_points(samples);
        let mut ratios = Vec::with_capacity(ts.len());
        let mut fiber_dev: f64 = 0.0;
        for &t in &ts {
            let w = self.warping.eval(t)?;
            ratios.push(w.d2 / w.rho);
            fiber_dev = fiber_dev.max((w.rho * w.d2 - w.d1 * w.d1 - kappa_f).abs());
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let ratio_dev = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
        let ok = ratio_dev <= tol && fiber_dev <= tol;
        Ok(ConstantCurvatureReport {
            kappa_bar: ok.then_some(mean),
            ratio_deviation: ratio_dev,
            fiber_deviation: fiber_dev,
            window: self.warping.sampling_window(),
            samples: ts.len(),
        })
    }

    /// Returns `C₂ = κ_F` when `(C₂ − ρρ'' + ρ'²)/ρ² ≥ max(C₁ − ρ''/ρ, 0)` on a
    /// dense sample of the interval.
    pub fn spacelike_bound_certify(&self, c1: f64) -> Option<f64> {
        self.spacelike_bound_report(c1, DEFAULT_CERTIFY_SAMPLES).ok().and_then(|r| r.certificate)
    }

    pub fn spacelike_bound_report(&self, c1: f64, samples: usize) -> Result<SectBoundReport> {
        let c2 = self.fiber.constant_kappa().ok_or_else(|| {
            Error::Precondition("bound certificate needs a constant-curvature fiber".into())
        })?;
        if samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        let mut min_margin = f64::INFINITY;
        let mut argmin = f64::NAN;
        let mut ok = true;
        for t in self.warping.sample_points(samples) {
            let WarpValue { rho, d1, d2 } = self.warping.eval(t)?;
            let lhs = (c2 - rho * d2 + d1 * d1) / (rho * rho);
            let rhs = (c1 - d2 / rho).max(0.0);
            let margin = lhs - rhs;
            let tol = 1e-9 * (1.0 + lhs.abs() + rhs.abs());
            if margin < -tol {
                ok = false;
            }
            if margin < min_margin {
                min_margin = margin;
                argmin = t;
            }
        }
        let (lo, hi) = self.warping.interval();
        Ok(SectBoundReport {
            certificate: ok.then_some(c2),
            min_margin,
            argmin,
            window: self.warping.sampling_window(),
            truncated: lo.is_infinite() || hi.is_infinite(),
            samples,
        })
    }

    /// Coordinate metric `diag(−1, ρ²φ², …)` at a chart point.
    pub fn coordinate_metric(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let base = BasePoint::chart(t, x);
        self.check_base(&base)?;
        let rho = self.warping.eval(t)?.rho;
        let phi = self.fiber.conformal_factor(&base.fiber);
        let n = self.dim() + 1;
        let mut g = DMatrix::zeros(n, n);
        g[(0, 0)] = -1.0;
        for i in 1..n {
            g[(i, i)] = rho * rho * phi * phi;
        }
        Ok(g)
    }

    /// Levi-Civita connection in the coordinates `(t, x¹, …, x^m)` of a
    /// constant-curvature fiber chart.
    pub fn christoffel(&self, t: f64, x: &[f64]) -> Result<Christoffel> {
        let kappa = self.fiber.constant_kappa().ok_or_else(|| {
            Error::Precondition("chart Christoffel symbols need a constant-curvature fiber".into())
        })?;
        let base = BasePoint::chart(t, x);
        self.check_base(&base)?;
        let WarpValue { rho, d1, .. } = self.warping.eval(t)?;
        let phi = chart_conformal_factor(kappa, x);
        let s = chart_log_factor_gradient(kappa, x);
        let m = self.dim();
        let mut g = Christoffel::zeros(m + 1);
        for i in 0..m {
            g.set(0, i + 1, i + 1, rho * d1 * phi * phi);
            g.set(i + 1, 0, i + 1, d1 / rho);
            g.set(i + 1, i + 1, 0, d1 / rho);
        }
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut v = 0.0;
                    if k == i {
                        v += s[j];
                    }
                    if k == j {
                        v += s[i];
                    }
                    if i == j {
                        v -= s[k];
                    }
                    if v != 0.0 {
                        g.set(k + 1, i + 1, j + 1, v);
                    }
                }
            }
        }
        Ok(g)
    }
}

/// Connection coefficients `Γ^c_{ab}` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[(c * self.n + a) * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, c: usize, a: usize, b: usize, v: f64) {
        let n = self.n;
        self.data[(c * n + a) * n + b] = v;
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tv(t: f64, x: &[f64], a: f64, v: &[f64]) -> TangentVector {
        TangentVector::new(BasePoint::chart(t, x), a, v.to_vec())
    }

    #[test]
    fn time_direction_has_norm_minus_one() {
        let st = GrwSpacetime::de_sitter(3, 2.0).unwrap();
        let dt = TangentVector::d_t(BasePoint::chart(0.7, &[0.1, 0.2, -0.3]), 3);
        assert_eq!(st.metric_eval(&dt, &dt).unwrap(), -1.0);
        assert_eq!(st.causal_character(&dt).unwrap(), Causal::Timelike);
    }

    #[test]
    fn de_sitter_fiber_inner_product_at_t_one() {
        let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
        let x = [0.0, 0.0];
        // φ(0) = 2 so a g_F-unit vector has chart length 1/2.
        let e1 = tv(1.0, &x, 0.0, &[0.5, 0.0]);
        let e2 = tv(1.0, &x, 0.0, &[0.3, 0.4]);
        let want = 1.0f64.cosh().powi(2) * st.fiber_inner(&e1.base, &e1.v, &e2.v);
        assert_relative_eq!(st.metric_eval(&e1, &e2).unwrap(), want, max_relative = 1e-15);
        assert_relative_eq!(st.metric_eval(&e1, &e1).unwrap(), 1.0f64.cosh().powi(2), max_relative = 1e-15);
    }

    #[test]
    fn mismatched_base_points_rejected() {
        let st = GrwSpacetime::minkowski(2).unwrap();
        let a = tv(0.0, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
        let b = tv(0.1, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
        assert!(matches!(st.metric_eval(&a, &b), Err(Error::BasePointMismatch)));
    }

    #[test]
    fn minkowski_is_flat() {
        let st = GrwSpacetime::minkowski(3).unwrap();
        let p = [0.3, -1.0, 2.0];
        let x = tv(0.5, &p, 1.0, &[0.2, 0.0, 1.0]);
        let y = tv(0.5, &p, -0.4, &[1.0, 3.0, 0.0]);
        assert_eq!(st.riemann(&x, &y, &x, &y).unwrap(), 0.0);
        assert_eq!(st.ricci(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn ricci_of_time_direction() {
        let w = WarpingFunction::polynomial(vec![2.0, 0.5, 0.3, -0.1], -1.0, 1.0).unwrap();
        let st = GrwSpacetime::new(w, FiberModel::constant_curvature(3, -0.5).unwrap());
        for &t in &[-0.5, 0.0, 0.4] {
            let dt = TangentVector::d_t(BasePoint::chart(t, &[0.1, 0.0, 0.2]), 3);
            let wv = st.warping().eval(t).unwrap();
            assert_relative_eq!(st.ricci(&dt, &dt).unwrap(), -3.0 * wv.d2 / wv.rho, max_relative = 1e-14);
        }
    }

    #[test]
    fn ricci_matches_frame_trace() {
        let w = WarpingFunction::cosh(1.3, 0.7).unwrap();
        let st = GrwSpacetime::new(w, FiberModel::constant_curvature(3, 0.4).unwrap());
        let p = [0.2, -0.1, 0.5];
        let x = tv(0.3, &p, 0.7, &[1.0, -2.0, 0.5]);
        let y = tv(0.3, &p, -1.1, &[0.3, 0.4, 2.0]);
        assert_relative_eq!(
            st.ricci(&x, &y).unwrap(),
            st.ricci_frame_trace(&x, &y).unwrap(),
            epsilon = 1e-12,
            max_relative = 1e-12
        );
    }

    #[test]
    fn scalar_curvature_closed_form() {
        let w = WarpingFunction::exp(0.8, 0.6).unwrap();
        let st = GrwSpacetime::new(w, FiberModel::constant_curvature(4, 1.5).unwrap());
        let t = 0.25;
        let WarpValue { rho, d1, d2 } = st.warping().eval(t).unwrap();
        let m = 4.0;
        let want = m * (m - 1.0) * (1.5 - rho * d2 + d1 * d1) / (rho * rho) + m * (m + 1.0) * d2 / rho;
        let got = st.scalar_curvature(&BasePoint::chart(t, &[0.1, 0.1, 0.1, 0.1])).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-13);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let st = GrwSpacetime::de_sitter(2, 1.0).unwrap();
        let x = tv(0.0, &[0.0, 0.0], 1.0, &[0.0, 0.0]);
        let y = x.scaled(2.0);
        assert!(matches!(st.sectional(&x, &y), Err(Error::DegeneratePlane(_))));
        let null = tv(0.0, &[0.0, 0.0], 2.0, &[1.0, 0.0]);
        let other = tv(0.0, &[0.0, 0.0], 0.0, &[0.0, 1.0]);
        assert!(st.sectional(&null, &other).is_err());
    }

    #[test]
    fn cc_audit_known_models() {
        assert_eq!(GrwSpacetime::minkowski(2).unwrap().constant_curvature_audit(100), Some(0.0));
        let ds = GrwSpacetime::de_sitter(2, 1.0).unwrap().constant_curvature_audit(1000).unwrap();
        assert!((ds - 1.0).abs() < 1e-10);
        let ss = GrwSpacetime::steady_state(3).unwrap().constant_curvature_audit(1000).unwrap();
        assert!((ss - 1.0).abs() < 1e-10);
        let ads = GrwSpacetime::anti_de_sitter(2, -1.0).unwrap().constant_curvature_audit(1000).unwrap();
        assert!((ads + 1.0).abs() < 1e-10);
        let bent = GrwSpacetime::new(
            WarpingFunction::cosh(1.0, 2.0).unwrap(),
            FiberModel::constant_curvature(2, 0.0).unwrap(),
        );
        assert_eq!(bent.constant_curvature_audit(100), None);
    }

    #[test]
    fn certify_examples() {
        assert_eq!(GrwSpacetime::minkowski(2).unwrap().spacelike_bound_certify(0.0), Some(0.0));
        assert_eq!(GrwSpacetime::de_sitter(2, 1.0).unwrap().spacelike_bound_certify(1.0), Some(1.0));
        let bent = GrwSpacetime::new(
            WarpingFunction::cosh(1.0, 2.0).unwrap(),
            FiberModel::constant_curvature(2, 0.0).unwrap(),
        );
        for c1 in [-10.0, 0.0, 3.0] {
            assert_eq!(bent.spacelike_bound_certify(c1), None);
        }
        let r = bent.spacelike_bound_report(0.0, 1001).unwrap();
        assert!(r.truncated);
        assert!(r.min_margin < 0.0);
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let st = GrwSpacetime::de_sitter(3, 1.0).unwrap();
        let g = st.christoffel(0.4, &[0.2, -0.3, 0.1]).unwrap();
        for c in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(g.get(c, a, b), g.get(c, b, a));
                }
            }
        }
    }

    #[test]
    fn config_models_and_kinds() {
        let kv = KeyValues::parse("model = anti-de-sitter\nkappa = 1\ndim = 3").unwrap();
        let st = GrwSpacetime::from_config(&kv).unwrap();
        assert_eq!(st.dim(), 3);
        assert_eq!(st.fiber().constant_kappa(), Some(-1.0));
        let kv = KeyValues::parse("warping = polynomial\ncoeffs = 1, 0, 0.5\nkappa_f = 0\nt_min=-1\nt_max=1")
            .unwrap();
        let st = GrwSpacetime::from_config(&kv).unwrap();
        assert_eq!(st.warping().eval(0.5).unwrap().rho, 1.125);
        assert!(st.warping().eval(1.5).is_err());
        let kv = KeyValues::parse("warping = sinh").unwrap();
        assert!(GrwSpacetime::from_config(&kv).is_err());
    }

    #[test]
    fn hyperbolic_chart_bounds() {
        let st = GrwSpacetime::anti_de_sitter(2, -1.0).unwrap();
        assert!(st.check_base(&BasePoint::chart(0.0, &[0.5, 0.5])).is_ok());
        assert!(st.check_base(&BasePoint::chart(0.0, &[0.8, 0.8])).is_err());
        assert!(st.check_base(&BasePoint::chart(2.0, &[0.0, 0.0])).is_err());
    }
}
