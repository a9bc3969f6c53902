//! Meridian geometry of a convex surface of revolution.
//!
//! The meridian is described by its radius of curvature `r(θ)` as a function
//! of the tangent angle `θ` (which doubles as the nutation angle of the body
//! when the point with that tangent angle is the contact point), the radius
//! `h_o` of the parallel at `θ = 0`, and the height `f_o` of the centre of
//! mass above the plane in standard position (axis vertical).
//!
//! From these,
//!
//! ```text
//! h(θ)  = h_o + ∫₀^θ r cos        (distance of the contact point to the axis)
//! f(θ)  =       ∫₀^θ r sin        (height of the contact parallel)
//! f*(θ) = f_o − f(θ)
//! z_C   = h sin θ + f* cos θ      (centre-of-mass height)
//! Λ     = h cos θ − f* sin θ      (= dz_C/dθ, horizontal offset contact → CM)
//! Λ'    = r − f* cos θ − h sin θ
//! |CP|² = h² + f*²
//! ```
//!
//! Tori use closed forms; general profiles are integrated once onto a cache
//! and evaluated with quintic Hermite interpolation, which uses the exact
//! derivatives `h' = r cos θ`, `f' = r sin θ` at the nodes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{quintic_hermite, MonotoneCubic};
use crate::quad;

/// Absolute tolerance targeted when tabulating `h` and `f`.
pub const CACHE_TOLERANCE: f64 = 1e-10;

const CACHE_CELLS: usize = 2048;

/// Closed interval of admissible nutation angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDomain {
    lo: f64,
    hi: f64,
}

impl ThetaDomain {
    pub const DEFAULT_MARGIN: f64 = 1e-3;

    /// `0 ≤ lo < hi ≤ π`. The endpoints themselves are admitted so that
    /// boundary values (`θ = 0`) can be inspected; integrators keep their own
    /// guard against the poles.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > PI || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "theta domain [{lo}, {hi}] must satisfy 0 <= lo < hi <= pi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn full() -> Self {
        Self { lo: 0.0, hi: PI }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain {
                theta,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

impl Default for ThetaDomain {
    fn default() -> Self {
        Self {
            lo: Self::DEFAULT_MARGIN,
            hi: PI - Self::DEFAULT_MARGIN,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Meridian radius of curvature `r(θ)` of a general profile.
#[derive(Clone)]
pub enum Curvature {
    Constant(f64),
    /// `(θ, r)` samples covering `[0, π]`, interpolated shape-preservingly.
    Sampled(MonotoneCubic),
    /// Closed-form curvature radius together with its derivative.
    Function {
        r: ScalarFn,
        dr: ScalarFn,
    },
}

impl Curvature {
    pub fn sampled(points: &[(f64, f64)]) -> Result<Self> {
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if y.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidProfile(
                "curvature radius samples must be non-negative".into(),
            ));
        }
        let cubic = MonotoneCubic::new(x, y)?;
        let (a, b) = cubic.range();
        if a > 0.0 || b < PI {
            return Err(Error::InvalidProfile(format!(
                "curvature samples span [{a}, {b}] but must cover [0, pi]"
            )));
        }
        Ok(Curvature::Sampled(cubic))
    }

    pub fn function<R, D>(r: R, dr: D) -> Self
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Curvature::Function {
            r: Arc::new(r),
            dr: Arc::new(dr),
        }
    }

    /// `(r, dr/dθ)`; sampled radii that undershoot zero are clamped.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        match self {
            Curvature::Constant(r) => (*r, 0.0),
            Curvature::Sampled(c) => {
                let (v, d) = c.eval_with_derivative(theta);
                if v < 0.0 {
                    log::warn!("interpolated curvature radius {v:e} < 0 at theta = {theta}; clamped");
                    (0.0, 0.0)
                } else {
                    (v, d)
                }
            }
            Curvature::Function { r, dr } => (r(theta), dr(theta)),
        }
    }

    fn knots(&self) -> &[f64] {
        match self {
            Curvature::Sampled(c) => c.knots(),
            _ => &[],
        }
    }
}

impl fmt::Debug for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curvature::Constant(r) => f.debug_tuple("Constant").field(r).finish(),
            Curvature::Sampled(c) => f.debug_struct("Sampled").field("knots", &c.knots().len()).finish(),
            Curvature::Function { .. } => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProfileKind {
    Torus { major: f64, minor: f64 },
    General(Curvature),
}

/// Meridian data: curvature, pole parallel radius `h_o`, and centre-of-mass
/// height `f_o` in standard position.
#[derive(Debug, Clone)]
pub struct SurfaceProfile {
    pub kind: ProfileKind,
    pub h_o: f64,
    pub f_o: f64,
    pub domain: ThetaDomain,
}

impl SurfaceProfile {
    /// Torus with centre-line radius `major` and tube radius `minor`, placed
    /// in standard position: `h_o = major`, `f_o = minor`.
    pub fn torus(major: f64, minor: f64) -> Self {
        Self {
            kind: ProfileKind::Torus { major, minor },
            h_o: major,
            f_o: minor,
            domain: ThetaDomain::default(),
        }
    }

    pub fn general(curvature: Curvature, h_o: f64, f_o: f64) -> Self {
        Self {
            kind: ProfileKind::General(curvature),
            h_o,
            f_o,
            domain: ThetaDomain::default(),
        }
    }

    /// Explicit override of the standard-position centre-of-mass height
    /// (for tori, which otherwise use `f_o = minor`).
    pub fn with_f_o(mut self, f_o: f64) -> Self {
        self.f_o = f_o;
        self
    }

    /// Explicit override of the pole parallel radius.
    pub fn with_h_o(mut self, h_o: f64) -> Self {
        self.h_o = h_o;
        self
    }

    pub fn with_domain(mut self, domain: ThetaDomain) -> Self {
        self.domain = domain;
        self
    }

    /// The torus `(major, minor)` expressed as a constant-curvature general
    /// profile; used to cross-check the quadrature path.
    pub fn torus_as_general(major: f64, minor: f64) -> Self {
        Self::general(Curvature::Constant(minor), major, minor)
    }
}

/// All meridian quantities at one nutation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactGeometry {
    pub theta: f64,
    pub sin: f64,
    pub cos: f64,
    /// Radius of curvature of the meridian, `r(θ)`.
    pub r: f64,
    pub dr: f64,
    pub h: f64,
    pub f: f64,
    pub f_star: f64,
    pub lambda: f64,
    pub dlambda: f64,
    pub z_c: f64,
    /// `|CP|² = h² + f*²`.
    pub cp_sq: f64,
}

impl ContactGeometry {
    fn assemble(theta: f64, r: f64, dr: f64, h: f64, f: f64, f_o: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let f_star = f_o - f;
        Self {
            theta,
            sin,
            cos,
            r,
            dr,
            h,
            f,
            f_star,
            lambda: h * cos - f_star * sin,
            dlambda: r - f_star * cos - h * sin,
            z_c: h * sin + f_star * cos,
            cp_sq: h * h + f_star * f_star,
        }
    }

    /// `d²Λ/dθ² = r' − Λ`.
    pub fn d2lambda(&self) -> f64 {
        self.dr - self.lambda
    }

    /// `d|CP|²/dθ = 2(h h' + f* f*') = 2 r Λ`.
    pub fn dcp_sq(&self) -> f64 {
        2.0 * (self.h * self.r * self.cos - self.f_star * self.r * self.sin)
    }
}

#[derive(Debug, Clone)]
struct Table {
    curvature: Curvature,
    nodes: Vec<f64>,
    h: Vec<f64>,
    f: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
}

impl Table {
    fn build(curvature: Curvature, h_o: f64) -> Self {
        let mut nodes: Vec<f64> = (0..=CACHE_CELLS).map(|i| PI * i as f64 / CACHE_CELLS as f64).collect();
        // Sample knots become nodes so every cell sees a smooth integrand.
        nodes.extend(curvature.knots().iter().copied().filter(|&t| t > 0.0 && t < PI));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let per_cell = CACHE_TOLERANCE / (4.0 * nodes.len() as f64);
        let mut h = Vec::with_capacity(nodes.len());
        let mut f = Vec::with_capacity(nodes.len());
        let (mut hacc, mut facc) = (h_o, 0.0);
        h.push(hacc);
        f.push(facc);
        for w in nodes.windows(2) {
            hacc += quad::integrate(|t| curvature.eval(t).0 * t.cos(), w[0], w[1], per_cell);
            facc += quad::integrate(|t| curvature.eval(t).0 * t.sin(), w[0], w[1], per_cell);
            h.push(hacc);
            f.push(facc);
        }
        let (r, dr): (Vec<f64>, Vec<f64>) = nodes.iter().map(|&t| curvature.eval(t)).unzip();
        Self {
            curvature,
            nodes,
            h,
            f,
            r,
            dr,
        }
    }

    fn eval(&self, theta: f64) -> (f64, f64, f64, f64) {
        let n = self.nodes.len();
        let k = match self.nodes.partition_point(|&x| x <= theta) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let (s0, c0) = t0.sin_cos();
        let (s1, c1) = t1.sin_cos();
        let (r0, r1) = (self.r[k], self.r[k + 1]);
        let (d0, d1) = (self.dr[k], self.dr[k + 1]);
        let h = quintic_hermite(
            t0,
            t1,
            self.h[k],
            r0 * c0,
            d0 * c0 - r0 * s0,
            self.h[k + 1],
            r1 * c1,
            d1 * c1 - r1 * s1,
            theta,
        );
        let f = quintic_hermite(
            t0,
            t1,
            self.f[k],
            r0 * s0,
            d0 * s0 + r0 * c0,
            self.f[k + 1],
            r1 * s1,
            d1 * s1 + r1 * c1,
            theta,
        );
        let (r, dr) = self.curvature.eval(theta);
        (h, f, r, dr)
    }
}

#[derive(Debug, Clone)]
enum Meridian {
    Torus { minor: f64 },
    Tabulated(Table),
}

/// Immutable evaluator of every meridian quantity; built once per profile.
#[derive(Debug, Clone)]
pub struct Geometry {
    meridian: Meridian,
    h_o: f64,
    f_o: f64,
    f_pi: f64,
    domain: ThetaDomain,
    is_torus: Option<(f64, f64)>,
}

impl Geometry {
    pub fn new(profile: &SurfaceProfile) -> Result<Self> {
        let SurfaceProfile { kind, h_o, f_o, domain } = profile;
        let (h_o, f_o, domain) = (*h_o, *f_o, *domain);
        if !(h_o.is_finite() && h_o >= 0.0) {
            return Err(Error::InvalidProfile(format!("h_o = {h_o} must be >= 0")));
        }
        let (meridian, f_pi, is_torus) = match kind {
            ProfileKind::Torus { major, minor } => {
                let (major, minor) = (*major, *minor);
                if !(minor > 0.0 && major > minor && major.is_finite()) {
                    return Err(Error::InvalidProfile(format!(
                        "torus requires R > r > 0, got R = {major}, r = {minor}"
                    )));
                }
                (Meridian::Torus { minor }, 2.0 * minor, Some((major, minor)))
            }
            ProfileKind::General(curvature) => {
                if let Curvature::Constant(r) = curvature {
                    if !(r.is_finite() && *r >= 0.0) {
                        return Err(Error::InvalidProfile(format!("curvature radius {r} must be >= 0")));
                    }
                }
                let table = Table::build(curvature.clone(), h_o);
                if let Some(bad) = table.r.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidProfile(format!(
                        "curvature radius r({}) = {} is negative or not finite",
                        table.nodes[bad], table.r[bad]
                    )));
                }
                let f_pi = *table.f.last().unwrap();
                (Meridian::Tabulated(table), f_pi, None)
            }
        };
        if !(f_o > 0.0 && f_o < f_pi) {
            return Err(Error::InvalidProfile(format!(
                "centre-of-mass height f_o = {f_o} must lie in (0, f(pi) = {f_pi})"
            )));
        }
        Ok(Self {
            meridian,
            h_o,
            f_o,
            f_pi,
            domain,
            is_torus,
        })
    }

    pub fn domain(&self) -> ThetaDomain {
        self.domain
    }

    pub fn h_o(&self) -> f64 {
        self.h_o
    }

    pub fn f_o(&self) -> f64 {
        self.f_o
    }

    /// `f(π) = ∫₀^π r sin θ dθ`, the upper bound for `f_o`.
    pub fn f_pi(&self) -> f64 {
        self.f_pi
    }

    /// `(R, r)` when this geometry was built from a torus profile.
    pub fn torus_parameters(&self) -> Option<(f64, f64)> {
        self.is_torus
    }

    pub fn quadrature_tolerance(&self) -> f64 {
        match self.meridian {
            Meridian::Torus { .. } => 0.0,
            Meridian::Tabulated(_) => CACHE_TOLERANCE,
        }
    }

    /// Evaluate without the domain check. Only for callers that enforce their
    /// own guard (finite differences straddling a boundary, the pole limits).
    pub fn eval_unchecked(&self, theta: f64) -> ContactGeometry {
        let (h, f, r, dr) = match &self.meridian {
            Meridian::Torus { minor } => {
                let (s, c) = theta.sin_cos();
                (self.h_o + minor * s, minor * (1.0 - c), *minor, 0.0)
            }
            Meridian::Tabulated(t) => t.eval(theta),
        };
        ContactGeometry::assemble(theta, r, dr, h, f, self.f_o)
    }

    pub fn eval(&self, theta: f64) -> Result<ContactGeometry> {
        self.domain.check(theta)?;
        Ok(self.eval_unchecked(theta))
    }

    /// `(h(θ), f(θ))`.
    pub fn meridian(&self, theta: f64) -> Result<(f64, f64)> {
        self.eval(theta).map(|g| (g.h, g.f))
    }

    pub fn curvature_radius(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.r)
    }

    pub fn f_star(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.f_star)
    }

    pub fn lambda(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.lambda)
    }

    pub fn dlambda(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.dlambda)
    }

    pub fn z_center(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.z_c)
    }

    pub fn cp_distance_sq(&self, theta: f64) -> Result<f64> {
        self.eval(theta).map(|g| g.cp_sq)
    }
}
