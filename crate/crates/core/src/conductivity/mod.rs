//! Conductivity fields, boundary conditions and Bers generating sequences.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StarDomain;

mod cases;
mod sampled;
mod sequence;
mod strip;

pub use cases::{
    builtin_case, builtin_case_on, builtin_field, case_by_name, case_registry, geometric_case,
    AnalyticField, AnalyticPotential, BuiltinCase, Case, CaseEntry, CaseRegistry, ConcentricDisks,
    OffCenterDisk, SquareInclusion, ANALYTIC_CASES, GEOMETRIC_CASES,
};
pub use sampled::SampledGrid;
pub use sequence::{
    characteristic_coefficients, generating_sequence, sequence_registry,
    CharacteristicCoefficients, GeneratingSequence, LimitingC1, SequenceContext, SequenceEntry,
    SequenceMode, SequenceStrategy, StripC2, YStripC2,
};
pub use strip::{build_strip_interpolation, LinearProfile, StripInterpolation, StripParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    AnalyticClosedForm,
    GeometricPiecewise,
    StripInterpolated,
    SampledGrid,
}

/// A positive scalar conductivity `σ(x, y)`.
pub trait ConductivityField: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn kind(&self) -> FieldKind;

    fn sigma(&self, x: f64, y: f64) -> f64;

    /// Evaluation in polar coordinates. Fields defined in terms of the radius
    /// override this so that band edges do not depend on rounding of
    /// `hypot(r cos θ, r sin θ)`.
    fn sigma_polar(&self, r: f64, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.sigma(r * c, r * s)
    }

    /// Radii along the ray at `theta` that should coincide with grid samples.
    fn feature_radii(&self, _theta: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// A Dirichlet boundary condition, usually an exact interior solution.
pub trait BoundaryCondition: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn value(&self, x: f64, y: f64) -> f64;

    /// A continuous quantity whose sign change marks a pole of `value`.
    fn pole_indicator(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }
}

/// Polar sample of the closed domain used for positivity checks.
fn domain_samples(domain: &dyn StarDomain) -> impl Iterator<Item = (f64, f64)> + '_ {
    const RINGS: usize = 64;
    const SPOKES: usize = 256;
    (0..SPOKES).flat_map(move |k| {
        let theta = TAU * k as f64 / SPOKES as f64;
        let rho = domain.radius(theta);
        (0..=RINGS).map(move |j| (j as f64 * rho / RINGS as f64, theta))
    })
}

/// Checks `σ > 0` and finite on a polar sample of the domain.
pub fn validate_positive(field: &dyn ConductivityField, domain: &dyn StarDomain) -> Result<()> {
    for (r, theta) in domain_samples(domain) {
        let s = field.sigma_polar(r, theta);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NonPositiveConductivity {
                x: r * theta.cos(),
                y: r * theta.sin(),
                value: s,
            });
        }
    }
    Ok(())
}

/// Checks that the boundary condition is finite and pole-free along the
/// boundary of `domain`.
pub fn validate_boundary_condition(
    bc: &dyn BoundaryCondition,
    domain: &dyn StarDomain,
) -> Result<()> {
    let pts = domain.boundary_polyline(4096);
    let mut prev: Option<f64> = None;
    let first = pts[0];
    for z in pts.iter().chain(std::iter::once(&first)) {
        let v = bc.value(z.re, z.im);
        if !v.is_finite() {
            return Err(Error::UndefinedBoundaryCondition { x: z.re, y: z.im });
        }
        if let Some(ind) = bc.pole_indicator(z.re, z.im) {
            if ind == 0.0 || prev.is_some_and(|p| p.signum() != ind.signum()) {
                return Err(Error::UndefinedBoundaryCondition { x: z.re, y: z.im });
            }
            prev = Some(ind);
        }
    }
    Ok(())
}

/// Constant field, mostly for oracles.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub f64);

impl ConductivityField for ConstantField {
    fn name(&self) -> &str {
        "constant"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::AnalyticClosedForm
    }

    fn sigma(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }
}

/// Field backed by a plain function pointer.
#[derive(Clone, Copy)]
pub struct FnField {
    pub name: &'static str,
    pub f: fn(f64, f64) -> f64,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("name", &self.name).finish()
    }
}

impl ConductivityField for FnField {
    fn name(&self) -> &str {
        self.name
    }

    fn kind(&self) -> FieldKind {
        FieldKind::AnalyticClosedForm
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}

/// Boundary condition backed by a plain function pointer.
#[derive(Clone, Copy)]
pub struct FnCondition {
    pub name: &'static str,
    pub f: fn(f64, f64) -> f64,
}

impl fmt::Debug for FnCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCondition")
            .field("name", &self.name)
            .finish()
    }
}

impl BoundaryCondition for FnCondition {
    fn name(&self) -> &str {
        self.name
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }
}
