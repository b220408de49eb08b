use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::{
    validate_boundary_condition, validate_positive, BoundaryCondition, ConductivityField, FieldKind,
};
use crate::error::{Error, Result};
use crate::geometry::{beaked_domain, unit_disk, wrap_angle, StarDomain};

pub const ANALYTIC_CASES: [&str; 5] = [
    "separable_lorentzian",
    "exponential",
    "polynomial",
    "lorentzian",
    "sinusoidal",
];

pub const GEOMETRIC_CASES: [&str; 5] = [
    "concentric_disks",
    "offcenter_disk",
    "square_inclusion",
    "beaked_concentric",
    "beaked_square",
];

/// Closed-form field `σ(x, y; α)`.
#[derive(Clone, Copy)]
pub struct AnalyticField {
    pub name: &'static str,
    pub alpha: f64,
    pub f: fn(f64, f64, f64) -> f64,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl ConductivityField for AnalyticField {
    fn name(&self) -> &str {
        self.name
    }

    fn kind(&self) -> FieldKind {
        FieldKind::AnalyticClosedForm
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y, self.alpha)
    }
}

/// Closed-form potential `u(x, y; α)` with an optional pole indicator.
#[derive(Clone, Copy)]
pub struct AnalyticPotential {
    pub name: &'static str,
    pub alpha: f64,
    pub f: fn(f64, f64, f64) -> f64,
    pub pole: Option<fn(f64, f64, f64) -> f64>,
}

impl fmt::Debug for AnalyticPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticPotential")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl BoundaryCondition for AnalyticPotential {
    fn name(&self) -> &str {
        self.name
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y, self.alpha)
    }

    fn pole_indicator(&self, x: f64, y: f64) -> Option<f64> {
        self.pole.map(|p| p(x, y, self.alpha))
    }
}

fn sepl_sigma(x: f64, y: f64, _a: f64) -> f64 {
    1.0 / ((x * x + 0.1) * (y * y + 0.1))
}

fn cubic_u(x: f64, y: f64, a: f64) -> f64 {
    (x.powi(3) + y.powi(3)) / 3.0 + a * (x + y)
}

fn shifted_cubic_u(x: f64, y: f64, a: f64) -> f64 {
    cubic_u(x - 0.6, y, a)
}

fn exp_sigma(x: f64, y: f64, a: f64) -> f64 {
    (a * x * y).exp()
}

fn exp_u(x: f64, y: f64, a: f64) -> f64 {
    (-a * x * y).exp()
}

fn poly_sigma(x: f64, y: f64, a: f64) -> f64 {
    a * (x + y) + 10.0
}

fn poly_u(x: f64, y: f64, a: f64) -> f64 {
    (a * (x + y) + 10.0).ln()
}

fn lor_sigma(x: f64, y: f64, a: f64) -> f64 {
    let s = x + y;
    1.0 / (s * s + a)
}

fn lor_u(x: f64, y: f64, a: f64) -> f64 {
    let s = x + y;
    s.powi(3) / 3.0 + a * s
}

fn sin_sigma(x: f64, y: f64, a: f64) -> f64 {
    1.0 + (a * x * y).sin()
}

// 1/(tan t + 1) written without the removable singularity at cos t = 0.
fn sin_u(x: f64, y: f64, a: f64) -> f64 {
    let (s, c) = (0.5 * a * x * y).sin_cos();
    c / (s + c)
}

fn sin_pole(x: f64, y: f64, a: f64) -> f64 {
    let (s, c) = (0.5 * a * x * y).sin_cos();
    s + c
}

/// `σ = 100, 30, 20, 15, 10` on the bands `[0,.2), [.2,.4), [.4,.6), [.6,.8), [.8,∞)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConcentricDisks;

impl ConcentricDisks {
    pub fn band(r: f64) -> f64 {
        if r < 0.2 {
            100.0
        } else if r < 0.4 {
            30.0
        } else if r < 0.6 {
            20.0
        } else if r < 0.8 {
            15.0
        } else {
            10.0
        }
    }
}

impl ConductivityField for ConcentricDisks {
    fn name(&self) -> &str {
        "concentric_disks"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::GeometricPiecewise
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        Self::band(x.hypot(y))
    }

    fn sigma_polar(&self, r: f64, _theta: f64) -> f64 {
        Self::band(r)
    }
}

/// `σ = 100` on `(x − 0.6)² + y² ≤ 0.2`, `σ = 10` elsewhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct OffCenterDisk;

impl ConductivityField for OffCenterDisk {
    fn name(&self) -> &str {
        "offcenter_disk"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::GeometricPiecewise
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        let dx = x - 0.6;
        if dx * dx + y * y <= 0.2 {
            100.0
        } else {
            10.0
        }
    }
}

/// `σ = 100` on the centred axis-aligned square of side 0.65, `σ = 10` elsewhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquareInclusion;

impl SquareInclusion {
    pub const HALF_SIDE: f64 = 0.325;
    const SLACK: f64 = 1e-12;
}

impl ConductivityField for SquareInclusion {
    fn name(&self) -> &str {
        "square_inclusion"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::GeometricPiecewise
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        if x.abs().max(y.abs()) <= Self::HALF_SIDE + Self::SLACK {
            100.0
        } else {
            10.0
        }
    }

    fn feature_radii(&self, theta: f64) -> Vec<f64> {
        let off = wrap_angle(theta - FRAC_PI_4);
        let k = (off / FRAC_PI_2).round();
        if (off - k * FRAC_PI_2).abs() < 1e-9 {
            vec![Self::HALF_SIDE * SQRT_2]
        } else {
            Vec::new()
        }
    }
}

/// A named field together with its boundary condition and default domain.
#[derive(Debug, Clone)]
pub struct Case {
    pub name: String,
    pub field: Arc<dyn ConductivityField>,
    pub boundary_condition: Arc<dyn BoundaryCondition>,
    pub domain: Arc<dyn StarDomain>,
    /// Whether the boundary condition is an exact interior solution.
    pub exact: bool,
}

/// Registry entry. `field` and `condition` receive `α` and the boundary `α`.
#[derive(Clone, Copy)]
pub struct CaseEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub default_alpha: f64,
    pub domain: fn() -> Arc<dyn StarDomain>,
    pub field: fn(f64) -> Arc<dyn ConductivityField>,
    pub condition: fn(f64) -> Arc<dyn BoundaryCondition>,
    pub exact: bool,
}

impl fmt::Debug for CaseEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaseEntry")
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Default)]
pub struct CaseRegistry {
    entries: BTreeMap<&'static str, CaseEntry>,
}

impl CaseRegistry {
    pub fn register(&mut self, entry: CaseEntry) {
        self.entries.insert(entry.name, entry);
    }

    pub fn get(&self, name: &str) -> Result<&CaseEntry> {
        self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "case",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    /// Instantiates a case without validation.
    pub fn instantiate(
        &self,
        name: &str,
        alpha: Option<f64>,
        bc_alpha: Option<f64>,
    ) -> Result<Case> {
        let e = self.get(name)?;
        let alpha = alpha.unwrap_or(e.default_alpha);
        let bc_alpha = bc_alpha.unwrap_or(alpha);
        if !alpha.is_finite() || !bc_alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(Case {
            name: e.name.to_string(),
            field: (e.field)(alpha),
            boundary_condition: (e.condition)(bc_alpha),
            domain: (e.domain)(),
            exact: e.exact,
        })
    }
}

macro_rules! analytic {
    ($name:literal, $sigma:expr, $u:expr, $pole:expr) => {
        (
            |a: f64| -> Arc<dyn ConductivityField> {
                Arc::new(AnalyticField {
                    name: $name,
                    alpha: a,
                    f: $sigma,
                })
            },
            |a: f64| -> Arc<dyn BoundaryCondition> {
                Arc::new(AnalyticPotential {
                    name: $name,
                    alpha: a,
                    f: $u,
                    pole: $pole,
                })
            },
        )
    };
}

fn poly_pole(x: f64, y: f64, a: f64) -> f64 {
    a * (x + y) + 10.0
}

fn cubic(a: f64) -> Arc<dyn BoundaryCondition> {
    Arc::new(AnalyticPotential {
        name: "cubic",
        alpha: a,
        f: cubic_u,
        pole: None,
    })
}

fn default_registry() -> CaseRegistry {
    let mut reg = CaseRegistry::default();
    let (sepl, _) = analytic!("separable_lorentzian", sepl_sigma, cubic_u, None);
    reg.register(CaseEntry {
        name: "separable_lorentzian",
        description: "1/((x²+0.1)(y²+0.1)), u=(x³+y³)/3+0.1(x+y)",
        default_alpha: 0.1,
        domain: unit_disk,
        field: sepl,
        condition: |_| cubic(0.1),
        exact: true,
    });
    let (f, c) = analytic!("exponential", exp_sigma, exp_u, None);
    reg.register(CaseEntry {
        name: "exponential",
        description: "exp(αxy), u=exp(-αxy)",
        default_alpha: 1.0,
        domain: unit_disk,
        field: f,
        condition: c,
        exact: true,
    });
    let (f, c) = analytic!("polynomial", poly_sigma, poly_u, Some(poly_pole));
    reg.register(CaseEntry {
        name: "polynomial",
        description: "α(x+y)+10, u=ln(α(x+y)+10)",
        default_alpha: 1.0,
        domain: unit_disk,
        field: f,
        condition: c,
        exact: true,
    });
    let (f, c) = analytic!("lorentzian", lor_sigma, lor_u, None);
    reg.register(CaseEntry {
        name: "lorentzian",
        description: "1/((x+y)²+α), u=(x+y)³/3+α(x+y)",
        default_alpha: 1.0,
        domain: unit_disk,
        field: f,
        condition: c,
        exact: true,
    });
    let (f, c) = analytic!("sinusoidal", sin_sigma, sin_u, Some(sin_pole));
    reg.register(CaseEntry {
        name: "sinusoidal",
        description: "1+sin(αxy), u=1/(tan(αxy/2)+1)",
        default_alpha: 1.0,
        domain: unit_disk,
        field: f,
        condition: c,
        exact: true,
    });
    reg.register(CaseEntry {
        name: "concentric_disks",
        description: "concentric bands 100/30/20/15/10, u=(x³+y³)/3+0.01(x+y)",
        default_alpha: 0.01,
        domain: unit_disk,
        field: |_| Arc::new(ConcentricDisks),
        condition: |_| cubic(0.01),
        exact: false,
    });
    reg.register(CaseEntry {
        name: "offcenter_disk",
        description: "disk (x-0.6)²+y²≤0.2 at 100 in 10, shifted cubic",
        default_alpha: 0.01,
        domain: unit_disk,
        field: |_| Arc::new(OffCenterDisk),
        condition: |_| {
            Arc::new(AnalyticPotential {
                name: "shifted_cubic",
                alpha: 0.01,
                f: shifted_cubic_u,
                pole: None,
            })
        },
        exact: false,
    });
    reg.register(CaseEntry {
        name: "square_inclusion",
        description: "square of side 0.65 at 100 in 10, u=(x³+y³)/3+0.1(x+y)",
        default_alpha: 0.1,
        domain: unit_disk,
        field: |_| Arc::new(SquareInclusion),
        condition: |_| cubic(0.1),
        exact: false,
    });
    reg.register(CaseEntry {
        name: "beaked_lorentzian",
        description: "separable Lorentzian on the beaked domain",
        default_alpha: 0.1,
        domain: beaked_domain,
        field: sepl,
        condition: |_| cubic(0.1),
        exact: true,
    });
    reg.register(CaseEntry {
        name: "beaked_concentric",
        description: "concentric bands on the beaked domain",
        default_alpha: 0.1,
        domain: beaked_domain,
        field: |_| Arc::new(ConcentricDisks),
        condition: |_| cubic(0.1),
        exact: false,
    });
    reg.register(CaseEntry {
        name: "beaked_square",
        description: "square inclusion on the beaked domain",
        default_alpha: 0.1,
        domain: beaked_domain,
        field: |_| Arc::new(SquareInclusion),
        condition: |_| cubic(0.1),
        exact: false,
    });
    reg
}

pub fn case_registry() -> &'static CaseRegistry {
    static REG: OnceLock<CaseRegistry> = OnceLock::new();
    REG.get_or_init(default_registry)
}

/// Looks up a registered case and validates `σ > 0` on its domain and the
/// boundary condition along its boundary.
pub fn case_by_name(name: &str, alpha: Option<f64>, bc_alpha: Option<f64>) -> Result<Case> {
    let case = case_registry().instantiate(name, alpha, bc_alpha)?;
    validate_positive(case.field.as_ref(), case.domain.as_ref())
        .map_err(|e| e.context(name.to_string()))?;
    validate_boundary_condition(case.boundary_condition.as_ref(), case.domain.as_ref())
        .map_err(|e| e.context(name.to_string()))?;
    Ok(case)
}

#[derive(Debug, Clone)]
pub struct BuiltinCase {
    pub field: Arc<dyn ConductivityField>,
    pub solution: Arc<dyn BoundaryCondition>,
}

fn check_analytic(name: &str) -> Result<()> {
    if ANALYTIC_CASES.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownName {
            kind: "analytic case",
            name: name.to_string(),
            available: ANALYTIC_CASES.join(", "),
        })
    }
}

/// Analytic field with its exact solution, validated on the unit disk.
pub fn builtin_case(name: &str, alpha: f64) -> Result<BuiltinCase> {
    builtin_case_on(name, alpha, unit_disk().as_ref())
}

pub fn builtin_case_on(name: &str, alpha: f64, domain: &dyn StarDomain) -> Result<BuiltinCase> {
    check_analytic(name)?;
    let case = case_registry().instantiate(name, Some(alpha), None)?;
    validate_positive(case.field.as_ref(), domain)?;
    validate_boundary_condition(case.boundary_condition.as_ref(), domain)?;
    Ok(BuiltinCase {
        field: case.field,
        solution: case.boundary_condition,
    })
}

/// Analytic field only; the paired solution is not checked.
pub fn builtin_field(
    name: &str,
    alpha: f64,
    domain: &dyn StarDomain,
) -> Result<Arc<dyn ConductivityField>> {
    check_analytic(name)?;
    let case = case_registry().instantiate(name, Some(alpha), None)?;
    validate_positive(case.field.as_ref(), domain)?;
    Ok(case.field)
}

pub fn geometric_case(name: &str) -> Result<Arc<dyn ConductivityField>> {
    if !GEOMETRIC_CASES.contains(&name) {
        return Err(Error::UnknownName {
            kind: "geometric case",
            name: name.to_string(),
            available: GEOMETRIC_CASES.join(", "),
        });
    }
    Ok(case_registry().instantiate(name, None, None)?.field)
}
