use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::{solve, ExperimentConfig};
use crate::boundary::{collocation_fit, CONDITION_LIMIT};
use crate::conductivity::{
    build_strip_interpolation, builtin_field, generating_sequence, BoundaryCondition,
    ConductivityField, ConstantField, FnCondition, GeneratingSequence, LimitingC1, StripParams,
};
use crate::error::Result;
use crate::formal_powers::{
    asymptotics_check, build_formal_powers, vekua_residual, Coefficient, QuadratureConfig,
    Retention,
};
use crate::geometry::{build_radial_grid, unit_disk, StarDomain, UnitDisk};

/// `Σ c_k u_k` of boundary conditions.
#[derive(Debug, Clone)]
pub struct LinearCombination {
    pub terms: Vec<(f64, Arc<dyn BoundaryCondition>)>,
}

impl BoundaryCondition for LinearCombination {
    fn name(&self) -> &str {
        "linear_combination"
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|(c, u)| c * u.value(x, y)).sum()
    }
}

/// Errors of the `σ ≡ 1` formal powers against `zⁿ` on one radius.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaOneErrors {
    pub intervals: usize,
    /// `max_p |Z^(n)(1, 0; z_p) − z_pⁿ|` for `n = 1..=N`.
    pub absolute: Vec<f64>,
    /// `absolute[n]` divided by `max_p |z_pⁿ|`.
    pub relative: Vec<f64>,
}

impl SigmaOneErrors {
    pub fn max_relative(&self) -> f64 {
        self.relative.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `C` with `absolute[n] = C n² / P²`.
    pub fn constant(&self) -> f64 {
        let p2 = (self.intervals * self.intervals) as f64;
        self.absolute
            .iter()
            .enumerate()
            .map(|(i, e)| e * p2 / ((i + 1) * (i + 1)) as f64)
            .fold(0.0, f64::max)
    }
}

pub fn sigma_one_errors(
    degree: usize,
    intervals: usize,
    theta: f64,
    config: &QuadratureConfig,
) -> Result<SigmaOneErrors> {
    let grids = vec![build_radial_grid(&UnitDisk, theta, intervals, &[])?];
    let strategy = LimitingC1 {
        field: Arc::new(ConstantField(1.0)),
    };
    let seq = generating_sequence(&strategy, &grids)?;
    let table = build_formal_powers(&seq, &grids, degree, config, Retention::Full)?;
    let prof = |n: usize| table.profile(0, 0, Coefficient::One, n);
    let mut absolute = Vec::with_capacity(degree);
    let mut relative = Vec::with_capacity(degree);
    for n in 1..=degree {
        let values = prof(n)?;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for (z, v) in grids[0].points.iter().zip(values) {
            let exact = z.powu(n as u32);
            err = err.max((v - exact).norm());
            scale = scale.max(exact.norm());
        }
        absolute.push(err);
        relative.push(err / scale);
    }
    Ok(SigmaOneErrors {
        intervals,
        absolute,
        relative,
    })
}

/// `max |Im(conj F · G) − 1|` over every sample of the sequence.
pub fn pair_positivity_error(seq: &GeneratingSequence) -> f64 {
    let mut worst = 0.0f64;
    for m in 0..seq.period {
        for q in 0..seq.radii_count() {
            for p in 0..seq.amplitudes(m, q).len() {
                let w = (seq.f(m, q, p).conj() * seq.g(m, q, p)).im;
                worst = worst.max((w - 1.0).abs());
            }
        }
    }
    worst
}

/// Maximum relative deviation of the `K = J = n` strip interpolation from
/// `field` on a 101 × 101 lattice clipped to the domain.
pub fn strip_interpolation_error(
    field: &dyn ConductivityField,
    domain: &dyn StarDomain,
    n: usize,
) -> Result<f64> {
    let params = StripParams {
        strips: n,
        samples: n,
        ..StripParams::default()
    };
    let s = build_strip_interpolation(field, domain, &params)?;
    let (x0, x1) = domain.x_extent();
    let mut worst = 0.0f64;
    for i in 0..=100 {
        for j in 0..=100 {
            let x = x0 + (x1 - x0) * i as f64 / 100.0;
            let y = -1.0 + 2.0 * j as f64 / 100.0;
            let r = x.hypot(y);
            if r > 0.0 && r >= 0.999 * domain.radius(y.atan2(x)) {
                continue;
            }
            let exact = field.sigma(x, y);
            worst = worst.max((s.sigma(x, y) - exact).abs() / exact);
        }
    }
    Ok(worst)
}

fn sepl_conjugate(x: f64, y: f64) -> f64 {
    let s = 0.1f64.sqrt();
    ((y / s).atan() - (x / s).atan()) / s
}

/// Finite-difference Vekua residual of `W = p u + i v / p` for the separable
/// Lorentzian, where `p = √σ`, `u = (x³+y³)/3 + 0.1(x+y)` and `v` is its
/// σ-conjugate. Returns the worst residual over a few interior points for
/// each step in `steps`.
pub fn vekua_refinement(steps: &[f64]) -> Result<Vec<f64>> {
    let p = |x: f64, y: f64| 1.0 / ((x * x + 0.1) * (y * y + 0.1)).sqrt();
    let u = |x: f64, y: f64| (x.powi(3) + y.powi(3)) / 3.0 + 0.1 * (x + y);
    let w = |x: f64, y: f64| Complex64::new(p(x, y) * u(x, y), sepl_conjugate(x, y) / p(x, y));
    let points = [(0.3, 0.2), (-0.4, 0.5), (0.1, -0.6), (0.55, -0.35)];
    steps
        .iter()
        .map(|&h| {
            points
                .iter()
                .map(|&(x, y)| vekua_residual(&w, &p, &UnitDisk, x, y, h))
                .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Quadrature scale used by the `σ ≡ 1` oracle; any value but 1 should
    /// make it fail.
    pub delta: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { delta: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: &'static str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            value,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, err: impl fmt::Display) -> Self {
        Self::new(name, false, f64::NAN, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub checks: Vec<OracleCheck>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for OracleSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<24} {:>12.4e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.detail
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn sci(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.2e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check(name: &'static str, f: impl FnOnce() -> Result<OracleCheck>) -> OracleCheck {
    f().unwrap_or_else(|e| OracleCheck::failed(name, e))
}

pub fn run_oracles() -> OracleSummary {
    run_oracles_with(&OracleOptions::default())
}

pub fn run_oracles_with(options: &OracleOptions) -> OracleSummary {
    let quad = QuadratureConfig {
        delta: options.delta,
        ..QuadratureConfig::default()
    };
    let mut checks = Vec::new();

    checks.push(check("sigma_one_powers", || {
        let mut worst = 0.0f64;
        for p in [250, 500, 1000] {
            worst = worst.max(sigma_one_errors(10, p, PI / 7.0, &quad)?.constant());
        }
        Ok(OracleCheck::new(
            "sigma_one_powers",
            worst <= 10.0,
            worst,
            "max_p |Z^(n) - z^n| P^2 / n^2 over n <= 10, P in {250, 500, 1000}; need <= 10",
        ))
    }));

    checks.push(check("refinement_rate", || {
        let e: Vec<f64> = [1000, 500, 250]
            .iter()
            .map(|&p| sigma_one_errors(10, p, PI / 7.0, &quad).map(|s| s.absolute[9]))
            .collect::<Result<_>>()?;
        let rate = 0.5 * ((e[1] / e[0]).log2() + (e[2] / e[1]).log2());
        Ok(OracleCheck::new(
            "refinement_rate",
            (rate - 2.0).abs() <= 0.3,
            rate,
            "order of the degree-10 error as P halves from 1000 twice; need 2.0 +/- 0.3",
        ))
    }));

    let disk = unit_disk();
    checks.push(check("pair_positivity", || {
        let field = builtin_field("separable_lorentzian", 0.1, disk.as_ref())?;
        let grids = (0..16)
            .map(|q| build_radial_grid(disk.as_ref(), TAU * q as f64 / 16.0, 200, &[]))
            .collect::<Result<Vec<_>>>()?;
        let seq = generating_sequence(&LimitingC1 { field }, &grids)?;
        let e = pair_positivity_error(&seq);
        Ok(OracleCheck::new(
            "pair_positivity",
            e <= 1e-12,
            e,
            "|Im(conj F G) - 1| on the separable Lorentzian; need <= 1e-12",
        ))
    }));

    checks.push(check("zero_at_origin", || {
        let field = builtin_field("exponential", 1.0, disk.as_ref())?;
        let grids = vec![build_radial_grid(disk.as_ref(), 0.3, 50, &[])?];
        let seq = generating_sequence(&LimitingC1 { field }, &grids)?;
        let t = build_formal_powers(
            &seq,
            &grids,
            8,
            &QuadratureConfig::default(),
            Retention::Full,
        )?;
        let mut worst = 0.0f64;
        for a in Coefficient::BOTH {
            for n in 1..=8 {
                worst = worst.max(t.value(0, 0, a, n, 0)?.norm());
            }
        }
        Ok(OracleCheck::new(
            "zero_at_origin",
            worst == 0.0,
            worst,
            "Z^(n)(a, 0; 0) for n >= 1",
        ))
    }));

    checks.push(check("asymptotics", || {
        let field = builtin_field("separable_lorentzian", 0.1, disk.as_ref())?;
        let grids = vec![build_radial_grid(disk.as_ref(), 0.4, 1000, &[])?];
        let seq = generating_sequence(&LimitingC1 { field }, &grids)?;
        let t = build_formal_powers(
            &seq,
            &grids,
            1,
            &QuadratureConfig::default(),
            Retention::Full,
        )?;
        let mut worst = 0.0f64;
        for a in Coefficient::BOTH {
            let prof = asymptotics_check(&t, 0, 0, 1, a.value(), 0.0101)?;
            worst = worst.max((prof.last().map(|x| x.1).unwrap_or_default() - 1.0).norm());
        }
        Ok(OracleCheck::new(
            "asymptotics",
            worst <= 0.05,
            worst,
            "|Z^(1)(a, 0; z) / (a z) - 1| at |z| = 0.01; need <= 0.05",
        ))
    }));

    let base = ExperimentConfig::new("exponential", 10, 200, 200);
    match solve(&base) {
        Ok(sol) => {
            let gram = sol.basis.gram();
            let dev = gram
                .iter()
                .enumerate()
                .flat_map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
                })
                .fold(0.0, f64::max);
            checks.push(OracleCheck::new(
                "orthonormality",
                dev <= 1e-8,
                dev,
                "max |Gram - I| for the exponential basis; need <= 1e-8",
            ));
            checks.push(OracleCheck::new(
                "collocation_residual",
                sol.fit.collocation_residual <= 1e-9,
                sol.fit.collocation_residual,
                "max |U alpha - gamma|; need <= 1e-9",
            ));
            checks.push(check("linearity", || {
                let domain = sol.case.domain.as_ref();
                let colloc = &sol.collocation;
                let u1 = sol.case.boundary_condition.clone();
                let u2: Arc<dyn BoundaryCondition> = Arc::new(FnCondition {
                    name: "xy",
                    f: |x, y| x * y + 0.3 * y,
                });
                let sum = LinearCombination {
                    terms: vec![(1.0, u1.clone()), (2.0, u2.clone())],
                };
                let f1 = collocation_fit(&sol.basis, u1.as_ref(), domain, colloc, CONDITION_LIMIT)?;
                let f2 = collocation_fit(&sol.basis, u2.as_ref(), domain, colloc, CONDITION_LIMIT)?;
                let fs = collocation_fit(&sol.basis, &sum, domain, colloc, CONDITION_LIMIT)?;
                let scale = f1
                    .alpha
                    .iter()
                    .chain(&f2.alpha)
                    .map(|v| v.abs())
                    .fold(1.0, f64::max);
                let dev = (0..fs.alpha.len())
                    .map(|k| (fs.alpha[k] - f1.alpha[k] - 2.0 * f2.alpha[k]).abs() / scale)
                    .fold(0.0, f64::max);
                Ok(OracleCheck::new(
                    "linearity",
                    dev <= 1e-10,
                    dev,
                    "alpha(u1 + 2 u2) - alpha(u1) - 2 alpha(u2), relative; need <= 1e-10",
                ))
            }));
            checks.push(check("scale_equivariance", || {
                let domain = sol.case.domain.as_ref();
                let colloc = &sol.collocation;
                let scaled = LinearCombination {
                    terms: vec![(-4.0, sol.case.boundary_condition.clone())],
                };
                let f = collocation_fit(&sol.basis, &scaled, domain, colloc, CONDITION_LIMIT)?;
                let exact = f
                    .alpha
                    .iter()
                    .zip(&sol.fit.alpha)
                    .all(|(a, b)| *a == -4.0 * b)
                    && f.total_error == 4.0 * sol.fit.total_error;
                Ok(OracleCheck::new(
                    "scale_equivariance",
                    exact,
                    f.total_error / sol.fit.total_error,
                    "u -> -4u must give alpha -> -4 alpha and E -> 4E exactly",
                ))
            }));
        }
        Err(e) => {
            for name in [
                "orthonormality",
                "collocation_residual",
                "linearity",
                "scale_equivariance",
            ] {
                checks.push(OracleCheck::failed(name, &e));
            }
        }
    }

    checks.push(check("strip_convergence", || {
        let field = builtin_field("separable_lorentzian", 0.1, disk.as_ref())?;
        let errs = [50, 100, 200, 400, 800, 1600]
            .iter()
            .map(|&n| strip_interpolation_error(field.as_ref(), disk.as_ref(), n))
            .collect::<Result<Vec<_>>>()?;
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        Ok(OracleCheck::new(
            "strip_convergence",
            monotone,
            *errs.last().unwrap(),
            format!("K = J = 50..1600 errors [{}]; must decrease", sci(&errs)),
        ))
    }));

    checks.push(check("vekua_refinement", || {
        let r = vekua_refinement(&[4e-3, 2e-3, 1e-3, 5e-4])?;
        let monotone = r.windows(2).all(|w| w[1] < w[0]);
        Ok(OracleCheck::new(
            "vekua_refinement",
            monotone,
            *r.last().unwrap(),
            format!(
                "separable Lorentzian residuals [{}]; must decrease",
                sci(&r)
            ),
        ))
    }));

    OracleSummary { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_one_is_second_order() {
        let q = QuadratureConfig::default();
        let a = sigma_one_errors(4, 200, 0.5, &q).unwrap();
        let b = sigma_one_errors(4, 400, 0.5, &q).unwrap();
        // degrees 1 and 2 are integrated exactly
        assert!(a.absolute[0] < 1e-14 && a.absolute[1] < 1e-14);
        let rate = (a.absolute[3] / b.absolute[3]).log2();
        assert!((rate - 2.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn delta_sentinel_fails() {
        let q = QuadratureConfig {
            delta: 9.0,
            ..QuadratureConfig::default()
        };
        assert!(sigma_one_errors(3, 100, 0.2, &q).unwrap().constant() > 1e3);
    }

    #[test]
    fn exact_vekua_solution_has_shrinking_residual() {
        let r = vekua_refinement(&[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(r[0] > r[1] && r[1] > r[2]);
        let rate = (r[1] / r[2]).log2();
        assert!((rate - 2.0).abs() < 0.2, "{rate}");
    }

    #[test]
    fn linear_combination_evaluates_terms() {
        let c = LinearCombination {
            terms: vec![
                (
                    2.0,
                    Arc::new(FnCondition {
                        name: "x",
                        f: |x, _| x,
                    }),
                ),
                (
                    -1.0,
                    Arc::new(FnCondition {
                        name: "y",
                        f: |_, y| y,
                    }),
                ),
            ],
        };
        assert_eq!(c.value(3.0, 5.0), 1.0);
    }
}
