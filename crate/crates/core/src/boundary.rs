//! Orthonormal boundary basis, collocation fit and total error.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conductivity::BoundaryCondition;
use crate::error::{Error, Result};
use crate::formal_powers::{Coefficient, FormalPowerTable};
use crate::geometry::{angle_distance, AngleSet, StarDomain};
use crate::spline::BoundarySpline;

/// Largest accepted 1-norm condition estimate of the collocation matrix.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative norm below which a projected trace counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Identifies a raw trace `Re Z_0^(n)(a, 0; ·)|_Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLabel {
    pub coefficient: Coefficient,
    pub degree: usize,
}

/// Order of the raw traces for degree `n`: `a = 1` for `0..=n`, then `a = i`
/// for `1..=n`.
pub fn trace_labels(degree: usize) -> Vec<TraceLabel> {
    let ones = (0..=degree).map(|n| TraceLabel {
        coefficient: Coefficient::One,
        degree: n,
    });
    let is = (1..=degree).map(|n| TraceLabel {
        coefficient: Coefficient::I,
        degree: n,
    });
    ones.chain(is).collect()
}

#[derive(Debug, Clone)]
pub struct BoundaryTraces {
    pub labels: Vec<TraceLabel>,
    /// `rows[k][q]`.
    pub rows: Vec<Vec<f64>>,
    /// Boundary points `z(θ_q)`.
    pub points: Vec<Complex64>,
}

/// Real parts of the first family's formal powers at the outer end of each
/// radius.
pub fn boundary_traces(table: &FormalPowerTable) -> BoundaryTraces {
    let labels = trace_labels(table.degree);
    let rows = labels
        .iter()
        .map(|l| {
            (0..table.radii_count())
                .map(|q| table.boundary_value(q, 0, l.coefficient, l.degree).re)
                .collect()
        })
        .collect();
    let points = table
        .grids
        .iter()
        .map(|g| *g.points.last().unwrap())
        .collect();
    BoundaryTraces {
        labels,
        rows,
        points,
    }
}

fn dot(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    w.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum()
}

/// Orthonormal functions on Γ with their splines and the triangular factor
/// `R` such that `raw_k = Σ_{j ≤ k} R[j][k] u_j`.
#[derive(Debug, Clone)]
pub struct BoundaryBasis {
    pub labels: Vec<TraceLabel>,
    pub angles: AngleSet,
    pub weights: Vec<f64>,
    /// `samples[k][q] = u_k(θ_q)`.
    pub samples: Vec<Vec<f64>>,
    /// `transform[j][k] = R[j][k]`, zero below the diagonal.
    pub transform: Vec<Vec<f64>>,
    splines: Vec<BoundarySpline>,
}

impl BoundaryBasis {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn sample_index(&self, theta: f64) -> Option<usize> {
        let step = self.angles.step();
        let q = ((theta.rem_euclid(TAU) / step).round() as usize) % self.angles.len();
        [
            q,
            (q + 1) % self.angles.len(),
            (q + self.angles.len() - 1) % self.angles.len(),
        ]
        .into_iter()
        .find(|&k| angle_distance(self.angles.angles[k], theta).abs() < 1e-12)
    }

    /// `u_k(θ)`: the stored sample when `θ` is a trace angle, the spline
    /// otherwise.
    pub fn eval(&self, k: usize, theta: f64) -> f64 {
        match self.sample_index(theta) {
            Some(q) => self.samples[k][q],
            None => self.splines[k].eval(theta),
        }
    }

    /// Weighted Gram matrix of the stored samples.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| dot(&self.weights, &self.samples[i], &self.samples[j]))
                    .collect()
            })
            .collect()
    }

    /// Raw-trace coefficients `β = R⁻¹ α`.
    pub fn raw_coefficients(&self, alpha: &[f64]) -> Vec<f64> {
        let n = alpha.len();
        let mut beta = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = ((k + 1)..n).map(|j| self.transform[k][j] * beta[j]).sum();
            beta[k] = (alpha[k] - s) / self.transform[k][k];
        }
        beta
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass under
/// `⟨f, g⟩ = Σ w_q f_q g_q`, followed by spline fitting. `breaks` lists
/// angles where the splines may have a corner; each must be a trace angle.
pub fn orthonormalize(
    traces: &BoundaryTraces,
    angles: &AngleSet,
    weights: &[f64],
    breaks: &[f64],
) -> Result<BoundaryBasis> {
    let q = angles.len();
    if weights.len() != q || traces.rows.iter().any(|r| r.len() != q) {
        return Err(Error::invalid(
            "traces",
            "sample counts differ from the angle set",
        ));
    }
    let n = traces.rows.len();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut transform = vec![vec![0.0; n]; n];
    for (k, raw) in traces.rows.iter().enumerate() {
        let original = dot(weights, raw, raw).sqrt();
        let mut v = raw.clone();
        for _ in 0..2 {
            for (j, u) in samples.iter().enumerate() {
                let c = dot(weights, &v, u);
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
                transform[j][k] += c;
            }
        }
        let norm = dot(weights, &v, &v).sqrt();
        let relative = if original > 0.0 { norm / original } else { 0.0 };
        if !(relative >= RANK_TOLERANCE) {
            return Err(Error::RankDeficient {
                index: k,
                relative_norm: relative,
            });
        }
        transform[k][k] = norm;
        v.iter_mut().for_each(|x| *x /= norm);
        samples.push(v);
    }
    let xs: Vec<f64> = (0..q).map(|i| angles.unwrapped(i)).collect();
    let spline_breaks: Vec<f64> = breaks
        .iter()
        .map(|&b| {
            (0..q)
                .find(|&i| angle_distance(angles.angles[i], b).abs() < 1e-12)
                .map(|i| xs[i])
                .ok_or_else(|| Error::invalid("breaks", format!("{b} is not a trace angle")))
        })
        .collect::<Result<_>>()?;
    let splines = samples
        .iter()
        .map(|s| BoundarySpline::new(&xs, s, &spline_breaks))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryBasis {
        labels: traces.labels.clone(),
        angles: angles.clone(),
        weights: weights.to_vec(),
        samples,
        transform,
        splines,
    })
}

/// `E = (Σ w_q r_q²)^{1/2}`.
pub fn total_error(residual: &[f64], weights: &[f64]) -> f64 {
    residual
        .iter()
        .zip(weights)
        .map(|(r, w)| w * r * r)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub theta: f64,
    pub boundary_value: f64,
    pub fit: f64,
    pub residual: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollocationFit {
    /// Coefficients of the orthonormal functions.
    pub alpha: Vec<f64>,
    /// Coefficients of the raw traces.
    pub beta: Vec<f64>,
    pub labels: Vec<TraceLabel>,
    pub collocation_angles: Vec<f64>,
    pub condition_estimate: f64,
    /// `max |U α − γ|`.
    pub collocation_residual: f64,
    pub total_error: f64,
    pub residual: Vec<ResidualSample>,
}

fn boundary_value(bc: &dyn BoundaryCondition, z: Complex64) -> Result<f64> {
    let v = bc.value(z.re, z.im);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::UndefinedBoundaryCondition { x: z.re, y: z.im })
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Square collocation of `bc` at `collocation` angles (one per basis
/// function), then the residual and total error on the trace angles.
pub fn collocation_fit(
    basis: &BoundaryBasis,
    bc: &dyn BoundaryCondition,
    domain: &dyn StarDomain,
    collocation: &AngleSet,
    condition_limit: f64,
) -> Result<CollocationFit> {
    let n = basis.len();
    if collocation.len() != n {
        return Err(Error::invalid(
            "collocation",
            format!("{} angles for {n} basis functions", collocation.len()),
        ));
    }
    let u = DMatrix::from_fn(n, n, |i, k| basis.eval(k, collocation.angles[i]));
    let gamma = collocation
        .angles
        .iter()
        .map(|&w| boundary_value(bc, domain.boundary_point(w)))
        .collect::<Result<Vec<_>>>()?;
    let gamma = DVector::from_vec(gamma);
    let lu = u.clone().lu();
    let inverse = lu.try_inverse().ok_or(Error::SingularMatrix)?;
    let condition = norm1(&u) * norm1(&inverse);
    if !(condition <= condition_limit) {
        return Err(Error::IllConditioned {
            estimate: condition,
            limit: condition_limit,
        });
    }
    let alpha = lu.solve(&gamma).ok_or(Error::SingularMatrix)?;
    let collocation_residual = (&u * &alpha - &gamma).amax();
    let alpha: Vec<f64> = alpha.iter().copied().collect();

    let residual = (0..basis.angles.len())
        .map(|q| {
            let theta = basis.angles.angles[q];
            let target = boundary_value(bc, domain.boundary_point(theta))?;
            let fit: f64 = (0..n).map(|k| alpha[k] * basis.samples[k][q]).sum();
            Ok(ResidualSample {
                theta,
                boundary_value: target,
                fit,
                residual: target - fit,
                weight: basis.weights[q],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let r: Vec<f64> = residual.iter().map(|s| s.residual).collect();
    Ok(CollocationFit {
        beta: basis.raw_coefficients(&alpha),
        alpha,
        labels: basis.labels.clone(),
        collocation_angles: collocation.angles.clone(),
        condition_estimate: condition,
        collocation_residual,
        total_error: total_error(&r, &basis.weights),
        residual,
    })
}

/// Writes `theta,u_c,fit,residual,weight` rows at full precision.
pub fn write_residual_csv<W: Write>(residual: &[ResidualSample], mut out: W) -> Result<()> {
    writeln!(out, "theta,u_c,fit,residual,weight")?;
    for s in residual {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            s.theta, s.boundary_value, s.fit, s.residual, s.weight
        )?;
    }
    Ok(())
}

/// Linear interpolation of a radial profile at radius `r`.
fn along_radius(radii: &[f64], values: &[Complex64], r: f64) -> Complex64 {
    let n = radii.len();
    let i = radii.partition_point(|&v| v <= r).clamp(1, n - 1) - 1;
    let t = ((r - radii[i]) / (radii[i + 1] - radii[i])).clamp(0.0, 1.0);
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// `u(z) = Σ β_k Re Z_0^(n_k)(a_k, 0; z)`, interpolating the table linearly
/// along the two radii that bracket `arg z` and then in angle. Radii are
/// matched at the same fraction of the boundary distance.
pub fn evaluate_interior(
    beta: &[f64],
    labels: &[TraceLabel],
    table: &FormalPowerTable,
    domain: &dyn StarDomain,
    z: Complex64,
) -> Result<f64> {
    if !domain.contains(z.re, z.im) {
        return Err(Error::OutsideDomain { x: z.re, y: z.im });
    }
    if beta.len() != labels.len() {
        return Err(Error::invalid("beta", "length differs from the labels"));
    }
    let q_count = table.radii_count();
    let mut order: Vec<(f64, usize)> = (0..q_count)
        .map(|q| (table.theta(q).rem_euclid(TAU), q))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = z.norm();
    let theta = if r == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re).rem_euclid(TAU)
    };
    let hi = order.partition_point(|&(t, _)| t <= theta) % q_count;
    let lo = (hi + q_count - 1) % q_count;
    let (t_lo, q_lo) = order[lo];
    let (t_hi, q_hi) = order[hi];
    let span = (t_hi - t_lo).rem_euclid(TAU);
    let frac = if span == 0.0 {
        0.0
    } else {
        (theta - t_lo).rem_euclid(TAU) / span
    };
    let reach = domain.radius(theta);
    let s = if reach > 0.0 { r / reach } else { 0.0 };
    let mut u = 0.0;
    for (b, l) in beta.iter().zip(labels) {
        let mut v = 0.0;
        for (q, w) in [(q_lo, 1.0 - frac), (q_hi, frac)] {
            if w == 0.0 {
                continue;
            }
            let grid = &table.grids[q];
            let profile = table.profile(q, 0, l.coefficient, l.degree)?;
            v += w * along_radius(&grid.radii, profile, s * grid.radii.last().unwrap()).re;
        }
        u += b * v;
    }
    Ok(u)
}
