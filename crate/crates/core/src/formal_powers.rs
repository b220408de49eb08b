//! Formal powers built by the Bers integral recursion along radial grids.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conductivity::{GeneratingSequence, SequenceStrategy};
use crate::error::{Error, Result};
use crate::geometry::{RadialGrid, StarDomain};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
}

/// How degree-zero powers are formed from a pair `(F, G)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedRule {
    /// `λF + μG` with real `λ, μ` such that the value at the centre is `a`.
    #[default]
    Normalized,
    /// `Z(1) = F`, `Z(i) = G`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Overall scale applied to each antiderivative.
    pub delta: f64,
    pub rule: QuadratureRule,
    pub seed: SeedRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            rule: QuadratureRule::Trapezoid,
            seed: SeedRule::Normalized,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(
                "delta",
                format!("{} is not a positive real", self.delta),
            ));
        }
        Ok(())
    }
}

/// Which samples a [`FormalPowerTable`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    /// Only the outermost sample `p = P` of every radius.
    #[default]
    Boundary,
    /// Every sample.
    Full,
}

/// The two basis coefficients `a ∈ {1, i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficient {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "i")]
    I,
}

impl Coefficient {
    pub const BOTH: [Coefficient; 2] = [Coefficient::One, Coefficient::I];

    pub fn index(self) -> usize {
        match self {
            Coefficient::One => 0,
            Coefficient::I => 1,
        }
    }

    pub fn value(self) -> Complex64 {
        match self {
            Coefficient::One => Complex64::new(1.0, 0.0),
            Coefficient::I => I,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Coefficient::One => "1",
            Coefficient::I => "i",
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `(F, G)`-antiderivative of `w` along a path starting at the centre, for
/// the pair `(p, i/p)`:
/// `V = δ (p Re∫ (w/p) dz + (i/p) Im∫ p w dz)` with cumulative trapezoid sums.
pub fn fg_antiderivative(
    path: &[Complex64],
    amplitude: &[f64],
    integrand: &[Complex64],
    config: &QuadratureConfig,
) -> Result<Vec<Complex64>> {
    let n = path.len();
    if n < 2 {
        return Err(Error::invalid("path", "need at least two points"));
    }
    if amplitude.len() != n || integrand.len() != n {
        return Err(Error::invalid(
            "path",
            "amplitude and integrand lengths differ from the path",
        ));
    }
    let mut out = Vec::with_capacity(n);
    out.push(Complex64::new(0.0, 0.0));
    let (mut re_part, mut im_part) = (Compensated::default(), Compensated::default());
    let mut prev_g = integrand[0] / amplitude[0];
    let mut prev_f = integrand[0] * amplitude[0];
    for s in 1..n {
        let dz = path[s] - path[s - 1];
        let g = integrand[s] / amplitude[s];
        let f = integrand[s] * amplitude[s];
        re_part.add((0.5 * (prev_g + g) * dz).re);
        im_part.add((0.5 * (prev_f + f) * dz).im);
        let p = amplitude[s];
        out.push(config.delta * Complex64::new(p * re_part.value(), im_part.value() / p));
        prev_g = g;
        prev_f = f;
    }
    Ok(out)
}

/// Degree-zero power of coefficient `a` for the pair with amplitudes `amp`,
/// centred at `amp[0]`.
fn seed(amp: &[f64], a: Coefficient, rule: SeedRule) -> Vec<Complex64> {
    let scale = match rule {
        SeedRule::Normalized => amp[0],
        SeedRule::Raw => 1.0,
    };
    match a {
        Coefficient::One => amp
            .iter()
            .map(|&p| Complex64::new(p / scale, 0.0))
            .collect(),
        Coefficient::I => amp
            .iter()
            .map(|&p| Complex64::new(0.0, scale / p))
            .collect(),
    }
}

/// All formal powers along one path: `out[m][a][n][p]`.
///
/// `amplitudes[m]` holds the pair amplitudes of family `m`; one family means
/// period 1.
pub fn radial_powers(
    path: &[Complex64],
    amplitudes: &[&[f64]],
    degree: usize,
    config: &QuadratureConfig,
) -> Result<Vec<[Vec<Vec<Complex64>>; 2]>> {
    config.validate()?;
    let period = amplitudes.len();
    if !(1..=2).contains(&period) {
        return Err(Error::invalid("period", format!("{period} is not 1 or 2")));
    }
    let mut out: Vec<[Vec<Vec<Complex64>>; 2]> = amplitudes
        .iter()
        .map(|amp| Coefficient::BOTH.map(|a| vec![seed(amp, a, config.seed)]))
        .collect();
    for n in 1..=degree {
        for m in 0..period {
            let src = (m + period - 1) % period;
            for a in 0..2 {
                let mut v = fg_antiderivative(path, amplitudes[m], &out[src][a][n - 1], config)?;
                let k = n as f64;
                v.iter_mut().for_each(|z| *z *= k);
                out[m][a].push(v);
            }
        }
    }
    Ok(out)
}

/// Formal powers `Z_m^(n)(a, 0; ·)` on every radius.
#[derive(Debug, Clone)]
pub struct FormalPowerTable {
    pub degree: usize,
    pub period: usize,
    pub retention: Retention,
    pub grids: Vec<RadialGrid>,
    /// Per radius, indexed by [`FormalPowerTable::slot`].
    values: Vec<Vec<Complex64>>,
}

impl FormalPowerTable {
    fn stride(&self, q: usize) -> usize {
        match self.retention {
            Retention::Full => self.grids[q].len(),
            Retention::Boundary => 1,
        }
    }

    fn slot(&self, q: usize, m: usize, a: Coefficient, n: usize) -> usize {
        let m = m % self.period;
        ((m * 2 + a.index()) * (self.degree + 1) + n) * self.stride(q)
    }

    pub fn radii_count(&self) -> usize {
        self.grids.len()
    }

    pub fn theta(&self, q: usize) -> f64 {
        self.grids[q].theta
    }

    /// `Z_m^(n)(a, 0; z_q[p])`.
    pub fn value(
        &self,
        q: usize,
        m: usize,
        a: Coefficient,
        n: usize,
        p: usize,
    ) -> Result<Complex64> {
        let last = self.grids[q].len() - 1;
        if n > self.degree || p > last {
            return Err(Error::invalid(
                "index",
                format!("n={n}, p={p} out of range"),
            ));
        }
        let base = self.slot(q, m, a, n);
        match self.retention {
            Retention::Full => Ok(self.values[q][base + p]),
            Retention::Boundary if p == last => Ok(self.values[q][base]),
            Retention::Boundary => Err(Error::InteriorNotRetained),
        }
    }

    /// Value at the outermost sample of radius `q`.
    pub fn boundary_value(&self, q: usize, m: usize, a: Coefficient, n: usize) -> Complex64 {
        let base = self.slot(q, m, a, n);
        self.values[q][base + self.stride(q) - 1]
    }

    /// Whole radial profile; requires full retention.
    pub fn profile(&self, q: usize, m: usize, a: Coefficient, n: usize) -> Result<&[Complex64]> {
        if self.retention != Retention::Full {
            return Err(Error::InteriorNotRetained);
        }
        let base = self.slot(q, m, a, n);
        Ok(&self.values[q][base..base + self.stride(q)])
    }

    /// `Z^(n)(a, ·)` for a general complex coefficient, by linearity.
    pub fn combined(
        &self,
        q: usize,
        m: usize,
        a: Complex64,
        n: usize,
        p: usize,
    ) -> Result<Complex64> {
        Ok(a.re * self.value(q, m, Coefficient::One, n, p)?
            + a.im * self.value(q, m, Coefficient::I, n, p)?)
    }

    /// Writes `q,m,a,n,p,re,im` rows for every retained sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "q,m,a,n,p,re,im")?;
        for q in 0..self.grids.len() {
            let last = self.grids[q].len() - 1;
            let ps: Vec<usize> = match self.retention {
                Retention::Full => (0..=last).collect(),
                Retention::Boundary => vec![last],
            };
            for m in 0..self.period {
                for a in Coefficient::BOTH {
                    for n in 0..=self.degree {
                        for &p in &ps {
                            let z = self.value(q, m, a, n, p)?;
                            writeln!(out, "{q},{m},{},{n},{p},{:e},{:e}", a.label(), z.re, z.im)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn build_formal_powers(
    sequence: &GeneratingSequence,
    grids: &[RadialGrid],
    degree: usize,
    config: &QuadratureConfig,
    retention: Retention,
) -> Result<FormalPowerTable> {
    config.validate()?;
    if sequence.radii_count() != grids.len() {
        return Err(Error::invalid(
            "sequence",
            "sampled on a different number of radii",
        ));
    }
    let period = sequence.period;
    let values = grids
        .par_iter()
        .enumerate()
        .map(|(q, grid)| {
            let amps: Vec<&[f64]> = (0..period).map(|m| sequence.amplitudes(m, q)).collect();
            if amps.iter().any(|a| a.len() != grid.len()) {
                return Err(Error::invalid(
                    "sequence",
                    format!("radius {q} has a different sample count"),
                ));
            }
            let powers = radial_powers(&grid.points, &amps, degree, config)?;
            let mut flat = Vec::new();
            for family in &powers {
                for per_a in family {
                    for v in per_a {
                        match retention {
                            Retention::Full => flat.extend_from_slice(v),
                            Retention::Boundary => flat.push(*v.last().unwrap()),
                        }
                    }
                }
            }
            Ok(flat)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FormalPowerTable {
        degree,
        period,
        retention,
        grids: grids.to_vec(),
        values,
    })
}

/// Formal powers at an arbitrary point, computed along the straight ray from
/// the centre with `intervals` trapezoid steps. Returns `out[m][a][n]`.
pub fn formal_powers_at(
    strategy: &dyn SequenceStrategy,
    z: Complex64,
    intervals: usize,
    degree: usize,
    config: &QuadratureConfig,
) -> Result<Vec<[Vec<Complex64>; 2]>> {
    if intervals < 1 {
        return Err(Error::invalid("intervals", "need at least one step"));
    }
    let r = z.norm();
    let theta = z.im.atan2(z.re);
    let path: Vec<Complex64> = (0..=intervals)
        .map(|k| z * (k as f64 / intervals as f64))
        .collect();
    let amps: Vec<Vec<f64>> = (0..strategy.period())
        .map(|m| {
            (0..=intervals)
                .map(|k| strategy.amplitude_polar(m, r * k as f64 / intervals as f64, theta))
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = amps.iter().map(Vec::as_slice).collect();
    let powers = radial_powers(&path, &refs, degree, config)?;
    Ok(powers
        .into_iter()
        .map(|fam| fam.map(|per_n| per_n.into_iter().map(|v| *v.last().unwrap()).collect()))
        .collect())
}

/// `Z^(n)(a, 0; z[p]) / (a z[p]^n)` on radius `q` for all `p ≥ 1` with
/// `r[p] ≤ max_radius`, as `(r, ratio)` pairs.
pub fn asymptotics_check(
    table: &FormalPowerTable,
    q: usize,
    m: usize,
    n: usize,
    a: Complex64,
    max_radius: f64,
) -> Result<Vec<(f64, Complex64)>> {
    if n < 1 {
        return Err(Error::invalid("n", "degree must be at least 1"));
    }
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("a", "coefficient must be nonzero"));
    }
    let grid = &table.grids[q];
    let mut out = Vec::new();
    for p in 1..grid.len() {
        if grid.radii[p] > max_radius {
            break;
        }
        let z = grid.points[p];
        out.push((
            grid.radii[p],
            table.combined(q, m, a, n, p)? / (a * z.powu(n as u32)),
        ));
    }
    Ok(out)
}

/// `|∂z̄W − (∂z̄p/p) conj(W)|` at `(x, y)` by central differences of step `h`,
/// with `∂z̄ = ∂x + i∂y`.
pub fn vekua_residual(
    w: &dyn Fn(f64, f64) -> Complex64,
    p: &dyn Fn(f64, f64) -> f64,
    domain: &dyn StarDomain,
    x: f64,
    y: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("h", "step must be positive"));
    }
    for (sx, sy) in [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)] {
        if sx.hypot(sy) >= domain.radius(sy.atan2(sx)) {
            return Err(Error::OutsideDomain { x: sx, y: sy });
        }
    }
    let wx = (w(x + h, y) - w(x - h, y)) / (2.0 * h);
    let wy = (w(x, y + h) - w(x, y - h)) / (2.0 * h);
    let px = (p(x + h, y) - p(x - h, y)) / (2.0 * h);
    let py = (p(x, y + h) - p(x, y - h)) / (2.0 * h);
    let pv = p(x, y);
    let lhs = wx + I * wy;
    let b = Complex64::new(px, py) / pv;
    Ok((lhs - b * w(x, y).conj()).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::{builtin_field, generating_sequence, ConstantField, LimitingC1};
    use crate::geometry::{build_radial_grid, unit_disk, UnitDisk};
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn ray(theta: f64, p: usize) -> RadialGrid {
        build_radial_grid(&UnitDisk, theta, p, &[]).unwrap()
    }

    fn unit_table(q: usize, p: usize, n: usize, retention: Retention) -> FormalPowerTable {
        let grids: Vec<_> = (0..q).map(|k| ray(TAU * k as f64 / q as f64, p)).collect();
        let s = LimitingC1 {
            field: Arc::new(ConstantField(1.0)),
        };
        let seq = generating_sequence(&s, &grids).unwrap();
        build_formal_powers(&seq, &grids, n, &QuadratureConfig::default(), retention).unwrap()
    }

    #[test]
    fn antiderivative_of_one_and_z() {
        let g = ray(0.7, 200);
        let ones = vec![1.0; g.len()];
        let w1 = vec![Complex64::new(1.0, 0.0); g.len()];
        let v = fg_antiderivative(&g.points, &ones, &w1, &QuadratureConfig::default()).unwrap();
        for (a, b) in v.iter().zip(&g.points) {
            assert!((a - b).norm() < 1e-14);
        }
        let v =
            fg_antiderivative(&g.points, &ones, &g.points, &QuadratureConfig::default()).unwrap();
        let z = *g.points.last().unwrap();
        // trapezoid is exact for a linear integrand along a straight ray
        assert!((v.last().unwrap() - z * z / 2.0).norm() < 1e-14);
        assert!(fg_antiderivative(
            &g.points[..1],
            &ones[..1],
            &w1[..1],
            &QuadratureConfig::default()
        )
        .is_err());
    }

    #[test]
    fn unit_conductivity_gives_monomials() {
        let t = unit_table(4, 1000, 3, Retention::Full);
        for q in 0..4 {
            let z = *t.grids[q].points.last().unwrap();
            for n in 0..=3 {
                let zn = z.powu(n as u32);
                let v = t.value(q, 0, Coefficient::One, n, 1000).unwrap();
                assert!((v - zn).norm() <= 1e-6 * zn.norm(), "n={n} {v} {zn}");
                let v = t.value(q, 0, Coefficient::I, n, 1000).unwrap();
                assert!((v - I * zn).norm() <= 1e-6 * zn.norm());
            }
            for n in 1..=3 {
                assert_eq!(
                    t.value(q, 0, Coefficient::One, n, 0).unwrap(),
                    Complex64::new(0.0, 0.0)
                );
            }
        }
    }

    #[test]
    fn delta_scales_degree_n_by_delta_power() {
        let g = vec![ray(0.3, 50)];
        let s = LimitingC1 {
            field: Arc::new(ConstantField(2.0)),
        };
        let seq = generating_sequence(&s, &g).unwrap();
        let base = build_formal_powers(
            &seq,
            &g,
            4,
            &QuadratureConfig::default(),
            Retention::Boundary,
        )
        .unwrap();
        let cfg = QuadratureConfig {
            delta: 9.0,
            ..Default::default()
        };
        let scaled = build_formal_powers(&seq, &g, 4, &cfg, Retention::Boundary).unwrap();
        for n in 0..=4 {
            let a = base.boundary_value(0, 0, Coefficient::One, n) * 9f64.powi(n as i32);
            let b = scaled.boundary_value(0, 0, Coefficient::One, n);
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
        assert!(QuadratureConfig {
            delta: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn raw_seeds_equal_the_pair() {
        let d = unit_disk();
        let field = builtin_field("separable_lorentzian", 0.1, d.as_ref()).unwrap();
        let g = vec![ray(1.1, 30)];
        let seq = generating_sequence(&LimitingC1 { field }, &g).unwrap();
        let cfg = QuadratureConfig {
            seed: SeedRule::Raw,
            ..Default::default()
        };
        let t = build_formal_powers(&seq, &g, 2, &cfg, Retention::Full).unwrap();
        for p in 0..=30 {
            assert_eq!(
                t.value(0, 0, Coefficient::One, 0, p).unwrap(),
                seq.f(0, 0, p)
            );
            assert_eq!(t.value(0, 0, Coefficient::I, 0, p).unwrap(), seq.g(0, 0, p));
        }
    }

    #[test]
    fn boundary_retention_rejects_interior_queries() {
        let t = unit_table(3, 20, 2, Retention::Boundary);
        assert!(matches!(
            t.value(0, 0, Coefficient::One, 1, 5),
            Err(Error::InteriorNotRetained)
        ));
        let full = unit_table(3, 20, 2, Retention::Full);
        for q in 0..3 {
            for n in 0..=2 {
                assert_eq!(
                    t.value(q, 0, Coefficient::I, n, 20).unwrap(),
                    full.value(q, 0, Coefficient::I, n, 20).unwrap()
                );
            }
        }
    }

    #[test]
    fn csv_dump_has_one_row_per_sample() {
        let t = unit_table(2, 4, 1, Retention::Full);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2 * 2 * 5);
        assert!(text.starts_with("q,m,a,n,p,re,im\n0,0,1,0,0,"));
    }

    #[test]
    fn sepl_asymptotics() {
        let d = unit_disk();
        let field = builtin_field("separable_lorentzian", 0.1, d.as_ref()).unwrap();
        let g = vec![ray(0.4, 1000)];
        let seq = generating_sequence(&LimitingC1 { field }, &g).unwrap();
        let t = build_formal_powers(&seq, &g, 2, &QuadratureConfig::default(), Retention::Full)
            .unwrap();
        let prof = asymptotics_check(&t, 0, 0, 1, Complex64::new(1.0, 0.0), 0.0101).unwrap();
        let (r, ratio) = *prof.last().unwrap();
        assert!((r - 0.01).abs() < 1e-12);
        assert!((ratio - 1.0).norm() < 0.05, "{ratio}");
        assert!(asymptotics_check(&t, 0, 0, 0, Complex64::new(1.0, 0.0), 0.1).is_err());
    }

    #[test]
    fn vekua_residual_of_simple_functions() {
        let one = |_: f64, _: f64| 1.0;
        let r = vekua_residual(
            &|x, y| Complex64::new(x, y).powu(2),
            &one,
            &UnitDisk,
            0.2,
            0.3,
            1e-3,
        )
        .unwrap();
        assert!(r < 1e-10, "{r}");
        let r = vekua_residual(
            &|x, y| Complex64::new(x, -y),
            &one,
            &UnitDisk,
            0.2,
            0.3,
            1e-3,
        )
        .unwrap();
        assert!((r - 2.0).abs() < 1e-10, "{r}");
        assert!(vekua_residual(
            &|x, y| Complex64::new(x, y),
            &one,
            &UnitDisk,
            0.9999,
            0.0,
            1e-3
        )
        .is_err());
    }
}
