//! Star-shaped solution domains, radial integration grids and angle sets.
//!
//! Every domain is described by its boundary radius `ρ(θ)` as seen from the
//! origin, which is also the center of all formal powers. Radial grids run
//! from the origin to the boundary along a fixed angle.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(TAU) - PI;
    if t >= PI {
        t - TAU
    } else {
        t
    }
}

/// Shortest signed distance from `b` to `a` on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// A bounded domain that is star-shaped with respect to the origin.
pub trait StarDomain: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Boundary radius `ρ(θ) > 0`, periodic in `θ` with period `2π`.
    fn radius(&self, theta: f64) -> f64;

    /// Angles in `[-π, π)` where the boundary has a corner, most important
    /// first.
    fn corner_angles(&self) -> Vec<f64> {
        Vec::new()
    }

    fn boundary_point(&self, theta: f64) -> Complex64 {
        Complex64::from_polar(self.radius(theta), theta)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let r = x.hypot(y);
        if r == 0.0 {
            return true;
        }
        r <= self.radius(y.atan2(x)) * (1.0 + 1e-12)
    }

    /// Closed polyline through the boundary, sampled at `n` uniform angles
    /// plus every corner.
    fn boundary_polyline(&self, n: usize) -> Vec<Complex64> {
        let mut thetas: Vec<f64> = (0..n)
            .map(|k| -PI + TAU * k as f64 / n as f64)
            .chain(self.corner_angles())
            .collect();
        thetas.sort_by(|a, b| a.total_cmp(b));
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        thetas.into_iter().map(|t| self.boundary_point(t)).collect()
    }

    /// `(x_min, x_max)` over the closed domain.
    fn x_extent(&self) -> (f64, f64) {
        let pts = self.boundary_polyline(8192);
        pts.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
                (lo.min(z.re), hi.max(z.re))
            })
    }

    /// `(y_min, y_max)` of the intersection of the vertical line `x = x0`
    /// with the domain, or `None` when the line misses it.
    fn vertical_section(&self, x0: f64) -> Option<(f64, f64)> {
        let pts = self.boundary_polyline(8192);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, a) in pts.iter().enumerate() {
            let b = pts[(i + 1) % pts.len()];
            let (xa, xb) = (a.re, b.re);
            if (xa - x0) * (xb - x0) > 0.0 || xa == xb {
                if xa == x0 {
                    lo = lo.min(a.im);
                    hi = hi.max(a.im);
                }
                continue;
            }
            let t = (x0 - xa) / (xb - xa);
            let y = a.im + t * (b.im - a.im);
            lo = lo.min(y);
            hi = hi.max(y);
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// The unit disk.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitDisk;

impl StarDomain for UnitDisk {
    fn name(&self) -> &str {
        "unit_disk"
    }

    fn radius(&self, _theta: f64) -> f64 {
        1.0
    }

    fn x_extent(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn vertical_section(&self, x0: f64) -> Option<(f64, f64)> {
        (x0.abs() <= 1.0).then(|| {
            let h = (1.0 - x0 * x0).sqrt();
            (-h, h)
        })
    }
}

pub fn unit_disk() -> Arc<dyn StarDomain> {
    Arc::new(UnitDisk)
}

/// Unit circle capped on the right by two segments meeting at `(1.5, 0)`.
///
/// The upper segment joins `(cos π/10, sin π/10)` to the tip, giving
/// `y ≈ -0.5629 x + 0.8443`; the lower one is its mirror image.
#[derive(Debug, Clone, Copy, Default)]
pub struct BeakedDomain;

impl BeakedDomain {
    pub const TIP: f64 = 1.5;
    pub const HALF_OPENING: f64 = PI / 10.0;

    /// Magnitude of the segment slopes.
    pub fn slope() -> f64 {
        let (s, c) = Self::HALF_OPENING.sin_cos();
        s / (Self::TIP - c)
    }

    pub fn intercept() -> f64 {
        Self::TIP * Self::slope()
    }
}

impl StarDomain for BeakedDomain {
    fn name(&self) -> &str {
        "beaked"
    }

    fn radius(&self, theta: f64) -> f64 {
        let a = wrap_angle(theta).abs();
        if a < Self::HALF_OPENING {
            Self::intercept() / (a.sin() + Self::slope() * a.cos())
        } else {
            1.0
        }
    }

    fn corner_angles(&self) -> Vec<f64> {
        vec![0.0, -Self::HALF_OPENING, Self::HALF_OPENING]
    }
}

pub fn beaked_domain() -> Arc<dyn StarDomain> {
    Arc::new(BeakedDomain)
}

/// A star domain given by `(θ, ρ)` knots with periodic linear interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnotDomain {
    #[serde(default = "KnotDomain::default_name")]
    pub name: String,
    /// `(θ, ρ)` pairs; angles are wrapped into `[-π, π)` and sorted on load.
    pub knots: Vec<(f64, f64)>,
    #[serde(default)]
    pub corners: Vec<f64>,
}

impl KnotDomain {
    fn default_name() -> String {
        "custom".to_string()
    }

    pub fn new(name: impl Into<String>, knots: Vec<(f64, f64)>, corners: Vec<f64>) -> Result<Self> {
        let mut knots: Vec<(f64, f64)> =
            knots.into_iter().map(|(t, r)| (wrap_angle(t), r)).collect();
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.len() < 3 {
            return Err(Error::invalid("knots", "at least three knots are required"));
        }
        if let Some(k) = knots.iter().find(|k| !(k.1 > 0.0) || !k.1.is_finite()) {
            return Err(Error::invalid(
                "knots",
                format!("radius {} at angle {} is not positive", k.1, k.0),
            ));
        }
        if knots.windows(2).any(|w| w[1].0 - w[0].0 <= 0.0) {
            return Err(Error::invalid("knots", "duplicate knot angles"));
        }
        let corners = corners.into_iter().map(wrap_angle).collect();
        Ok(Self {
            name: name.into(),
            knots,
            corners,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: KnotDomain = serde_json::from_str(s)?;
        Self::new(raw.name, raw.knots, raw.corners)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl StarDomain for KnotDomain {
    fn name(&self) -> &str {
        &self.name
    }

    fn radius(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        let n = self.knots.len();
        // index of the last knot with angle <= t, cyclically
        let idx = self.knots.partition_point(|k| k.0 <= t);
        let (a, b) = if idx == 0 || idx == n {
            let last = self.knots[n - 1];
            let first = self.knots[0];
            (last, (first.0 + TAU, first.1))
        } else {
            (self.knots[idx - 1], self.knots[idx])
        };
        let tt = if t < a.0 { t + TAU } else { t };
        let s = (tt - a.0) / (b.0 - a.0);
        a.1 + s * (b.1 - a.1)
    }

    fn corner_angles(&self) -> Vec<f64> {
        self.corners.clone()
    }
}

pub const DOMAIN_NAMES: &[&str] = &["unit_disk", "beaked"];

/// Looks up a built-in domain by name.
pub fn domain_by_name(name: &str) -> Result<Arc<dyn StarDomain>> {
    match name {
        "unit_disk" | "disk" => Ok(unit_disk()),
        "beaked" => Ok(beaked_domain()),
        other => Err(Error::UnknownName {
            kind: "domain",
            name: other.to_string(),
            available: DOMAIN_NAMES.join(", "),
        }),
    }
}

/// Samples along one ray from the origin to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub theta: f64,
    pub radii: Vec<f64>,
    pub points: Vec<Complex64>,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn boundary_point(&self) -> Complex64 {
        *self.points.last().expect("radial grid is never empty")
    }
}

/// Builds `P + 1` equidistant samples on the ray at angle `theta`, replacing
/// the nearest interior sample by each pinned radius.
pub fn build_radial_grid(
    domain: &dyn StarDomain,
    theta: f64,
    intervals: usize,
    pinned_radii: &[f64],
) -> Result<RadialGrid> {
    if intervals < 2 {
        return Err(Error::invalid(
            "P",
            format!("need at least 2 intervals per radius, got {intervals}"),
        ));
    }
    let rho = domain.radius(theta);
    let mut radii: Vec<f64> = (0..=intervals)
        .map(|p| p as f64 * rho / intervals as f64)
        .collect();
    let mut used = vec![false; intervals + 1];
    for &pin in pinned_radii {
        if !(pin > 0.0 && pin < rho) {
            return Err(Error::InvalidPin {
                value: pin,
                reason: format!("radius must lie in (0, {rho})"),
            });
        }
        let k = ((pin / rho * intervals as f64).round() as usize).clamp(1, intervals - 1);
        if used[k] {
            return Err(Error::InvalidPin {
                value: pin,
                reason: format!("collides with another pinned radius at sample {k}"),
            });
        }
        used[k] = true;
        radii[k] = pin;
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidPin {
            value: pinned_radii.first().copied().unwrap_or(f64::NAN),
            reason: "pinned radii break monotonicity".into(),
        });
    }
    let (s, c) = theta.sin_cos();
    let points = radii
        .iter()
        .map(|&r| Complex64::new(r * c, r * s))
        .collect();
    Ok(RadialGrid {
        theta,
        radii,
        points,
    })
}

/// `Q` angles, uniform except where pinned values replaced their nearest
/// uniform sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub angles: Vec<f64>,
    /// Indices into `angles` that hold pinned values.
    pub pinned: Vec<usize>,
}

impl AngleSet {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn step(&self) -> f64 {
        TAU / self.angles.len() as f64
    }

    /// The angle at index `q` shifted by a multiple of `2π` so that the
    /// sequence is increasing on `[-step/2, 2π - step/2)`.
    pub fn unwrapped(&self, q: usize) -> f64 {
        let nominal = q as f64 * self.step();
        nominal + angle_distance(self.angles[q], nominal)
    }

    pub fn is_pinned(&self, q: usize) -> bool {
        self.pinned.contains(&q)
    }
}

pub fn build_angle_set(count: usize, pinned: &[f64]) -> Result<AngleSet> {
    if count < 3 {
        return Err(Error::invalid(
            "Q",
            format!("need at least 3 angles, got {count}"),
        ));
    }
    let step = TAU / count as f64;
    for (i, &a) in pinned.iter().enumerate() {
        for &b in &pinned[i + 1..] {
            if angle_distance(a, b).abs() < 0.5 * step {
                return Err(Error::InvalidPin {
                    value: b,
                    reason: format!(
                        "closer than half a step ({:.3e}) to pinned angle {a}",
                        0.5 * step
                    ),
                });
            }
        }
    }
    let mut angles: Vec<f64> = (0..count).map(|q| q as f64 * step).collect();
    let mut pinned_idx = Vec::with_capacity(pinned.len());
    for &a in pinned {
        let q = ((a.rem_euclid(TAU) / step).round() as usize) % count;
        if pinned_idx.contains(&q) {
            return Err(Error::InvalidPin {
                value: a,
                reason: format!("collides with another pinned angle at index {q}"),
            });
        }
        pinned_idx.push(q);
        angles[q] = a;
    }
    pinned_idx.sort_unstable();
    let set = AngleSet {
        angles,
        pinned: pinned_idx,
    };
    let increasing = (1..count).all(|q| set.unwrapped(q) > set.unwrapped(q - 1))
        && set.unwrapped(count - 1) < set.unwrapped(0) + TAU;
    if !increasing {
        return Err(Error::InvalidPin {
            value: pinned.first().copied().unwrap_or(f64::NAN),
            reason: "pinned angles break the angular ordering".into(),
        });
    }
    Ok(set)
}

/// Chord-length trapezoid weights for the `dl` measure on the closed boundary.
pub fn arc_length_weights(domain: &dyn StarDomain, angles: &AngleSet) -> Vec<f64> {
    let pts: Vec<Complex64> = angles
        .angles
        .iter()
        .map(|&t| domain.boundary_point(t))
        .collect();
    let n = pts.len();
    let chords: Vec<f64> = (0..n).map(|q| (pts[(q + 1) % n] - pts[q]).norm()).collect();
    (0..n)
        .map(|q| 0.5 * (chords[(q + n - 1) % n] + chords[q]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_disk_radius_is_one() {
        let d = UnitDisk;
        assert_eq!(d.radius(0.0), 1.0);
        assert_eq!(d.radius(PI / 2.0), 1.0);
        assert!(d.corner_angles().is_empty());
    }

    #[test]
    fn beaked_vertex_and_continuity() {
        let d = BeakedDomain;
        assert_abs_diff_eq!(d.radius(0.0), 1.5, epsilon = 1e-14);
        assert_eq!(d.radius(PI / 2.0), 1.0);
        assert_abs_diff_eq!(BeakedDomain::slope(), 0.5629, epsilon = 5e-5);
        assert_abs_diff_eq!(BeakedDomain::intercept(), 0.8443, epsilon = 1e-4);
        let at_corner = BeakedDomain::intercept()
            / ((PI / 10.0).sin() + BeakedDomain::slope() * (PI / 10.0).cos());
        assert_abs_diff_eq!(at_corner, 1.0, epsilon = 1e-14);
        let eps = 1e-9;
        assert_abs_diff_eq!(
            d.radius(PI / 10.0 - eps),
            d.radius(PI / 10.0 + eps),
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            d.radius(-PI / 10.0 + eps),
            d.radius(-PI / 10.0 - eps),
            epsilon = 1e-8
        );
        assert_eq!(d.radius(-0.1), d.radius(0.1));
        assert_eq!(d.corner_angles(), vec![0.0, -PI / 10.0, PI / 10.0]);
    }

    #[test]
    fn beaked_lower_segment_is_mirror() {
        // lower boundary point lies on y = 0.5629 x - 0.8443
        let d = BeakedDomain;
        let z = d.boundary_point(-0.2);
        assert_abs_diff_eq!(
            z.im,
            BeakedDomain::slope() * z.re - BeakedDomain::intercept(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn radial_grid_equidistant() {
        let g = build_radial_grid(&UnitDisk, 0.0, 4, &[]).unwrap();
        assert_eq!(g.radii, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.points[2], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn radial_grid_pins_nearest_sample() {
        let g = build_radial_grid(&UnitDisk, PI / 4.0, 4, &[0.4596]).unwrap();
        assert_eq!(g.radii, vec![0.0, 0.25, 0.4596, 0.75, 1.0]);
        for (r, z) in g.radii.iter().zip(&g.points) {
            assert_abs_diff_eq!(z.norm(), *r, epsilon = 1e-15);
        }
    }

    #[test]
    fn radial_grid_on_beak() {
        let g = build_radial_grid(&BeakedDomain, 0.0, 2, &[]).unwrap();
        assert_abs_diff_eq!(g.radii[1], 0.75, epsilon = 1e-3);
        assert_abs_diff_eq!(g.radii[2], 1.5, epsilon = 1e-3);
    }

    #[test]
    fn radial_grid_rejects_bad_pins() {
        assert!(build_radial_grid(&UnitDisk, 0.0, 4, &[1.0]).is_err());
        assert!(build_radial_grid(&UnitDisk, 0.0, 4, &[0.0]).is_err());
        assert!(build_radial_grid(&UnitDisk, 0.0, 4, &[0.49, 0.51]).is_err());
        assert!(build_radial_grid(&UnitDisk, 0.0, 1, &[]).is_err());
    }

    #[test]
    fn angle_set_uniform() {
        let s = build_angle_set(4, &[]).unwrap();
        assert_eq!(s.angles, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let s = build_angle_set(100, &[]).unwrap();
        for (q, a) in s.angles.iter().enumerate() {
            assert_abs_diff_eq!(*a, q as f64 * PI / 50.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn angle_set_corner_pins() {
        let pins = [0.0, PI / 10.0, -PI / 10.0];
        let s = build_angle_set(91, &pins).unwrap();
        assert_eq!(s.len(), 91);
        for p in pins {
            assert!(s.angles.iter().any(|a| *a == p));
        }
        assert_eq!(s.pinned.len(), 3);
        for q in 1..91 {
            assert!(s.unwrapped(q) > s.unwrapped(q - 1));
        }
    }

    #[test]
    fn angle_set_rejects_close_pins() {
        let step = TAU / 10.0;
        assert!(build_angle_set(10, &[0.0, 0.4 * step]).is_err());
        assert!(build_angle_set(2, &[]).is_err());
    }

    #[test]
    fn weights_on_circle() {
        let s = build_angle_set(4, &[]).unwrap();
        let w = arc_length_weights(&UnitDisk, &s);
        for wq in &w {
            assert!((wq - TAU / 4.0).abs() / (TAU / 4.0) < 0.11);
        }
        // chord/arc ratio for a quarter circle is 2√2/π·... within 10%: √2 vs π/2
        let mut prev = f64::INFINITY;
        for q in [16usize, 32, 64, 128] {
            let s = build_angle_set(q, &[]).unwrap();
            let err = (TAU - arc_length_weights(&UnitDisk, &s).iter().sum::<f64>()).abs();
            assert!(err < prev / 3.5, "Q={q}: {err} vs {prev}");
            prev = err;
        }
    }

    #[test]
    fn beaked_perimeter_matches_fine_polyline() {
        // independent oracle: 10^6 uniform-parameter polyline
        let d = BeakedDomain;
        let n = 1_000_000;
        let mut perimeter = 0.0;
        let mut prev = d.boundary_point(-PI);
        for k in 1..=n {
            let z = d.boundary_point(-PI + TAU * k as f64 / n as f64);
            perimeter += (z - prev).norm();
            prev = z;
        }
        let s = build_angle_set(1000, &d.corner_angles()).unwrap();
        let total: f64 = arc_length_weights(&d, &s).iter().sum();
        assert_abs_diff_eq!(total, perimeter, epsilon = 1e-4);
    }

    #[test]
    fn knot_domain_interpolates() {
        let d = KnotDomain::from_json_str(
            r#"{"name":"square-ish","knots":[[0.0,1.0],[1.5707963267948966,2.0],[3.141592653589793,1.0],[-1.5707963267948966,2.0]]}"#,
        )
        .unwrap();
        assert_abs_diff_eq!(d.radius(PI / 4.0), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.radius(-PI / 4.0), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.radius(3.0 * PI / 4.0), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.radius(PI), 1.0, epsilon = 1e-12);
        assert!(KnotDomain::new("bad", vec![(0.0, 1.0), (1.0, -1.0), (2.0, 1.0)], vec![]).is_err());
    }

    #[test]
    fn sections_of_the_disk() {
        let (lo, hi) = UnitDisk.vertical_section(0.6).unwrap();
        assert_abs_diff_eq!(hi, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(lo, -0.8, epsilon = 1e-12);
        let (lo, hi) = BeakedDomain.vertical_section(1.2).unwrap();
        assert_abs_diff_eq!(
            hi,
            -BeakedDomain::slope() * 1.2 + BeakedDomain::intercept(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(lo, -hi, epsilon = 1e-6);
        let (x0, x1) = BeakedDomain.x_extent();
        assert_abs_diff_eq!(x0, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x1, 1.5, epsilon = 1e-3);
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(domain_by_name("beaked").unwrap().name(), "beaked");
        assert!(matches!(
            domain_by_name("hexagon"),
            Err(Error::UnknownName { .. })
        ));
    }
}
