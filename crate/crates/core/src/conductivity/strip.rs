use serde::{Deserialize, Serialize};

use super::{ConductivityField, FieldKind};
use crate::error::{Error, Result};
use crate::geometry::StarDomain;

/// Parameters of the piecewise separable interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripParams {
    /// Number of strips `K`.
    pub strips: usize,
    /// Samples `J` along each midline.
    pub samples: usize,
    /// Offsets `A_(k)`: one value for every strip, or `K` values.
    pub offsets: Vec<f64>,
}

impl Default for StripParams {
    fn default() -> Self {
        Self {
            strips: 1000,
            samples: 1000,
            offsets: vec![60.0],
        }
    }
}

/// Piecewise linear function on equidistant nodes, constant beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProfile {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl LinearProfile {
    pub fn eval(&self, y: f64) -> f64 {
        let n = self.values.len();
        if n == 1 || self.step <= 0.0 {
            return self.values[0];
        }
        let t = (y - self.start) / self.step;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }
}

/// `σ_pw(x, y) = (x + A_k)/(χ_k + A_k) · f_k(y)` on the strip `[x_{k-1}, x_k)`.
#[derive(Debug, Clone)]
pub struct StripInterpolation {
    name: String,
    /// Strip boundaries `x_0 < … < x_K`.
    pub lines: Vec<f64>,
    /// Midline abscissas `χ_k`.
    pub midlines: Vec<f64>,
    pub offsets: Vec<f64>,
    pub profiles: Vec<LinearProfile>,
}

impl StripInterpolation {
    pub fn strips(&self) -> usize {
        self.midlines.len()
    }

    /// Strip index of `x`; strips are half-open on the right except the last,
    /// and points beyond the outer lines belong to the outer strips.
    pub fn strip_of(&self, x: f64) -> usize {
        let k = self.midlines.len();
        let x0 = self.lines[0];
        let w = (self.lines[k] - x0) / k as f64;
        let mut i = ((x - x0) / w).floor();
        if !i.is_finite() || i < 0.0 {
            i = 0.0;
        }
        let mut i = (i as usize).min(k - 1);
        // floor can be off by one next to a line
        if i > 0 && x < self.lines[i] {
            i -= 1;
        } else if i + 1 < k && x >= self.lines[i + 1] {
            i += 1;
        }
        i
    }

    /// `(x + A_k)/(χ_k + A_k)` and `f_k(y)` for the strip containing `x`.
    pub fn branch(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.strip_of(x);
        let a = self.offsets[k];
        ((x + a) / (self.midlines[k] + a), self.profiles[k].eval(y))
    }
}

impl ConductivityField for StripInterpolation {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> FieldKind {
        FieldKind::StripInterpolated
    }

    fn sigma(&self, x: f64, y: f64) -> f64 {
        let (lin, f) = self.branch(x, y);
        lin * f
    }
}

pub fn build_strip_interpolation(
    field: &dyn ConductivityField,
    domain: &dyn StarDomain,
    params: &StripParams,
) -> Result<StripInterpolation> {
    let k = params.strips;
    let j = params.samples;
    if k < 1 {
        return Err(Error::invalid("K", "need at least one strip"));
    }
    if j < 2 {
        return Err(Error::invalid("J", "need at least two samples per midline"));
    }
    let offsets = match params.offsets.len() {
        1 => vec![params.offsets[0]; k],
        n if n == k => params.offsets.clone(),
        n => {
            return Err(Error::invalid(
                "A",
                format!("expected 1 or {k} offsets, got {n}"),
            ))
        }
    };
    let (x0, xk) = domain.x_extent();
    let w = (xk - x0) / k as f64;
    let lines: Vec<f64> = (0..=k)
        .map(|i| if i == k { xk } else { x0 + i as f64 * w })
        .collect();
    let mut midlines = Vec::with_capacity(k);
    let mut profiles = Vec::with_capacity(k);
    for i in 0..k {
        let a = offsets[i];
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(
                "A",
                format!("offset {a} of strip {i} is not positive"),
            ));
        }
        if lines[i] + a <= 0.0 {
            return Err(Error::invalid("A", format!("x + A vanishes on strip {i}")));
        }
        let chi = 0.5 * (lines[i] + lines[i + 1]);
        let (lo, hi) = domain
            .vertical_section(chi)
            .ok_or_else(|| Error::invalid("K", format!("midline x = {chi} misses the domain")))?;
        let step = (hi - lo) / (j - 1) as f64;
        let values = (0..j)
            .map(|s| {
                let y = if s == j - 1 { hi } else { lo + s as f64 * step };
                let v = field.sigma(chi, y);
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonPositiveConductivity {
                        x: chi,
                        y,
                        value: v,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        midlines.push(chi);
        profiles.push(LinearProfile {
            start: lo,
            step,
            values,
        });
    }
    Ok(StripInterpolation {
        name: format!("{}_strips", field.name()),
        lines,
        midlines,
        offsets,
        profiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::{builtin_field, ConstantField};
    use crate::geometry::{unit_disk, BeakedDomain};

    fn params(k: usize, j: usize) -> StripParams {
        StripParams {
            strips: k,
            samples: j,
            offsets: vec![60.0],
        }
    }

    #[test]
    fn constant_field_on_midlines() {
        let s =
            build_strip_interpolation(&ConstantField(7.0), unit_disk().as_ref(), &params(13, 5))
                .unwrap();
        for &chi in &s.midlines {
            for y in [-0.3, 0.0, 0.2] {
                assert_eq!(s.sigma(chi, y), 7.0);
            }
        }
        assert_eq!(s.lines.len(), 14);
        assert_eq!(s.lines[0], -1.0);
        assert_eq!(s.lines[13], 1.0);
    }

    #[test]
    fn strips_are_half_open() {
        let s = build_strip_interpolation(&ConstantField(1.0), unit_disk().as_ref(), &params(4, 3))
            .unwrap();
        assert_eq!(s.strip_of(-1.0), 0);
        assert_eq!(s.strip_of(-0.5), 1);
        assert_eq!(s.strip_of(0.0), 2);
        assert_eq!(s.strip_of(1.0), 3);
        assert_eq!(s.strip_of(7.0), 3);
    }

    #[test]
    fn separable_lorentzian_k1000() {
        let d = unit_disk();
        let f = builtin_field("separable_lorentzian", 0.1, d.as_ref()).unwrap();
        let s = build_strip_interpolation(f.as_ref(), d.as_ref(), &params(1000, 1000)).unwrap();
        let mut worst = 0.0f64;
        for i in 0..101 {
            for j in 0..101 {
                let x = -1.0 + 2.0 * i as f64 / 100.0;
                let y = -1.0 + 2.0 * j as f64 / 100.0;
                if x * x + y * y < 1.0 {
                    let e = (s.sigma(x, y) - f.sigma(x, y)).abs() / f.sigma(x, y);
                    worst = worst.max(e);
                }
            }
        }
        assert!(worst <= 0.02, "{worst}");
    }

    #[test]
    fn reproduces_separable_branches_at_samples() {
        // σ = (x + 60) g(y) is of the strip form with A = 60 on every strip
        #[derive(Debug)]
        struct Sep;
        impl ConductivityField for Sep {
            fn name(&self) -> &str {
                "sep"
            }
            fn kind(&self) -> FieldKind {
                FieldKind::AnalyticClosedForm
            }
            fn sigma(&self, x: f64, y: f64) -> f64 {
                (x + 60.0) * (2.0 + y.sin())
            }
        }
        let s = build_strip_interpolation(&Sep, unit_disk().as_ref(), &params(9, 17)).unwrap();
        for (k, p) in s.profiles.iter().enumerate() {
            for n in 0..p.values.len() {
                let y = p.start + n as f64 * p.step;
                let x = s.lines[k] + 0.3 * (s.lines[k + 1] - s.lines[k]);
                let want = Sep.sigma(x, y);
                assert!((s.sigma(x, y) - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = unit_disk();
        assert!(build_strip_interpolation(&ConstantField(1.0), d.as_ref(), &params(0, 5)).is_err());
        assert!(build_strip_interpolation(&ConstantField(1.0), d.as_ref(), &params(3, 1)).is_err());
        let mut p = params(3, 4);
        p.offsets = vec![0.5];
        assert!(build_strip_interpolation(&ConstantField(1.0), d.as_ref(), &p).is_err());
        p.offsets = vec![60.0, 60.0];
        assert!(build_strip_interpolation(&ConstantField(1.0), d.as_ref(), &p).is_err());
        assert!(matches!(
            build_strip_interpolation(&ConstantField(-1.0), d.as_ref(), &params(3, 4)),
            Err(Error::NonPositiveConductivity { .. })
        ));
    }

    #[test]
    fn works_on_beaked_domain() {
        let s =
            build_strip_interpolation(&ConstantField(2.0), &BeakedDomain, &params(50, 20)).unwrap();
        assert!((s.lines.last().unwrap() - 1.5).abs() < 1e-14);
        assert!(s.sigma(1.4, 0.0) > 0.0);
    }
}
