use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strip::{build_strip_interpolation, StripInterpolation, StripParams};
use super::ConductivityField;
use crate::error::{Error, Result};
use crate::geometry::{RadialGrid, StarDomain};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A Bers generating sequence made of pairs `(p_m, i/p_m)` with `p_m > 0`.
pub trait SequenceStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Period `c` of the sequence, 1 or 2.
    fn period(&self) -> usize;

    /// Amplitude `p_m` at `(x, y)`, `m < period`.
    fn amplitude(&self, m: usize, x: f64, y: f64) -> f64;

    fn amplitude_polar(&self, m: usize, r: f64, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.amplitude(m, r * c, r * s)
    }
}

/// `p_0 = p_1 = √σ`.
#[derive(Debug, Clone)]
pub struct LimitingC1 {
    pub field: Arc<dyn ConductivityField>,
}

impl SequenceStrategy for LimitingC1 {
    fn name(&self) -> &str {
        "limiting_c1"
    }

    fn period(&self) -> usize {
        1
    }

    fn amplitude(&self, _m: usize, x: f64, y: f64) -> f64 {
        self.field.sigma(x, y).sqrt()
    }

    fn amplitude_polar(&self, _m: usize, r: f64, theta: f64) -> f64 {
        self.field.sigma_polar(r, theta).sqrt()
    }
}

/// `p_0 = √σ`, `p_1 = 1/√σ`.
#[derive(Debug, Clone)]
pub struct YStripC2 {
    pub field: Arc<dyn ConductivityField>,
}

impl SequenceStrategy for YStripC2 {
    fn name(&self) -> &str {
        "ystrip_c2"
    }

    fn period(&self) -> usize {
        2
    }

    fn amplitude(&self, m: usize, x: f64, y: f64) -> f64 {
        let s = self.field.sigma(x, y).sqrt();
        if m == 0 {
            s
        } else {
            1.0 / s
        }
    }

    fn amplitude_polar(&self, m: usize, r: f64, theta: f64) -> f64 {
        let s = self.field.sigma_polar(r, theta).sqrt();
        if m == 0 {
            s
        } else {
            1.0 / s
        }
    }
}

/// `p_0 = √((χ_k + A_k)/(x + A_k) · f_k(y))`, `p_1 = √σ_pw`.
#[derive(Debug, Clone)]
pub struct StripC2 {
    pub strips: Arc<StripInterpolation>,
}

impl SequenceStrategy for StripC2 {
    fn name(&self) -> &str {
        "strip_c2"
    }

    fn period(&self) -> usize {
        2
    }

    fn amplitude(&self, m: usize, x: f64, y: f64) -> f64 {
        let (lin, f) = self.strips.branch(x, y);
        if m == 0 {
            (f / lin).sqrt()
        } else {
            (f * lin).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SequenceMode {
    #[default]
    #[serde(rename = "limiting_c1", alias = "c1")]
    LimitingC1,
    #[serde(rename = "strip_c2", alias = "strip")]
    StripC2,
    #[serde(rename = "ystrip_c2", alias = "ystrip")]
    YStripC2,
}

impl SequenceMode {
    pub fn name(self) -> &'static str {
        match self {
            SequenceMode::LimitingC1 => "limiting_c1",
            SequenceMode::StripC2 => "strip_c2",
            SequenceMode::YStripC2 => "ystrip_c2",
        }
    }
}

impl fmt::Display for SequenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entry = sequence_registry().get(s)?;
        Ok(entry.mode)
    }
}

/// Inputs available to a sequence builder.
#[derive(Debug, Clone)]
pub struct SequenceContext {
    pub field: Arc<dyn ConductivityField>,
    pub domain: Arc<dyn StarDomain>,
    pub strip: StripParams,
}

#[derive(Clone, Copy)]
pub struct SequenceEntry {
    pub mode: SequenceMode,
    pub aliases: &'static [&'static str],
    pub build: fn(&SequenceContext) -> Result<Arc<dyn SequenceStrategy>>,
}

impl fmt::Debug for SequenceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SequenceEntry")
            .field("mode", &self.mode)
            .finish()
    }
}

#[derive(Debug, Default)]
pub struct SequenceRegistry {
    entries: BTreeMap<&'static str, SequenceEntry>,
}

impl SequenceRegistry {
    pub fn register(&mut self, entry: SequenceEntry) {
        self.entries.insert(entry.mode.name(), entry);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&SequenceEntry> {
        self.entries
            .values()
            .find(|e| e.mode.name() == name || e.aliases.contains(&name))
            .ok_or_else(|| Error::UnknownName {
                kind: "sequence mode",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn build(
        &self,
        mode: SequenceMode,
        ctx: &SequenceContext,
    ) -> Result<Arc<dyn SequenceStrategy>> {
        (self.get(mode.name())?.build)(ctx)
    }
}

fn default_sequences() -> SequenceRegistry {
    let mut reg = SequenceRegistry::default();
    reg.register(SequenceEntry {
        mode: SequenceMode::LimitingC1,
        aliases: &["c1", "limiting"],
        build: |ctx| {
            Ok(Arc::new(LimitingC1 {
                field: ctx.field.clone(),
            }))
        },
    });
    reg.register(SequenceEntry {
        mode: SequenceMode::YStripC2,
        aliases: &["ystrip"],
        build: |ctx| {
            Ok(Arc::new(YStripC2 {
                field: ctx.field.clone(),
            }))
        },
    });
    reg.register(SequenceEntry {
        mode: SequenceMode::StripC2,
        aliases: &["strip"],
        build: |ctx| {
            let strips =
                build_strip_interpolation(ctx.field.as_ref(), ctx.domain.as_ref(), &ctx.strip)?;
            Ok(Arc::new(StripC2 {
                strips: Arc::new(strips),
            }))
        },
    });
    reg
}

pub fn sequence_registry() -> &'static SequenceRegistry {
    static REG: OnceLock<SequenceRegistry> = OnceLock::new();
    REG.get_or_init(default_sequences)
}

/// Amplitudes of every pair sampled on a set of radial grids.
#[derive(Debug, Clone)]
pub struct GeneratingSequence {
    pub mode: String,
    pub period: usize,
    /// `amplitudes[m][q][p]`; a single family when the period is 1.
    amplitudes: Vec<Vec<Vec<f64>>>,
}

impl GeneratingSequence {
    fn family(&self, m: usize) -> &[Vec<f64>] {
        &self.amplitudes[m % self.amplitudes.len()]
    }

    pub fn radii_count(&self) -> usize {
        self.amplitudes[0].len()
    }

    pub fn amplitude(&self, m: usize, q: usize, p: usize) -> f64 {
        self.family(m)[q][p]
    }

    pub fn amplitudes(&self, m: usize, q: usize) -> &[f64] {
        &self.family(m)[q]
    }

    pub fn f(&self, m: usize, q: usize, p: usize) -> Complex64 {
        Complex64::new(self.amplitude(m, q, p), 0.0)
    }

    pub fn g(&self, m: usize, q: usize, p: usize) -> Complex64 {
        I / self.amplitude(m, q, p)
    }

    pub fn f_adjoint(&self, m: usize, q: usize, p: usize) -> Complex64 {
        -I * self.f(m, q, p)
    }

    pub fn g_adjoint(&self, m: usize, q: usize, p: usize) -> Complex64 {
        -I * self.g(m, q, p)
    }
}

pub fn generating_sequence(
    strategy: &dyn SequenceStrategy,
    grids: &[RadialGrid],
) -> Result<GeneratingSequence> {
    let period = strategy.period();
    if !(1..=2).contains(&period) {
        return Err(Error::invalid("period", format!("{period} is not 1 or 2")));
    }
    let amplitudes = (0..period)
        .map(|m| {
            grids
                .par_iter()
                .map(|grid| {
                    grid.radii
                        .iter()
                        .zip(&grid.points)
                        .map(|(&r, z)| {
                            let p = strategy.amplitude_polar(m, r, grid.theta);
                            if p > 0.0 && p.is_finite() {
                                Ok(p)
                            } else {
                                Err(Error::NonPositiveConductivity {
                                    x: z.re,
                                    y: z.im,
                                    value: p,
                                })
                            }
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratingSequence {
        mode: strategy.name().to_string(),
        period,
        amplitudes,
    })
}

/// The four characteristic coefficients of a generating pair at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicCoefficients {
    pub a_upper: Complex64,
    pub a_lower: Complex64,
    pub b_upper: Complex64,
    pub b_lower: Complex64,
}

/// Characteristic coefficients of `(F, G)` at `(x, y)` from central
/// differences with step `h`, using `∂z = ∂x − i∂y` and `∂z̄ = ∂x + i∂y`.
pub fn characteristic_coefficients(
    f: &dyn Fn(f64, f64) -> Complex64,
    g: &dyn Fn(f64, f64) -> Complex64,
    x: f64,
    y: f64,
    h: f64,
) -> CharacteristicCoefficients {
    let d = |u: &dyn Fn(f64, f64) -> Complex64| {
        let dx = (u(x + h, y) - u(x - h, y)) / (2.0 * h);
        let dy = (u(x, y + h) - u(x, y - h)) / (2.0 * h);
        (dx - I * dy, dx + I * dy)
    };
    let (fz, fzb) = d(f);
    let (gz, gzb) = d(g);
    let (fv, gv) = (f(x, y), g(x, y));
    let den = fv * gv.conj() - gv * fv.conj();
    CharacteristicCoefficients {
        a_upper: (fv.conj() * gz - gv.conj() * fz) / den,
        a_lower: -(fv.conj() * gzb - gv.conj() * fzb) / den,
        b_upper: (fv * gz - gv * fz) / den,
        b_lower: -(gv * fzb - fv * gzb) / den,
    }
}
