//! End-to-end experiment runner: configuration, single solves, table
//! reproductions, the beaked-domain suite and the oracle summary.

mod oracles;
mod tables;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    boundary_traces, collocation_fit, orthonormalize, write_residual_csv, BoundaryBasis,
    CollocationFit, CONDITION_LIMIT,
};
use crate::conductivity::{
    case_by_name, case_registry, generating_sequence, sequence_registry,
    validate_boundary_condition, validate_positive, Case, SequenceContext, SequenceMode,
    StripParams,
};
use crate::error::{Error, Result};
use crate::formal_powers::{
    build_formal_powers, FormalPowerTable, QuadratureConfig, Retention, SeedRule,
};
use crate::geometry::{
    angle_distance, arc_length_weights, build_angle_set, build_radial_grid, domain_by_name,
    AngleSet, RadialGrid, StarDomain,
};

pub use oracles::{
    pair_positivity_error, run_oracles, run_oracles_with, sigma_one_errors,
    strip_interpolation_error, vekua_refinement, LinearCombination, OracleCheck, OracleOptions,
    OracleSummary, SigmaOneErrors,
};
pub use tables::{
    run_beaked_suite, run_table, table_spec, write_table_csv, BeakedResult, BeakedSpec,
    PublishedRow, TableSpec, BEAKED_SUITE, TABLE_IDS,
};

pub const MAX_DEGREE: usize = 64;
pub const MAX_SAMPLES: usize = 100_000;

fn default_delta() -> f64 {
    1.0
}

fn default_offsets() -> Vec<f64> {
    StripParams::default().offsets
}

/// Everything needed to reproduce one solve. Field names follow the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// `α` of the boundary condition when it differs from the field's.
    #[serde(default)]
    pub bc_alpha: Option<f64>,
    /// Overrides the case's own domain.
    #[serde(default)]
    pub domain: Option<String>,
    /// Highest formal power degree; the basis has `2N + 1` functions.
    #[serde(rename = "N")]
    pub degree: usize,
    /// Intervals per radius.
    #[serde(rename = "P")]
    pub points: usize,
    /// Number of radii, equal to the number of trace angles.
    #[serde(rename = "Q")]
    pub radii: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: SeedRule,
    #[serde(default)]
    pub mode: SequenceMode,
    #[serde(rename = "K", default = "default_strips")]
    pub strips: usize,
    #[serde(rename = "J", default = "default_strips")]
    pub strip_samples: usize,
    #[serde(rename = "A", default = "default_offsets")]
    pub strip_offsets: Vec<f64>,
    /// Trace angles forced into the angle set. When absent, every domain
    /// corner that fits the angle set is pinned.
    #[serde(default)]
    pub trace_pins: Option<Vec<f64>>,
    /// Collocation angles forced into the `2N + 1` set, chosen like
    /// `trace_pins` when absent.
    #[serde(default)]
    pub collocation_pins: Option<Vec<f64>>,
    /// Extra radii per ray; the field's feature radii are always added.
    #[serde(default)]
    pub radial_pins: Vec<f64>,
    #[serde(default = "default_condition_limit")]
    pub condition_limit: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_strips() -> usize {
    StripParams::default().strips
}

fn default_condition_limit() -> f64 {
    CONDITION_LIMIT
}

impl ExperimentConfig {
    pub fn new(case: impl Into<String>, degree: usize, points: usize, radii: usize) -> Self {
        Self {
            case: case.into(),
            alpha: None,
            bc_alpha: None,
            domain: None,
            degree,
            points,
            radii,
            delta: default_delta(),
            seed: SeedRule::default(),
            mode: SequenceMode::default(),
            strips: default_strips(),
            strip_samples: default_strips(),
            strip_offsets: default_offsets(),
            trace_pins: None,
            collocation_pins: None,
            radial_pins: Vec::new(),
            condition_limit: CONDITION_LIMIT,
            out: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_json_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn basis_size(&self) -> usize {
        2 * self.degree + 1
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            delta: self.delta,
            seed: self.seed,
            ..QuadratureConfig::default()
        }
    }

    pub fn strip_params(&self) -> StripParams {
        StripParams {
            strips: self.strips,
            samples: self.strip_samples,
            offsets: self.strip_offsets.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return Err(Error::invalid(
                "N",
                format!("{} is outside 1..={MAX_DEGREE}", self.degree),
            ));
        }
        if !(2..=MAX_SAMPLES).contains(&self.points) {
            return Err(Error::invalid(
                "P",
                format!("{} is outside 2..={MAX_SAMPLES}", self.points),
            ));
        }
        if !(3..=MAX_SAMPLES).contains(&self.radii) {
            return Err(Error::invalid(
                "Q",
                format!("{} is outside 3..={MAX_SAMPLES}", self.radii),
            ));
        }
        if self.basis_size() > self.radii {
            return Err(Error::invalid(
                "Q",
                format!(
                    "{} trace angles cannot carry {} basis functions",
                    self.radii,
                    self.basis_size()
                ),
            ));
        }
        if !(self.condition_limit > 1.0) {
            return Err(Error::invalid("condition_limit", "must exceed 1"));
        }
        self.quadrature().validate()
    }

    fn label(&self) -> String {
        format!(
            "case {} (N={}, P={}, Q={})",
            self.case, self.degree, self.points, self.radii
        )
    }
}

/// Deterministic summary of one solve; wall time is kept out so that equal
/// configurations serialize identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: ExperimentConfig,
    pub case: String,
    pub field: String,
    pub boundary_condition: String,
    pub domain: String,
    pub mode: String,
    pub period: usize,
    pub basis_size: usize,
    pub trace_angle_count: usize,
    pub total_error: f64,
    pub condition_estimate: f64,
    pub collocation_residual: f64,
    pub fit: CollocationFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: Option<usize>,
    pub case: String,
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(rename = "P")]
    pub points: usize,
    #[serde(rename = "Q")]
    pub radii: usize,
    /// NaN when the run failed.
    #[serde(rename = "E")]
    pub total_error: f64,
    pub published_error: Option<f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

impl TableRow {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub report: SolveReport,
    pub row: TableRow,
}

/// Intermediate products of a solve, kept for callers that need more than
/// the report.
#[derive(Debug)]
pub struct Solution {
    pub case: Case,
    pub grids: Vec<RadialGrid>,
    pub table: FormalPowerTable,
    pub basis: BoundaryBasis,
    pub collocation: AngleSet,
    pub fit: CollocationFit,
}

fn resolve_case(config: &ExperimentConfig) -> Result<Case> {
    let Some(name) = &config.domain else {
        return case_by_name(&config.case, config.alpha, config.bc_alpha);
    };
    let mut case = case_registry().instantiate(&config.case, config.alpha, config.bc_alpha)?;
    case.domain = domain_by_name(name)?;
    validate_positive(case.field.as_ref(), case.domain.as_ref())?;
    validate_boundary_condition(case.boundary_condition.as_ref(), case.domain.as_ref())?;
    Ok(case)
}

fn radial_grids(
    domain: &dyn StarDomain,
    case: &Case,
    angles: &[f64],
    intervals: usize,
    extra: &[f64],
) -> Result<Vec<RadialGrid>> {
    angles
        .par_iter()
        .map(|&theta| {
            let rho = domain.radius(theta);
            let mut pins: Vec<f64> = case
                .field
                .feature_radii(theta)
                .into_iter()
                .chain(extra.iter().copied())
                .filter(|&r| r > 0.0 && r < rho)
                .collect();
            pins.sort_by(f64::total_cmp);
            pins.dedup();
            build_radial_grid(domain, theta, intervals, &pins)
        })
        .collect()
}

/// The longest prefix-greedy selection of `candidates` that
/// [`build_angle_set`] accepts for `count` angles.
pub fn admissible_pins(count: usize, candidates: &[f64]) -> Vec<f64> {
    let mut kept: Vec<f64> = Vec::new();
    for &c in candidates {
        kept.push(c);
        if build_angle_set(count, &kept).is_err() {
            kept.pop();
        }
    }
    kept
}

/// Runs the full pipeline and keeps the intermediate products.
pub fn solve(config: &ExperimentConfig) -> Result<Solution> {
    solve_inner(config).map_err(|e| e.context(config.label()))
}

fn solve_inner(config: &ExperimentConfig) -> Result<Solution> {
    config.validate()?;
    let case = resolve_case(config)?;
    let domain = case.domain.clone();
    let corners = domain.corner_angles();
    let trace_pins = config
        .trace_pins
        .clone()
        .unwrap_or_else(|| admissible_pins(config.radii, &corners));
    let angles = build_angle_set(config.radii, &trace_pins)?;
    let grids = radial_grids(
        domain.as_ref(),
        &case,
        &angles.angles,
        config.points,
        &config.radial_pins,
    )?;

    let ctx = SequenceContext {
        field: case.field.clone(),
        domain: domain.clone(),
        strip: config.strip_params(),
    };
    let strategy = sequence_registry().build(config.mode, &ctx)?;
    let sequence = generating_sequence(strategy.as_ref(), &grids)?;
    let table = build_formal_powers(
        &sequence,
        &grids,
        config.degree,
        &config.quadrature(),
        Retention::Boundary,
    )?;
    let traces = boundary_traces(&table);
    let weights = arc_length_weights(domain.as_ref(), &angles);
    let breaks: Vec<f64> = corners
        .iter()
        .copied()
        .filter(|&c| {
            angles
                .angles
                .iter()
                .any(|&a| angle_distance(a, c).abs() < 1e-12)
        })
        .collect();
    let basis = orthonormalize(&traces, &angles, &weights, &breaks)?;
    let colloc_pins = config
        .collocation_pins
        .clone()
        .unwrap_or_else(|| admissible_pins(config.basis_size(), &corners));
    let collocation = build_angle_set(config.basis_size(), &colloc_pins)?;
    let fit = collocation_fit(
        &basis,
        case.boundary_condition.as_ref(),
        domain.as_ref(),
        &collocation,
        config.condition_limit,
    )?;
    Ok(Solution {
        case,
        grids,
        table,
        basis,
        collocation,
        fit,
    })
}

/// Runs one configuration, writing `report.json` and `residual.csv` when
/// `config.out` is set.
pub fn run_case(config: &ExperimentConfig) -> Result<CaseRun> {
    let start = Instant::now();
    let solution = solve(config)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let Solution {
        case, table, fit, ..
    } = solution;
    let report = SolveReport {
        config: config.clone(),
        case: case.name.clone(),
        field: case.field.name().to_string(),
        boundary_condition: case.boundary_condition.name().to_string(),
        domain: case.domain.name().to_string(),
        mode: config.mode.name().to_string(),
        period: table.period,
        basis_size: fit.alpha.len(),
        trace_angle_count: fit.residual.len(),
        total_error: fit.total_error,
        condition_estimate: fit.condition_estimate,
        collocation_residual: fit.collocation_residual,
        fit,
    };
    if let Some(dir) = &config.out {
        write_outputs(&report, dir).map_err(|e| e.context(config.label()))?;
    }
    let row = TableRow {
        table: None,
        case: case.name,
        degree: config.degree,
        points: config.points,
        radii: config.radii,
        total_error: report.total_error,
        published_error: None,
        runtime_s,
        error: None,
    };
    Ok(CaseRun { report, row })
}

pub fn write_outputs(report: &SolveReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut json, report)?;
    writeln!(json)?;
    json.flush()?;
    let mut csv = BufWriter::new(File::create(dir.join("residual.csv"))?);
    write_residual_csv(&report.fit.residual, &mut csv)?;
    csv.flush()?;
    Ok(())
}

/// Recomputes `E` from a residual CSV written by [`write_outputs`].
pub fn total_error_from_csv(text: &str) -> Result<f64> {
    let mut sum = 0.0;
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 columns", i + 1)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
        };
        let r = parse(cols[3])?;
        let w = parse(cols[4])?;
        sum += w * r * r;
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let mut c = ExperimentConfig::new("exponential", 5, 50, 50).with_alpha(1.0);
        c.mode = SequenceMode::StripC2;
        c.strip_offsets = vec![60.0];
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"N\":5"));
        assert!(s.contains("\"K\":1000"));
        assert_eq!(ExperimentConfig::from_json_str(&s).unwrap(), c);
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let c = ExperimentConfig::from_json_str(r#"{"case":"polynomial","N":5,"P":15,"Q":15}"#)
            .unwrap();
        assert_eq!(c.delta, 1.0);
        assert_eq!(c.mode, SequenceMode::LimitingC1);
        assert_eq!(c.condition_limit, CONDITION_LIMIT);
        assert!(
            ExperimentConfig::from_json_str(r#"{"case":"x","N":5,"P":15,"Q":15,"bogus":1}"#)
                .is_err()
        );
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        for c in [
            ExperimentConfig::new("exponential", 0, 50, 50),
            ExperimentConfig::new("exponential", 65, 50, 200),
            ExperimentConfig::new("exponential", 5, 1, 50),
            ExperimentConfig::new("exponential", 5, 50, 100_001),
            ExperimentConfig::new("exponential", 30, 50, 50),
        ] {
            assert!(
                matches!(c.validate(), Err(Error::InvalidParameter { .. })),
                "{c:?}"
            );
        }
    }

    #[test]
    fn polynomial_small_run() {
        let run = run_case(&ExperimentConfig::new("polynomial", 5, 15, 15)).unwrap();
        assert_eq!(run.report.basis_size, 11);
        assert_eq!(run.report.trace_angle_count, 15);
        assert!(run.row.total_error <= 1e-3, "{}", run.row.total_error);
        assert!(run.report.collocation_residual <= 1e-9);
    }

    #[test]
    fn errors_carry_case_context() {
        let err = run_case(&ExperimentConfig::new("no_such_case", 5, 15, 15)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("no_such_case") && msg.contains("N=5"), "{msg}");
    }

    #[test]
    fn writes_reproducible_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::new("exponential", 4, 40, 40);
        c.out = Some(dir.path().to_path_buf());
        let run = run_case(&c).unwrap();
        let csv = fs::read_to_string(dir.path().join("residual.csv")).unwrap();
        let e = total_error_from_csv(&csv).unwrap();
        assert!((e - run.report.total_error).abs() <= 1e-12);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["basis_size"], 9);
    }

    #[test]
    fn default_pins_drop_corners_that_do_not_fit() {
        let corners = crate::geometry::BeakedDomain.corner_angles();
        assert_eq!(admissible_pins(100, &corners), corners);
        assert_eq!(admissible_pins(5, &corners), vec![0.0]);
        assert!(run_case(&ExperimentConfig::new("beaked_square", 2, 30, 30)).is_ok());
    }

    #[test]
    fn domain_override_validates_case() {
        let mut c = ExperimentConfig::new("separable_lorentzian", 10, 60, 60);
        c.domain = Some("beaked".into());
        let run = run_case(&c).unwrap();
        assert_eq!(run.report.domain, "beaked");
        assert!(run.report.total_error.is_finite());
    }
}
