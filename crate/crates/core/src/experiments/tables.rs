use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::{run_case, ExperimentConfig, SolveReport, TableRow};
use crate::error::{Error, Result};

/// One published row, in column order: degree, radii, points per radius, error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub degree: usize,
    pub radii: usize,
    pub points: usize,
    pub error: f64,
}

const fn row(degree: usize, radii: usize, points: usize, error: f64) -> PublishedRow {
    PublishedRow {
        degree,
        radii,
        points,
        error,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TableSpec {
    pub id: usize,
    pub case: &'static str,
    pub alpha: f64,
    /// Boundary condition parameter when it differs from `alpha`.
    pub bc_alpha: Option<f64>,
    pub rows: &'static [PublishedRow],
}

impl TableSpec {
    pub fn config(&self, r: &PublishedRow) -> ExperimentConfig {
        let mut c =
            ExperimentConfig::new(self.case, r.degree, r.points, r.radii).with_alpha(self.alpha);
        c.bc_alpha = self.bc_alpha;
        c
    }

    pub fn find(
        &self,
        degree: usize,
        radii: usize,
        points: usize,
    ) -> Option<&'static PublishedRow> {
        self.rows
            .iter()
            .find(|r| r.degree == degree && r.radii == radii && r.points == points)
    }
}

/// The common sweep of the analytic tables.
macro_rules! sweep {
    ($($e:expr),* $(,)?) => {{
        const GRID: [(usize, usize, usize); 20] = [
            (30, 1000, 1000), (30, 1000, 800), (30, 1000, 600), (30, 1000, 400), (30, 1000, 200),
            (30, 800, 1000), (30, 600, 1000), (30, 400, 1000), (30, 200, 1000), (20, 1000, 1000),
            (10, 1000, 1000), (30, 500, 500), (20, 500, 500), (10, 500, 500), (30, 100, 100),
            (20, 100, 100), (10, 100, 100), (10, 100, 50), (10, 50, 50), (5, 50, 50),
        ];
        const E: &[f64] = &[$($e),*];
        let mut out = [row(0, 0, 0, 0.0); E.len()];
        let mut i = 0;
        while i < E.len() {
            let (n, q, p) = if i < 20 { GRID[i] } else { (5, 15, 15) };
            out[i] = row(n, q, p, E[i]);
            i += 1;
        }
        out
    }};
}

/// The sweep of the geometric tables.
macro_rules! geometric {
    ($n:literal; $($e:expr),* $(,)?) => {{
        const GRID: [(usize, usize, usize); 15] = [
            ($n, 1000, 1000), ($n, 1000, 800), ($n, 1000, 600), ($n, 1000, 400), ($n, 1000, 200),
            ($n, 800, 1000), ($n, 600, 1000), ($n, 400, 1000), ($n, 200, 1000), (20, 1000, 1000),
            (20, 500, 500), ($n, 100, 100), (20, 100, 100), (10, 50, 50), (5, 50, 50),
        ];
        const E: [f64; 15] = [$($e),*];
        let mut out = [row(0, 0, 0, 0.0); 15];
        let mut i = 0;
        while i < 15 {
            out[i] = row(GRID[i].0, GRID[i].1, GRID[i].2, E[i]);
            i += 1;
        }
        out
    }};
}

static T1: [PublishedRow; 20] = sweep![
    1.9492e-8, 2.1979e-8, 2.2281e-8, 2.2156e-8, 1.7241e-8, 1.5221e-8, 1.7483e-8, 1.1651e-8,
    2.6761e-8, 3.2741e-8, 1.9312e-7, 1.1009e-8, 1.0376e-8, 1.7330e-7, 6.6772e-7, 6.9343e-7,
    8.3178e-7, 7.8103e-7, 8.8030e-6, 0.0317,
];
static T2: [PublishedRow; 20] = sweep![
    3.3167e-7, 3.4754e-7, 3.0912e-7, 3.3658e-7, 3.3271e-7, 2.6301e-7, 2.2022e-7, 5.7358e-7,
    6.4704e-6, 1.6141e-6, 0.1511, 3.5765e-7, 1.1817e-6, 0.1067, 7.2363e-5, 1.1286e-4, 0.0450,
    0.0210, 0.0261, 9.4212,
];
static T3: [PublishedRow; 21] = sweep![
    3.6530e-8, 3.6528e-8, 3.6515e-8, 3.6482e-8, 3.6572e-8, 4.3271e-8, 3.5882e-8, 2.1136e-8,
    1.1306e-8, 3.2499e-8, 5.9790e-8, 2.0991e-8, 3.1329e-8, 4.4110e-8, 2.8376e-8, 6.5198e-8,
    1.1667e-7, 1.1973e-7, 1.1999e-7, 1.6714e-7, 4.0953e-5,
];
static T4: [PublishedRow; 21] = sweep![
    1.5315e-7, 1.5330e-7, 1.6351e-7, 1.5171e-7, 1.5303e-7, 1.0403e-7, 9.3654e-8, 5.1980e-8,
    3.3674e-8, 2.3294e-7, 2.8096e-4, 6.6396e-8, 9.4135e-8, 1.9824e-4, 2.6497e-7, 4.1895e-7,
    8.3724e-5, 3.1943e-5, 4.7861e-5, 0.0145, 0.0039,
];
static T5: [PublishedRow; 20] = sweep![
    1.1213e-8, 1.9372e-8, 1.7023e-8, 1.9995e-8, 1.9013e-8, 1.6567e-8, 1.8385e-8, 1.2829e-8,
    3.7494e-8, 1.1449e-7, 4.7292e-4, 1.3655e-8, 7.4664e-8, 5.5399e-4, 5.9646e-7, 6.8813e-7,
    4.5270e-4, 4.5305e-4, 4.1998e-4, 0.0125,
];
static T6: [PublishedRow; 20] = sweep![
    0.1671, 0.1671, 0.1671, 0.1671, 0.1672, 0.1491, 0.1283, 0.1030, 0.0662, 0.6420, 3.1839, 0.1165,
    0.4509, 2.2466, 0.0265, 0.1559, 0.9435, 0.0870, 0.5879, 120.3691,
];
static T7: [PublishedRow; 20] = sweep![
    1.2451e-8, 1.2263e-8, 1.1838e-8, 1.3812e-8, 1.4932e-8, 9.4572e-9, 1.1218e-8, 9.7996e-9,
    9.6253e-9, 2.3682e-8, 3.9153e-5, 9.7774e-9, 2.4493e-8, 5.6988e-5, 3.7062e-7, 5.1172e-7,
    9.3918e-5, 9.3414e-5, 6.9851e-5, 0.0497,
];
static T8: [PublishedRow; 20] = sweep![
    1.0338e4, 1.2828e5, 7.1245e3, 2.7315e4, 1.4515e4, 2.7273e4, 7.1022e3, 2.2060e3, 1.9391e3,
    3.6205e4, 2.7627e5, 2.3643e3, 1.2936e4, 7.0407e4, 3.2401, 116.1873, 2.2541e3, 0.1006, 24.2426,
    47.5417,
];
static T9: [PublishedRow; 15] = geometric![40;
    3.6234e-9, 2.7852e-9, 2.5213e-9, 2.3199e-9, 1.4331e-8, 3.6234e-9, 3.6234e-9, 3.6234e-9, 3.6234e-9, 3.3615e-9,
    2.2764e-9, 2.4841e-7, 3.3996e-7, 8.2633e-6, 1.1721e-5,
];
static T10: [PublishedRow; 15] = geometric![40;
    7.8082e-4, 6.9845e-4, 5.9861e-4, 4.3758e-4, 3.1089e-4, 7.8048e-4, 7.7999e-4, 7.6313e-4, 7.8686e-4, 1.6829e-3,
    1.8330e-3, 6.1065e-5, 7.7260e-4, 1.5540e-3, 3.9329e-3,
];
static T11: [PublishedRow; 15] = geometric![40;
    1.4598e-2, 1.4603e-2, 1.4601e-2, 1.4619e-2, 1.4638e-2, 1.4160e-2, 4.0513e-2, 2.7287e-2, 1.4638e-2, 2.3516e-2,
    1.6912e-2, 3.2869e-3, 3.4552e-2, 6.8926e-2, 1.9362e-1,
];

pub const TABLE_IDS: std::ops::RangeInclusive<usize> = 1..=11;

pub fn table_spec(id: usize) -> Result<TableSpec> {
    let (case, alpha, bc_alpha, rows): (&str, f64, Option<f64>, &'static [PublishedRow]) = match id
    {
        1 => ("exponential", 1.0, None, &T1),
        2 => ("exponential", 5.0, None, &T2),
        3 => ("polynomial", 1.0, None, &T3),
        4 => ("polynomial", 5.0, None, &T4),
        5 => ("lorentzian", 1.0, None, &T5),
        6 => ("lorentzian", 0.01, None, &T6),
        7 => ("sinusoidal", 1.0, None, &T7),
        8 => ("sinusoidal", 5.0, Some(1.0), &T8),
        9 => ("concentric_disks", 0.01, None, &T9),
        10 => ("offcenter_disk", 0.01, None, &T10),
        11 => ("square_inclusion", 0.1, None, &T11),
        _ => return Err(Error::invalid("table", format!("{id} is not in 1..=11"))),
    };
    Ok(TableSpec {
        id,
        case,
        alpha,
        bc_alpha,
        rows,
    })
}

fn failed_row(spec: &TableSpec, r: &PublishedRow, runtime_s: f64, err: &Error) -> TableRow {
    TableRow {
        table: Some(spec.id),
        case: spec.case.to_string(),
        degree: r.degree,
        points: r.points,
        radii: r.radii,
        total_error: f64::NAN,
        published_error: Some(r.error),
        runtime_s,
        error: Some(err.to_string()),
    }
}

/// Runs the given rows of table `id` (all rows when `rows` is `None`)
/// concurrently. A failing row is recorded and the others still run.
pub fn run_table(id: usize, rows: Option<&[PublishedRow]>) -> Result<Vec<TableRow>> {
    let spec = table_spec(id)?;
    let rows = rows.unwrap_or(spec.rows);
    Ok(rows
        .par_iter()
        .map(|r| {
            let start = Instant::now();
            match run_case(&spec.config(r)) {
                Ok(run) => TableRow {
                    table: Some(id),
                    published_error: Some(r.error),
                    ..run.row
                },
                Err(e) => failed_row(&spec, r, start.elapsed().as_secs_f64(), &e),
            }
        })
        .collect())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Columns follow the published layout: degree, radii, points per radius, error.
pub fn write_table_csv<W: Write>(rows: &[TableRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "table,case,N,radii,points_per_radius,E,published_E,runtime_s,error"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{}",
            r.table.map(|t| t.to_string()).unwrap_or_default(),
            csv_field(&r.case),
            r.degree,
            r.radii,
            r.points,
            if r.total_error.is_nan() {
                String::new()
            } else {
                format!("{:e}", r.total_error)
            },
            opt(r.published_error),
            r.runtime_s,
            csv_field(r.error.as_deref().unwrap_or("")),
        )?;
    }
    Ok(())
}

const CORNER: f64 = PI / 10.0;

/// One run of the beaked-domain suite at `P = Q = 100`.
#[derive(Debug, Clone, Copy)]
pub struct BeakedSpec {
    pub name: &'static str,
    pub case: &'static str,
    pub basis: usize,
    pub collocation_pins: &'static [f64],
    pub published_error: Option<f64>,
}

impl BeakedSpec {
    pub const RADII: usize = 100;
    pub const POINTS: usize = 100;

    pub fn config(&self) -> ExperimentConfig {
        let mut c =
            ExperimentConfig::new(self.case, (self.basis - 1) / 2, Self::POINTS, Self::RADII);
        c.collocation_pins = Some(self.collocation_pins.to_vec());
        c
    }
}

pub const BEAKED_SUITE: [BeakedSpec; 6] = [
    BeakedSpec {
        name: "lorentzian_91",
        case: "beaked_lorentzian",
        basis: 91,
        collocation_pins: &[-CORNER, 0.0, CORNER],
        published_error: Some(1.8355e-4),
    },
    BeakedSpec {
        name: "lorentzian_51",
        case: "beaked_lorentzian",
        basis: 51,
        collocation_pins: &[0.0],
        published_error: Some(0.3869),
    },
    BeakedSpec {
        name: "concentric_91",
        case: "beaked_concentric",
        basis: 91,
        collocation_pins: &[-CORNER, 0.0, CORNER],
        published_error: Some(3.4217e-4),
    },
    BeakedSpec {
        name: "concentric_51",
        case: "beaked_concentric",
        basis: 51,
        collocation_pins: &[0.0],
        published_error: None,
    },
    BeakedSpec {
        name: "square_91",
        case: "beaked_square",
        basis: 91,
        collocation_pins: &[-CORNER, 0.0, CORNER],
        published_error: Some(0.0010),
    },
    BeakedSpec {
        name: "square_71",
        case: "beaked_square",
        basis: 71,
        collocation_pins: &[0.0],
        published_error: Some(2.4867),
    },
];

#[derive(Debug, Clone)]
pub struct BeakedResult {
    pub spec: BeakedSpec,
    pub total_error: f64,
    pub runtime_s: f64,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

/// Runs every beaked-domain configuration; with `out`, each report goes to
/// `out/<name>/`.
pub fn run_beaked_suite(out: Option<&Path>) -> Vec<BeakedResult> {
    BEAKED_SUITE
        .par_iter()
        .map(|spec| {
            let mut config = spec.config();
            config.out = out.map(|d| d.join(spec.name));
            let start = Instant::now();
            let result = run_case(&config);
            let runtime_s = start.elapsed().as_secs_f64();
            match result {
                Ok(run) => BeakedResult {
                    spec: *spec,
                    total_error: run.report.total_error,
                    runtime_s,
                    report: Some(run.report),
                    error: None,
                },
                Err(e) => BeakedResult {
                    spec: *spec,
                    total_error: f64::NAN,
                    runtime_s,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
