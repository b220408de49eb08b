//! Cubic splines in the boundary angle.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Thomas algorithm for `a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i]`.
fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve by Sherman–Morrison; `a[0]` couples to the last
/// unknown and `c[n-1]` to the first.
fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= c[n - 1] * a[0] / gamma;
    let x = solve_tridiagonal(a, &bb, c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let z = solve_tridiagonal(a, &bb, c, &u);
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Cubic through `(x_i, y_i)` with second derivatives `m_i` at the knots.
#[derive(Debug, Clone, PartialEq)]
struct Piecewise {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Piecewise {
    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let (l, r) = (self.x[i + 1] - t, t - self.x[i]);
        self.m[i] * l.powi(3) / (6.0 * h)
            + self.m[i + 1] * r.powi(3) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * l
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * r
    }
}

fn check_increasing(x: &[f64]) -> Result<()> {
    if x.windows(2).all(|w| w[1] > w[0]) && x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(
            "knots",
            "abscissas must be finite and strictly increasing",
        ))
    }
}

/// Periodic cubic spline of period `2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    inner: Piecewise,
}

impl PeriodicSpline {
    /// `x` strictly increasing with `x[n-1] < x[0] + 2π`.
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::invalid("knots", "need at least 3 matching samples"));
        }
        check_increasing(x)?;
        if x[n - 1] >= x[0] + TAU {
            return Err(Error::invalid("knots", "samples span more than one period"));
        }
        let h: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 < n {
                    x[i + 1] - x[i]
                } else {
                    x[0] + TAU - x[n - 1]
                }
            })
            .collect();
        let slope = |i: usize| (y[(i + 1) % n] - y[i]) / h[i];
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            a[i] = h[im];
            b[i] = 2.0 * (h[im] + h[i]);
            c[i] = h[i];
            d[i] = 6.0 * (slope(i) - slope(im));
        }
        let mut m = solve_cyclic(&a, &b, &c, &d);
        let mut xs = x.to_vec();
        let mut ys = y.to_vec();
        xs.push(x[0] + TAU);
        ys.push(y[0]);
        m.push(m[0]);
        Ok(Self {
            inner: Piecewise { x: xs, y: ys, m },
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let x0 = self.inner.x[0];
        self.inner.eval(x0 + (theta - x0).rem_euclid(TAU))
    }
}

/// Not-a-knot cubic on an interval; quadratic or linear for 3 or 2 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct NotAKnotSpline {
    inner: Piecewise,
}

impl NotAKnotSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid("knots", "need at least 2 matching samples"));
        }
        check_increasing(x)?;
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let m = match n {
            2 => vec![0.0, 0.0],
            3 => {
                let c = 2.0 * (slope[1] - slope[0]) / (h[0] + h[1]);
                vec![c; 3]
            }
            _ => {
                // unknowns m_1..m_{n-2}; m_0 and m_{n-1} eliminated through the
                // third-derivative continuity at x_1 and x_{n-2}
                let k = n - 2;
                let mut a = vec![0.0; k];
                let mut b = vec![0.0; k];
                let mut c = vec![0.0; k];
                let mut d = vec![0.0; k];
                for j in 0..k {
                    let i = j + 1;
                    a[j] = h[i - 1];
                    b[j] = 2.0 * (h[i - 1] + h[i]);
                    c[j] = h[i];
                    d[j] = 6.0 * (slope[i] - slope[i - 1]);
                }
                // m_0 = ((h0 + h1) m_1 − h0 m_2) / h1
                let (h0, h1) = (h[0], h[1]);
                b[0] += h0 * (h0 + h1) / h1;
                c[0] -= h0 * h0 / h1;
                // m_{n-1} = ((h_{n-2} + h_{n-3}) m_{n-2} − h_{n-2} m_{n-3}) / h_{n-3}
                let (hl, hp) = (h[n - 2], h[n - 3]);
                b[k - 1] += hl * (hl + hp) / hp;
                a[k - 1] -= hl * hl / hp;
                let inner = solve_tridiagonal(&a, &b, &c, &d);
                let mut m = Vec::with_capacity(n);
                m.push(((h0 + h1) * inner[0] - h0 * inner[1]) / h1);
                m.extend_from_slice(&inner);
                m.push(((hl + hp) * inner[k - 1] - hl * inner[k - 2]) / hp);
                m
            }
        };
        Ok(Self {
            inner: Piecewise {
                x: x.to_vec(),
                y: y.to_vec(),
                m,
            },
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }
}

/// Spline through boundary samples: periodic when smooth, otherwise one
/// not-a-knot cubic per arc between consecutive breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpline {
    Periodic(PeriodicSpline),
    Arcs {
        /// Arc start angles, increasing, each arc ending at the next start
        /// (the last one wraps around by `2π`).
        starts: Vec<f64>,
        arcs: Vec<NotAKnotSpline>,
    },
}

impl BoundarySpline {
    /// `x` strictly increasing over less than one period. `breaks` must be
    /// elements of `x`; samples at a break belong to both adjacent arcs.
    pub fn new(x: &[f64], y: &[f64], breaks: &[f64]) -> Result<Self> {
        if breaks.is_empty() {
            return Ok(BoundarySpline::Periodic(PeriodicSpline::new(x, y)?));
        }
        let n = x.len();
        let mut idx: Vec<usize> = breaks
            .iter()
            .map(|&b| {
                x.iter()
                    .position(|&v| (v - b).abs() < 1e-12)
                    .ok_or_else(|| {
                        Error::invalid("breaks", format!("break {b} is not a sample angle"))
                    })
            })
            .collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        let mut starts = Vec::with_capacity(idx.len());
        let mut arcs = Vec::with_capacity(idx.len());
        for (j, &s) in idx.iter().enumerate() {
            let e = if j + 1 < idx.len() {
                idx[j + 1]
            } else {
                idx[0] + n
            };
            let (xs, ys): (Vec<f64>, Vec<f64>) = (s..=e)
                .map(|k| {
                    let wrap = if k >= n { TAU } else { 0.0 };
                    (x[k % n] + wrap, y[k % n])
                })
                .unzip();
            starts.push(x[s]);
            arcs.push(NotAKnotSpline::new(&xs, &ys)?);
        }
        Ok(BoundarySpline::Arcs { starts, arcs })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            BoundarySpline::Periodic(s) => s.eval(theta),
            BoundarySpline::Arcs { starts, arcs } => {
                let t = starts[0] + (theta - starts[0]).rem_euclid(TAU);
                let j = starts.partition_point(|&s| s <= t).max(1) - 1;
                arcs[j].eval(t)
            }
        }
    }
}
