//! Linear time-varying problem model and moment-data integration.
//!
//! For `ẋ = A(t)x + B(t)u` the fundamental matrix `F` solves `Ḟ = A F`,
//! `F(t_I) = I`. The moment kernel is `G(t) = (F(t)⁻¹ B(t))ᵀ` and the
//! reachability target is `h = F(t_F)⁻¹ x_F − x_I`; any control measure `μ`
//! steering `x_I` to `x_F` satisfies `∫ Gᵀ dμ = h`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cheb::{chebyshev_points, ChebSeries, Interval};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};

/// Nodal systems with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense grid size per segment used to measure sup-norm differences.
const ERROR_GRID: usize = 2001;

type MatrixFn = dyn Fn(f64, usize) -> DMatrix<f64> + Send + Sync;

/// A named closed-form matrix function `(t, segment) ↦ M(t)`.
#[derive(Clone)]
pub struct AnalyticMatrix {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    eval: Arc<MatrixFn>,
}

impl AnalyticMatrix {
    pub fn new<F>(label: impl Into<String>, rows: usize, cols: usize, eval: F) -> Self
    where
        F: Fn(f64, usize) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            rows,
            cols,
            eval: Arc::new(eval),
        }
    }
}

impl fmt::Debug for AnalyticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnalyticMatrix({}, {}x{})", self.label, self.rows, self.cols)
    }
}

/// Matrix-valued function of time.
#[derive(Debug, Clone)]
pub enum MatrixTimeFunction {
    Constant(DMatrix<f64>),
    Analytic(AnalyticMatrix),
    /// Per segment, a row-major `rows × cols` array of series on that segment.
    Piecewise {
        rows: usize,
        cols: usize,
        segments: Vec<Vec<ChebSeries>>,
    },
}

impl MatrixTimeFunction {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Constant(m) => (m.nrows(), m.ncols()),
            Self::Analytic(a) => (a.rows, a.cols),
            Self::Piecewise { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// Value at `t`, using the definition that belongs to `segment` (one-sided
    /// at breakpoints).
    pub fn eval(&self, t: f64, segment: usize) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Analytic(a) => (a.eval)(t, segment),
            Self::Piecewise {
                rows,
                cols,
                segments,
            } => {
                let seg = &segments[segment.min(segments.len() - 1)];
                DMatrix::from_fn(*rows, *cols, |r, c| seg[r * cols + c].evaluate(t))
            }
        }
    }

    /// Builds a piecewise function from monomial coefficient lists in `t`.
    /// `coeffs[segment][entry]` holds `p_0, p_1, …` of `Σ p_k t^k`.
    pub fn from_monomials(
        rows: usize,
        cols: usize,
        domains: &[Interval],
        coeffs: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let mut segments = Vec::with_capacity(domains.len());
        for (dom, entries) in domains.iter().zip(coeffs) {
            if entries.len() != rows * cols {
                return Err(Error::Schema(format!(
                    "expected {} entries per segment, got {}",
                    rows * cols,
                    entries.len()
                )));
            }
            let t = ChebSeries::identity(*dom);
            let mut out = Vec::with_capacity(entries.len());
            for poly in entries {
                // Horner in the Chebyshev basis.
                let mut acc = ChebSeries::zero(*dom);
                for &p in poly.iter().rev() {
                    acc = acc.multiply(&t)?.axpy(1.0, &ChebSeries::constant(p, *dom))?;
                }
                out.push(acc);
            }
            segments.push(out);
        }
        Ok(Self::Piecewise {
            rows,
            cols,
            segments,
        })
    }

    /// Builds a piecewise function from Chebyshev coefficient lists per segment.
    pub fn from_chebyshev(
        rows: usize,
        cols: usize,
        domains: &[Interval],
        coeffs: &[Vec<Vec<f64>>],
    ) -> Result<Self> {
        let mut segments = Vec::with_capacity(domains.len());
        for (dom, entries) in domains.iter().zip(coeffs) {
            if entries.len() != rows * cols {
                return Err(Error::Schema(format!(
                    "expected {} entries per segment, got {}",
                    rows * cols,
                    entries.len()
                )));
            }
            segments.push(
                entries
                    .iter()
                    .map(|c| ChebSeries::new(if c.is_empty() { vec![0.0] } else { c.clone() }, *dom))
                    .collect(),
            );
        }
        Ok(Self::Piecewise {
            rows,
            cols,
            segments,
        })
    }
}

/// `min ‖μ‖_TV` subject to `x(dt) = A x dt + B μ(dt)`, `x(t_I) = x_I`, `x(t_F) = x_F`.
#[derive(Debug, Clone)]
pub struct LtvProblem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub a: MatrixTimeFunction,
    pub b: MatrixTimeFunction,
    pub t_i: f64,
    pub t_f: f64,
    pub x_i: DVector<f64>,
    pub x_f: DVector<f64>,
    pub breakpoints: Vec<f64>,
    /// Known optimal cost, when available in closed form.
    pub reference_cost: Option<f64>,
}

impl LtvProblem {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 || self.m == 0 {
            return bad("state and control dimensions must be positive".into());
        }
        if !(self.t_i.is_finite() && self.t_f.is_finite() && self.t_i < self.t_f) {
            return bad(format!("horizon [{}, {}] is empty", self.t_i, self.t_f));
        }
        if self.x_i.len() != self.n || self.x_f.len() != self.n {
            return bad("boundary states must have length n".into());
        }
        if self.a.shape() != (self.n, self.n) {
            return bad(format!("A has shape {:?}, expected {}x{}", self.a.shape(), self.n, self.n));
        }
        if self.b.shape() != (self.n, self.m) {
            return bad(format!("B has shape {:?}, expected {}x{}", self.b.shape(), self.n, self.m));
        }
        let mut prev = self.t_i;
        for &bp in &self.breakpoints {
            if !(bp > prev && bp < self.t_f) {
                return bad(format!(
                    "breakpoints must be strictly ascending inside ({}, {})",
                    self.t_i, self.t_f
                ));
            }
            prev = bp;
        }
        for f in [&self.a, &self.b] {
            if let MatrixTimeFunction::Piecewise { segments, .. } = f {
                if segments.len() != self.breakpoints.len() + 1 {
                    return Err(Error::Schema(format!(
                        "piecewise data covers {} segments, problem has {}",
                        segments.len(),
                        self.breakpoints.len() + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> Interval {
        Interval {
            a: self.t_i,
            b: self.t_f,
        }
    }

    pub fn segments(&self) -> Vec<Interval> {
        let mut edges = Vec::with_capacity(self.breakpoints.len() + 2);
        edges.push(self.t_i);
        edges.extend(&self.breakpoints);
        edges.push(self.t_f);
        edges
            .windows(2)
            .map(|w| Interval { a: w[0], b: w[1] })
            .collect()
    }

    /// Index of the segment containing `t` (left-closed, the last one closed).
    pub fn segment_of(&self, t: f64) -> usize {
        self.breakpoints.iter().take_while(|&&bp| t >= bp).count()
    }
}

/// Fundamental matrix sampled and interpolated per segment.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub n: usize,
    pub segments: Vec<FundamentalSegment>,
}

#[derive(Debug, Clone)]
pub struct FundamentalSegment {
    pub domain: Interval,
    pub nodes: Vec<f64>,
    pub values: Vec<DMatrix<f64>>,
    /// Row-major `n × n` entry interpolants.
    pub series: Vec<ChebSeries>,
}

impl FundamentalMatrix {
    /// `F(t_F)` as integrated (not interpolated).
    pub fn terminal(&self) -> &DMatrix<f64> {
        self.segments
            .last()
            .and_then(|s| s.values.last())
            .expect("fundamental matrix has at least one node")
    }

    /// Interpolated value on `segment`.
    pub fn eval(&self, t: f64, segment: usize) -> DMatrix<f64> {
        let seg = &self.segments[segment];
        DMatrix::from_fn(self.n, self.n, |r, c| seg.series[r * self.n + c].evaluate(t))
    }
}

fn matrix_rhs(a: &MatrixTimeFunction, n: usize, segment: usize) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |t, y, dy| {
        let am = a.eval(t, segment);
        // y holds an n×k matrix in column-major order.
        let cols = y.len() / n;
        for c in 0..cols {
            let col = &y[c * n..(c + 1) * n];
            for r in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += am[(r, k)] * col[k];
                }
                dy[c * n + r] = acc;
            }
        }
    }
}

/// Propagates a state (or a column-major block of states) under `ẋ = A x`
/// within one segment.
pub fn propagate(
    p: &LtvProblem,
    segment: usize,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>> {
    ode::integrate(matrix_rhs(&p.a, p.n, segment), t0, x0, t1, opts)
}

/// Propagates a state forward from `t0` to `t1 ≥ t0`, crossing breakpoints.
pub fn flow(p: &LtvProblem, x0: &[f64], t0: f64, t1: f64, opts: &OdeOptions) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut t = t0;
    for (si, dom) in p.segments().into_iter().enumerate() {
        let end = t1.min(dom.b);
        if end > t {
            x = propagate(p, si, &x, t, end, opts)?;
            t = end;
        }
        if t >= t1 {
            break;
        }
    }
    Ok(x)
}

/// Integrates `Ḟ = A F`, `F(t_I) = I`, chained across segments, sampled at
/// `d` Chebyshev points per segment.
pub fn fundamental_matrix(p: &LtvProblem, d: usize, ode_tol: f64) -> Result<FundamentalMatrix> {
    if d < 2 {
        return Err(Error::InvalidArgument("fundamental matrix needs d >= 2".into()));
    }
    if !(ode_tol > 0.0) {
        return Err(Error::InvalidArgument("ode_tol must be positive".into()));
    }
    p.validate()?;
    let n = p.n;
    let opts = OdeOptions::with_tol(ode_tol);
    let mut state: Vec<f64> = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
    let mut segments = Vec::new();
    for (si, dom) in p.segments().into_iter().enumerate() {
        let nodes = chebyshev_points(d, dom);
        let mut values = Vec::with_capacity(d);
        let mut t = dom.a;
        for &node in &nodes {
            state = propagate(p, si, &state, t, node, &opts)?;
            t = node;
            values.push(DMatrix::from_column_slice(n, n, &state));
        }
        let series = (0..n * n)
            .map(|idx| {
                let (r, c) = (idx / n, idx % n);
                let v: Vec<f64> = values.iter().map(|m| m[(r, c)]).collect();
                ChebSeries::from_values(&v, dom)
            })
            .collect();
        segments.push(FundamentalSegment {
            domain: dom,
            nodes,
            values,
            series,
        });
    }
    Ok(FundamentalMatrix { n, segments })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `F x = rhs` by partial-pivoting LU after a condition check.
fn solve_checked(f: &DMatrix<f64>, rhs: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let cond = condition_number(f);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularMatrix { t, cond });
    }
    f.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularMatrix { t, cond })
}

/// Moment kernel `G = (F⁻¹B)ᵀ` on one segment.
#[derive(Debug, Clone)]
pub struct KernelSegment {
    pub domain: Interval,
    pub n: usize,
    pub m: usize,
    /// `entries[j * n + i]` is `g_{i,j}`: constraint `i`, channel `j`.
    pub entries: Vec<ChebSeries>,
}

impl KernelSegment {
    pub fn g(&self, i: usize, j: usize) -> &ChebSeries {
        &self.entries[j * self.n + i]
    }

    /// `G(t)`, an `m × n` matrix.
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.n, |j, i| self.g(i, j).evaluate(t))
    }

    /// Largest series degree among the entries.
    pub fn degree(&self) -> usize {
        self.entries.iter().map(|s| s.degree()).max().unwrap_or(0)
    }
}

/// Solves `F(t) Gᵀ(t) = B(t)` at every node and interpolates the result.
pub fn compute_g(f: &FundamentalMatrix, b: &MatrixTimeFunction) -> Result<Vec<KernelSegment>> {
    let n = f.n;
    let (_, m) = b.shape();
    let mut out = Vec::with_capacity(f.segments.len());
    for (si, seg) in f.segments.iter().enumerate() {
        let mut nodal: Vec<DMatrix<f64>> = Vec::with_capacity(seg.nodes.len());
        for (&t, fv) in seg.nodes.iter().zip(&seg.values) {
            let bt = b.eval(t, si);
            nodal.push(solve_checked(fv, &bt, t)?);
        }
        let mut entries = Vec::with_capacity(n * m);
        for j in 0..m {
            for i in 0..n {
                let v: Vec<f64> = nodal.iter().map(|gt| gt[(i, j)]).collect();
                entries.push(ChebSeries::from_values(&v, seg.domain));
            }
        }
        out.push(KernelSegment {
            domain: seg.domain,
            n,
            m,
            entries,
        });
    }
    Ok(out)
}

/// `h = F(t_F)⁻¹ x_F − x_I`.
pub fn compute_h(f: &FundamentalMatrix, p: &LtvProblem) -> Result<DVector<f64>> {
    let ft = f.terminal();
    let rhs = DMatrix::from_column_slice(p.n, 1, p.x_f.as_slice());
    let sol = solve_checked(ft, &rhs, p.t_f)?;
    Ok(DVector::from_column_slice(sol.as_slice()) - &p.x_i)
}

/// Kernel data needed to pose the moment problem.
#[derive(Debug, Clone)]
pub struct MomentData {
    pub n: usize,
    pub m: usize,
    pub kernel: Vec<KernelSegment>,
    pub h: DVector<f64>,
    /// Sup-norm error bound on the kernel interpolants.
    pub e_d: f64,
    /// Per-constraint error bounds, `max_j sup_t |g_ij − g̃_ij|`; `e_d` is their maximum.
    pub e_rows: Vec<f64>,
    /// `sup_t ‖B(t)‖₂`.
    pub b_norm: f64,
    /// `|x_F|₂`.
    pub xf_norm: f64,
    /// Interpolation points per segment.
    pub points: usize,
}

impl MomentData {
    /// Segment containing `t` (left-closed, last closed).
    pub fn segment_of(&self, t: f64) -> usize {
        self.kernel
            .iter()
            .position(|k| t < k.domain.b)
            .unwrap_or(self.kernel.len() - 1)
    }

    /// `G(t)` from the interpolated kernel.
    pub fn g_at(&self, t: f64) -> DMatrix<f64> {
        self.kernel[self.segment_of(t)].eval(t)
    }

    pub fn horizon(&self) -> Interval {
        Interval {
            a: self.kernel[0].domain.a,
            b: self.kernel[self.kernel.len() - 1].domain.b,
        }
    }
}

/// Per-row sup-norm gap between two kernels of the same shape.
fn sup_difference(lhs: &[KernelSegment], rhs: &[KernelSegment]) -> Vec<f64> {
    let n = lhs.first().map(|k| k.n).unwrap_or(0);
    let mut worst = vec![0.0_f64; n];
    for (l, r) in lhs.iter().zip(rhs) {
        let mut grid = l.domain.linspace(ERROR_GRID);
        grid.extend(chebyshev_points(r.entries[0].len(), r.domain));
        for (idx, (sl, sr)) in l.entries.iter().zip(&r.entries).enumerate() {
            let row = &mut worst[idx % n];
            for &t in &grid {
                *row = row.max((sl.evaluate(t) - sr.evaluate(t)).abs());
            }
        }
    }
    worst
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Sup-norm gap between the `d`-point kernel interpolant and a `2d+1`-point
/// reference, measured on a dense grid.
pub fn estimate_error(p: &LtvProblem, d: usize, ode_tol: f64) -> Result<f64> {
    let coarse = compute_g(&fundamental_matrix(p, d, ode_tol)?, &p.b)?;
    let fine = compute_g(&fundamental_matrix(p, 2 * d + 1, ode_tol)?, &p.b)?;
    Ok(max_of(&sup_difference(&coarse, &fine)))
}

/// `sup_t ‖B(t)‖₂` sampled on a dense grid per segment.
pub fn b_norm(p: &LtvProblem) -> f64 {
    let mut worst = 0.0_f64;
    for (si, dom) in p.segments().into_iter().enumerate() {
        let samples = match p.b {
            MatrixTimeFunction::Constant(_) => vec![dom.a],
            _ => dom.linspace(ERROR_GRID),
        };
        for t in samples {
            let bt = p.b.eval(t, si);
            worst = worst.max(bt.singular_values().max());
        }
    }
    worst
}

/// Integrates everything needed for the moment problem at `d` points per segment.
pub fn moment_data(p: &LtvProblem, d: usize, ode_tol: f64) -> Result<MomentData> {
    let f = fundamental_matrix(p, d, ode_tol)?;
    let kernel = compute_g(&f, &p.b)?;
    let h = compute_h(&f, p)?;
    let fine = compute_g(&fundamental_matrix(p, 2 * d + 1, ode_tol)?, &p.b)?;
    let e_rows = sup_difference(&kernel, &fine);
    Ok(MomentData {
        n: p.n,
        m: p.m,
        kernel,
        h,
        e_d: max_of(&e_rows),
        e_rows,
        b_norm: b_norm(p),
        xf_norm: p.x_f.norm(),
        points: d,
    })
}
