//! Chebyshev-basis polynomials on arbitrary real intervals.
//!
//! A [`ChebSeries`] stores coefficients `c_0..c_d` of `Σ c_k T_k(s)` where
//! `s ∈ [-1, 1]` is the affine image of `t ∈ [a, b]`. Every function of time
//! handled by the solver (kernel entries, primer vectors, fundamental matrix
//! entries) is represented this way.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients below this fraction of the largest magnitude are treated as zero.
pub const CHOP_TOL: f64 = 1e-13;

/// Roots closer than this (in the reference variable) to ±1 snap to the endpoint.
const ENDPOINT_SNAP: f64 = 1e-10;

/// Colleague-matrix eigenvalues with a larger imaginary part are discarded.
const IMAG_TOL: f64 = 1e-8;

/// A closed real interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "interval requires finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    /// The reference interval `[-1, 1]`.
    pub const fn reference() -> Self {
        Self { a: -1.0, b: 1.0 }
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Maps `t ∈ [a, b]` to `s ∈ [-1, 1]`.
    pub fn to_reference(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    /// Maps `s ∈ [-1, 1]` to `t ∈ [a, b]`.
    pub fn from_reference(&self, s: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    /// `n` evenly spaced points including both endpoints.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.midpoint()],
            _ => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.b
                    } else {
                        self.a + self.len() * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

/// Chebyshev points of the second kind on `[-1, 1]`, ascending. A single point
/// is placed at the midpoint.
pub fn reference_points(d: usize) -> Vec<f64> {
    match d {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let n = (d - 1) as f64;
            (0..d)
                .map(|j| {
                    // cos((n - j)π/n) written symmetrically so that the middle
                    // node of an odd count is exactly zero.
                    let k = 2 * j as i64 - (d as i64 - 1);
                    (std::f64::consts::FRAC_PI_2 * k as f64 / n).sin()
                })
                .collect()
        }
    }
}

/// Chebyshev points of the second kind mapped onto `domain`, ascending.
pub fn chebyshev_points(d: usize, domain: Interval) -> Vec<f64> {
    let mut pts: Vec<f64> = reference_points(d)
        .into_iter()
        .map(|s| domain.from_reference(s))
        .collect();
    if d >= 2 {
        pts[0] = domain.a;
        pts[d - 1] = domain.b;
    }
    pts
}

/// A polynomial `Σ c_k T_k(s)` with `s` the affine image of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
    domain: Interval,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>, domain: Interval) -> Self {
        Self { coeffs, domain }
    }

    pub fn zero(domain: Interval) -> Self {
        Self::new(vec![0.0], domain)
    }

    pub fn constant(value: f64, domain: Interval) -> Self {
        Self::new(vec![value], domain)
    }

    /// The single basis polynomial `T_k` on `domain`.
    pub fn basis(k: usize, domain: Interval) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self::new(coeffs, domain)
    }

    /// The identity function `t ↦ t` on `domain`.
    pub fn identity(domain: Interval) -> Self {
        Self::new(vec![domain.midpoint(), 0.5 * domain.len()], domain)
    }

    /// Interpolates `f` at the `d` Chebyshev points of `domain`.
    pub fn interpolate<F>(f: F, d: usize, domain: Interval) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        if d == 0 {
            return Err(Error::InvalidArgument("interpolation needs d >= 1".into()));
        }
        let pts = chebyshev_points(d, domain);
        let values: Vec<f64> = pts.iter().map(|&t| f(t)).collect();
        for (node, (&t, &value)) in pts.iter().zip(&values).enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteSample { node, t, value });
            }
        }
        Ok(Self::from_values(&values, domain))
    }

    /// Builds the interpolant from values sampled at `chebyshev_points(values.len(), domain)`.
    pub fn from_values(values: &[f64], domain: Interval) -> Self {
        let d = values.len();
        match d {
            0 => return Self::zero(domain),
            1 => return Self::constant(values[0], domain),
            _ => {}
        }
        let n = d - 1;
        // Points are stored ascending: index j corresponds to angle (n - j)π/n.
        let mut coeffs = vec![0.0; d];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let theta_idx = n - j;
                let w = if theta_idx == 0 || theta_idx == n { 0.5 } else { 1.0 };
                // cos(k·iπ/n) with the argument reduced mod 2n for accuracy.
                let m = (k * theta_idx) % (2 * n);
                acc += w * v * (std::f64::consts::PI * m as f64 / n as f64).cos();
            }
            let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
            *c = scale * acc / n as f64;
        }
        Self::new(coeffs, domain)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Index of the last coefficient above the chop tolerance (0 for the zero series).
    pub fn degree(&self) -> usize {
        let cutoff = CHOP_TOL * self.max_abs_coeff();
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > cutoff)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs_coeff() == 0.0
    }

    /// Drops coefficients past [`degree`](Self::degree).
    pub fn chop(&self) -> Self {
        let deg = self.degree();
        Self::new(self.coeffs[..=deg.min(self.coeffs.len().saturating_sub(1))].to_vec(), self.domain)
    }

    /// Keeps coefficients `c_0..c_k`.
    pub fn truncate(&self, k: usize) -> Self {
        let end = (k + 1).min(self.coeffs.len());
        Self::new(self.coeffs[..end].to_vec(), self.domain)
    }

    /// Clenshaw evaluation in the reference variable `s`.
    pub fn evaluate_reference(&self, s: f64) -> f64 {
        clenshaw(&self.coeffs, s)
    }

    /// Evaluates at time `t`. Points outside the domain are extrapolated; see
    /// [`is_extrapolation`](Self::is_extrapolation).
    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_reference(self.domain.to_reference(t))
    }

    pub fn is_extrapolation(&self, t: f64) -> bool {
        !self.domain.contains(t)
    }

    fn check_domain(&self, other: &ChebSeries) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                a0: self.domain.a,
                b0: self.domain.b,
                a1: other.domain.a,
                b1: other.domain.b,
            });
        }
        Ok(())
    }

    /// Exact product using `T_i T_j = ½(T_{i+j} + T_{|i-j|})`.
    pub fn multiply(&self, other: &ChebSeries) -> Result<ChebSeries> {
        self.check_domain(other)?;
        let lhs = self.chop();
        let rhs = other.chop();
        let mut out = vec![0.0; lhs.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in lhs.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let p = 0.5 * a * b;
                out[i + j] += p;
                out[i.abs_diff(j)] += p;
            }
        }
        Ok(ChebSeries::new(out, self.domain))
    }

    /// `self + factor·other`.
    pub fn axpy(&self, factor: f64, other: &ChebSeries) -> Result<ChebSeries> {
        self.check_domain(other)?;
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; len];
        for (k, o) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(k).copied().unwrap_or(0.0);
            let b = other.coeffs.get(k).copied().unwrap_or(0.0);
            *o = a + factor * b;
        }
        Ok(ChebSeries::new(out, self.domain))
    }

    pub fn scale(&self, factor: f64) -> ChebSeries {
        ChebSeries::new(self.coeffs.iter().map(|c| factor * c).collect(), self.domain)
    }

    /// Derivative with respect to `t`.
    pub fn derivative(&self) -> ChebSeries {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries::zero(self.domain);
        }
        // c'_{k-1} = c'_{k+1} + 2k c_k, then halve c'_0.
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let jac = 2.0 / self.domain.len();
        ChebSeries::new(d.into_iter().map(|c| c * jac).collect(), self.domain)
    }

    /// `∫_a^b s(t) dt`.
    pub fn definite_integral(&self) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .map(|(k, &c)| c * 2.0 / (1.0 - (k * k) as f64))
            .sum();
        0.5 * self.domain.len() * sum
    }

    /// `Σ_{j>k} |c_j|`, an upper bound on the sup-norm error of truncating after `c_k`.
    pub fn tail_bound(&self, k: usize) -> f64 {
        self.coeffs.iter().skip(k + 1).map(|c| c.abs()).sum()
    }

    /// Real roots inside the domain, ascending.
    pub fn roots(&self) -> Result<Vec<f64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let p = self.chop();
        let c = &p.coeffs;
        let n = c.len() - 1;
        let mut roots_ref: Vec<f64> = match n {
            0 => Vec::new(),
            1 => vec![-c[0] / c[1]],
            _ => colleague_roots(c),
        };
        let dp = p.derivative();
        roots_ref.retain(|s| s.is_finite() && s.abs() <= 1.0 + 1e-6);
        for s in roots_ref.iter_mut() {
            *s = polish_root(&p, &dp, *s);
            if (*s - 1.0).abs() <= ENDPOINT_SNAP || *s > 1.0 {
                *s = 1.0;
            } else if (*s + 1.0).abs() <= ENDPOINT_SNAP || *s < -1.0 {
                *s = -1.0;
            }
        }
        roots_ref.sort_by(|a, b| a.total_cmp(b));
        Ok(roots_ref
            .into_iter()
            .map(|s| {
                if s == -1.0 {
                    self.domain.a
                } else if s == 1.0 {
                    self.domain.b
                } else {
                    self.domain.from_reference(s)
                }
            })
            .collect())
    }

    /// Maximum of `|s(t)|` over the domain, with the time where it is attained.
    ///
    /// Candidates are the endpoints, the roots of the derivative, and the
    /// Newton-polished maximum of a sample grid (the colleague matrix can
    /// miss roots when trailing coefficients are noise).
    pub fn sup_norm(&self) -> (f64, f64) {
        let mut cands = vec![self.domain.a, self.domain.b];
        let d = self.derivative();
        if !d.is_zero() {
            if let Ok(r) = d.roots() {
                cands.extend(r);
            }
            let n = (8 * self.coeffs.len()).max(64);
            let grid: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
            let peak = grid
                .iter()
                .copied()
                .max_by(|a, b| {
                    let fa = self.evaluate_reference(*a).abs();
                    let fb = self.evaluate_reference(*b).abs();
                    fa.total_cmp(&fb)
                })
                .unwrap_or(-1.0);
            let s = polish_root(&d, &d.derivative(), peak).clamp(-1.0, 1.0);
            cands.push(self.domain.from_reference(peak));
            cands.push(self.domain.from_reference(s));
        }
        cands
            .into_iter()
            .map(|t| (self.evaluate(t).abs(), t))
            .fold((f64::NEG_INFINITY, self.domain.a), |best, cur| {
                if cur.0 > best.0 {
                    cur
                } else {
                    best
                }
            })
    }
}

/// Clenshaw recurrence for `Σ c_k T_k(s)`.
pub fn clenshaw(coeffs: &[f64], s: f64) -> f64 {
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0],
        n => {
            let two_s = 2.0 * s;
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for &c in coeffs[1..n].iter().rev() {
                let b0 = two_s * b1 - b2 + c;
                b2 = b1;
                b1 = b0;
            }
            coeffs[0] + s * b1 - b2
        }
    }
}

/// Newton refinement in the reference variable; falls back to the input if
/// the iteration wanders.
fn polish_root(p: &ChebSeries, dp: &ChebSeries, s0: f64) -> f64 {
    // dp is a derivative in t; convert to d/ds.
    let jac = 0.5 * p.domain.len();
    let mut s = s0;
    let f0 = p.evaluate_reference(s0).abs();
    for _ in 0..3 {
        let f = p.evaluate_reference(s);
        let df = dp.evaluate_reference(s) * jac;
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let next = s - f / df;
        if !next.is_finite() || (next - s).abs() > 1e-3 {
            break;
        }
        s = next;
    }
    if p.evaluate_reference(s).abs() <= f0 {
        s
    } else {
        s0
    }
}

/// Eigenvalues of the balanced colleague matrix for a series of degree ≥ 2.
fn colleague_roots(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    // Multiplication by s on span{T_0..T_{n-1}}, with T_n eliminated via p = 0.
    m[(0, 1)] = 1.0;
    for i in 1..n - 1 {
        m[(i, i - 1)] = 0.5;
        m[(i, i + 1)] = 0.5;
    }
    m[(n - 1, n - 2)] = 0.5;
    let lead = 2.0 * c[n];
    for k in 0..n {
        m[(n - 1, k)] -= c[k] / lead;
    }
    // Row-vector convention: eigenvalues of the transpose are identical.
    balance(&mut m);
    let eig = match m.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues(),
        None => return Vec::new(),
    };
    eig.iter()
        .filter(|z| z.im.abs() <= IMAG_TOL)
        .map(|z| z.re)
        .collect()
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch).
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    row += m[(i, j)].abs();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn quadratic_is_reproduced_by_three_points() {
        let s = ChebSeries::interpolate(|t| t * (1.0 - t), 3, unit()).unwrap();
        assert!((s.evaluate(0.5) - 0.25).abs() < 1e-15);
        for t in unit().linspace(101) {
            assert!((s.evaluate(t) - t * (1.0 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_function_is_its_own_interpolant() {
        let t5 = ChebSeries::basis(5, Interval::reference());
        let s = ChebSeries::interpolate(|t| t5.evaluate(t), 6, Interval::reference()).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        for (c, e) in s.coeffs().iter().zip(expected) {
            assert!((c - e).abs() < 1e-14, "{:?}", s.coeffs());
        }
    }

    fn sup_error<F: Fn(f64) -> f64>(f: F, d: usize, dom: Interval) -> f64 {
        let s = ChebSeries::interpolate(&f, d, dom).unwrap();
        dom.linspace(20_001)
            .into_iter()
            .map(|t| (s.evaluate(t) - f(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn kinked_exponential_error_at_ten_points() {
        // Independent reference: least-squares Chebyshev fit through the same
        // ten second-kind nodes, measured on a 2e5-point grid (0.30043109).
        let err = sup_error(|t: f64| (1.0 - t.abs()).exp(), 10, Interval::reference());
        assert!((err - 0.300_431_09).abs() < 1e-6, "err = {err}");
    }

    #[test]
    fn smooth_exponential_errors_match_reference_values() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let f = |t: f64| (1.0 - t).exp();
        for (d, expected) in [(2, 2.1187e-1), (4, 1.0851e-3), (6, 2.2540e-6), (8, 2.5115e-9)] {
            let err = sup_error(f, d, dom);
            assert!(
                ((err - expected) / expected).abs() < 1e-3,
                "d = {d}: {err} vs {expected}"
            );
        }
    }

    #[test]
    fn non_finite_sample_names_node() {
        let err = ChebSeries::interpolate(|t| 1.0 / t, 3, Interval::reference()).unwrap_err();
        match err {
            Error::NonFiniteSample { node, t, .. } => {
                assert_eq!(node, 1);
                assert_eq!(t, 0.0);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(ChebSeries::interpolate(|t| t, 0, unit()).is_err());
    }

    #[test]
    fn clenshaw_examples() {
        let t2 = ChebSeries::basis(2, Interval::reference());
        assert!((t2.evaluate(0.3) + 0.82).abs() < 1e-15);
        let s = ChebSeries::new(vec![1.0, 1.0, 1.0], Interval::reference());
        assert_eq!(s.evaluate(1.0), 3.0);
        assert!(!s.is_extrapolation(1.0));
        assert!(s.is_extrapolation(1.5));
    }

    #[test]
    fn trailing_zeros_do_not_change_values() {
        let a = ChebSeries::new(vec![0.3, -1.2, 0.7], unit());
        let b = ChebSeries::new(vec![0.3, -1.2, 0.7, 0.0, 0.0], unit());
        for t in unit().linspace(17) {
            assert_eq!(a.evaluate(t), b.evaluate(t));
        }
        assert_eq!(b.degree(), 2);
        assert_eq!(b.chop().len(), 3);
    }

    #[test]
    fn product_identities() {
        let r = Interval::reference();
        let t1 = ChebSeries::basis(1, r);
        let p = t1.multiply(&t1).unwrap();
        assert_eq!(p.coeffs(), &[0.5, 0.0, 0.5]);
        let s = ChebSeries::new(vec![0.2, -0.4, 1.5, 0.25], r);
        let q = ChebSeries::constant(1.0, r).multiply(&s).unwrap();
        assert_eq!(q.coeffs(), s.coeffs());
        let other = ChebSeries::new(vec![1.0], unit());
        assert!(matches!(
            s.multiply(&other),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn root_examples() {
        let r = Interval::reference();
        let roots = ChebSeries::basis(3, r).roots().unwrap();
        let h = 3f64.sqrt() / 2.0;
        assert_eq!(roots.len(), 3);
        for (x, e) in roots.iter().zip([-h, 0.0, h]) {
            assert!((x - e).abs() < 1e-14, "{roots:?}");
        }
        let lin = ChebSeries::interpolate(|t| 1.0 - 2.0 * t, 2, unit()).unwrap();
        let roots = lin.roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.5).abs() < 1e-15);

        let bump = ChebSeries::interpolate(|t| 4.0 * t * (1.0 - t), 3, unit()).unwrap();
        let roots = bump.derivative().roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.5).abs() < 1e-14);

        assert!(matches!(
            ChebSeries::zero(unit()).roots(),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn roots_at_endpoints_are_clamped() {
        let s = ChebSeries::interpolate(|t| t * (t - 1.0) * (t - 0.3), 4, unit()).unwrap();
        let roots = s.roots().unwrap();
        assert_eq!(roots, vec![0.0, roots[1], 1.0]);
        assert!((roots[1] - 0.3).abs() < 1e-13);
    }

    #[test]
    fn integral_examples() {
        let r = Interval::reference();
        assert_eq!(ChebSeries::basis(0, r).definite_integral(), 2.0);
        assert_eq!(ChebSeries::basis(1, r).definite_integral(), 0.0);
        assert!((ChebSeries::basis(2, r).definite_integral() + 2.0 / 3.0).abs() < 1e-15);
        let s = ChebSeries::interpolate(|t| t * t, 3, Interval::new(1.0, 3.0).unwrap()).unwrap();
        assert!((s.definite_integral() - 26.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn tail_bound_examples() {
        let s = ChebSeries::new(vec![1.0, 0.5, 0.25], unit());
        assert_eq!(s.tail_bound(0), 0.75);
        assert_eq!(s.tail_bound(s.degree()), 0.0);
    }

    #[test]
    fn derivative_of_cubic() {
        let dom = Interval::new(-2.0, 5.0).unwrap();
        let s = ChebSeries::interpolate(|t| t * t * t - 2.0 * t, 4, dom).unwrap();
        let d = s.derivative();
        for t in dom.linspace(11) {
            assert!((d.evaluate(t) - (3.0 * t * t - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_of_bump() {
        let bump = ChebSeries::interpolate(|t| 4.0 * t * (1.0 - t), 3, unit()).unwrap();
        let (v, t) = bump.sup_norm();
        assert!((v - 1.0).abs() < 1e-15);
        assert!((t - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sup_norm_of_kink_interpolant_with_noisy_odd_part() {
        let dom = Interval::reference();
        let f = ChebSeries::interpolate(|t: f64| (1.0 - t.abs()).exp(), 50, dom).unwrap();
        let coeffs: Vec<f64> = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { c + 1e-12 * (k as f64).sqrt() } else { *c })
            .collect();
        let g = ChebSeries::new(coeffs, dom);
        let sampled = dom
            .linspace(200_001)
            .into_iter()
            .map(|t| g.evaluate(t).abs())
            .fold(0.0, f64::max);
        let (v, _) = g.sup_norm();
        assert!(v >= sampled - 1e-12, "{v} < {sampled}");
    }

    #[test]
    fn odd_point_count_contains_midpoint() {
        let pts = chebyshev_points(11, Interval::new(-1.0, 1.0).unwrap());
        assert_eq!(pts[5], 0.0);
        assert_eq!(pts[0], -1.0);
        assert_eq!(pts[10], 1.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }
}
