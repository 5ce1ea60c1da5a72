//! Shared fixtures and invariant checks for the integration suites.
#![allow(dead_code)]

use impulse_moments::cheb::{clenshaw, ChebSeries, Interval};
use impulse_moments::extract::extract_atoms;
use impulse_moments::ltv::{self, LtvProblem, MatrixTimeFunction};
use impulse_moments::moment::{cone_matrices, MomentVector};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points per segment at which a random problem's kernel is interpolated exactly.
pub const RANDOM_POINTS: usize = 12;

/// Random problem on [0, 1] with polynomial `B` of degree at most 8 and `A`
/// either zero or strictly upper triangular, so the kernel is polynomial of
/// degree at most 11.
pub fn random_problem(rng: &mut ChaCha8Rng, label: usize) -> LtvProblem {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=2);
    let dom = Interval::new(0.0, 1.0).unwrap();
    let mut a = DMatrix::zeros(n, n);
    if rng.random_bool(0.5) {
        for r in 0..n {
            for c in r + 1..n {
                a[(r, c)] = rng.random_range(-1.0..1.0);
            }
        }
    }
    let entries: Vec<Vec<f64>> = (0..n * m)
        .map(|_| {
            let deg = rng.random_range(n.saturating_sub(1)..=8);
            (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .collect();
    let b = MatrixTimeFunction::from_monomials(n, m, &[dom], &[entries]).unwrap();
    let x_i = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    LtvProblem {
        name: format!("random_{label}"),
        n,
        m,
        a: MatrixTimeFunction::Constant(a),
        b,
        t_i: 0.0,
        t_f: 1.0,
        x_i,
        x_f: DVector::zeros(n),
        breakpoints: vec![],
        reference_cost: None,
    }
}

pub fn random_problems(count: usize, seed: u64) -> Vec<LtvProblem> {
    let mut r = rng(seed);
    (0..count).map(|k| random_problem(&mut r, k)).collect()
}

/// Interpolating a degree `< d` polynomial at `d` points reproduces its coefficients.
pub fn check_interpolation_exact(coeffs: &[f64], a: f64, len: f64) -> Check {
    let d = coeffs.len();
    let dom = Interval::new(a, a + len).map_err(|e| e.to_string())?;
    let f = ChebSeries::interpolate(|t| clenshaw(coeffs, dom.to_reference(t)), d, dom)
        .map_err(|e| e.to_string())?;
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs())).max(1e-300);
    for (k, (&c, &g)) in coeffs.iter().zip(f.coeffs()).enumerate() {
        if (c - g).abs() > 1e-12 * scale {
            return Err(format!("coefficient {k}: {g} vs {c}"));
        }
    }
    Ok(())
}

/// Clenshaw against the direct cosine sum `Σ c_k cos(k arccos s)`.
pub fn check_clenshaw(coeffs: &[f64], s: f64) -> Check {
    let th = s.acos();
    let direct: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * (k as f64 * th).cos())
        .sum();
    let scale: f64 = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
    let v = clenshaw(coeffs, s);
    if (v - direct).abs() > 1e-12 * scale {
        return Err(format!("clenshaw {v} vs cosine sum {direct} at s = {s}"));
    }
    Ok(())
}

pub fn check_multiply(a: &[f64], b: &[f64], s: f64) -> Check {
    let dom = Interval::reference();
    let fa = ChebSeries::new(a.to_vec(), dom);
    let fb = ChebSeries::new(b.to_vec(), dom);
    let ab = fa.multiply(&fb).map_err(|e| e.to_string())?;
    let ba = fb.multiply(&fa).map_err(|e| e.to_string())?;
    let scale = a.iter().map(|c| c.abs()).sum::<f64>() * b.iter().map(|c| c.abs()).sum::<f64>();
    let tol = 1e-12 * scale.max(1.0);
    for (k, (x, y)) in ab.coeffs().iter().zip(ba.coeffs()).enumerate() {
        if (x - y).abs() > tol {
            return Err(format!("not commutative at coefficient {k}"));
        }
    }
    let pointwise = fa.evaluate(s) * fb.evaluate(s);
    if (ab.evaluate(s) - pointwise).abs() > tol {
        return Err(format!("product {} vs pointwise {pointwise}", ab.evaluate(s)));
    }
    Ok(())
}

pub fn check_roots(coeffs: &[f64]) -> Check {
    let f = ChebSeries::new(coeffs.to_vec(), Interval::new(-2.0, 3.0).unwrap());
    if f.is_zero() {
        return Ok(());
    }
    let roots = f.roots().map_err(|e| e.to_string())?;
    if roots.len() > f.degree() {
        return Err(format!("{} roots for degree {}", roots.len(), f.degree()));
    }
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    for r in roots {
        if f.evaluate(r).abs() > 1e-8 * scale {
            return Err(format!("residual {} at root {r}", f.evaluate(r)));
        }
    }
    Ok(())
}

pub fn check_tail_bound(coeffs: &[f64]) -> Check {
    let f = ChebSeries::new(coeffs.to_vec(), Interval::reference());
    for k in 1..coeffs.len() + 1 {
        if f.tail_bound(k) > f.tail_bound(k - 1) {
            return Err(format!("tail bound increases at k = {k}"));
        }
    }
    Ok(())
}

/// `A(t) = A0 + t A1` on [0, 1] with `n = a0.nrows()`.
pub fn affine_a_problem(a0: DMatrix<f64>, a1: DMatrix<f64>) -> LtvProblem {
    let n = a0.nrows();
    let dom = Interval::new(0.0, 1.0).unwrap();
    let entries: Vec<Vec<f64>> = (0..n * n)
        .map(|k| vec![a0[(k / n, k % n)], a1[(k / n, k % n)]])
        .collect();
    LtvProblem {
        name: "liouville".into(),
        n,
        m: 1,
        a: MatrixTimeFunction::from_monomials(n, n, &[dom], &[entries]).unwrap(),
        b: MatrixTimeFunction::Constant(DMatrix::from_element(n, 1, 1.0)),
        t_i: 0.0,
        t_f: 1.0,
        x_i: DVector::zeros(n),
        x_f: DVector::zeros(n),
        breakpoints: vec![],
        reference_cost: None,
    }
}

/// `log det F(t) = ∫ trace A` at 20 sample times, with an interpolant of the trace.
pub fn check_liouville(p: &LtvProblem, points: usize, ode_tol: f64) -> Check {
    let f = ltv::fundamental_matrix(p, points, ode_tol).map_err(|e| e.to_string())?;
    let trace = |t: f64| p.a.eval(t, 0).trace();
    for k in 1..=20 {
        let t = p.t_i + (p.t_f - p.t_i) * k as f64 / 20.0;
        let dom = Interval::new(p.t_i, t).map_err(|e| e.to_string())?;
        let integral = ChebSeries::interpolate(trace, 16, dom)
            .map_err(|e| e.to_string())?
            .definite_integral();
        let det = f.eval(t, 0).determinant();
        if det <= 0.0 {
            return Err(format!("det F({t}) = {det}"));
        }
        let err = (det.ln() - integral).abs();
        if err > 10.0 * ode_tol * (1.0 + integral.abs()) {
            return Err(format!("log det {} vs trace integral {integral} at t = {t}", det.ln()));
        }
    }
    Ok(())
}

/// Every localizing matrix of an atomic measure's moments is PSD.
pub fn check_cones_psd(atoms: &[(f64, f64)], order: usize) -> Check {
    let y = MomentVector::from_atoms(atoms, order, Interval::reference());
    let mass = y.mass();
    for (k, m) in cone_matrices(&y).iter().enumerate() {
        let min = m.symmetric_eigenvalues().min();
        if min < -1e-10 * mass.max(1.0) {
            return Err(format!("cone {k} has eigenvalue {min}"));
        }
    }
    Ok(())
}

/// Forward moments then extraction recovers the atoms.
pub fn check_extraction(atoms: &[(f64, f64)], order: usize) -> Check {
    let dom = Interval::new(2.0, 6.0).unwrap();
    let y = MomentVector::from_atoms(atoms, order, dom);
    let mut got = extract_atoms(&y, 1e-10).map_err(|e| e.to_string())?;
    got.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut want: Vec<(f64, f64)> = atoms.iter().map(|&(s, w)| (dom.from_reference(s), w)).collect();
    want.sort_by(|a, b| a.0.total_cmp(&b.0));
    if got.len() != want.len() {
        return Err(format!("recovered {} atoms, expected {}: {got:?}", got.len(), want.len()));
    }
    for (g, w) in got.iter().zip(&want) {
        if (g.0 - w.0).abs() > 1e-7 || (g.1 - w.1).abs() > 1e-7 {
            return Err(format!("atom {g:?} vs {w:?}"));
        }
    }
    Ok(())
}

/// Up to four atoms in (-1, 1) pairwise at least `gap` apart, weights in [0.1, 10].
pub fn random_atoms(rng: &mut ChaCha8Rng, gap: f64) -> Vec<(f64, f64)> {
    let count = rng.random_range(1..=4);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    while atoms.len() < count {
        let s = rng.random_range(-0.95..0.95);
        if atoms.iter().all(|a| (a.0 - s).abs() >= gap) {
            atoms.push((s, rng.random_range(0.1..10.0)));
        }
    }
    atoms
}
