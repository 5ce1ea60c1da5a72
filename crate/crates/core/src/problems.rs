//! Builtin problem library.
//!
//! | name                | n | m | horizon        | data                               |
//! |---------------------|---|---|----------------|------------------------------------|
//! | `scalar_poly`       | 1 | 1 | [0, 1]         | `ẋ = t(1−t)u`, 0 → 1               |
//! | `sign_switch`       | 1 | 1 | [-1, 1]        | `ẋ = sign(t)x + u`, −1 → 1         |
//! | `sign_switch_split` | 1 | 1 | [-1, 0, 1]     | as above, split at the kink        |
//! | `double_integrator` | 2 | 1 | [0, 1]         | `ẍ = u`, (0,0) → (1,0)             |
//! | `prisma`            | 4 | 2 | [0, 84360]     | Tschauner–Hempel coplanar dynamics |

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cheb::Interval;
use crate::error::{Error, Result};
use crate::ltv::{self, AnalyticMatrix, LtvProblem, MatrixTimeFunction};
use crate::ode::OdeOptions;

pub const BUILTIN_NAMES: [&str; 5] = [
    "scalar_poly",
    "sign_switch",
    "sign_switch_split",
    "double_integrator",
    "prisma",
];

pub type Overrides = BTreeMap<String, Value>;

pub const PRISMA_PERIOD: f64 = 5920.0;
pub const PRISMA_ECCENTRICITY: f64 = 4.0e-3;
pub const PRISMA_T_F: f64 = 84360.0;

/// Burns `(t, [u_x, u_z])` defining the default PRISMA initial state: the
/// initial relative state is the one these three x-channel burns bring to rest
/// at the origin at `t_F`.
///
/// Amplitudes are the reference burn sizes; the first two times are the
/// reference ones. The third is where, for the default orbit, the x-primer of
/// the dual vector touching `+1` at `t = 0` and (stationary) at `t = 2140`
/// reaches its stationary `−1`. Those three touches make this plan optimal.
pub const PRISMA_DEFAULT_BURNS: [(f64, [f64; 2]); 3] = [
    (0.0, [0.0172, 0.0]),
    (2140.0, [0.0011, 0.0]),
    (83436.65, [-0.019, 0.0]),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    /// Mean angular motion (rad per time unit).
    pub n_bar: f64,
    pub e: f64,
    pub period: f64,
}

impl OrbitParams {
    /// Completes whichever of `n_bar`, `period` is missing; both given must
    /// satisfy `n_bar · period = 2π` to 1e-9.
    pub fn new(n_bar: Option<f64>, period: Option<f64>, e: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&e) {
            return Err(Error::InvalidOverride(format!("eccentricity {e} outside [0, 1)")));
        }
        let (n_bar, period) = match (n_bar, period) {
            (Some(n), Some(p)) => {
                if (n * p - TAU).abs() > 1e-9 {
                    return Err(Error::InvalidOverride(format!(
                        "n_bar {n} and period {p} are inconsistent (n_bar·period = {})",
                        n * p
                    )));
                }
                (n, p)
            }
            (Some(n), None) => (n, TAU / n),
            (None, Some(p)) => (TAU / p, p),
            (None, None) => (TAU / PRISMA_PERIOD, PRISMA_PERIOD),
        };
        if !(n_bar > 0.0 && n_bar.is_finite()) {
            return Err(Error::InvalidOverride(format!("n_bar {n_bar} must be positive")));
        }
        Ok(Self { n_bar, e, period })
    }
}

/// Eccentric anomaly from Kepler's equation `n̄t = E − e sin E`.
pub fn kepler_e(op: &OrbitParams, t: f64) -> Result<f64> {
    let m = op.n_bar * t;
    let mut e_an = m;
    for _ in 0..50 {
        let f = e_an - op.e * e_an.sin() - m;
        if f.abs() <= 1e-13 {
            return Ok(e_an);
        }
        let step = f / (1.0 - op.e * e_an.cos());
        e_an -= step;
        if step.abs() <= 4.0 * f64::EPSILON * e_an.abs().max(1.0) {
            return Ok(e_an);
        }
    }
    Err(Error::KeplerNoConvergence { t })
}

/// True anomaly, continuous in `t` (not reduced modulo 2π).
pub fn kepler_nu(op: &OrbitParams, t: f64) -> Result<f64> {
    let e_an = kepler_e(op, t)?;
    let half = ((1.0 + op.e).sqrt() * (0.5 * e_an).sin()).atan2((1.0 - op.e).sqrt() * (0.5 * e_an).cos());
    let nu = 2.0 * half;
    Ok(nu + TAU * ((e_an - nu) / TAU).round())
}

/// Tschauner–Hempel state matrix at true anomaly `nu`.
pub fn tschauner_hempel_a(op: &OrbitParams, nu: f64) -> DMatrix<f64> {
    let (n, e) = (op.n_bar, op.e);
    let rho = 1.0 + e * nu.cos();
    let k = (rho / (1.0 - e * e)).powi(3);
    let omega = 2.0 * n * rho * rho / (1.0 - e * e).powf(1.5);
    let n2 = n * n;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            n2 * e * nu.cos() * k, -2.0 * n2 * e * nu.sin() * k, 0.0, omega, //
            2.0 * n2 * e * nu.sin() * k, n2 * (3.0 + e * nu.cos()) * k, -omega, 0.0,
        ],
    )
}

fn take_f64(ov: &mut Overrides, key: &str) -> Result<Option<f64>> {
    match ov.remove(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| Error::InvalidOverride(format!("`{key}` must be a finite number, got {v}"))),
    }
}

fn take_vec(ov: &mut Overrides, key: &str, n: usize) -> Result<Option<DVector<f64>>> {
    let Some(v) = ov.remove(key) else {
        return Ok(None);
    };
    let bad = || Error::InvalidOverride(format!("`{key}` must be an array of {n} finite numbers"));
    let arr = v.as_array().ok_or_else(bad)?;
    if arr.len() != n {
        return Err(bad());
    }
    let vals: Option<Vec<f64>> = arr.iter().map(|x| x.as_f64().filter(|f| f.is_finite())).collect();
    Ok(Some(DVector::from_vec(vals.ok_or_else(bad)?)))
}

fn reject_leftovers(ov: &Overrides, name: &str) -> Result<()> {
    match ov.keys().next() {
        Some(k) => Err(Error::InvalidOverride(format!("`{k}` is not a parameter of `{name}`"))),
        None => Ok(()),
    }
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

/// Builds a builtin problem, applying parameter overrides.
///
/// Every builtin accepts `x_i` and `x_f`; `prisma` also takes `n_bar`,
/// `period` and `e`.
pub fn builtin(name: &str, overrides: &Overrides) -> Result<LtvProblem> {
    let mut ov = overrides.clone();
    let p = match name {
        "scalar_poly" => scalar_poly(&mut ov)?,
        "sign_switch" => sign_switch(&mut ov, false)?,
        "sign_switch_split" => sign_switch(&mut ov, true)?,
        "double_integrator" => double_integrator(&mut ov)?,
        "prisma" => prisma(&mut ov)?,
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    reject_leftovers(&ov, name)?;
    p.validate()?;
    Ok(p)
}

fn scalar_poly(ov: &mut Overrides) -> Result<LtvProblem> {
    let dom = Interval::new(0.0, 1.0)?;
    let x_i = take_vec(ov, "x_i", 1)?.unwrap_or_else(|| scalar(0.0));
    let x_f = take_vec(ov, "x_f", 1)?.unwrap_or_else(|| scalar(1.0));
    // Optimal cost 4|x_F − x_I| from the single burn at the kernel peak.
    let reference = 4.0 * (x_f[0] - x_i[0]).abs();
    Ok(LtvProblem {
        name: "scalar_poly".into(),
        n: 1,
        m: 1,
        a: MatrixTimeFunction::Constant(DMatrix::zeros(1, 1)),
        b: MatrixTimeFunction::from_monomials(1, 1, &[dom], &[vec![vec![0.0, 1.0, -1.0]]])?,
        t_i: 0.0,
        t_f: 1.0,
        x_i,
        x_f,
        breakpoints: vec![],
        reference_cost: Some(reference),
    })
}

fn sign_switch(ov: &mut Overrides, split: bool) -> Result<LtvProblem> {
    let x_i = take_vec(ov, "x_i", 1)?.unwrap_or_else(|| scalar(-1.0));
    let x_f = take_vec(ov, "x_f", 1)?.unwrap_or_else(|| scalar(1.0));
    let a = if split {
        AnalyticMatrix::new("sign(t), split", 1, 1, |_, seg| {
            DMatrix::from_element(1, 1, if seg == 0 { -1.0 } else { 1.0 })
        })
    } else {
        AnalyticMatrix::new("sign(t)", 1, 1, |t, _| {
            DMatrix::from_element(1, 1, if t >= 0.0 { 1.0 } else { -1.0 })
        })
    };
    // F(1) = 1 gives h = x_F − x_I, and G(t) = e^{1−|t|} peaks at e, so the
    // optimum is |h| / e.
    let reference = (x_f[0] - x_i[0]).abs() / std::f64::consts::E;
    Ok(LtvProblem {
        name: if split { "sign_switch_split" } else { "sign_switch" }.into(),
        n: 1,
        m: 1,
        a: MatrixTimeFunction::Analytic(a),
        b: MatrixTimeFunction::Constant(DMatrix::from_element(1, 1, 1.0)),
        t_i: -1.0,
        t_f: 1.0,
        x_i,
        x_f,
        breakpoints: if split { vec![0.0] } else { vec![] },
        reference_cost: Some(reference),
    })
}

fn double_integrator(ov: &mut Overrides) -> Result<LtvProblem> {
    let x_i = take_vec(ov, "x_i", 2)?;
    let x_f = take_vec(ov, "x_f", 2)?;
    let reference = (x_i.is_none() && x_f.is_none()).then_some(2.0);
    Ok(LtvProblem {
        name: "double_integrator".into(),
        n: 2,
        m: 1,
        a: MatrixTimeFunction::Constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])),
        b: MatrixTimeFunction::Constant(DMatrix::from_row_slice(2, 1, &[0.0, 1.0])),
        t_i: 0.0,
        t_f: 1.0,
        x_i: x_i.unwrap_or_else(|| DVector::zeros(2)),
        x_f: x_f.unwrap_or_else(|| DVector::from_vec(vec![1.0, 0.0])),
        breakpoints: vec![],
        reference_cost: reference,
    })
}

/// Orbit parameters of the `prisma` builtin after overrides.
pub fn prisma_orbit(overrides: &Overrides) -> Result<OrbitParams> {
    let mut ov = overrides.clone();
    orbit_from(&mut ov)
}

fn orbit_from(ov: &mut Overrides) -> Result<OrbitParams> {
    let n_bar = take_f64(ov, "n_bar")?;
    let period = take_f64(ov, "period")?;
    let e = take_f64(ov, "e")?.unwrap_or(PRISMA_ECCENTRICITY);
    OrbitParams::new(n_bar, period, e)
}

fn prisma(ov: &mut Overrides) -> Result<LtvProblem> {
    let orbit = orbit_from(ov)?;
    let x_i = take_vec(ov, "x_i", 4)?;
    let x_f = take_vec(ov, "x_f", 4)?.unwrap_or_else(|| DVector::zeros(4));
    let a = AnalyticMatrix::new("tschauner-hempel", 4, 4, move |t, _| {
        // Convergence is guaranteed for e < 1 well within the iteration cap.
        let nu = kepler_nu(&orbit, t).unwrap_or(orbit.n_bar * t);
        tschauner_hempel_a(&orbit, nu)
    });
    let n2 = orbit.n_bar * orbit.n_bar;
    let b = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, n2, 0.0, 0.0, n2]);
    let mut p = LtvProblem {
        name: "prisma".into(),
        n: 4,
        m: 2,
        a: MatrixTimeFunction::Analytic(a),
        b: MatrixTimeFunction::Constant(b.clone()),
        t_i: 0.0,
        t_f: PRISMA_T_F,
        x_i: DVector::zeros(4),
        x_f: x_f.clone(),
        breakpoints: vec![],
        reference_cost: None,
    };
    p.x_i = match x_i {
        Some(v) => v,
        None => {
            // x_I = Φ(0, t_F) x_F − Σ_k Φ(0, t_k) B u_k
            let opts = OdeOptions::default();
            let mut x0 = ltv::propagate(&p, 0, x_f.as_slice(), p.t_f, 0.0, &opts)?;
            for (t, u) in PRISMA_DEFAULT_BURNS {
                let jump = &b * DVector::from_row_slice(&u);
                let back = ltv::propagate(&p, 0, jump.as_slice(), t, 0.0, &opts)?;
                for (x, j) in x0.iter_mut().zip(back) {
                    *x -= j;
                }
            }
            DVector::from_vec(x0)
        }
    };
    Ok(p)
}

/// Number of orbital revolutions over the PRISMA horizon.
pub fn prisma_revolutions(orbit: &OrbitParams) -> f64 {
    PRISMA_T_F / orbit.period
}
