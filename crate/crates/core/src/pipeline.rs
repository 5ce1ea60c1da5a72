//! End-to-end solve: kernel integration, moment SDP, atom extraction and certification.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::extract::{self, ImpulsiveSolution};
use crate::ltv::{self, LtvProblem, MomentData};
use crate::moment::{self, MomentSdp};
use crate::ode::OdeOptions;
use crate::sdp::{self, SdpSolution, SolveOptions, SolveStatus};

/// Largest point count tried by [`auto_degree`].
pub const MAX_POINTS: usize = 512;
/// Target kernel error for [`auto_degree`].
pub const AUTO_TARGET: f64 = 1e-8;
/// Primer plateaus longer than this fraction of the horizon raise a warning.
pub const PLATEAU_FRACTION: f64 = 1e-2;
const PLATEAU_SAMPLES: usize = 2001;

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    /// Chebyshev points per segment.
    pub points: usize,
    pub slack: bool,
    pub ode_tol: f64,
    pub sdp: SolveOptions,
    pub rank_tol: f64,
    /// Tolerance for complementarity, primer sup and terminal error.
    pub cert_tol: f64,
    /// Measures lighter than this fraction of the total mass are not extracted.
    pub mass_floor: f64,
    /// Impulses closer than this fraction of the horizon are merged.
    pub merge_fraction: f64,
    /// Impulse amplitudes below this fraction of the cost are zeroed.
    pub prune_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            points: 16,
            slack: true,
            ode_tol: 1e-12,
            sdp: SolveOptions::default(),
            rank_tol: extract::DEFAULT_RANK_TOL,
            cert_tol: 1e-6,
            mass_floor: 1e-8,
            merge_fraction: 1e-3,
            prune_fraction: 1e-6,
        }
    }
}

impl PipelineConfig {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }
}

/// Moment order used for `d` points: the smallest even number `≥ d`.
pub fn moment_order(points: usize) -> usize {
    points + points % 2
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub md: MomentData,
    pub msdp: MomentSdp,
    pub sdp: SdpSolution,
    pub solution: ImpulsiveSolution,
    pub certified: bool,
    pub elapsed: Duration,
}

impl PipelineRun {
    pub fn order(&self) -> usize {
        self.msdp.order
    }

    /// Relative error against a reference cost.
    pub fn rel_error(&self, reference: f64) -> f64 {
        (self.solution.cost - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
    }
}

/// Doubles the point count from `start` until the kernel error estimate drops
/// below [`AUTO_TARGET`] or [`MAX_POINTS`] is reached.
pub fn auto_degree(p: &LtvProblem, start: usize, ode_tol: f64) -> Result<(usize, f64)> {
    let mut d = start.max(2);
    loop {
        let e = ltv::estimate_error(p, d, ode_tol).map_err(|e| e.in_stage("ltv"))?;
        if e < AUTO_TARGET || d >= MAX_POINTS {
            return Ok((d, e));
        }
        d = (2 * d).min(MAX_POINTS);
    }
}

/// Builds an impulsive solution from the solved moment SDP.
pub fn extract_solution(
    msdp: &MomentSdp,
    sol: &SdpSolution,
    md: &MomentData,
    cfg: &PipelineConfig,
) -> Result<ImpulsiveSolution> {
    let vectors = msdp.moment_vectors(&sol.x);
    let total: f64 = vectors.iter().map(|v| v.mass().max(0.0)).sum();
    let mut atoms = Vec::new();
    let mut warnings = Vec::new();
    for v in &vectors {
        if v.mass() <= cfg.mass_floor * total {
            continue;
        }
        for (t, w) in extract::extract_atoms(v, cfg.rank_tol)? {
            atoms.push((t, v.channel, v.sign.factor() * w));
        }
    }
    let horizon = md.horizon();
    let mut merged = extract::merge_atoms(atoms, md.m, cfg.merge_fraction * horizon.len());
    let gross: f64 = merged.iter().map(|i| i.l1()).sum();
    let floor = cfg.prune_fraction * gross;
    for imp in &mut merged {
        for a in &mut imp.amplitudes {
            if a.abs() <= floor {
                *a = 0.0;
            }
        }
    }
    merged.retain(|i| i.l1() > 0.0);
    let dual_y = msdp.dual_y(sol).as_slice().to_vec();
    let mut out = ImpulsiveSolution::new(merged, dual_y);
    if out.impulses.len() > md.n {
        warnings.push(format!(
            "{} impulse times exceed the state dimension {}",
            out.impulses.len(),
            md.n
        ));
    }
    let primer = extract::primer_vector(md, &out.dual_y)?;
    let plateau = extract::plateau_fraction(&primer, md, PLATEAU_SAMPLES, cfg.cert_tol);
    if plateau > PLATEAU_FRACTION {
        warnings.push(format!(
            "primer stays at unit magnitude over {:.1}% of the horizon; the support may not be unique",
            100.0 * plateau
        ));
    }
    let objective = msdp.cost(sol);
    if (out.cost - objective).abs() > 1e-6 * (1.0 + objective.abs()) {
        warnings.push(format!(
            "extracted cost {:.9e} differs from the SDP objective {:.9e}",
            out.cost, objective
        ));
    }
    out.warnings = warnings;
    Ok(out)
}

/// Whether a certificate meets the acceptance thresholds.
pub fn is_certified(sol: &ImpulsiveSolution, p: &LtvProblem, tol: f64) -> bool {
    let c = &sol.certificate;
    c.complementarity_max <= tol
        && c.primer_sup <= 1.0 + tol
        && c.terminal_error <= tol * (1.0 + p.x_f.norm())
        && c.duality_gap <= 1e-5 * (1.0 + sol.cost)
}

/// Solves an already integrated problem.
pub fn solve_data(p: &LtvProblem, md: MomentData, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let start = Instant::now();
    let order = moment_order(md.points);
    let msdp = moment::assemble(&md, order, cfg.slack).map_err(|e| e.in_stage("moment"))?;
    let sol = sdp::solve(&msdp.sdp, &cfg.sdp).map_err(|e| e.in_stage("sdp"))?;
    if sol.status == SolveStatus::NumericalFailure && sol.primal_residual > 1e-3 {
        return Err(Error::Numerical(format!(
            "no usable iterate (primal residual {:.3e})",
            sol.primal_residual
        ))
        .in_stage("sdp"));
    }
    let mut solution = extract_solution(&msdp, &sol, &md, cfg).map_err(|e| e.in_stage("extract"))?;
    let opts = OdeOptions::with_tol(cfg.ode_tol);
    extract::certify(&mut solution, &md, p, &opts).map_err(|e| e.in_stage("extract"))?;
    let certified = sol.status == SolveStatus::Optimal && is_certified(&solution, p, cfg.cert_tol);
    Ok(PipelineRun {
        md,
        msdp,
        sdp: sol,
        solution,
        certified,
        elapsed: start.elapsed(),
    })
}

/// Runs the full pipeline at `cfg.points` points per segment.
pub fn solve(p: &LtvProblem, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let start = Instant::now();
    p.validate().map_err(|e| e.in_stage("ltv"))?;
    let md = ltv::moment_data(p, cfg.points, cfg.ode_tol).map_err(|e| e.in_stage("ltv"))?;
    let mut run = solve_data(p, md, cfg)?;
    run.elapsed = start.elapsed();
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{builtin, Overrides};

    #[test]
    fn example_a_end_to_end() {
        let p = builtin("scalar_poly", &Overrides::new()).unwrap();
        let run = solve(&p, &PipelineConfig::with_points(8)).unwrap();
        let s = &run.solution;
        assert!((s.cost - 4.0).abs() < 1e-6, "{}", s.cost);
        assert_eq!(s.impulses.len(), 1);
        assert!((s.impulses[0].t - 0.5).abs() < 1e-4);
        assert!((s.dual_y[0] - 4.0).abs() < 1e-5);
        assert!(run.certified, "{:?}", s.certificate);
    }

    #[test]
    fn double_integrator_end_to_end() {
        let p = builtin("double_integrator", &Overrides::new()).unwrap();
        let run = solve(&p, &PipelineConfig::with_points(4)).unwrap();
        let s = &run.solution;
        assert!((s.cost - 2.0).abs() < 1e-6, "{}", s.cost);
        assert_eq!(s.impulses.len(), 2, "{:?}", s.impulses);
        assert!(s.impulses[0].t.abs() < 1e-4 && (s.impulses[0].amplitudes[0] - 1.0).abs() < 1e-4);
        assert!((s.impulses[1].t - 1.0).abs() < 1e-4 && (s.impulses[1].amplitudes[0] + 1.0).abs() < 1e-4);
        assert!(run.certified, "{:?}", s.certificate);
    }

    #[test]
    fn moment_order_is_even() {
        assert_eq!(moment_order(8), 8);
        assert_eq!(moment_order(9), 10);
    }
}
