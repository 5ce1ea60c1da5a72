//! Atom extraction from solved moments, primer-vector certificates, and
//! forward simulation of impulsive controls.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cheb::ChebSeries;
use crate::error::{Error, Result};
use crate::ltv::{self, LtvProblem, MomentData};
use crate::moment::{moment_matrix, MomentVector};
use crate::ode::OdeOptions;

pub const DEFAULT_RANK_TOL: f64 = 1e-6;
/// Atoms lighter than this fraction of the measure mass are dropped.
pub const PRUNE_FRACTION: f64 = 1e-6;
const DOMAIN_SLACK: f64 = 1e-6;

/// A state jump `x ← x + B(t) a` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub t: f64,
    pub amplitudes: Vec<f64>,
}

impl Impulse {
    pub fn l1(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.abs()).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `max_j sup_t |p_j(t)|`.
    pub primer_sup: f64,
    /// Largest `|1 − sign(a_j) p_j(t_k)|` over nonzero amplitudes.
    pub complementarity_max: f64,
    /// `|x(t_F) − x_F|₂` from forward simulation.
    pub terminal_error: f64,
    /// `hᵀy`.
    pub dual_objective: f64,
    /// `|cost − hᵀy|`.
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulsiveSolution {
    pub impulses: Vec<Impulse>,
    pub cost: f64,
    pub dual_y: Vec<f64>,
    pub certificate: Certificate,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ImpulsiveSolution {
    pub fn new(mut impulses: Vec<Impulse>, dual_y: Vec<f64>) -> Self {
        impulses.sort_by(|a, b| a.t.total_cmp(&b.t));
        let cost = impulses.iter().map(Impulse::l1).sum();
        Self {
            impulses,
            cost,
            dual_y,
            certificate: Certificate::default(),
            warnings: Vec::new(),
        }
    }
}

/// Atoms `(t, w)` of the measure whose Chebyshev moments are `y`.
///
/// Locations are the eigenvalues of multiplication by `s` compressed onto the
/// range of the moment matrix; weights are a least-squares fit to all moments.
pub fn extract_atoms(y: &MomentVector, rank_tol: f64) -> Result<Vec<(f64, f64)>> {
    let y0 = y.mass();
    if y.y.iter().all(|v| *v == 0.0) || y0 <= 0.0 {
        return Ok(Vec::new());
    }
    let full = moment_matrix(y);
    let min_eig = full.symmetric_eigenvalues().min();
    if min_eig < -1e-6 * y0 {
        return Err(Error::NotPsd { min_eig });
    }
    let order = y.order();
    // Size K blocks so that ⟨s T_i T_j⟩ needs moments up to 2K − 1 ≤ D.
    let k = order.div_ceil(2).max(1);
    let at = |i: usize| y.y.get(i).copied().unwrap_or(0.0);
    let m0 = DMatrix::from_fn(k, k, |i, j| 0.5 * (at(i + j) + at(i.abs_diff(j))));
    let m1 = DMatrix::from_fn(k, k, |i, j| {
        // s T_i T_j = ¼ (T_{i+j+1} + T_{|i+j−1|} + T_{|i−j|+1} + T_{||i−j|−1|})
        let a = i + j;
        let b = i.abs_diff(j);
        0.25 * (at(a + 1) + at(a.abs_diff(1)) + at(b + 1) + at(b.abs_diff(1)))
    });
    let eig = m0.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    if lmax <= 0.0 {
        return Ok(Vec::new());
    }
    let keep: Vec<usize> = (0..k)
        .filter(|&i| eig.eigenvalues[i] >= rank_tol * lmax)
        .collect();
    let r = keep.len();
    let basis = DMatrix::from_fn(k, r, |i, c| {
        eig.eigenvectors[(i, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
    });
    let mut x = basis.transpose() * &m1 * &basis;
    x = 0.5 * (&x + x.transpose());
    let mut locs: Vec<f64> = x.symmetric_eigenvalues().iter().copied().collect();
    for s in &mut locs {
        if s.abs() > 1.0 + DOMAIN_SLACK {
            return Err(Error::AtomOutsideDomain { s: *s });
        }
        *s = s.clamp(-1.0, 1.0);
    }
    locs.sort_by(f64::total_cmp);

    let v = DMatrix::from_fn(order + 1, r, |kk, a| (kk as f64 * locs[a].acos()).cos());
    let rhs = DVector::from_column_slice(&y.y);
    let w = v
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(format!("atom weight fit: {e}")))?;
    Ok(locs
        .iter()
        .zip(w.iter())
        .filter(|(_, &w)| w >= PRUNE_FRACTION * y0)
        .map(|(&s, &w)| (y.domain.from_reference(s), w))
        .collect())
}

/// Primer vector `p_j = Σ_i y_i g_{i,j}` per segment and channel.
#[derive(Debug, Clone)]
pub struct PrimerVector {
    /// `segments[s][j]`.
    pub segments: Vec<Vec<ChebSeries>>,
    /// `sup_t |p_j(t)|` per channel.
    pub sup: Vec<f64>,
    /// Where each channel attains its sup.
    pub argsup: Vec<f64>,
}

impl PrimerVector {
    pub fn eval(&self, md: &MomentData, t: f64) -> Vec<f64> {
        self.segments[md.segment_of(t)]
            .iter()
            .map(|p| p.evaluate(t))
            .collect()
    }

    pub fn max_sup(&self) -> f64 {
        self.sup.iter().copied().fold(0.0, f64::max)
    }
}

pub fn primer_vector(md: &MomentData, dual_y: &[f64]) -> Result<PrimerVector> {
    if dual_y.len() != md.n {
        return Err(Error::InvalidArgument(format!(
            "dual vector has length {}, expected {}",
            dual_y.len(),
            md.n
        )));
    }
    let mut segments = Vec::with_capacity(md.kernel.len());
    let mut sup = vec![0.0_f64; md.m];
    let mut argsup = vec![md.horizon().a; md.m];
    for k in &md.kernel {
        let mut chans = Vec::with_capacity(md.m);
        for (j, (sj, aj)) in sup.iter_mut().zip(argsup.iter_mut()).enumerate() {
            let mut p = ChebSeries::zero(k.domain);
            for (i, &yi) in dual_y.iter().enumerate() {
                p = p.axpy(yi, k.g(i, j))?;
            }
            let (val, t) = p.sup_norm();
            if val > *sj {
                *sj = val;
                *aj = t;
            }
            chans.push(p);
        }
        segments.push(chans);
    }
    Ok(PrimerVector {
        segments,
        sup,
        argsup,
    })
}

/// Longest stretch, as a fraction of the horizon, over which some primer
/// channel stays within `tol` of unit magnitude (sampled on `samples` points).
pub fn plateau_fraction(primer: &PrimerVector, md: &MomentData, samples: usize, tol: f64) -> f64 {
    let horizon = md.horizon();
    let times = horizon.linspace(samples.max(2));
    let step = horizon.len() / (times.len() - 1) as f64;
    let mut worst = 0usize;
    for j in 0..md.m {
        let mut run = 0usize;
        for &t in &times {
            if primer.eval(md, t)[j].abs() >= 1.0 - tol {
                run += 1;
                worst = worst.max(run);
            } else {
                run = 0;
            }
        }
    }
    (worst.saturating_sub(1) as f64 * step) / horizon.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplementarityReport {
    /// `(t, channel, |1 − sign(a_j) p_j(t)|)` for every nonzero amplitude.
    pub residuals: Vec<(f64, usize, f64)>,
    pub max_residual: f64,
    pub primer_sup: f64,
    pub passed: bool,
}

pub fn check_complementarity(
    sol: &ImpulsiveSolution,
    md: &MomentData,
    tol: f64,
) -> Result<ComplementarityReport> {
    let primer = primer_vector(md, &sol.dual_y)?;
    let mut residuals = Vec::new();
    for imp in &sol.impulses {
        let p = primer.eval(md, imp.t);
        for (j, &a) in imp.amplitudes.iter().enumerate() {
            if a != 0.0 {
                residuals.push((imp.t, j, (1.0 - a.signum() * p[j]).abs()));
            }
        }
    }
    let max_residual = residuals.iter().map(|r| r.2).fold(0.0, f64::max);
    let primer_sup = primer.max_sup();
    Ok(ComplementarityReport {
        passed: max_residual <= tol && primer_sup <= 1.0 + tol,
        residuals,
        max_residual,
        primer_sup,
    })
}

/// States at the requested (ascending) times under the impulsive control.
/// Jumps at `t_k` are applied on reaching `t_k`, so samples there are post-jump.
pub fn simulate_at(
    sol: &ImpulsiveSolution,
    p: &LtvProblem,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<DVector<f64>>> {
    let mut x = p.x_i.as_slice().to_vec();
    let mut t = p.t_i;
    let mut out = Vec::with_capacity(times.len());
    let mut imps = sol.impulses.iter().peekable();
    for &ts in times {
        while let Some(imp) = imps.peek() {
            if imp.t > ts {
                break;
            }
            x = ltv::flow(p, &x, t, imp.t, opts)?;
            t = imp.t;
            let b = p.b.eval(imp.t, p.segment_of(imp.t));
            let dx = b * DVector::from_column_slice(&imp.amplitudes);
            for (xi, d) in x.iter_mut().zip(dx.iter()) {
                *xi += d;
            }
            imps.next();
        }
        x = ltv::flow(p, &x, t, ts, opts)?;
        t = ts;
        out.push(DVector::from_column_slice(&x));
    }
    Ok(out)
}

/// `x(t_F) − x_F` after applying all impulses.
pub fn simulate(sol: &ImpulsiveSolution, p: &LtvProblem, opts: &OdeOptions) -> Result<DVector<f64>> {
    let mut states = simulate_at(sol, p, &[p.t_f], opts)?;
    Ok(states.pop().expect("one sample") - &p.x_f)
}

/// Fills `sol.certificate` from the primer vector and a forward simulation.
pub fn certify(
    sol: &mut ImpulsiveSolution,
    md: &MomentData,
    p: &LtvProblem,
    opts: &OdeOptions,
) -> Result<ComplementarityReport> {
    let report = check_complementarity(sol, md, 0.0)?;
    let err = simulate(sol, p, opts)?;
    let dual_objective: f64 = md.h.iter().zip(&sol.dual_y).map(|(h, y)| h * y).sum();
    sol.certificate = Certificate {
        primer_sup: report.primer_sup,
        complementarity_max: report.max_residual,
        terminal_error: err.norm(),
        dual_objective,
        duality_gap: (sol.cost - dual_objective).abs(),
    };
    Ok(report)
}

/// Merges signed per-channel atoms `(t, channel, amplitude)` whose times lie
/// within `merge_tol`, summing amplitudes.
pub fn merge_atoms(mut atoms: Vec<(f64, usize, f64)>, m: usize, merge_tol: f64) -> Vec<Impulse> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for (t, j, a) in atoms {
        match out.last_mut() {
            Some((tw, w, amps)) if (t - *tw / *w).abs() <= merge_tol => {
                *tw += t * a.abs();
                *w += a.abs();
                amps[j] += a;
            }
            _ => {
                let mut amps = vec![0.0; m];
                amps[j] = a;
                out.push((t * a.abs(), a.abs(), amps));
            }
        }
    }
    out.into_iter()
        .filter(|(_, w, _)| *w > 0.0)
        .map(|(tw, w, amplitudes)| Impulse {
            t: tw / w,
            amplitudes,
        })
        .filter(|imp| imp.amplitudes.iter().any(|a| *a != 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::Interval;
    use crate::ltv::{KernelSegment, MatrixTimeFunction};
    use crate::moment::Sign;

    fn on(dom: Interval, atoms: &[(f64, f64)], order: usize) -> MomentVector {
        let mut y = MomentVector::from_atoms(atoms, order, Interval::reference());
        y.domain = dom;
        y.sign = Sign::Plus;
        y
    }

    fn example_a_data() -> MomentData {
        let dom = Interval::new(0.0, 1.0).unwrap();
        MomentData {
            n: 1,
            m: 1,
            kernel: vec![KernelSegment {
                domain: dom,
                n: 1,
                m: 1,
                entries: vec![ChebSeries::interpolate(|t| t * (1.0 - t), 3, dom).unwrap()],
            }],
            h: DVector::from_element(1, 1.0),
            e_d: 0.0,
            e_rows: vec![0.0],
            b_norm: 0.25,
            xf_norm: 1.0,
            points: 3,
        }
    }

    fn example_a_problem() -> LtvProblem {
        LtvProblem {
            name: "a".into(),
            n: 1,
            m: 1,
            a: MatrixTimeFunction::Constant(DMatrix::zeros(1, 1)),
            b: MatrixTimeFunction::from_monomials(1, 1, &[Interval::new(0.0, 1.0).unwrap()], &[vec![vec![0.0, 1.0, -1.0]]])
                .unwrap(),
            t_i: 0.0,
            t_f: 1.0,
            x_i: DVector::zeros(1),
            x_f: DVector::from_element(1, 1.0),
            breakpoints: vec![],
            reference_cost: Some(4.0),
        }
    }

    #[test]
    fn single_centre_atom() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let atoms = extract_atoms(&on(dom, &[(0.0, 4.0)], 10), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].0 - 0.5).abs() < 1e-12);
        assert!((atoms[0].1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_measure_has_no_atoms() {
        let y = on(Interval::reference(), &[], 6);
        assert!(extract_atoms(&y, DEFAULT_RANK_TOL).unwrap().is_empty());
    }

    #[test]
    fn two_atoms() {
        let y = on(Interval::reference(), &[(-0.3, 1.5), (0.8, 0.5)], 12);
        let atoms = extract_atoms(&y, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].0 + 0.3).abs() < 1e-8 && (atoms[0].1 - 1.5).abs() < 1e-8);
        assert!((atoms[1].0 - 0.8).abs() < 1e-8 && (atoms[1].1 - 0.5).abs() < 1e-8);
    }

    #[test]
    fn endpoint_atom_at_order_two() {
        let y = on(Interval::reference(), &[(1.0, 2.0)], 2);
        let atoms = extract_atoms(&y, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(atoms.len(), 1);
        assert!((atoms[0].0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_psd_is_rejected() {
        let mut y = on(Interval::reference(), &[(0.2, 1.0)], 4);
        y.y[2] = 5.0;
        assert!(matches!(extract_atoms(&y, DEFAULT_RANK_TOL), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn primer_of_example_a() {
        let md = example_a_data();
        let p = primer_vector(&md, &[4.0]).unwrap();
        assert!((p.sup[0] - 1.0).abs() < 1e-12);
        assert!((p.argsup[0] - 0.5).abs() < 1e-8);
        let z = primer_vector(&md, &[0.0]).unwrap();
        assert_eq!(z.sup[0], 0.0);
    }

    #[test]
    fn complementarity_exact_and_perturbed() {
        let md = example_a_data();
        let good = ImpulsiveSolution::new(vec![Impulse { t: 0.5, amplitudes: vec![4.0] }], vec![4.0]);
        let r = check_complementarity(&good, &md, 1e-9).unwrap();
        assert!(r.passed && r.max_residual < 1e-12);
        let bad = ImpulsiveSolution::new(vec![Impulse { t: 0.4, amplitudes: vec![4.0] }], vec![4.0]);
        let r = check_complementarity(&bad, &md, 1e-3).unwrap();
        assert!(!r.passed);
        assert!((r.max_residual - 0.04).abs() < 1e-12);
    }

    #[test]
    fn simulate_example_a() {
        let p = example_a_problem();
        let opts = OdeOptions::default();
        let sol = ImpulsiveSolution::new(vec![Impulse { t: 0.5, amplitudes: vec![4.0] }], vec![4.0]);
        assert!(simulate(&sol, &p, &opts).unwrap().norm() < 1e-12);
        let empty = ImpulsiveSolution::new(vec![], vec![0.0]);
        assert!((simulate(&empty, &p, &opts).unwrap()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_nets_opposite_signs() {
        let imps = merge_atoms(
            vec![(0.5, 0, 3.0), (0.5 + 1e-9, 0, -1.0), (0.9, 1, 2.0)],
            2,
            1e-6,
        );
        assert_eq!(imps.len(), 2);
        assert!((imps[0].amplitudes[0] - 2.0).abs() < 1e-15);
        assert_eq!(imps[1].amplitudes, vec![0.0, 2.0]);
    }

    #[test]
    fn plateau_detection() {
        let md = example_a_data();
        // p = 4 t(1−t) touches 1 only at t = ½.
        let peak = primer_vector(&md, &[4.0]).unwrap();
        assert!(plateau_fraction(&peak, &md, 2001, 1e-6) < 2e-3);
        let mut flat = md.clone();
        flat.kernel[0].entries[0] = ChebSeries::constant(0.25, flat.kernel[0].domain);
        let p = primer_vector(&flat, &[4.0]).unwrap();
        assert!((plateau_fraction(&p, &flat, 2001, 1e-6) - 1.0).abs() < 1e-12);
    }
}
