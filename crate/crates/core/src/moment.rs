//! Moment relaxation of the minimum-fuel problem as a block SDP, and the
//! fixed-grid LP restriction used as an upper-bound oracle.
//!
//! Each signed channel measure on a segment is represented by its Chebyshev
//! moments `y_k = ⟨T_k(s), μ⟩`, with `s` the segment variable mapped to [-1, 1].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cheb::{ChebSeries, Interval};
use crate::error::{Error, Result};
use crate::extract::Impulse;
use crate::ltv::MomentData;
use crate::sdp::{self, AffineForm, BlockSdp, LmiBlock, SdpSolution, SolveOptions, SolveStatus, SparseSym};

/// Band widths below this fraction of the row kernel magnitude are raised to it.
pub const MIN_SLACK: f64 = 1e-8;

/// Grid-LP amplitudes below this fraction of the cost are reported as zero.
pub const GRID_PRUNE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Truncated Chebyshev moments `y_0..y_D` of one nonnegative measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub y: Vec<f64>,
    pub segment: usize,
    pub channel: usize,
    pub sign: Sign,
    pub domain: Interval,
}

impl MomentVector {
    pub fn order(&self) -> usize {
        self.y.len().saturating_sub(1)
    }

    pub fn mass(&self) -> f64 {
        self.y.first().copied().unwrap_or(0.0)
    }

    /// Moments of `Σ w_i δ_{s_i}` (locations in the reference variable).
    pub fn from_atoms(atoms: &[(f64, f64)], order: usize, domain: Interval) -> Self {
        let mut y = vec![0.0; order + 1];
        for &(s, w) in atoms {
            let th = s.clamp(-1.0, 1.0).acos();
            for (k, yk) in y.iter_mut().enumerate() {
                *yk += w * (k as f64 * th).cos();
            }
        }
        Self {
            y,
            segment: 0,
            channel: 0,
            sign: Sign::Plus,
            domain,
        }
    }
}

/// Chebyshev coefficients of the weights `1 − s²`, `1 + s`, `1 − s`.
const W_INTERVAL: [f64; 3] = [0.5, 0.0, -0.5];
const W_LOWER: [f64; 2] = [1.0, 1.0];
const W_UPPER: [f64; 2] = [1.0, -1.0];
const W_ONE: [f64; 1] = [1.0];

/// Coefficient matrices of the localizing matrix of `weight` with `size` rows,
/// as a map from moment index to a sparse symmetric matrix.
///
/// Entry `(i, j)` is `⟨T_i T_j w, μ⟩` expanded with `T_a T_b = ½(T_{a+b} + T_{|a−b|})`.
fn localizing_terms(weight: &[f64], size: usize) -> Vec<(usize, SparseSym)> {
    let mut terms: Vec<(usize, SparseSym)> = Vec::new();
    let mut add = |k: usize, i: usize, j: usize, v: f64| {
        if let Some(t) = terms.iter_mut().find(|t| t.0 == k) {
            t.1.add(i, j, v);
        } else {
            let mut s = SparseSym::new();
            s.add(i, j, v);
            terms.push((k, s));
        }
    };
    for i in 0..size {
        for j in i..size {
            for (l, &wl) in weight.iter().enumerate() {
                if wl == 0.0 {
                    continue;
                }
                // T_i T_j T_l = ¼ Σ over the four index combinations.
                for a in [i + j, i.abs_diff(j)] {
                    add(a + l, i, j, 0.25 * wl);
                    add(a.abs_diff(l), i, j, 0.25 * wl);
                }
            }
        }
    }
    terms.retain(|t| !t.1.is_empty());
    terms.sort_by_key(|t| t.0);
    terms
}

fn numeric(terms: &[(usize, SparseSym)], size: usize, y: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for (k, s) in terms {
        s.add_to(&mut m, y.get(*k).copied().unwrap_or(0.0));
    }
    m
}

/// Weights and sizes whose localizing matrices characterize moment sequences
/// of order `order` on [-1, 1].
fn cone_weights(order: usize) -> Vec<(&'static [f64], usize)> {
    let k = order / 2;
    let list: Vec<(&'static [f64], usize)> = if order.is_multiple_of(2) {
        vec![(&W_ONE, k + 1), (&W_INTERVAL, k)]
    } else {
        vec![(&W_LOWER, k + 1), (&W_UPPER, k + 1)]
    };
    list.into_iter().filter(|(_, s)| *s > 0).collect()
}

/// `M[i][j] = ½(y_{i+j} + y_{|i−j|})`, size `⌊D/2⌋ + 1`.
pub fn moment_matrix(y: &MomentVector) -> DMatrix<f64> {
    let size = y.order() / 2 + 1;
    numeric(&localizing_terms(&W_ONE, size), size, &y.y)
}

/// Localizing matrix for the weight `1 − s²`, size `⌊D/2⌋`.
pub fn localizing_matrix(y: &MomentVector) -> DMatrix<f64> {
    let size = y.order() / 2;
    numeric(&localizing_terms(&W_INTERVAL, size), size, &y.y)
}

/// All matrices constrained PSD for a measure of this order.
pub fn cone_matrices(y: &MomentVector) -> Vec<DMatrix<f64>> {
    cone_weights(y.order())
        .into_iter()
        .map(|(w, size)| numeric(&localizing_terms(w, size), size, &y.y))
        .collect()
}

/// Monomial moments `⟨t^k, μ⟩`, `k = 0..=K`, in physical time.
pub fn monomial_moments(y: &MomentVector, max_power: usize) -> Result<Vec<f64>> {
    if max_power > y.order() {
        return Err(Error::DegreeMismatch {
            degree: max_power,
            order: y.order(),
        });
    }
    let t = ChebSeries::identity(y.domain);
    let mut pow = ChebSeries::constant(1.0, y.domain);
    let mut out = Vec::with_capacity(max_power + 1);
    for _ in 0..=max_power {
        out.push(pow.coeffs().iter().zip(&y.y).map(|(c, m)| c * m).sum());
        pow = pow.multiply(&t)?;
    }
    Ok(out)
}

/// Hankel matrix `[⟨t^{i+j}, μ⟩]` of size `⌊D/2⌋ + 1`.
pub fn monomial_moment_matrix(y: &MomentVector) -> Result<DMatrix<f64>> {
    let size = y.order() / 2 + 1;
    let m = monomial_moments(y, 2 * (size - 1))?;
    Ok(DMatrix::from_fn(size, size, |i, j| m[i + j]))
}

/// Layout of one measure inside the SDP variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSlot {
    pub segment: usize,
    pub channel: usize,
    pub sign: Sign,
    pub offset: usize,
    pub domain: Interval,
}

/// How the moment constraints `∫G dμ = h` were posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    Equality,
    /// Two one-sided inequalities per row; rows `2i` (lower) and `2i+1` (upper).
    Band,
}

/// A moment SDP together with the bookkeeping to read its solution back.
#[derive(Debug, Clone)]
pub struct MomentSdp {
    pub sdp: BlockSdp,
    pub order: usize,
    pub measures: Vec<MeasureSlot>,
    /// Variables are moments divided by this factor.
    pub mass_scale: f64,
    pub mode: ConstraintMode,
    pub n: usize,
}

impl MomentSdp {
    pub fn moment_vectors(&self, x: &[f64]) -> Vec<MomentVector> {
        self.measures
            .iter()
            .map(|m| MomentVector {
                y: x[m.offset..=m.offset + self.order]
                    .iter()
                    .map(|v| v * self.mass_scale)
                    .collect(),
                segment: m.segment,
                channel: m.channel,
                sign: m.sign,
                domain: m.domain,
            })
            .collect()
    }

    pub fn cost(&self, sol: &SdpSolution) -> f64 {
        sol.objective * self.mass_scale
    }

    /// Dual vector of the moment constraints (the primer-vector coefficients).
    pub fn dual_y(&self, sol: &SdpSolution) -> DVector<f64> {
        match self.mode {
            ConstraintMode::Equality => DVector::from_column_slice(&sol.eq_multipliers),
            ConstraintMode::Band => DVector::from_fn(self.n, |i, _| {
                sol.ineq_multipliers[2 * i] - sol.ineq_multipliers[2 * i + 1]
            }),
        }
    }

    pub fn total_mass(&self, x: &[f64]) -> f64 {
        self.measures
            .iter()
            .map(|m| x[m.offset] * self.mass_scale)
            .sum()
    }
}

/// Upper bound on `max |g_{i,j}(t)|` from coefficient sums.
fn kernel_scale(md: &MomentData) -> f64 {
    md.kernel
        .iter()
        .flat_map(|k| k.entries.iter())
        .map(|s| s.coeffs().iter().map(|c| c.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Upper bound on `max_j |g_{i,j}(t)|` for each row `i`.
fn row_scales(md: &MomentData) -> Vec<f64> {
    (0..md.n)
        .map(|i| {
            let mut worst = 0.0_f64;
            for k in &md.kernel {
                for j in 0..md.m {
                    worst = worst.max(k.g(i, j).coeffs().iter().map(|c| c.abs()).sum());
                }
            }
            worst
        })
        .collect()
}

/// Row band widths `e_i`, floored at [`MIN_SLACK`] relative to the row scale,
/// or `None` when every row is already below that floor.
fn band_widths(md: &MomentData) -> Option<Vec<f64>> {
    let scales = row_scales(md);
    let rows: Vec<f64> = (0..md.n)
        .map(|i| md.e_rows.get(i).copied().unwrap_or(md.e_d))
        .collect();
    if rows.iter().zip(&scales).all(|(e, s)| *e <= MIN_SLACK * s) {
        return None;
    }
    Some(rows.iter().zip(&scales).map(|(e, s)| e.max(MIN_SLACK * s)).collect())
}

/// Estimate of the mass scale: `|h|∞ / max |g|`, or 1 when degenerate.
fn mass_scale(md: &MomentData) -> f64 {
    let gmax = kernel_scale(md);
    let hmax = md.h.amax();
    if gmax > 0.0 && hmax > 0.0 {
        hmax / gmax
    } else {
        1.0
    }
}

/// Builds the moment SDP of order `order`.
///
/// With `slack`, each row becomes `|lhs − h_i| ≤ e_i (‖B‖|x_F| + Σ masses)`
/// with `e_i` the row's kernel error, floored at [`MIN_SLACK`] times the row's
/// kernel magnitude; if every row is below that floor the rows stay equalities.
pub fn assemble(md: &MomentData, order: usize, slack: bool) -> Result<MomentSdp> {
    for k in &md.kernel {
        let deg = k.degree();
        if deg > order {
            return Err(Error::DegreeMismatch { degree: deg, order });
        }
    }
    let sigma = mass_scale(md);
    let len = order + 1;
    let mut measures = Vec::new();
    for (si, k) in md.kernel.iter().enumerate() {
        for j in 0..md.m {
            for sign in [Sign::Plus, Sign::Minus] {
                measures.push(MeasureSlot {
                    segment: si,
                    channel: j,
                    sign,
                    offset: measures.len() * len,
                    domain: k.domain,
                });
            }
        }
    }
    let num_vars = measures.len() * len;
    let mut objective = vec![0.0; num_vars];
    for m in &measures {
        objective[m.offset] = 1.0;
    }

    let templates: Vec<(usize, Vec<(usize, SparseSym)>)> = cone_weights(order)
        .into_iter()
        .map(|(w, size)| (size, localizing_terms(w, size)))
        .collect();
    let mut blocks = Vec::with_capacity(measures.len() * templates.len());
    for m in &measures {
        for (size, terms) in &templates {
            let mut b = LmiBlock::new(*size);
            b.terms = terms
                .iter()
                .map(|(k, s)| (m.offset + k, s.clone()))
                .collect();
            blocks.push(b);
        }
    }

    let rows: Vec<Vec<(usize, f64)>> = (0..md.n)
        .map(|i| {
            let mut row = Vec::new();
            for m in &measures {
                let g = md.kernel[m.segment].g(i, m.channel);
                for (k, &c) in g.coeffs().iter().enumerate().take(len) {
                    if c != 0.0 {
                        row.push((m.offset + k, m.sign.factor() * c));
                    }
                }
            }
            row
        })
        .collect();

    let widths = if slack { band_widths(md) } else { None };
    let use_band = widths.is_some();
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let hi = md.h[i] / sigma;
        if let Some(w) = &widths {
            let e = w[i];
            let base = e * md.b_norm * md.xf_norm / sigma;
            let mass_terms: Vec<(usize, f64)> = measures.iter().map(|m| (m.offset, e)).collect();
            let mut lower = AffineForm {
                coeffs: row.clone(),
                constant: -hi + base,
            };
            lower.coeffs.extend(mass_terms.iter().copied());
            let mut upper = AffineForm {
                coeffs: row.iter().map(|&(k, c)| (k, -c)).collect(),
                constant: hi + base,
            };
            upper.coeffs.extend(mass_terms);
            inequalities.push(merge_coeffs(lower));
            inequalities.push(merge_coeffs(upper));
        } else {
            equalities.push(AffineForm {
                coeffs: row,
                constant: -hi,
            });
        }
    }

    Ok(MomentSdp {
        sdp: BlockSdp {
            num_vars,
            objective,
            blocks,
            equalities,
            inequalities,
        },
        order,
        measures,
        mass_scale: sigma,
        mode: if use_band {
            ConstraintMode::Band
        } else {
            ConstraintMode::Equality
        },
        n: md.n,
    })
}

fn merge_coeffs(mut f: AffineForm) -> AffineForm {
    f.coeffs.sort_by_key(|c| c.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(f.coeffs.len());
    for (k, c) in f.coeffs {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += c,
            _ => out.push((k, c)),
        }
    }
    f.coeffs = out;
    f
}

/// Result of the fixed-grid LP.
#[derive(Debug, Clone, Serialize)]
pub struct GridLpResult {
    pub cost: f64,
    pub impulses: Vec<Impulse>,
    pub dual_y: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// Minimum-fuel LP over `N` evenly spaced impulse times (endpoints included).
pub fn grid_lp_restriction(md: &MomentData, n_grid: usize, opts: &SolveOptions) -> Result<GridLpResult> {
    if n_grid < md.n || n_grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size {n_grid} must be at least max(n, 2) = {}",
            md.n.max(2)
        )));
    }
    grid_lp_at_times(md, &md.horizon().linspace(n_grid), opts)
}

/// Minimum-fuel LP with impulses restricted to the given times.
pub fn grid_lp_at_times(md: &MomentData, times: &[f64], opts: &SolveOptions) -> Result<GridLpResult> {
    let n = md.n;
    let m = md.m;
    let gs: Vec<DMatrix<f64>> = times.iter().map(|&t| md.g_at(t)).collect();

    // Columns of the constraint matrix, one per (time, channel).
    let ncols = times.len() * m;
    let a = DMatrix::from_fn(n, ncols, |i, c| gs[c / m][(c % m, i)]);
    let svd = a.clone().svd(true, false);
    let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let gscale = kernel_scale(md);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-12 * gscale)
        .collect();
    let q = DMatrix::from_fn(n, keep.len(), |i, c| u[(i, keep[c])]);
    let proj = &q * (q.transpose() * &md.h);
    if (&proj - &md.h).norm() > 1e-9 * (1.0 + md.h.norm()) {
        return Err(Error::Infeasible(
            "target vector is not reachable with impulses on this grid".into(),
        ));
    }
    let qa = q.transpose() * &a;
    let qh = q.transpose() * &md.h;

    let hmax = md.h.amax();
    let amax = a.amax();
    let sigma = if hmax > 0.0 && amax > 0.0 { hmax / amax } else { 1.0 };

    // Variables: u⁺ at 2c, u⁻ at 2c+1.
    let num_vars = 2 * ncols;
    let equalities = (0..qa.nrows())
        .map(|r| {
            let mut coeffs = Vec::with_capacity(num_vars);
            for c in 0..ncols {
                let v = qa[(r, c)];
                if v != 0.0 {
                    coeffs.push((2 * c, v));
                    coeffs.push((2 * c + 1, -v));
                }
            }
            AffineForm {
                coeffs,
                constant: -qh[r] / sigma,
            }
        })
        .collect();
    let inequalities = (0..num_vars)
        .map(|k| AffineForm {
            coeffs: vec![(k, 1.0)],
            constant: 0.0,
        })
        .collect();
    let lp = BlockSdp {
        num_vars,
        objective: vec![1.0; num_vars],
        blocks: Vec::new(),
        equalities,
        inequalities,
    };
    let sol = sdp::solve(&lp, opts)?;
    if sol.status == SolveStatus::NumericalFailure {
        return Err(Error::Numerical("grid LP solve failed".into()));
    }
    let cost = sol.objective * sigma;
    let dual_y = (&q * DVector::from_column_slice(&sol.eq_multipliers)).as_slice().to_vec();
    // Interior-point iterates leave small mass next to the optimal atoms.
    let thresh = GRID_PRUNE * cost.abs();
    let mut impulses = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        let amps: Vec<f64> = (0..m)
            .map(|j| {
                let c = ti * m + j;
                sigma * (sol.x[2 * c] - sol.x[2 * c + 1])
            })
            .map(|v| if v.abs() > thresh { v } else { 0.0 })
            .collect();
        if amps.iter().any(|v| *v != 0.0) {
            impulses.push(Impulse { t, amplitudes: amps });
        }
    }
    Ok(GridLpResult {
        cost,
        impulses,
        dual_y,
        status: sol.status,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltv::KernelSegment;

    fn approx(a: &DMatrix<f64>, b: &[&[f64]], tol: f64) -> bool {
        a.nrows() == b.len()
            && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| (a[(i, j)] - b[i][j]).abs() <= tol))
    }

    fn mv(y: Vec<f64>) -> MomentVector {
        MomentVector {
            y,
            segment: 0,
            channel: 0,
            sign: Sign::Plus,
            domain: Interval::reference(),
        }
    }

    /// Scalar problem with kernel `g` on one segment.
    fn scalar_data(g: ChebSeries, h: f64) -> MomentData {
        let domain = g.domain();
        MomentData {
            n: 1,
            m: 1,
            kernel: vec![KernelSegment {
                domain,
                n: 1,
                m: 1,
                entries: vec![g],
            }],
            h: DVector::from_element(1, h),
            e_d: 0.0,
            e_rows: vec![0.0],
            b_norm: 0.25,
            xf_norm: 1.0,
            points: 3,
        }
    }

    fn example_a() -> MomentData {
        let dom = Interval::new(0.0, 1.0).unwrap();
        scalar_data(
            ChebSeries::interpolate(|t| t * (1.0 - t), 3, dom).unwrap(),
            1.0,
        )
    }

    #[test]
    fn moment_matrix_order_two() {
        let m = moment_matrix(&mv(vec![3.0, 5.0, 7.0]));
        assert!(approx(&m, &[&[3.0, 5.0], &[5.0, 5.0]], 1e-15));
    }

    #[test]
    fn dirac_at_centre() {
        let y = MomentVector::from_atoms(&[(0.0, 4.0)], 2, Interval::reference());
        assert!(approx(&moment_matrix(&y), &[&[4.0, 0.0], &[0.0, 0.0]], 1e-14));
        assert!(approx(&localizing_matrix(&y), &[&[4.0]], 1e-14));
    }

    #[test]
    fn localizing_examples() {
        assert!(approx(&localizing_matrix(&mv(vec![3.0, 1.0, 1.0])), &[&[1.0]], 1e-15));
        let edge = MomentVector::from_atoms(&[(1.0, 2.5)], 6, Interval::reference());
        assert!(localizing_matrix(&edge).amax() < 1e-14);
        // Uniform measure: ∫T_k = 2/(1−k²) for even k.
        let y: Vec<f64> = (0..5)
            .map(|k| if k % 2 == 1 { 0.0 } else { 2.0 / (1.0 - (k * k) as f64) })
            .collect();
        let l = localizing_matrix(&mv(y[..3].to_vec()));
        assert!((l[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn localizing_matches_quadrature() {
        // ⟨T_i T_j (1−s²), μ⟩ for a discrete measure, checked entrywise.
        let atoms = [(-0.7, 0.3), (0.1, 1.2), (0.55, 0.8), (0.95, 0.4)];
        let y = MomentVector::from_atoms(&atoms, 8, Interval::reference());
        let l = localizing_matrix(&y);
        for i in 0..4 {
            for j in 0..4 {
                let direct: f64 = atoms
                    .iter()
                    .map(|&(s, w): &(f64, f64)| {
                        let th = s.acos();
                        w * (i as f64 * th).cos() * (j as f64 * th).cos() * (1.0 - s * s)
                    })
                    .sum();
                assert!((l[(i, j)] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn monomial_regression() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let y = MomentVector::from_atoms(&[(0.0, 4.0)], 2, dom);
        let m = monomial_moment_matrix(&y).unwrap();
        assert!(approx(&m, &[&[4.0, 2.0], &[2.0, 1.0]], 1e-14));
    }

    #[test]
    fn example_a_structure() {
        let md = example_a();
        let p = assemble(&md, 2, false).unwrap();
        assert_eq!(p.measures.len(), 2);
        assert_eq!(p.sdp.equalities.len(), 1);
        let dims: Vec<usize> = p.sdp.blocks.iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![2, 1, 2, 1]);
        let mass: Vec<usize> = (0..p.sdp.num_vars).filter(|&k| p.sdp.objective[k] != 0.0).collect();
        assert_eq!(mass, vec![0, 3]);
        // Zero-width band is posed as the equality.
        let q = assemble(&md, 2, true).unwrap();
        assert_eq!(q.mode, ConstraintMode::Equality);
        assert_eq!(q.sdp, p.sdp);
    }

    #[test]
    fn example_a_solves_to_four() {
        let md = example_a();
        let p = assemble(&md, 2, false).unwrap();
        let sol = sdp::solve(&p.sdp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((p.cost(&sol) - 4.0).abs() < 1e-6);
        assert!((p.dual_y(&sol)[0] - 4.0).abs() < 1e-5);
    }

    #[test]
    fn odd_order_uses_linear_weights() {
        let md = example_a();
        let p = assemble(&md, 3, false).unwrap();
        let dims: Vec<usize> = p.sdp.blocks.iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![2, 2, 2, 2]);
        let sol = sdp::solve(&p.sdp, &SolveOptions::default()).unwrap();
        assert!((p.cost(&sol) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let md = example_a();
        assert!(matches!(
            assemble(&md, 1, false),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn grid_lp_example_a() {
        let md = example_a();
        let r = grid_lp_restriction(&md, 1001, &SolveOptions::default()).unwrap();
        assert!((r.cost - 4.0).abs() < 1e-6, "{}", r.cost);
        let main = r
            .impulses
            .iter()
            .max_by(|a, b| a.l1().total_cmp(&b.l1()))
            .unwrap();
        assert!((main.t - 0.5).abs() < 1e-12);
        assert!((main.amplitudes[0] - 4.0).abs() < 1e-3);
    }

    #[test]
    fn grid_lp_unreachable() {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let md = scalar_data(ChebSeries::interpolate(|t| t * (1.0 - t), 3, dom).unwrap(), 1.0);
        // Only the endpoints, where the kernel vanishes.
        assert!(matches!(
            grid_lp_at_times(&md, &[0.0, 1.0], &SolveOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }
}
