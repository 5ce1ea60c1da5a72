//! Dense primal-dual interior-point solver for small block SDPs.
//!
//! Problem form (free variables `x`):
//!
//! ```text
//! minimize    cᵀx
//! subject to  F_b(x) = F_{b,0} + Σ_k x_k F_{b,k} ⪰ 0     for every block b
//!             a_iᵀx + e_i = 0                            for every equality i
//!             a_jᵀx + e_j ≥ 0                            for every inequality j
//! ```
//!
//! Inequalities are 1×1 blocks. The dual is
//! `max −Σ_b ⟨Z_b, F_{b,0}⟩ − Σ_i λ_i e_i` subject to
//! `c = Σ_b A_b*(Z_b) + Σ_i λ_i a_i`, `Z_b ⪰ 0`.
//!
//! Search directions use the HKM scaling with a Mehrotra predictor-corrector.
//! The Schur complement is block diagonal over groups of variables that share
//! LMI blocks; scalar constraints spanning several groups, and the equality
//! rows, enter through a small bordered system.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as upper-triangular triplets `(r, c, v)`, `r ≤ c`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v` at `(r, c)` and its mirror.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            e.2 += v;
        } else {
            self.entries.push((r, c, v));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, e| m.max(e.2.abs()))
    }

    fn scale(&mut self, f: f64) {
        for e in &mut self.entries {
            e.2 *= f;
        }
    }

    /// `out += alpha · self`.
    pub fn add_to(&self, out: &mut DMatrix<f64>, alpha: f64) {
        for &(r, c, v) in &self.entries {
            out[(r, c)] += alpha * v;
            if r != c {
                out[(c, r)] += alpha * v;
            }
        }
    }

    /// `tr(self · X)` for any square `X`.
    pub fn trace_with(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * x[(r, r)]
                } else {
                    v * (x[(r, c)] + x[(c, r)])
                }
            })
            .sum()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        self.add_to(&mut m, 1.0);
        m
    }
}

/// An affine symmetric-matrix-valued map required to be positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiBlock {
    pub dim: usize,
    pub constant: SparseSym,
    pub terms: Vec<(usize, SparseSym)>,
}

impl LmiBlock {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: SparseSym::new(),
            terms: Vec::new(),
        }
    }

    /// `F(x)` as a dense matrix.
    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense(self.dim);
        for (k, f) in &self.terms {
            f.add_to(&mut m, x[*k]);
        }
        m
    }

    fn linear_part(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (k, f) in &self.terms {
            f.add_to(&mut m, x[*k]);
        }
        m
    }

    fn scale(&mut self, f: f64) {
        self.constant.scale(f);
        for (_, t) in &mut self.terms {
            t.scale(f);
        }
    }

    fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, t)| t.max_abs())
            .fold(self.constant.max_abs(), f64::max)
    }
}

/// `Σ_k coeffs_k x_k + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * x[k]).sum::<f64>() + self.constant
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.1.abs()))
    }
}

/// Linear objective over free variables with LMI, equality and inequality constraints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockSdp {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    /// Each form must vanish.
    pub equalities: Vec<AffineForm>,
    /// Each form must be nonnegative.
    pub inequalities: Vec<AffineForm>,
}

impl BlockSdp {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::InvalidArgument(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            )));
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            let mats = std::iter::once(&b.constant).chain(b.terms.iter().map(|t| &t.1));
            for m in mats {
                if m.entries.iter().any(|&(r, c, _)| r >= b.dim || c >= b.dim) {
                    return Err(Error::InvalidArgument(format!(
                        "block {bi} has an entry outside its {0}x{0} shape",
                        b.dim
                    )));
                }
            }
            if b.terms.iter().any(|(k, _)| *k >= self.num_vars) {
                return Err(Error::InvalidArgument(format!(
                    "block {bi} references an undeclared variable"
                )));
            }
        }
        for f in self.equalities.iter().chain(&self.inequalities) {
            if f.coeffs.iter().any(|(k, _)| *k >= self.num_vars) {
                return Err(Error::InvalidArgument(
                    "linear constraint references an undeclared variable".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    pub step_fraction: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iters: 200,
            step_fraction: 0.98,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidArgument("step_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    NumericalFailure,
}

/// One interior-point iteration, in the caller's (unscaled) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub rel_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

impl IterationRecord {
    pub const HEADER: &'static str = "iter\tpobj\tdobj\tgap\tpres\tdres\tmu\tstep_p\tstep_d";

    /// Tab-separated log line.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:.12e}\t{:.12e}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.4}\t{:.4}",
            self.iter,
            self.primal_objective,
            self.dual_objective,
            self.rel_gap,
            self.primal_residual,
            self.dual_residual,
            self.mu,
            self.step_primal,
            self.step_dual
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// One multiplier per equality.
    pub eq_multipliers: Vec<f64>,
    /// One nonnegative multiplier per inequality.
    pub ineq_multipliers: Vec<f64>,
    /// Dual matrix per LMI block.
    #[serde(skip)]
    pub block_duals: Vec<DMatrix<f64>>,
    pub status: SolveStatus,
    pub rel_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

impl SdpSolution {
    /// The iteration log as tab-separated text with a header row.
    pub fn log_text(&self) -> String {
        let mut s = String::from(IterationRecord::HEADER);
        s.push('\n');
        for r in &self.log {
            let _ = writeln!(s, "{}", r.log_line());
        }
        s
    }
}

/// KKT measures recomputed from a returned solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Max of equality violation, inequality violation and negative block eigenvalues.
    pub primal_residual: f64,
    /// Norm of `c − Σ A*(Z) − Σ λ a`, inequality part included.
    pub dual_residual: f64,
    /// Most negative eigenvalue over the dual matrices (0 if all PSD).
    pub dual_cone_violation: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub rel_gap: f64,
}

/// Recomputes feasibility and duality measures directly from the problem data.
pub fn kkt_residuals(p: &BlockSdp, sol: &SdpSolution) -> KktReport {
    let x = &sol.x;
    let mut pres = 0.0_f64;
    for eq in &p.equalities {
        pres = pres.max(eq.eval(x).abs());
    }
    for ineq in &p.inequalities {
        pres = pres.max((-ineq.eval(x)).max(0.0));
    }
    for b in &p.blocks {
        let v = b.value(x);
        let min = v.symmetric_eigenvalues().min();
        pres = pres.max((-min).max(0.0));
    }
    let mut grad = DVector::from_column_slice(&p.objective);
    let mut dobj = 0.0;
    let mut dual_cone = 0.0_f64;
    for (b, z) in p.blocks.iter().zip(&sol.block_duals) {
        for (k, f) in &b.terms {
            grad[*k] -= f.trace_with(z);
        }
        dobj -= b.constant.trace_with(z);
        dual_cone = dual_cone.max(-z.symmetric_eigenvalues().min());
    }
    for (f, &z) in p.inequalities.iter().zip(&sol.ineq_multipliers) {
        for &(k, a) in &f.coeffs {
            grad[k] -= z * a;
        }
        dobj -= z * f.constant;
        dual_cone = dual_cone.max(-z);
    }
    for (f, &l) in p.equalities.iter().zip(&sol.eq_multipliers) {
        for &(k, a) in &f.coeffs {
            grad[k] -= l * a;
        }
        dobj -= l * f.constant;
    }
    let pobj: f64 = p.objective.iter().zip(x).map(|(c, x)| c * x).sum();
    KktReport {
        primal_residual: pres,
        dual_residual: grad.norm(),
        dual_cone_violation: dual_cone.max(0.0),
        primal_objective: pobj,
        dual_objective: dobj,
        rel_gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
    }
}

// ---------------------------------------------------------------------------
// Internal scaled representation.

struct Cone {
    block: LmiBlock,
    /// Variables touched by the block, sorted.
    vars: Vec<usize>,
    /// Multiplier scaling back to the caller's units.
    scale: f64,
    /// Index of the originating inequality, for 1×1 cones built from one.
    from_inequality: Option<usize>,
}

struct Structure {
    groups: Vec<Vec<usize>>,
    /// For each variable: (group, position within group).
    position: Vec<(usize, usize)>,
    /// Group holding every variable of each cone.
    cone_group: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn analyze(num_vars: usize, cones: &[Cone]) -> Structure {
    let mut parent: Vec<usize> = (0..num_vars).collect();
    for c in cones {
        for w in c.vars.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut root_group = vec![usize::MAX; num_vars];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut position = vec![(0, 0); num_vars];
    for v in 0..num_vars {
        let r = find(&mut parent, v);
        if root_group[r] == usize::MAX {
            root_group[r] = groups.len();
            groups.push(Vec::new());
        }
        let g = root_group[r];
        position[v] = (g, groups[g].len());
        groups[g].push(v);
    }
    let cone_group = cones
        .iter()
        .map(|c| c.vars.first().map(|&v| position[v].0).unwrap_or(0))
        .collect();
    Structure {
        groups,
        position,
        cone_group,
    }
}

struct Scaled {
    num_vars: usize,
    c: DVector<f64>,
    obj_scale: f64,
    cones: Vec<Cone>,
    eqs: Vec<AffineForm>,
    eq_scales: Vec<f64>,
    num_ineq: usize,
}

fn scale_problem(p: &BlockSdp) -> Scaled {
    let cmax = p.objective.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let obj_scale = if cmax > 0.0 { cmax } else { 1.0 };
    let c = DVector::from_iterator(p.num_vars, p.objective.iter().map(|v| v / obj_scale));
    let mut cones = Vec::with_capacity(p.blocks.len() + p.inequalities.len());
    for b in &p.blocks {
        let mut block = b.clone();
        let s = block.max_abs();
        let s = if s > 0.0 { s } else { 1.0 };
        block.scale(1.0 / s);
        let mut vars: Vec<usize> = block.terms.iter().map(|t| t.0).collect();
        vars.sort_unstable();
        vars.dedup();
        cones.push(Cone {
            block,
            vars,
            scale: s,
            from_inequality: None,
        });
    }
    for (j, f) in p.inequalities.iter().enumerate() {
        let s = f.max_abs();
        let s = if s > 0.0 { s } else { 1.0 };
        let mut block = LmiBlock::new(1);
        block.constant.add(0, 0, f.constant / s);
        for &(k, a) in &f.coeffs {
            let mut m = SparseSym::new();
            m.add(0, 0, a / s);
            block.terms.push((k, m));
        }
        let mut vars: Vec<usize> = f.coeffs.iter().map(|t| t.0).collect();
        vars.sort_unstable();
        vars.dedup();
        cones.push(Cone {
            block,
            vars,
            scale: s,
            from_inequality: Some(j),
        });
    }
    let mut eqs = Vec::with_capacity(p.equalities.len());
    let mut eq_scales = Vec::with_capacity(p.equalities.len());
    for f in &p.equalities {
        let s = f.max_abs();
        let s = if s > 0.0 { s } else { 1.0 };
        eqs.push(AffineForm {
            coeffs: f.coeffs.iter().map(|&(k, a)| (k, a / s)).collect(),
            constant: f.constant / s,
        });
        eq_scales.push(s);
    }
    Scaled {
        num_vars: p.num_vars,
        c,
        obj_scale,
        cones,
        eqs,
        eq_scales,
        num_ineq: p.inequalities.len(),
    }
}

struct Iterate {
    x: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    lam: DVector<f64>,
}

struct Residuals {
    rp: Vec<DMatrix<f64>>,
    re: DVector<f64>,
    rd: DVector<f64>,
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    mu: f64,
}

fn adjoint_into(cone: &Cone, m: &DMatrix<f64>, out: &mut DVector<f64>, alpha: f64) {
    for (k, f) in &cone.block.terms {
        out[*k] += alpha * f.trace_with(m);
    }
}

fn residuals(sp: &Scaled, it: &Iterate, nu: f64, pscale: f64) -> Residuals {
    let xs = it.x.as_slice();
    let mut rp = Vec::with_capacity(sp.cones.len());
    let mut pres2 = 0.0;
    let mut rd = sp.c.clone();
    let mut dobj = 0.0;
    let mut comp = 0.0;
    for ((cone, s), z) in sp.cones.iter().zip(&it.s).zip(&it.z) {
        let r = cone.block.value(xs) - s;
        pres2 += r.norm_squared();
        rp.push(r);
        adjoint_into(cone, z, &mut rd, -1.0);
        dobj -= cone.block.constant.trace_with(z);
        comp += z.dot(s);
    }
    let mut re = DVector::zeros(sp.eqs.len());
    for (i, f) in sp.eqs.iter().enumerate() {
        re[i] = -f.eval(xs);
        for &(k, a) in &f.coeffs {
            rd[k] -= it.lam[i] * a;
        }
        dobj -= it.lam[i] * f.constant;
    }
    pres2 += re.norm_squared();
    let pobj = sp.c.dot(&it.x);
    let dres = rd.norm() / (1.0 + sp.c.norm());
    Residuals {
        rp,
        re,
        rd,
        pobj,
        dobj,
        pres: pres2.sqrt() / pscale,
        dres,
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        mu: comp / nu,
    }
}

/// Largest `α ≤ cap` with `M + αΔ ⪰ 0`, given a Cholesky factor of `M`.
fn max_step(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, delta: &DMatrix<f64>, cap: f64) -> f64 {
    let l = chol.l();
    let n = l.nrows();
    if n == 1 {
        let m = l[(0, 0)] * l[(0, 0)];
        let d = delta[(0, 0)];
        return if d < 0.0 { (-m / d).min(cap) } else { cap };
    }
    let linv = match l.clone().solve_lower_triangular(&DMatrix::identity(n, n)) {
        Some(v) => v,
        None => return 0.0,
    };
    let mut w = &linv * delta * linv.transpose();
    w = 0.5 * (&w + w.transpose());
    let min = w.symmetric_eigenvalues().min();
    if min < 0.0 {
        (-1.0 / min).min(cap)
    } else {
        cap
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

struct Factored {
    /// Unregularized group blocks, for residual evaluation.
    dense: Vec<DMatrix<f64>>,
    chol_groups: Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    /// Factorized bordered system, with the precomputed `D⁻¹ Eᵀ` columns.
    border_lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    dinv_cols: Vec<DVector<f64>>,
}

impl Factored {
    fn apply_dinv(&self, st: &Structure, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(r.len());
        for (g, vars) in st.groups.iter().enumerate() {
            let local = DVector::from_iterator(vars.len(), vars.iter().map(|&v| r[v]));
            let sol = self.chol_groups[g].solve(&local);
            for (i, &v) in vars.iter().enumerate() {
                out[v] = sol[i];
            }
        }
        out
    }
}

fn sparse_dot(a: &[(usize, f64)], v: &DVector<f64>) -> f64 {
    a.iter().map(|&(k, x)| x * v[k]).sum()
}

/// Builds and factors the Schur system for the current iterate.
fn factor(
    sp: &Scaled,
    st: &Structure,
    it: &Iterate,
    s_inv: &[DMatrix<f64>],
) -> Result<Factored> {
    let mut dense: Vec<DMatrix<f64>> = st
        .groups
        .iter()
        .map(|g| DMatrix::zeros(g.len(), g.len()))
        .collect();
    for (ci, cone) in sp.cones.iter().enumerate() {
        let z = &it.z[ci];
        let sinv = &s_inv[ci];
        let g = st.cone_group[ci];
        let dim = cone.block.dim;
        if dim == 1 {
            let w = z[(0, 0)] * sinv[(0, 0)];
            let coeffs: Vec<(usize, f64)> = cone
                .block
                .terms
                .iter()
                .map(|(k, f)| (*k, f.entries.iter().map(|e| e.2).sum::<f64>()))
                .collect();
            for &(k, a) in &coeffs {
                for &(l, b) in &coeffs {
                    dense[g][(st.position[k].1, st.position[l].1)] += w * a * b;
                }
            }
            continue;
        }
        for (k, fk) in &cone.block.terms {
            // W = Z F_k S⁻¹, then M_kl = tr(F_l W).
            let mut zf = DMatrix::zeros(dim, dim);
            for &(r, c, v) in &fk.entries {
                for i in 0..dim {
                    zf[(i, c)] += v * z[(i, r)];
                }
                if r != c {
                    for i in 0..dim {
                        zf[(i, r)] += v * z[(i, c)];
                    }
                }
            }
            let w = zf * sinv;
            let pk = st.position[*k].1;
            for (l, fl) in &cone.block.terms {
                dense[g][(pk, st.position[*l].1)] += fl.trace_with(&w);
            }
        }
    }
    let mut chol_groups = Vec::with_capacity(dense.len());
    for d in &mut dense {
        symmetrize(d);
    }
    for d in &dense {
        let diag_max = d.diagonal().amax().max(1e-300);
        let mut chol = d.clone().cholesky();
        let mut reg = 1e-12 * diag_max;
        let mut tries = 0;
        while chol.is_none() && tries < 3 {
            let mut dd = d.clone();
            for i in 0..dd.nrows() {
                dd[(i, i)] += reg;
            }
            chol = dd.cholesky();
            reg *= 100.0;
            tries += 1;
        }
        match chol {
            Some(c) => chol_groups.push(c),
            None => {
                return Err(Error::Numerical(
                    "Schur complement Cholesky failed after regularization".into(),
                ))
            }
        }
    }
    let mut f = Factored {
        dense,
        chol_groups,
        border_lu: None,
        dinv_cols: Vec::new(),
    };
    let q = sp.eqs.len();
    if q > 0 {
        let mut cols = Vec::with_capacity(q);
        for e in &sp.eqs {
            let mut v = DVector::zeros(sp.num_vars);
            for &(k, x) in &e.coeffs {
                v[k] += x;
            }
            cols.push(f.apply_dinv(st, &v));
        }
        // E D⁻¹ Eᵀ
        let mut k = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                k[(i, j)] = sparse_dot(&sp.eqs[i].coeffs, &cols[j]);
            }
        }
        f.border_lu = Some(k.lu());
        f.dinv_cols = cols;
    }
    Ok(f)
}

/// Residuals `r1 − (D Δx − EᵀΔλ)` and `r2 − E Δx`.
fn newton_residual(
    sp: &Scaled,
    st: &Structure,
    f: &Factored,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
    dx: &DVector<f64>,
    dlam: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let mut e1 = r1.clone();
    for (g, vars) in st.groups.iter().enumerate() {
        let local = DVector::from_iterator(vars.len(), vars.iter().map(|&v| dx[v]));
        let prod = &f.dense[g] * local;
        for (i, &v) in vars.iter().enumerate() {
            e1[v] -= prod[i];
        }
    }
    let mut e2 = r2.clone();
    for (i, eq) in sp.eqs.iter().enumerate() {
        for &(k, x) in &eq.coeffs {
            e1[k] += x * dlam[i];
        }
        e2[i] -= sparse_dot(&eq.coeffs, dx);
    }
    (e1, e2)
}

/// [`solve_newton`] followed by two steps of iterative refinement.
fn solve_refined(
    sp: &Scaled,
    st: &Structure,
    f: &Factored,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (mut dx, mut dlam) = solve_newton(sp, st, f, r1, r2)?;
    let mut err = f64::INFINITY;
    for _ in 0..2 {
        let (e1, e2) = newton_residual(sp, st, f, r1, r2, &dx, &dlam);
        let norm = e1.norm() + e2.norm();
        if !(norm < err) {
            break;
        }
        err = norm;
        let (cx, cl) = solve_newton(sp, st, f, &e1, &e2)?;
        dx += cx;
        dlam += cl;
    }
    Ok((dx, dlam))
}

/// Solves `D Δx − EᵀΔλ = r1`, `E Δx = r2`.
fn solve_newton(
    sp: &Scaled,
    st: &Structure,
    f: &Factored,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let q = sp.eqs.len();
    let d1 = f.apply_dinv(st, r1);
    if q == 0 {
        return Ok((d1, DVector::zeros(0)));
    }
    let mut rhs = DVector::zeros(q);
    for i in 0..q {
        rhs[i] = r2[i] - sparse_dot(&sp.eqs[i].coeffs, &d1);
    }
    let sol = f
        .border_lu
        .as_ref()
        .and_then(|lu| lu.solve(&rhs))
        .ok_or_else(|| Error::Numerical("bordered Newton system is singular".into()))?;
    // Δx = D⁻¹(r1 + EᵀΔλ)
    let mut dx = d1;
    for i in 0..q {
        dx.axpy(sol[i], &f.dinv_cols[i], 1.0);
    }
    let dlam = sol;
    Ok((dx, dlam))
}

struct Direction {
    dx: DVector<f64>,
    dlam: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn direction(
    sp: &Scaled,
    st: &Structure,
    f: &Factored,
    it: &Iterate,
    res: &Residuals,
    s_inv: &[DMatrix<f64>],
    target_mu: f64,
    corrector: Option<&Direction>,
) -> Result<Direction> {
    // T_b = σμ S⁻¹ − Z − Z R_p S⁻¹ − ΔZ_a ΔS_a S⁻¹
    let mut r1 = -res.rd.clone();
    let mut t_mats = Vec::with_capacity(sp.cones.len());
    for (ci, cone) in sp.cones.iter().enumerate() {
        let z = &it.z[ci];
        let sinv = &s_inv[ci];
        let mut t = sinv * target_mu - z - z * &res.rp[ci] * sinv;
        if let Some(c) = corrector {
            t -= &c.dz[ci] * &c.ds[ci] * sinv;
        }
        adjoint_into(cone, &t, &mut r1, 1.0);
        t_mats.push(t);
    }
    let (dx, dlam) = solve_refined(sp, st, f, &r1, &res.re)?;
    let xs = dx.as_slice();
    let mut ds = Vec::with_capacity(sp.cones.len());
    let mut dz = Vec::with_capacity(sp.cones.len());
    for (ci, cone) in sp.cones.iter().enumerate() {
        let d_s = cone.block.linear_part(xs) + &res.rp[ci];
        let mut d_z = &t_mats[ci] - &it.z[ci] * &(cone.block.linear_part(xs)) * &s_inv[ci];
        symmetrize(&mut d_z);
        ds.push(d_s);
        dz.push(d_z);
    }
    Ok(Direction { dx, dlam, ds, dz })
}

fn step_lengths(it: &Iterate, d: &Direction) -> Option<(f64, f64)> {
    let mut ap = 1.0_f64;
    let mut ad = 1.0_f64;
    for ci in 0..it.s.len() {
        let cs = it.s[ci].clone().cholesky()?;
        let cz = it.z[ci].clone().cholesky()?;
        ap = max_step(&cs, &d.ds[ci], ap);
        ad = max_step(&cz, &d.dz[ci], ad);
    }
    Some((ap, ad))
}

/// Solves the block SDP by an infeasible-start primal-dual interior-point method.
pub fn solve(p: &BlockSdp, opts: &SolveOptions) -> Result<SdpSolution> {
    p.validate()?;
    opts.validate()?;
    let sp = scale_problem(p);
    let st = analyze(sp.num_vars, &sp.cones);
    let nu: f64 = sp.cones.iter().map(|c| c.block.dim as f64).sum::<f64>().max(1.0);

    let pscale = 1.0
        + sp
            .cones
            .iter()
            .map(|c| c.block.constant.max_abs())
            .chain(sp.eqs.iter().map(|e| e.constant.abs()))
            .fold(0.0, f64::max);
    let init = 1.0_f64.max(pscale);
    let mut it = Iterate {
        x: DVector::zeros(sp.num_vars),
        s: sp
            .cones
            .iter()
            .map(|c| DMatrix::identity(c.block.dim, c.block.dim) * init)
            .collect(),
        z: sp
            .cones
            .iter()
            .map(|c| DMatrix::identity(c.block.dim, c.block.dim))
            .collect(),
        lam: DVector::zeros(sp.eqs.len()),
    };

    let mut log = Vec::new();
    let mut status = SolveStatus::MaxIters;
    let mut res = residuals(&sp, &it, nu, pscale);
    let mut iters = 0;
    let mut best: Option<(f64, Iterate)> = None;
    loop {
        let merit = res.gap.max(res.pres).max(res.dres);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((
                merit,
                Iterate {
                    x: it.x.clone(),
                    s: it.s.clone(),
                    z: it.z.clone(),
                    lam: it.lam.clone(),
                },
            ));
        }
        if res.gap <= opts.gap_tol && res.pres <= opts.feas_tol && res.dres <= opts.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if iters >= opts.max_iters {
            break;
        }
        iters += 1;

        let s_inv: Option<Vec<DMatrix<f64>>> = it
            .s
            .iter()
            .map(|s| {
                s.clone().cholesky().map(|c| {
                    let mut inv = c.inverse();
                    symmetrize(&mut inv);
                    inv
                })
            })
            .collect();
        let Some(s_inv) = s_inv else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let fac = match factor(&sp, &st, &it, &s_inv) {
            Ok(f) => f,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let step = (|| -> Result<(Direction, f64, f64)> {
            let pred = direction(&sp, &st, &fac, &it, &res, &s_inv, 0.0, None)?;
            let (ap, ad) = step_lengths(&it, &pred)
                .ok_or_else(|| Error::Numerical("iterate left the cone".into()))?;
            let mut comp_aff = 0.0;
            for ci in 0..it.s.len() {
                let s_next = &it.s[ci] + &pred.ds[ci] * ap;
                let z_next = &it.z[ci] + &pred.dz[ci] * ad;
                comp_aff += s_next.dot(&z_next);
            }
            let mu_aff = (comp_aff / nu).max(0.0);
            let sigma = if res.mu > 0.0 {
                (mu_aff / res.mu).powi(3).min(1.0)
            } else {
                0.0
            };
            let corr = direction(&sp, &st, &fac, &it, &res, &s_inv, sigma * res.mu, Some(&pred))?;
            let (ap, ad) = step_lengths(&it, &corr)
                .ok_or_else(|| Error::Numerical("iterate left the cone".into()))?;
            if ap.min(ad) >= 0.1 {
                return Ok((corr, ap, ad));
            }
            // The second-order term can spoil the step near the boundary;
            // fall back to a centering direction.
            let center = direction(&sp, &st, &fac, &it, &res, &s_inv, sigma.max(0.5) * res.mu, None)?;
            let (cp, cd) = step_lengths(&it, &center)
                .ok_or_else(|| Error::Numerical("iterate left the cone".into()))?;
            if cp.min(cd) > ap.min(ad) {
                Ok((center, cp, cd))
            } else {
                Ok((corr, ap, ad))
            }
        })();
        let (dir, ap, ad) = match step {
            Ok(v) => v,
            Err(_) => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        it.x.axpy(ap, &dir.dx, 1.0);
        it.lam.axpy(ad, &dir.dlam, 1.0);
        for ci in 0..it.s.len() {
            it.s[ci] += &dir.ds[ci] * ap;
            it.z[ci] += &dir.dz[ci] * ad;
            symmetrize(&mut it.s[ci]);
            symmetrize(&mut it.z[ci]);
        }
        res = residuals(&sp, &it, nu, pscale);
        log.push(IterationRecord {
            iter: iters,
            primal_objective: res.pobj * sp.obj_scale,
            dual_objective: res.dobj * sp.obj_scale,
            rel_gap: res.gap,
            primal_residual: res.pres,
            dual_residual: res.dres,
            mu: res.mu * sp.obj_scale,
            step_primal: ap,
            step_dual: ad,
        });
        if !(res.pobj.is_finite() && res.dobj.is_finite()) {
            status = SolveStatus::NumericalFailure;
            break;
        }
    }
    if status != SolveStatus::Optimal {
        if let Some((_, b)) = best {
            it = b;
            res = residuals(&sp, &it, nu, pscale);
        }
    }
    Ok(unscale(&sp, it, res, status, iters, log))
}

fn unscale(
    sp: &Scaled,
    it: Iterate,
    res: Residuals,
    status: SolveStatus,
    iterations: usize,
    log: Vec<IterationRecord>,
) -> SdpSolution {
    let os = sp.obj_scale;
    let mut block_duals = Vec::new();
    let mut ineq = vec![0.0; sp.num_ineq];
    for (cone, z) in sp.cones.iter().zip(&it.z) {
        match cone.from_inequality {
            Some(j) => ineq[j] = z[(0, 0)] * os / cone.scale,
            None => block_duals.push(z * (os / cone.scale)),
        }
    }
    let eq_multipliers = it
        .lam
        .iter()
        .zip(&sp.eq_scales)
        .map(|(l, s)| l * os / s)
        .collect();
    SdpSolution {
        x: it.x.as_slice().to_vec(),
        objective: res.pobj * os,
        dual_objective: res.dobj * os,
        eq_multipliers,
        ineq_multipliers: ineq,
        block_duals,
        status,
        rel_gap: res.gap,
        primal_residual: res.pres,
        dual_residual: res.dres,
        iterations,
        log,
    }
}
