//! Finite-difference radial operators on a uniform half-line grid.
//!
//! Unknowns sit at `r_i = i·h`, `i = 1..=N`, with `r_N = r_max`; the
//! Dirichlet ghost values at `r = 0` and `r = r_max + h` are zero.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::PerturbationSpec;
use crate::tridiag::{fix_sign, SymTridiagonal};

/// Largest step accepted by [`build_grid`].
pub const MAX_STEP: f64 = 0.1;
/// Default coarse step of the extrapolated solvers.
pub const DEFAULT_COARSE_STEP: f64 = 0.5;

/// Largest admissible relativistic coupling.
pub const BETA_CRITICAL: f64 = 2.0 / PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    points: Vec<f64>,
    step: f64,
    r_max: f64,
}

impl RadialGrid {
    /// Uniform grid with spacing `step` ending at `r_max`; no cap on the step.
    pub fn uniform(r_max: f64, step: f64) -> Result<Self> {
        if !(r_max > 0.0 && step > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max}, step = {step}")));
        }
        let n = (r_max / step).round();
        if (n * step - r_max).abs() > 1e-9 * r_max {
            return Err(Error::InvalidGrid(format!("step {step} does not divide r_max = {r_max}")));
        }
        Self::from_count(r_max, n as usize, 8)
    }

    fn from_count(r_max: f64, n_points: usize, min_points: usize) -> Result<Self> {
        if n_points < min_points {
            return Err(Error::InvalidGrid(format!("{n_points} points, need at least {min_points}")));
        }
        let step = r_max / n_points as f64;
        let points = (1..=n_points).map(|i| i as f64 * step).collect::<Vec<_>>();
        Ok(Self { points, step, r_max })
    }

    /// Grids with steps `coarse_step` and `coarse_step / 2` over the same interval.
    pub fn richardson_pair(r_max: f64, coarse_step: f64) -> Result<(Self, Self)> {
        Ok((Self::uniform(r_max, coarse_step)?, Self::uniform(r_max, 0.5 * coarse_step)?))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature inner product `h Σ a_i b_i`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.step * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

/// Uniform grid of `n_points` unknowns on `(0, r_max]`, step at most [`MAX_STEP`].
pub fn build_grid(r_max: f64, n_points: usize) -> Result<RadialGrid> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("r_max = {r_max} must be positive")));
    }
    let grid = RadialGrid::from_count(r_max, n_points, 100)?;
    if grid.step > MAX_STEP * (1.0 + 1e-12) {
        return Err(Error::InvalidGrid(format!(
            "step {} exceeds {MAX_STEP}; use at least {} points",
            grid.step,
            (r_max / MAX_STEP).ceil()
        )));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Lambda,
    Nonrel,
    Rel,
}

#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Tridiagonal(SymTridiagonal),
    Dense(Mat<f64>),
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: OperatorMatrix,
    pub grid: Arc<RadialGrid>,
    pub kind: OperatorKind,
    pub l: u32,
    pub beta: f64,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match &self.matrix {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Tridiagonal(t) => {
                let n = t.dim();
                Mat::from_fn(n, n, |i, j| {
                    if i == j {
                        t.diag[i]
                    } else if i + 1 == j {
                        t.off[i]
                    } else if j + 1 == i {
                        t.off[j]
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    pub fn as_tridiagonal(&self) -> Option<&SymTridiagonal> {
        match &self.matrix {
            OperatorMatrix::Tridiagonal(t) => Some(t),
            OperatorMatrix::Dense(_) => None,
        }
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::Tridiagonal(t) => t.diag.clone(),
            OperatorMatrix::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::Tridiagonal(t) => t.matvec(x),
            OperatorMatrix::Dense(m) => {
                (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
            }
        }
    }

    /// Copy with `shift(r_i)` added to the diagonal.
    pub fn add_diagonal(&self, shift: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        let pts = self.grid.points();
        match &mut out.matrix {
            OperatorMatrix::Tridiagonal(t) => {
                for (d, &r) in t.diag.iter_mut().zip(pts) {
                    *d += shift(r);
                }
            }
            OperatorMatrix::Dense(m) => {
                for (i, &r) in pts.iter().enumerate() {
                    m[(i, i)] += shift(r);
                }
            }
        }
        out
    }
}

fn lambda_tridiagonal(grid: &RadialGrid, l: u32) -> SymTridiagonal {
    let h2 = grid.step() * grid.step();
    let cent = (l as f64) * (l as f64 + 1.0);
    let diag = grid.points().iter().map(|r| 2.0 / h2 + cent / (r * r)).collect();
    let off = vec![-1.0 / h2; grid.len() - 1];
    SymTridiagonal { diag, off }
}

/// `Λ = -∂_r² + l(l+1)/r²` as a symmetric tridiagonal matrix.
pub fn build_lambda(grid: &RadialGrid, l: u32) -> DiscreteOperator {
    DiscreteOperator {
        matrix: OperatorMatrix::Tridiagonal(lambda_tridiagonal(grid, l)),
        grid: Arc::new(grid.clone()),
        kind: OperatorKind::Lambda,
        l,
        beta: 0.0,
    }
}

fn check_support(grid: &RadialGrid, perturbation: Option<&PerturbationSpec>) -> Result<()> {
    if let Some(p) = perturbation {
        if p.support_radius > 0.5 * grid.r_max() {
            return Err(Error::SupportTooLarge { support: p.support_radius, r_max: grid.r_max() });
        }
    }
    Ok(())
}

/// Potential part `-1/r - ς U(r)` of the diagonal.
fn potential_diagonal(perturbation: Option<&PerturbationSpec>) -> impl Fn(f64) -> f64 + '_ {
    move |r| -1.0 / r - perturbation.map_or(0.0, |p| p.potential(r))
}

/// `K_l(0) = Λ - 1/r - ς U`.
pub fn build_nonrel(grid: &RadialGrid, l: u32, perturbation: Option<&PerturbationSpec>) -> Result<DiscreteOperator> {
    check_support(grid, perturbation)?;
    let mut op = build_lambda(grid, l).add_diagonal(potential_diagonal(perturbation));
    op.kind = OperatorKind::Nonrel;
    Ok(op)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= BETA_CRITICAL * (1.0 + 1e-15)) {
        return Err(Error::InvalidCoupling(beta));
    }
    Ok(())
}

/// Kinetic symbol `f(λ) = 2λ / (√(4β²λ + 1) + 1)`.
pub fn kinetic_symbol(beta: f64, lambda: f64) -> f64 {
    2.0 * lambda / ((4.0 * beta * beta * lambda + 1.0).sqrt() + 1.0)
}

/// Full eigendecomposition of `Λ` for one `(grid, l)`, reusable across couplings.
#[derive(Debug, Clone)]
pub struct LambdaSpectrum {
    grid: Arc<RadialGrid>,
    l: u32,
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl LambdaSpectrum {
    pub fn new(grid: &RadialGrid, l: u32) -> Result<Self> {
        let dense = build_lambda(grid, l).to_dense();
        let evd = dense
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NonConvergence(format!("eigendecomposition of Lambda: {e:?}")))?;
        let values = evd.S().column_vector().iter().copied().collect::<Vec<_>>();
        if values[0] <= 0.0 {
            return Err(Error::NonConvergence(format!("Lambda has non-positive eigenvalue {}", values[0])));
        }
        Ok(Self { grid: Arc::new(grid.clone()), l, values, vectors: evd.U().to_owned() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `g(Λ)` by spectral recomposition, symmetrized.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> Mat<f64> {
        let n = self.values.len();
        let gv: Vec<f64> = self.values.iter().map(|&v| g(v)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * gv[j]);
        let m = &scaled * self.vectors.transpose();
        Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// `T_l(β) = f(Λ)`.
    pub fn kinetic(&self, beta: f64) -> Mat<f64> {
        self.apply(|v| kinetic_symbol(beta, v))
    }

    /// `K_l(β) = f(Λ) - 1/r - ς U`.
    pub fn relativistic_operator(
        &self,
        beta: f64,
        perturbation: Option<&PerturbationSpec>,
    ) -> Result<DiscreteOperator> {
        check_beta(beta)?;
        check_support(&self.grid, perturbation)?;
        let op = DiscreteOperator {
            matrix: OperatorMatrix::Dense(self.kinetic(beta)),
            grid: self.grid.clone(),
            kind: OperatorKind::Rel,
            l: self.l,
            beta,
        };
        Ok(op.add_diagonal(potential_diagonal(perturbation)))
    }
}

/// `K_l(β) = T_l(β) - 1/r - ς U`; `β = 0` is routed to [`build_nonrel`].
pub fn build_rel(
    grid: &RadialGrid,
    l: u32,
    beta: f64,
    perturbation: Option<&PerturbationSpec>,
) -> Result<DiscreteOperator> {
    if beta == 0.0 {
        return build_nonrel(grid, l, perturbation);
    }
    check_beta(beta)?;
    check_support(grid, perturbation)?;
    LambdaSpectrum::new(grid, l)?.relativistic_operator(beta, perturbation)
}

/// `√(β⁻²Λ + ¼β⁻⁴) - ½β⁻²` with the matrix square root taken by the
/// Denman–Beavers iteration, independent of any eigendecomposition.
pub fn direct_sqrt_kinetic(grid: &RadialGrid, l: u32, beta: f64) -> Result<Mat<f64>> {
    check_beta(beta)?;
    let lam = build_lambda(grid, l).to_dense();
    let n = lam.nrows();
    let b2 = beta * beta;
    let shift = 0.25 / (b2 * b2);
    let a = Mat::from_fn(n, n, |i, j| lam[(i, j)] / b2 + if i == j { shift } else { 0.0 });
    // scale towards unit spectrum for fast convergence
    let scale = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n as f64;
    let mut y = Mat::from_fn(n, n, |i, j| a[(i, j)] / scale);
    let mut z = Mat::<f64>::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.partial_piv_lu().inverse();
        let z_inv = z.partial_piv_lu().inverse();
        let y_next = Mat::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + z_inv[(i, j)]));
        let z_next = Mat::from_fn(n, n, |i, j| 0.5 * (z[(i, j)] + y_inv[(i, j)]));
        let delta = (&y_next - &y).norm_l2();
        let size = y_next.norm_l2();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * size {
            let root_scale = scale.sqrt();
            let half = 0.5 / b2;
            return Ok(Mat::from_fn(n, n, |i, j| {
                let s = 0.5 * (y[(i, j)] + y[(j, i)]) * root_scale;
                if i == j {
                    s - half
                } else {
                    s
                }
            }));
        }
    }
    Err(Error::NonConvergence("Denman-Beavers square root did not converge".into()))
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn symmetric_operator_norm(m: &Mat<f64>) -> Result<f64> {
    let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
    Ok(ev.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Eigenpair with `h Σ v_i² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// The `count` smallest eigenvalues, ascending.
pub fn eigenvalues(op: &DiscreteOperator, count: usize) -> Result<Vec<f64>> {
    check_count(op, count)?;
    match &op.matrix {
        OperatorMatrix::Tridiagonal(t) => t.smallest_eigenvalues(count),
        OperatorMatrix::Dense(m) => {
            let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
            Ok(ev[..count].to_vec())
        }
    }
}

fn check_count(op: &DiscreteOperator, count: usize) -> Result<()> {
    if count > op.dim() {
        return Err(Error::Precondition(format!(
            "requested {count} eigenpairs of a {}-dimensional operator",
            op.dim()
        )));
    }
    Ok(())
}

/// The `count` smallest eigenpairs, vectors orthonormal in grid quadrature.
pub fn eigensolve(op: &DiscreteOperator, count: usize) -> Result<Vec<EigenPair>> {
    check_count(op, count)?;
    let scale = 1.0 / op.grid.step().sqrt();
    match &op.matrix {
        OperatorMatrix::Tridiagonal(t) => Ok(t
            .smallest_eigenpairs(count)?
            .into_iter()
            .map(|(value, v)| EigenPair { value, vector: v.into_iter().map(|x| x * scale).collect() })
            .collect()),
        OperatorMatrix::Dense(m) => {
            let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let norm = s[0].abs().max(s[s.nrows() - 1].abs());
            let mut out = Vec::with_capacity(count);
            for k in 0..count {
                let value = s[k];
                let mut v: Vec<f64> = (0..u.nrows()).map(|i| u[(i, k)]).collect();
                let av = op.matvec(&v);
                let res = av.iter().zip(&v).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt();
                if res > 1e-8 * norm.max(1.0) {
                    return Err(Error::NonConvergence(format!("eigenpair {k} residual {res:.3e}")));
                }
                fix_sign(&mut v);
                out.push(EigenPair { value, vector: v.into_iter().map(|x| x * scale).collect() });
            }
            Ok(out)
        }
    }
}

/// Extent and coarse step of a Richardson grid pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub r_max: f64,
    pub coarse_step: f64,
}

impl Discretization {
    /// `r_max = 8 n_max²` (eigenfunctions live inside `4n²`), coarse step 0.5.
    pub fn for_levels(n_max: u32) -> Self {
        let n = n_max.max(2) as f64;
        Self { r_max: 8.0 * n * n, coarse_step: DEFAULT_COARSE_STEP }
    }

    pub fn grids(&self) -> Result<(RadialGrid, RadialGrid)> {
        RadialGrid::richardson_pair(self.r_max, self.coarse_step)
    }
}

/// `(4 μ(h/2) - μ(h)) / 3`, cancelling the `h²` term of the discretization error.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Eigenvalues of one angular channel extrapolated from a grid pair; the
/// `Λ` eigendecompositions are cached across couplings.
#[derive(Debug)]
pub struct ChannelSolver {
    disc: Discretization,
    l: u32,
    coarse: RadialGrid,
    fine: RadialGrid,
    spectra: std::sync::OnceLock<(LambdaSpectrum, LambdaSpectrum)>,
}

impl ChannelSolver {
    pub fn new(disc: Discretization, l: u32) -> Result<Self> {
        let (coarse, fine) = disc.grids()?;
        Ok(Self { disc, l, coarse, fine, spectra: std::sync::OnceLock::new() })
    }

    pub fn discretization(&self) -> Discretization {
        self.disc
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn grids(&self) -> (&RadialGrid, &RadialGrid) {
        (&self.coarse, &self.fine)
    }

    fn spectra(&self) -> Result<&(LambdaSpectrum, LambdaSpectrum)> {
        if let Some(s) = self.spectra.get() {
            return Ok(s);
        }
        let pair = (LambdaSpectrum::new(&self.coarse, self.l)?, LambdaSpectrum::new(&self.fine, self.l)?);
        Ok(self.spectra.get_or_init(|| pair))
    }

    /// Operators on the coarse and fine grids.
    pub fn operators(
        &self,
        beta: f64,
        perturbation: Option<&PerturbationSpec>,
    ) -> Result<(DiscreteOperator, DiscreteOperator)> {
        if beta == 0.0 {
            return Ok((
                build_nonrel(&self.coarse, self.l, perturbation)?,
                build_nonrel(&self.fine, self.l, perturbation)?,
            ));
        }
        check_beta(beta)?;
        let (c, f) = self.spectra()?;
        Ok((c.relativistic_operator(beta, perturbation)?, f.relativistic_operator(beta, perturbation)?))
    }

    /// The `count` lowest extrapolated eigenvalues.
    pub fn levels(&self, beta: f64, perturbation: Option<&PerturbationSpec>, count: usize) -> Result<Vec<f64>> {
        let (c, f) = self.operators(beta, perturbation)?;
        let ec = eigenvalues(&c, count)?;
        let ef = eigenvalues(&f, count)?;
        Ok(ec.iter().zip(&ef).map(|(&a, &b)| richardson(a, b)).collect())
    }

    /// Extrapolated eigenvalues and eigenvectors sampled on the coarse grid.
    pub fn eigenpairs(
        &self,
        beta: f64,
        perturbation: Option<&PerturbationSpec>,
        count: usize,
    ) -> Result<Vec<EigenPair>> {
        let (c, f) = self.operators(beta, perturbation)?;
        let pc = eigensolve(&c, count)?;
        let pf = eigensolve(&f, count)?;
        Ok(pc
            .into_iter()
            .zip(pf)
            .map(|(a, b)| {
                // coarse node i coincides with fine node 2i+1
                let vector = a.vector.iter().enumerate().map(|(i, &x)| richardson(x, b.vector[2 * i + 1])).collect();
                EigenPair { value: richardson(a.value, b.value), vector }
            })
            .collect())
    }
}
