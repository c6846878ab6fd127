//! Spectral projectors, the resolvent expansion, and trace identities.
//!
//! A radial potential does not couple angular channels, so a 3-D cluster
//! projector is the direct sum over `l` of channel projectors, each carried
//! with multiplicity `2l+1`.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{PerturbationSpec, SmallnessFlags, DEFAULT_EPSILON0};
use crate::quadrature;
use crate::radial_operator::{
    build_nonrel, eigensolve, symmetric_operator_norm, DiscreteOperator, OperatorMatrix, RadialGrid,
};
use crate::specfun::level_energy;
use crate::tridiag::{SymTridiagonal, TridiagLu};

/// Default number of contour quadrature nodes.
pub const DEFAULT_N_QUAD: usize = 64;
/// Tolerated idempotency defect `‖P² - P‖`.
pub const IDEMPOTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorSource {
    Contour,
    Eigensum,
}

#[derive(Debug, Clone)]
pub struct ProjectorMatrix {
    /// Euclidean-orthogonal projector on grid coefficients.
    pub matrix: Mat<f64>,
    /// Radial label `n` of the lowest enclosed eigenvalue.
    pub cluster_index: u32,
    pub source: ProjectorSource,
    /// Largest imaginary entry left by the contour quadrature; zero for eigensums.
    pub imaginary_residual: f64,
}

impl ProjectorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// `‖P² - P‖` in operator norm.
    pub fn idempotency_defect(&self) -> Result<f64> {
        let sq = &self.matrix * &self.matrix;
        symmetric_operator_norm(&(&sq - &self.matrix))
    }

    /// Largest `|P_ij - P_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// Operator-norm distance to another projector of the same dimension.
    pub fn distance(&self, other: &ProjectorMatrix) -> Result<f64> {
        symmetric_operator_norm(&(&self.matrix - &other.matrix))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub center: f64,
    pub radius: f64,
    pub n_quad: usize,
}

impl Contour {
    pub fn new(center: f64, radius: f64, n_quad: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) || n_quad < 4 {
            return Err(Error::Contour(format!("center {center}, radius {radius}, {n_quad} nodes")));
        }
        Ok(Self { center, radius, n_quad })
    }

    /// Circle around `sorted[first..=last]`: centered at the midpoint of the
    /// enclosed interval, reaching half-way into the smaller adjacent gap.
    pub fn enclosing(sorted: &[f64], first: usize, last: usize, n_quad: usize) -> Result<Self> {
        if first > last || last >= sorted.len() {
            return Err(Error::Contour(format!("invalid enclosed range {first}..={last}")));
        }
        let lo = sorted[first];
        let hi = sorted[last];
        let below = if first > 0 { lo - sorted[first - 1] } else { f64::INFINITY };
        let above = if last + 1 < sorted.len() { sorted[last + 1] - hi } else { f64::INFINITY };
        let gap = below.min(above);
        if !gap.is_finite() {
            return Err(Error::Contour("need at least one eigenvalue outside the contour".into()));
        }
        Self::new(0.5 * (lo + hi), 0.5 * (hi - lo) + 0.5 * gap, n_quad)
    }

    pub fn with_nodes(&self, n_quad: usize) -> Self {
        Self { n_quad, ..*self }
    }

    /// Quadrature nodes `z_j` and weights `ρ e^{iθ_j}/N` of `(1/2πi)∮ f dz`.
    pub fn nodes(&self) -> Vec<(c64, c64)> {
        (0..self.n_quad)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / self.n_quad as f64;
                let e = c64::new(theta.cos(), theta.sin());
                (c64::new(self.center, 0.0) + e * self.radius, e * (self.radius / self.n_quad as f64))
            })
            .collect()
    }

    /// Number of enclosed eigenvalues and the count below the contour;
    /// rejects eigenvalues within `radius/10` of the circle.
    pub fn check_against(&self, op: &DiscreteOperator) -> Result<(usize, usize)> {
        let band = 0.1 * self.radius;
        let (c, r) = (self.center, self.radius);
        let count_below = |x: f64| -> Result<usize> {
            match &op.matrix {
                OperatorMatrix::Tridiagonal(t) => Ok(t.sturm_count(x)),
                OperatorMatrix::Dense(_) => Err(Error::Precondition("dense count requires eigenvalues".into())),
            }
        };
        let counts = match &op.matrix {
            OperatorMatrix::Tridiagonal(_) => [
                count_below(c - r - band)?,
                count_below(c - r + band)?,
                count_below(c + r - band)?,
                count_below(c + r + band)?,
            ],
            OperatorMatrix::Dense(m) => {
                let ev = m
                    .self_adjoint_eigenvalues(faer::Side::Lower)
                    .map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
                let below = |x: f64| ev.iter().filter(|&&v| v < x).count();
                [below(c - r - band), below(c - r + band), below(c + r - band), below(c + r + band)]
            }
        };
        if counts[0] != counts[1] || counts[2] != counts[3] {
            return Err(Error::Contour(format!("eigenvalue within radius/10 of the circle (center {c}, radius {r})")));
        }
        let enclosed = counts[2] - counts[1];
        if enclosed == 0 {
            return Err(Error::Contour("contour encloses no eigenvalue".into()));
        }
        Ok((enclosed, counts[1]))
    }
}

/// Full complex resolvent `(z - H)^{-1}`, column-major.
fn resolvent(op: &DiscreteOperator, z: c64) -> Result<Mat<c64>> {
    let n = op.dim();
    match &op.matrix {
        OperatorMatrix::Tridiagonal(t) => {
            let lu = TridiagLu::<c64>::factor_shifted(t, z, 0.0)?;
            let columns: Vec<Vec<c64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut b = vec![c64::new(0.0, 0.0); n];
                    b[j] = c64::new(-1.0, 0.0);
                    lu.solve_in_place(&mut b);
                    b
                })
                .collect();
            Ok(Mat::from_fn(n, n, |i, j| columns[j][i]))
        }
        OperatorMatrix::Dense(m) => {
            let shifted = Mat::from_fn(n, n, |i, j| {
                let base = c64::new(-m[(i, j)], 0.0);
                if i == j {
                    base + z
                } else {
                    base
                }
            });
            Ok(shifted.partial_piv_lu().inverse())
        }
    }
}

/// Riesz projector `(1/2πi)∮(z - H)^{-1}dz` by the trapezoidal rule.
pub fn projector_contour(op: &DiscreteOperator, contour: &Contour) -> Result<ProjectorMatrix> {
    let (_, below) = contour.check_against(op)?;
    let n = op.dim();
    let mut re = Mat::<f64>::zeros(n, n);
    let mut im = Mat::<f64>::zeros(n, n);
    for (z, w) in contour.nodes() {
        let r = resolvent(op, z)?;
        for j in 0..n {
            for i in 0..n {
                let v = w * r[(i, j)];
                re[(i, j)] += v.re;
                im[(i, j)] += v.im;
            }
        }
    }
    let imaginary_residual =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max(im[(i, j)].abs()));
    let p = ProjectorMatrix {
        matrix: re,
        cluster_index: op.l + 1 + below as u32,
        source: ProjectorSource::Contour,
        imaginary_residual,
    };
    let defect = p.idempotency_defect()?;
    if defect > IDEMPOTENCY_TOL {
        return Err(Error::Contour(format!(
            "idempotency defect {defect:.3e} exceeds {IDEMPOTENCY_TOL:.0e}; move the contour or add nodes"
        )));
    }
    Ok(p)
}

/// `Σ v vᵀ` over eigenvectors `first..first+count` (0-based within the channel).
pub fn projector_eigensum(op: &DiscreteOperator, first: usize, count: usize) -> Result<ProjectorMatrix> {
    let pairs = eigensolve(op, first + count)?;
    let h = op.grid.step();
    let n = op.dim();
    let vecs: Vec<&Vec<f64>> = pairs[first..].iter().map(|p| &p.vector).collect();
    let matrix = Mat::from_fn(n, n, |i, j| h * vecs.iter().map(|v| v[i] * v[j]).sum::<f64>());
    Ok(ProjectorMatrix {
        matrix,
        cluster_index: op.l + 1 + first as u32,
        source: ProjectorSource::Eigensum,
        imaginary_residual: 0.0,
    })
}

/// Terms `k = 1..=K` of `π - π⁰ = Σ_k (-ς)^k (1/2πi)∮ R₀(U R₀)^k dz`,
/// `R₀ = (z - H⁰)^{-1}`, for `H = H⁰ - ςU`.
pub fn resolvent_series_terms(
    op0: &DiscreteOperator,
    perturbation: &PerturbationSpec,
    contour: &Contour,
    k_max: usize,
) -> Result<Vec<Mat<f64>>> {
    let n = op0.dim();
    let varsigma = perturbation.varsigma;
    if contour.center < 0.0 {
        let n_level = (-0.25 / contour.center).sqrt();
        if varsigma * n_level.powi(3) >= 1.0 {
            return Err(Error::Divergence(format!(
                "varsigma n^3 = {:.3} >= 1: expansion around level n = {n_level:.2} is invalid",
                varsigma * n_level.powi(3)
            )));
        }
    }
    contour.check_against(op0)?;
    let mut terms = vec![Mat::<f64>::zeros(n, n); k_max];
    if varsigma == 0.0 || k_max == 0 {
        return Ok(terms);
    }
    let support: Vec<(usize, f64)> = op0
        .grid
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, &r)| {
            let u = perturbation.shape(r);
            (u != 0.0).then_some((i, u))
        })
        .collect();
    let m = support.len();
    for (z, w) in contour.nodes() {
        let r0 = resolvent(op0, z)?;
        // U R₀ restricted to the support rows
        let ur0 = Mat::from_fn(m, n, |a, j| r0[(support[a].0, j)] * support[a].1);
        let mut current = r0.clone();
        let mut coef = w;
        for term in terms.iter_mut() {
            let cols = Mat::from_fn(n, m, |i, a| current[(i, support[a].0)]);
            current = &cols * &ur0;
            coef *= -varsigma;
            for j in 0..n {
                for i in 0..n {
                    term[(i, j)] += (coef * current[(i, j)]).re;
                }
            }
        }
    }
    Ok(terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchattenNorm {
    Trace,
    Frobenius,
    Operator,
}

impl SchattenNorm {
    pub fn of(self, m: &Mat<f64>) -> Result<f64> {
        let sv = m.singular_values().map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
        Ok(match self {
            SchattenNorm::Trace => sv.iter().sum(),
            SchattenNorm::Frobenius => sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
            SchattenNorm::Operator => sv.first().copied().unwrap_or(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaStatus {
    Holds,
    Violated,
    /// Ranks differ or `‖(I-P)P₀‖ ≥ 1/2`.
    Inapplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub norm: SchattenNorm,
    /// `‖(I-P)P₀‖` in operator norm.
    pub epsilon: f64,
    /// `‖P - P₀‖_p`.
    pub lhs: f64,
    /// `2(1-ε)^{-1} ‖(I-P)P₀‖_p`.
    pub rhs: f64,
    pub status: LemmaStatus,
}

/// Both sides of `‖P - P₀‖_p ≤ 2(1-ε)^{-1}‖(I-P)P₀‖_p`.
pub fn projector_lemma_check(p: &Mat<f64>, p0: &Mat<f64>, norm: SchattenNorm) -> Result<LemmaReport> {
    let n = p.nrows();
    let rank = |m: &Mat<f64>| (0..n).map(|i| m[(i, i)]).sum::<f64>().round() as i64;
    let complement = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - p[(i, j)]);
    let cross = &complement * p0;
    let epsilon = SchattenNorm::Operator.of(&cross)?;
    let lhs = norm.of(&(p - p0))?;
    let rhs = 2.0 / (1.0 - epsilon) * norm.of(&cross)?;
    let status = if rank(p) != rank(p0) || epsilon >= 0.5 {
        LemmaStatus::Inapplicable
    } else if lhs <= rhs * (1.0 + 1e-12) + 1e-14 {
        LemmaStatus::Holds
    } else {
        LemmaStatus::Violated
    };
    Ok(LemmaReport { norm, epsilon, lhs, rhs, status })
}

/// Grid used by the trace experiments: step `h`, extent covering shell `n_max`
/// and twice the widest support.
pub fn trace_grid(n_max: u32, support: f64, step: f64) -> Result<RadialGrid> {
    let n = n_max.max(2) as f64;
    let extent = (8.0 * n * n).max(2.0 * support);
    RadialGrid::uniform((extent / step).ceil() * step, step)
}

/// Channel operator `K_l(0) - ς U - ε Φ`.
fn channel(
    grid: &RadialGrid,
    l: u32,
    u: Option<&PerturbationSpec>,
    phi: Option<&PerturbationSpec>,
) -> Result<SymTridiagonal> {
    let op = build_nonrel(grid, l, u)?;
    let op = match phi {
        Some(p) => op.add_diagonal(|r| -p.potential(r)),
        None => op,
    };
    Ok(op.as_tridiagonal().expect("non-relativistic operators are tridiagonal").clone())
}

/// Channel eigenpairs `(μ, w)` for shells `l+1..=n_max`, `w` Euclidean-unit.
fn channel_pairs(t: &SymTridiagonal, l: u32, n_max: u32) -> Result<Vec<(f64, Vec<f64>)>> {
    t.smallest_eigenpairs((n_max - l) as usize)
}

/// `Σ_i U(r_i) w_i²` for a Euclidean-unit `w`.
fn expectation(grid: &RadialGrid, u: &PerturbationSpec, w: &[f64]) -> f64 {
    grid.points().iter().zip(w).map(|(&r, x)| u.shape(r) * x * x).sum()
}

fn truncation_level(n_max: u32) -> f64 {
    0.5 * (level_energy(n_max) + level_energy(n_max + 1))
}

fn check_truncation(t: &SymTridiagonal, l: u32, n_max: u32) -> Result<()> {
    let found = t.sturm_count(truncation_level(n_max));
    let expected = (n_max - l) as usize;
    if found != expected {
        return Err(Error::TruncationMismatch(format!(
            "channel l = {l}: {found} eigenvalues below the truncation level, expected {expected}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub n: u32,
    /// `Tr[U π⁰_n]`.
    pub tr_u_pi0: f64,
    /// `Tr[U (π_n - π⁰_n)]`.
    pub tr_u_dpi: f64,
    /// `Σ_k (λ_{n,k} - λ⁰_{n,k})`.
    pub eigen_shift_sum: f64,
    /// `r ‖⟨x⟩^{-3/2}U‖ n⁻³`.
    pub scale_pi0: f64,
    /// `ς r ‖⟨x⟩^{-3/2}U‖ (r^{3/2} n⁻³ (1 + |log(r n⁻²)|) + n⁻¹)`.
    pub scale_dpi: f64,
    pub smallness: SmallnessFlags,
}

/// Trace functionals of cluster `n` on a given grid.
pub fn trace_functionals(grid: &RadialGrid, perturbation: &PerturbationSpec, n: u32) -> Result<TraceReport> {
    if n == 0 {
        return Err(Error::Domain("cluster index must be positive".into()));
    }
    let per_l = (0..n)
        .into_par_iter()
        .map(|l| -> Result<(f64, f64, f64)> {
            let k = (n - l - 1) as usize;
            let p0 = channel_pairs(&channel(grid, l, None, None)?, l, n)?;
            let p1 = channel_pairs(&channel(grid, l, Some(perturbation), None)?, l, n)?;
            let weight = (2 * l + 1) as f64;
            let e0 = expectation(grid, perturbation, &p0[k].1);
            let e1 = expectation(grid, perturbation, &p1[k].1);
            Ok((weight * e0, weight * (e1 - e0), weight * (p1[k].0 - p0[k].0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (tr_u_pi0, tr_u_dpi, eigen_shift_sum) =
        per_l.iter().fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let r = perturbation.support_radius;
    let norm = perturbation.weighted_l1_norm();
    let nf = n as f64;
    let log_term = 1.0 + (r / (nf * nf)).ln().abs();
    Ok(TraceReport {
        n,
        tr_u_pi0,
        tr_u_dpi,
        eigen_shift_sum,
        scale_pi0: r * norm * nf.powi(-3),
        scale_dpi: perturbation.varsigma * r * norm * (r.powf(1.5) * nf.powi(-3) * log_term + 1.0 / nf),
        smallness: perturbation.smallness(DEFAULT_EPSILON0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterIdentity {
    pub n: u32,
    pub eigen_shift_sum: f64,
    /// `∫₀^ς Tr[U π_n^t] dt`.
    pub integral: f64,
    pub defect: f64,
    pub relative_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub varsigma: f64,
    pub n_max: u32,
    pub quadrature_nodes: usize,
    /// `Tr[H_V⁻ - H_{V⁰}⁻]` over the retained shells.
    pub lhs: f64,
    /// `-∫₀^ς Tr[U θ(-H_{V^t})] dt`.
    pub rhs: f64,
    pub relative_defect: f64,
    pub per_cluster: Vec<ClusterIdentity>,
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        if defect == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        defect.abs() / scale.abs()
    }
}

/// Sum rule with `θ(-H)` truncated below the midgap under shell `n_max + 1`.
pub fn sum_rule(
    grid: &RadialGrid,
    perturbation: &PerturbationSpec,
    n_max: u32,
    quadrature_nodes: usize,
) -> Result<SumRuleReport> {
    let varsigma = perturbation.varsigma;
    let (nodes, weights) = quadrature::mapped_rule(0.0, varsigma, quadrature_nodes);
    let n_clusters = n_max as usize;
    // per channel: eigenvalue shifts and per-shell integrals
    let per_l = (0..n_max)
        .into_par_iter()
        .map(|l| -> Result<(Vec<f64>, Vec<f64>)> {
            let t0 = channel(grid, l, None, None)?;
            check_truncation(&t0, l, n_max)?;
            let full = channel(grid, l, Some(perturbation), None)?;
            check_truncation(&full, l, n_max)?;
            let count = (n_max - l) as usize;
            let mu0 = t0.smallest_eigenvalues(count)?;
            let mu1 = full.smallest_eigenvalues(count)?;
            let shifts: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
            let mut integrals = vec![0.0; count];
            for (&t, &w) in nodes.iter().zip(&weights) {
                let tt = channel(grid, l, Some(&perturbation.with_varsigma(t)), None)?;
                check_truncation(&tt, l, n_max)?;
                for (k, (_, v)) in channel_pairs(&tt, l, n_max)?.iter().enumerate() {
                    integrals[k] += w * expectation(grid, perturbation, v);
                }
            }
            Ok((shifts, integrals))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut shell_shift = vec![0.0; n_clusters];
    let mut shell_integral = vec![0.0; n_clusters];
    for (l, (shifts, integrals)) in per_l.iter().enumerate() {
        let weight = (2 * l + 1) as f64;
        for k in 0..shifts.len() {
            shell_shift[l + k] += weight * shifts[k];
            shell_integral[l + k] += weight * integrals[k];
        }
    }
    let lhs: f64 = shell_shift.iter().sum();
    let rhs: f64 = -shell_integral.iter().sum::<f64>();
    let per_cluster = (0..n_clusters)
        .map(|i| {
            let defect = shell_shift[i] + shell_integral[i];
            ClusterIdentity {
                n: i as u32 + 1,
                eigen_shift_sum: shell_shift[i],
                integral: shell_integral[i],
                defect,
                relative_defect: relative(defect, shell_shift[i]),
            }
        })
        .collect();
    Ok(SumRuleReport {
        varsigma,
        n_max,
        quadrature_nodes,
        lhs,
        rhs,
        relative_defect: relative(lhs - rhs, lhs),
        per_cluster,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPerturbationReport {
    pub varsigma: f64,
    pub varepsilon: f64,
    pub kappa: f64,
    /// `Tr[H⁻_{V⁰+εΦ} - H⁻_{V⁰} - H⁻_{V⁰+ςU+εΦ} + H⁻_{V⁰+ςU}]`.
    pub value: f64,
    /// `(ς+ε)^{1-κ} r (ς ‖⟨x⟩^{-3/2}U‖ + ε r^{3/2})`.
    pub reference_scale: f64,
    pub ratio: f64,
    /// `ε r^{3/2} ≤ ε₀`.
    pub phi_small: bool,
}

/// Truncated `Tr[H⁻]` of `K(0) - ςU - εΦ` over shells `≤ n_max`.
fn truncated_negative_trace(
    grid: &RadialGrid,
    u: Option<&PerturbationSpec>,
    phi: Option<&PerturbationSpec>,
    n_max: u32,
) -> Result<f64> {
    let parts = (0..n_max)
        .into_par_iter()
        .map(|l| -> Result<f64> {
            let t = channel(grid, l, u, phi)?;
            check_truncation(&t, l, n_max)?;
            let mu = t.smallest_eigenvalues((n_max - l) as usize)?;
            Ok((2 * l + 1) as f64 * mu.iter().sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

pub fn two_perturbation_trace(
    grid: &RadialGrid,
    u: &PerturbationSpec,
    phi: &PerturbationSpec,
    varsigma: f64,
    varepsilon: f64,
    n_max: u32,
    kappa: f64,
) -> Result<TwoPerturbationReport> {
    let u = u.with_varsigma(varsigma);
    let phi = phi.with_varsigma(varepsilon);
    let e_phi = truncated_negative_trace(grid, None, Some(&phi), n_max)?;
    let e_0 = truncated_negative_trace(grid, None, None, n_max)?;
    let e_both = truncated_negative_trace(grid, Some(&u), Some(&phi), n_max)?;
    let e_u = truncated_negative_trace(grid, Some(&u), None, n_max)?;
    let value = (e_phi - e_0) - (e_both - e_u);
    let r = u.support_radius.max(phi.support_radius);
    let reference_scale =
        (varsigma + varepsilon).powf(1.0 - kappa) * r * (varsigma * u.weighted_l1_norm() + varepsilon * r.powf(1.5));
    Ok(TwoPerturbationReport {
        varsigma,
        varepsilon,
        kappa,
        value,
        reference_scale,
        ratio: relative(value, reference_scale),
        phi_small: varepsilon * r.powf(1.5) <= DEFAULT_EPSILON0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorShift {
    pub n: u32,
    /// `‖π_{n,l} - π⁰_{n,l}‖` per channel, `l = 0..n-1`.
    pub per_channel: Vec<f64>,
    /// `‖π_n - π⁰_n‖`, the maximum over channels.
    pub norm: f64,
    /// `norm / ς`.
    pub relative: f64,
    /// `r^{3/2}(1 + |log(r n⁻²)|) + n^{1/2} r^{3/4}`.
    pub envelope: f64,
}

/// Operator-norm distance between perturbed and unperturbed cluster projectors.
///
/// Each channel projector has rank one, so the distance is the sine of the
/// angle between the two eigenvectors.
pub fn projector_shift(grid: &RadialGrid, perturbation: &PerturbationSpec, n: u32) -> Result<ProjectorShift> {
    let per_channel = (0..n)
        .into_par_iter()
        .map(|l| -> Result<f64> {
            let k = (n - l - 1) as usize;
            let a = channel_pairs(&channel(grid, l, None, None)?, l, n)?;
            let b = channel_pairs(&channel(grid, l, Some(perturbation), None)?, l, n)?;
            let (v0, v1) = (&a[k].1, &b[k].1);
            let dot: f64 = v0.iter().zip(v1).map(|(x, y)| x * y).sum();
            Ok(v1.iter().zip(v0).map(|(y, x)| (y - dot * x).powi(2)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let norm = per_channel.iter().fold(0.0f64, |m, &v| m.max(v));
    let r = perturbation.support_radius;
    let nf = n as f64;
    Ok(ProjectorShift {
        n,
        norm,
        relative: if perturbation.varsigma > 0.0 { norm / perturbation.varsigma } else { 0.0 },
        envelope: r.powf(1.5) * (1.0 + (r / (nf * nf)).ln().abs()) + nf.sqrt() * r.powf(0.75),
        per_channel,
    })
}
