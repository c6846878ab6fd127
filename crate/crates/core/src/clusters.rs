//! Eigenvalue clusters of the 3-D operator assembled from radial channels,
//! perturbation tracking, and Weyl counting.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{PerturbationSpec, SmallnessFlags, DEFAULT_EPSILON0};
use crate::quadrature;
use crate::radial_operator::{ChannelSolver, Discretization};
use crate::specfun::level_energy;

/// Gap threshold on the `n⁻³` scale.
pub const GAP_THETA: f64 = 0.5;
/// Tolerance for grouping exactly degenerate values.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Largest coupling for which cluster state counts are asserted.
pub const STRICT_COUNT_BETA: f64 = 0.2;
/// Largest `n_max` accepted for relativistic spectra.
pub const MAX_REL_N: u32 = 12;
/// Distance to an eigenvalue below which Weyl counts are flagged.
pub const COUNT_AMBIGUITY: f64 = 1e-6;

/// Radial eigenvalue of channel `l`, carrying the magnetic multiplicity `2l+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedLevel {
    pub value: f64,
    pub l: u32,
    /// Radial rank label `n = l + 1 + k` within the channel.
    pub n: u32,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpectrum {
    pub beta: f64,
    pub n_max: u32,
    /// Ascending by value.
    pub levels: Vec<WeightedLevel>,
}

impl WeightedSpectrum {
    pub fn total_weight(&self) -> u64 {
        self.levels.iter().map(|l| l.weight as u64).sum()
    }
}

fn sort_levels(levels: &mut [WeightedLevel]) {
    levels.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.l.cmp(&b.l)));
}

/// Channel solvers for `l = 0..n_max-1` sharing one discretization.
#[derive(Debug)]
pub struct SpectrumSolver {
    n_max: u32,
    channels: Vec<ChannelSolver>,
}

impl SpectrumSolver {
    pub fn new(n_max: u32) -> Result<Self> {
        Self::with_discretization(n_max, Discretization::for_levels(n_max))
    }

    pub fn with_discretization(n_max: u32, disc: Discretization) -> Result<Self> {
        let channels = (0..n_max).map(|l| ChannelSolver::new(disc, l)).collect::<Result<_>>()?;
        Ok(Self { n_max, channels })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn channels(&self) -> &[ChannelSolver] {
        &self.channels
    }

    /// Extrapolated radial levels of every channel up to shell `n_max`.
    pub fn assemble(&self, beta: f64, perturbation: Option<&PerturbationSpec>) -> Result<WeightedSpectrum> {
        if beta > 0.0 && self.n_max > MAX_REL_N {
            return Err(Error::Precondition(format!(
                "relativistic spectra are limited to n_max <= {MAX_REL_N}, got {}",
                self.n_max
            )));
        }
        let per_channel: Vec<Vec<WeightedLevel>> = self
            .channels
            .par_iter()
            .map(|ch| {
                let l = ch.l();
                let values = ch.levels(beta, perturbation, (self.n_max - l) as usize)?;
                Ok(values
                    .into_iter()
                    .enumerate()
                    .map(|(k, value)| WeightedLevel { value, l, n: l + 1 + k as u32, weight: 2 * l + 1 })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut levels: Vec<WeightedLevel> = per_channel.into_iter().flatten().collect();
        sort_levels(&mut levels);
        Ok(WeightedSpectrum { beta, n_max: self.n_max, levels })
    }
}

/// Weighted 3-D spectrum through shell `n_max`; the unperturbed `β = 0`
/// spectrum uses the closed-form levels.
pub fn assemble_3d_spectrum(
    beta: f64,
    perturbation: Option<&PerturbationSpec>,
    n_max: u32,
) -> Result<WeightedSpectrum> {
    if n_max == 0 {
        return Ok(WeightedSpectrum { beta, n_max, levels: Vec::new() });
    }
    if beta == 0.0 && perturbation.is_none() {
        let mut levels = Vec::new();
        for n in 1..=n_max {
            for l in 0..n {
                levels.push(WeightedLevel { value: level_energy(n), l, n, weight: 2 * l + 1 });
            }
        }
        sort_levels(&mut levels);
        return Ok(WeightedSpectrum { beta, n_max, levels });
    }
    SpectrumSolver::new(n_max)?.assemble(beta, perturbation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCluster {
    #[serde(rename = "n")]
    pub index_n: u32,
    /// State count `Σ (2l+1)`.
    pub count: u32,
    pub width: f64,
    /// `None` below the lowest cluster.
    pub gap_below: Option<f64>,
    /// `None` above the highest cluster.
    pub gap_above: Option<f64>,
    /// Distinct radial eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of each entry of `eigenvalues`.
    pub weights: Vec<u32>,
}

impl SpectralCluster {
    /// Eigenvalues repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues.iter().zip(&self.weights).flat_map(|(&v, &w)| std::iter::repeat_n(v, w as usize)).collect()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("clusters are non-empty")
    }

    /// Midpoint of the enclosing interval.
    pub fn center(&self) -> f64 {
        0.5 * (self.min() + self.max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStatus {
    Ok,
    /// Some cluster's state count differs from `n²` at a coupling where the
    /// numbering is not asserted; levels were renumbered by position.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub beta: f64,
    pub status: ClusterStatus,
    pub clusters: Vec<SpectralCluster>,
}

/// Gap-based segmentation of a sorted weighted spectrum.
///
/// Values within [`DEGENERACY_TOL`] are merged first; a new cluster starts
/// when the gap below a value exceeds `θ n⁻³` with `n = (-1/(4 value))^{1/2}`.
pub fn detect_clusters(spectrum: &WeightedSpectrum) -> Result<ClusterReport> {
    let levels = &spectrum.levels;
    if levels.windows(2).any(|w| w[1].value < w[0].value) {
        return Err(Error::Precondition("spectrum must be sorted ascending".into()));
    }
    if let Some(bad) = levels.iter().find(|l| l.value >= 0.0) {
        return Err(Error::Precondition(format!("non-negative level {} in a bound-state spectrum", bad.value)));
    }
    // exact-degeneracy grouping
    let mut points: Vec<(f64, u32)> = Vec::new();
    for lv in levels {
        match points.last_mut() {
            Some((v, w)) if (lv.value - *v).abs() <= DEGENERACY_TOL => *w += lv.weight,
            _ => points.push((lv.value, lv.weight)),
        }
    }
    let mut groups: Vec<Vec<(f64, u32)>> = Vec::new();
    for &(v, w) in &points {
        let start_new = match groups.last().and_then(|g| g.last()) {
            None => true,
            Some(&(prev, _)) => {
                let n_est = (-0.25 / v).sqrt();
                v - prev > GAP_THETA * n_est.powi(-3)
            }
        };
        if start_new {
            groups.push(vec![(v, w)]);
        } else {
            groups.last_mut().expect("non-empty").push((v, w));
        }
    }
    let mut clusters: Vec<SpectralCluster> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| SpectralCluster {
            index_n: i as u32 + 1,
            count: g.iter().map(|p| p.1).sum(),
            width: g.last().expect("non-empty").0 - g[0].0,
            gap_below: None,
            gap_above: None,
            eigenvalues: g.iter().map(|p| p.0).collect(),
            weights: g.iter().map(|p| p.1).collect(),
        })
        .collect();
    for i in 0..clusters.len() {
        if i > 0 {
            clusters[i].gap_below = Some(clusters[i].min() - clusters[i - 1].max());
        }
        if i + 1 < clusters.len() {
            clusters[i].gap_above = Some(clusters[i + 1].min() - clusters[i].max());
        }
    }
    let mismatched: Vec<u32> =
        clusters.iter().filter(|c| c.count != c.index_n * c.index_n).map(|c| c.index_n).collect();
    let status = if mismatched.is_empty() {
        ClusterStatus::Ok
    } else if spectrum.beta <= STRICT_COUNT_BETA {
        return Err(Error::ClusterMismatch(format!(
            "clusters {mismatched:?} do not hold n^2 states at beta = {}",
            spectrum.beta
        )));
    } else {
        log::warn!("cluster numbering ambiguous at beta = {}: clusters {mismatched:?}", spectrum.beta);
        ClusterStatus::Ambiguous
    };
    Ok(ClusterReport { beta: spectrum.beta, status, clusters })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub n: u32,
    /// Rank within the cluster, from 1.
    pub rank: u32,
    pub unperturbed: f64,
    pub perturbed: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterShift {
    pub n: u32,
    /// `Σ_k (λ_{n,k} - λ⁰_{n,k})`.
    pub sum: f64,
    /// `ς r ‖⟨x⟩^{-3/2}U‖_{L¹} n⁻³`.
    pub reference_scale: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub beta: f64,
    pub varsigma: f64,
    pub support_radius: f64,
    pub weighted_norm: f64,
    pub smallness: SmallnessFlags,
    pub pairs: Vec<MatchedPair>,
    pub shifts: Vec<ClusterShift>,
    pub unperturbed: ClusterReport,
    pub perturbed: ClusterReport,
}

/// Pairs `λ⁰_{n,k}` with `λ_{n,k}` by cluster index and rank within the cluster.
pub fn match_clusters(
    unperturbed: ClusterReport,
    perturbed: ClusterReport,
    perturbation: &PerturbationSpec,
) -> Result<MatchReport> {
    if unperturbed.clusters.len() != perturbed.clusters.len() {
        return Err(Error::ClusterMismatch(format!(
            "{} unperturbed clusters against {} perturbed",
            unperturbed.clusters.len(),
            perturbed.clusters.len()
        )));
    }
    let norm = perturbation.weighted_l1_norm();
    let mut pairs = Vec::new();
    let mut shifts = Vec::new();
    for (c0, c1) in unperturbed.clusters.iter().zip(&perturbed.clusters) {
        if c0.count != c1.count {
            return Err(Error::ClusterMismatch(format!(
                "cluster {} holds {} states unperturbed and {} perturbed",
                c0.index_n, c0.count, c1.count
            )));
        }
        let mut sum = 0.0;
        for (k, (a, b)) in c0.expanded().into_iter().zip(c1.expanded()).enumerate() {
            sum += b - a;
            pairs.push(MatchedPair {
                n: c0.index_n,
                rank: k as u32 + 1,
                unperturbed: a,
                perturbed: b,
                difference: b - a,
            });
        }
        let reference_scale = perturbation.varsigma * perturbation.support_radius * norm * (c0.index_n as f64).powi(-3);
        let ratio = if reference_scale > 0.0 { sum.abs() / reference_scale } else { 0.0 };
        shifts.push(ClusterShift { n: c0.index_n, sum, reference_scale, ratio });
    }
    Ok(MatchReport {
        beta: unperturbed.beta,
        varsigma: perturbation.varsigma,
        support_radius: perturbation.support_radius,
        weighted_norm: norm,
        smallness: perturbation.smallness(DEFAULT_EPSILON0),
        pairs,
        shifts,
        unperturbed,
        perturbed,
    })
}

/// Solves both spectra on one discretization and matches them.
pub fn perturb_and_match(beta: f64, perturbation: &PerturbationSpec, n_max: u32) -> Result<MatchReport> {
    let solver = SpectrumSolver::new(n_max)?;
    perturb_and_match_with(&solver, beta, perturbation)
}

pub fn perturb_and_match_with(
    solver: &SpectrumSolver,
    beta: f64,
    perturbation: &PerturbationSpec,
) -> Result<MatchReport> {
    let flags = perturbation.smallness(DEFAULT_EPSILON0);
    if !flags.three_halves {
        log::warn!(
            "smallness varsigma r^(3/2) <= {} not satisfied (varsigma = {}, r = {})",
            flags.epsilon0,
            perturbation.varsigma,
            perturbation.support_radius
        );
    }
    let c0 = detect_clusters(&solver.assemble(beta, None)?)?;
    let c1 = detect_clusters(&solver.assemble(beta, Some(perturbation))?)?;
    match_clusters(c0, c1, perturbation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub tau: f64,
    /// Number of states below `tau`.
    pub exact: f64,
    /// Phase-space volume `(1/6π²) ∫ (τ + 1/r + ςU)₊^{3/2} dx`.
    pub weyl: f64,
    /// `|τ|^{-3/2}/24`, the unperturbed closed form.
    pub closed_form: f64,
    pub exact_over_weyl: f64,
    /// `weyl · |τ|³`: how far the count is from scaling like `|τ|^{-3}`.
    pub against_cubic_scale: f64,
    pub near_eigenvalue: bool,
}

/// Closed-form Weyl volume of the pure Coulomb well.
pub fn weyl_closed_form(tau: f64) -> f64 {
    tau.abs().powf(-1.5) / 24.0
}

/// Phase-space volume by radial quadrature in `s = √r`.
pub fn weyl_volume(tau: f64, perturbation: Option<&PerturbationSpec>) -> f64 {
    let potential = |r: f64| 1.0 / r + perturbation.map_or(0.0, |p| p.potential(r));
    let r_turn = 1.0 / tau.abs();
    let mut edges = vec![0.0, r_turn.sqrt()];
    if let Some(p) = perturbation {
        edges.push(p.inner_radius.sqrt());
        edges.push(p.support_radius.sqrt());
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let r = s * s;
        let k = tau + potential(r);
        if k <= 0.0 {
            0.0
        } else {
            k.powf(1.5) * r * r * 2.0 * s
        }
    };
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += quadrature::integrate(integrand, w[0], w[1], 400, 16);
    }
    4.0 * PI * total / (6.0 * PI * PI)
}

/// Counts states below `tau` (non-relativistic) and compares with the Weyl volume.
pub fn weyl_count(tau: f64, perturbation: Option<&PerturbationSpec>) -> Result<WeylReport> {
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau = {tau} must be negative")));
    }
    let (exact, nearest) = match perturbation {
        None => {
            let mut count = 0.0;
            let mut nearest = f64::INFINITY;
            let mut n = 1u32;
            loop {
                let e = level_energy(n);
                nearest = nearest.min((e - tau).abs());
                if e >= tau {
                    break;
                }
                count += (n as f64).powi(2);
                n += 1;
            }
            (count, nearest)
        }
        Some(p) => perturbed_count(tau, p)?,
    };
    let near_eigenvalue = nearest <= COUNT_AMBIGUITY;
    if near_eigenvalue {
        log::warn!("tau = {tau} lies within {nearest:.2e} of an eigenvalue; the count is ambiguous");
    }
    let weyl = weyl_volume(tau, perturbation);
    Ok(WeylReport {
        tau,
        exact,
        weyl,
        closed_form: weyl_closed_form(tau),
        exact_over_weyl: exact / weyl,
        against_cubic_scale: weyl * tau.abs().powi(3),
        near_eigenvalue,
    })
}

fn perturbed_count(tau: f64, p: &PerturbationSpec) -> Result<(f64, f64)> {
    // enough shells that the unperturbed level n_max + 1 lies above tau
    let n_tau = (0.5 / tau.abs().sqrt()).ceil() as u32 + 2;
    let mut disc = Discretization::for_levels(n_tau);
    disc.r_max = disc.r_max.max(2.0 * p.support_radius);
    disc.r_max = (disc.r_max / disc.coarse_step).ceil() * disc.coarse_step;
    let mut count = 0.0;
    let mut nearest = f64::INFINITY;
    for l in 0..n_tau {
        let solver = ChannelSolver::new(disc, l)?;
        let levels = solver.levels(0.0, Some(p), (n_tau - l) as usize)?;
        if levels[0] >= tau && levels[0] - tau > COUNT_AMBIGUITY {
            break;
        }
        for v in levels {
            nearest = nearest.min((v - tau).abs());
            if v < tau {
                count += (2 * l + 1) as f64;
            }
        }
    }
    Ok((count, nearest))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylDifference {
    pub tau: f64,
    pub difference: f64,
    /// `ς r^{5/2}`.
    pub scale: f64,
    pub ratio: f64,
}

/// `|𝒩^W(τ; V⁰+ςU) - 𝒩^W(τ; V⁰)|` against `ς r^{5/2}`.
pub fn weyl_perturbation_difference(tau: f64, perturbation: &PerturbationSpec) -> WeylDifference {
    let difference = (weyl_volume(tau, Some(perturbation)) - weyl_volume(tau, None)).abs();
    let scale = perturbation.varsigma * perturbation.support_radius.powf(2.5);
    WeylDifference { tau, difference, scale, ratio: if scale > 0.0 { difference / scale } else { 0.0 } }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterShellReport {
    pub n: u32,
    pub support_radius: f64,
    pub varsigma: f64,
    /// `μ_{n,l} - μ⁰_{n,l}` for `l = 0..n-1`.
    pub shifts: Vec<f64>,
    pub max_abs_shift: f64,
    /// `max |Δλ| / ς`.
    pub relative_shift: f64,
    /// `(s, r^{-s}, relative_shift ≤ r^{-s})` for `s = 2, 4`.
    pub power_checks: Vec<(u32, f64, bool)>,
}

/// Eigenvalue shifts of shell `n` under a perturbation supported in `[r/2, r]`.
pub fn outer_shell_estimates(beta: f64, perturbation: &PerturbationSpec, n: u32) -> Result<OuterShellReport> {
    let r = perturbation.support_radius;
    if perturbation.inner_radius + 1e-12 < 0.5 * r {
        return Err(Error::Precondition(format!(
            "support must lie in [r/2, r]; inner radius {} < {}",
            perturbation.inner_radius,
            0.5 * r
        )));
    }
    if n == 0 || (n as f64) > r.sqrt() {
        return Err(Error::Precondition(format!("shell n = {n} must satisfy 1 <= n <= sqrt(r)")));
    }
    let mut disc = Discretization::for_levels(n);
    disc.r_max = disc.r_max.max(2.0 * r);
    disc.r_max = (disc.r_max / disc.coarse_step).ceil() * disc.coarse_step;
    let shifts = (0..n)
        .into_par_iter()
        .map(|l| -> Result<f64> {
            let ch = ChannelSolver::new(disc, l)?;
            let count = (n - l) as usize;
            let a = ch.levels(beta, None, count)?;
            let b = ch.levels(beta, Some(perturbation), count)?;
            Ok(b[count - 1] - a[count - 1])
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_abs_shift = shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let relative_shift = if perturbation.varsigma > 0.0 { max_abs_shift / perturbation.varsigma } else { 0.0 };
    let power_checks = [2u32, 4]
        .iter()
        .map(|&s| {
            let bound = r.powi(-(s as i32));
            (s, bound, relative_shift <= bound)
        })
        .collect();
    Ok(OuterShellReport {
        n,
        support_radius: r,
        varsigma: perturbation.varsigma,
        shifts,
        max_abs_shift,
        relative_shift,
        power_checks,
    })
}
