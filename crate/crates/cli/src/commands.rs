//! One argument schema and one runner per subcommand.
//!
//! Every schema denies unknown fields, which is how config-file keys outside
//! the command are rejected. Runners return the resolved parameters (defaults
//! filled in, used for the config hash) and the report.

use clap::{Args, ValueEnum};
use coulomb_spectral::bounds_lab::{
    edge_regime_scan, envelope_scan, tail_decay_check, zero_spacing_scan, Claim, LRule, ScanConfig, ScanReport,
    TailSide,
};
use coulomb_spectral::clusters::{detect_clusters, perturb_and_match, weyl_count, ClusterStatus, SpectrumSolver};
use coulomb_spectral::density::{DensityModel, DEFAULT_N_MAX_NONREL};
use coulomb_spectral::perturbation::{PerturbationSpec, Profile};
use coulomb_spectral::projectors::{
    projector_contour, projector_eigensum, projector_lemma_check, projector_shift, sum_rule, trace_grid, Contour,
    LemmaStatus, SchattenNorm, DEFAULT_N_QUAD, IDEMPOTENCY_TOL,
};
use coulomb_spectral::radial_operator::{build_grid, build_nonrel, Discretization};
use coulomb_spectral::specfun::level_energy;
use coulomb_spectral::RadialGrid;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::Report;
use crate::Failure;

/// Relative defect accepted by the sum-rule check.
pub const SUM_RULE_TOL: f64 = 1e-4;
/// Contour and eigenvector projectors must agree to this in operator norm.
pub const CONTOUR_AGREEMENT_TOL: f64 = 1e-6;
/// Unperturbed Weyl volume against its closed form.
pub const WEYL_CLOSED_FORM_TOL: f64 = 5e-3;
/// Claim identifiers accepted by `bounds`.
pub const BOUNDS_CLAIMS: [&str; 12] =
    ["A.12", "A.26", "A.32", "A.33", "A.34", "A.36", "A.37", "A.40", "A.43", "A.44", "B.13", "B.27"];
/// Step of the trace-experiment grids.
pub const TRACE_STEP: f64 = 0.25;

type Run = Result<(Value, Report), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileArg {
    Box,
    Bump,
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required --{flag}")))
}

/// `None` when the coupling is absent or zero.
fn perturbation(
    varsigma: Option<f64>,
    support: Option<f64>,
    inner: Option<f64>,
    profile: Option<ProfileArg>,
) -> Result<Option<PerturbationSpec>, Failure> {
    match varsigma {
        None => Ok(None),
        Some(0.0) => Ok(None),
        Some(s) => {
            let support = required(support, "support")?;
            let profile = match profile.unwrap_or(ProfileArg::Box) {
                ProfileArg::Box => Profile::Box,
                ProfileArg::Bump => Profile::Bump,
            };
            Ok(Some(PerturbationSpec::new(s, support, inner.unwrap_or(0.0), profile)?))
        }
    }
}

fn perturbation_json(p: &Option<PerturbationSpec>) -> Value {
    match p {
        Some(p) => serde_json::to_value(p).expect("plain data"),
        None => Value::Null,
    }
}

fn grid_json(g: &RadialGrid) -> Value {
    json!({ "kind": "uniform", "r_max": g.r_max(), "step": g.step(), "points": g.len() })
}

fn richardson_json(d: Discretization) -> Value {
    json!({ "kind": "richardson_pair", "r_max": d.r_max, "coarse_step": d.coarse_step, "fine_step": 0.5 * d.coarse_step })
}

// ---------------------------------------------------------------- density

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityArgs {
    /// Relativistic coupling (0 for the Schrödinger density).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number of retained shells.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Largest output radius.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Number of output radii, including 0 and rmax.
    #[arg(long)]
    pub gridpoints: Option<usize>,
}

pub fn density(a: DensityArgs) -> Run {
    let beta = required(a.beta, "beta")?;
    let n_max = a.nmax.unwrap_or(DEFAULT_N_MAX_NONREL);
    let r_max = a.rmax.unwrap_or(50.0);
    let points = a.gridpoints.unwrap_or(501);
    if points < 2 || r_max.is_nan() || r_max <= 0.0 {
        return Err(Failure::Usage("density needs --gridpoints >= 2 and --rmax > 0".into()));
    }
    let model = DensityModel::new(beta, n_max)?;
    let radii: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
    let profile = model.profile(&radii);

    let mut report = Report::new("1.21", &["r", "value", "tail_bound"]);
    for ((r, v), t) in profile.radii.iter().zip(&profile.values).zip(&profile.tail_bounds) {
        report.push(vec![json!(r), json!(v), json!(t)]);
    }
    let origin = profile.values[0];
    let mut summary = json!({
        "convention": profile.convention,
        "origin_value": origin,
        "max_tail_bound": profile.tail_bound(),
    });
    if beta == 0.0 {
        // ρ̄_0(0) = Σ_{n ≤ n_max} n⁻³ / 8π under the unit radial norm
        let reference: f64 = (1..=n_max).map(|n| (n as f64).powi(-3)).sum::<f64>() / (8.0 * std::f64::consts::PI);
        let rel = (origin - reference).abs() / reference;
        summary["origin_reference"] = json!(reference);
        summary["origin_relative_error"] = json!(rel);
        report.pass = rel <= 1e-10;
    }
    report.summary = summary;
    report.grid = json!({ "kind": "output_radii", "r_max": r_max, "points": points });
    Ok((json!({ "beta": beta, "nmax": n_max, "rmax": r_max, "gridpoints": points }), report))
}

// ---------------------------------------------------------------- spectrum / clusters

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Relativistic coupling.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Highest retained shell.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Perturbation coupling; omit or 0 for none.
    #[arg(long)]
    pub varsigma: Option<f64>,
    /// Outer radius of the perturbation support.
    #[arg(long)]
    pub support: Option<f64>,
    /// Inner radius of the perturbation support.
    #[arg(long)]
    pub inner_support: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
}

struct Resolved {
    beta: f64,
    n_max: u32,
    pert: Option<PerturbationSpec>,
    params: Value,
}

fn resolve_spectrum(a: &SpectrumArgs) -> Result<Resolved, Failure> {
    let beta = required(a.beta, "beta")?;
    let n_max = a.nmax.unwrap_or(8);
    if n_max == 0 {
        return Err(Failure::Usage("--nmax must be positive".into()));
    }
    let pert = perturbation(a.varsigma, a.support, a.inner_support, a.profile)?;
    let params = json!({ "beta": beta, "nmax": n_max, "perturbation": perturbation_json(&pert) });
    Ok(Resolved { beta, n_max, pert, params })
}

pub fn spectrum(a: SpectrumArgs) -> Run {
    let r = resolve_spectrum(&a)?;
    let solver = SpectrumSolver::new(r.n_max)?;
    let spec = solver.assemble(r.beta, r.pert.as_ref())?;
    let mut report = Report::new("B.3", &["n", "l", "weight", "value", "coulomb_level", "difference"]);
    for lv in &spec.levels {
        let reference = level_energy(lv.n);
        report.push(vec![
            json!(lv.n),
            json!(lv.l),
            json!(lv.weight),
            json!(lv.value),
            json!(reference),
            json!(lv.value - reference),
        ]);
    }
    let expected: u64 = (1..=r.n_max as u64).map(|n| n * n).sum();
    report.pass = spec.total_weight() == expected;
    report.summary = json!({ "total_weight": spec.total_weight(), "expected_weight": expected });
    report.grid = richardson_json(Discretization::for_levels(r.n_max));
    Ok((r.params, report))
}

pub fn clusters(a: SpectrumArgs) -> Run {
    let r = resolve_spectrum(&a)?;
    let spec = SpectrumSolver::new(r.n_max)?.assemble(r.beta, r.pert.as_ref())?;
    let found = detect_clusters(&spec)?;
    let mut report = Report::new(
        "B.7",
        &["n", "count", "expected_count", "width", "width_scale", "gap_below", "gap_above", "center"],
    );
    let mut counts_ok = found.clusters.len() == r.n_max as usize;
    for c in &found.clusters {
        let n = c.index_n as f64;
        counts_ok &= c.count == c.index_n * c.index_n;
        report.push(vec![
            json!(c.index_n),
            json!(c.count),
            json!(c.index_n * c.index_n),
            json!(c.width),
            json!(r.beta * r.beta * n.powi(-3)),
            json!(c.gap_below),
            json!(c.gap_above),
            json!(c.center()),
        ]);
    }
    report.pass = counts_ok && found.status == ClusterStatus::Ok;
    report.summary = json!({ "status": found.status, "clusters": found.clusters.len(), "expected_clusters": r.n_max });
    report.grid = richardson_json(Discretization::for_levels(r.n_max));
    Ok((r.params, report))
}

pub fn perturb(a: SpectrumArgs) -> Run {
    let r = resolve_spectrum(&a)?;
    let pert = r.pert.ok_or_else(|| Failure::Usage("perturb needs a positive --varsigma and --support".into()))?;
    let matched = perturb_and_match(r.beta, &pert, r.n_max)?;
    let mut report = Report::new("2.3", &["n", "shift_sum", "reference_scale", "ratio"]);
    for s in &matched.shifts {
        report.push(vec![json!(s.n), json!(s.sum), json!(s.reference_scale), json!(s.ratio)]);
    }
    let max_ratio = matched.shifts.iter().map(|s| s.ratio.abs()).fold(0.0, f64::max);
    report.pass = matched.unperturbed.status == ClusterStatus::Ok && matched.perturbed.status == ClusterStatus::Ok;
    report.summary = json!({
        "weighted_norm": matched.weighted_norm,
        "smallness": matched.smallness,
        "max_abs_ratio": max_ratio,
        "pairs": matched.pairs.len(),
        "perturbed_status": matched.perturbed.status,
    });
    report.grid = richardson_json(Discretization::for_levels(r.n_max));
    Ok((r.params, report))
}

// ---------------------------------------------------------------- weyl

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylArgs {
    /// Single negative threshold; without it the midgaps of shells 1..=nmax are used.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long)]
    pub varsigma: Option<f64>,
    #[arg(long)]
    pub support: Option<f64>,
    #[arg(long)]
    pub inner_support: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
}

pub fn weyl(a: WeylArgs) -> Run {
    let pert = perturbation(a.varsigma, a.support, a.inner_support, a.profile)?;
    let n_max = a.nmax.unwrap_or(10);
    let taus: Vec<(Option<u32>, f64)> = match a.tau {
        Some(t) => vec![(None, t)],
        None => (1..=n_max).map(|n| (Some(n), 0.5 * (level_energy(n) + level_energy(n + 1)))).collect(),
    };
    let mut report = Report::new(
        "2.6",
        &["tau", "exact", "weyl", "closed_form", "exact_over_weyl", "against_cubic_scale", "near_eigenvalue"],
    );
    let mut worst_closed_form = 0.0f64;
    let mut counts_ok = true;
    for &(midgap, tau) in &taus {
        let rep = weyl_count(tau, pert.as_ref())?;
        if pert.is_none() {
            worst_closed_form = worst_closed_form.max((rep.weyl - rep.closed_form).abs() / rep.closed_form);
            if let Some(n) = midgap {
                counts_ok &= rep.exact == (n * (n + 1) * (2 * n + 1) / 6) as f64;
            }
        }
        report.push(vec![
            json!(rep.tau),
            json!(rep.exact),
            json!(rep.weyl),
            json!(rep.closed_form),
            json!(rep.exact_over_weyl),
            json!(rep.against_cubic_scale),
            json!(rep.near_eigenvalue),
        ]);
    }
    if pert.is_none() {
        report.pass = counts_ok && worst_closed_form <= WEYL_CLOSED_FORM_TOL;
        report.summary = json!({
            "worst_weyl_vs_closed_form": worst_closed_form,
            "tolerance": WEYL_CLOSED_FORM_TOL,
            "midgap_counts_exact": counts_ok,
        });
    }
    report.grid = json!({ "kind": "radial_quadrature" });
    let params = json!({ "tau": a.tau, "nmax": n_max, "perturbation": perturbation_json(&pert) });
    Ok((params, report))
}

// ---------------------------------------------------------------- projector

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorArgs {
    /// Shell index of the projected eigenvalue.
    #[arg(long)]
    pub n: Option<u32>,
    /// Angular momentum of the channel.
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long)]
    pub varsigma: Option<f64>,
    #[arg(long)]
    pub support: Option<f64>,
    #[arg(long)]
    pub inner_support: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Grid extent; defaults to max(8n², 2·support).
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Grid size; requires --rmax.
    #[arg(long)]
    pub gridpoints: Option<usize>,
    /// Contour quadrature nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Number of random projector pairs for the lemma check.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

struct ChannelProjector {
    matrix: Mat<f64>,
    eigensum_distance: f64,
    idempotency: f64,
    trace: f64,
}

fn channel_projector(
    op: &coulomb_spectral::DiscreteOperator,
    k: usize,
    nodes: usize,
) -> Result<ChannelProjector, Failure> {
    let t = op.as_tridiagonal().expect("non-relativistic operators are tridiagonal");
    let ev = t.smallest_eigenvalues(k + 2)?;
    let contour = Contour::enclosing(&ev, k, k, nodes)?;
    let p = projector_contour(op, &contour)?;
    let q = projector_eigensum(op, k, 1)?;
    Ok(ChannelProjector {
        eigensum_distance: p.distance(&q)?,
        idempotency: p.idempotency_defect()?,
        trace: p.trace(),
        matrix: p.matrix,
    })
}

/// Frame of `rank` orthonormal columns and a nearby one tilted by up to `tilt`.
fn random_pair(rng: &mut ChaCha8Rng, dim: usize, rank: usize, tilt: f64) -> (Mat<f64>, Mat<f64>) {
    let base = Mat::from_fn(dim, rank, |_, _| rng.random_range(-1.0..1.0));
    let push = Mat::from_fn(dim, rank, |_, _| tilt * rng.random_range(-1.0..1.0));
    let q0 = base.qr().compute_thin_Q();
    let q1 = (&base + &push).qr().compute_thin_Q();
    (&q1 * q1.transpose(), &q0 * q0.transpose())
}

pub fn projector(a: ProjectorArgs) -> Run {
    let n = a.n.unwrap_or(2);
    let l = a.l.unwrap_or(0);
    if n == 0 || l >= n {
        return Err(Failure::Usage(format!("need 0 <= l < n, got n = {n}, l = {l}")));
    }
    let support = a.support.unwrap_or(4.0);
    let pert = perturbation(a.varsigma, Some(support), a.inner_support, a.profile)?;
    let nodes = a.nodes.unwrap_or(DEFAULT_N_QUAD);
    let samples = a.samples.unwrap_or(0);
    let seed = a.seed.unwrap_or(0);
    let grid = match (a.rmax, a.gridpoints) {
        (Some(r), Some(p)) => build_grid(r, p)?,
        (Some(r), None) => RadialGrid::uniform(r, TRACE_STEP)?,
        (None, Some(_)) => return Err(Failure::Usage("--gridpoints requires --rmax".into())),
        (None, None) => trace_grid(n, support, TRACE_STEP)?,
    };
    let k = (n - l - 1) as usize;
    let p0 = channel_projector(&build_nonrel(&grid, l, None)?, k, nodes)?;
    let p1 = channel_projector(&build_nonrel(&grid, l, pert.as_ref())?, k, nodes)?;

    let mut report = Report::new("3.13", &["pair", "norm", "epsilon", "lhs", "rhs", "status"]);
    let mut violated = 0;
    let mut record = |report: &mut Report, label: String, p: &Mat<f64>, q: &Mat<f64>| -> Result<(), Failure> {
        for norm in [SchattenNorm::Trace, SchattenNorm::Frobenius, SchattenNorm::Operator] {
            let rep = projector_lemma_check(p, q, norm)?;
            violated += usize::from(rep.status == LemmaStatus::Violated);
            report.push(vec![
                json!(label),
                json!(rep.norm),
                json!(rep.epsilon),
                json!(rep.lhs),
                json!(rep.rhs),
                json!(rep.status),
            ]);
        }
        Ok(())
    };
    record(&mut report, "channel".into(), &p1.matrix, &p0.matrix)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples {
        let dim = rng.random_range(2..=40usize);
        let rank = rng.random_range(1..=(dim - 1).min(8));
        let tilt = rng.random_range(0.0..0.3);
        let (p, q) = random_pair(&mut rng, dim, rank, tilt);
        record(&mut report, format!("random_{i}"), &p, &q)?;
    }

    let worst_distance = p0.eigensum_distance.max(p1.eigensum_distance);
    let worst_idempotency = p0.idempotency.max(p1.idempotency);
    let mut summary = json!({
        "contour_vs_eigensum": worst_distance,
        "contour_tolerance": CONTOUR_AGREEMENT_TOL,
        "idempotency_defect": worst_idempotency,
        "idempotency_tolerance": IDEMPOTENCY_TOL,
        "trace_unperturbed": p0.trace,
        "trace_perturbed": p1.trace,
        "lemma_violations": violated,
    });
    if let Some(p) = &pert {
        let shift = projector_shift(&grid, p, n)?;
        summary["shell_projector_shift"] = json!(shift.norm);
        summary["shift_over_varsigma"] = json!(shift.relative);
        summary["shift_envelope"] = json!(shift.envelope);
    }
    report.pass = violated == 0 && worst_distance <= CONTOUR_AGREEMENT_TOL && worst_idempotency <= IDEMPOTENCY_TOL;
    report.summary = summary;
    report.grid = grid_json(&grid);
    let params = json!({
        "n": n, "l": l, "perturbation": perturbation_json(&pert), "support": support,
        "rmax": a.rmax, "gridpoints": a.gridpoints, "nodes": nodes, "samples": samples, "seed": seed,
    });
    Ok((params, report))
}

// ---------------------------------------------------------------- sumrule

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumRuleArgs {
    #[arg(long)]
    pub varsigma: Option<f64>,
    #[arg(long)]
    pub support: Option<f64>,
    #[arg(long)]
    pub inner_support: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Highest retained shell.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Gauss–Legendre nodes over the coupling.
    #[arg(long)]
    pub nodes: Option<usize>,
}

pub fn sumrule(a: SumRuleArgs) -> Run {
    let varsigma = required(a.varsigma, "varsigma")?;
    let support = a.support.unwrap_or(4.0);
    let n_max = a.nmax.unwrap_or(6);
    let nodes = a.nodes.unwrap_or(16);
    if n_max == 0 || nodes == 0 {
        return Err(Failure::Usage("--nmax and --nodes must be positive".into()));
    }
    let profile = match a.profile.unwrap_or(ProfileArg::Box) {
        ProfileArg::Box => Profile::Box,
        ProfileArg::Bump => Profile::Bump,
    };
    let pert = PerturbationSpec::new(varsigma, support, a.inner_support.unwrap_or(0.0), profile)?;
    let grid = trace_grid(n_max, support, TRACE_STEP)?;
    let rep = sum_rule(&grid, &pert, n_max, nodes)?;
    let mut report = Report::new("3.18", &["n", "eigen_shift_sum", "coupling_integral", "defect", "relative_defect"]);
    for c in &rep.per_cluster {
        report.push(vec![
            json!(c.n),
            json!(c.eigen_shift_sum),
            json!(c.integral),
            json!(c.defect),
            json!(c.relative_defect),
        ]);
    }
    report.pass = rep.relative_defect <= SUM_RULE_TOL;
    report.summary = json!({
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "relative_defect": rep.relative_defect,
        "tolerance": SUM_RULE_TOL,
    });
    report.grid = grid_json(&grid);
    let params = json!({ "perturbation": perturbation_json(&Some(pert)), "nmax": n_max, "nodes": nodes });
    Ok((params, report))
}

// ---------------------------------------------------------------- bounds

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsArgs {
    /// Claim identifier: A.26, A.32, A.33, A.34, A.44, B.27 (envelopes), A.12
    /// (zero spacing), A.36, A.37, A.43, B.13 (tails) or A.40 (edge regime).
    #[arg(long)]
    pub claim: Option<String>,
    #[arg(long)]
    pub nmin: Option<u32>,
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed angular momentum.
    #[arg(long)]
    pub l: Option<u32>,
    /// Angular momentum as a fraction of n; excludes --l.
    #[arg(long)]
    pub lfrac: Option<f64>,
    /// Window margin around the turning points.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

fn scan_rows(scan: &ScanReport, report: &mut Report) {
    // parameter columns are fixed per claim; use the first sample's keys
    let keys: Vec<String> = scan.samples.first().map(|s| s.parameters.keys().cloned().collect()).unwrap_or_default();
    report.columns = keys.iter().cloned().chain(["measured", "reference_scale", "ratio"].map(String::from)).collect();
    for s in &scan.samples {
        let mut row: Vec<Value> = keys.iter().map(|k| json!(s.parameters.get(k))).collect();
        row.extend([json!(s.measured), json!(s.reference_scale), json!(s.ratio())]);
        report.push(row);
    }
}

pub fn bounds(a: BoundsArgs) -> Run {
    let claim_id = required(a.claim.clone(), "claim")?;
    let n_min = a.nmin.unwrap_or(6);
    let n_max = a.nmax.unwrap_or(20);
    let beta = a.beta.unwrap_or(0.0);
    if n_min == 0 || n_min > n_max {
        return Err(Failure::Usage(format!("need 1 <= nmin <= nmax, got {n_min}..{n_max}")));
    }
    let l_rule = match (a.l, a.lfrac) {
        (Some(_), Some(_)) => return Err(Failure::Usage("--l and --lfrac are exclusive".into())),
        (_, Some(f)) if (0.0..1.0).contains(&f) => LRule::Fraction(f),
        (_, Some(f)) => return Err(Failure::Usage(format!("--lfrac {f} must lie in [0, 1)"))),
        (l, None) => LRule::Fixed(l.unwrap_or(0)),
    };
    let mut cfg = ScanConfig::default();
    if let Some(e) = a.epsilon {
        cfg.epsilon = e;
    }
    let scan = match claim_id.trim() {
        "A.12" => zero_spacing_scan(n_min..=n_max, l_rule, &cfg)?,
        "A.40" => edge_regime_scan(n_min..=n_max, &cfg)?,
        id @ ("A.36" | "A.37" | "A.43" | "B.13") => {
            let side = if id == "A.37" { TailSide::BelowRStar } else { TailSide::BeyondRStarUpper };
            let scan = tail_decay_check(n_max, l_rule.l_for(n_max), beta, side, &cfg)?;
            if scan.claim_id != id {
                return Err(Failure::Usage(format!(
                    "n = {n_max}, l = {} with beta = {beta} is governed by {}, not {id}",
                    l_rule.l_for(n_max),
                    scan.claim_id
                )));
            }
            scan
        }
        other => {
            let claim: Claim = other.parse().map_err(|_| {
                Failure::Usage(format!("unknown claim '{other}'; expected one of {}", BOUNDS_CLAIMS.join(", ")))
            })?;
            envelope_scan(claim, n_min..=n_max, l_rule, beta, &cfg)?
        }
    };
    let mut report = Report::new(&scan.claim_id, &[]);
    scan_rows(&scan, &mut report);
    report.pass = scan.pass;
    report.summary = json!({
        "fitted_exponent": scan.fitted_exponent,
        "fitted_constant": scan.fitted_constant,
        "exponents": scan.exponents,
        "constant_spread": scan.constant_spread,
        "spread_limit": scan.spread_limit,
        "checks": scan.checks,
        "excluded": scan.excluded,
        "notes": scan.notes,
    });
    report.grid = if beta > 0.0 {
        json!({ "kind": "relativistic_channel", "coarse_step": cfg.rel_step })
    } else {
        json!({ "kind": "closed_form" })
    };
    let params = json!({
        "claim": scan.claim_id, "nmin": n_min, "nmax": n_max, "beta": beta,
        "l_rule": l_rule, "scan_config": cfg,
    });
    Ok((params, report))
}
