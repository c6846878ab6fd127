//! Reference single-atom density, its nuclear rescaling, and the closed-form
//! error budgets.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_operator::{ChannelSolver, Discretization, BETA_CRITICAL};
use crate::specfun::{radial_nr, QuantumNumbers};

/// Density normalization in force: unit `L²(r² dr)` radial functions, so each
/// shell `n` integrates to `n²` and `ρ̄_0(0) = ζ(3)/(8π)`.
pub const CONVENTION: &str = "unit_radial_norm";

/// Default truncation for the closed-form (`β = 0`) density.
pub const DEFAULT_N_MAX_NONREL: u32 = 40;
/// Default truncation when every shell needs grid eigenvectors.
pub const DEFAULT_N_MAX_REL: u32 = 12;

/// Relative tail above which a warning is logged.
const TAIL_WARN: f64 = 0.01;

/// One density evaluation with its truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub value: f64,
    /// Contribution of the last retained shell.
    pub tail_bound: f64,
}

/// Closed-form shell `(1/4π) Σ_{l<n} (2l+1) R_{n,l}(r)²`.
pub fn shell_nonrel(n: u32, r: f64) -> f64 {
    let mut s = 0.0;
    for l in 0..n {
        let q = QuantumNumbers::new(n, l).expect("l < n");
        let v = radial_nr(q, r);
        s += (2 * l + 1) as f64 * v * v;
    }
    s / (4.0 * PI)
}

/// Evaluator for `ρ̄_β`; for `β > 0` it holds the extrapolated grid
/// eigenvectors of every retained channel.
#[derive(Debug, Clone)]
pub struct DensityModel {
    beta: f64,
    n_max: u32,
    channels: Vec<ChannelTable>,
}

/// Radial functions `w/r` of one channel sampled at `r_i = i h`, one row per shell.
#[derive(Debug, Clone)]
struct ChannelTable {
    l: u32,
    step: f64,
    rows: Vec<Vec<f64>>,
}

impl ChannelTable {
    /// `R_{n,l}(r)` for `n = l + 1 + row` by Lagrange interpolation of `w/r`:
    /// 4 points inside the grid, 6 points when extrapolating towards `r = 0`.
    fn radial(&self, row: usize, r: f64) -> f64 {
        let u = &self.rows[row];
        // node k sits at k h; node 0 is the origin, known only for l >= 1 (value 0)
        let x = r / self.step;
        let last = u.len() as isize;
        if x > last as f64 {
            return 0.0;
        }
        let value_at = |k: isize| if k == 0 { 0.0 } else { u[(k - 1) as usize] };
        let first = if self.l > 0 { 0 } else { 1 };
        let (start, width) =
            if x < 1.0 && self.l == 0 { (1, 6) } else { ((x.floor() as isize - 1).clamp(first, last - 3), 4) };
        let mut total = 0.0;
        for a in 0..width {
            let ka = start + a;
            let mut basis = 1.0;
            for b in 0..width {
                if a != b {
                    let kb = start + b;
                    basis *= (x - kb as f64) / ((ka - kb) as f64);
                }
            }
            total += value_at(ka) * basis;
        }
        total
    }
}

impl DensityModel {
    pub fn new(beta: f64, n_max: u32) -> Result<Self> {
        Self::with_discretization(beta, n_max, Discretization::for_levels(n_max))
    }

    pub fn with_discretization(beta: f64, n_max: u32, disc: Discretization) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Domain("n_max must be at least 1".into()));
        }
        if !(0.0..=BETA_CRITICAL * (1.0 + 1e-15)).contains(&beta) {
            return Err(Error::InvalidCoupling(beta));
        }
        if beta == 0.0 {
            return Ok(Self { beta, n_max, channels: Vec::new() });
        }
        let channels = (0..n_max)
            .into_par_iter()
            .map(|l| -> Result<ChannelTable> {
                let solver = ChannelSolver::new(disc, l)?;
                let pairs = solver.eigenpairs(beta, None, (n_max - l) as usize)?;
                let step = solver.grids().0.step();
                let rows = pairs
                    .into_iter()
                    .map(|p| p.vector.iter().enumerate().map(|(i, w)| w / ((i + 1) as f64 * step)).collect())
                    .collect();
                Ok(ChannelTable { l, step, rows })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { beta, n_max, channels })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Shell `n` contribution at radius `r`.
    pub fn shell(&self, n: u32, r: f64) -> f64 {
        if self.beta == 0.0 {
            return shell_nonrel(n, r);
        }
        let mut s = 0.0;
        for ch in self.channels.iter().take(n as usize) {
            let v = ch.radial((n - ch.l - 1) as usize, r);
            s += (2 * ch.l + 1) as f64 * v * v;
        }
        s / (4.0 * PI)
    }

    pub fn evaluate(&self, r: f64) -> DensityValue {
        let shells: Vec<f64> = (1..=self.n_max).map(|n| self.shell(n, r)).collect();
        let value: f64 = shells.iter().sum();
        let tail_bound = *shells.last().expect("n_max >= 1");
        if tail_bound > TAIL_WARN * value {
            log::warn!(
                "density truncation at n_max = {} leaves tail {tail_bound:.3e} of value {value:.3e} at r = {r}",
                self.n_max
            );
        }
        DensityValue { value, tail_bound }
    }

    pub fn profile(&self, radii: &[f64]) -> DensityProfile {
        let evals: Vec<DensityValue> = radii.par_iter().map(|&r| self.evaluate(r)).collect();
        DensityProfile {
            radii: radii.to_vec(),
            values: evals.iter().map(|e| e.value).collect(),
            tail_bounds: evals.iter().map(|e| e.tail_bound).collect(),
            beta: self.beta,
            n_max: self.n_max,
            convention: CONVENTION.to_string(),
        }
    }
}

/// `ρ̄_β(r)` truncated at `n_max` shells.
pub fn rho_bar(beta: f64, r: f64, n_max: u32) -> Result<DensityValue> {
    Ok(DensityModel::new(beta, n_max)?.evaluate(r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub beta: f64,
    pub n_max: u32,
    pub convention: String,
}

impl DensityProfile {
    /// Largest per-radius truncation estimate.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bounds.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value,tail_bound\n");
        for ((r, v), t) in self.radii.iter().zip(&self.values).zip(&self.tail_bounds) {
            let _ = writeln!(s, "{r},{v:e},{t:e}");
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "metadata": {
                "beta": self.beta,
                "n_max": self.n_max,
                "convention": self.convention,
                "tail_bound": self.tail_bound(),
            },
            "rows": self.radii.iter().zip(&self.values).zip(&self.tail_bounds)
                .map(|((r, v), t)| serde_json::json!({"r": r, "value": v, "tail_bound": t}))
                .collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    /// Total nuclear charge scale.
    pub z: f64,
    /// Observation radius.
    pub a: f64,
    pub delta: f64,
    pub kappa: f64,
    /// Spin multiplicity.
    pub q: u32,
    /// Charge of the nucleus under observation.
    pub z_m: f64,
    /// Relativistic coupling of a unit charge; the nucleus sees `z_m·beta`.
    pub beta: f64,
}

impl BudgetInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0 && self.a > 0.0 && self.z_m > 0.0 && self.kappa >= 0.0 && self.delta >= 0.0) {
            return Err(Error::Domain("budget inputs require Z, a, Z_m > 0 and kappa, delta >= 0".into()));
        }
        if self.q == 0 {
            return Err(Error::Domain("spin multiplicity q must be positive".into()));
        }
        Ok(())
    }

    /// Whether `a ≤ Z^{-1/2-κ}`.
    pub fn in_main_regime(&self) -> bool {
        self.a <= self.z.powf(-0.5 - self.kappa)
    }
}

/// `q Z_m³ ρ̄_{Z_m β}(Z_m |x - y_m|)`.
pub fn rho_rescaled(inputs: &BudgetInputs, x_minus_nucleus: f64, n_max: u32) -> Result<DensityValue> {
    inputs.validate()?;
    let pref = inputs.q as f64 * inputs.z_m.powi(3);
    let inner = rho_bar(inputs.z_m * inputs.beta, inputs.z_m * x_minus_nucleus, n_max)?;
    Ok(DensityValue { value: pref * inner.value, tail_bound: pref * inner.tail_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantTerm {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRegime {
    pub f_dominant: DominantTerm,
    pub g_dominant: DominantTerm,
    /// `a` below which the first term of `F` dominates: `Z^{-11/21-2δ/7}`.
    pub f_crossover: f64,
    /// `a` below which the first term of `G` dominates: `Z^{-5/9-2δ/3}`.
    pub g_crossover: f64,
    /// `a ≤ Z^{-1/2-κ}`; violations are flagged, not rejected.
    pub main_regime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub f: f64,
    pub g: f64,
    pub regime: BudgetRegime,
}

/// `F = (Z^{13/6-δ} a^{-1/2} + Z⁴a³) Z^κ` and `G = (Z^{7/6-δ} a^{3/2} + Z²a³) Z^κ`.
pub fn error_budget(inputs: &BudgetInputs) -> Result<Budget> {
    inputs.validate()?;
    let BudgetInputs { z, a, delta, kappa, .. } = *inputs;
    let zk = z.powf(kappa);
    let f1 = z.powf(13.0 / 6.0 - delta) * a.powf(-0.5);
    let f2 = z.powi(4) * a.powi(3);
    let g1 = z.powf(7.0 / 6.0 - delta) * a.powf(1.5);
    let g2 = z * z * a.powi(3);
    let pick = |first: f64, second: f64| if first >= second { DominantTerm::First } else { DominantTerm::Second };
    let regime = BudgetRegime {
        f_dominant: pick(f1, f2),
        g_dominant: pick(g1, g2),
        f_crossover: z.powf(-11.0 / 21.0 - 2.0 * delta / 7.0),
        g_crossover: z.powf(-5.0 / 9.0 - 2.0 * delta / 3.0),
        main_regime: inputs.in_main_regime(),
    };
    Ok(Budget { f: (f1 + f2) * zk, g: (g1 + g2) * zk, regime })
}

/// Right-hand side of the `L^p(X)` density estimate with unit constants.
///
/// `p = 1`: `F^{1/2} mes(X)^{1/2} + G`. `p ≥ 2` requires `ω ≥ Z^{3/2} a^{-3/2}`.
pub fn corollary_budget(inputs: &BudgetInputs, measure_x: f64, p: u32, omega: f64) -> Result<f64> {
    let Budget { f, g, .. } = error_budget(inputs)?;
    if measure_x < 0.0 {
        return Err(Error::Domain(format!("measure {measure_x} must be non-negative")));
    }
    match p {
        0 => Err(Error::Domain("p must be at least 1".into())),
        1 => Ok(f.sqrt() * measure_x.sqrt() + g),
        _ => {
            let floor = inputs.z.powf(1.5) * inputs.a.powf(-1.5);
            if omega.is_nan() || omega < floor {
                return Err(Error::Precondition(format!("omega = {omega} below the floor Z^(3/2) a^(-3/2) = {floor}")));
            }
            let pf = p as f64;
            let two_p = 2f64.powi(-(p as i32));
            let two_p1 = 2.0 * two_p;
            let lead = omega.powf(1.0 - 2.0 * (1.0 - two_p) / pf)
                * (f.powf((1.0 - two_p) / pf) * measure_x.powf(two_p / pf)
                    + f.powf((1.0 - two_p1) / pf) * g.powf(1.0 - two_p1));
            Ok(lead + omega.powf(1.0 - 1.0 / pf) * g.powf(1.0 / pf))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use crate::specfun::real_spherical_harmonics;
    use rand::{Rng, SeedableRng};

    fn inputs(z: f64, a: f64) -> BudgetInputs {
        BudgetInputs { z, a, delta: 0.0, kappa: 0.0, q: 1, z_m: 1.0, beta: 0.0 }
    }

    #[test]
    fn origin_value_is_zeta3_over_8pi() {
        let v = rho_bar(0.0, 0.0, 50).unwrap();
        let partial: f64 = (1..=50).map(|n| 1.0 / (n as f64).powi(3)).sum::<f64>() / (8.0 * PI);
        assert!((v.value - partial).abs() < 1e-14);
        let zeta3 = 1.202_056_903_159_594_3;
        assert!((v.value - zeta3 / (8.0 * PI)).abs() < 3e-5);
    }

    #[test]
    fn single_shell_is_exponential() {
        for &r in &[0.0, 0.7, 3.0, 12.0] {
            let v = rho_bar(0.0, r, 1).unwrap().value;
            assert!((v - (-r).exp() / (8.0 * PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn shells_integrate_to_state_count() {
        // the convention oracle: with unit radial norm each shell holds n² states
        for n in 1..=6u32 {
            let r_max = 12.0 * (n * n) as f64 + 40.0;
            let total = 4.0 * PI * quadrature::integrate(|r| shell_nonrel(n, r) * r * r, 0.0, r_max, 200, 16);
            assert!((total - (n * n) as f64).abs() < 1e-9, "n={n}: {total}");
        }
    }

    #[test]
    fn spherical_sum_matches_explicit_harmonics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            let dir = [s * phi.cos(), s * phi.sin(), z];
            for n in 1..=5u32 {
                for &r in &[0.5, 3.0, 17.0] {
                    let explicit: f64 = (0..n)
                        .map(|l| {
                            let rad = radial_nr(QuantumNumbers::new(n, l).unwrap(), r);
                            real_spherical_harmonics(l, dir).iter().map(|y| (rad * y).powi(2)).sum::<f64>()
                        })
                        .sum();
                    assert!((explicit - shell_nonrel(n, r)).abs() < 1e-10 * explicit.max(1e-300) + 1e-300);
                }
            }
        }
    }

    #[test]
    fn density_nonnegative_and_tail_monotone() {
        let p = DensityModel::new(0.0, 6).unwrap().profile(&(0..400).map(|i| i as f64 * 0.5).collect::<Vec<_>>());
        assert!(p.values.iter().all(|&v| v >= 0.0));
        let start = (4.0 * 36.0 / 0.5) as usize;
        for w in p.values[start..].windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn small_beta_density_approaches_closed_form() {
        let n_max = 4;
        let rel = DensityModel::new(1e-4, n_max).unwrap();
        let nonrel = DensityModel::new(0.0, n_max).unwrap();
        for &r in &[0.0, 0.75, 2.0, 5.3, 10.0, 25.0, 50.0] {
            let a = rel.evaluate(r).value;
            let b = nonrel.evaluate(r).value;
            assert!((a - b).abs() <= 1e-3 * b, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn rescaling_identities() {
        let base = BudgetInputs { z: 10.0, a: 0.1, delta: 0.0, kappa: 0.1, q: 1, z_m: 1.0, beta: 0.0 };
        for &x in &[0.0, 0.4, 2.0] {
            let direct = rho_bar(0.0, x, 10).unwrap().value;
            assert_eq!(rho_rescaled(&base, x, 10).unwrap().value, direct);
            let q2 = BudgetInputs { q: 2, ..base };
            assert_eq!(rho_rescaled(&q2, x, 10).unwrap().value, 2.0 * direct);
        }
        let doubled = BudgetInputs { z_m: 2.0, ..base };
        let ratio = rho_rescaled(&doubled, 0.0, 10).unwrap().value / rho_rescaled(&base, 0.0, 10).unwrap().value;
        assert!((ratio - 8.0).abs() < 1e-13);
    }

    #[test]
    fn budget_examples() {
        let b = error_budget(&inputs(100.0, 0.01)).unwrap();
        let f = 100f64.powf(13.0 / 6.0) * 10.0 + 100.0;
        let g = 100f64.powf(7.0 / 6.0) * 1e-3 + 1e-2;
        assert!(((b.f - f) / f).abs() <= 1e-12);
        assert!(((b.g - g) / g).abs() <= 1e-12);
        assert!((b.f - 215_543.5).abs() < 0.1);
        assert!((b.g - 0.22544).abs() < 1e-5);

        let k0 = error_budget(&BudgetInputs { kappa: 0.3, ..inputs(50.0, 0.02) }).unwrap();
        let k1 = error_budget(&BudgetInputs { kappa: 1.3, ..inputs(50.0, 0.02) }).unwrap();
        assert!((k1.f / k0.f - 50.0).abs() < 1e-10);
        assert!((k1.g / k0.g - 50.0).abs() < 1e-10);
    }

    #[test]
    fn regime_flips_at_crossovers() {
        for &(z, delta) in &[(100.0, 0.0), (1e4, 0.05), (37.0, 0.2)] {
            let probe = BudgetInputs { delta, ..inputs(z, 1.0) };
            let b = error_budget(&probe).unwrap();
            let just = |a: f64| error_budget(&BudgetInputs { a, ..probe }).unwrap().regime;
            assert_eq!(just(b.regime.f_crossover * (1.0 - 1e-9)).f_dominant, DominantTerm::First);
            assert_eq!(just(b.regime.f_crossover * (1.0 + 1e-9)).f_dominant, DominantTerm::Second);
            assert_eq!(just(b.regime.g_crossover * (1.0 - 1e-9)).g_dominant, DominantTerm::First);
            assert_eq!(just(b.regime.g_crossover * (1.0 + 1e-9)).g_dominant, DominantTerm::Second);
        }
    }

    #[test]
    fn corollary_examples() {
        let inp = inputs(100.0, 0.01);
        let b = error_budget(&inp).unwrap();
        let v = corollary_budget(&inp, 2.5, 1, 0.0).unwrap();
        assert!((v - (b.f.sqrt() * 2.5f64.sqrt() + b.g)).abs() < 1e-9 * v);
        assert_eq!(corollary_budget(&inp, 0.0, 1, 0.0).unwrap(), b.g);

        let omega = 2.0 * 100f64.powf(1.5) * 0.01f64.powf(-1.5);
        let v2 = corollary_budget(&inp, 0.3, 2, omega).unwrap();
        let expect = omega.powf(1.0 - 2.0 * 0.375)
            * (b.f.powf(0.375) * 0.3f64.powf(0.125) + b.f.powf(0.25) * b.g.powf(0.5))
            + omega.sqrt() * b.g.sqrt();
        assert!((v2 - expect).abs() < 1e-12 * expect);
        assert!(matches!(corollary_budget(&inp, 0.3, 2, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn csv_and_json_shapes() {
        let p = DensityModel::new(0.0, 2).unwrap().profile(&[0.0, 1.0]);
        let csv = p.to_csv();
        assert!(csv.starts_with("r,value,tail_bound\n"));
        assert_eq!(csv.lines().count(), 3);
        let j = p.to_json();
        assert_eq!(j["metadata"]["convention"], CONVENTION);
        assert_eq!(j["metadata"]["n_max"], 2);
    }
}
