//! Compactly supported radial perturbations `ς·U` with `|U| ≤ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Default experimental smallness threshold for `ς r` and `ς r^{3/2}`.
pub const DEFAULT_EPSILON0: f64 = 0.01;

/// Shape of `U` on its support `[inner_radius, support_radius]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Profile {
    /// `U = 1` on the support.
    Box,
    /// Smooth bump `exp(1 - 1/(1 - t²))`, `t ∈ (-1, 1)` across the support, peak 1 at the midpoint.
    Bump,
    /// Piecewise-linear interpolation of `(r, U)` nodes; zero outside the node range.
    Table { nodes: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub varsigma: f64,
    pub support_radius: f64,
    pub inner_radius: f64,
    pub profile: Profile,
}

/// Smallness conditions, recorded rather than enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessFlags {
    pub epsilon0: f64,
    /// `ς r ≤ ε₀`.
    pub linear: bool,
    /// `ς r^{3/2} ≤ ε₀`.
    pub three_halves: bool,
}

impl PerturbationSpec {
    pub fn new(varsigma: f64, support_radius: f64, inner_radius: f64, profile: Profile) -> Result<Self> {
        if !(varsigma >= 0.0 && varsigma.is_finite()) {
            return Err(Error::Domain(format!("coupling varsigma = {varsigma} must be finite and >= 0")));
        }
        if !(support_radius >= 1.0 && support_radius.is_finite()) {
            return Err(Error::Domain(format!("support radius {support_radius} must be >= 1")));
        }
        if !(inner_radius >= 0.0 && inner_radius < support_radius) {
            return Err(Error::Domain(format!("inner radius {inner_radius} must lie in [0, {support_radius})")));
        }
        if let Profile::Table { nodes } = &profile {
            if nodes.len() < 2 {
                return Err(Error::Domain("table profile needs at least two nodes".into()));
            }
            if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Domain("table radii must be strictly increasing".into()));
            }
            if nodes.iter().any(|&(_, u)| u.abs() > 1.0 || !u.is_finite()) {
                return Err(Error::Domain("table values must satisfy |U| <= 1".into()));
            }
        }
        Ok(Self { varsigma, support_radius, inner_radius, profile })
    }

    /// Box profile on the ball `[0, r]`.
    pub fn ball(varsigma: f64, r: f64) -> Result<Self> {
        Self::new(varsigma, r, 0.0, Profile::Box)
    }

    /// Box profile on the annulus `[r/2, r]`.
    pub fn annulus(varsigma: f64, r: f64) -> Result<Self> {
        Self::new(varsigma, r, 0.5 * r, Profile::Box)
    }

    pub fn with_varsigma(&self, varsigma: f64) -> Self {
        Self { varsigma, ..self.clone() }
    }

    /// Shape `U(r)`, without the coupling.
    pub fn shape(&self, r: f64) -> f64 {
        if r < self.inner_radius || r > self.support_radius {
            return 0.0;
        }
        match &self.profile {
            Profile::Box => 1.0,
            Profile::Bump => {
                let half = 0.5 * (self.support_radius - self.inner_radius);
                let t = (r - self.inner_radius - half) / half;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
            Profile::Table { nodes } => interpolate(nodes, r),
        }
    }

    /// Coupled potential `ς U(r)`.
    pub fn potential(&self, r: f64) -> f64 {
        self.varsigma * self.shape(r)
    }

    pub fn smallness(&self, epsilon0: f64) -> SmallnessFlags {
        let r = self.support_radius;
        SmallnessFlags {
            epsilon0,
            linear: self.varsigma * r <= epsilon0,
            three_halves: self.varsigma * r.powf(1.5) <= epsilon0,
        }
    }

    /// `‖⟨x⟩^{-3/2} U‖_{L¹(ℝ³)}` with `⟨x⟩ = (|x|² + 1)^{1/2}`.
    pub fn weighted_l1_norm(&self) -> f64 {
        let (a, b) = (self.inner_radius, self.support_radius);
        let panels = ((b - a).ceil() as usize).clamp(8, 4000);
        4.0 * std::f64::consts::PI
            * quadrature::integrate(|r| (r * r + 1.0).powf(-0.75) * self.shape(r).abs() * r * r, a, b, panels, 16)
    }
}

fn interpolate(nodes: &[(f64, f64)], r: f64) -> f64 {
    let first = nodes[0];
    let last = nodes[nodes.len() - 1];
    if r < first.0 || r > last.0 {
        return 0.0;
    }
    let idx = nodes.partition_point(|&(x, _)| x <= r);
    if idx == 0 {
        return first.1;
    }
    if idx >= nodes.len() {
        return last.1;
    }
    let (x0, y0) = nodes[idx - 1];
    let (x1, y1) = nodes[idx];
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn box_norm_matches_closed_form() {
        // ∫_0^r ρ² (ρ² + 1)^{-3/4} dρ has antiderivative-free value; compare to a fine midpoint sum
        let u = PerturbationSpec::ball(0.1, 4.0).unwrap();
        let m = 400_000;
        let h = 4.0 / m as f64;
        let mid: f64 = (0..m)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                r * r * (r * r + 1.0).powf(-0.75)
            })
            .sum::<f64>()
            * h
            * 4.0
            * PI;
        assert!((u.weighted_l1_norm() - mid).abs() < 1e-8 * mid);
    }

    #[test]
    fn shapes_bounded_and_supported() {
        let specs = [
            PerturbationSpec::ball(1.0, 5.0).unwrap(),
            PerturbationSpec::annulus(1.0, 10.0).unwrap(),
            PerturbationSpec::new(1.0, 8.0, 2.0, Profile::Bump).unwrap(),
            PerturbationSpec::new(1.0, 6.0, 0.0, Profile::Table { nodes: vec![(1.0, -1.0), (3.0, 1.0), (6.0, 0.0)] })
                .unwrap(),
        ];
        for s in &specs {
            for k in 0..2000 {
                let r = k as f64 * 0.01;
                let u = s.shape(r);
                assert!(u.abs() <= 1.0);
                if r < s.inner_radius || r > s.support_radius {
                    assert_eq!(u, 0.0);
                }
            }
        }
        assert_eq!(specs[1].shape(4.0), 0.0);
        assert_eq!(specs[1].shape(7.0), 1.0);
        assert!((specs[2].shape(5.0) - 1.0).abs() < 1e-15);
        assert!((specs[3].shape(2.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(PerturbationSpec::ball(-1.0, 2.0).is_err());
        assert!(PerturbationSpec::ball(1.0, 0.5).is_err());
        assert!(PerturbationSpec::new(1.0, 2.0, 2.0, Profile::Box).is_err());
        assert!(PerturbationSpec::new(1.0, 4.0, 0.0, Profile::Table { nodes: vec![(0.0, 2.0), (1.0, 0.0)] }).is_err());
    }

    #[test]
    fn smallness_flags() {
        let s = PerturbationSpec::ball(1e-3, 4.0).unwrap().smallness(DEFAULT_EPSILON0);
        assert!(s.linear && s.three_halves);
        let s = PerturbationSpec::ball(2e-3, 9.0).unwrap().smallness(DEFAULT_EPSILON0);
        assert!(!s.linear && !s.three_halves);
    }
}
