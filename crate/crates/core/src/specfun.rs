//! Closed-form hydrogenic radial functions and related special functions.
//!
//! Units follow the operator `-Δ - 1/r`, whose bound states sit at
//! `λ_n = -1/(4n²)` and whose radial functions are normalized so that
//! `∫ R_{n,l}(r)² r² dr = 1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Laguerre degree accepted by [`laguerre`].
pub const MAX_DEGREE: u32 = 200;

/// Principal and angular quantum numbers of one radial mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantumNumbers {
    n: u32,
    l: u32,
}

impl QuantumNumbers {
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("principal quantum number must be positive".into()));
        }
        if l >= n {
            return Err(Error::Domain(format!("l = {l} must not exceed n - 1 = {}", n - 1)));
        }
        if n > MAX_DEGREE {
            return Err(Error::Domain(format!("n = {n} above supported maximum {MAX_DEGREE}")));
        }
        Ok(Self { n, l })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Number of radial nodes, `n - l - 1`.
    pub fn radial_nodes(&self) -> usize {
        (self.n - self.l - 1) as usize
    }

    /// Unperturbed level `-1/(4n²)`.
    pub fn energy(&self) -> f64 {
        level_energy(self.n)
    }

    /// Centrifugal coefficient `l(l+1)`.
    pub fn centrifugal(&self) -> f64 {
        let l = self.l as f64;
        l * (l + 1.0)
    }
}

/// Hydrogen level `-1/(4n²)`.
pub fn level_energy(n: u32) -> f64 {
    let n = n as f64;
    -0.25 / (n * n)
}

/// Effective potential well `W(r) = 1/r - l(l+1)/r²`.
pub fn effective_well(l: u32, r: f64) -> f64 {
    let l = l as f64;
    1.0 / r - l * (l + 1.0) / (r * r)
}

fn ln_factorial(m: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(2 * MAX_DEGREE as usize + 2);
        let mut acc = 0.0;
        t.push(0.0);
        for i in 1..=(2 * MAX_DEGREE + 1) {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    table[m as usize]
}

/// Associated Laguerre polynomial `L_n^{(k)}(z)` by the three-term recurrence
/// `(m+1) L_{m+1} = (2m+1+k-z) L_m - (m+k) L_{m-1}`.
pub fn laguerre(n: u32, k: u32, z: f64) -> Result<f64> {
    if n > MAX_DEGREE {
        return Err(Error::Domain(format!("Laguerre degree {n} above supported maximum {MAX_DEGREE}")));
    }
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + k - z;
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0 + k - z) * cur - (m + k) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Normalized hydrogenic radial function `R_{n,l}(r)`.
pub fn radial_nr(qn: QuantumNumbers, r: f64) -> f64 {
    let (n, l) = (qn.n, qn.l);
    let nf = n as f64;
    let ln_norm = 0.5 * (ln_factorial(n - l - 1) - ln_factorial(n + l) - std::f64::consts::LN_2 - 4.0 * nf.ln());
    let poly = laguerre(n - l - 1, 2 * l + 1, r / nf).expect("degree bounded by QuantumNumbers");
    if r <= 0.0 {
        return if l == 0 { ln_norm.exp() * poly } else { 0.0 };
    }
    let ln_pref = ln_norm + l as f64 * (r / nf).ln() - r / (2.0 * nf);
    ln_pref.exp() * poly
}

/// Reduced radial function `v_{n,l}(r) = r R_{n,l}(r)`.
pub fn reduced_radial(qn: QuantumNumbers, r: f64) -> f64 {
    r * radial_nr(qn, r)
}

/// Classical turning points of the radial motion at the level `-1/(4n²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    /// Inner root; zero for `l = 0`.
    pub r_star: f64,
    /// Outer root; `4n²` for `l = 0`.
    pub r_star_upper: f64,
}

impl TurningPoints {
    /// Roots of `r²/(4n²) - r + l(l+1) = 0` for arbitrary `(n, l)`.
    pub fn for_mode(n: u32, l: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        let nf = n as f64;
        let lf = l as f64;
        let cent = lf * (lf + 1.0);
        let disc = 1.0 - cent / (nf * nf);
        if disc < 0.0 {
            return Err(Error::Domain(format!("l(l+1) = {cent} exceeds n^2 = {}: no real turning points", nf * nf)));
        }
        let upper = 2.0 * nf * nf * (1.0 + disc.sqrt());
        // product of the roots is 4 n^2 l(l+1); avoids cancellation in the minus root
        let lower = 4.0 * nf * nf * cent / upper;
        Ok(Self { r_star: lower, r_star_upper: upper })
    }

    /// Distance between the two turning points.
    pub fn width(&self) -> f64 {
        self.r_star_upper - self.r_star
    }
}

pub fn turning_points(qn: QuantumNumbers) -> TurningPoints {
    TurningPoints::for_mode(qn.n, qn.l).expect("l <= n - 1 keeps the discriminant positive")
}

const ZERO_REL_TOL: f64 = 1e-12;

/// All zeros of `v_{n,l}` on `(0, ∞)`, ascending.
///
/// Brackets sign changes on `40 n` samples spaced uniformly in `√r` over
/// `(0, 1.2 r^*]` and refines each bracket by bisection.
pub fn zeros(qn: QuantumNumbers) -> Result<Vec<f64>> {
    let expected = qn.radial_nodes();
    if expected == 0 {
        return Ok(Vec::new());
    }
    let tp = turning_points(qn);
    let samples = 40 * qn.n as usize;
    let s_max = (1.2 * tp.r_star_upper).sqrt();
    let f = |r: f64| radial_nr(qn, r);

    let mut found = Vec::with_capacity(expected);
    let mut r_prev = (s_max / samples as f64).powi(2);
    let mut f_prev = f(r_prev);
    for j in 2..=samples {
        let s = s_max * j as f64 / samples as f64;
        let r = s * s;
        let fr = f(r);
        if fr == 0.0 {
            found.push(r);
        } else if f_prev != 0.0 && fr.signum() != f_prev.signum() {
            found.push(bisect(&f, r_prev, r, f_prev));
        }
        r_prev = r;
        f_prev = fr;
    }
    if found.len() != expected {
        return Err(Error::ZeroCount { n: qn.n, l: qn.l, expected, found: found.len() });
    }
    Ok(found)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > ZERO_REL_TOL * b {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Real spherical harmonics `Y_{l,m}` at a direction, ordered `m = -l..=l`.
pub fn real_spherical_harmonics(l: u32, direction: [f64; 3]) -> Vec<f64> {
    let [x, y, z] = direction;
    let rho = (x * x + y * y).sqrt();
    let norm = (rho * rho + z * z).sqrt();
    let cos_t = z / norm;
    let sin_t = rho / norm;
    let phi = y.atan2(x);
    let l = l as usize;

    // normalized associated Legendre values y_l^m = sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m
    let mut diag = vec![0.0; l + 1];
    diag[0] = (0.25 / PI).sqrt();
    for m in 1..=l {
        let mf = m as f64;
        diag[m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * diag[m - 1];
    }
    let mut legendre = vec![0.0; l + 1];
    for (m, &ymm) in diag.iter().enumerate() {
        if m == l {
            legendre[m] = ymm;
            continue;
        }
        let mf = m as f64;
        let mut prev2 = ymm;
        let mut prev1 = (2.0 * mf + 3.0).sqrt() * cos_t * ymm;
        for deg in (m + 2)..=l {
            let lf = deg as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let next = a * (cos_t * prev1 - b * prev2);
            prev2 = prev1;
            prev1 = next;
        }
        legendre[m] = prev1;
    }

    let mut out = Vec::with_capacity(2 * l + 1);
    for m in (1..=l).rev() {
        out.push(std::f64::consts::SQRT_2 * legendre[m] * (m as f64 * phi).sin());
    }
    out.push(legendre[0]);
    for (m, &val) in legendre.iter().enumerate().skip(1) {
        out.push(std::f64::consts::SQRT_2 * val * (m as f64 * phi).cos());
    }
    out
}

/// `Σ_m |Y_{l,m}(direction)|²` by explicit summation.
pub fn sph_harmonic_sum(l: u32, direction: [f64; 3]) -> f64 {
    real_spherical_harmonics(l, direction).iter().map(|y| y * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Explicit alternating sum; independent of the recurrence used above.
    // Returns the sum and the sum of absolute terms (its cancellation scale).
    fn laguerre_explicit(n: u32, k: u32, z: f64) -> (f64, f64) {
        let mut total = 0.0;
        let mut scale = 0.0;
        for j in 0..=n {
            // (n+k)! / ((n-j)! (k+j)! j!)
            let ln_c = ln_factorial(n + k) - ln_factorial(n - j) - ln_factorial(k + j) - ln_factorial(j);
            let term = ln_c.exp() * (-z).powi(j as i32);
            total += term;
            scale += term.abs();
        }
        (total, scale)
    }

    fn qn(n: u32, l: u32) -> QuantumNumbers {
        QuantumNumbers::new(n, l).unwrap()
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(0, 4, -3.7).unwrap(), 1.0);
        assert!(laguerre(1, 1, 2.0).unwrap().abs() < 1e-15);
        assert!((laguerre(2, 3, 0.0).unwrap() - 10.0).abs() < 1e-13);
    }

    #[test]
    fn laguerre_recurrence_matches_explicit_sum() {
        for n in 0..=20 {
            for k in [0, 1, 3, 7, 21] {
                for &z in &[0.0, 0.3, 1.7, 5.0, 12.5] {
                    let rec = laguerre(n, k, z).unwrap();
                    let (exp, scale) = laguerre_explicit(n, k, z);
                    assert!((rec - exp).abs() <= 1e-12 * scale, "n={n} k={k} z={z}: {rec} vs {exp}");
                }
            }
        }
    }

    #[test]
    fn laguerre_rejects_degree_above_cap() {
        assert!(matches!(laguerre(MAX_DEGREE + 1, 0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn quantum_numbers_validate() {
        assert!(QuantumNumbers::new(0, 0).is_err());
        assert!(QuantumNumbers::new(3, 3).is_err());
        assert!(QuantumNumbers::new(3, 2).is_ok());
    }

    #[test]
    fn radial_at_origin() {
        let r10 = radial_nr(qn(1, 0), 0.0);
        assert!((r10 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for n in 2..8 {
            for l in 1..n {
                assert_eq!(radial_nr(qn(n, l), 0.0), 0.0);
            }
            // R_{n,0}(0)^2 = 1/(2 n^3)
            let r0 = radial_nr(qn(n, 0), 0.0);
            assert!((r0 * r0 - 0.5 / (n as f64).powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn reduced_ground_state_closed_form() {
        for &r in &[0.1, 1.0, 3.3, 10.0] {
            let expect = r / 2f64.sqrt() * (-r / 2.0).exp();
            assert!((reduced_radial(qn(1, 0), r) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_radial_solves_ode() {
        for (n, l, r) in [(2, 0, 4.0), (3, 1, 7.5), (5, 2, 20.0)] {
            let q = qn(n, l);
            let lam = q.energy();
            let v = |x: f64| reduced_radial(q, x);
            let mut prev = f64::INFINITY;
            for &d in &[1e-2, 5e-3] {
                let second = (v(r + d) - 2.0 * v(r) + v(r - d)) / (d * d);
                let res = -second + q.centrifugal() / (r * r) * v(r) - v(r) / r - lam * v(r);
                assert!(res.abs() < 1e-4, "residual {res}");
                // second-order differencing: halving d quarters the residual
                if prev.is_finite() {
                    assert!(res.abs() < 0.3 * prev);
                }
                prev = res.abs();
            }
        }
    }

    #[test]
    fn reduced_radial_vanishes_like_r_to_l_plus_one() {
        let q = qn(2, 1);
        let a = reduced_radial(q, 1e-3);
        let b = reduced_radial(q, 2e-3);
        assert!((b / a - 4.0).abs() < 1e-2);
    }

    #[test]
    fn turning_point_examples() {
        let tp = TurningPoints::for_mode(2, 0).unwrap();
        assert_eq!(tp.r_star, 0.0);
        assert_eq!(tp.r_star_upper, 16.0);
        let tp = TurningPoints::for_mode(2, 1).unwrap();
        let s = 0.5f64.sqrt();
        assert!((tp.r_star - 8.0 * (1.0 - s)).abs() < 1e-12);
        assert!((tp.r_star_upper - 8.0 * (1.0 + s)).abs() < 1e-12);
        for n in 1..40 {
            assert_eq!(TurningPoints::for_mode(n, 0).unwrap().r_star_upper, 4.0 * (n * n) as f64);
        }
        assert!(TurningPoints::for_mode(2, 2).is_err());
    }

    #[test]
    fn turning_points_bracket_the_well() {
        for n in 2..30 {
            for l in 1..n {
                let tp = turning_points(qn(n, l));
                let cent = (l * (l + 1)) as f64;
                assert!(cent < tp.r_star && tp.r_star < tp.r_star_upper);
                assert!(tp.r_star_upper < 4.0 * (n * n) as f64);
                for r in [tp.r_star, tp.r_star_upper] {
                    let lhs = effective_well(l, r);
                    assert!((lhs + level_energy(n)).abs() < 1e-12 * (1.0 / r));
                }
            }
        }
    }

    #[test]
    fn zero_examples() {
        assert!(zeros(qn(1, 0)).unwrap().is_empty());
        assert_eq!(zeros(qn(3, 0)).unwrap().len(), 2);
        // R_{2,0} ~ (2 - r/2): single node at r = 4
        let z = zeros(qn(2, 0)).unwrap();
        assert!((z[0] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn zeros_scale_like_shifted_squares() {
        let q = qn(10, 3);
        let z = zeros(q).unwrap();
        assert_eq!(z.len(), 6);
        let ratios: Vec<f64> = z.iter().enumerate().map(|(k, r)| r / ((q.l() + k as u32 + 2) as f64).powi(2)).collect();
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let c = hi.max(1.0 / lo);
        assert!(c < 4.0, "fitted constant {c}, ratios {ratios:?}");
    }

    #[test]
    fn zeros_lie_inside_turning_points_and_above_barrier() {
        for n in 1..=30 {
            for l in 0..n {
                let q = qn(n, l);
                let z = zeros(q).unwrap();
                assert_eq!(z.len(), q.radial_nodes());
                let tp = turning_points(q);
                let floor = (l as f64 + 0.5).powi(2);
                for &r in &z {
                    assert!(r > tp.r_star && r < tp.r_star_upper);
                    assert!(r >= floor);
                }
            }
        }
    }

    #[test]
    fn zero_spacing_respects_local_wavelength() {
        let eps = 0.2;
        for n in 5..=30 {
            for l in [0, n / 4, n / 2] {
                let q = qn(n, l);
                let tp = turning_points(q);
                let z = zeros(q).unwrap();
                for w in z.windows(2) {
                    let rk = w[0];
                    if rk < (1.0 + eps) * tp.r_star || rk > (1.0 - eps) * tp.r_star_upper {
                        continue;
                    }
                    let local = PI / (effective_well(l, rk) + q.energy()).sqrt();
                    let ratio = (w[1] - rk) / local;
                    assert!((0.5..=2.0).contains(&ratio), "n={n} l={l} r={rk} ratio={ratio}");
                }
            }
        }
    }

    #[test]
    fn harmonic_sum_examples() {
        let inv4pi = 0.25 / PI;
        assert!((sph_harmonic_sum(0, [0.3, -0.4, 0.866]) - inv4pi).abs() < 1e-15);
        assert!((sph_harmonic_sum(2, [0.0, 0.0, 1.0]) - 5.0 * inv4pi).abs() < 1e-14);
        let d = sph_harmonic_sum(3, [0.6, 0.8, 0.0]) - sph_harmonic_sum(3, [0.0, 0.0, 1.0]);
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn harmonics_are_orthonormal_on_sphere() {
        // product Gauss rule in cos(theta) and uniform rule in phi
        let l_max = 4;
        let (xs, ws) = crate::quadrature::gauss_legendre(24);
        let n_phi = 32;
        let dim: usize = (0..=l_max).map(|l| 2 * l + 1).sum();
        let mut gram = vec![vec![0.0; dim]; dim];
        for (&x, &w) in xs.iter().zip(&ws) {
            let s = (1.0 - x * x).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                let dir = [s * phi.cos(), s * phi.sin(), x];
                let vals: Vec<f64> = (0..=l_max as u32).flat_map(|l| real_spherical_harmonics(l, dir)).collect();
                let wt = w * 2.0 * PI / n_phi as f64;
                for a in 0..dim {
                    for b in 0..dim {
                        gram[a][b] += wt * vals[a] * vals[b];
                    }
                }
            }
        }
        for (a, row) in gram.iter().enumerate() {
            for (b, &g) in row.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-12, "({a},{b}) = {g}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn harmonic_sum_is_rotation_invariant(l in 0u32..=12, theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI)) {
                let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                let s = sph_harmonic_sum(l, dir);
                let expect = (2 * l + 1) as f64 / (4.0 * PI);
                prop_assert!((s - expect).abs() < 1e-12);
            }

            #[test]
            fn turning_points_are_roots(n in 1u32..60, frac in 0.0f64..1.0) {
                let l = ((n - 1) as f64 * frac) as u32;
                let tp = TurningPoints::for_mode(n, l).unwrap();
                let cent = (l * (l + 1)) as f64;
                let n2 = (n * n) as f64;
                for r in [tp.r_star, tp.r_star_upper] {
                    let q = r * r / (4.0 * n2) - r + cent;
                    prop_assert!(q.abs() < 1e-9 * n2);
                }
            }
        }
    }
}
