//! Pointwise model algebra for the generalized Hughes running cost.
//!
//! The congestion function is `f(ρ) = (ρ_m − ρ)₊` and the running cost is
//!
//! ```text
//! L(ρ, v) = ½ f^{−β}(ρ) |v|² + ½ f^{2−β}(ρ)
//! ```
//!
//! with Legendre dual `H(ρ, p) = ½ f^β(ρ) |p|² − ½ f^{2−β}(ρ)`. Every negative
//! power of `f` goes through [`ModelParams::saturation_floored`] so the formulas
//! stay finite at `ρ = ρ_m`. Powers with a zero exponent evaluate to exactly one,
//! including `0⁰`.

use crate::error::ModelError;

/// Two-component vector used for velocities and co-states.
pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm_sq(a: Vec2) -> f64 {
    dot(a, a)
}

/// `base^exp` with `x⁰ = 1` for every base, including zero.
#[inline]
fn pow(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

/// Parameters shared by every model formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Congestion exponent β ∈ [0, 2].
    pub beta: f64,
    /// Maximum scaled density ρ_m.
    pub rho_max: f64,
    /// Viscosity σ ≥ 0.
    pub sigma: f64,
    /// Floor applied to `f` wherever it appears with a negative exponent.
    pub f_floor: f64,
}

impl ModelParams {
    /// Builds validated parameters with the default floor `1e-6·ρ_m`.
    pub fn new(beta: f64, rho_max: f64, sigma: f64) -> Result<Self, ModelError> {
        Self::with_floor(beta, rho_max, sigma, 1e-6 * rho_max)
    }

    pub fn with_floor(
        beta: f64,
        rho_max: f64,
        sigma: f64,
        f_floor: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            beta,
            rho_max,
            sigma,
            f_floor,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=2.0).contains(&self.beta) {
            return Err(ModelError::InvalidParams(format!(
                "beta out of [0,2]: {}",
                self.beta
            )));
        }
        if !(self.rho_max > 0.0 && self.rho_max.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "rho_max must be positive, got {}",
                self.rho_max
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.f_floor > 0.0 && self.f_floor < self.rho_max) {
            return Err(ModelError::InvalidParams(format!(
                "f_floor must lie in (0, rho_max), got {}",
                self.f_floor
            )));
        }
        Ok(())
    }

    /// Same parameters with a different β.
    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    /// Same parameters with a different σ.
    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    /// Congestion function `f(ρ) = max(ρ_m − ρ, 0)`.
    #[inline]
    pub fn saturation(&self, rho: f64) -> f64 {
        (self.rho_max - rho).max(0.0)
    }

    /// `max(f(ρ), f_floor)`; only for use under a negative exponent.
    #[inline]
    pub fn saturation_floored(&self, rho: f64) -> f64 {
        self.saturation(rho).max(self.f_floor)
    }

    /// `f^e(ρ)`, switching to the floored saturation when `e < 0`.
    #[inline]
    pub fn saturation_pow(&self, rho: f64, exp: f64) -> f64 {
        if exp < 0.0 {
            pow(self.saturation_floored(rho), exp)
        } else {
            pow(self.saturation(rho), exp)
        }
    }

    /// Running cost `½ f^{−β}|v|² + ½ f^{2−β}`.
    pub fn lagrangian(&self, rho: f64, v: Vec2) -> f64 {
        0.5 * self.saturation_pow(rho, -self.beta) * norm_sq(v)
            + 0.5 * self.saturation_pow(rho, 2.0 - self.beta)
    }

    /// Hamiltonian `½ f^β|p|² − ½ f^{2−β}`.
    pub fn hamiltonian(&self, rho: f64, p: Vec2) -> f64 {
        0.5 * self.saturation_pow(rho, self.beta) * norm_sq(p)
            - 0.5 * self.saturation_pow(rho, 2.0 - self.beta)
    }

    /// `∂H/∂p = f^β p`.
    pub fn hamiltonian_p(&self, rho: f64, p: Vec2) -> Vec2 {
        let c = self.saturation_pow(rho, self.beta);
        [c * p[0], c * p[1]]
    }

    /// `∂H/∂ρ = −(β/2) f^{β−1}|p|² + ((2−β)/2) f^{1−β}`.
    pub fn hamiltonian_rho(&self, rho: f64, p: Vec2) -> f64 {
        let b = self.beta;
        -0.5 * b * self.saturation_pow(rho, b - 1.0) * norm_sq(p)
            + 0.5 * (2.0 - b) * self.saturation_pow(rho, 1.0 - b)
    }

    /// `∂²H/∂ρ∂p = −β f^{β−1} p`.
    pub fn hamiltonian_rho_p(&self, rho: f64, p: Vec2) -> Vec2 {
        let c = -self.beta * self.saturation_pow(rho, self.beta - 1.0);
        [c * p[0], c * p[1]]
    }

    /// Coefficient of the identity in `∂²H/∂p² = f^β I`.
    pub fn hamiltonian_pp(&self, rho: f64) -> f64 {
        self.saturation_pow(rho, self.beta)
    }

    /// Optimal feedback `u = −f^β(ρ)∇φ`.
    pub fn optimal_velocity(&self, rho: f64, grad_phi: Vec2) -> Vec2 {
        let hp = self.hamiltonian_p(rho, grad_phi);
        [-hp[0], -hp[1]]
    }

    /// Right-hand side of the eikonal form `|∇φ| = f^{1−β}(ρ)`.
    #[inline]
    pub fn eikonal_speed(&self, rho: f64) -> f64 {
        self.saturation_pow(rho, 1.0 - self.beta)
    }

    /// Lasry–Lions matrix for the pair (ρ, p).
    pub fn monotonicity_matrix(&self, rho: f64, p: Vec2) -> Result<MonotonicityMatrix, ModelError> {
        if !(rho > 0.0) {
            return Err(ModelError::NonPositiveDensity(rho));
        }
        let h_rho = self.hamiltonian_rho(rho, p);
        let h_rp = self.hamiltonian_rho_p(rho, p);
        let h_pp = self.hamiltonian_pp(rho);
        Ok(MonotonicityMatrix {
            entries: [
                [-2.0 / rho * h_rho, h_rp[0], h_rp[1]],
                [h_rp[0], 2.0 * h_pp, 0.0],
                [h_rp[1], 0.0, 2.0 * h_pp],
            ],
        })
    }

    /// Brute-force Legendre transform `sup_q [q·p − L(ρ, q)]` over a square grid
    /// `[-q_range, q_range]²` with spacing `q_step`.
    pub fn legendre_sup_bruteforce(
        &self,
        rho: f64,
        p: Vec2,
        q_range: f64,
        q_step: f64,
    ) -> Result<f64, ModelError> {
        if !(q_range > 0.0 && q_step > 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "q grid needs positive range and step, got ({q_range}, {q_step})"
            )));
        }
        let n = (q_range / q_step).round() as i64;
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = (0i64, 0i64);
        for a in -n..=n {
            let qx = a as f64 * q_step;
            for b in -n..=n {
                let q = [qx, b as f64 * q_step];
                let val = dot(q, p) - self.lagrangian(rho, q);
                if val > best {
                    best = val;
                    best_idx = (a, b);
                }
            }
        }
        if best_idx.0.abs() == n || best_idx.1.abs() == n {
            return Err(ModelError::LegendreBoundary {
                q: [best_idx.0 as f64 * q_step, best_idx.1 as f64 * q_step],
            });
        }
        Ok(best)
    }
}

/// Symmetric 3×3 block matrix `[[−(2/ρ)H_ρ, H_ρpᵀ], [H_ρp, 2H_pp]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityMatrix {
    pub entries: [[f64; 3]; 3],
}

impl MonotonicityMatrix {
    pub fn quadratic_form(&self, z: [f64; 3]) -> f64 {
        let m = &self.entries;
        (0..3)
            .map(|i| (0..3).map(|j| z[i] * m[i][j] * z[j]).sum::<f64>())
            .sum()
    }

    /// Eigenvalues in ascending order, from the closed-form trigonometric
    /// solution of the characteristic cubic.
    pub fn eigenvalues(&self) -> [f64; 3] {
        symmetric_eigenvalues_3x3(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

/// Ascending eigenvalues of a real symmetric 3×3 matrix.
pub fn symmetric_eigenvalues_3x3(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return [0.0; 3];
    }
    // Work on the scaled matrix to keep the cubic well conditioned.
    let m: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] / scale));
    let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let mut eig = if off == 0.0 {
        [m[0][0], m[1][1], m[2][2]]
    } else {
        let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * off;
        let p = (p2 / 6.0).sqrt();
        let b: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| (m[i][j] - if i == j { q } else { 0.0 }) / p)
        });
        let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
            - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e_max = q + 2.0 * p * phi.cos();
        let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e_mid = 3.0 * q - e_max - e_min;
        [e_min, e_mid, e_max]
    };
    eig.sort_by(|x, y| x.total_cmp(y));
    eig.map(|e| e * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64) -> ModelParams {
        ModelParams::new(beta, 1.0, 0.0).unwrap()
    }

    #[test]
    fn saturation_values() {
        let p = params(2.0);
        assert_eq!(p.saturation(0.5), 0.5);
        assert_eq!(p.saturation(1.5), 0.0);
        assert_eq!(p.saturation(0.0), 1.0);
        assert_eq!(p.saturation_floored(0.5), 0.5);
        assert_eq!(p.saturation_floored(1.0), 1e-6);
        assert_eq!(p.saturation_floored(2.0), 1e-6);
    }

    #[test]
    fn lagrangian_hand_values() {
        assert!((params(2.0).lagrangian(0.5, [0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((params(0.0).lagrangian(0.5, [1.0, 0.0]) - 0.625).abs() < 1e-15);
        assert!((params(1.0).lagrangian(0.0, [1.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_hand_values() {
        assert!((params(2.0).hamiltonian(0.5, [1.0, 0.0]) + 0.375).abs() < 1e-15);
        assert!((params(1.0).hamiltonian(0.5, [2.0, 0.0]) - 0.75).abs() < 1e-15);
        // f = 0 kills the kinetic term; f⁰ = 1 keeps the constant cost.
        assert_eq!(params(2.0).hamiltonian(1.0, [3.0, 4.0]), -0.5);
        assert_eq!(params(1.0).hamiltonian(1.0, [3.0, 4.0]), 0.0);
    }

    #[test]
    fn zero_exponent_is_one_at_saturation() {
        // β = 2: f^{2−β} = f⁰ = 1 even where f = 0.
        let p = params(2.0);
        assert_eq!(p.saturation_pow(1.0, 0.0), 1.0);
        assert_eq!(p.hamiltonian(1.0, [0.0, 0.0]), -0.5);
        // β = 0: f^β = 1 at saturation, so the feedback is not frozen.
        assert_eq!(params(0.0).hamiltonian_pp(1.0), 1.0);
    }

    #[test]
    fn derivative_hand_values() {
        let p = params(2.0);
        assert_eq!(p.hamiltonian_p(0.5, [1.0, 0.0]), [0.25, 0.0]);
        assert_eq!(p.hamiltonian_p(0.3, [0.0, 0.0]), [0.0, 0.0]);
        assert!((p.hamiltonian_rho(0.5, [1.0, 0.0]) + 0.5).abs() < 1e-15);
        assert_eq!(p.hamiltonian_rho_p(0.5, [1.0, 0.0]), [-1.0, 0.0]);
    }

    #[test]
    fn optimal_velocity_values() {
        let u = params(1.0).optimal_velocity(0.5, [-0.5, 0.0]);
        assert!((u[0] - 0.25).abs() < 1e-15 && u[1] == 0.0);
        assert_eq!(params(2.0).optimal_velocity(1.0, [3.0, -2.0]), [-0.0, 0.0]);
        for beta in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let p = params(beta);
            let u = p.optimal_velocity(0.5, [-p.eikonal_speed(0.5), 0.0]);
            assert!((u[0] - 0.5).abs() < 1e-14, "beta {beta}: {u:?}");
        }
    }

    #[test]
    fn legendre_reports_boundary_maximizer() {
        let p = params(2.0);
        // maximizer f^β p = (2.5, 0) is outside [-1, 1]²
        let err = p.legendre_sup_bruteforce(0.5, [10.0, 0.0], 1.0, 0.01);
        assert!(matches!(err, Err(ModelError::LegendreBoundary { .. })));
        let v = p
            .legendre_sup_bruteforce(0.5, [0.0, 0.0], 1.0, 0.01)
            .unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_rejects_nonpositive_density() {
        assert!(params(2.0).monotonicity_matrix(0.0, [1.0, 0.0]).is_err());
        assert!(params(2.0).monotonicity_matrix(-0.1, [1.0, 0.0]).is_err());
    }

    #[test]
    fn monotonicity_beta_zero_witness() {
        let m = params(0.0).monotonicity_matrix(0.5, [0.0, 0.0]).unwrap();
        assert!((m.quadratic_form([1.0, 0.0, 0.0]) + 2.0).abs() < 1e-15);
        assert!(!m.is_psd(1e-12));
    }

    #[test]
    fn monotonicity_beta_two_above_half_capacity() {
        let p = params(2.0);
        let (rho, px) = (0.75, 1.0);
        let m = p.monotonicity_matrix(rho, [px, 0.0]).unwrap();
        // Along z₂ = p z₁ /(ρ_m − ρ) only the negative term survives.
        let f = 1.0 - rho;
        let z = [1.0, px / f, 0.0];
        let expected = 2.0 * px * px * (f / rho - 1.0);
        assert!((m.quadratic_form(z) - expected).abs() < 1e-12);
        assert!(expected < 0.0);
        assert!(!m.is_psd(1e-12));
    }

    #[test]
    fn eigenvalues_of_diagonal_and_degenerate_matrices() {
        let e = symmetric_eigenvalues_3x3(&[[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]]);
        assert_eq!(e, [-1.0, 2.0, 3.0]);
        let e = symmetric_eigenvalues_3x3(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert!(e[0].abs() < 1e-14 && e[1].abs() < 1e-14 && (e[2] - 3.0).abs() < 1e-14);
        assert_eq!(symmetric_eigenvalues_3x3(&[[0.0; 3]; 3]), [0.0; 3]);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(3.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0).is_err());
        assert!(ModelParams::with_floor(1.0, 1.0, 0.0, 1.0).is_err());
        let p = ModelParams::new(2.0, 1.0, 0.01).unwrap();
        assert_eq!(p.f_floor, 1e-6);
    }
}
