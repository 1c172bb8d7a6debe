//! Closed-form layer: exponents, thresholds, Gamma integrals, the explicit
//! symmetric extremals u_{mu,*} and their branch, spherical-harmonic constants.
//!
//! Conventions: the measure on the sphere is the uniform *probability* measure,
//! so all cylinder norms are taken with respect to ds x dnu(omega). Every
//! integral ratio downstream assumes this.

use crate::error::{invalid, Result};
use serde::Serialize;

/// Parameter triple governing everything: dimension d >= 3, exponent
/// p in (2, 2*] with 2* = 2d/(d-2), and interpolation exponent
/// theta in [vartheta(p,d), 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub d: u32,
    pub p: f64,
    pub theta: f64,
}

impl ProblemParams {
    pub fn new(d: u32, p: f64, theta: f64) -> Result<Self> {
        if d < 3 {
            return Err(invalid(format!("d = {d} but d >= 3 is required")));
        }
        let ts = two_star(d);
        if !(p > 2.0 && p <= ts) {
            return Err(invalid(format!("p = {p} outside (2, 2*] = (2, {ts}]")));
        }
        // Rounding slack matters at p = 2*, where vartheta = 1 up to roundoff.
        let vt = vartheta(p, d);
        if !(theta >= vt - 1e-12 && theta <= 1.0) {
            return Err(invalid(format!(
                "theta = {theta} outside admissible interval [{vt}, 1]"
            )));
        }
        Ok(Self { d, p, theta })
    }

    pub fn vartheta(&self) -> f64 {
        vartheta(self.p, self.d)
    }

    pub fn mu_fs(&self) -> f64 {
        mu_fs(self.p, self.d)
    }
}

/// Critical Sobolev exponent 2* = 2d/(d-2).
pub fn two_star(d: u32) -> f64 {
    2.0 * d as f64 / (d as f64 - 2.0)
}

/// a_c = (d-2)/2, the critical weight.
pub fn a_c(d: u32) -> f64 {
    (d as f64 - 2.0) / 2.0
}

/// vartheta(p,d) = d(p-2)/(2p), the Gagliardo-Nirenberg interpolation exponent.
pub fn vartheta(p: f64, d: u32) -> f64 {
    d as f64 * (p - 2.0) / (2.0 * p)
}

/// Weights (a, b) of the CKN inequality on R^d.
#[derive(Debug, Clone, Copy)]
pub struct CknWeights {
    pub a: f64,
    pub b: f64,
    pub d: u32,
}

/// Emden-Fowler dictionary: (a, b) -> (p, Lambda) with p = 2d/(d-2+2(b-a))
/// and Lambda = (a - a_c)^2.
pub fn ckn_to_cylinder(w: CknWeights) -> Result<(f64, f64)> {
    if w.d < 3 {
        return Err(invalid("d >= 3 required"));
    }
    let ac = a_c(w.d);
    if w.a >= ac {
        return Err(invalid(format!("a = {} must satisfy a < a_c = {ac}", w.a)));
    }
    if !(w.b >= w.a && w.b <= w.a + 1.0) {
        return Err(invalid(format!("b = {} outside [a, a+1]", w.b)));
    }
    let p = 2.0 * w.d as f64 / (w.d as f64 - 2.0 + 2.0 * (w.b - w.a));
    if p <= 2.0 {
        return Err(invalid(format!("p(a,b) = {p} but p must exceed 2")));
    }
    let lambda = (w.a - ac) * (w.a - ac);
    Ok((p, lambda))
}

/// mu_FS = 4(d-1)/(p^2-4), the Felli-Schneider instability threshold in mu.
pub fn mu_fs(p: f64, d: u32) -> f64 {
    assert!(p > 2.0, "mu_fs requires p > 2");
    4.0 * (d as f64 - 1.0) / (p * p - 4.0)
}

/// Lambda_FS(p,theta) = mu_FS * ((2 theta - 1) p + 2)/(p + 2).
pub fn lambda_fs(p: f64, theta: f64, d: u32) -> f64 {
    mu_fs(p, d) * ((2.0 * theta - 1.0) * p + 2.0) / (p + 2.0)
}

/// Lowest eigenvalue of the linearization around the symmetric extremal:
/// lambda_1(mu) = d - 1 + mu - mu p^2/4 = -(p^2-4)(mu - mu_FS)/4.
pub fn lambda1(mu: f64, p: f64, d: u32) -> f64 {
    d as f64 - 1.0 + mu - mu * p * p / 4.0
}

// Lanczos approximation (g = 7, 9 coefficients), relative error below 1e-13
// on the real axis away from the poles.
const LANCZOS_G: usize = 7;
const LANCZOS_P: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// Gamma function via the Lanczos series, with reflection for x < 1/2.
pub fn gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut t = LANCZOS_P[0];
    for (i, c) in LANCZOS_P.iter().enumerate().skip(1) {
        t += c / (x + i as f64);
    }
    let w = x + LANCZOS_G as f64 + 0.5;
    (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * t
}

/// f(q) = sqrt(pi) Gamma(q/2) / Gamma((q+1)/2) = int_R sech^q(s) ds.
pub fn gamma_f(q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Err(invalid(format!("gamma_f requires q > 0, got {q}")));
    }
    Ok(std::f64::consts::PI.sqrt() * gamma(q / 2.0) / gamma((q + 1.0) / 2.0))
}

/// The sech-power integrals I_2, I_p, J_2 attached to a given p.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaIntegrals {
    pub i2: f64,
    pub ip: f64,
    pub j2: f64,
}

/// I_2 = f(4/(p-2)), I_p = 4 I_2/(p+2), J_2 = 4 I_2/((p+2)(p-2)).
pub fn gamma_integrals(p: f64) -> Result<GammaIntegrals> {
    if p <= 2.0 {
        return Err(invalid(format!("gamma_integrals requires p > 2, got {p}")));
    }
    let i2 = gamma_f(4.0 / (p - 2.0))?;
    Ok(GammaIntegrals {
        i2,
        ip: 4.0 * i2 / (p + 2.0),
        j2: 4.0 * i2 / ((p + 2.0) * (p - 2.0)),
    })
}

/// kappa_p = ((p+2)/4)^{2/p} * (2 I_2/(p-2))^{(p-2)/p}; kappa_4 = sqrt(3).
pub fn kappa_p(p: f64) -> Result<f64> {
    let gi = gamma_integrals(p)?;
    Ok(((p + 2.0) / 4.0).powf(2.0 / p) * (2.0 * gi.i2 / (p - 2.0)).powf((p - 2.0) / p))
}

/// Explicit symmetric extremal u_{mu,*}(s) = alpha cosh(beta s)^{-2/(p-2)},
/// the unique (up to translation) positive solution of -u'' + mu u = u^{p-1}.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricExtremal {
    pub mu: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn symmetric_extremal(mu: f64, p: f64) -> Result<SymmetricExtremal> {
    if mu <= 0.0 {
        return Err(invalid(format!("mu = {mu} must be positive")));
    }
    if p <= 2.0 {
        return Err(invalid(format!("p = {p} must exceed 2")));
    }
    Ok(SymmetricExtremal {
        mu,
        p,
        alpha: (p / 2.0 * mu).powf(1.0 / (p - 2.0)),
        beta: (p - 2.0) / 2.0 * mu.sqrt(),
    })
}

impl SymmetricExtremal {
    pub fn eval(&self, s: f64) -> f64 {
        self.alpha * (self.beta * s).cosh().powf(-2.0 / (self.p - 2.0))
    }

    /// Residual of -u'' + mu u - u^{p-1} at s, from the closed-form second
    /// derivative of the sech power.
    pub fn residual(&self, s: f64) -> f64 {
        let k = 2.0 / (self.p - 2.0);
        let c = (self.beta * s).cosh();
        let t = (self.beta * s).tanh();
        let u = self.alpha * c.powf(-k);
        let upp = self.alpha
            * self.beta
            * self.beta
            * k
            * c.powf(-k)
            * ((k + 1.0) * t * t - 1.0);
        -upp + self.mu * u - u.powf(self.p - 1.0)
    }
}

/// tau*(mu) = (p-2)/(p+2) mu, the kinetic ratio t[u_{mu,*}].
pub fn tau_star(mu: f64, p: f64) -> f64 {
    (p - 2.0) / (p + 2.0) * mu
}

/// nu*(mu) = kappa_p mu^{-(p-2)/(2p)}.
pub fn nu_star(mu: f64, p: f64) -> Result<f64> {
    Ok(kappa_p(p)? * mu.powf(-(p - 2.0) / (2.0 * p)))
}

/// Lambda*^theta(mu) = theta mu - (1-theta) tau*(mu) = mu (2 p theta - (p-2))/(p+2).
pub fn lambda_star_theta(mu: f64, p: f64, theta: f64) -> f64 {
    mu * (2.0 * p * theta - (p - 2.0)) / (p + 2.0)
}

/// Inverse of the linear map Lambda*^theta: mu(Lambda) = (p+2) Lambda / (2 p theta - (p-2)).
pub fn mu_of_lambda(lambda: f64, p: f64, theta: f64) -> Result<f64> {
    let denom = 2.0 * p * theta - (p - 2.0);
    if denom <= 0.0 {
        return Err(invalid(format!(
            "theta = {theta} at or below (p-2)/(2p); symmetric branch map degenerates"
        )));
    }
    Ok((p + 2.0) * lambda / denom)
}

/// J*^theta(mu) = kappa_p (2 p theta/(p+2))^theta mu^{theta - (p-2)/(2p)}.
pub fn j_star_theta(mu: f64, p: f64, theta: f64) -> Result<f64> {
    Ok(kappa_p(p)? * (2.0 * p * theta / (p + 2.0)).powf(theta) * mu.powf(theta - (p - 2.0) / (2.0 * p)))
}

/// Symmetric CKN constant K*_CKN(theta, Lambda, p) = 1 / J*^theta(mu(Lambda)).
pub fn k_star_ckn(theta: f64, lambda: f64, p: f64) -> Result<f64> {
    let mu = mu_of_lambda(lambda, p, theta)?;
    Ok(1.0 / j_star_theta(mu, p, theta)?)
}

/// One point of the explicit symmetric branch at parameter mu.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetricBranchPoint {
    pub mu: f64,
    pub tau_star: f64,
    pub nu_star: f64,
    pub lambda_theta: f64,
    pub j_theta: f64,
}

pub fn symmetric_branch(mu: f64, params: &ProblemParams) -> Result<SymmetricBranchPoint> {
    if mu <= 0.0 {
        return Err(invalid(format!("mu = {mu} must be positive")));
    }
    let (p, theta) = (params.p, params.theta);
    Ok(SymmetricBranchPoint {
        mu,
        tau_star: tau_star(mu, p),
        nu_star: nu_star(mu, p)?,
        lambda_theta: lambda_star_theta(mu, p, theta),
        j_theta: j_star_theta(mu, p, theta)?,
    })
}

/// eta = (p+2) theta Lambda / ((2 theta - 1) p + 2) and the kinetic term
/// t[u*] = (p-2) Lambda / ((2 theta - 1) p + 2) of the symmetric extremal
/// at multiplier Lambda.
pub fn eta_symmetric(lambda: f64, params: &ProblemParams) -> Result<(f64, f64)> {
    let (p, theta) = (params.p, params.theta);
    let denom = (2.0 * theta - 1.0) * p + 2.0;
    if denom <= 0.0 {
        return Err(invalid(format!("(2 theta - 1) p + 2 = {denom} must be positive")));
    }
    if lambda <= 0.0 {
        return Err(invalid(format!("Lambda = {lambda} must be positive")));
    }
    Ok(((p + 2.0) * theta * lambda / denom, (p - 2.0) * lambda / denom))
}

/// Explicit symmetry/symmetry-breaking bounds for theta = 1:
/// (d-1)(6-p)/(4(p-2)) < Lambda_s(p) <= Lambda_FS(p,1), and symmetry holds
/// whenever Lambda <= d^2/p^2.
pub fn symmetry_bounds(p: f64, d: u32) -> (f64, f64, f64) {
    let lower1 = (d as f64 - 1.0) * (6.0 - p) / (4.0 * (p - 2.0));
    let lower2 = (d as f64 / p) * (d as f64 / p);
    (lower1, lower2, lambda_fs(p, 1.0, d))
}

/// Normalized Gegenbauer harmonics on [0, pi] with respect to
/// dnu = sin^{d-2}(zeta) dzeta / Z_d, and the constants built from them.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarmonicConstants {
    pub d: u32,
    /// kappa_(d) = sqrt(2(d-1)/(d+2)), the coupling in f_1^2 = f_0 + kappa_(d) f_2.
    pub kappa_d: f64,
    /// int f_1^4 dnu = 3d/(d+2).
    pub f1_fourth_moment: f64,
    /// Laplace-Beltrami eigenvalues k(k+d-2) for k = 0..3.
    pub eigenvalues: [f64; 4],
    /// Z_d = sqrt(pi) Gamma((d-1)/2) / Gamma(d/2), the sin^{d-2} normalizer.
    pub z_d: f64,
}

pub fn harmonic_constants(d: u32) -> Result<HarmonicConstants> {
    if d < 2 {
        return Err(invalid("harmonic constants require d >= 2"));
    }
    let df = d as f64;
    Ok(HarmonicConstants {
        d,
        kappa_d: (2.0 * (df - 1.0) / (df + 2.0)).sqrt(),
        f1_fourth_moment: 3.0 * df / (df + 2.0),
        eigenvalues: [0.0, df - 1.0, 2.0 * df, 3.0 * (df + 1.0)],
        z_d: std::f64::consts::PI.sqrt() * gamma((df - 1.0) / 2.0) / gamma(df / 2.0),
    })
}

impl HarmonicConstants {
    pub fn f0(&self, _zeta: f64) -> f64 {
        1.0
    }

    pub fn f1(&self, zeta: f64) -> f64 {
        (self.d as f64).sqrt() * zeta.cos()
    }

    pub fn f2(&self, zeta: f64) -> f64 {
        let df = self.d as f64;
        ((df + 2.0) / (2.0 * (df - 1.0))).sqrt() * (df * zeta.cos() * zeta.cos() - 1.0)
    }
}
