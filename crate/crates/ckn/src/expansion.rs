//! Bifurcation-expansion engine at mu_FS: the order-2/order-4 coefficients,
//! c_{p,d}, the sufficient-condition quartic, tau'(mu_FS), nu'(mu_FS),
//! theta_2(p,d), xi^theta(mu_FS) and the approximate minimizer u_(mu).

use crate::analytic::{
    gamma_integrals, harmonic_constants, mu_fs, symmetric_extremal, two_star, vartheta,
    SymmetricExtremal,
};
use crate::error::{invalid, solver, Result};
use crate::spectral::{
    chi_0_2pm3_closed, chi_0_pm1_closed, quadrature, solve_chi, w_profile, ChiKind, ChiProfile,
    LineGrid,
};
use serde::Serialize;

/// All bifurcation constants attached to a pair (p, d), evaluated at mu_FS.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub p: f64,
    pub d: u32,
    pub b_mu_fs: f64,
    pub b01: f64,
    pub b0pm1: f64,
    pub b02pm3: f64,
    pub b22pm3: f64,
    pub a0: f64,
    pub sigma: f64,
    pub l_psi: f64,
    pub l_psi_approx: f64,
    pub c_pd: Option<f64>,
    pub c_pd_approx: Option<f64>,
    pub hypothesis_h: bool,
    pub k_psi: f64,
    pub tau_prime: f64,
    pub nu_prime_ratio: f64,
    pub theta2: f64,
}

/// b(mu_FS) = 4(d-1)^2 p^3 (p-1)^2 [2p(5p-6) - d(p^2-16p+12)]
///            / ((d+2)(p+2)^2 (p-2)(3p-2)^2 (5p-6)).
pub fn b_at_mu_fs(p: f64, d: u32) -> f64 {
    let df = d as f64;
    4.0 * (df - 1.0).powi(2) * p.powi(3) * (p - 1.0).powi(2)
        * (2.0 * p * (5.0 * p - 6.0) - df * (p * p - 16.0 * p + 12.0))
        / ((df + 2.0)
            * (p + 2.0).powi(2)
            * (p - 2.0)
            * (3.0 * p - 2.0).powi(2)
            * (5.0 * p - 6.0))
}

/// a_0 = p^2 mu_FS / (3p - 2).
pub fn a0(p: f64, d: u32) -> f64 {
    p * p * mu_fs(p, d) / (3.0 * p - 2.0)
}

/// b_{0,1} = -p(p-2) I_2 / (2(p-1)(p+2)).
pub fn b01(p: f64) -> Result<f64> {
    Ok(-p * (p - 2.0) / (2.0 * (p - 1.0) * (p + 2.0)) * gamma_integrals(p)?.i2)
}

/// b_{0,p-1} = -(p-2) I_p / (3p-2).
pub fn b0pm1(p: f64) -> Result<f64> {
    Ok(-(p - 2.0) / (3.0 * p - 2.0) * gamma_integrals(p)?.ip)
}

/// b_{0,2p-3} = -p(p-2)(3p-4) I_p / ((p-1)(3p-2)(5p-6)).
pub fn b02pm3(p: f64) -> Result<f64> {
    Ok(-(p - 2.0) * p * (3.0 * p - 4.0) / ((p - 1.0) * (3.0 * p - 2.0) * (5.0 * p - 6.0))
        * gamma_integrals(p)?.ip)
}

/// b_{2,2p-3} = int chi_{2,2p-3} w^{2p-3} ds. No closed form exists; the value
/// is assembled from the boundary-value solve with Richardson extrapolation
/// over a grid pair (the solver is fourth order).
pub fn b22pm3(p: f64, d: u32) -> Result<f64> {
    let quad_on = |grid: &LineGrid| -> Result<f64> {
        let chi = solve_chi(ChiKind::Chi22pm3, p, d, grid)?;
        let integrand: Vec<f64> = grid
            .points()
            .zip(chi.values.iter())
            .map(|(s, v)| v * w_profile(p, s).powf(2.0 * p - 3.0))
            .collect();
        quadrature(&integrand, grid)
    };
    let fine = quad_on(&LineGrid::default_chi())?;
    let coarse = quad_on(&LineGrid::new(30.0, 2001)?)?;
    Ok((16.0 * fine - coarse) / 15.0)
}

/// Upper bound on y = b_{2,2p-3}/I_p from the Poschl-Teller spectral estimate:
/// y <= 16 p (p-1)(3p-4) / ((3p-2)(5p-6)(7p-10) sigma(p,d)).
pub fn y_approx(p: f64, d: u32) -> Result<f64> {
    Ok(16.0 * p * (p - 1.0) * (3.0 * p - 4.0)
        / ((3.0 * p - 2.0) * (5.0 * p - 6.0) * (7.0 * p - 10.0) * crate::spectral::sigma(p, d)?))
}

fn l_psi_from_y(p: f64, d: u32, y: f64) -> f64 {
    let df = d as f64;
    4.0 * (df - 1.0).powi(2) * (p - 1.0) * p.powi(3) / (p + 2.0).powi(2)
        * ((p - 2.0) * p / ((3.0 * p - 2.0).powi(2) * (5.0 * p - 6.0))
            + 2.0 * (df - 1.0) / (df + 2.0) * (p - 1.0) / (p - 2.0).powi(2) * y)
}

/// L[psi] assembled from y = b_{2,2p-3}/I_p.
pub fn l_psi(p: f64, d: u32, b22pm3_value: f64) -> Result<f64> {
    Ok(l_psi_from_y(p, d, b22pm3_value / gamma_integrals(p)?.ip))
}

/// L_approx[psi]: L[psi] with y replaced by its upper bound.
pub fn l_psi_approx(p: f64, d: u32) -> Result<f64> {
    Ok(l_psi_from_y(p, d, y_approx(p, d)?))
}

/// Relative tolerance below which hypothesis (H), b(mu_FS) - L/2 != 0, is
/// declared violated.
const H_TOL: f64 = 1e-10;

fn c_from(b: f64, l: f64, p: f64) -> (Option<f64>, bool) {
    let denom = b - 0.5 * l;
    if denom.abs() < H_TOL * b.abs().max(l.abs()) {
        (None, false)
    } else {
        (Some((p * p - 4.0) / (8.0 * denom)), true)
    }
}

/// c_{p,d} = (p^2-4)/(8 (b(mu_FS) - L[psi]/2)) together with the hypothesis-(H)
/// flag; c is withheld when the denominator is within tolerance of zero.
pub fn c_pd(p: f64, d: u32) -> Result<(Option<f64>, bool)> {
    let b = b_at_mu_fs(p, d);
    let l = l_psi(p, d, b22pm3(p, d)?)?;
    Ok(c_from(b, l, p))
}

/// Largest root in (2, 2*) of the quartic whose sign decides the sufficient
/// condition 2 b(mu_FS) > L_approx[psi]:
/// M(p) = (103d^2-227d+54)p^4 + (-400d^2+592d-288)p^3 + (368d^2-536d+504)p^2
///        + (160d^2+384d-288)p - 240d(d+1).
pub fn p_approx(d: u32) -> Result<f64> {
    if d < 3 {
        return Err(invalid("p_approx requires d >= 3"));
    }
    let df = d as f64;
    let coeff = [
        103.0 * df * df - 227.0 * df + 54.0,
        -400.0 * df * df + 592.0 * df - 288.0,
        368.0 * df * df - 536.0 * df + 504.0,
        160.0 * df * df + 384.0 * df - 288.0,
        -240.0 * df * (df + 1.0),
    ];
    let m = |p: f64| coeff.iter().fold(0.0, |acc, c| acc * p + c);

    // Scan a wide interval for sign changes and keep the largest root.
    let (lo, hi, nscan) = (2.0, 20.0, 18000);
    let step = (hi - lo) / nscan as f64;
    let mut best: Option<f64> = None;
    let mut prev = m(lo);
    for i in 1..=nscan {
        let x = lo + i as f64 * step;
        let cur = m(x);
        if prev == 0.0 {
            best = Some(x - step);
        } else if prev * cur < 0.0 {
            let (mut a, mut b) = (x - step, x);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if m(a) * m(mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            best = Some(0.5 * (a + b));
        }
        prev = cur;
    }
    match best {
        Some(r) if r > 2.0 && r < two_star(d) => Ok(r),
        Some(r) => Err(solver(format!(
            "largest quartic root {r} outside (2, 2*) for d = {d}"
        ))),
        None => Err(solver(format!("no real quartic root found in (2, 20) for d = {d}"))),
    }
}

/// k_psi = -2 p^2 (p-1)(d-1) / ((p-2)(p+2)(3p-2)).
pub fn k_psi(p: f64, d: u32) -> f64 {
    let df = d as f64;
    -2.0 * p * p * (p - 1.0) * (df - 1.0) / ((p - 2.0) * (p + 2.0) * (3.0 * p - 2.0))
}

/// B_0/alpha = (p-1) p^2 mu_FS / (2(p-2)), the psi_0 coefficient in units of
/// the extremal's amplitude (with eps^2/(2 eta) = 1/2 and lambda_1 dropped).
pub fn b0_over_alpha(p: f64, d: u32) -> f64 {
    (p - 1.0) * p * p * mu_fs(p, d) / (2.0 * (p - 2.0))
}

/// A_0/alpha = p^3 (p-1) mu_FS / ((p-2)(3p-2)) under the same conventions.
pub fn a0_over_alpha(p: f64, d: u32) -> f64 {
    p.powi(3) * (p - 1.0) * mu_fs(p, d) / ((p - 2.0) * (3.0 * p - 2.0))
}

/// tau'(mu_FS) = (p-2)/(p+2) + 16 p^2 (d-1)^2 c_{p,d} / ((p-2)(p+2)^3).
pub fn tau_prime_fs(p: f64, d: u32, c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(invalid(format!("tau'(mu_FS) requires c_{{p,d}} > 0, got {c}")));
    }
    let df = d as f64;
    Ok((p - 2.0) / (p + 2.0)
        + 16.0 * p * p * (df - 1.0).powi(2) / ((p - 2.0) * (p + 2.0).powi(3)) * c)
}

/// nu'(mu_FS)/nu_*(mu_FS) per Theorem T1bis (iii).
pub fn nu_prime_fs(p: f64, d: u32, c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(invalid(format!("nu'(mu_FS) requires c_{{p,d}} > 0, got {c}")));
    }
    let mu = mu_fs(p, d);
    let b01_over_i2 = -p * (p - 2.0) / (2.0 * (p - 1.0) * (p + 2.0));
    Ok(-(p - 2.0) / (2.0 * p * mu)
        + c * (p * mu * (2.0 / (p + 2.0) - p * (p - 1.0) / (3.0 * p - 2.0))
            + 2.0 * b0_over_alpha(p, d) * (b01_over_i2 + (p - 2.0) / (3.0 * p - 2.0))))
}

/// theta_2(p,d) = tau'(mu_FS) / (1 + tau'(mu_FS)).
pub fn theta2(p: f64, d: u32) -> Result<f64> {
    let (c, _) = c_pd(p, d)?;
    let c = c.ok_or_else(|| solver("hypothesis (H) fails; c_{p,d} undefined"))?;
    let tp = tau_prime_fs(p, d, c)?;
    if tp <= 0.0 {
        return Err(solver(format!("tau'(mu_FS) = {tp} <= 0; theta_2 undefined")));
    }
    Ok(tp / (1.0 + tp))
}

/// xi^theta(mu_FS) = -(p^2-4) c/4
///   + (p+2)(1-theta)(2p theta_2-(p-2))^2
///     / (4 p^2 mu_FS^2 (1-theta_2)^2 (2p theta-(p-2))).
pub fn xi_theta(theta: f64, p: f64, d: u32, c: f64) -> Result<f64> {
    let vt = vartheta(p, d);
    if !(theta >= vt && theta <= 1.0) {
        return Err(invalid(format!("theta = {theta} outside [{vt}, 1]")));
    }
    if c <= 0.0 {
        return Err(invalid(format!("xi^theta requires c_{{p,d}} > 0, got {c}")));
    }
    let mu = mu_fs(p, d);
    let tp = tau_prime_fs(p, d, c)?;
    let th2 = tp / (1.0 + tp);
    Ok(-0.25 * (p * p - 4.0) * c
        + (p + 2.0) / (4.0 * p * p * mu * mu)
            * (1.0 - theta) * (2.0 * p * th2 - (p - 2.0)).powi(2)
            / ((1.0 - th2).powi(2) * (2.0 * p * theta - (p - 2.0))))
}

/// Residual of the Lemma Rem2 double identity
/// nu_*'/nu_* + tau_*'/(mu_FS+tau_*) = nu'/nu_* + tau'/(mu_FS+tau_*) = 0.
pub fn rem2_identity_residual(p: f64, d: u32) -> Result<f64> {
    let (c, _) = c_pd(p, d)?;
    let c = c.ok_or_else(|| solver("hypothesis (H) fails; c_{p,d} undefined"))?;
    let mu = mu_fs(p, d);
    let ts = crate::analytic::tau_star(mu, p);
    let denom = mu + ts;
    let sym = -(p - 2.0) / (2.0 * p * mu) + ((p - 2.0) / (p + 2.0)) / denom;
    let full = nu_prime_fs(p, d, c)? + tau_prime_fs(p, d, c)? / denom;
    Ok(sym.abs().max(full.abs()))
}

impl ExpansionReport {
    pub fn compute(p: f64, d: u32) -> Result<Self> {
        if d < 3 || p <= 2.0 || p >= two_star(d) {
            return Err(invalid(format!(
                "expansion requires d >= 3 and p in (2, 2*), got p = {p}, d = {d}"
            )));
        }
        let b = b_at_mu_fs(p, d);
        let b22 = b22pm3(p, d)?;
        let l = l_psi(p, d, b22)?;
        let l_approx = l_psi_approx(p, d)?;
        let (c, hypothesis_h) = c_from(b, l, p);
        let (c_approx, _) = c_from(b, l_approx, p);
        let (tau_prime, nu_prime_ratio, theta2) = match c {
            Some(c) if c > 0.0 => {
                let tp = tau_prime_fs(p, d, c)?;
                (tp, nu_prime_fs(p, d, c)?, tp / (1.0 + tp))
            }
            _ => (f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(Self {
            p,
            d,
            b_mu_fs: b,
            b01: b01(p)?,
            b0pm1: b0pm1(p)?,
            b02pm3: b02pm3(p)?,
            b22pm3: b22,
            a0: a0(p, d),
            sigma: crate::spectral::sigma(p, d)?,
            l_psi: l,
            l_psi_approx: l_approx,
            c_pd: c,
            c_pd_approx: c_approx,
            hypothesis_h,
            k_psi: k_psi(p, d),
            tau_prime,
            nu_prime_ratio,
            theta2,
        })
    }
}

/// Approximate minimizer u_(mu) = u_{mu,*} + eps phi_1 f_1 + eps^2 psi with
/// eps^2 = c_{p,d}(mu - mu_FS), phi_1 = u_{mu,*}^{p/2} and
/// psi = k_psi u_{mu,*} f_0 + psi_0 f_0 + psi_2 f_2.
#[derive(Debug, Clone)]
pub struct AnsatzFunction {
    pub mu: f64,
    pub p: f64,
    pub d: u32,
    pub eps: f64,
    pub extremal: SymmetricExtremal,
    pub a0_coeff: f64,
    pub b0_coeff: f64,
    pub b2_coeff: f64,
    pub k_psi: f64,
    pub kappa_d: f64,
    chi2: ChiProfile,
}

impl AnsatzFunction {
    pub fn phi1(&self, s: f64) -> f64 {
        self.extremal.eval(s).powf(self.p / 2.0)
    }

    pub fn psi0(&self, s: f64) -> f64 {
        let bs = self.extremal.beta * s;
        self.a0_coeff * chi_0_pm1_closed(self.p, bs) + self.b0_coeff * chi_0_2pm3_closed(self.p, bs)
    }

    pub fn psi2(&self, s: f64) -> f64 {
        self.b2_coeff * self.chi2.eval(self.extremal.beta * s)
    }

    /// Full ansatz at (s, zeta) on the cylinder.
    pub fn eval(&self, s: f64, zeta: f64) -> f64 {
        let hc = harmonic_constants(self.d).expect("d validated at construction");
        let u = self.extremal.eval(s);
        u + self.eps * self.phi1(s) * hc.f1(zeta)
            + self.eps * self.eps
                * (self.k_psi * u + self.psi0(s) + self.psi2(s) * hc.f2(zeta))
    }
}

pub fn build_ansatz(mu: f64, p: f64, d: u32) -> Result<AnsatzFunction> {
    let mfs = mu_fs(p, d);
    if mu < mfs {
        return Err(invalid(format!(
            "ansatz is one-sided: mu = {mu} below mu_FS = {mfs}"
        )));
    }
    let (c, _) = c_pd(p, d)?;
    let c = c.filter(|&c| c > 0.0).ok_or_else(|| {
        solver("c_{p,d} not positive; ansatz construction refused")
    })?;
    let extremal = symmetric_extremal(mu, p)?;
    let hc = harmonic_constants(d)?;
    // Coefficients at eps^2/(2 eta) = 1/2, lambda_1 dropped (higher order at
    // mu_FS); A_0 = alpha^{p-1}/(2 beta^2) p^2 (p-1)(p-2) mu/(3p-2), etc.
    let alpha = extremal.alpha;
    let beta2 = extremal.beta * extremal.beta;
    let a0_coeff = alpha.powf(p - 1.0) / (2.0 * beta2) * p * p * (p - 1.0) * (p - 2.0) * mu
        / (3.0 * p - 2.0);
    let b0_coeff = 0.5 * (p - 1.0) * (p - 2.0) * alpha.powf(2.0 * p - 3.0) / beta2;
    let b2_coeff = hc.kappa_d * b0_coeff;
    let chi2 = solve_chi(ChiKind::Chi22pm3, p, d, &LineGrid::default_chi())?;
    Ok(AnsatzFunction {
        mu,
        p,
        d,
        eps: (c * (mu - mfs)).sqrt(),
        extremal,
        a0_coeff,
        b0_coeff,
        b2_coeff,
        k_psi: k_psi(p, d),
        kappa_d: hc.kappa_d,
        chi2,
    })
}

/// Energy-ratio prediction Q_mu[u_(mu)]/Q_mu[u_{mu,*}] =
/// 1 - (p^2-4) c_{p,d} (mu - mu_FS)^2 / 8.
pub fn energy_ratio_prediction(mu: f64, p: f64, d: u32) -> Result<f64> {
    let mfs = mu_fs(p, d);
    if mu < mfs {
        return Err(invalid(format!("prediction is one-sided: mu = {mu} < mu_FS = {mfs}")));
    }
    let (c, _) = c_pd(p, d)?;
    let c = c.filter(|&c| c > 0.0).ok_or_else(|| solver("c_{p,d} not positive"))?;
    Ok(1.0 - (p * p - 4.0) * c * (mu - mfs) * (mu - mfs) / 8.0)
}
