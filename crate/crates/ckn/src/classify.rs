//! Gagliardo-Nirenberg thresholds, the Theorem 1 asymptote, and the
//! Scenario 1 / Scenario 2 decision: whether the bifurcating branch
//! reconnects with the symmetric one or escapes to the Gagliardo-Nirenberg
//! asymptote depends on the relative size of K_GN and the symmetric CKN
//! constant at the Felli-Schneider point.

use crate::analytic::{k_star_ckn, lambda_fs, mu_of_lambda, two_star, vartheta};
use crate::error::{invalid, solver, Result};
use crate::expansion::theta2;
use crate::spectral::{ground_state_shoot_with, GroundState};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

pub const DEFAULT_SHOOT_H: f64 = 2.5e-4;

/// Memoized ground-state shoots, keyed by (p, d, radial step). Shoots are
/// pure, so the cache is write-once per key.
fn shoot_cache() -> &'static Mutex<HashMap<(u64, u32, u64), GroundState>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32, u64), GroundState>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// K_GN(p, d) at an explicit shoot resolution, memoized.
pub fn k_gn_at(p: f64, d: u32, h: f64) -> Result<f64> {
    let key = (p.to_bits(), d, h.to_bits());
    if let Some(gs) = shoot_cache().lock().unwrap().get(&key) {
        return Ok(gs.k_gn);
    }
    let gs = ground_state_shoot_with(p, d, h)?;
    let k = gs.k_gn;
    shoot_cache().lock().unwrap().entry(key).or_insert(gs);
    Ok(k)
}

pub fn k_gn(p: f64, d: u32) -> Result<f64> {
    k_gn_at(p, d, DEFAULT_SHOOT_H)
}

/// Symmetric CKN constant at the Felli-Schneider point for theta = vartheta:
/// K*_CKN(vartheta(p,d), Lambda_FS(p, vartheta(p,d)), p).
pub fn k_star_at_fs(p: f64, d: u32) -> Result<f64> {
    let vt = vartheta(p, d);
    k_star_ckn(vt, lambda_fs(p, vt, d), p)
}

/// Theorem 1 asymptote: Lambda -> theta^theta / (vartheta^vartheta
/// (theta-vartheta)^{theta-vartheta}) * Lambda^{theta-vartheta} / K_GN.
pub fn asymptote(theta: f64, p: f64, d: u32, k_gn: f64) -> Result<impl Fn(f64) -> f64> {
    let vt = vartheta(p, d);
    if theta <= vt {
        return Err(invalid(format!(
            "asymptote requires theta > vartheta = {vt}; the exponent degenerates at theta = vartheta"
        )));
    }
    if k_gn <= 0.0 {
        return Err(invalid("K_GN must be positive"));
    }
    let prefactor =
        theta.powf(theta) / (vt.powf(vt) * (theta - vt).powf(theta - vt)) / k_gn;
    let exponent = theta - vt;
    Ok(move |lambda: f64| prefactor * lambda.powf(exponent))
}

/// Limit constant lim mu^{vartheta-theta} J^theta(mu) =
/// theta^theta vartheta^{-vartheta} (1-vartheta)^{vartheta-theta} / K_GN.
pub fn asymptote_limit_constant(theta: f64, p: f64, d: u32, k_gn: f64) -> Result<f64> {
    let vt = vartheta(p, d);
    if theta <= vt {
        return Err(invalid("limit constant requires theta > vartheta"));
    }
    Ok(theta.powf(theta) * vt.powf(-vt) * (1.0 - vt).powf(vt - theta) / k_gn)
}

const LAMBDA_TOL: f64 = 1e-10;

/// Root of K*_CKN(vartheta, Lambda, p) = K_GN below the Felli-Schneider
/// point, together with mu_GN from inverting the linear map
/// Lambda*^vartheta(mu). Absent in a Scenario 1 context, where the crossing
/// (if any) sits above Lambda_FS.
pub fn gn_threshold(p: f64, d: u32) -> Result<Option<(f64, f64)>> {
    gn_threshold_at(p, d, DEFAULT_SHOOT_H)
}

pub fn gn_threshold_at(p: f64, d: u32, h: f64) -> Result<Option<(f64, f64)>> {
    let kgn = k_gn_at(p, d, h)?;
    let vt = vartheta(p, d);
    let lambda_fs_vt = lambda_fs(p, vt, d);
    // K* is decreasing in Lambda, so the crossing below Lambda_FS exists
    // iff K*(Lambda_FS) < K_GN.
    if k_star_at_fs(p, d)? >= kgn {
        return Ok(None);
    }
    let g = |lambda: f64| -> Result<f64> { Ok(k_star_ckn(vt, lambda, p)? - kgn) };
    let mut hi = lambda_fs_vt;
    let mut lo = lambda_fs_vt * 1e-12;
    if g(lo)? <= 0.0 {
        return Err(solver(
            "gn_threshold bracketing failure: K* did not exceed K_GN near Lambda = 0",
        ));
    }
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_gn = 0.5 * (lo + hi);
    let mu_gn = mu_of_lambda(lambda_gn, p, vt)?;
    Ok(Some((lambda_gn, mu_gn)))
}

const P_TOL: f64 = 1e-4;

/// Root in p of K_GN(p, d) - K*_CKN(vartheta(p,d), Lambda_FS(p,
/// vartheta(p,d)), p), located by a sign-change scan over (2, 2*) followed
/// by bisection to 1e-4. Returns the root and its final bracket, or None
/// (with no guessing) when the scan finds no sign change.
pub fn p_star(d: u32) -> Result<Option<(f64, (f64, f64))>> {
    p_star_at(d, DEFAULT_SHOOT_H)
}

pub fn p_star_at(d: u32, h: f64) -> Result<Option<(f64, (f64, f64))>> {
    if d < 3 {
        return Err(invalid("p_star requires d >= 3"));
    }
    let g = |p: f64| -> Result<f64> { Ok(k_gn_at(p, d, h)? - k_star_at_fs(p, d)?) };
    let pmax = two_star(d);
    let n_scan = 16;
    let margin = 0.02 * (pmax - 2.0);
    let mut prev_p = 2.0 + margin;
    let mut prev_g = g(prev_p)?;
    let mut bracket = None;
    for k in 1..=n_scan {
        let pk = 2.0 + margin + (pmax - 2.0 - 2.0 * margin) * k as f64 / n_scan as f64;
        let gk = g(pk)?;
        if prev_g * gk <= 0.0 {
            bracket = Some((prev_p, pk));
            break;
        }
        prev_p = pk;
        prev_g = gk;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(None);
    };
    let glo = g(lo)?;
    while hi - lo > P_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid)? * glo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((0.5 * (lo + hi), (lo, hi))))
}

/// Root in p of theta2(p, d) - vartheta(p, d): the point where the local
/// (Theorem T2) and asymptotic monotonicity criteria exchange sign. The
/// paper observes that this coincides with p_star.
pub fn theta2_vartheta_crossing(d: u32) -> Result<Option<f64>> {
    if d < 3 {
        return Err(invalid("crossing requires d >= 3"));
    }
    let g = |p: f64| -> Result<f64> { Ok(theta2(p, d)? - vartheta(p, d)) };
    let pmax = two_star(d);
    let n_scan = 32;
    let margin = 0.02 * (pmax - 2.0);
    let mut prev_p = 2.0 + margin;
    let mut prev_g = g(prev_p)?;
    let mut bracket = None;
    for k in 1..=n_scan {
        let pk = 2.0 + margin + (pmax - 2.0 - 2.0 * margin) * k as f64 / n_scan as f64;
        let gk = g(pk)?;
        if prev_g * gk <= 0.0 {
            bracket = Some((prev_p, pk));
            break;
        }
        prev_p = pk;
        prev_g = gk;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(None);
    };
    let glo = g(lo)?;
    while hi - lo > P_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid)? * glo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    One,
    Two,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub p: f64,
    pub d: u32,
    pub k_gn: f64,
    pub k_star_at_fs: f64,
    pub scenario: Scenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_gn_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_gn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_star_bracket: Option<(f64, f64)>,
    pub theta2: f64,
    /// theta2 again: the paper only observes numerically that the global
    /// monotonicity threshold vartheta_1 equals theta2, so it is never
    /// computed independently here.
    #[serde(rename = "vartheta1_observed_equal_per_paper")]
    pub vartheta1: f64,
    /// In Scenario 2 the curve Lambda -> K_CKN(vartheta, Lambda, p) is flat
    /// (equal to K_GN, no optimal function) for mu >= mu_GN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_region_note: Option<String>,
    /// Within-tolerance tie between K_GN and K* at the scenario boundary.
    pub boundary_tie: bool,
}

/// Relative tolerance window declaring a K_GN vs K* comparison a tie; set by
/// the shoot's own accuracy.
const TIE_REL_TOL: f64 = 1e-6;

pub fn classify_scenario(p: f64, d: u32) -> Result<ScenarioReport> {
    classify_scenario_at(p, d, DEFAULT_SHOOT_H)
}

pub fn classify_scenario_at(p: f64, d: u32, h: f64) -> Result<ScenarioReport> {
    let kgn = k_gn_at(p, d, h)?;
    let kstar = k_star_at_fs(p, d)?;
    let scenario = if kgn > kstar { Scenario::Two } else { Scenario::One };
    let boundary_tie = (kgn - kstar).abs() <= TIE_REL_TOL * kstar.abs();
    let (lambda_gn_star, mu_gn) = match gn_threshold_at(p, d, h)? {
        Some((l, m)) => (Some(l), Some(m)),
        None => (None, None),
    };
    let t2 = theta2(p, d)?;
    let flat_region_note = mu_gn.map(|m| {
        format!(
            "for theta = vartheta = {}, K_CKN(vartheta, Lambda, p) = K_GN for mu >= mu_GN = {m}; \
             no optimal function beyond the threshold",
            vartheta(p, d)
        )
    });
    let p_star_bracket = p_star_at(d, h)?.map(|(_, bracket)| bracket);
    Ok(ScenarioReport {
        p,
        d,
        k_gn: kgn,
        k_star_at_fs: kstar,
        scenario,
        lambda_gn_star,
        mu_gn,
        p_star_bracket,
        theta2: t2,
        vartheta1: t2,
        flat_region_note,
        boundary_tie,
    })
}
