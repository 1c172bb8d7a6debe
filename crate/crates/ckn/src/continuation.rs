//! Finite-difference Newton solver for the Euler-Lagrange equation
//! -Delta u + mu u = u^{p-1} on the cylinder (reduced to the (s, zeta) strip
//! by Schwarz foliated symmetry) and continuation of the non-symmetric branch
//! in mu.

use crate::analytic::{harmonic_constants, mu_fs, symmetric_extremal, tau_star};
use crate::error::{invalid, solver, Result};
use crate::expansion::build_ansatz;
use serde::Serialize;
use std::f64::consts::PI;

/// Tensor grid on [-S, S] x [0, pi]; n_s and n_zeta are node counts and must
/// be odd so that composite Simpson applies in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderGrid {
    pub s_half: f64,
    pub n_s: usize,
    pub n_zeta: usize,
}

impl CylinderGrid {
    pub fn new(s_half: f64, n_s: usize, n_zeta: usize) -> Result<Self> {
        if s_half <= 0.0 {
            return Err(invalid(format!("s_half = {s_half} must be positive")));
        }
        if n_s < 3 || n_s % 2 == 0 {
            return Err(invalid(format!("n_s = {n_s} must be odd and >= 3")));
        }
        if n_zeta < 33 || n_zeta % 2 == 0 {
            return Err(invalid(format!("n_zeta = {n_zeta} must be odd and >= 33")));
        }
        Ok(Self { s_half, n_s, n_zeta })
    }

    /// Default production grid: S = 20/beta with beta at mu_FS, 801 x 129.
    pub fn default_for(p: f64, d: u32) -> Result<Self> {
        let beta = (p - 2.0) / 2.0 * mu_fs(p, d).sqrt();
        Self::new(20.0 / beta, 801, 129)
    }

    pub fn hs(&self) -> f64 {
        2.0 * self.s_half / (self.n_s - 1) as f64
    }

    pub fn hz(&self) -> f64 {
        PI / (self.n_zeta - 1) as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        -self.s_half + i as f64 * self.hs()
    }

    pub fn zeta(&self, j: usize) -> f64 {
        j as f64 * self.hz()
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_zeta
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Discrete field u(s_i, zeta_j), stored s-major.
#[derive(Debug, Clone)]
pub struct CylinderField {
    pub grid: CylinderGrid,
    pub values: Vec<f64>,
}

impl CylinderField {
    pub fn zeros(grid: CylinderGrid) -> Self {
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_fn(grid: CylinderGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_s {
            for j in 0..grid.n_zeta {
                values.push(f(grid.s(i), grid.zeta(j)));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_zeta + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Simpson weights (1,4,2,...,4,1) * h/3 for an odd node count.
fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Quadrature context for the measure ds x sin^{d-2}(zeta) dzeta / Z_d.
struct CylinderQuad {
    ws: Vec<f64>,
    wz: Vec<f64>,
}

impl CylinderQuad {
    fn new(grid: &CylinderGrid, d: u32) -> Self {
        let hc = harmonic_constants(d).expect("d >= 3");
        let ws = simpson_weights(grid.n_s, grid.hs());
        let wz: Vec<f64> = simpson_weights(grid.n_zeta, grid.hz())
            .into_iter()
            .enumerate()
            .map(|(j, w)| w * grid.zeta(j).sin().powi(d as i32 - 2) / hc.z_d)
            .collect();
        Self { ws, wz }
    }

    fn integrate(&self, field: &CylinderField, f: impl Fn(f64) -> f64) -> f64 {
        let nz = field.grid.n_zeta;
        let mut acc = 0.0;
        for i in 0..field.grid.n_s {
            let mut row = 0.0;
            for j in 0..nz {
                row += self.wz[j] * f(field.values[i * nz + j]);
            }
            acc += self.ws[i] * row;
        }
        acc
    }

    /// Integral of |grad u|^2 with central differences (one-sided at the s
    /// boundary, symmetry at the poles).
    fn dirichlet_energy(&self, field: &CylinderField) -> f64 {
        let g = &field.grid;
        let (nz, ns) = (g.n_zeta, g.n_s);
        let (hs, hz) = (g.hs(), g.hz());
        let mut acc = 0.0;
        for i in 0..ns {
            let mut row = 0.0;
            for j in 0..nz {
                let u_s = if i == 0 {
                    (field.at(1, j) - field.at(0, j)) / hs
                } else if i == ns - 1 {
                    (field.at(ns - 1, j) - field.at(ns - 2, j)) / hs
                } else {
                    (field.at(i + 1, j) - field.at(i - 1, j)) / (2.0 * hs)
                };
                let u_z = if j == 0 || j == nz - 1 {
                    0.0
                } else {
                    (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * hz)
                };
                row += self.wz[j] * (u_s * u_s + u_z * u_z);
            }
            acc += self.ws[i] * row;
        }
        acc
    }
}

/// Q_mu[u] = (int |grad u|^2 + mu int u^2) / ||u||_p^2 in the cylinder measure.
pub fn q_energy(field: &CylinderField, mu: f64, p: f64, d: u32) -> Result<f64> {
    if field.max_abs() == 0.0 {
        return Err(invalid("q_energy of the zero field"));
    }
    let quad = CylinderQuad::new(&field.grid, d);
    let kin = quad.dirichlet_energy(field);
    let mass = quad.integrate(field, |u| u * u);
    let pnorm = quad.integrate(field, |u| u.abs().powf(p));
    Ok((kin + mu * mass) / pnorm.powf(2.0 / p))
}

// Banded LU with partial pivoting in LAPACK-style storage: column j of the
// matrix lives at ab[j*ldab ..], with A(i,j) at ab[kl + ku + i - j + j*ldab];
// the top kl slots per column hold pivoting fill-in.
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n], ipiv: vec![0; n] }
    }

    fn clear(&mut self) {
        self.ab.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // effective upper bandwidth after pivoting
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search in column j, rows j..=j+km.
            let base = kl + ku + j * ldab; // offset of A(j,j)
            let mut jp = 0;
            let mut pmax = self.ab[base].abs();
            for i in 1..=km {
                let v = self.ab[base + i].abs();
                if v > pmax {
                    pmax = v;
                    jp = i;
                }
            }
            self.ipiv[j] = j + jp;
            if pmax == 0.0 {
                return Err(solver(format!("banded LU: zero pivot at column {j}")));
            }
            let jend = (j + kv).min(n - 1);
            if jp != 0 {
                for col in j..=jend {
                    let a = self.idx(j, col);
                    let b = a + jp;
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[base];
            for i in 1..=km {
                self.ab[base + i] /= pivot;
            }
            for col in j + 1..=jend {
                let off = self.idx(j, col);
                let ujc = self.ab[off];
                if ujc != 0.0 {
                    for i in 1..=km {
                        self.ab[off + i] -= self.ab[base + i] * ujc;
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                b.swap(j, piv);
            }
            let km = kl.min(n - 1 - j);
            let base = kl + ku + j * ldab;
            let bj = b[j];
            if bj != 0.0 {
                for i in 1..=km {
                    b[j + i] -= self.ab[base + i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let xj = b[j] / self.ab[kl + ku + j * ldab];
            b[j] = xj;
            if xj != 0.0 {
                let itop = j.saturating_sub(kv);
                for i in itop..j {
                    b[i] -= self.ab[self.idx(i, j)] * xj;
                }
            }
        }
    }
}

/// One converged solution of the Euler-Lagrange equation at parameter mu.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub mu: f64,
    pub field: CylinderField,
    pub tau: f64,
    pub nu: f64,
    pub residual_norm: f64,
    pub symmetric: bool,
    /// Nodes clipped to zero during the iteration (diagnostic).
    pub clip_count: usize,
}

struct Discretization {
    p: f64,
    d: u32,
    grid: CylinderGrid,
    /// cot(zeta_j) at interior nodes; poles handled separately.
    cot: Vec<f64>,
}

impl Discretization {
    fn new(p: f64, d: u32, grid: CylinderGrid) -> Self {
        let cot: Vec<f64> = (0..grid.n_zeta)
            .map(|j| {
                let z = grid.zeta(j);
                if j == 0 || j == grid.n_zeta - 1 {
                    0.0
                } else {
                    z.cos() / z.sin()
                }
            })
            .collect();
        Self { p, d, grid, cot }
    }

    /// Residual F(u) = -Delta u + mu u - u_+^{p-1}; Dirichlet rows at the s
    /// boundary carry F = u.
    fn residual(&self, u: &[f64], mu: f64, out: &mut [f64]) {
        let g = &self.grid;
        let (ns, nz) = (g.n_s, g.n_zeta);
        let (hs2, hz2) = (g.hs() * g.hs(), g.hz() * g.hz());
        let hz = g.hz();
        let dm2 = self.d as f64 - 2.0;
        let dm1 = self.d as f64 - 1.0;
        for i in 0..ns {
            let row = i * nz;
            if i == 0 || i == ns - 1 {
                out[row..row + nz].copy_from_slice(&u[row..row + nz]);
                continue;
            }
            for j in 0..nz {
                let idx = row + j;
                let uc = u[idx];
                let mut lap = (u[idx - nz] - 2.0 * uc + u[idx + nz]) / hs2;
                if j == 0 {
                    lap += dm1 * 2.0 * (u[idx + 1] - uc) / hz2;
                } else if j == nz - 1 {
                    lap += dm1 * 2.0 * (u[idx - 1] - uc) / hz2;
                } else {
                    lap += (u[idx - 1] - 2.0 * uc + u[idx + 1]) / hz2
                        + dm2 * self.cot[j] * (u[idx + 1] - u[idx - 1]) / (2.0 * hz);
                }
                out[idx] = -lap + mu * uc - uc.max(0.0).powf(self.p - 1.0);
            }
        }
    }

    fn assemble_jacobian(&self, u: &[f64], mu: f64, lu: &mut BandedLu) {
        let g = &self.grid;
        let (ns, nz) = (g.n_s, g.n_zeta);
        let (hs2, hz2) = (g.hs() * g.hs(), g.hz() * g.hz());
        let hz = g.hz();
        let dm2 = self.d as f64 - 2.0;
        let dm1 = self.d as f64 - 1.0;
        let p = self.p;
        lu.clear();
        for i in 0..ns {
            for j in 0..nz {
                let idx = i * nz + j;
                if i == 0 || i == ns - 1 {
                    lu.set(idx, idx, 1.0);
                    continue;
                }
                let uc = u[idx];
                let mut diag = 2.0 / hs2 + mu - (p - 1.0) * uc.max(0.0).powf(p - 2.0);
                lu.set(idx, idx - nz, -1.0 / hs2);
                lu.set(idx, idx + nz, -1.0 / hs2);
                if j == 0 {
                    diag += dm1 * 2.0 / hz2;
                    lu.set(idx, idx + 1, -dm1 * 2.0 / hz2);
                } else if j == nz - 1 {
                    diag += dm1 * 2.0 / hz2;
                    lu.set(idx, idx - 1, -dm1 * 2.0 / hz2);
                } else {
                    diag += 2.0 / hz2;
                    lu.set(idx, idx - 1, -1.0 / hz2 + dm2 * self.cot[j] / (2.0 * hz));
                    lu.set(idx, idx + 1, -1.0 / hz2 - dm2 * self.cot[j] / (2.0 * hz));
                }
                lu.set(idx, idx, diag);
            }
        }
    }
}

const NEWTON_TOL: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 60;
const ZERO_FIELD_TOL: f64 = 1e-6;

/// Newton iteration on the discretized Euler-Lagrange residual, reusing the
/// banded factorization as long as the residual keeps contracting.
pub fn solve_el(
    mu: f64,
    p: f64,
    d: u32,
    seed: &CylinderField,
    grid: &CylinderGrid,
) -> Result<BranchPoint> {
    if mu <= 0.0 {
        return Err(invalid(format!("mu = {mu} must be positive")));
    }
    if seed.max_abs() <= 0.0 {
        return Err(invalid("seed must be positive somewhere"));
    }
    let disc = Discretization::new(p, d, *grid);
    let n = grid.len();
    let mut u = if seed.grid == *grid {
        seed.values.clone()
    } else {
        return Err(invalid("seed grid does not match solver grid"));
    };
    let mut lu = BandedLu::new(n, grid.n_zeta, grid.n_zeta);
    let mut f = vec![0.0; n];
    let mut clip_count = 0usize;
    let mut recentered = false;

    // Large-amplitude solutions (mu far above mu_FS) push the residual's
    // rounding floor above the absolute tolerance, so widen it with the
    // operator scale of the seed.
    let tol = {
        let umax = seed.max_abs();
        let scale = umax * (2.0 / (grid.hs() * grid.hs()) + 2.0 / (grid.hz() * grid.hz()) + mu)
            + umax.powf(p - 1.0);
        NEWTON_TOL.max(1e3 * f64::EPSILON * scale)
    };

    disc.residual(&u, mu, &mut f);
    let mut res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let res0 = res;
    disc.assemble_jacobian(&u, mu, &mut lu);
    lu.factor()?;
    let mut fresh_factorization = true;

    let mut iter = 0;
    while res > tol {
        if iter >= NEWTON_MAX_ITER || res > 100.0 * res0 + tol {
            return Err(solver(format!(
                "Newton failed to converge at mu = {mu}: residual {res:.3e}"
            )));
        }
        iter += 1;
        let mut step = f.clone();
        lu.solve(&mut step);
        // Damped update: halve until the residual does not blow up.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a - lambda * b).collect();
            disc.residual(&trial, mu, &mut f);
            let new_res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if new_res < res || (fresh_factorization && new_res < 2.0 * res) {
                u = trial;
                res = new_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            if fresh_factorization {
                return Err(solver(format!(
                    "Newton stalled at mu = {mu}: residual {res:.3e}"
                )));
            }
            disc.assemble_jacobian(&u, mu, &mut lu);
            lu.factor()?;
            fresh_factorization = true;
            disc.residual(&u, mu, &mut f);
            continue;
        }
        // Clip negative parts between iterations.
        let clipped = u.iter().filter(|v| **v < 0.0).count();
        if clipped > 0 {
            clip_count += clipped;
            u.iter_mut().for_each(|v| *v = v.max(0.0));
            disc.residual(&u, mu, &mut f);
            res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        // Quasi-Newton: keep the factorization while contraction is strong;
        // refresh it once the step count grows.
        if iter % 4 == 0 {
            disc.assemble_jacobian(&u, mu, &mut lu);
            lu.factor()?;
            fresh_factorization = true;
        } else {
            fresh_factorization = false;
        }

        // Centering constraint: translation invariance in s is broken by
        // keeping the field maximum at s = 0. On drift, roll the field by
        // whole cells and let the iteration re-converge.
        if res <= tol && !recentered {
            let drift = max_node_drift(grid, &u);
            if drift != 0 {
                recentered = true;
                u = roll_s(grid, &u, -drift);
                disc.residual(&u, mu, &mut f);
                res = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                disc.assemble_jacobian(&u, mu, &mut lu);
                lu.factor()?;
                fresh_factorization = true;
            }
        }
    }

    let field = CylinderField { grid: *grid, values: u };
    if field.max_abs() < ZERO_FIELD_TOL {
        return Err(solver(format!("Newton converged to the zero solution at mu = {mu}")));
    }
    finish_point(field, mu, p, d, res, clip_count)
}

/// Signed cell distance of the field's maximum from the center node s = 0.
fn max_node_drift(grid: &CylinderGrid, u: &[f64]) -> i64 {
    let nz = grid.n_zeta;
    let mut imax = 0;
    let mut vmax = f64::MIN;
    for i in 0..grid.n_s {
        for j in 0..nz {
            let v = u[i * nz + j];
            if v > vmax {
                vmax = v;
                imax = i;
            }
        }
    }
    imax as i64 - ((grid.n_s - 1) / 2) as i64
}

/// Shifts the field by `shift` cells in s, filling with zeros; the decayed
/// ends make this exact up to the decay tolerance.
fn roll_s(grid: &CylinderGrid, u: &[f64], shift: i64) -> Vec<f64> {
    let nz = grid.n_zeta;
    let mut out = vec![0.0; u.len()];
    for i in 0..grid.n_s {
        let src = i as i64 - shift;
        if src >= 0 && (src as usize) < grid.n_s {
            let (a, b) = (i * nz, src as usize * nz);
            out[a..a + nz].copy_from_slice(&u[b..b + nz]);
        }
    }
    // Dirichlet rows stay zero.
    for j in 0..nz {
        out[j] = 0.0;
        out[(grid.n_s - 1) * nz + j] = 0.0;
    }
    out
}

fn finish_point(
    field: CylinderField,
    mu: f64,
    p: f64,
    d: u32,
    residual_norm: f64,
    clip_count: usize,
) -> Result<BranchPoint> {
    let quad = CylinderQuad::new(&field.grid, d);
    let mass = quad.integrate(&field, |u| u * u);
    let pint = quad.integrate(&field, |u| u.max(0.0).powf(p));
    // For solutions, int |grad u|^2 = int u^p - mu int u^2; evaluating tau
    // through this identity keeps the full fourth-order quadrature accuracy.
    let tau = (pint - mu * mass) / mass;
    let nu = mass / pint.powf(2.0 / p);
    let symmetric = f1_amplitude(&field, d) < 1e-8;
    Ok(BranchPoint { mu, field, tau, nu, residual_norm, symmetric, clip_count })
}

/// Amplitude of the f_1 Fourier mode in zeta, relative to the L^2 norm of
/// the field (the pointwise maximum is a poor normalizer: it grows with the
/// perturbation itself since f_1 peaks at sqrt(d)).
pub fn f1_amplitude(field: &CylinderField, d: u32) -> f64 {
    let g = &field.grid;
    let quad = CylinderQuad::new(g, d);
    let mut max_coeff = 0.0_f64;
    let hc = harmonic_constants(d).expect("d >= 3");
    for i in 0..g.n_s {
        let mut c1 = 0.0;
        for j in 0..g.n_zeta {
            c1 += quad.wz[j] * field.at(i, j) * hc.f1(g.zeta(j));
        }
        max_coeff = max_coeff.max(c1.abs());
    }
    let l2 = quad.integrate(field, |u| u * u).sqrt();
    max_coeff / l2
}

/// Estimates the bifurcation amplitude by projecting the f_1 Fourier
/// coefficient onto the normalized mode phi_1 = u_{mu,*}^{p/2}; near mu_FS
/// the square of the estimate grows like c_{p,d} (mu - mu_FS).
pub fn eps_estimate(field: &CylinderField, mu: f64, p: f64, d: u32) -> Result<f64> {
    let g = &field.grid;
    let quad = CylinderQuad::new(g, d);
    let hc = harmonic_constants(d)?;
    let sym = symmetric_extremal(mu, p)?;
    let ws = simpson_weights(g.n_s, g.hs());
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.n_s {
        let mut c1 = 0.0;
        for j in 0..g.n_zeta {
            c1 += quad.wz[j] * field.at(i, j) * hc.f1(g.zeta(j));
        }
        let phi1 = sym.eval(g.s(i)).powf(0.5 * p);
        num += ws[i] * c1 * phi1;
        den += ws[i] * phi1 * phi1;
    }
    Ok(num / den)
}

/// Step policy for the continuation in mu: the step starts at `initial`,
/// is multiplied by `growth` after each success (capped at `max`) and halved
/// on Newton failure.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    pub initial: f64,
    pub growth: f64,
    pub max: f64,
}

impl StepPolicy {
    pub fn uniform(step: f64) -> Self {
        Self { initial: step, growth: 1.0, max: step }
    }
}

/// Continuation branch: ordered points plus the bifurcation estimate obtained
/// by extrapolating the squared f_1 amplitude to zero.
#[derive(Debug)]
pub struct Branch {
    pub p: f64,
    pub d: u32,
    pub points: Vec<BranchPoint>,
    pub mu_bifurcation_estimate: f64,
}

/// Continues the non-symmetric branch from mu_start to mu_end. Near mu_FS the
/// seed is the expansion ansatz; afterwards each solution (amplitude-rescaled)
/// seeds the next point.
pub fn continue_branch(
    mu_start: f64,
    mu_end: f64,
    policy: StepPolicy,
    p: f64,
    d: u32,
    grid: &CylinderGrid,
) -> Result<Branch> {
    let mfs = mu_fs(p, d);
    if mu_start < mfs - 1e-9 {
        return Err(invalid(format!(
            "mu_start = {mu_start} below mu_FS = {mfs}; the branch exists for mu > mu_FS"
        )));
    }
    if mu_end <= mu_start {
        return Err(invalid("mu_end must exceed mu_start"));
    }
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut mu = mu_start;
    let mut step = policy.initial;
    let mut failures_in_a_row = 0usize;
    loop {
        let seed = match points.len() {
            0 => {
                let a = build_ansatz(mu, p, d)?;
                CylinderField::from_fn(*grid, |s, z| a.eval(s, z).max(0.0))
            }
            1 => {
                // Amplitude rescaling mirrors the mu^{1/(p-2)} growth of the
                // extremal's height.
                let prev = &points[0];
                let scale = (mu / prev.mu).powf(1.0 / (p - 2.0));
                CylinderField {
                    grid: *grid,
                    values: prev.field.values.iter().map(|v| v * scale).collect(),
                }
            }
            n => {
                // Secant extrapolation through the last two solutions tracks
                // shape changes (localization) that pure rescaling misses.
                let (a, b) = (&points[n - 2], &points[n - 1]);
                let t = (mu - b.mu) / (b.mu - a.mu);
                CylinderField {
                    grid: *grid,
                    values: a
                        .field
                        .values
                        .iter()
                        .zip(b.field.values.iter())
                        .map(|(va, vb)| (vb + t * (vb - va)).max(0.0))
                        .collect(),
                }
            }
        };
        match solve_el(mu, p, d, &seed, grid) {
            Ok(pt) if !pt.symmetric || points.is_empty() => {
                failures_in_a_row = 0;
                points.push(pt);
                if mu >= mu_end - 1e-12 {
                    break;
                }
                step = (step * policy.growth).min(policy.max);
                mu = (mu + step).min(mu_end);
            }
            Ok(_) | Err(_) => {
                // Newton failure or fall-back onto the symmetric branch:
                // halve the step and retry from the last success.
                failures_in_a_row += 1;
                if failures_in_a_row > 12 {
                    break; // truncated branch, diagnosed below
                }
                step *= 0.5;
                mu = match points.last() {
                    Some(prev) => prev.mu + step,
                    None => mfs + 0.5 * (mu - mfs),
                };
            }
        }
    }
    if points.is_empty() {
        return Err(solver("branch lost: no continuation point converged"));
    }
    // Extrapolate eps^2 ~ c (mu - mu_bif) from the first points.
    let mu_bifurcation_estimate = if points.len() >= 2 {
        let a0 = eps_estimate(&points[0].field, points[0].mu, p, d)?.powi(2);
        let a1 = eps_estimate(&points[1].field, points[1].mu, p, d)?.powi(2);
        let (m0, m1) = (points[0].mu, points[1].mu);
        if (a1 - a0).abs() > 1e-300 {
            m0 - a0 * (m1 - m0) / (a1 - a0)
        } else {
            m0
        }
    } else {
        points[0].mu
    };
    Ok(Branch { p, d, points, mu_bifurcation_estimate })
}

/// Reparametrized curve point (Lambda^theta, J^theta) built from solver tau
/// and nu.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub mu: f64,
    pub lambda: f64,
    pub j: f64,
    pub tau: f64,
    pub nu: f64,
    pub symmetric: bool,
}

/// Maps a branch through Lambda^theta(mu) = theta mu - (1-theta) tau(mu) and
/// J^theta(mu) = nu(mu) theta^theta (mu + tau(mu))^theta.
pub fn reparametrize(branch: &Branch, theta: f64) -> Result<Vec<CurvePoint>> {
    let vt = crate::analytic::vartheta(branch.p, branch.d);
    if !(theta >= vt - 1e-12 && theta <= 1.0) {
        return Err(invalid(format!("theta = {theta} outside [{vt}, 1]")));
    }
    Ok(branch
        .points
        .iter()
        .map(|pt| curve_point(pt, theta))
        .collect())
}

pub fn curve_point(pt: &BranchPoint, theta: f64) -> CurvePoint {
    CurvePoint {
        mu: pt.mu,
        lambda: theta * pt.mu - (1.0 - theta) * pt.tau,
        j: pt.nu * theta.powf(theta) * (pt.mu + pt.tau).powf(theta),
        tau: pt.tau,
        nu: pt.nu,
        symmetric: pt.symmetric,
    }
}

/// Numerical estimate of delta^theta = (J^theta)'/(Lambda^theta)'
/// - (J_*^theta)'/(Lambda_*^theta)' extrapolated to mu_FS from the first
/// branch points; Lemma Claim1 predicts zero (tangency).
pub fn tangency_check(branch: &Branch, theta: f64) -> Result<f64> {
    if branch.points.len() < 3 {
        return Err(invalid("tangency check needs at least three branch points"));
    }
    let curve = reparametrize(branch, theta)?;
    let (p, d) = (branch.p, branch.d);
    let mfs = mu_fs(p, d);
    let slope_sym = |mu: f64| -> f64 {
        // (J_*^theta)'/(Lambda_*^theta)' in closed form.
        let js = crate::analytic::j_star_theta(mu, p, theta).expect("valid p");
        let djs = js * (2.0 * p * theta - (p - 2.0)) / (2.0 * p * mu);
        let dls = (2.0 * p * theta - (p - 2.0)) / (p + 2.0);
        djs / dls
    };
    // Branch slope by secants between consecutive points, then linear
    // extrapolation of delta to mu = mu_FS.
    let mut deltas: Vec<(f64, f64)> = Vec::new();
    for w in curve.windows(2).take(3) {
        let dmu = 0.5 * (w[0].mu + w[1].mu);
        let slope = (w[1].j - w[0].j) / (w[1].lambda - w[0].lambda);
        deltas.push((dmu, slope - slope_sym(dmu)));
    }
    let (x0, y0) = deltas[0];
    let (x1, y1) = deltas[1];
    Ok(y0 + (mfs - x0) * (y1 - y0) / (x1 - x0))
}

/// Raw-field dump: one line of JSON metadata, then the values as
/// little-endian 64-bit floats, row-major in (s, zeta).
pub fn dump_field(field: &CylinderField, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let g = &field.grid;
    let header = serde_json::json!({
        "s_half": g.s_half,
        "n_s": g.n_s,
        "n_zeta": g.n_zeta,
        "dtype": "f64",
        "endianness": "little",
        "order": "row-major (s, zeta)",
    });
    let open = |e| crate::error::io_at(path.display(), e);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(open)?);
    writeln!(file, "{header}").map_err(open)?;
    for v in &field.values {
        file.write_all(&v.to_le_bytes()).map_err(open)?;
    }
    file.flush().map_err(open)
}

/// Reads a dump produced by [`dump_field`].
pub fn load_field(path: &std::path::Path) -> Result<CylinderField> {
    use std::io::Read;
    let open = |e| crate::error::io_at(path.display(), e);
    let mut bytes = Vec::new();
    std::fs::File::open(path).map_err(open)?.read_to_end(&mut bytes).map_err(open)?;
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| invalid(format!("{}: missing dump header", path.display())))?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| invalid(format!("{}: bad dump header: {e}", path.display())))?;
    let grid = CylinderGrid::new(
        header["s_half"].as_f64().unwrap_or(-1.0),
        header["n_s"].as_u64().unwrap_or(0) as usize,
        header["n_zeta"].as_u64().unwrap_or(0) as usize,
    )?;
    let body = &bytes[nl + 1..];
    if body.len() != 8 * grid.len() {
        return Err(invalid(format!(
            "{}: dump holds {} bytes, grid needs {}",
            path.display(),
            body.len(),
            8 * grid.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(CylinderField { grid, values })
}

/// Samples the explicit symmetric extremal on a cylinder grid.
pub fn symmetric_field(mu: f64, p: f64, grid: &CylinderGrid) -> Result<CylinderField> {
    let u = symmetric_extremal(mu, p)?;
    Ok(CylinderField::from_fn(*grid, |s, _| u.eval(s)))
}

/// Symmetric branch point with solver-convention fields (tau and nu from the
/// closed forms), for mixed tables.
pub fn symmetric_branch_point(mu: f64, p: f64, d: u32, grid: &CylinderGrid) -> Result<BranchPoint> {
    let field = symmetric_field(mu, p, grid)?;
    let quad = CylinderQuad::new(grid, d);
    let mass = quad.integrate(&field, |u| u * u);
    let pint = quad.integrate(&field, |u| u.powf(p));
    Ok(BranchPoint {
        mu,
        field,
        tau: tau_star(mu, p),
        nu: mass / pint.powf(2.0 / p),
        residual_norm: 0.0,
        symmetric: true,
        clip_count: 0,
    })
}
