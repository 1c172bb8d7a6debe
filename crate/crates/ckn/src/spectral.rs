//! One-dimensional numerical kernels: composite quadrature on truncated lines,
//! Numerov boundary-value solves for the Poschl-Teller equations of the chi
//! system, and radial shooting for the Gagliardo-Nirenberg ground state.

use crate::analytic::{mu_fs, two_star, vartheta};
use crate::error::{invalid, solver, Result};
use serde::Serialize;

/// Uniform symmetric grid on [-S, S] with an odd number of nodes, so that
/// s = 0 is a node and composite Simpson applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub half_width: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if half_width <= 0.0 {
            return Err(invalid(format!("grid half-width {half_width} must be positive")));
        }
        if n < 3 || n % 2 == 0 {
            return Err(invalid(format!("grid size {n} must be odd and >= 3")));
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Default grid for the chi solves, stated in the rescaled variable of the
    /// system (unit-rate sech potential): the potential terms decay below
    /// 1e-12 well inside |s| = 30.
    pub fn default_chi() -> Self {
        Self { half_width: 30.0, n: 4001 }
    }
}

/// Composite Simpson rule; O(h^4) for smooth integrands decaying at the ends.
pub fn quadrature(samples: &[f64], grid: &LineGrid) -> Result<f64> {
    if samples.len() != grid.n {
        return Err(invalid(format!(
            "sample length {} does not match grid size {}",
            samples.len(),
            grid.n
        )));
    }
    let mut acc = samples[0] + samples[grid.n - 1];
    for (i, v) in samples.iter().enumerate().take(grid.n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * grid.spacing() / 3.0)
}

/// Solves the tridiagonal system with the Thomas algorithm. Diagonals are
/// (lower, main, upper); lower[0] and upper[n-1] are ignored.
pub(crate) fn thomas(lower: &[f64], main: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = main.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if main[0] == 0.0 {
        return Err(solver("singular tridiagonal system"));
    }
    c[0] = upper[0] / main[0];
    d[0] = rhs[0] / main[0];
    for i in 1..n {
        let m = main[i] - lower[i] * c[i - 1];
        if m == 0.0 {
            return Err(solver("singular tridiagonal system"));
        }
        if i < n - 1 {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

/// Which equation of the chi system is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChiKind {
    Chi0Pm1,
    Chi02pm3,
    Chi22pm3,
}

/// Sampled solution of one equation of the chi system, in the rescaled
/// variable (so that the potential is -2p(p-1)/((p-2)^2 cosh^2 s)).
#[derive(Debug, Clone)]
pub struct ChiProfile {
    pub kind: ChiKind,
    pub grid: LineGrid,
    pub values: Vec<f64>,
}

impl ChiProfile {
    /// Four-point Lagrange interpolation, matching the solver's fourth-order
    /// accuracy; zero outside the grid (profiles decay).
    pub fn eval(&self, s: f64) -> f64 {
        let h = self.grid.spacing();
        let x = (s + self.grid.half_width) / h;
        if x <= 0.0 || x >= (self.grid.n - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).clamp(1, self.grid.n - 3);
        let t = x - i as f64;
        let (ym, y0, y1, y2) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        -t * (t - 1.0) * (t - 2.0) / 6.0 * ym
            + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * y0
            - (t + 1.0) * t * (t - 2.0) / 2.0 * y1
            + (t + 1.0) * t * (t - 1.0) / 6.0 * y2
    }
}

/// w(s) = cosh(s)^{-2/(p-2)} in the rescaled variable.
pub fn w_profile(p: f64, s: f64) -> f64 {
    s.cosh().powf(-2.0 / (p - 2.0))
}

/// Solves one equation of the chi system with decay (Dirichlet) boundary
/// conditions using the fourth-order Numerov scheme. The equations have the
/// form chi'' = Q(s) chi + g(s) with
///   Q(s) = q0 - 2p(p-1)/((p-2)^2 cosh^2 s),
/// where q0 = 4/(p-2)^2 for the zero modes and q0 = 4 mu_2/(mu (p-2)^2) with
/// mu_2 = mu + 2d, mu = mu_FS, for the f_2 mode; and
///   g = w^{p-1} (chi_{0,p-1}), g = -w^{2p-3} (both 2p-3 equations).
pub fn solve_chi(kind: ChiKind, p: f64, d: u32, grid: &LineGrid) -> Result<ChiProfile> {
    if !(p > 2.0 && p < two_star(d)) {
        return Err(invalid(format!("p = {p} outside (2, 2*) for d = {d}")));
    }
    let pm2 = p - 2.0;
    let q0 = match kind {
        ChiKind::Chi0Pm1 | ChiKind::Chi02pm3 => 4.0 / (pm2 * pm2),
        ChiKind::Chi22pm3 => {
            let mu = mu_fs(p, d);
            let mu2 = mu + 2.0 * d as f64;
            4.0 * mu2 / (mu * pm2 * pm2)
        }
    };
    let n = grid.n;
    let h = grid.spacing();
    let qs: Vec<f64> = grid
        .points()
        .map(|s| {
            let c = s.cosh();
            q0 - 2.0 * p * (p - 1.0) / (pm2 * pm2 * c * c)
        })
        .collect();
    let gs: Vec<f64> = grid
        .points()
        .map(|s| match kind {
            ChiKind::Chi0Pm1 => w_profile(p, s).powf(p - 1.0),
            ChiKind::Chi02pm3 | ChiKind::Chi22pm3 => -w_profile(p, s).powf(2.0 * p - 3.0),
        })
        .collect();

    // Numerov discretization of chi'' = Q chi + g on the interior nodes.
    let m = n - 2;
    let h2 = h * h;
    let mut lower = vec![0.0; m];
    let mut main = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 0..m {
        let i = j + 1;
        main[j] = -(2.0 + 10.0 * h2 * qs[i] / 12.0);
        if j > 0 {
            lower[j] = 1.0 - h2 * qs[i - 1] / 12.0;
        }
        if j < m - 1 {
            upper[j] = 1.0 - h2 * qs[i + 1] / 12.0;
        }
        rhs[j] = h2 / 12.0 * (gs[i + 1] + 10.0 * gs[i] + gs[i - 1]);
    }
    let interior = thomas(&lower, &main, &upper, &rhs)?;

    let mut values = vec![0.0; n];
    values[1..n - 1].copy_from_slice(&interior);

    // The solutions are even; the directional elimination excites the odd
    // near-null translation mode at roundoff scale, so project it out.
    for i in 0..n / 2 {
        let avg = 0.5 * (values[i] + values[n - 1 - i]);
        values[i] = avg;
        values[n - 1 - i] = avg;
    }

    // Verify the linear system is actually solved (catches near-singular cases
    // on grids that are too coarse or too narrow).
    let mut resid: f64 = 0.0;
    for j in 0..m {
        let i = j + 1;
        let a = (1.0 - h2 * qs[i - 1] / 12.0) * values[i - 1];
        let b = -(2.0 + 10.0 * h2 * qs[i] / 12.0) * values[i];
        let c = (1.0 - h2 * qs[i + 1] / 12.0) * values[i + 1];
        resid = resid.max((a + b + c - rhs[j]).abs());
    }
    if resid > 1e-8 {
        return Err(solver(format!(
            "chi linear solve residual {resid:.2e}; grid too coarse or half-width too small"
        )));
    }
    Ok(ChiProfile { kind, grid: *grid, values })
}

/// Closed form chi_{0,p-1}(s) = (p-2)/(2p) w(s).
pub fn chi_0_pm1_closed(p: f64, s: f64) -> f64 {
    (p - 2.0) / (2.0 * p) * w_profile(p, s)
}

/// Closed form chi_{0,2p-3}(s) = -(p-2)/(4(p-1)) (2 w - w^{p-1}).
pub fn chi_0_2pm3_closed(p: f64, s: f64) -> f64 {
    let w = w_profile(p, s);
    -(p - 2.0) / (4.0 * (p - 1.0)) * (2.0 * w - w.powf(p - 1.0))
}

/// Ground-state energy of the Poschl-Teller operator -d^2/ds^2 - U0 sech^2(s):
/// lambda_0 = (1/2) sqrt(1 + 4 U0) - 1/2 - U0.
pub fn pt_ground_energy(u0: f64) -> Result<f64> {
    if u0 <= 0.0 {
        return Err(invalid(format!("Poschl-Teller depth U0 = {u0} must be positive")));
    }
    Ok(0.5 * (1.0 + 4.0 * u0).sqrt() - 0.5 - u0)
}

/// sigma(p,d) = lambda_0(U0(p)) + 4 mu_2 / (mu_FS (p-2)^2) with
/// U0(p) = 2p(p-1)/(p-2)^2 and mu_2 = mu_FS + 2d. Simplifies to the rational
/// value (p+2)(d+1)/((p-2)(d-1)); always larger than 1.
pub fn sigma(p: f64, d: u32) -> Result<f64> {
    if p <= 2.0 || d < 2 {
        return Err(invalid(format!("sigma requires p > 2 and d >= 2, got p = {p}, d = {d}")));
    }
    let pm2 = p - 2.0;
    let lam0 = pt_ground_energy(2.0 * p * (p - 1.0) / (pm2 * pm2))?;
    let mu = mu_fs(p, d);
    let mu2 = mu + 2.0 * d as f64;
    Ok(lam0 + 4.0 * mu2 / (mu * pm2 * pm2))
}

/// Radial ground state of -u'' - (d-1)/r u' + u = u^{p-1} on (0, infinity)
/// with u'(0) = 0, u > 0 decreasing, and the constants built from it.
#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    pub p: f64,
    pub d: u32,
    /// Center value u(0) found by bisection.
    pub u0: f64,
    /// Radial samples (r_i, u(r_i)) up to the truncation radius.
    pub r: Vec<f64>,
    pub profile: Vec<f64>,
    /// S_p = (int_0^infty u^p r^{d-1} dr)^{(p-2)/p}; the sphere area cancels
    /// against the probability-measure convention on the cylinder.
    pub s_p: f64,
    /// K_GN^{-1} = vartheta^vartheta (1-vartheta)^{1-vartheta} S_p.
    pub k_gn: f64,
}

#[derive(Clone, Copy)]
enum ShotOutcome {
    Crossed(usize),
    TurnedUp(usize),
    Decayed,
}

fn shoot_once(p: f64, d: u32, u0: f64, h: f64, nmax: usize, u: &mut Vec<f64>) -> ShotOutcome {
    u.clear();
    u.push(u0);
    let df = d as f64;
    let f = |r: f64, uu: f64, vv: f64| -> (f64, f64) {
        let nl = uu - uu.abs().powf(p - 2.0) * uu;
        if r == 0.0 {
            (vv, nl / df)
        } else {
            (vv, nl - (df - 1.0) / r * vv)
        }
    };
    let mut uu = u0;
    let mut vv = 0.0;
    for i in 0..nmax {
        let r = i as f64 * h;
        let k1 = f(r, uu, vv);
        let k2 = f(r + 0.5 * h, uu + 0.5 * h * k1.0, vv + 0.5 * h * k1.1);
        let k3 = f(r + 0.5 * h, uu + 0.5 * h * k2.0, vv + 0.5 * h * k2.1);
        let k4 = f(r + h, uu + h * k3.0, vv + h * k3.1);
        let un = uu + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let vn = vv + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        u.push(un);
        if un < 0.0 {
            return ShotOutcome::Crossed(i + 1);
        }
        if un > uu && un < 1.0 {
            return ShotOutcome::TurnedUp(i + 1);
        }
        uu = un;
        vv = vn;
    }
    ShotOutcome::Decayed
}

/// Shooting-bisection for the ground state. Overshooting u(0) makes the
/// profile cross zero; undershooting makes it turn back up below u = 1.
/// These two behaviors bracket the ground state.
pub fn ground_state_shoot(p: f64, d: u32) -> Result<GroundState> {
    ground_state_shoot_with(p, d, 2.5e-4)
}

/// Same as [`ground_state_shoot`] with an explicit radial step.
pub fn ground_state_shoot_with(p: f64, d: u32, h: f64) -> Result<GroundState> {
    if d < 3 {
        return Err(invalid("ground state requires d >= 3"));
    }
    if !(p > 2.0 && p < two_star(d)) {
        return Err(invalid(format!(
            "ground state requires p strictly inside (2, 2*), got p = {p}, d = {d}"
        )));
    }
    if !(h > 0.0 && h < 0.05) {
        return Err(invalid(format!("radial step h = {h} outside (0, 0.05)")));
    }
    let rmax = 30.0;
    let nmax = (rmax / h) as usize;
    let mut work: Vec<f64> = Vec::with_capacity(nmax + 1);

    let mut lo = 1.0 + 1e-9;
    let mut hi = 1.5;
    // Grow hi until it overshoots.
    loop {
        match shoot_once(p, d, hi, h, nmax, &mut work) {
            ShotOutcome::Crossed(_) => break,
            _ => {
                hi *= 2.0;
                if hi > 1e8 {
                    return Err(solver("shooting bracket failure: no overshoot found"));
                }
            }
        }
    }
    while matches!(shoot_once(p, d, lo, h, nmax, &mut work), ShotOutcome::Crossed(_)) {
        lo = 1.0 + 0.5 * (lo - 1.0);
        if lo - 1.0 < 1e-13 {
            return Err(solver("shooting bracket failure: no undershoot found"));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match shoot_once(p, d, mid, h, nmax, &mut work) {
            ShotOutcome::Crossed(_) => hi = mid,
            _ => lo = mid,
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let u0 = 0.5 * (lo + hi);
    let end = match shoot_once(p, d, u0, h, nmax, &mut work) {
        ShotOutcome::Crossed(i) | ShotOutcome::TurnedUp(i) => i,
        ShotOutcome::Decayed => work.len() - 1,
    };

    // Truncate where |u| is smallest, then attach the analytic far-field tail
    // u ~ C r^{-(d-1)/2} e^{-r}.
    let mut jmin = 1;
    for j in 1..=end {
        if work[j].abs() < work[jmin].abs() {
            jmin = j;
        }
    }
    if jmin % 2 == 1 {
        jmin -= 1; // even interval count for Simpson
    }
    if jmin < 8 {
        return Err(solver("ground state profile truncated too early"));
    }
    let r: Vec<f64> = (0..=jmin).map(|i| i as f64 * h).collect();
    let profile: Vec<f64> = work[..=jmin].to_vec();
    let rt = r[jmin];
    let df = d as f64;
    // The truncation point may land one step past a sign change, so match
    // the tail amplitude to |u| there.
    let c_tail = profile[jmin].abs() / (rt.powf(-(df - 1.0) / 2.0) * (-rt).exp());

    // int_0^rt u^p r^{d-1} dr by Simpson.
    let mut integral = 0.0;
    for j in 0..=jmin {
        let wgt = if j == 0 || j == jmin {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral += wgt * profile[j].abs().powf(p) * r[j].powf(df - 1.0);
    }
    integral *= h / 3.0;

    // Tail contribution int_rt^infty (C r^{-(d-1)/2} e^{-r})^p r^{d-1} dr,
    // integrated numerically over a window that exhausts e^{-p r}.
    let tail_n = 2000;
    let tail_h = 40.0 / tail_n as f64;
    let mut tail = 0.0;
    for j in 0..=tail_n {
        let rr = rt + j as f64 * tail_h;
        let wgt = if j == 0 || j == tail_n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        tail += wgt * (c_tail * rr.powf(-(df - 1.0) / 2.0) * (-rr).exp()).powf(p) * rr.powf(df - 1.0);
    }
    tail *= tail_h / 3.0;
    integral += tail;

    let s_p = integral.powf((p - 2.0) / p);
    let vt = vartheta(p, d);
    let k_gn = 1.0 / (vt.powf(vt) * (1.0 - vt).powf(1.0 - vt) * s_p);
    if !k_gn.is_finite() || k_gn <= 0.0 {
        return Err(solver(format!("ground state shoot produced K_GN = {k_gn}")));
    }
    Ok(GroundState { p, d, u0, r, profile, s_p, k_gn })
}
