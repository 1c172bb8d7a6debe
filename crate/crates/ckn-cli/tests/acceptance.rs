//! Acceptance gate: one test per criterion, one pass/fail line each.
//! Run with `cargo test --test acceptance -- --nocapture` to see every line.

use once_cell::sync::Lazy;
use std::path::Path;
use std::time::{Duration, Instant};

use ckn::analytic::{
    gamma_f, gamma_integrals, harmonic_constants, j_star_theta, lambda_fs, mu_fs, mu_of_lambda,
    two_star, vartheta,
};
use ckn::classify;
use ckn::continuation::{
    continue_branch, curve_point, q_energy, solve_el, symmetric_field, Branch, CylinderField,
    CylinderGrid, StepPolicy,
};
use ckn::expansion;
use ckn::spectral::{self, quadrature, ChiKind, LineGrid};

fn report(num: u32, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("criterion {num:2} [{name}]: {status}; {detail}");
    assert!(ok, "criterion {num} [{name}] failed: {detail}");
}

/// Deterministic uniform samples in (0, 1) without pulling in an RNG crate.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

/// theta = 1 solver branch at (2.8, 5) on the default grid, mu_FS + 0.05 .. 0.45,
/// uniform step 0.05; shared by criteria 8 and 11.
static BRANCH: Lazy<(Branch, Duration)> = Lazy::new(|| {
    let (p, d) = (2.8, 5);
    let mfs = mu_fs(p, d);
    let grid = CylinderGrid::default_for(p, d).unwrap();
    let start = Instant::now();
    let branch = continue_branch(mfs + 0.05, mfs + 0.451, StepPolicy::uniform(0.05), p, d, &grid)
        .expect("branch fixture");
    (branch, start.elapsed())
});

/// Non-symmetric point at mu_FS + 0.05 plus three neighboring symmetric
/// points, solved on two grids with step ratio 3:2. Near the bifurcation the
/// branch-vs-symmetric separation is tangentially small and the O(h^2)
/// quadrature bias of a single grid swamps it; criterion 11 Richardson-
/// extrapolates the separation from the pair.
struct SepGrid {
    branch_pt: ckn::continuation::BranchPoint,
    sym: Vec<ckn::continuation::BranchPoint>,
}

static SEPARATION: Lazy<[SepGrid; 2]> = Lazy::new(|| {
    let (p, d) = (2.8, 5);
    let mfs = mu_fs(p, d);
    let base = CylinderGrid::default_for(p, d).unwrap();
    [(801, 129), (1201, 193)].map(|(ns, nz)| {
        let grid = CylinderGrid::new(base.s_half, ns, nz).unwrap();
        let mu = mfs + 0.05;
        let ansatz = expansion::build_ansatz(mu, p, d).unwrap();
        let seed = CylinderField::from_fn(grid, |s, z| ansatz.eval(s, z).max(0.0));
        let branch_pt = solve_el(mu, p, d, &seed, &grid).unwrap();
        assert!(!branch_pt.symmetric);
        let sym = [-1.0, 0.0, 1.0]
            .iter()
            .map(|k| {
                ckn::continuation::symmetric_branch_point(mfs + 0.05 * k, p, d, &grid).unwrap()
            })
            .collect();
        SepGrid { branch_pt, sym }
    })
});

/// J_branch - J_symmetric at equal Lambda, extrapolated to h -> 0 from the
/// two fixture grids (bias is O(h^2); the step ratio is 3:2).
fn separation_at(theta: f64) -> f64 {
    let sep = |g: &SepGrid| -> f64 {
        let b = curve_point(&g.branch_pt, theta);
        let sym: Vec<(f64, f64)> = g
            .sym
            .iter()
            .map(|pt| {
                let c = curve_point(pt, theta);
                (c.lambda, c.j)
            })
            .collect();
        let w = sym
            .windows(2)
            .find(|w| w[0].0 <= b.lambda && b.lambda <= w[1].0)
            .unwrap_or_else(|| panic!("Lambda = {} outside the symmetric bracket", b.lambda));
        let t = (b.lambda - w[0].0) / (w[1].0 - w[0].0);
        b.j - (w[0].1 * (1.0 - t) + w[1].1 * t)
    };
    let coarse = sep(&SEPARATION[0]);
    let fine = sep(&SEPARATION[1]);
    (2.25 * fine - coarse) / 1.25
}

fn branch_point_near(branch: &Branch, mu: f64) -> &ckn::continuation::BranchPoint {
    branch
        .points
        .iter()
        .min_by(|a, b| (a.mu - mu).abs().partial_cmp(&(b.mu - mu).abs()).unwrap())
        .expect("non-empty branch")
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_closed_form_suite() {
    let start = Instant::now();
    let mut failures = Vec::new();

    if rel_err(gamma_f(1.0).unwrap(), std::f64::consts::PI) > 1e-12 {
        failures.push(format!("f(1) = {} != pi", gamma_f(1.0).unwrap()));
    }
    if rel_err(gamma_f(2.0).unwrap(), 2.0) > 1e-12 {
        failures.push(format!("f(2) = {} != 2", gamma_f(2.0).unwrap()));
    }

    let mut rng = Lcg(0x1234_5678);
    for _ in 0..50 {
        let p = 2.05 + 1.25 * rng.next();
        let gi = gamma_integrals(p).unwrap();
        // I_p agrees with the direct sech-power integral f(2p/(p-2)).
        let direct = gamma_f(2.0 * p / (p - 2.0)).unwrap();
        if rel_err(gi.ip, direct) > 1e-10 {
            failures.push(format!("I_p mismatch at p = {p}: {} vs {direct}", gi.ip));
        }
        if rel_err(gi.ip / gi.i2, 4.0 / (p + 2.0)) > 1e-10 {
            failures.push(format!("I_p/I_2 != 4/(p+2) at p = {p}"));
        }
        if rel_err(gi.j2 * (p - 2.0), gi.ip) > 1e-10 {
            failures.push(format!("J_2 (p-2) != I_p at p = {p}"));
        }
    }

    for d in 3..=12u32 {
        let hc = harmonic_constants(d).unwrap();
        // Pointwise f_1^2 = f_0 + kappa_(d) f_2.
        for k in 0..=200 {
            let z = std::f64::consts::PI * k as f64 / 200.0;
            let lhs = hc.f1(z) * hc.f1(z);
            let rhs = hc.f0(z) + hc.kappa_d * hc.f2(z);
            if (lhs - rhs).abs() > 1e-10 {
                failures.push(format!("f_1^2 identity off by {} at d = {d}", lhs - rhs));
                break;
            }
        }
        // Fourth moment against direct quadrature of sin^{d-2} dzeta / Z_d.
        let n = 20001;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let mut fourth = 0.0;
        for i in 0..n {
            let z = i as f64 * h;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            fourth += w * hc.f1(z).powi(4) * z.sin().powi(d as i32 - 2);
        }
        fourth *= h / 3.0 / hc.z_d;
        let expected = 3.0 * d as f64 / (d as f64 + 2.0);
        if (fourth - expected).abs() > 1e-10 {
            failures.push(format!(
                "int f_1^4 = {fourth} vs {expected} at d = {d} (err {:.2e})",
                fourth - expected
            ));
        }
        if rel_err(hc.f1_fourth_moment, expected) > 1e-14 {
            failures.push(format!("stored fourth moment wrong at d = {d}"));
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        failures.push(format!("runtime {elapsed:?} exceeds 1 s"));
    }
    report(
        1,
        "closed-form suite",
        failures.is_empty(),
        &if failures.is_empty() {
            format!("50 gamma triples, d = 3..12 harmonics, {elapsed:?}")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_02_vartheta_reference_values() {
    let v1 = vartheta(2.8, 5);
    let v2 = vartheta(3.15, 5);
    let ok = (v1 - 0.7143).abs() <= 1e-4 && (v2 - 0.9127).abs() <= 1e-4;
    report(
        2,
        "vartheta values",
        ok,
        &format!("vartheta(2.8,5) = {v1:.6} (want 0.7143), vartheta(3.15,5) = {v2:.6} (want 0.9127)"),
    );
}

#[test]
fn criterion_03_chi_oracle() {
    let grid = LineGrid::default_chi();
    let mut worst = 0.0_f64;
    for &p in &[2.5, 2.8, 3.2] {
        let chi0 = spectral::solve_chi(ChiKind::Chi0Pm1, p, 5, &grid).unwrap();
        let chi1 = spectral::solve_chi(ChiKind::Chi02pm3, p, 5, &grid).unwrap();
        for ((s, v0), v1) in grid.points().zip(chi0.values.iter()).zip(chi1.values.iter()) {
            worst = worst.max((v0 - spectral::chi_0_pm1_closed(p, s)).abs());
            worst = worst.max((v1 - spectral::chi_0_2pm3_closed(p, s)).abs());
        }
    }
    report(
        3,
        "chi BVP vs closed forms",
        worst < 1e-6,
        &format!("sup error {worst:.3e} over p in {{2.5, 2.8, 3.2}} (tol 1e-6)"),
    );
}

#[test]
fn criterion_04_b_coefficients() {
    let mut failures = Vec::new();
    let grid = LineGrid::default_chi();
    for &p in &[2.5, 2.8, 3.2] {
        let f: Vec<f64> = grid
            .points()
            .map(|s| spectral::chi_0_2pm3_closed(p, s) * spectral::w_profile(p, s))
            .collect();
        let q = quadrature(&f, &grid).unwrap();
        let closed = expansion::b01(p).unwrap();
        if rel_err(q, closed) > 1e-7 {
            failures.push(format!("b01 at p = {p}: rel err {:.2e}", rel_err(q, closed)));
        }

        let chi = spectral::solve_chi(ChiKind::Chi02pm3, p, 5, &grid).unwrap();
        let f: Vec<f64> = grid
            .points()
            .zip(chi.values.iter())
            .map(|(s, v)| v * spectral::w_profile(p, s).powf(p - 1.0))
            .collect();
        let q = quadrature(&f, &grid).unwrap();
        let closed = expansion::b0pm1(p).unwrap();
        if rel_err(q, closed) > 1e-7 {
            failures.push(format!("b0pm1 at p = {p}: rel err {:.2e}", rel_err(q, closed)));
        }

        let f: Vec<f64> = grid
            .points()
            .zip(chi.values.iter())
            .map(|(s, v)| v * spectral::w_profile(p, s).powf(2.0 * p - 3.0))
            .collect();
        let q = quadrature(&f, &grid).unwrap();
        let closed = expansion::b02pm3(p).unwrap();
        if rel_err(q, closed) > 1e-7 {
            failures.push(format!("b02pm3 at p = {p}: rel err {:.2e}", rel_err(q, closed)));
        }
    }

    // b_{2,2p-3} positive and within the sigma bound on 20 (p, d) samples.
    let mut rng = Lcg(0x9e37_79b9);
    for k in 0..20u32 {
        let d = 3 + (k % 8);
        let hi = (two_star(d) - 0.15).min(3.6);
        let p = 2.1 + (hi - 2.1) * rng.next();
        let b22 = expansion::b22pm3(p, d).unwrap();
        let bound = gamma_integrals(p).unwrap().ip * expansion::y_approx(p, d).unwrap();
        if !(b22 > 0.0) {
            failures.push(format!("b22pm3 <= 0 at ({p:.4}, {d})"));
        }
        if b22 > bound {
            failures.push(format!("b22pm3 = {b22} above bound {bound} at ({p:.4}, {d})"));
        }
    }

    let sig = spectral::sigma(2.8, 5).unwrap();
    if (sig - 9.0).abs() > 1e-6 {
        failures.push(format!("sigma(2.8, 5) = {sig} (want 9 +- 1e-6)"));
    }

    report(
        4,
        "b coefficients",
        failures.is_empty(),
        &if failures.is_empty() {
            format!("quadrature matches closed forms to 1e-7; sigma(2.8,5) = {sig:.9}")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_05_c_pd_positivity_region() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let n = 64;
    let mut min_c = f64::INFINITY;
    for k in 0..n {
        let p = 2.05 + (3.33 - 2.05) * (k as f64 + 0.5) / n as f64;
        match expansion::c_pd(p, 5) {
            Ok((Some(c), _)) if c > 0.0 => min_c = min_c.min(c),
            Ok((c, h)) => failures.push(format!("c_pd({p:.4}, 5) = {c:?} (H = {h})")),
            Err(e) => failures.push(format!("c_pd({p:.4}, 5) errored: {e}")),
        }
    }
    let pa = expansion::p_approx(5).unwrap();
    if (pa - 3.2323).abs() > 2e-3 {
        failures.push(format!("p_approx(5) = {pa} (want 3.2323 +- 2e-3)"));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        failures.push(format!("sweep took {elapsed:?} (limit 1 min)"));
    }
    report(
        5,
        "c_pd positivity at d = 5",
        failures.is_empty(),
        &if failures.is_empty() {
            format!("{n} samples in (2.05, 3.33), min c = {min_c:.4e}, p_approx = {pa:.5}, {elapsed:?}")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_06_rem2_identity() {
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for &(p, d) in &[(2.5, 5u32), (2.8, 5), (3.0, 4)] {
        let r = expansion::rem2_identity_residual(p, d).unwrap();
        worst = worst.max(r.abs());
        if r.abs() >= 1e-8 {
            failures.push(format!("residual {r:.3e} at ({p}, {d})"));
        }
    }
    report(
        6,
        "Rem2 identity residual",
        failures.is_empty(),
        &format!("max |residual| = {worst:.3e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_07_xi_theta_root_and_monotonicity() {
    let (p, d) = (2.8, 5);
    let c = expansion::c_pd(p, d).unwrap().0.unwrap();
    let t2 = expansion::theta2(p, d).unwrap();
    let at_root = expansion::xi_theta(t2, p, d, c).unwrap();
    let mut failures = Vec::new();
    if at_root.abs() > 1e-9 {
        failures.push(format!("xi(theta2) = {at_root:.3e} (tol 1e-9)"));
    }
    let vt = vartheta(p, d);
    let n = 40;
    let mut prev = f64::INFINITY;
    for k in 0..=n {
        let theta = vt + (1.0 - vt) * k as f64 / n as f64;
        let xi = expansion::xi_theta(theta, p, d, c).unwrap();
        if xi >= prev {
            failures.push(format!("xi not strictly decreasing at theta = {theta:.4}"));
            break;
        }
        prev = xi;
    }
    report(
        7,
        "xi^theta root and monotonicity",
        failures.is_empty(),
        &format!("theta2 = {t2:.7}, xi(theta2) = {at_root:.2e}, strictly decreasing on [{vt:.4}, 1]"),
    );
}

#[test]
fn criterion_08_continuation_vs_expansion() {
    let start = Instant::now();
    let (p, d) = (2.8, 5);
    let mfs = mu_fs(p, d);
    let (branch, build_time) = &*BRANCH;
    let mut failures = Vec::new();

    let err_at = |delta: f64| -> f64 {
        let pt = branch_point_near(branch, mfs + delta);
        let q_ns = q_energy(&pt.field, pt.mu, p, d).unwrap();
        let sym = symmetric_field(pt.mu, p, &pt.field.grid).unwrap();
        let q_sym = q_energy(&sym, pt.mu, p, d).unwrap();
        let predicted = expansion::energy_ratio_prediction(pt.mu, p, d).unwrap();
        (q_ns / q_sym - predicted).abs()
    };
    let (e4, e2, e1) = (err_at(0.4), err_at(0.2), err_at(0.1));
    let ratio_coarse = e4 / e2;
    let ratio_fine = e2 / e1;
    if !(ratio_coarse >= 2.0) {
        failures.push(format!(
            "ratio test failed: err(0.4)/err(0.2) = {ratio_coarse:.2} < 2"
        ));
    }

    let bif = branch.mu_bifurcation_estimate;
    if (bif - mfs).abs() > 0.01 * mfs {
        failures.push(format!("bifurcation estimate {bif:.5} vs mu_FS = {mfs:.5} (tol 1%)"));
    }

    let elapsed = *build_time + start.elapsed();
    if elapsed > Duration::from_secs(600) {
        failures.push(format!("runtime {elapsed:?} exceeds 10 min"));
    }

    let mut detail = format!(
        "errors {e4:.2e}/{e2:.2e}/{e1:.2e} at delta 0.4/0.2/0.1 \
         (ratios {ratio_coarse:.1}, {ratio_fine:.1}); bifurcation at {bif:.5} \
         vs {mfs:.5}; {elapsed:?}"
    );
    if !failures.is_empty() {
        detail = format!("{}; {detail}", failures.join("; "));
    }
    report(8, "continuation vs expansion", failures.is_empty(), &detail);
}

#[test]
fn criterion_09_theorem1_asymptotics() {
    let (p, d) = (2.8, 5);
    let mu = 50.0 * mu_fs(p, d);

    // At mu far above mu_FS the solution is a Gagliardo-Nirenberg bubble of
    // width 1/sqrt(mu) at the pole; seed Newton with the rescaled radial
    // ground state and solve at mu directly.
    let gs = spectral::ground_state_shoot(p, d).unwrap();
    let h = gs.r[1] - gs.r[0];
    let interp = |rho: f64| -> f64 {
        let x = rho / h;
        let i = x as usize;
        if i + 1 >= gs.profile.len() {
            return 0.0;
        }
        let t = x - i as f64;
        gs.profile[i] * (1.0 - t) + gs.profile[i + 1] * t
    };
    let amp = mu.powf(1.0 / (p - 2.0));
    let scale = mu.sqrt();
    let grid = CylinderGrid::new(1.75, 401, 201).unwrap();
    let seed = CylinderField::from_fn(grid, |s, z| amp * interp(scale * (s * s + z * z).sqrt()));
    let pt = solve_el(mu, p, d, &seed, &grid).unwrap();
    let j = curve_point(&pt, 1.0).j;

    let kgn = classify::k_gn(p, d).unwrap();
    let limit = classify::asymptote_limit_constant(1.0, p, d, kgn).unwrap();
    let measured = j * mu.powf(vartheta(p, d) - 1.0);
    let rel = (measured / limit - 1.0).abs();
    report(
        9,
        "Theorem 1 asymptotics",
        rel <= 0.10 && !pt.symmetric,
        &format!(
            "J^1(50 mu_FS) mu^(vt-1) = {measured:.5} vs limit {limit:.5} (rel err {rel:.3}, tol 0.10)"
        ),
    );
}

#[test]
fn criterion_10_scenario_classifier() {
    let mut failures = Vec::new();

    let two = classify::classify_scenario(2.8, 5).unwrap();
    if two.scenario != classify::Scenario::Two {
        failures.push(format!("(2.8, 5) classified as {:?}", two.scenario));
    }
    let one = classify::classify_scenario(3.15, 5).unwrap();
    if one.scenario != classify::Scenario::One {
        failures.push(format!("(3.15, 5) classified as {:?}", one.scenario));
    }

    let (p_star, bracket) = classify::p_star(5).unwrap().expect("K_GN/K_* crossing exists");
    if (p_star - 3.001).abs() > 0.01 {
        failures.push(format!(
            "p_star(5) = {p_star:.5} (bracket {bracket:?}), outside 3.001 +- 0.01"
        ));
    }
    let vt_at_star = vartheta(p_star, 5);
    if (vt_at_star - 0.834).abs() > 0.005 {
        failures.push(format!("vartheta(p_star) = {vt_at_star:.5}, outside 0.834 +- 0.005"));
    }

    let crossing = classify::theta2_vartheta_crossing(5).unwrap();
    match crossing {
        Some(root) => {
            if (root - 3.001).abs() > 0.01 {
                failures.push(format!("theta2 - vartheta sign flip at {root:.5}, not near 3.001"));
            }
        }
        None => failures.push("no theta2 - vartheta sign flip found".into()),
    }

    report(
        10,
        "scenario classifier",
        failures.is_empty(),
        &if failures.is_empty() {
            format!(
                "scenarios two/one; p_star = {p_star:.5}; vartheta(p_star) = {vt_at_star:.4}; \
                 theta2 crossing at {:?}",
                crossing
            )
        } else {
            format!(
                "{} [computed p_star = {p_star:.5}, vartheta(p_star) = {vt_at_star:.5}, \
                 theta2 crossing = {crossing:?}]",
                failures.join("; ")
            )
        },
    );
}

#[test]
fn criterion_11_theorem_t2_signs() {
    let (p, d) = (2.8, 5);
    let mfs = mu_fs(p, d);
    let (branch, _) = &*BRANCH;
    let theta2 = expansion::theta2(p, d).unwrap();
    let mut failures = Vec::new();

    let first = branch_point_near(branch, mfs + 0.05);
    let second = branch_point_near(branch, mfs + 0.10);
    for &(theta, below_theta2) in &[(0.718, true), (0.725, true), (0.8, false), (1.0, false)] {
        assert!(below_theta2 == (theta < theta2), "sample placement vs theta2 = {theta2}");
        let a = curve_point(first, theta);
        let b = curve_point(second, theta);
        let slope = (b.lambda - a.lambda) / (b.mu - a.mu);
        let sep = separation_at(theta);
        let above = sep > 0.0;
        if below_theta2 && !(slope < 0.0 && above) {
            failures.push(format!(
                "theta = {theta}: slope = {slope:.4}, J - J_* = {sep:.3e} (want slope < 0, branch above)"
            ));
        }
        if !below_theta2 && !(slope > 0.0 && !above) {
            failures.push(format!(
                "theta = {theta}: slope = {slope:.4}, J - J_* = {sep:.3e} (want slope > 0, branch below)"
            ));
        }
    }

    report(
        11,
        "Theorem T2 sign pattern",
        failures.is_empty(),
        &if failures.is_empty() {
            format!(
                "slopes and branch side correct at theta in {{0.718, 0.725, 0.8, 1}}; theta2 = {theta2:.5}"
            )
        } else {
            failures.join("; ")
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 12: full-figure regression through the binary
// ---------------------------------------------------------------------------

struct Curve {
    rows: Vec<(f64, f64, f64)>, // (mu, Lambda, J)
    nonsym: usize,
}

fn read_curve(path: &Path) -> Curve {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    let mut rows = Vec::new();
    let mut nonsym = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        rows.push((f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap()));
        if f[5] == "false" {
            nonsym += 1;
        }
    }
    Curve { rows, nonsym }
}

/// Two-column helper files (asymptote, gn level).
fn read_pairs(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{path:?}: {e}"))
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn criterion_12_full_figure_regression() {
    let (p, d) = (2.8, 5);
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();

    for n in 1..=7 {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_ckn"))
            .args(["figure", "--name", &format!("fig{n}")])
            .env("CKN_OUT_DIR", dir.path())
            .output()
            .expect("binary runs");
        if !out.status.success() {
            failures.push(format!(
                "fig{n} generation failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }

    let kgn = classify::k_gn(p, d).unwrap();
    let kgn7 = classify::k_gn(3.15, d).unwrap();

    // (figure name, p, theta, expectation on the branch near the bifurcation)
    enum Near {
        // Branch moves right from Lambda^theta(mu_FS): J increases, the branch
        // stays below the symmetric curve and (when present) the asymptote.
        Right,
        // Branch moves left: Lambda drops below Lambda^theta(mu_FS) and the
        // branch lies above the symmetric curve.
        Left,
    }
    let cases: &[(&str, f64, f64, Near, bool)] = &[
        ("fig1", 2.8, 1.0, Near::Right, true),
        ("fig2", 2.8, 0.8, Near::Right, true),
        ("fig3", 2.8, 0.72, Near::Left, true),
        ("fig4", 2.8, 0.95, Near::Right, false),
        ("fig5", 2.8, 0.72, Near::Left, false),
        ("fig6", 2.8, vartheta(2.8, 5), Near::Left, false),
        ("fig7l", 3.15, 1.0, Near::Right, true),
        ("fig7c", 3.15, 0.95, Near::Right, false),
        ("fig7r", 3.15, vartheta(3.15, 5), Near::Left, false),
    ];

    for (name, pf, theta, near, with_asym) in cases {
        let branch = read_curve(&dir.path().join(format!("{name}_branch.csv")));
        let sym = read_curve(&dir.path().join(format!("{name}_symmetric.csv")));
        if branch.rows.is_empty() || sym.rows.is_empty() {
            failures.push(format!("{name}: empty curve file"));
            continue;
        }
        let lam_fs = lambda_fs(*pf, *theta, d);
        let first = branch.rows[0];

        match near {
            Near::Right => {
                if (first.1 - lam_fs).abs() > 0.03 * lam_fs {
                    failures.push(format!(
                        "{name}: branch starts at Lambda = {:.4}, not near {lam_fs:.4}",
                        first.1
                    ));
                }
                if !branch.rows.windows(2).all(|w| w[1].2 >= w[0].2) {
                    failures.push(format!("{name}: J not monotone along the branch"));
                }
                let mu_sym = mu_of_lambda(first.1, *pf, *theta).unwrap();
                if first.2 >= j_star_theta(mu_sym, *pf, *theta).unwrap() {
                    failures.push(format!("{name}: branch not below the symmetric curve"));
                }
            }
            Near::Left => {
                // Caption feature: non-symmetric solutions exist for Lambda
                // below the bifurcation value. (The branch-above-symmetric
                // side needs Richardson extrapolation and is criterion 11's
                // job, not a figure-level feature.)
                let min_lam = branch.rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
                if !(min_lam < lam_fs) {
                    failures.push(format!(
                        "{name}: branch never moves left of Lambda_FS = {lam_fs:.4} (min {min_lam:.4})"
                    ));
                }
                if branch.nonsym < branch.rows.len() {
                    failures.push(format!(
                        "{name}: only {}/{} branch rows are non-symmetric",
                        branch.nonsym,
                        branch.rows.len()
                    ));
                }
            }
        }

        if *with_asym {
            let k = if *pf == 2.8 { kgn } else { kgn7 };
            let asym = classify::asymptote(*theta, *pf, d, k).unwrap();
            let mut worst_ratio = 0.0_f64;
            let mut below = true;
            for r in &branch.rows {
                let bound = asym(r.1);
                below &= r.2 <= bound * (1.0 + 1e-9);
                worst_ratio = worst_ratio.max(r.2 / bound);
            }
            if !below {
                failures.push(format!("{name}: branch crosses the asymptote"));
            }
            if worst_ratio < 0.9 {
                failures.push(format!(
                    "{name}: branch never approaches the asymptote (best ratio {worst_ratio:.3})"
                ));
            }
            // The emitted asymptote table matches the closed form.
            for (lam, j) in read_pairs(&dir.path().join(format!("{name}_asymptote.csv"))) {
                if rel_err(j, asym(lam)) > 1e-12 {
                    failures.push(format!("{name}: asymptote file mismatch at Lambda = {lam}"));
                    break;
                }
            }
        }
    }

    // Flat Gagliardo-Nirenberg levels at theta = vartheta.
    for (name, k) in [("fig6", kgn), ("fig7r", kgn7)] {
        let level = read_pairs(&dir.path().join(format!("{name}_gn_level.csv")));
        if level.is_empty() || level.iter().any(|(_, j)| rel_err(*j, 1.0 / k) > 1e-12) {
            failures.push(format!("{name}: gn level is not the constant 1/K_GN"));
        }
    }

    report(
        12,
        "full-figure regression",
        failures.is_empty(),
        &if failures.is_empty() {
            "fig1..fig7 regenerated; bifurcation location, monotonicity, branch side and \
             asymptote bound all as captioned"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
}
