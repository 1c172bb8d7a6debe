//! Data tables behind the paper-style figures. Each figure becomes a small
//! family of CSV files (symmetric curve, solver branch, asymptote or
//! Gagliardo-Nirenberg level where meaningful); plotting is external.

use crate::table::{format_float, render_curve, write_text, CurveTable};
use ckn::analytic::{mu_fs, vartheta};
use ckn::classify;
use ckn::continuation::{continue_branch, curve_point, Branch, CylinderGrid, StepPolicy};
use ckn::{Error, Result};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy)]
pub struct FigureSpec {
    pub name: &'static str,
    pub p: f64,
    pub d: u32,
    /// None means the critical value vartheta(p, d).
    pub theta: Option<f64>,
    /// Multiple of mu_FS the branch slice extends to.
    pub mu_end_factor: f64,
    pub with_asymptote: bool,
    pub with_gn_level: bool,
}

const FAR: f64 = 8.0;
const NEAR: f64 = 1.6;

pub fn figure_specs(name: &str) -> Result<Vec<FigureSpec>> {
    let all = |n| match n {
        "fig1" => Some(spec("fig1", 2.8, Some(1.0), FAR, true, false)),
        "fig2" => Some(spec("fig2", 2.8, Some(0.8), FAR, true, false)),
        // Past ~3 mu_FS the theta = 0.72 reparametrization magnifies the tau
        // quadrature error of the narrowing core; stop the slice before that.
        "fig3" => Some(spec("fig3", 2.8, Some(0.72), 3.0, true, false)),
        "fig4" => Some(spec("fig4", 2.8, Some(0.95), NEAR, false, false)),
        "fig5" => Some(spec("fig5", 2.8, Some(0.72), NEAR, false, false)),
        "fig6" => Some(spec("fig6", 2.8, None, NEAR, false, true)),
        // The bubble core at p = 3.15 is too narrow for the figure grid far
        // above mu_FS, so the branch slice stays closer to the bifurcation.
        "fig7l" => Some(spec("fig7l", 3.15, Some(1.0), 1.8, true, false)),
        "fig7c" => Some(spec("fig7c", 3.15, Some(0.95), NEAR, false, false)),
        "fig7r" => Some(spec("fig7r", 3.15, None, NEAR, false, true)),
        _ => None,
    };
    if name == "fig7" {
        return Ok(vec![all("fig7l").unwrap(), all("fig7c").unwrap(), all("fig7r").unwrap()]);
    }
    all(name).map(|s| vec![s]).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "unknown figure `{name}`; expected fig1..fig7 or fig7l/fig7c/fig7r"
        ))
    })
}

fn spec(
    name: &'static str,
    p: f64,
    theta: Option<f64>,
    mu_end_factor: f64,
    with_asymptote: bool,
    with_gn_level: bool,
) -> FigureSpec {
    FigureSpec { name, p, d: 5, theta, mu_end_factor, with_asymptote, with_gn_level }
}

impl FigureSpec {
    pub fn theta_value(&self) -> f64 {
        self.theta.unwrap_or_else(|| vartheta(self.p, self.d))
    }
}

/// Grid tuned for figure tables: coarser than the default solver grid, which
/// keeps a full figure family under a minute.
fn figure_grid(p: f64, d: u32) -> Result<CylinderGrid> {
    let beta = (p - 2.0) / 2.0 * mu_fs(p, d).sqrt();
    CylinderGrid::new(16.0 / beta, 801, 49)
}

fn figure_branch(p: f64, d: u32, mu_end: f64) -> Result<Branch> {
    let mfs = mu_fs(p, d);
    // Close to 2* the solution's core sharpens quickly with mu and large
    // continuation steps overshoot the Newton basin; keep them modest there.
    let max_step = if p > 3.0 { 0.15 } else { 0.6 } * mfs;
    let policy = StepPolicy { initial: 0.015 * mfs, growth: 1.3, max: max_step };
    continue_branch(mfs + 0.015 * mfs, mu_end, policy, p, d, &figure_grid(p, d)?)
}

/// Renders one figure spec against a precomputed branch into (file name,
/// content) pairs.
fn render_spec(fig: &FigureSpec, branch: &Branch) -> Result<Vec<(String, String)>> {
    let (p, d) = (fig.p, fig.d);
    let theta = fig.theta_value();
    let mfs = mu_fs(p, d);
    let mu_end = mfs * fig.mu_end_factor;
    let mut out = Vec::new();

    // Symmetric curve from the closed forms, geometric mu ladder.
    let params = ckn::ProblemParams::new(d, p, theta)?;
    let mu_lo = 0.15 * mfs;
    let n_sym = 120;
    let ratio = (mu_end / mu_lo).powf(1.0 / (n_sym - 1) as f64);
    let mut sym_rows = Vec::with_capacity(n_sym);
    for k in 0..n_sym {
        let mu = mu_lo * ratio.powi(k as i32);
        let bp = ckn::analytic::symmetric_branch(mu, &params)?;
        sym_rows.push(ckn::continuation::CurvePoint {
            mu,
            lambda: bp.lambda_theta,
            j: bp.j_theta,
            tau: bp.tau_star,
            nu: bp.nu_star,
            symmetric: true,
        });
    }
    out.push((
        format!("{}_symmetric.csv", fig.name),
        render_curve(&CurveTable::new(sym_rows)?),
    ));

    let rows: Vec<_> = branch
        .points
        .iter()
        .filter(|pt| pt.mu <= mu_end + 1e-9)
        .map(|pt| curve_point(pt, theta))
        .collect();
    out.push((
        format!("{}_branch.csv", fig.name),
        render_curve(&CurveTable::new(rows)?),
    ));

    if fig.with_asymptote {
        let kgn = classify::k_gn(p, d)?;
        let f = classify::asymptote(theta, p, d, kgn)?;
        let mut text = String::from("Lambda,J_asym\n");
        let lam_lo = 0.2 * mfs;
        let lam_hi = ckn::analytic::lambda_star_theta(mu_end, p, theta).max(2.0 * lam_lo);
        let r = (lam_hi / lam_lo).powf(1.0 / 119.0);
        for k in 0..120 {
            let lam = lam_lo * r.powi(k);
            text.push_str(&format!("{},{}\n", format_float(lam), format_float(f(lam))));
        }
        out.push((format!("{}_asymptote.csv", fig.name), text));
    }

    if fig.with_gn_level {
        // At theta = vartheta the optimal constant saturates at K_GN beyond
        // the threshold: a flat J level at 1/K_GN.
        let kgn = classify::k_gn(p, d)?;
        let mut text = String::from("Lambda,J_level\n");
        let lam_hi = ckn::analytic::lambda_star_theta(mu_end, p, theta);
        for k in 0..60 {
            let lam = lam_hi * (k as f64 + 1.0) / 60.0;
            text.push_str(&format!("{},{}\n", format_float(lam), format_float(1.0 / kgn)));
        }
        out.push((format!("{}_gn_level.csv", fig.name), text));
    }
    Ok(out)
}

/// Computes and writes every file of the named figure; returns the paths in
/// sorted order. Independent (p, d) branches run concurrently and the merge
/// is deterministic by file name.
pub fn emit_figure(name: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let specs = figure_specs(name)?;
    // One branch per (p, d), long enough for every spec that shares it.
    let mut jobs: Vec<(f64, u32, f64)> = Vec::new();
    for s in &specs {
        let mu_end = mu_fs(s.p, s.d) * s.mu_end_factor;
        match jobs.iter_mut().find(|(p, d, _)| *p == s.p && *d == s.d) {
            Some(job) => job.2 = job.2.max(mu_end),
            None => jobs.push((s.p, s.d, mu_end)),
        }
    }
    let branches: Vec<Result<((f64, u32), Branch)>> = jobs
        .par_iter()
        .map(|&(p, d, mu_end)| figure_branch(p, d, mu_end).map(|b| ((p, d), b)))
        .collect();
    let mut branch_map = Vec::new();
    for b in branches {
        branch_map.push(b?);
    }
    let rendered: Vec<Result<Vec<(String, String)>>> = specs
        .par_iter()
        .map(|s| {
            let branch = &branch_map
                .iter()
                .find(|((p, d), _)| *p == s.p && *d == s.d)
                .expect("branch computed for every spec")
                .1;
            render_spec(s, branch)
        })
        .collect();
    let mut files: Vec<(String, String)> = Vec::new();
    for r in rendered {
        files.extend(r?);
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut paths = Vec::new();
    for (file, content) in files {
        let path = out_dir.join(file);
        write_text(&content, &path)?;
        paths.push(path);
    }
    Ok(paths)
}
