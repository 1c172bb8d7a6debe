mod config;
mod figures;
mod table;

use clap::{Args, Parser, Subcommand};
use config::{resolve_out_dir, MuRange, RunConfig};
use std::path::PathBuf;
use table::{render_curve, write_text, CurveTable};

use ckn::analytic::{mu_fs, symmetric_branch, vartheta};
use ckn::continuation::{
    continue_branch, curve_point, dump_field, CylinderGrid, StepPolicy,
};
use ckn::expansion::ExpansionReport;
use ckn::spectral::{solve_chi, ChiKind, LineGrid};
use ckn::{Error, ProblemParams, Result};

#[derive(Parser)]
#[command(
    name = "ckn",
    about = "Symmetry breaking in Caffarelli-Kohn-Nirenberg inequalities: branches, thresholds, figure data"
)]
struct Cli {
    /// Flat key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $CKN_OUT_DIR, then the working directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form symmetric branch table over a mu sweep.
    SymmetricBranch(SymmetricBranchArgs),
    /// Bifurcation-expansion report (c_pd, theta2, slopes) as JSON.
    Expansion(ParamArgs),
    /// Solve the chi boundary value problems and tabulate the profiles.
    Chi(ChiArgs),
    /// Gagliardo-Nirenberg constant, comparison with K*, and thresholds.
    Gn(ParamArgs),
    /// Continue the non-symmetric branch in mu and emit a curve table.
    #[command(name = "continue")]
    ContinueBranch(ContinueArgs),
    /// Scenario 1 vs Scenario 2 report as JSON.
    Classify(ParamArgs),
    /// Emit the data tables behind one of the paper-style figures.
    Figure(FigureArgs),
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    /// Write JSON here (under the output directory) instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SymmetricBranchArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Sweep start:end:step.
    #[arg(long)]
    mu: Option<MuRange>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ChiArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    /// Grid half-width override.
    #[arg(long)]
    half_width: Option<f64>,
    /// Grid node count override (odd).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ContinueArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    /// Reparametrization exponent for the emitted (Lambda, J) columns.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    mu_start: Option<f64>,
    #[arg(long)]
    mu_end: Option<f64>,
    /// Initial continuation step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    grid_s_half: Option<f64>,
    #[arg(long)]
    grid_n_s: Option<usize>,
    #[arg(long)]
    grid_n_zeta: Option<usize>,
    /// Dump every solved field as a binary file next to the table.
    #[arg(long)]
    dump_fields: bool,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1..fig7 (fig7 expands to fig7l/fig7c/fig7r).
    #[arg(long)]
    name: String,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidParameter(_) => 1,
                Error::Solver(_) | Error::Io { .. } => 2,
            };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out_dir = resolve_out_dir(cli.out_dir.clone(), &config);
    match cli.cmd {
        Cmd::SymmetricBranch(args) => cmd_symmetric_branch(args, &config, &out_dir),
        Cmd::Expansion(args) => cmd_expansion(args, &config, &out_dir),
        Cmd::Chi(args) => cmd_chi(args, &config, &out_dir),
        Cmd::Gn(args) => cmd_gn(args, &config, &out_dir),
        Cmd::ContinueBranch(args) => cmd_continue(args, &config, &out_dir),
        Cmd::Classify(args) => cmd_classify(args, &config, &out_dir),
        Cmd::Figure(args) => cmd_figure(args, &out_dir),
    }
}

fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::InvalidParameter(format!("missing required parameter `{name}` (flag or config)"))
    })
}

fn resolve_pd(d: Option<u32>, p: Option<f64>, config: &RunConfig) -> Result<(u32, f64)> {
    let d = require(d.or(config.d()?), "d")?;
    let p = require(p.or(config.p()?), "p")?;
    Ok((d, p))
}

/// Writes `text` to out_dir/name when a name is given, else to stdout.
fn emit(text: &str, out: Option<String>, out_dir: &std::path::Path) -> Result<()> {
    match out {
        Some(name) => {
            let path = out_dir.join(name);
            write_text(text, &path)?;
            println!("{}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Solver(format!("JSON serialization failed: {e}")))
}

fn cmd_symmetric_branch(
    args: SymmetricBranchArgs,
    config: &RunConfig,
    out_dir: &std::path::Path,
) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let theta = require(args.theta.or(config.theta()?), "theta")?;
    let params = ProblemParams::new(d, p, theta)?;
    let range = require(args.mu.or(config.mu()?), "mu")?;
    let mut rows = Vec::new();
    for mu in range.values() {
        let bp = symmetric_branch(mu, &params)?;
        rows.push(ckn::continuation::CurvePoint {
            mu,
            lambda: bp.lambda_theta,
            j: bp.j_theta,
            tau: bp.tau_star,
            nu: bp.nu_star,
            symmetric: true,
        });
    }
    emit(&render_curve(&CurveTable::new(rows)?), args.out, out_dir)
}

fn cmd_expansion(args: ParamArgs, config: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let report = ExpansionReport::compute(p, d)?;
    emit(&to_json(&report)?, args.out, out_dir)
}

fn cmd_chi(args: ChiArgs, config: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let grid = match (args.half_width, args.n) {
        (None, None) => LineGrid::default_chi(),
        (hw, n) => {
            let dflt = LineGrid::default_chi();
            LineGrid::new(hw.unwrap_or(dflt.half_width), n.unwrap_or(dflt.n))?
        }
    };
    let c0a = solve_chi(ChiKind::Chi0Pm1, p, d, &grid)?;
    let c0b = solve_chi(ChiKind::Chi02pm3, p, d, &grid)?;
    let c2 = solve_chi(ChiKind::Chi22pm3, p, d, &grid)?;
    let mut text = String::from("s,chi0_pm1,chi0_2pm3,chi2_2pm3\n");
    for i in 0..grid.n {
        let s = grid.point(i);
        text.push_str(&format!(
            "{},{},{},{}\n",
            table::format_float(s),
            table::format_float(c0a.values[i]),
            table::format_float(c0b.values[i]),
            table::format_float(c2.values[i]),
        ));
    }
    emit(&text, args.out, out_dir)
}

fn cmd_gn(args: ParamArgs, config: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let kgn = ckn::classify::k_gn(p, d)?;
    let kstar = ckn::classify::k_star_at_fs(p, d)?;
    let threshold = ckn::classify::gn_threshold(p, d)?;
    let report = serde_json::json!({
        "p": p,
        "d": d,
        "k_gn": kgn,
        "k_star_at_fs": kstar,
        "vartheta": vartheta(p, d),
        "lambda_gn_star": threshold.map(|t| t.0),
        "mu_gn": threshold.map(|t| t.1),
    });
    emit(&to_json(&report)?, args.out, out_dir)
}

fn cmd_continue(args: ContinueArgs, config: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let theta = args.theta.or(config.theta()?).unwrap_or(1.0);
    // Validates theta against the admissible interval as well.
    ProblemParams::new(d, p, theta)?;
    let mfs = mu_fs(p, d);
    let mu_start = args.mu_start.or(config.mu_start()?).unwrap_or(1.02 * mfs);
    let mu_end = args.mu_end.or(config.mu_end()?).unwrap_or(2.0 * mfs);
    let step = args.step.or(config.step()?).unwrap_or(0.01 * mfs);
    let grid = {
        let dflt = CylinderGrid::default_for(p, d)?;
        CylinderGrid::new(
            args.grid_s_half.or(config.grid_s_half()?).unwrap_or(dflt.s_half),
            args.grid_n_s.or(config.grid_n_s()?).unwrap_or(dflt.n_s),
            args.grid_n_zeta.or(config.grid_n_zeta()?).unwrap_or(dflt.n_zeta),
        )?
    };
    let policy = StepPolicy { initial: step, growth: 1.3, max: 0.5 * mfs };
    let branch = continue_branch(mu_start, mu_end, policy, p, d, &grid)?;
    if args.dump_fields {
        for (k, pt) in branch.points.iter().enumerate() {
            dump_field(&pt.field, &out_dir.join(format!("field_{k:04}.bin")))?;
        }
    }
    let rows: Vec<_> = branch.points.iter().map(|pt| curve_point(pt, theta)).collect();
    emit(&render_curve(&CurveTable::new(rows)?), args.out, out_dir)
}

fn cmd_classify(args: ParamArgs, config: &RunConfig, out_dir: &std::path::Path) -> Result<()> {
    let (d, p) = resolve_pd(args.d, args.p, config)?;
    let report = ckn::classify::classify_scenario(p, d)?;
    emit(&to_json(&report)?, args.out, out_dir)
}

fn cmd_figure(args: FigureArgs, out_dir: &std::path::Path) -> Result<()> {
    let paths = figures::emit_figure(&args.name, out_dir)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}
