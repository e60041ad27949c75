use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use super::config::{CliError, CliResult, Resolver};
use super::{Cli, Command, ContinuityArgs, DriverArg, ExponentsArgs, ScanArgs, TraceArgs, VerifyArgs, WhitneyArgs};
use crate::driving::{deterministic_driver, fmt_f64, scale_to_driving, BrownianSample, DriverKind, DrivingTerm, TimeGrid};
use crate::exponents::{exponent_row, kappa0, kappa_inf};
use crate::loewner::{trace, HalfPlanePoint, LoewnerChain};
use crate::montecarlo::{continuity_scan, moment_scan, tail_scan, CornerScanConfig};
use crate::perturbation::verify_pair;
use crate::whitney::{decay_fit, DecayFitConfig};

pub const TOOL: &str = "sle-kappa";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub(super) fn dispatch(cli: &Cli, res: &mut Resolver) -> CliResult<()> {
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Trace(a) => cmd_trace(cli, a, res, out),
        Command::Exponents(a) => cmd_exponents(a, res, out),
        Command::VerifyBounds(a) => cmd_verify_bounds(cli, a, res, out),
        Command::MomentScan(a) => cmd_scan(cli, a, res, out, true),
        Command::TailScan(a) => cmd_scan(cli, a, res, out, false),
        Command::ContinuityScan(a) => cmd_continuity(cli, a, res, out),
        Command::WhitneyScan(a) => cmd_whitney(cli, a, res, out),
    }
}

fn bad(flag: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::config(format!("invalid --{flag}: {reason}"))
}

fn csv_header(command: &str, echo: &BTreeMap<String, String>) -> String {
    let mut s = format!("# {TOOL} {VERSION} {command}\n");
    for (k, v) in echo {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: Meta<'a>,
    report: &'a T,
}

fn json_doc<T: Serialize>(command: &str, echo: &BTreeMap<String, String>, report: &T) -> CliResult<String> {
    let env = Envelope {
        meta: Meta {
            tool: TOOL,
            version: VERSION,
            command,
            config: echo,
        },
        report,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
            Ok(())
        }
    }
}

fn check_level(level: u32) -> CliResult<()> {
    if !(1..=crate::driving::MAX_LEVEL).contains(&level) {
        return Err(bad("level", format!("{level} not in 1..=30")));
    }
    Ok(())
}

fn check_y0(y0: Option<f64>) -> CliResult<()> {
    if let Some(y) = y0 {
        if !(y > 0.0) || !y.is_finite() {
            return Err(bad("y0", format!("{y} must be positive")));
        }
    }
    Ok(())
}

fn check_kappa(flag: &str, k: f64) -> CliResult<()> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(bad(flag, format!("{k} must be finite and >= 0")));
    }
    Ok(())
}

fn cmd_trace(cli: &Cli, a: &TraceArgs, res: &mut Resolver, out: Option<&Path>) -> CliResult<()> {
    let driving_file: Option<String> =
        res.get_opt("driving-file", a.driving_file.as_ref().map(|p| p.display().to_string()))?;
    let default_driver = if driving_file.is_some() { "file" } else { "brownian" };
    let driver_name: String = res.get(
        "driver",
        a.driver
            .and_then(|d| d.to_possible_value())
            .map(|v| v.get_name().to_string()),
        default_driver.to_string(),
    )?;
    let points: usize = res.get("points", a.points, 100)?;
    if points == 0 {
        return Err(bad("points", "must be >= 1"));
    }
    let y0 = res.get_opt("y0", cli.common.y0)?;
    check_y0(y0)?;
    let save = a.save_driving.clone();

    let mut body = String::new();
    if driver_name == "file" {
        let path = driving_file.ok_or_else(|| bad("driver", "file needs --driving-file"))?;
        res.finish()?;
        let term = DrivingTerm::load(Path::new(&path))?;
        write_single(&term, points, y0, &mut body)?;
        if let Some(p) = &save {
            term.save(p)?;
        }
        body.insert_str(0, &format!("{}t,re,im\n", csv_header("trace", res.echo())));
        return emit(out, &body);
    }
    let driver = DriverArg::from_str(&driver_name, true).map_err(|_| bad("driver", &driver_name))?;
    if driver == DriverArg::Brownian {
        let kappas = res.get_list("kappa", a.kappa.clone(), vec![1.0])?;
        for &k in &kappas {
            check_kappa("kappa", k)?;
        }
        let seed: u64 = res.get("seed", cli.common.seed, 1)?;
        let level: u32 = res.get("level", cli.common.level, 12)?;
        check_level(level)?;
        res.finish()?;
        let sample = BrownianSample::new(seed, level)?;
        let times: Vec<f64> = (0..=points).map(|k| k as f64 / points as f64).collect();
        for (i, &k) in kappas.iter().enumerate() {
            let term = scale_to_driving(&sample, k)?;
            if i == 0 {
                if let Some(p) = &save {
                    term.save(p)?;
                }
            }
            let chain = LoewnerChain::from_driving(&term)?;
            let tr = trace(&chain, &times, y0.unwrap_or_else(|| chain.default_y0()))?;
            for s in &tr.samples {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f64(s.t),
                    fmt_f64(s.point.re()),
                    fmt_f64(s.point.im()),
                    fmt_f64(k)
                ));
            }
        }
        body.insert_str(0, &format!("{}t,re,im,kappa\n", csv_header("trace", res.echo())));
        return emit(out, &body);
    }
    let c: f64 = res.get("c", a.c, 1.0)?;
    let steps: usize = res.get("steps", a.steps, 4096)?;
    let t_max: f64 = res.get("t-max", a.t_max, 1.0)?;
    if steps == 0 {
        return Err(bad("steps", "must be >= 1"));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(bad("t-max", format!("{t_max} must be positive")));
    }
    if !c.is_finite() {
        return Err(bad("c", "must be finite"));
    }
    res.finish()?;
    let kind = match driver {
        DriverArg::Zero => DriverKind::Zero,
        DriverArg::Constant => DriverKind::Constant(c),
        DriverArg::Linear => DriverKind::Linear(c),
        DriverArg::Sqrt => DriverKind::Sqrt(c),
        DriverArg::Brownian => unreachable!(),
    };
    let term = deterministic_driver(kind, TimeGrid::new(t_max, steps)?)?;
    if let Some(p) = &save {
        term.save(p)?;
    }
    write_single(&term, points, y0, &mut body)?;
    body.insert_str(0, &format!("{}t,re,im\n", csv_header("trace", res.echo())));
    emit(out, &body)
}

fn write_single(term: &DrivingTerm, points: usize, y0: Option<f64>, body: &mut String) -> CliResult<()> {
    let chain = LoewnerChain::from_driving(term)?;
    let t_max = chain.total_time();
    let times: Vec<f64> = (0..=points).map(|k| k as f64 * t_max / points as f64).collect();
    let tr = trace(&chain, &times, y0.unwrap_or_else(|| chain.default_y0()))?;
    for s in &tr.samples {
        body.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(s.t),
            fmt_f64(s.point.re()),
            fmt_f64(s.point.im())
        ));
    }
    Ok(())
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "no-solution".into())
}

fn cmd_exponents(a: &ExponentsArgs, res: &mut Resolver, out: Option<&Path>) -> CliResult<()> {
    let explicit = res.get_list("kappa", a.kappa.clone(), vec![])?;
    let mut kappas = if explicit.is_empty() {
        let lo: f64 = res.get("kappa-min", a.kappa_min, 0.0)?;
        let hi: f64 = res.get("kappa-max", a.kappa_max, 3.0)?;
        let steps: usize = res.get("kappa-steps", a.kappa_steps, 30)?;
        check_kappa("kappa-min", lo)?;
        if !(hi > lo) || !hi.is_finite() {
            return Err(bad("kappa-max", format!("{hi} must exceed kappa-min")));
        }
        if steps == 0 {
            return Err(bad("kappa-steps", "must be >= 1"));
        }
        (0..=steps)
            .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
            .collect()
    } else {
        explicit
    };
    for &k in &kappas {
        check_kappa("kappa", k)?;
    }
    res.finish()?;
    kappas.push(kappa0());
    kappas.push(kappa_inf());
    kappas.sort_by(f64::total_cmp);
    kappas.dedup();
    let mut body = csv_header("exponents", res.echo());
    body.push_str("kappa,beta_hat,beta_kappa,beta_prime,alpha_lower,alpha_numeric,eta_lower\n");
    for k in kappas {
        let r = exponent_row(k)?;
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(k),
            opt_cell(r.beta_hat),
            opt_cell(r.beta_kappa),
            opt_cell(r.beta_prime),
            opt_cell(r.alpha_lower),
            opt_cell(r.alpha_numeric),
            opt_cell(r.eta_lower)
        ));
    }
    emit(out, &body)
}

fn cmd_verify_bounds(cli: &Cli, a: &VerifyArgs, res: &mut Resolver, out: Option<&Path>) -> CliResult<()> {
    let kappa: f64 = res.get("kappa", a.kappa, 1.0)?;
    check_kappa("kappa", kappa)?;
    let kappa2: f64 = res.get("kappa2", a.kappa2, kappa + 2f64.powi(-6))?;
    check_kappa("kappa2", kappa2)?;
    let seed: u64 = res.get("seed", cli.common.seed, 1)?;
    let level: u32 = res.get("level", cli.common.level, 10)?;
    check_level(level)?;
    let t_points: usize = res.get("t-points", a.t_points, 10)?;
    let y_exp: u32 = res.get("y-exp", a.y_exp, 6)?;
    let xs = res.get_list("x", a.x.clone(), vec![0.0, 0.5])?;
    if t_points == 0 {
        return Err(bad("t-points", "must be >= 1"));
    }
    if !(1..=30).contains(&y_exp) {
        return Err(bad("y-exp", "must lie in 1..=30"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(bad("x", "must be finite"));
    }
    res.finish()?;
    let sample = BrownianSample::new(seed, level)?;
    let c1 = LoewnerChain::from_driving(&scale_to_driving(&sample, kappa)?)?;
    let c2 = LoewnerChain::from_driving(&scale_to_driving(&sample, kappa2)?)?;
    let ts: Vec<f64> = (1..=t_points).map(|k| k as f64 / t_points as f64).collect();
    let zs = xs
        .iter()
        .flat_map(|&x| (1..=y_exp).map(move |e| HalfPlanePoint::new(x, (-(e as f64)).exp2())))
        .collect::<crate::error::Result<Vec<_>>>()?;
    let report = verify_pair(&c1, &c2, &ts, &zs)?;
    emit(out, &json_doc("verify-bounds", res.echo(), &report)?)
}

fn default_j_list(n: u32) -> Vec<u64> {
    let top = 1u64 << (2 * n);
    std::iter::successors(Some(4u64), |j| Some(j * 2))
        .take_while(|&j| j <= top / 4)
        .collect()
}

fn cmd_scan(cli: &Cli, a: &ScanArgs, res: &mut Resolver, out: Option<&Path>, moments: bool) -> CliResult<()> {
    let kappa: f64 = res.get("kappa", a.kappa, 1.0)?;
    check_kappa("kappa", kappa)?;
    let beta: f64 = res.get("beta", a.beta, 0.5)?;
    if !(beta > -1.0 && beta < 1.0) {
        return Err(bad("beta", format!("{beta} not in (-1, 1)")));
    }
    let n: u32 = res.get("n", a.n, 6)?;
    if !(1..=12).contains(&n) {
        return Err(bad("n", format!("{n} not in 1..=12")));
    }
    let j_list = res.get_list("j-list", a.j_list.clone(), default_j_list(n))?;
    let quick = res.get_bool("quick", a.quick)?;
    let samples: usize = res.get("samples", a.samples, if quick { 1000 } else { 10_000 })?;
    let seed: u64 = res.get("seed", cli.common.seed, 1)?;
    let level: u32 = res.get("level", cli.common.level, 2 * n + 2)?;
    if level < 2 * n || level > crate::driving::MAX_LEVEL {
        return Err(bad("level", format!("{level} not in 2n..=30")));
    }
    res.finish()?;
    let cfg = CornerScanConfig {
        kappa,
        n,
        j_list,
        sample_count: samples,
        seed,
        level: Some(level),
    };
    let (doc, raw) = if moments {
        if kappa == 0.0 {
            return Err(bad("kappa", "moment scan needs kappa > 0"));
        }
        let o = moment_scan(&cfg, beta)?;
        (json_doc("moment-scan", res.echo(), &o.scan)?, o.raw)
    } else {
        let o = tail_scan(&cfg, beta)?;
        (json_doc("tail-scan", res.echo(), &o.scan)?, o.raw)
    };
    if let Some(p) = &a.raw {
        let command = if moments { "moment-scan" } else { "tail-scan" };
        let mut body = csv_header(command, res.echo());
        body.push_str("sample,j,abs_fprime\n");
        for (i, row) in raw.iter().enumerate() {
            for (j, v) in cfg.j_list.iter().zip(row) {
                body.push_str(&format!("{i},{j},{}\n", fmt_f64(*v)));
            }
        }
        emit(Some(p), &body)?;
    }
    emit(out, &doc)
}

fn cmd_continuity(cli: &Cli, a: &ContinuityArgs, res: &mut Resolver, out: Option<&Path>) -> CliResult<()> {
    let kappa_base: f64 = res.get("kappa-base", a.kappa_base, 0.5)?;
    if !(kappa_base >= 0.1) || !kappa_base.is_finite() {
        return Err(bad("kappa-base", format!("{kappa_base} must be >= 0.1")));
    }
    let default_dk: Vec<f64> = (3..=8).map(|e| 2f64.powi(-e)).collect();
    let dks = res.get_list("dkappa", a.dkappa.clone(), default_dk)?;
    for &d in &dks {
        check_kappa("dkappa", d)?;
    }
    let t_points: usize = res.get("t-points", a.t_points, 32)?;
    if t_points == 0 {
        return Err(bad("t-points", "must be >= 1"));
    }
    let seed: u64 = res.get("seed", cli.common.seed, 1)?;
    let level: u32 = res.get("level", cli.common.level, 16)?;
    check_level(level)?;
    let y0: f64 = res.get("y0", cli.common.y0, 2f64.powi(-8))?;
    check_y0(Some(y0))?;
    if y0 < (-(level as f64) / 2.0).exp2() {
        return Err(bad("level", format!("{level} too coarse for y0 = {y0}")));
    }
    res.finish()?;
    let ts: Vec<f64> = (0..=t_points).map(|k| k as f64 / t_points as f64).collect();
    let scan = continuity_scan(seed, kappa_base, &dks, &ts, y0, level)?;
    emit(out, &json_doc("continuity-scan", res.echo(), &scan)?)
}

#[derive(Serialize)]
struct WhitneySummary {
    delta_hat: f64,
    residual: f64,
    r_squared: f64,
    theoretical_delta: Option<f64>,
    beta: Option<f64>,
    levels: Vec<crate::whitney::LevelMax>,
}

fn cmd_whitney(cli: &Cli, a: &WhitneyArgs, res: &mut Resolver, out: Option<&Path>) -> CliResult<()> {
    let q: f64 = res.get("q", a.q, 1.0)?;
    if !(q > 0.0) || !q.is_finite() {
        return Err(bad("q", format!("{q} must be positive")));
    }
    let kmin: f64 = res.get("kappa-min", a.kappa_min, 0.0)?;
    let kmax: f64 = res.get("kappa-max", a.kappa_max, 1.0)?;
    check_kappa("kappa-min", kmin)?;
    if !(kmax >= kmin) || !kmax.is_finite() {
        return Err(bad("kappa-max", "must be >= kappa-min"));
    }
    let n_min: u32 = res.get("n-min", a.n_min, 2)?;
    let n_max: u32 = res.get("n-max", a.n_max, 5)?;
    if n_min == 0 || n_max < n_min + 2 {
        return Err(bad("n-max", "need n-min >= 1 and at least 3 levels"));
    }
    let boxes: usize = res.get("boxes", a.boxes, 32)?;
    let m: usize = res.get("m", a.m, 4)?;
    if m < 2 {
        return Err(bad("m", "must be >= 2"));
    }
    let seed: u64 = res.get("seed", cli.common.seed, 1)?;
    let box_seed: u64 = res.get("box-seed", a.box_seed, seed)?;
    let level: u32 = res.get("level", cli.common.level, 2 * n_max + 2)?;
    check_level(level)?;
    if level < 2 * n_max {
        return Err(bad("level", format!("{level} < 2 n-max")));
    }
    res.finish()?;
    let sample = BrownianSample::new(seed, level)?;
    let cfg = DecayFitConfig {
        q,
        kappa_range: (kmin, kmax),
        n_range: (n_min, n_max),
        boxes_per_level: boxes,
        m,
        box_seed,
        beta: None,
    };
    let fit = decay_fit(&sample, &cfg)?;
    let mut body = csv_header("whitney-scan", res.echo());
    body.push_str("n,j,ell,q,diameter,corner_deriv_modulus\n");
    for r in &fit.records {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.j,
            r.ell,
            fmt_f64(r.q),
            fmt_f64(r.diameter),
            fmt_f64(r.corner_deriv)
        ));
    }
    let summary = WhitneySummary {
        delta_hat: fit.delta_hat,
        residual: fit.residual,
        r_squared: fit.r_squared,
        theoretical_delta: fit.theoretical_delta,
        beta: fit.beta,
        levels: fit.levels.clone(),
    };
    let doc = json_doc("whitney-scan", res.echo(), &summary)?;
    let summary_path: Option<PathBuf> = a
        .summary
        .clone()
        .or_else(|| out.map(|p| p.with_extension("json")));
    emit(out, &body)?;
    emit(summary_path.as_deref(), &doc)
}
