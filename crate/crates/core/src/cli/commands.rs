use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exponents::{ExponentTable, ProblemParams};
use crate::field::{eval_expr, DomainKind, Expr, Grid, ScalarField};
use crate::norms::{fractional_sobolev_norm, lp_norm, nikolskii_seminorm, w1r_norm};
use crate::operator::FluxLaw;
use crate::solver::{continuation_solve, continuation_solve_partial, Oracle1d, Solution};
use crate::verify::{self, constants, CheckResult, Theorem};

use super::config::{RunConfig, CHECK_NAMES};
use super::report::{RegularityReport, StageTelemetry, ToolInfo, SWEEP_COLUMNS};

/// Exit code and lines to print for a finished command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub code: i32,
    pub messages: Vec<String>,
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn is_unit_interval(grid: &Grid) -> bool {
    grid.kind() == DomainKind::Interval && grid.extents()[0] == 1.0
}

/// Largest nodal deviation from the 1D reference solution at the same `eps`.
fn oracle_error(sol: &Solution, expr: &Expr, params: &ProblemParams) -> Result<f64> {
    let law = FluxLaw::new(params).with_eps(sol.eps);
    let exact = Oracle1d::new(expr, law)?.sample(sol.u.grid())?;
    Ok(sol.u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let params = cfg.params();
    let grid = cfg.grid()?;
    let expr = cfg.expr()?;
    let f = eval_expr(&expr, &grid);
    let (sols, err) = continuation_solve_partial(&f, &params, &cfg.solve_config());
    fs::create_dir_all(out)?;
    let mut messages = Vec::new();
    for (k, s) in sols.iter().enumerate() {
        s.u.write_csv(BufWriter::new(fs::File::create(out.join(format!("u_eps{k:02}.csv")))?))?;
        write_json(
            &out.join(format!("u_eps{k:02}.json")),
            &json!({"eps": s.eps, "residual_norm": s.residual_norm, "iters": s.newton_iters, "energy": s.energy}),
        )?;
    }
    let oracle = match (err.is_none(), sols.last()) {
        (true, Some(last)) if is_unit_interval(&grid) => Some(oracle_error(last, &expr, &params)?),
        _ => None,
    };
    let telemetry: Vec<StageTelemetry> = sols.iter().map(|s| StageTelemetry::of(grid.len(), s)).collect();
    write_json(
        &out.join("solve_summary.json"),
        &json!({
            "stages": telemetry,
            "oracle_max_error": oracle,
            "error": err.as_ref().map(|e| e.to_string()),
        }),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    messages.push(format!("solved {} stages, final eps {:e}", sols.len(), params.eps));
    if let Some(e) = oracle {
        messages.push(format!("max nodal error against the 1D reference solution: {e:e}"));
    }
    Ok(CommandOutcome { code: 0, messages })
}

struct VerifyContext<'a> {
    cfg: &'a RunConfig,
    params: ProblemParams,
    table: ExponentTable,
    f: ScalarField,
    sols: Vec<Solution>,
    fine: Option<(Vec<Solution>, ScalarField)>,
    catalog: Vec<ScalarField>,
}

impl VerifyContext<'_> {
    fn radii(&self) -> Vec<f64> {
        let mut r = vec![self.table.r1];
        if self.params.beta > 0.0 {
            r.extend([self.table.r2, self.table.r3, self.table.r4]);
        }
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }

    fn run(&self, name: &str) -> Result<Vec<CheckResult>> {
        let eps = self.cfg.identity_eps;
        let pe = self.params.with_eps(eps);
        let mut out = Vec::new();
        match name {
            "lemp4" => {
                for r in [2.0, 3.0, 4.0, 6.0] {
                    out.push(verify::check_lemp4(r, self.cfg.lemp4_samples, self.cfg.seed)?);
                }
            }
            "lemp5" => {
                for u in &self.catalog {
                    out.extend(verify::check_lemp5(u, self.table.r1, self.params.p, eps)?);
                }
            }
            "leme1" => {
                for u in &self.catalog {
                    for &t in &self.cfg.t_values {
                        out.push(verify::check_leme1(u, t, eps, &pe)?);
                    }
                }
            }
            "leme2" => {
                for u in &self.catalog {
                    for &t in self.cfg.t_values.iter().filter(|t| **t >= 0.0) {
                        out.push(verify::check_leme2(u, t, eps, &pe)?);
                    }
                }
            }
            "leme3" => {
                for u in &self.catalog {
                    for r in self.radii() {
                        out.push(verify::check_leme3(u, r, eps)?);
                        out.push(verify::check_s_identity(u, r, eps)?);
                    }
                }
            }
            "prope1" => {
                for u in &self.catalog {
                    out.push(verify::check_prope1(u, &pe, &self.table)?);
                }
            }
            "prope2" => {
                for u in &self.catalog {
                    out.push(verify::check_prope2(u, &pe, &self.table)?);
                }
            }
            "lemb3" => {
                let last = self.sols.last().ok_or_else(|| Error::Config("lemb3 needs a solution".into()))?;
                out.push(verify::check_lemb3(last, &self.f, self.table.t1, &self.params)?);
                if self.params.beta > 0.0 {
                    out.push(verify::check_lemb3(last, &self.f, self.table.t2, &self.params)?);
                }
            }
            other => {
                let th: Theorem = other.parse()?;
                let fine = self.fine.as_ref().map(|(s, f)| (s.as_slice(), f));
                out.push(verify::theorem_ratio(&self.sols, &self.f, &self.params, &self.table, th, fine)?);
            }
        }
        Ok(out)
    }
}

fn catalog_fields(cfg: &RunConfig, grid: &Arc<Grid>) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.catalog_count)
        .map(|_| eval_expr(&Expr::random_catalog(grid.dim(), &mut rng), grid))
        .collect()
}

fn solution_norms(
    norms: &mut BTreeMap<String, f64>,
    u: &ScalarField,
    params: &ProblemParams,
    table: &ExponentTable,
) -> Result<()> {
    norms.insert("u_w1p".into(), w1r_norm(u, params.p)?);
    norms.insert("u_w1q".into(), w1r_norm(u, params.q)?);
    for i in 1..=4 {
        norms.insert(format!("u_nikolskii_seminorm_r{i}"), nikolskii_seminorm(u, table.r(i))?);
    }
    Ok(())
}

fn data_norms(norms: &mut BTreeMap<String, f64>, f: &ScalarField, params: &ProblemParams, table: &ExponentTable) -> Result<()> {
    norms.insert("f_ls".into(), lp_norm(f, params.s)?);
    norms.insert("f_lp_conj".into(), lp_norm(f, params.p / (params.p - 1.0))?);
    norms.insert("f_lq_conj".into(), lp_norm(f, params.q / (params.q - 1.0))?);
    norms.insert("f_lrho".into(), lp_norm(f, table.rho)?);
    if params.sigma < 1.0 {
        norms.insert("f_w_sigma_s".into(), fractional_sobolev_norm(f, params.sigma, params.s)?);
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    let params = cfg.params();
    let table = cfg.table()?;
    for th in cfg.theorems() {
        th.applicable(&table)?;
    }
    if cfg.checks.is_empty() {
        return Err(Error::Config("no checks requested".into()));
    }
    let grid = cfg.grid()?;
    let expr = cfg.expr()?;
    let f = eval_expr(&expr, &grid);
    let theorems = cfg.theorems();
    let needs_solution = cfg.has_check("lemb3") || !theorems.is_empty();
    let mut telemetry = Vec::new();
    let mut sols = Vec::new();
    let mut fine = None;
    if needs_solution {
        sols = continuation_solve(&f, &params, &cfg.solve_config())?;
        telemetry.extend(sols.iter().map(|s| StageTelemetry::of(grid.len(), s)));
        if cfg.refine && !theorems.is_empty() {
            let g2 = cfg.grid_with(2 * cfg.n - 1)?;
            let f2 = eval_expr(&expr, &g2);
            let s2 = continuation_solve(&f2, &params, &cfg.solve_config())?;
            telemetry.extend(s2.iter().map(|s| StageTelemetry::of(g2.len(), s)));
            fine = Some((s2, f2));
        }
    }
    let ctx = VerifyContext {
        cfg,
        params,
        table,
        f,
        sols,
        fine,
        catalog: catalog_fields(cfg, &grid),
    };
    let names: Vec<&str> = CHECK_NAMES.iter().copied().filter(|c| cfg.has_check(c)).collect();
    let results: Vec<Result<Vec<CheckResult>>> = names.par_iter().map(|n| ctx.run(n)).collect();
    let mut checks = Vec::new();
    for r in results {
        checks.extend(r?);
    }
    let mut norms = BTreeMap::new();
    data_norms(&mut norms, &ctx.f, &params, &table)?;
    if let Some(last) = ctx.sols.last() {
        solution_norms(&mut norms, &last.u, &params, &table)?;
    }
    let all_passed = checks.iter().all(|c| c.passed);
    let report = RegularityReport {
        tool: ToolInfo::current(),
        constants_sha256: constants::constants_sha256(),
        config: cfg.clone(),
        exponents: table,
        norms,
        checks,
        telemetry,
        all_passed,
    };
    fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &report)?;
    let failed: Vec<String> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let mut messages = vec![format!(
        "{} checks, {} failed; report written to {}",
        report.checks.len(),
        failed.len(),
        out.join("report.json").display()
    )];
    if failed.is_empty() {
        Ok(CommandOutcome { code: 0, messages })
    } else {
        let mut uniq = failed.clone();
        uniq.dedup();
        messages.push(format!("failed checks: {}", uniq.join(", ")));
        Ok(CommandOutcome { code: 4, messages })
    }
}

#[derive(Debug, Clone)]
struct SweepPoint {
    n: usize,
    eps_min: f64,
    f_scale: f64,
    p: f64,
    q: f64,
    s: f64,
}

#[derive(Debug, Clone, Default)]
struct SweepRow {
    status: String,
    newton_iters: Option<usize>,
    residual: Option<f64>,
    oracle_error: Option<f64>,
    eoc: Option<f64>,
    w1_norm: Option<f64>,
    nikolskii_r1: Option<f64>,
    ratios: BTreeMap<Theorem, (f64, bool)>,
}

fn or_base<T: Clone>(list: &[T], base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

fn sweep_points(cfg: &RunConfig) -> Vec<SweepPoint> {
    let mut pts = Vec::new();
    for &p in &or_base(&cfg.sweep_p, cfg.p) {
        for &q in &or_base(&cfg.sweep_q, cfg.q) {
            for &s in &or_base(&cfg.sweep_s, cfg.s) {
                for &eps_min in &or_base(&cfg.sweep_eps_min, cfg.eps_min) {
                    for &f_scale in &or_base(&cfg.sweep_f_scale, 1.0) {
                        for &n in &or_base(&cfg.sweep_n, cfg.n) {
                            pts.push(SweepPoint { n, eps_min, f_scale, p, q, s });
                        }
                    }
                }
            }
        }
    }
    pts
}

fn sweep_one(cfg: &RunConfig, pt: &SweepPoint) -> SweepRow {
    let mut c = cfg.clone();
    c.n = pt.n;
    c.eps_min = pt.eps_min;
    c.eps_schedule = None;
    c.p = pt.p;
    c.q = pt.q;
    c.s = pt.s;
    let mut row = SweepRow::default();
    let run = || -> Result<SweepRow> {
        c.validate()?;
        let params = c.params();
        let table = c.table()?;
        let grid = c.grid()?;
        let expr = c.expr()?.scaled(pt.f_scale);
        let f = eval_expr(&expr, &grid);
        let (sols, err) = continuation_solve_partial(&f, &params, &c.solve_config());
        if let Some(e) = err {
            return Err(e);
        }
        let last = sols.last().expect("non-empty schedule");
        let mut r = SweepRow {
            status: "ok".into(),
            newton_iters: Some(sols.iter().map(|s| s.newton_iters).sum()),
            residual: Some(last.residual_norm),
            w1_norm: Some(w1r_norm(&last.u, params.p)?),
            nikolskii_r1: Some(nikolskii_seminorm(&last.u, table.r1)?),
            ..Default::default()
        };
        if is_unit_interval(&grid) {
            r.oracle_error = Some(oracle_error(last, &expr, &params)?);
        }
        for th in Theorem::ALL {
            if th.applicable(&table).is_ok() {
                let chk = verify::theorem_ratio(&sols, &f, &params, &table, th, None)?;
                let fin = chk.detail.as_ref().and_then(|d| d["trajectory"].as_array()?.last()?["ratio"].as_f64());
                r.ratios.insert(th, (fin.unwrap_or(f64::NAN), chk.passed));
            }
        }
        Ok(r)
    };
    match run() {
        Ok(r) => row = r,
        Err(e) => row.status = format!("failed: {e}").replace(',', ";"),
    }
    row
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<CommandOutcome> {
    if !cfg.is_sweep() {
        return Err(Error::Config("sweep needs at least one non-empty sweep_* list".into()));
    }
    let pts = sweep_points(cfg);
    let mut rows: Vec<SweepRow> = pts.par_iter().map(|pt| sweep_one(cfg, pt)).collect();
    // convergence order between consecutive mesh sizes with all else equal
    for k in 1..pts.len() {
        let (a, b) = (&pts[k - 1], &pts[k]);
        let same = a.eps_min == b.eps_min && a.f_scale == b.f_scale && a.p == b.p && a.q == b.q && a.s == b.s;
        if let (true, Some(e0), Some(e1)) = (same && a.n != b.n, rows[k - 1].oracle_error, rows[k].oracle_error) {
            let h = |n: usize| 1.0 / (n as f64 - 1.0);
            rows[k].eoc = Some((e0 / e1).ln() / (h(a.n) / h(b.n)).ln());
        }
    }
    let mut csv = SWEEP_COLUMNS.join(",");
    csv.push('\n');
    for (pt, r) in pts.iter().zip(&rows) {
        let mut line = format!(
            "{},{:e},{},{},{},{},{},{},{},{},{},{},{}",
            pt.n,
            pt.eps_min,
            pt.f_scale,
            pt.p,
            pt.q,
            pt.s,
            r.status,
            r.newton_iters.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(r.residual),
            fmt_opt(r.oracle_error),
            r.eoc.map(|v| format!("{v:.4}")).unwrap_or_default(),
            fmt_opt(r.w1_norm),
            fmt_opt(r.nikolskii_r1),
        );
        for th in Theorem::ALL {
            match r.ratios.get(&th) {
                Some((ratio, ok)) => write!(line, ",{ratio:e},{ok}").unwrap(),
                None => line.push_str(",,"),
            }
        }
        csv.push_str(&line);
        csv.push('\n');
    }
    fs::create_dir_all(out)?;
    let path = out.join("sweep.csv");
    fs::write(&path, csv)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    info!("sweep finished: {} points, {failed} failed", rows.len());
    let messages = vec![format!("{} sweep points ({failed} failed) written to {}", rows.len(), path.display())];
    Ok(CommandOutcome { code: if failed == 0 { 0 } else { 3 }, messages })
}

/// Recompute the lemp4 constants and emit them in the pinned-file format.
pub fn cmd_calibrate(out: Option<&Path>) -> Result<()> {
    let mut text = String::from(
        "# 2 x the largest ratio |U-V|^r / |phi(U)-phi(V)|^2 over a collinear scan of\n\
         # magnitudes 1e-3..1e3 (both signs), maximized over eps in {1, 1e-3, 1e-6}.\n\
         # Regenerate with `pqfrac calibrate`.\n[lemp4]\n",
    );
    for r in [2.0, 3.0, 4.0, 6.0] {
        let per = verify::calibrate_lemp4(r);
        for (e, c) in &per {
            info!("r = {r}, eps = {e:e}: {c}");
        }
        let c = per.iter().map(|(_, c)| *c).fold(0.0, f64::max);
        writeln!(text, "{} = {c:?}", constants::key(r)).unwrap();
    }
    match out {
        Some(p) => fs::write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
