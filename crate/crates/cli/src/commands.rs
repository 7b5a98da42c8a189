//! Parameter plans for each subcommand and their execution.

use std::path::Path;

use anyhow::Context;
use kslab_core::config::{
    centroid, perturbed, polygon, polygon_with_center, residual_max, solve_asymmetric5, solve_line, solve_newton,
    NewtonOptions, PointConfig,
};
use kslab_core::corrections::{solve_g2, solve_q422, solve_q423, width_law_dilation_rate, CorrectionParams};
use kslab_core::epsilon::{
    constants_from_ab, cos2_match_ratio, integrate_full, integrate_simplified, simplified_errors, EpsilonTrajectory,
    MatchedConstants,
};
use kslab_core::inner::{wronskian_check, FundamentalSystem, InnerGrid};
use kslab_core::outer::{refine, LevelSolution, NodeKind, OuterStudy};
use kslab_core::Check;
use serde_json::{json, Value};

use crate::params::Resolver;
use crate::report::{CheckRow, Report, Table};
use crate::{Command, Failure, Family, Format};

pub struct ConfigsPlan {
    family: Family,
    n: usize,
    seed: Option<PointConfig>,
}

pub struct OuterPlan {
    d: [f64; 2],
    delta: f64,
    r_outer: f64,
    levels: u32,
}

pub struct EpsilonPlan {
    a: f64,
    b: f64,
    tau0: f64,
    tau_max: f64,
    eps0: f64,
}

pub struct CorrectionsPlan {
    eps: f64,
    tau: f64,
    a: f64,
}

pub enum Plan {
    Configs(ConfigsPlan),
    Modes(Vec<u32>),
    Corrections(CorrectionsPlan),
    Outer(OuterPlan),
    Epsilon(EpsilonPlan),
    Pipeline { full: bool },
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

/// `"3"`, `"2..4"` (inclusive) or `"2,4"`.
fn parse_indices(s: &str) -> Result<Vec<u32>, Failure> {
    let bad = || usage(format!("--L expects an index, a range a..b or a list, got {s:?}"));
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let ls: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
        (a..=b).collect()
    } else {
        s.split(',').map(parse).collect::<Result<_, _>>()?
    };
    if ls.is_empty() || ls.iter().any(|&l| l < 2) {
        return Err(usage(format!("--L indices must be >= 2, got {s:?}")));
    }
    Ok(ls)
}

/// A seed file holds a point list directly or inside an earlier report.
fn read_points(path: &Path) -> Result<PointConfig, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let inner = if v.get("points").is_some() {
        v
    } else {
        v["result"].clone()
    };
    let c: PointConfig = serde_json::from_value(inner).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(PointConfig::new(c.points)?)
}

fn read_outer_constants(path: &Path) -> Result<(f64, f64), Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let get = |k: &str| {
        v["result"][k]
            .as_f64()
            .ok_or_else(|| usage(format!("{} has no numeric result.{k}", path.display())))
    };
    Ok((get("A")?, get("B")?))
}

pub fn plan(cmd: &Command, format: Format, r: &mut Resolver) -> Result<Plan, Failure> {
    Ok(match cmd {
        Command::Configs { family, n, seed_file } => {
            let family = r.get("family", *family, Family::Polygon)?;
            let seed_path = r.get_opt("seed-file", seed_file.clone())?;
            let seed = match seed_path {
                Some(p) if family == Family::Newton => Some(read_points(&p)?),
                Some(_) => return Err(usage("--seed-file only applies to --family newton")),
                None => None,
            };
            let default_n = match (&seed, family) {
                (Some(s), _) => s.n(),
                (None, Family::Asym5) => 5,
                _ => 4,
            };
            let n = r.get("n", *n, default_n)?;
            if n < 2 {
                return Err(usage(format!("--n must be at least 2, got {n}")));
            }
            if family == Family::Center && n < 3 {
                return Err(usage("--family center needs --n >= 3"));
            }
            if family == Family::Asym5 && n != 5 {
                return Err(usage("--family asym5 has exactly five peaks"));
            }
            if seed.as_ref().is_some_and(|s| s.n() != n) {
                return Err(usage("--n disagrees with the number of seed points"));
            }
            Plan::Configs(ConfigsPlan { family, n, seed })
        }
        Command::Modes { l } => {
            let indices = r.get("L", l.clone(), "2..4".to_string())?;
            Plan::Modes(parse_indices(&indices)?)
        }
        Command::Corrections { eps, tau, a } => Plan::Corrections(CorrectionsPlan {
            eps: positive("eps", r.get("eps", *eps, 1e-2)?)?,
            tau: positive("tau", r.get("tau", *tau, 100.0)?)?,
            a: r.get("A", *a, -0.95)?,
        }),
        Command::Outer {
            d1,
            d2,
            delta,
            r_outer,
            levels,
        } => {
            let plan = OuterPlan {
                d: [r.get("d1", *d1, 8.0)?, r.get("d2", *d2, 8.0)?],
                delta: r.get("delta", *delta, 0.05)?,
                r_outer: r.get("R", *r_outer, 20.0)?,
                levels: r.get("levels", *levels, 3)?,
            };
            if !(1..=5).contains(&plan.levels) {
                return Err(usage(format!("--levels must lie in 1..=5, got {}", plan.levels)));
            }
            Plan::Outer(plan)
        }
        Command::Epsilon {
            a,
            b,
            tau_max,
            tau0,
            eps0,
            from_outer,
        } => {
            let from = r.get_opt("from-outer", from_outer.clone())?;
            let (fa, fb) = match &from {
                Some(p) => {
                    let (x, y) = read_outer_constants(p)?;
                    (Some(x), Some(y))
                }
                None => (None, None),
            };
            let plan = EpsilonPlan {
                a: r.get("A", a.or(fa), -0.95)?,
                b: r.get("B", b.or(fb), 0.0)?,
                tau_max: r.get("tau-max", *tau_max, 1e6)?,
                tau0: positive("tau0", r.get("tau0", *tau0, 10.0)?)?,
                eps0: positive("eps0", r.get("eps0", *eps0, 0.05)?)?,
            };
            if !(plan.tau_max > plan.tau0) {
                return Err(usage("--tau-max must exceed --tau0"));
            }
            Plan::Epsilon(plan)
        }
        Command::Pipeline { full } => {
            if format == Format::Csv {
                return Err(usage("pipeline writes JSON only"));
            }
            let full = r.get("full", full.then_some(true), false)?;
            r.note("outer-levels", &if full { 3 } else { 2 });
            Plan::Pipeline { full }
        }
    })
}

pub fn execute(plan: &Plan) -> Result<Report, Failure> {
    match plan {
        Plan::Configs(p) => configs(p),
        Plan::Modes(ls) => {
            let systems = systems(ls)?;
            let (result, checks) = modes_summary(&systems);
            Ok(Report {
                result,
                checks,
                table: Some(modes_table(&systems)),
            })
        }
        Plan::Corrections(p) => corrections(p),
        Plan::Outer(p) => {
            let (study, finest) = refine(p.delta, p.r_outer, p.levels, p.d)?;
            let (result, checks) = outer_summary(&study);
            Ok(Report {
                result,
                checks,
                table: Some(field_table(&finest)),
            })
        }
        Plan::Epsilon(p) => {
            let run = epsilon_run(p)?;
            Ok(Report {
                result: run.summary,
                checks: run.checks,
                table: Some(run.table),
            })
        }
        Plan::Pipeline { full } => pipeline(*full),
    }
}

fn configs(p: &ConfigsPlan) -> Result<Report, Failure> {
    let n = p.n;
    let ring_radius = 2.0 * ((n - 1) as f64).sqrt();
    let cfg = match p.family {
        Family::Line => solve_line(n)?.to_points(),
        Family::Polygon => polygon(n)?,
        Family::Center => polygon_with_center(n - 1)?,
        Family::Asym5 => solve_asymmetric5()?.1,
        Family::Newton => {
            let seed = match &p.seed {
                Some(s) => s.clone(),
                None => perturbed(&polygon(n)?, 0.01),
            };
            solve_newton(&seed, &NewtonOptions::default())?
        }
    };
    let res = residual_max(&cfg)?;
    let c = centroid(&cfg);
    let mut checks = vec![
        CheckRow::at_most("residual_max", res, 1e-10),
        CheckRow::at_most("centroid", c[0].hypot(c[1]), 1e-10),
    ];
    let mut result = json!({
        "family": p.family,
        "n": n,
        "points": cfg.points,
        "residual_max": res,
        "centroid": c,
    });
    let polygon_like = matches!(p.family, Family::Polygon) || (p.family == Family::Newton && p.seed.is_none());
    if polygon_like {
        let radius = cfg
            .points
            .iter()
            .map(|q| (q[0] - c[0]).hypot(q[1] - c[1]))
            .fold(0.0, f64::max);
        result["circumradius"] = json!(radius);
        checks.push(CheckRow::from_check(&Check::absolute(
            "circumradius 2 sqrt(N-1)",
            ring_radius,
            radius,
            1e-8,
        )));
    }
    let rows = cfg.points.iter().map(|q| vec![q[0], q[1]]).collect();
    Ok(Report {
        result,
        checks,
        table: Some(Table {
            header: vec!["x", "y"],
            rows,
        }),
    })
}

fn systems(ls: &[u32]) -> Result<Vec<FundamentalSystem>, Failure> {
    ls.iter()
        .map(|&l| FundamentalSystem::new(l, InnerGrid::default()).map_err(Failure::from))
        .collect()
}

fn wronskian_error(fs: &FundamentalSystem) -> f64 {
    (0..=20)
        .map(|k| {
            let r = 10f64.powf(k as f64 / 20.0);
            match wronskian_check(fs, r) {
                Ok((num, closed)) => (num / closed - 1.0).abs(),
                Err(_) => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

fn modes_summary(systems: &[FundamentalSystem]) -> (Value, Vec<CheckRow>) {
    let mut checks = Vec::new();
    let mut out = Vec::new();
    for fs in systems {
        let c = fs.constants;
        let w = wronskian_error(fs);
        let tag = format!("L={}", c.l);
        checks.push(CheckRow::at_most("|C K - L/sqrt(L^2+4)|", c.ck_error(), 1e-4).prefixed(&tag));
        checks.push(CheckRow::at_most("Wronskian max relative error on [1,10]", w, 1e-5).prefixed(&tag));
        checks.push(CheckRow::reported("kappa", c.kappa_l).prefixed(&tag));
        out.push(json!({
            "L": c.l,
            "K_L": c.k_l,
            "C_L": c.c_l,
            "kappa_L": c.kappa_l,
            "kappa_err": c.mode4.kappa_err,
            "CK_identity_error": c.ck_error(),
            "wronskian_max_rel_err": w,
            "fits": { "mode3": c.mode3, "gbeta": c.gbeta, "mode4": c.mode4 },
        }));
    }
    (Value::Array(out), checks)
}

const MODE_STRIDE: usize = 40;

fn modes_table(systems: &[FundamentalSystem]) -> Table {
    let mut rows = Vec::new();
    for fs in systems {
        for (k, mode) in fs.modes.iter().enumerate() {
            for (i, m) in mode.iter().enumerate().step_by(MODE_STRIDE) {
                rows.push(vec![fs.l as f64, (k + 1) as f64, fs.r[i], m[0], m[1], m[2], m[3]]);
            }
        }
    }
    Table {
        header: vec!["L", "mode", "r", "psi", "dpsi", "omega", "domega"],
        rows,
    }
}

fn width_alpha(a: f64) -> Result<f64, Failure> {
    Ok(constants_from_ab(a, 0.0)?.alpha)
}

fn corrections_summary(
    p: &CorrectionParams,
    alpha: f64,
    tau: f64,
    fs2: &FundamentalSystem,
    fs4: &FundamentalSystem,
) -> Result<(Value, Vec<CheckRow>, Table), Failure> {
    let q422 = solve_q422(p, fs2)?;
    let q423 = solve_q423(p, fs4)?;
    let g2 = solve_g2(p, width_law_dilation_rate(p.eps, tau, alpha), &fs2.grid)?;
    let mut checks = Vec::new();
    if let Some(c) = &q422.checks {
        for x in [
            &c.b1_small_r,
            &c.b1_log_coefficient,
            &c.constant_term,
            &c.v_log_coefficient,
        ] {
            checks.push(CheckRow::from_check(x));
        }
    }
    if let Some(c) = &q423.checks {
        checks.push(CheckRow::from_check(&c.c1_tail));
        checks.push(CheckRow::from_check(&c.v_quartic));
    }
    for c in [&g2.log_coefficient, &g2.quadratic_coefficient].into_iter().flatten() {
        checks.push(CheckRow::from_check(c));
    }
    checks.push(CheckRow::reported("cos 2θ growing content b42", q422.b42));
    checks.push(CheckRow::reported("c1(∞)", q423.c1_inf));
    checks.push(CheckRow::reported("c3(∞)", q423.c3_inf));
    let result = json!({
        "params": p,
        "alpha": alpha,
        "cos2": { "b42": q422.b42, "ck_product": q422.ck_product, "residual": q422.residual },
        "cos4": { "c1_inf": q423.c1_inf, "c3_inf": q423.c3_inf, "residual": q423.residual },
        "radial": { "residual": g2.residual },
    });
    let rows = (0..q422.q.r.len())
        .step_by(MODE_STRIDE / 2)
        .map(|i| {
            vec![
                q422.q.r[i],
                q422.q.values[i],
                q422.v.values[i],
                q423.q.values[i],
                q423.v.values[i],
                g2.g2.values[i],
            ]
        })
        .collect();
    let table = Table {
        header: vec!["r", "q422", "v422", "q423", "v423", "g2"],
        rows,
    };
    Ok((result, checks, table))
}

fn corrections(p: &CorrectionsPlan) -> Result<Report, Failure> {
    let alpha = width_alpha(p.a)?;
    let params = CorrectionParams::on_width_law(p.eps, p.tau, alpha)?;
    let s = systems(&[2, 4])?;
    let (result, checks, table) = corrections_summary(&params, alpha, p.tau, &s[0], &s[1])?;
    Ok(Report {
        result,
        checks,
        table: Some(table),
    })
}

fn outer_summary(s: &OuterStudy) -> (Value, Vec<CheckRow>) {
    let mut checks = Vec::new();
    // the only stated range is for equal weights 8
    if s.d == [8.0, 8.0] {
        checks.push(CheckRow::inside("A in (-1, -0.9)", s.a_estimate, -1.0, -0.9));
    } else {
        checks.push(CheckRow::reported("A", s.a_estimate));
    }
    checks.push(CheckRow::at_most("A refinement error bar", s.a_err, 0.02));
    checks.push(CheckRow::at_most(
        "A peak asymmetry within error bar",
        s.a_peak_gap.abs(),
        s.a_err,
    ));
    checks.push(CheckRow::from_check(&Check::relative(
        "probe decay exponent",
        5f64.sqrt() - 2.0,
        s.decay_exponent,
        0.1,
    )));
    checks.push(CheckRow::reported("B", s.b_estimate));
    match s.b_convergence_ratio {
        // second order under halving shrinks differences fourfold; allow half of that
        Some(r) => checks.push(CheckRow::at_least("B successive-difference ratio", r, 2.0)),
        None => checks.push(CheckRow::reported("B error bar", s.b_err)),
    }
    checks.push(CheckRow::at_most(
        "B peak asymmetry within error bar",
        s.b_peak_gap.abs(),
        s.b_err,
    ));
    let result = json!({
        "A": s.a_estimate,
        "A_err": s.a_err,
        "B": s.b_estimate,
        "B_err": s.b_err,
        "refinement_history": s.refinement_history,
        "symmetry_err": s.symmetry_err,
        "decay_exponent": s.decay_exponent,
        "convergence_ratio": { "A": s.a_convergence_ratio, "B": s.b_convergence_ratio },
        "peak_gap": { "A": s.a_peak_gap, "B": s.b_peak_gap },
        "d": s.d,
        "levels": s.levels,
    });
    (result, checks)
}

fn field_table(sol: &LevelSolution) -> Table {
    let rows = (0..sol.grid.len())
        .filter(|&i| sol.grid.kind[i] != NodeKind::Inactive)
        .map(|i| vec![sol.grid.xy[i][0], sol.grid.xy[i][1], sol.omega(i)])
        .collect();
    Table {
        header: vec!["x", "y", "omega"],
        rows,
    }
}

struct EpsilonRun {
    summary: Value,
    checks: Vec<CheckRow>,
    table: Table,
}

const COMPARE_TAU: f64 = 1e5;

fn epsilon_run(p: &EpsilonPlan) -> Result<EpsilonRun, Failure> {
    let c: MatchedConstants = constants_from_ab(p.a, p.b)?;
    let simp = integrate_simplified(&c, p.eps0, p.tau0, p.tau_max)?;
    let (closed_err, integral_err) = simplified_errors(&c, &simp);
    let full: EpsilonTrajectory = integrate_full(&c, p.eps0, p.tau0, p.tau_max)?;
    let mut checks = vec![
        CheckRow::at_most("simplified first integral drift", integral_err, 1e-8),
        CheckRow::from_check(&Check::relative("fitted alpha", c.alpha, simp.fitted_alpha, 5e-3)),
    ];
    let gap = match (full.log_eps_at(COMPARE_TAU), simp.log_eps_at(COMPARE_TAU)) {
        (Some(f), Some(s)) => {
            checks.push(CheckRow::from_check(&Check::relative(
                "full vs simplified log eps at 1e5",
                s,
                f,
                0.02,
            )));
            Some(((f - s) / s).abs())
        }
        _ => None,
    };
    checks.push(CheckRow::inside("alpha in (3.82, 4.02)", c.alpha, 3.82, 4.02));
    checks.push(CheckRow::reported("beta fit", simp.fitted_beta));
    let summary = json!({
        "constants": c,
        "alpha_exact": c.alpha,
        "alpha_fit": simp.fitted_alpha,
        "beta_exact": c.beta,
        "beta_fit": simp.fitted_beta,
        "beta_intercept": simp.beta_intercept,
        "fit_residual": simp.fit_residual,
        "first_integral_err": integral_err,
        "closed_form_err": closed_err,
        "full": {
            "alpha_fit": full.fitted_alpha,
            "beta_fit": full.fitted_beta,
            "log_eps_rel_gap_at_1e5": gap,
            "final": full.samples.last(),
        },
    });
    let rows = full
        .samples
        .iter()
        .zip(&simp.samples)
        .map(|(f, s)| vec![f.tau, f.eps, f.log_eps, f.h_scaled, s.log_eps])
        .collect();
    Ok(EpsilonRun {
        summary,
        checks,
        table: Table {
            header: vec!["tau", "eps", "log_eps", "h_over_eps2", "log_eps_simplified"],
            rows,
        },
    })
}

fn pipeline(full: bool) -> Result<Report, Failure> {
    let mut checks = Vec::new();
    let levels = if full { 3 } else { 2 };
    let (study, _) = refine(0.05, 20.0, levels, [8.0, 8.0])?;
    let (outer, c) = outer_summary(&study);
    checks.extend(c.into_iter().map(|r| r.prefixed("outer")));

    let eps = epsilon_run(&EpsilonPlan {
        a: study.a_estimate,
        b: study.b_estimate,
        tau0: 10.0,
        tau_max: if full { 1e6 } else { 1e5 },
        eps0: 0.05,
    })?;
    checks.extend(eps.checks.into_iter().map(|r| r.prefixed("epsilon")));

    let ls: &[u32] = if full { &[2, 3, 4] } else { &[2, 4] };
    let s = systems(ls)?;
    let (modes, c) = modes_summary(&s);
    checks.extend(c.into_iter().map(|r| r.prefixed("modes")));
    let fs2 = &s[0];
    let fs4 = s.last().expect("L=4 requested");

    let alpha = width_alpha(study.a_estimate)?;
    let tau = 100.0;
    let params = CorrectionParams::on_width_law(1e-2, tau, alpha)?;
    let (corr, c, _) = corrections_summary(&params, alpha, tau, fs2, fs4)?;
    checks.extend(c.into_iter().map(|r| r.prefixed("corrections")));

    let ck2 = fs2.constants.c_l * fs2.constants.k_l;
    let ratio = cos2_match_ratio(ck2);
    checks.push(CheckRow::from_check(&Check::absolute("sqrt(2) C2 K2", 1.0, ratio, 2e-4)).prefixed("coherence"));

    let result = json!({
        "outer": outer,
        "epsilon": { "inputs": { "A": "outer.A", "B": "outer.B" }, "report": eps.summary },
        "modes": modes,
        "corrections": { "inputs": { "modes": "modes[L=2], modes[L=4]", "alpha": "epsilon.report.alpha_exact" }, "report": corr },
        "coherence": { "C2K2": ck2, "sqrt2_C2K2": ratio },
    });
    Ok(Report {
        result,
        checks,
        table: None,
    })
}
