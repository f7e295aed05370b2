//! Subcommand implementations. Each writes CSV preceded by a
//! `# config-hash:` line.

use std::fmt::Write as _;
use std::io::Write;

use chibar::chibar::{weights_closed_form, weights_monte_carlo};
use chibar::cone::TransformedCone;
use chibar::gp::{self, GridSpec};
use chibar::linkage::tables;
use chibar::models::{self, lrt, ModelSpec};
use chibar::rng::derive_seed;
use chibar::stats;

use crate::config::RunConfig;
use crate::CliError;

fn fmt(x: f64, digits: usize) -> String {
    let s = format!("{x:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn header(cfg: &RunConfig) -> String {
    format!("# config-hash: {}\n", cfg.hash())
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Main table to `--out` when given, otherwise stdout.
fn emit(cfg: &RunConfig, body: &str) -> Result<(), CliError> {
    let text = header(cfg) + body;
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => write_stdout(&text)?,
    }
    Ok(())
}

/// Summary to stdout and, when `--out` is given, draws to that file.
fn emit_with_draws(
    cfg: &RunConfig,
    summary: &str,
    draws: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    if let Some(p) = &cfg.out {
        let mut buf = header(cfg).into_bytes();
        draws(&mut buf)?;
        std::fs::write(p, buf)?;
    }
    write_stdout(&(header(cfg) + summary))
}

fn load_model(cfg: &RunConfig) -> Result<ModelSpec, CliError> {
    let name = cfg
        .model
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{} needs --model", cfg.command)))?;
    Ok(models::model(name, &cfg.model_config())?)
}

fn grid_for(cfg: &RunConfig, m: &ModelSpec, n: Option<usize>) -> Result<GridSpec, CliError> {
    let grid = match cfg.grid_axes() {
        Some(axes) => {
            let n = n.unwrap_or(axes[0].2);
            m.grid_on(
                &axes
                    .into_iter()
                    .map(|(lo, hi, _)| (lo, hi, n))
                    .collect::<Vec<_>>(),
            )?
        }
        None => m.grid(n.or(cfg.grid.n))?,
    };
    if grid.unmasked().is_empty() {
        return Err(CliError::Config(
            "grid has no points outside the singular set".into(),
        ));
    }
    Ok(grid)
}

pub fn weights(cfg: &RunConfig) -> Result<(), CliError> {
    let mc = cfg.model_config();
    let cone: TransformedCone = match (&cfg.cone, &cfg.model) {
        (Some(c), None) => models::named_cone(c, &mc)?,
        (None, Some(_)) => {
            let m = load_model(cfg)?;
            let t = match &cfg.at {
                Some(t) => t.clone(),
                None => grid_for(cfg, &m, None)?.unmasked_points()[0].to_vec(),
            };
            m.cone_at(&t)?
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --model or --cone, not both".into(),
            ))
        }
        (None, None) => return Err(CliError::Config("weights needs --model or --cone".into())),
    };
    let closed = match cone.delta().n_constraints() {
        0..=2 => Some(weights_closed_form(&cone)?),
        _ => None,
    };
    let sampled = match (&closed, cfg.compare) {
        (Some(_), false) => None,
        _ => Some(weights_monte_carlo(&cone, cfg.reps, cfg.seed)?),
    };
    let d = cfg.digits;
    let mut body = String::new();
    match (&closed, &sampled) {
        (Some(w), None) => {
            body.push_str("j,w\n");
            for (j, x) in w.as_slice().iter().enumerate() {
                writeln!(body, "{j},{}", fmt(*x, d)).unwrap();
            }
        }
        (None, Some(s)) if !cfg.compare => {
            body.push_str("j,w,se\n");
            for (j, (x, se)) in s.weights.as_slice().iter().zip(&s.std_errors).enumerate() {
                writeln!(body, "{j},{},{}", fmt(*x, d), fmt(*se, d)).unwrap();
            }
        }
        (_, Some(s)) => {
            body.push_str("j,closed_form,monte_carlo,se\n");
            for (j, (x, se)) in s.weights.as_slice().iter().zip(&s.std_errors).enumerate() {
                let c = closed
                    .as_ref()
                    .map_or_else(|| "NA".to_string(), |w| fmt(w.get(j), d));
                writeln!(body, "{j},{c},{},{}", fmt(*x, d), fmt(*se, d)).unwrap();
            }
        }
        (None, None) => unreachable!(),
    }
    emit(cfg, &body)
}

fn alphas(cfg: &RunConfig) -> Vec<f64> {
    let mut a = vec![0.10, 0.05, 0.01];
    if !a.contains(&cfg.alpha) {
        a.push(cfg.alpha);
    }
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

pub fn simulate_sup(cfg: &RunConfig) -> Result<(), CliError> {
    let m = load_model(cfg)?;
    let grid = grid_for(cfg, &m, None)?;
    let cones = m.cones(&grid)?;
    let spec = match &cfg.alternative {
        Some(a) if a.v.len() == 1 => m
            .kernel_spec()
            .with_alternative(a.t0.clone(), a.v[0].clone())?,
        Some(_) => {
            return Err(CliError::Config(
                "simulate-sup takes exactly one alternative v".into(),
            ))
        }
        None => m.kernel_spec(),
    };
    let sample = gp::simulate_sup(&spec, &grid, &cones, cfg.reps, cfg.seed)?;
    let mut summary = String::from("alpha,c\n");
    for a in alphas(cfg) {
        writeln!(
            summary,
            "{a},{}",
            fmt(gp::critical_value(&sample, a)?, cfg.digits)
        )
        .unwrap();
    }
    emit_with_draws(cfg, &summary, |w| sample.write_csv(w))
}

pub fn linkage_tables(cfg: &RunConfig) -> Result<(), CliError> {
    let which = cfg.table.as_str();
    if !["information", "spectral", "sib-cousin", "all"].contains(&which) {
        return Err(CliError::Config(format!("unknown table {which:?}")));
    }
    let d = cfg.digits;
    let all = which == "all";
    let mut body = String::new();
    if all || which == "information" {
        if all {
            body.push_str("# information\n");
        }
        body.push_str("type,i11,i12,i22,u11,u12,u21,u22,w2\n");
        for r in tables::information_table()? {
            let (i, u) = (r.information, r.u);
            let vals = [
                i[(0, 0)],
                i[(0, 1)],
                i[(1, 1)],
                u[(0, 0)],
                u[(0, 1)],
                u[(1, 0)],
                u[(1, 1)],
                r.w2,
            ];
            let cells: Vec<String> = vals.iter().map(|x| fmt(*x, d)).collect();
            writeln!(body, "{},{}", r.pedigree_type, cells.join(",")).unwrap();
        }
    }
    if all || which == "spectral" {
        if all {
            body.push_str("\n# spectral\n");
        }
        body.push_str("type,l,k11,k12,k22\n");
        for j in 1..=7 {
            for (l, k) in tables::spectral_row(j)? {
                writeln!(
                    body,
                    "{j},{l},{},{},{}",
                    fmt(k[(0, 0)], d),
                    fmt(k[(0, 1)], d),
                    fmt(k[(1, 1)], d)
                )
                .unwrap();
            }
        }
    }
    if all || which == "sib-cousin" {
        if all {
            body.push_str("\n# sib-cousin\n");
        }
        body.push_str("beta,w2\n");
        let betas: Vec<f64> = (1..=cfg.betas)
            .map(|k| k as f64 / cfg.betas as f64)
            .collect();
        for (b, w) in tables::sib_cousin_w2(&betas)? {
            let w = w.map_or_else(|| "NA".to_string(), |w| fmt(w, d));
            writeln!(body, "{b},{w}").unwrap();
        }
    }
    emit(cfg, &body)
}

pub fn finite_sample(cfg: &RunConfig) -> Result<(), CliError> {
    let m = load_model(cfg)?;
    if m.finite_sample.is_none() {
        return Err(CliError::Config(format!(
            "model {} has no finite-sample engine (use mix1, mix3 or mix3-composite)",
            m.name
        )));
    }
    let grid = grid_for(cfg, &m, None)?;
    let res = lrt::finite_sample(&m, &grid, cfg.n, cfg.reps, cfg.seed, None)?;
    let cones = m.cones(&grid)?;
    let asym = gp::simulate_sup(
        &m.kernel_spec(),
        &grid,
        &cones,
        cfg.asymptotic_reps,
        derive_seed(cfg.seed, 2),
    )?;
    let ks = stats::ks_two_sample(&res.lambda_draws, &asym.draws);
    let q = 1.0 - cfg.alpha;
    let crit_n = stats::empirical_quantile_sorted(&stats::sorted(&res.lambda_draws), q)?;
    let crit_a = gp::critical_value(&asym, cfg.alpha)?;
    let d = cfg.digits;
    let mut s = String::from("statistic,value\n");
    writeln!(s, "model,{}", m.name).unwrap();
    writeln!(s, "n,{}", res.n).unwrap();
    writeln!(s, "reps,{}", res.lambda_draws.len()).unwrap();
    writeln!(s, "grid_points,{}", res.grid_size).unwrap();
    writeln!(s, "asymptotic_reps,{}", asym.len()).unwrap();
    writeln!(s, "ks_distance,{}", fmt(ks, d)).unwrap();
    writeln!(s, "critical_value_finite,{}", fmt(crit_n, d)).unwrap();
    writeln!(s, "critical_value_asymptotic,{}", fmt(crit_a, d)).unwrap();
    writeln!(s, "iterations,{}", res.iterations).unwrap();
    writeln!(s, "failures,{}", res.failures).unwrap();
    writeln!(s, "failure_rate,{}", fmt(res.failure_rate(), d)).unwrap();
    emit_with_draws(cfg, &s, |w| res.write_csv(w))?;
    if res.failure_rate() > cfg.max_failure_rate {
        return Err(CliError::Statistical(format!(
            "optimizer fallback rate {} exceeds {}",
            res.failure_rate(),
            cfg.max_failure_rate
        )));
    }
    Ok(())
}

/// Standard error of the empirical `prob` quantile from the order statistics
/// one binomial SE either side.
fn quantile_se(sorted: &[f64], prob: f64) -> Result<f64, CliError> {
    let h = (prob * (1.0 - prob) / sorted.len() as f64).sqrt();
    let lo = stats::empirical_quantile_sorted(sorted, (prob - h).max(0.0))?;
    let hi = stats::empirical_quantile_sorted(sorted, (prob + h).min(1.0))?;
    Ok(0.5 * (hi - lo))
}

pub fn refine(cfg: &RunConfig) -> Result<(), CliError> {
    let m = load_model(cfg)?;
    let d = cfg.digits;
    let mut body = String::from("grid_n,points,critical_value,std_error\n");
    for &n in &cfg.refine_sizes {
        let grid = grid_for(cfg, &m, Some(n))?;
        let cones = m.cones(&grid)?;
        let sample = gp::simulate_sup(&m.kernel_spec(), &grid, &cones, cfg.reps, cfg.seed)?;
        let sorted = stats::sorted(&sample.draws);
        let c = gp::critical_value(&sample, cfg.alpha)?;
        let se = quantile_se(&sorted, 1.0 - cfg.alpha)?;
        writeln!(
            body,
            "{n},{},{},{}",
            grid.unmasked().len(),
            fmt(c, d),
            fmt(se, d)
        )
        .unwrap();
    }
    emit(cfg, &body)
}

pub fn power(cfg: &RunConfig) -> Result<(), CliError> {
    let m = load_model(cfg)?;
    let alt = cfg.alternative.as_ref().ok_or_else(|| {
        CliError::Config("power needs an [alternative] section with t0 and v".into())
    })?;
    let grid = grid_for(cfg, &m, None)?;
    let cones = m.cones(&grid)?;
    let (crit, curve) = gp::power_curve(
        &m.kernel_spec(),
        &grid,
        &cones,
        &alt.t0,
        &alt.v,
        cfg.alpha,
        cfg.reps,
        cfg.seed,
    )?;
    let d = cfg.digits;
    let mut body = String::new();
    let v_cols: Vec<String> = (1..=m.p).map(|i| format!("v{i}")).collect();
    writeln!(body, "{},power,std_error,critical_value", v_cols.join(",")).unwrap();
    for pt in curve {
        let v: Vec<String> = pt.v.iter().map(|x| x.to_string()).collect();
        writeln!(
            body,
            "{},{},{},{}",
            v.join(","),
            fmt(pt.power, d),
            fmt(pt.std_error, d),
            fmt(crit, d)
        )
        .unwrap();
    }
    emit(cfg, &body)
}
