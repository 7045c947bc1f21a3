//! One function per subcommand. Each returns whether its acceptance checks passed.

use crate::config::RunConfig;
use crate::emit::{series_plot, Csv, Emitter};
use crate::error::CliError;
use msqg::chaos::{adjoint_check, dissipativity_form};
use msqg::harness::{
    run_galerkin_ensemble, run_vortex_ensemble, scaling_limit_study, sum_identity_residual,
};
use msqg::modes::modes_in_ball;
use msqg::rng::{stream, StreamRole};
use msqg::theta::{key_identity_matrix, stratonovich_correction, theta_power};
use msqg::{CylinderFunction, Kernel, KernelTable, TestFunction};
use rand::Rng;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::sync::Arc;

pub fn vortex_sim(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let vb = &cfg.vortex;
    let vcfg = vb.vortex_config();
    vcfg.validate()?;
    let theta = vb.theta()?;
    let obs: Vec<TestFunction> = vb
        .observables
        .iter()
        .map(|l| TestFunction::fourier(*l))
        .collect();
    let paths = run_vortex_ensemble(&vcfg, &theta, &obs, cfg.replicas, cfg.seed_root, false)?;
    if !obs.is_empty() {
        let mut csv = Csv::new(&["replica", "t", "observable", "k1", "k2", "re", "im"]);
        for (r, p) in paths.iter().enumerate() {
            for (o, l) in vb.observables.iter().enumerate() {
                for (t, z) in p.times.iter().zip(&p.series[o]) {
                    csv.row(&[&r, t, &o, &l.k1, &l.k2, &z.re, &z.im]);
                }
            }
        }
        em.write("series.csv", &csv.into_string())?;
        em.write(
            "series.gp",
            &series_plot("series.csv", 3, 2, 6, obs.len(), "Re <xi_t, e_l>"),
        )?;
    }
    let guard: Vec<Value> = paths
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.guard_events.is_empty())
        .map(|(r, p)| json!({ "replica": r, "events": p.guard_events }))
        .collect();
    let min_distance = paths
        .iter()
        .map(|p| p.min_distance)
        .fold(f64::INFINITY, f64::min);
    let summary = json!({
        "theta_norm2": theta.norm2(),
        "kernel": vcfg.kernel()?.describe(),
        "min_distance": min_distance,
        "guard_event_count": paths.iter().map(|p| p.guard_events.len()).sum::<usize>(),
    });
    Ok((true, Value::Array(guard), summary))
}

pub fn galerkin_sim(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let g = &cfg.galerkin;
    let paths = run_galerkin_ensemble(g, cfg.replicas, cfg.seed_root)?;
    if !g.record_modes.is_empty() {
        let mut csv = Csv::new(&["replica", "t", "mode", "k1", "k2", "re", "im"]);
        for (r, p) in paths.iter().enumerate() {
            for (o, l) in p.modes.iter().enumerate() {
                for (t, z) in p.times.iter().zip(&p.series[o]) {
                    csv.row(&[&r, t, &o, &l.k1, &l.k2, &z.re, &z.im]);
                }
            }
        }
        em.write("series.csv", &csv.into_string())?;
        em.write(
            "series.gp",
            &series_plot(
                "series.csv",
                3,
                2,
                6,
                g.record_modes.len(),
                "Re <xi_t, e_l>",
            ),
        )?;
    }
    let summary = json!({ "modes": g.record_modes, "steps": (g.t_final / g.dt).round() });
    Ok((true, Value::Array(vec![]), summary))
}

pub fn scaling_study(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let rep = scaling_limit_study(&cfg.scaling)?;
    let level = 0.01 / rep.rows.len() as f64;
    let marginal_ok = rep.rows.iter().all(|r| r.marginal.p_value > level);
    let mut csv = Csv::new(&[
        "N",
        "theta_norm",
        "joint_distance",
        "joint_p",
        "marginal_distance",
        "marginal_p",
        "correction_rms",
        "guard_events",
    ]);
    for r in &rep.rows {
        csv.row(&[
            &r.n,
            &r.theta_norm,
            &r.joint.distance,
            &r.joint.p_value,
            &r.marginal.distance,
            &r.marginal.p_value,
            &r.correction_rms,
            &r.guard_events,
        ]);
    }
    em.write("scaling.csv", &csv.into_string())?;
    em.write_json("scaling.json", &rep)?;
    em.write(
        "scaling.gp",
        "set datafile separator ','\nset logscale xy\nset xlabel 'N'\nset key top right\n\
         plot 'scaling.csv' every ::1 using 1:3 with linespoints title 'joint energy distance', \\\n  \
         '' every ::1 using 1:5 with linespoints title 'marginal energy distance'\n",
    )?;
    let summary = json!({
        "joint_trend": rep.joint_trend,
        "marginal_level": level,
        "marginal_ok": marginal_ok,
        "correction_slope": rep.correction_slope,
    });
    let guard = json!(rep
        .rows
        .iter()
        .map(|r| json!({ "N": r.n, "count": r.guard_events }))
        .collect::<Vec<_>>());
    Ok((rep.joint_trend && marginal_ok, guard, summary))
}

pub fn chaos_audit(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let c = &cfg.chaos;
    let mut csv = Csv::new(&["check", "n", "rows", "cols", "residual"]);
    let mut adj_worst = 0.0f64;
    let mut adjoint = Vec::new();
    for n in 1..=c.n_max {
        let r = adjoint_check(n, c.galerkin_m, c.epsilon, c.m_modes)?;
        adj_worst = adj_worst.max(r.residual);
        csv.row(&[&"adjoint", &n, &r.rows, &r.cols, &r.residual]);
        adjoint.push(r);
    }
    let mut rng = stream(cfg.seed_root, 0, StreamRole::Aux);
    let mut diss_worst = 0.0f64;
    let mut dissipativity = Vec::new();
    for i in 0..c.samples {
        let degree = rng.random_range(1..=c.degree.max(1));
        let f = CylinderFunction::random_real(&mut rng, degree, c.m_modes, 3);
        let d = dissipativity_form(&f, c.galerkin_m, c.epsilon)?;
        diss_worst = diss_worst.max(d.rel_residual);
        csv.row(&[&"dissipativity", &i, &degree, &0, &d.rel_residual]);
        dissipativity.push(d);
    }
    em.write("audit.csv", &csv.into_string())?;
    em.write_json(
        "audit.json",
        &json!({ "adjoint": adjoint, "dissipativity": dissipativity }),
    )?;
    let pass = adj_worst <= c.tolerance && diss_worst <= c.tolerance;
    let summary = json!({
        "adjoint_max_residual": adj_worst,
        "dissipativity_max_rel_residual": diss_worst,
        "tolerance": c.tolerance,
    });
    Ok((pass, Value::Array(vec![]), summary))
}

pub fn kernel_table(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let k = &cfg.kernel;
    let table = KernelTable::new(k.epsilon, k.kernel_cutoff, k.kernel_grid)?;
    em.write("kernel.csv", &table.to_csv())?;
    em.write(
        "kernel.gp",
        "set datafile separator ','\nset size square\nset xlabel 'x1'\nset ylabel 'x2'\nset logscale cb\n\
         plot 'kernel.csv' every ::1 using 1:2:(sqrt($3**2 + $4**2)) with image title '|K|'\n",
    )?;
    let summary = Kernel::Table(Arc::new(table)).describe();
    Ok((true, Value::Array(vec![]), summary))
}

pub fn identity_check(cfg: &RunConfig, em: &mut Emitter) -> Result<(bool, Value, Value), CliError> {
    let id = &cfg.identity;
    let mut rng = stream(cfg.seed_root, 0, StreamRole::Aux);
    let ls = modes_in_ball(id.max_l);
    let mut csv = Csv::new(&[
        "gamma",
        "N",
        "key_identity",
        "stratonovich",
        "sum_identity_rel",
    ]);
    let (mut key_w, mut strat_w, mut sum_w) = (0.0f64, 0.0f64, 0.0f64);
    for &gamma in &id.gammas {
        for n in 1..=id.max_cutoff {
            let th = theta_power(gamma, n)?;
            let half = 0.5 * th.norm2();
            let (mut key, mut strat) = (0.0f64, 0.0f64);
            for _ in 0..id.points {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let m = key_identity_matrix(&th, x)?;
                for i in 0..2 {
                    for j in 0..2 {
                        let target = if i == j { half } else { 0.0 };
                        key = key.max((m.matrix[i][j] - target).abs());
                    }
                }
                key = key.max(m.max_imag);
                let s = stratonovich_correction(&th, x);
                strat = strat.max(s[0].norm()).max(s[1].norm());
            }
            let sum = ls
                .iter()
                .map(|&l| sum_identity_residual(&th, l) / (0.5 * l.norm2() as f64 * th.norm2()))
                .fold(0.0f64, f64::max);
            csv.row(&[&gamma, &n, &key, &strat, &sum]);
            key_w = key_w.max(key);
            strat_w = strat_w.max(strat);
            sum_w = sum_w.max(sum);
        }
    }
    em.write("identity.csv", &csv.into_string())?;
    let pass = key_w <= id.tolerance && strat_w <= id.tolerance && sum_w <= id.tolerance;
    let summary = json!({
        "key_identity_max_residual": key_w,
        "stratonovich_max_residual": strat_w,
        "sum_identity_max_rel_residual": sum_w,
        "tolerance": id.tolerance,
    });
    Ok((pass, Value::Array(vec![]), summary))
}

pub type Runner = fn(&RunConfig, &mut Emitter) -> Result<(bool, Value, Value), CliError>;

/// Run one subcommand and write its manifest; returns `(pass, manifest path)`.
pub fn dispatch(
    name: &str,
    run: Runner,
    cfg: &RunConfig,
    out: PathBuf,
) -> Result<(bool, PathBuf), CliError> {
    let mut em = Emitter::new(&out.join(name))?;
    let (pass, guard, summary) = run(cfg, &mut em)?;
    let manifest = em.finish(name, cfg, pass, guard, summary)?;
    Ok((pass, manifest))
}
