//! Subcommand implementations. Each returns the process exit code on the
//! success path; operational errors bubble up as `vilab::Error` and are
//! mapped to exit codes in `main`.

use crate::config::{Effective, SweepKind};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use vilab::assembly::{assemble_template, ProblemTemplate};
use vilab::control::{minimize_cost, ControlProblem};
use vilab::convergence::{fit_rate, h_sweep_control, h_sweep_state, SweepColumn, SweepTable};
use vilab::error::{Error, Result};
use vilab::grid::{build_grid, Grid, Role};
use vilab::report::{
    summarize_reports, write_control_csv, write_header_block, write_reports_csv, write_vector_csv,
};
use vilab::solver::{solve_vi, write_solution_csv};
use vilab::suite::{battery_constants, run_checks, tally, CHECK_NAMES};
use vilab::MassKind;

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    let path = dir.join(name);
    let f = File::create(&path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn build(eff: &Effective) -> Result<(Grid, ProblemTemplate, Vec<f64>)> {
    let grid = build_grid(eff.dim, eff.nodes_per_axis, &eff.gamma1)?;
    let g = eff.g.evaluate(&grid, Role::Control);
    let b = eff.b.evaluate(&grid, Role::TraceData);
    let q = eff.q.evaluate(&grid, Role::FluxData);
    let tpl = assemble_template(&grid, &q, &b, eff.mode, MassKind::Consistent)?;
    Ok((grid, tpl, g.values))
}

pub fn run_solve(eff: &Effective, dump_matrices: bool) -> Result<i32> {
    let (grid, tpl, g) = build(eff)?;
    let sol = solve_vi(&tpl, &g, &eff.solver)?;

    let mut w = out_file(&eff.out, "solution.csv")?;
    write_header_block(&mut w, eff.echo())?;
    write_solution_csv(&tpl, &sol, &mut w)?;
    w.flush()?;

    let mut gw = out_file(&eff.out, "grid.json")?;
    let echo_json: serde_json::Map<String, serde_json::Value> = eff
        .echo()
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let doc = serde_json::json!({ "config": echo_json, "grid": grid.to_json() });
    writeln!(
        gw,
        "{}",
        serde_json::to_string_pretty(&doc).expect("grid json")
    )?;
    gw.flush()?;

    if dump_matrices {
        for (name, m) in [
            ("stiffness.coo", &tpl.stiffness),
            ("mass_h.coo", &tpl.mass_h),
            ("mass_v.coo", &tpl.mass_v),
            ("operative.coo", tpl.operative()),
        ] {
            let mut mw = out_file(&eff.out, name)?;
            m.write_coo(&mut mw)?;
            mw.flush()?;
        }
        let mut cw = out_file(&eff.out, "boundary_mass.coo")?;
        for (i, v) in tpl.boundary_mass.iter().enumerate() {
            if *v != 0.0 {
                writeln!(cw, "{i} {i} {v:.17e}")?;
            }
        }
        cw.flush()?;
    }

    println!(
        "solved {} ({} nodes, {}): {} iterations, complementarity {:.3e}, stationarity {:.3e}",
        eff.mode.label(),
        grid.node_count(),
        sol.solver_id.label(),
        sol.iterations,
        sol.residual_complementarity,
        sol.residual_stationarity
    );
    println!("wrote {}", eff.out.join("solution.csv").display());
    Ok(0)
}

pub fn run_check(eff: &Effective, names: &[String]) -> Result<i32> {
    let selected: Vec<&str> = if names.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        names.iter().map(|s| s.as_str()).collect()
    };
    let scfg = eff.suite_config();
    let reports = run_checks(&selected, &scfg)?;

    let mut header = eff.echo().to_vec();
    header.push(("checks.selected".into(), selected.join(",")));
    for (k, v) in battery_constants(&scfg)? {
        header.push((k, format!("{v:.12e}")));
    }

    let mut w = out_file(&eff.out, "checks.csv")?;
    write_reports_csv(&mut w, &header, &reports)?;
    w.flush()?;

    let summary = summarize_reports(&reports);
    print!("{summary}");
    let (total, failed) = tally(&reports);
    println!("{}/{} report rows passed", total - failed, total);
    println!("wrote {}", eff.out.join("checks.csv").display());
    Ok(if failed == 0 { 0 } else { 2 })
}

pub fn run_optimize(eff: &Effective) -> Result<i32> {
    let (_, tpl, g0) = build(eff)?;
    let mut cp = ControlProblem::new(tpl, eff.m_weight)?;
    cp.solver = eff.solver;
    cp.optimizer = eff.optimizer;
    let res = minimize_cost(&cp, &g0)?;

    let mut w = out_file(&eff.out, "control_history.csv")?;
    write_control_csv(&mut w, eff.echo(), &res)?;
    w.flush()?;
    let mut gw = out_file(&eff.out, "g_op.csv")?;
    write_vector_csv(&mut gw, eff.echo(), "g_op", &res.g_op.values)?;
    gw.flush()?;
    let mut uw = out_file(&eff.out, "u_op.csv")?;
    write_header_block(&mut uw, eff.echo())?;
    write_solution_csv(&cp.template, &res.u_op, &mut uw)?;
    uw.flush()?;

    println!(
        "optimize {} (M = {}): J = {:.9e}, gradient {:.3e}, {} outer iterations, converged = {}",
        eff.mode.label(),
        eff.m_weight,
        res.j_value,
        res.gradient_norm_final,
        res.outer_iterations,
        res.converged
    );
    println!("wrote {}", eff.out.join("control_history.csv").display());
    Ok(if res.converged { 0 } else { 3 })
}

fn attach_fits(table: &mut SweepTable, columns: &[(SweepColumn, &str)]) {
    for (col, label) in columns {
        if let Ok((slope, r2)) = fit_rate(table, *col) {
            table.meta(&format!("fit_slope_{label}"), format!("{slope:.6e}"));
            table.meta(&format!("fit_r2_{label}"), format!("{r2:.6e}"));
        }
    }
}

pub fn run_sweep(eff: &Effective, kind_flag: Option<SweepKind>) -> Result<i32> {
    let kind = kind_flag.unwrap_or(eff.sweep_kind);
    let (_, tpl, g) = build(eff)?;
    match kind {
        SweepKind::State => {
            let (mut table, verdict) =
                h_sweep_state(&tpl, &g, &eff.h_list, &eff.solver, eff.rate_tol)?;
            for (k, v) in eff.echo() {
                table.meta(k, v);
            }
            attach_fits(&mut table, &[(SweepColumn::StateDistV, "state_dist_V")]);
            let mut w = out_file(&eff.out, "sweep_state.csv")?;
            table.write_csv(&mut w)?;
            w.flush()?;
            println!(
                "state sweep over {} h values: last_below_first = {:?}, final_ratio_ok = {:?}",
                eff.h_list.len(),
                verdict.last_below_first,
                verdict.final_ratio_ok
            );
            println!("wrote {}", eff.out.join("sweep_state.csv").display());
            Ok(if verdict.hard_pass() { 0 } else { 2 })
        }
        SweepKind::Control => {
            let (mut sweep, verdict) = h_sweep_control(
                &tpl,
                eff.m_weight,
                &eff.h_list,
                &eff.solver,
                &eff.optimizer,
                true,
            )?;
            for (k, v) in eff.echo() {
                sweep.table.meta(k, v);
            }
            attach_fits(
                &mut sweep.table,
                &[
                    (SweepColumn::StateDistV, "state_dist_V"),
                    (SweepColumn::ControlDistH, "control_dist_H"),
                ],
            );
            let mut w = out_file(&eff.out, "sweep_control.csv")?;
            sweep.table.write_csv(&mut w)?;
            w.flush()?;
            println!(
                "control sweep over {} h values: status = {}, state_decrease = {:?}, control_decrease = {:?}, cost_gap_ok = {:?}",
                eff.h_list.len(),
                verdict.status,
                verdict.state_decrease,
                verdict.control_decrease,
                verdict.cost_gap_ok
            );
            println!("wrote {}", eff.out.join("sweep_control.csv").display());
            Ok(if verdict.hard_pass() { 0 } else { 2 })
        }
    }
}

pub fn run_report(eff: &Effective) -> Result<i32> {
    let mut sections = Vec::new();
    let mut all_ok = true;

    let check_code = run_check(eff, &[])?;
    all_ok &= check_code == 0;
    sections.push(format!(
        "checks: {}",
        if check_code == 0 { "pass" } else { "FAIL" }
    ));

    let state_code = run_sweep(eff, Some(SweepKind::State))?;
    all_ok &= state_code == 0;
    sections.push(format!(
        "state sweep: {}",
        if state_code == 0 { "pass" } else { "FAIL" }
    ));

    let control_code = run_sweep(eff, Some(SweepKind::Control))?;
    all_ok &= control_code == 0;
    sections.push(format!(
        "control sweep: {}",
        if control_code == 0 { "pass" } else { "FAIL" }
    ));

    let mut w = out_file(&eff.out, "summary.txt")?;
    for (k, v) in eff.echo() {
        writeln!(w, "# {k} = {v}")?;
    }
    for s in &sections {
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    println!("wrote {}", eff.out.join("summary.txt").display());
    Ok(if all_ok { 0 } else { 2 })
}
