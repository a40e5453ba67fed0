//! CSV and text emission. All floats print in fixed scientific notation, so
//! identical runs produce byte-identical files.

use crate::control::ControlResult;
use crate::estimates::EstimateReport;
use std::io::Write;

/// `# key = value` header block echoing the effective configuration.
pub fn write_header_block<W: Write>(
    w: &mut W,
    entries: &[(String, String)],
) -> std::io::Result<()> {
    for (k, v) in entries {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

/// Check rows in the pinned schema
/// `check_name, mode, mu, lhs, rhs, slack, pass`.
pub fn write_reports_csv<W: Write>(
    w: &mut W,
    header: &[(String, String)],
    reports: &[EstimateReport],
) -> std::io::Result<()> {
    write_header_block(w, header)?;
    writeln!(w, "check_name,mode,mu,lhs,rhs,slack,pass")?;
    for r in reports {
        let mu = r.mu.map(|m| format!("{m:.12e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:.12e},{:.12e},{:.12e},{}",
            r.name, r.mode, mu, r.lhs, r.rhs, r.slack, r.pass as u8
        )?;
    }
    Ok(())
}

/// Human-readable battery summary, one line per check name.
pub fn summarize_reports(reports: &[EstimateReport]) -> String {
    use std::collections::BTreeMap;
    let mut buckets: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for r in reports {
        let e = buckets.entry(&r.name).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        if !r.pass {
            e.1 += 1;
        }
        e.2 = e.2.min(r.slack);
    }
    let mut out = String::new();
    for (name, (total, failed, min_slack)) in buckets {
        let status = if failed == 0 { "pass" } else { "FAIL" };
        out.push_str(&format!(
            "{status}  {name}: {}/{total} ok, min slack {min_slack:.3e}\n",
            total - failed
        ));
    }
    out
}

/// Optimizer trace `iteration, J, grad_norm, step`.
pub fn write_control_csv<W: Write>(
    w: &mut W,
    header: &[(String, String)],
    result: &ControlResult,
) -> std::io::Result<()> {
    write_header_block(w, header)?;
    writeln!(w, "iteration,J,grad_norm,step")?;
    for (i, j) in result.descent_history.iter().enumerate() {
        let grad = result
            .gradient_history
            .get(i)
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        let step = result
            .step_history
            .get(i)
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        writeln!(w, "{i},{j:.12e},{grad},{step}")?;
    }
    Ok(())
}

/// Nodal dump of a control or state vector: `node_index, value`.
pub fn write_vector_csv<W: Write>(
    w: &mut W,
    header: &[(String, String)],
    label: &str,
    values: &[f64],
) -> std::io::Result<()> {
    write_header_block(w, header)?;
    writeln!(w, "node_index,{label}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v:.17e}")?;
    }
    Ok(())
}
