//! CSV rows and the single-point report.

use std::io::{self, Write};

use optomech::entanglement::Bipartition;
use optomech::model::EffectiveParams;
use optomech::sweep::{PointResult, SweepRecord};

/// Shortest round-trip form, or `digits` significant digits.
pub fn format_float(x: f64, digits: Option<usize>) -> String {
    match digits {
        Some(d) if x.is_finite() => format!("{:.*e}", d.saturating_sub(1), x),
        _ => x.to_string(),
    }
}

const RESOLVED: [&str; 11] = [
    "mech_freq_1_over_omega_m",
    "mech_freq_2_over_omega_m",
    "mech_damping_1_over_omega_m",
    "mech_damping_2_over_omega_m",
    "cavity_decay_1_over_omega_m",
    "cavity_decay_2_over_omega_m",
    "effective_detuning_1_over_omega_m",
    "effective_detuning_2_over_omega_m",
    "effective_coupling_1_over_omega_m",
    "effective_coupling_2_over_omega_m",
    "hopping_over_omega_m",
];

fn resolved_values(p: &EffectiveParams<f64>) -> [f64; 13] {
    let n = p.normalized();
    [
        n.mech_freq[0],
        n.mech_freq[1],
        n.mech_damping[0],
        n.mech_damping[1],
        n.cavity_decay[0],
        n.cavity_decay[1],
        n.effective_detuning[0],
        n.effective_detuning[1],
        n.effective_coupling[0],
        n.effective_coupling[1],
        n.hopping,
        n.thermal_occupation[0],
        n.thermal_occupation[1],
    ]
}

/// Column names. Apart from the axis columns this depends only on the
/// bipartitions.
pub fn header(axis_labels: &[String], bipartitions: &[Bipartition]) -> Vec<String> {
    let mut h: Vec<String> = (0..axis_labels.len()).map(|i| format!("index_{i}")).collect();
    h.extend(axis_labels.iter().cloned());
    h.push("omega_ref_rad_s".into());
    h.extend(RESOLVED.iter().map(|s| s.to_string()));
    h.push("thermal_occupation_1".into());
    h.push("thermal_occupation_2".into());
    h.push("stable".into());
    h.push("spectral_abscissa_over_omega_m".into());
    for b in bipartitions {
        h.push(format!("theta_minus_{b}"));
        h.push(format!("en_{b}"));
    }
    h.push("physical".into());
    h.push("status".into());
    h.push("message".into());
    h
}

pub fn row(
    rec: &SweepRecord<f64>,
    axis_values: &[Vec<f64>],
    bipartitions: &[Bipartition],
    digits: Option<usize>,
) -> Vec<String> {
    let f = |x: f64| format_float(x, digits);
    let mut r: Vec<String> = rec.grid_index.iter().map(|i| i.to_string()).collect();
    r.extend(rec.grid_index.iter().zip(axis_values).map(|(&i, v)| f(v[i])));
    match &rec.resolved_params {
        Some(p) => {
            r.push(f(p.omega_ref()));
            r.extend(resolved_values(p).iter().map(|&x| f(x)));
        }
        None => r.extend(std::iter::repeat_n(String::new(), 14)),
    }
    r.push(rec.stable.to_string());
    let omega = rec.resolved_params.map(|p| p.omega_ref());
    r.push(match (rec.spectral_abscissa, omega) {
        (Some(s), Some(w)) => f(s / w),
        _ => String::new(),
    });
    for &b in bipartitions {
        match rec.result(b) {
            Some(e) => {
                r.push(f(e.theta_minus));
                r.push(f(e.log_negativity));
            }
            None => r.extend([String::new(), String::new()]),
        }
    }
    r.push(rec.physical.map(|p| p.to_string()).unwrap_or_default());
    r.push(rec.status.label().into());
    r.push(match &rec.status {
        optomech::sweep::PointStatus::SolverError(m) => m.clone(),
        _ => String::new(),
    });
    r
}

/// Writes the whole table with LF line endings.
pub fn write_csv<W: Write>(
    out: W,
    axis_columns: &[(String, Vec<f64>)],
    records: &[SweepRecord<f64>],
    bipartitions: &[Bipartition],
    digits: Option<usize>,
) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let labels: Vec<String> = axis_columns.iter().map(|(l, _)| l.clone()).collect();
    let values: Vec<Vec<f64>> = axis_columns.iter().map(|(_, v)| v.clone()).collect();
    w.write_record(header(&labels, bipartitions))?;
    for rec in records {
        w.write_record(row(rec, &values, bipartitions, digits))?;
    }
    w.flush()
}

/// Human-readable summary of one evaluated point.
pub fn write_report<W: Write>(mut out: W, r: &PointResult<f64>) -> io::Result<()> {
    match &r.resolved {
        Some(p) => {
            let n = p.normalized();
            writeln!(out, "resolved parameters (rates in units of omega_m1 = {} rad/s)", p.omega_ref())?;
            let pair = |name: &str, v: [f64; 2]| format!("  {name:<22}{:<24}{}", v[0], v[1]);
            writeln!(out, "  {:<22}{:<24}{}", "", "cavity 1", "cavity 2")?;
            writeln!(out, "{}", pair("mech_freq", n.mech_freq))?;
            writeln!(out, "{}", pair("mech_damping", n.mech_damping))?;
            writeln!(out, "{}", pair("cavity_decay", n.cavity_decay))?;
            writeln!(out, "{}", pair("effective_detuning", n.effective_detuning))?;
            writeln!(out, "{}", pair("effective_coupling", n.effective_coupling))?;
            writeln!(out, "{}", pair("thermal_occupation", n.thermal_occupation))?;
            writeln!(out, "  {:<22}{}", "hopping", n.hopping)?;
        }
        None => writeln!(out, "resolved parameters: unavailable")?,
    }
    match (&r.stability, &r.resolved) {
        (Some(s), Some(p)) => {
            let verdict = if s.stable { "stable" } else { "unstable" };
            writeln!(
                out,
                "stability: {verdict} (spectral abscissa {} omega_m1)",
                s.spectral_abscissa / p.omega_ref()
            )?;
            if let Some(note) = &s.margin_note {
                writeln!(out, "  note: {note}")?;
            }
        }
        _ => writeln!(out, "stability: unavailable")?,
    }
    match r.physical {
        Some(true) => writeln!(out, "physicality: covariance satisfies the uncertainty relation")?,
        Some(false) => writeln!(out, "physicality: VIOLATED (covariance breaks the uncertainty relation)")?,
        None => writeln!(out, "physicality: not evaluated")?,
    }
    writeln!(out, "entanglement")?;
    for (b, e) in &r.entanglement {
        match e {
            Some(e) => {
                let mut line = format!("  {:<15}EN {:<24}theta_minus {}", b.name(), e.log_negativity, e.theta_minus);
                if e.boundary {
                    line.push_str("  (on the separability boundary)");
                }
                writeln!(out, "{line}")?;
            }
            None => writeln!(out, "  {:<15}EN n/a", b.name())?,
        }
    }
    writeln!(out, "status: {}", r.status.label())
}
