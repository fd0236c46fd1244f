//! Post-processing of closed-loop traces: norms, decay-law residuals,
//! settling times and CSV export.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::roles::Role;
use crate::scheme::{block_roles, error_label};
use crate::simulate::ClosedLoopTrace;

/// Slack allowed on `V(t_{k+1}) <= V(t_k)` for floating-point ripple.
pub const LYAPUNOV_RIPPLE: f64 = 1e-12;

/// `(t, ||e(t)||_2)` for every sample.
pub fn error_norm_series(trace: &ClosedLoopTrace) -> Result<Vec<(f64, f64)>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(trace
        .samples
        .iter()
        .map(|s| (s.t, s.error.norm()))
        .collect())
}

/// `max_{t, m} |e_m(t) - e_m(0) exp(-gain t)|`; zero for an empty trace.
pub fn decay_residual(trace: &ClosedLoopTrace, gain: f64) -> f64 {
    let Some(first) = trace.samples.first() else {
        return 0.0;
    };
    let e0 = first.error.stacked();
    let t0 = first.t;
    trace
        .samples
        .iter()
        .flat_map(|s| {
            let decay = (-gain * (s.t - t0)).exp();
            s.error
                .e1
                .iter()
                .chain(&s.error.e2)
                .zip(&e0)
                .map(move |(e, e0)| (e - e0 * decay).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// True when `V` never rises by more than `tolerance` between consecutive samples.
pub fn lyapunov_monotone(trace: &ClosedLoopTrace, tolerance: f64) -> bool {
    trace
        .samples
        .windows(2)
        .all(|w| w[1].lyapunov <= w[0].lyapunov + tolerance)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settling {
    pub label: String,
    pub initial: f64,
    /// First sample time after which `|e_m| < threshold` for the rest of the
    /// trace; `None` if the component is still above threshold at the end.
    pub time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub threshold: f64,
    pub t_end: f64,
    pub settling: Vec<Settling>,
    pub max_decay_residual: f64,
    pub final_error_norm: f64,
    pub lyapunov_monotone: bool,
}

impl ConvergenceReport {
    pub fn all_settled(&self) -> bool {
        self.settling.iter().all(|s| s.time.is_some())
    }
}

pub fn convergence_report(trace: &ClosedLoopTrace, threshold: f64) -> Result<ConvergenceReport> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let last = trace.samples.last().ok_or(Error::EmptyTrace)?;
    let labels = trace.assignment.error_labels();
    let initial = trace.samples[0].error.stacked();
    let series: Vec<Vec<f64>> = trace.samples.iter().map(|s| s.error.stacked()).collect();
    let settling = labels
        .into_iter()
        .enumerate()
        .map(|(c, label)| {
            let last_above = series.iter().rposition(|e| e[c].abs() >= threshold);
            let time = match last_above {
                None => Some(trace.samples[0].t),
                Some(k) if k + 1 < series.len() => Some(trace.samples[k + 1].t),
                Some(_) => None,
            };
            Settling {
                label,
                initial: initial[c],
                time,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        threshold,
        t_end: last.t,
        settling,
        max_decay_residual: decay_residual(trace, trace.gain),
        final_error_norm: last.error.norm(),
        lyapunov_monotone: lyapunov_monotone(trace, LYAPUNOV_RIPPLE),
    })
}

/// Fixed-point decimal rounded to nine significant digits.
///
/// `1234.5` becomes `1234.50000`, `-0.000123` becomes `-0.000123000000`;
/// zero is written as `0`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn component_label(prefix: &str, k: usize, n: usize) -> String {
    if n < 10 {
        format!("{prefix}{k}")
    } else {
        format!("{prefix}_{k}")
    }
}

/// Header of the trace CSV: `t`, every state component (`x11` is component
/// 1 of `x1`), every error component (`e11_2131`), every aggregate control (`U11`).
pub fn trace_columns(trace: &ClosedLoopTrace) -> Vec<String> {
    let n = trace.n;
    let mut cols = vec!["t".to_string()];
    for role in Role::ALL {
        cols.extend((1..=n).map(|k| component_label(role.label(), k, n)));
    }
    cols.extend(trace.assignment.error_labels());
    for b in 1..=2 {
        cols.extend((1..=n).map(|k| component_label(&format!("U{b}"), k, n)));
    }
    cols
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn export_trace_csv<W: Write>(trace: &ClosedLoopTrace, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(trace_columns(trace))?;
    for s in &trace.samples {
        let row = std::iter::once(s.t)
            .chain(s.states.iter().copied())
            .chain(s.error.e1.iter().copied())
            .chain(s.error.e2.iter().copied())
            .chain(s.aggregate.u1.iter().copied())
            .chain(s.aggregate.u2.iter().copied())
            .map(format_sig9);
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Key/value CSV with one `settling_time:<label>` row per error component.
pub fn export_report_csv<W: Write>(report: &ConvergenceReport, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["key", "value"])?;
    out.write_record(["threshold", &format_sig9(report.threshold)])?;
    out.write_record(["t_end", &format_sig9(report.t_end)])?;
    out.write_record(["final_error_norm", &format_sig9(report.final_error_norm)])?;
    out.write_record([
        "max_decay_residual",
        &format_sig9(report.max_decay_residual),
    ])?;
    out.write_record([
        "lyapunov_monotone",
        if report.lyapunov_monotone {
            "true"
        } else {
            "false"
        },
    ])?;
    for s in &report.settling {
        out.write_record([format!("initial:{}", s.label), format_sig9(s.initial)])?;
        let time = s
            .time
            .map(format_sig9)
            .unwrap_or_else(|| "not-settled".into());
        out.write_record([format!("settling_time:{}", s.label), time])?;
    }
    out.flush()?;
    Ok(())
}

/// Weighted drive and response sums of one slot over time:
/// `a[i] x[i] + b[j] y[j]` against `c[l] z[l] + d[m] w[m]`. Their difference
/// is the slot's error.
pub fn slot_series(trace: &ClosedLoopTrace, block: usize, slot: usize) -> SlotSeries {
    let t = trace.assignment.tuple(block, slot);
    let [rx, ry, rz, rw] = block_roles(block);
    let s = &trace.scaling;
    let (i, j, l, m) = (t.i - 1, t.j - 1, t.l - 1, t.m - 1);
    let rows = trace
        .samples
        .iter()
        .map(|snap| {
            let drive = s.coefficients(rx)[i] * snap.state(rx)[i]
                + s.coefficients(ry)[j] * snap.state(ry)[j];
            let response = s.coefficients(rz)[l] * snap.state(rz)[l]
                + s.coefficients(rw)[m] * snap.state(rw)[m];
            (snap.t, drive, response)
        })
        .collect();
    let n = trace.n;
    SlotSeries {
        drive_label: format!(
            "{}+{}",
            component_label(rx.label(), t.i, n),
            component_label(ry.label(), t.j, n)
        ),
        response_label: format!(
            "{}+{}",
            component_label(rz.label(), t.l, n),
            component_label(rw.label(), t.m, n)
        ),
        error_label: error_label(block, t),
        rows,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotSeries {
    pub drive_label: String,
    pub response_label: String,
    pub error_label: String,
    /// `(t, drive, response)`.
    pub rows: Vec<(f64, f64, f64)>,
}

pub fn export_slot_csv<W: Write>(series: &SlotSeries, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", &series.drive_label, &series.response_label])?;
    for &(t, d, r) in &series.rows {
        out.write_record([format_sig9(t), format_sig9(d), format_sig9(r)])?;
    }
    out.flush()?;
    Ok(())
}

/// `t` followed by every error component.
pub fn export_errors_csv<W: Write>(trace: &ClosedLoopTrace, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(trace.assignment.error_labels());
    out.write_record(&header)?;
    for s in &trace.samples {
        let row = std::iter::once(s.t)
            .chain(s.error.stacked())
            .map(format_sig9);
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// File names written by [`export_figure_set`], in order.
pub fn figure_names(n: usize) -> Vec<String> {
    (1..=2 * n + 1).map(|k| format!("figure{k}.csv")).collect()
}

/// One drive/response CSV per slot (block 1 first), then the error table.
pub fn export_figure_set(trace: &ClosedLoopTrace, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let names = figure_names(trace.n);
    let create = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let path = dir.join(name);
        let file = File::create(&path)?;
        Ok((path, BufWriter::new(file)))
    };
    let mut written = Vec::with_capacity(names.len());
    let slots = (1..=2).flat_map(|b| (1..=trace.n).map(move |m| (b, m)));
    for ((b, m), name) in slots.zip(&names) {
        let (path, w) = create(name)?;
        export_slot_csv(&slot_series(trace, b, m), w)?;
        written.push(path);
    }
    let (path, w) = create(&names[2 * trace.n])?;
    export_errors_csv(trace, w)?;
    written.push(path);
    Ok(written)
}

/// A numeric CSV read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv_table<R: Read>(r: R) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let columns = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("non-numeric CSV field {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::AggregateControl;
    use crate::scheme::{ErrorVector, ScalingConfig, SwitchAssignment};
    use crate::simulate::Snapshot;

    fn synthetic(e0: &[f64], gain: f64, t_end: f64, dt: f64) -> ClosedLoopTrace {
        let mut trace = ClosedLoopTrace::empty(
            3,
            ScalingConfig::identity(3),
            SwitchAssignment::paper_example(),
        );
        trace.gain = gain;
        trace.dt = dt;
        let steps = (t_end / dt).round() as usize;
        for k in 0..=steps {
            let t = k as f64 * dt;
            let e: Vec<f64> = e0.iter().map(|v| v * (-gain * t).exp()).collect();
            let error = ErrorVector {
                e1: e[..3].to_vec(),
                e2: e[3..].to_vec(),
            };
            let lyapunov = error.lyapunov();
            trace.samples.push(Snapshot {
                t,
                states: vec![0.0; 24],
                error,
                aggregate: AggregateControl::zeros(3),
                lyapunov,
            });
        }
        trace
    }

    const WORKED_E0: [f64; 6] = [-6.0, 6.0, -1.0, -1.5, -2.5, -3.0];

    #[test]
    fn norm_of_initial_error() {
        let trace = synthetic(&WORKED_E0, 1.0, 1.0, 0.1);
        let series = error_norm_series(&trace).unwrap();
        assert!((series[0].1 - 90.5f64.sqrt()).abs() < 1e-12);
        assert!((series[0].1 - 9.5131).abs() < 1e-4);
    }

    #[test]
    fn norm_special_cases() {
        let zero = synthetic(&[0.0; 6], 1.0, 1.0, 0.1);
        assert!(error_norm_series(&zero)
            .unwrap()
            .iter()
            .all(|&(_, v)| v == 0.0));
        let single = synthetic(&[3.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0, 0.0, 0.1);
        assert_eq!(error_norm_series(&single).unwrap()[0].1, 3.0);
        let empty = ClosedLoopTrace::empty(
            3,
            ScalingConfig::identity(3),
            SwitchAssignment::paper_example(),
        );
        assert!(matches!(error_norm_series(&empty), Err(Error::EmptyTrace)));
    }

    #[test]
    fn norm_matches_lyapunov() {
        let trace = synthetic(&WORKED_E0, 0.7, 5.0, 0.05);
        for (s, (_, norm)) in trace.samples.iter().zip(error_norm_series(&trace).unwrap()) {
            assert!((norm - (2.0 * s.lyapunov).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_decay_has_zero_residual() {
        for gain in [0.5, 1.0, 3.0] {
            let trace = synthetic(&WORKED_E0, gain, 10.0, 0.01);
            assert!(decay_residual(&trace, gain) <= 1e-9);
            assert!(decay_residual(&trace, 2.0 * gain) > 0.1);
            assert!(lyapunov_monotone(&trace, LYAPUNOV_RIPPLE));
        }
    }

    #[test]
    fn settling_follows_decay_law() {
        let trace = synthetic(&WORKED_E0, 1.0, 10.0, 0.01);
        let report = convergence_report(&trace, 1e-3).unwrap();
        assert!(report.all_settled());
        for s in &report.settling {
            let expected = (s.initial.abs() / 1e-3).ln();
            assert!((s.time.unwrap() - expected).abs() <= 0.05, "{s:?}");
        }
        let worst = report
            .settling
            .iter()
            .filter_map(|s| s.time)
            .fold(0.0, f64::max);
        assert!((worst - (6.0f64 / 1e-3).ln()).abs() <= 0.05);
    }

    #[test]
    fn settling_edge_cases() {
        let zero = synthetic(&[0.0; 6], 1.0, 1.0, 0.01);
        let report = convergence_report(&zero, 1e-3).unwrap();
        assert!(report.settling.iter().all(|s| s.time == Some(0.0)));
        let short = synthetic(&WORKED_E0, 1.0, 1.0, 0.01);
        let report = convergence_report(&short, 1e-12).unwrap();
        assert!(report.settling.iter().all(|s| s.time.is_none()));
        assert!(convergence_report(&short, 0.0).is_err());
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(-6.0), "-6.00000000");
        assert_eq!(format_sig9(1234.5), "1234.50000");
        assert_eq!(format_sig9(-0.000123), "-0.000123000000");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1.0e10), "10000000000");
        assert_eq!(format_sig9(9.9999999996), "10.0000000");
        assert_eq!(format_sig9(std::f64::consts::PI), "3.14159265");
    }

    #[test]
    fn trace_header() {
        let trace = synthetic(&WORKED_E0, 1.0, 0.0, 0.1);
        let cols = trace_columns(&trace);
        assert_eq!(cols.len(), 1 + 24 + 6 + 6);
        assert_eq!(cols[0], "t");
        assert_eq!(cols[1], "x11");
        assert_eq!(cols[24], "w23");
        assert_eq!(cols[25], "e11_2131");
        assert_eq!(cols[31], "U11");
        assert_eq!(cols[36], "U23");
    }

    #[test]
    fn empty_trace_exports_header_only() {
        let empty = ClosedLoopTrace::empty(
            3,
            ScalingConfig::identity(3),
            SwitchAssignment::paper_example(),
        );
        let mut buf = Vec::new();
        export_trace_csv(&empty, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("t,x11,"));
        assert!(text.contains("e11_2131"));
    }

    #[test]
    fn report_csv_marks_unsettled() {
        let short = synthetic(&WORKED_E0, 1.0, 1.0, 0.01);
        let report = convergence_report(&short, 1e-12).unwrap();
        let mut buf = Vec::new();
        export_report_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("settling_time:e11_2131,not-settled"));
        assert!(text.contains("lyapunov_monotone,true"));
    }
}
