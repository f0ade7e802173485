//! Command execution and report files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use curvkit::analysis::{
    develop, euclidean_total_curvature, gauss_bonnet_check, golden_suite, total_intrinsic_curvature, GoldenCheck,
    TCReport,
};
use curvkit::bv::energy_functional;
use curvkit::curve::SampledCurve;
use curvkit::transport::{transport_curve, AngleVariation, TransportBackend};

use crate::error::{CliError, CliResult, Context};
use crate::job::{build_curve, Command, Format, Job};

/// Where and how reports are written.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn output_err(path: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        if !self.format.json() {
            return Ok(());
        }
        let path = self.path(&format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Self::output_err(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Self::output_err(&path, e))
    }

    /// Tables that only exist as CSV are written whatever the format.
    fn table<T: Serialize>(&self, file: &str, rows: &[T]) -> CliResult<()> {
        let path = self.path(file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Self::output_err(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| Self::output_err(&path, e))?;
        }
        w.flush().map_err(|e| Self::output_err(&path, e))
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> CliResult<()> {
        if !self.format.csv() {
            return Ok(());
        }
        self.table(&format!("{name}.csv"), rows)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementCsvRow {
    pub n: usize,
    pub mesh: f64,
    pub modulus: f64,
    pub rotation: f64,
    pub euclid_rotation: Option<f64>,
    /// Extrapolated estimate from the rows so far.
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TcSummary {
    pub estimate: f64,
    pub method: String,
    pub order: Option<f64>,
    pub low_confidence: bool,
    pub converged: bool,
    pub equality_gap: f64,
    pub energy_total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub modulus: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EuclidReport {
    pub chart: String,
    pub length: f64,
    pub euclidean_total_curvature: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRow {
    pub s: f64,
    pub theta: f64,
    pub is_jump: bool,
    pub theta_minus: Option<f64>,
    pub theta_plus: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportSummary {
    pub backend: TransportBackend,
    pub length: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub closing_jump: Option<f64>,
    pub variation: AngleVariation,
    pub max_norm_drift: f64,
    pub jumps: usize,
}

/// Flat form of [`TransportSummary`] for CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportCsvRow {
    pub backend: TransportBackend,
    pub length: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub closing_jump: Option<f64>,
    pub variation_ac: f64,
    pub variation_jump: f64,
    pub variation_cantor: f64,
    pub variation_total: f64,
    pub max_norm_drift: f64,
    pub jumps: usize,
}

impl From<&TransportSummary> for TransportCsvRow {
    fn from(t: &TransportSummary) -> Self {
        TransportCsvRow {
            backend: t.backend,
            length: t.length,
            theta_start: t.theta_start,
            theta_end: t.theta_end,
            closing_jump: t.closing_jump,
            variation_ac: t.variation.ac,
            variation_jump: t.variation.jump,
            variation_cantor: t.variation.cantor,
            variation_total: t.variation.total(),
            max_norm_drift: t.max_norm_drift,
            jumps: t.jumps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DevelopedRow {
    pub s: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DevelopSummary {
    pub source_chart: String,
    pub length: f64,
    pub closed: bool,
    pub samples: usize,
    /// Distance between the developed end points.
    pub end_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRow {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: String,
    pub passed: bool,
    pub error: String,
}

/// Runs a resolved job and writes its reports into `sink`.
pub fn run(job: &Job, sink: &Sink) -> CliResult<()> {
    fs::create_dir_all(&sink.dir).map_err(|e| Sink::output_err(&sink.dir, e))?;
    if job.command == Command::Verify {
        return verify(job, sink);
    }
    let (Some(chart), Some(spec)) = (&job.chart, &job.curve) else {
        return Err(CliError::Validation("job has no curve".into()));
    };
    let curve = build_curve(spec, chart, job.nodes)?;
    match job.command {
        Command::Tc => tc(job, &curve, sink),
        Command::EuclidTc => euclid_tc(&curve, sink),
        Command::Transport => transport(job, &curve, sink),
        Command::Energy => {
            let e = energy_functional(&curve).context("energy")?;
            println!("energy: ac {:.12} jump {:.12} cantor {:.12} total {:.12}", e.ac, e.jump, e.cantor, e.total);
            sink.json("energy", &e)?;
            sink.csv("energy", &[e])
        }
        Command::GaussBonnet => {
            let r = gauss_bonnet_check(&curve).context("gauss-bonnet")?;
            println!(
                "gauss-bonnet: area integral {:.12} theta span {:.12} alpha {:.12} residual {:.3e}",
                r.area_integral, r.theta_span, r.alpha, r.residual
            );
            sink.json("gauss_bonnet", &r)?;
            sink.csv("gauss_bonnet", &[r])
        }
        Command::Develop => develop_cmd(&curve, sink),
        Command::Verify => unreachable!("handled above"),
    }
}

fn tc(job: &Job, curve: &SampledCurve, sink: &Sink) -> CliResult<()> {
    let report: TCReport = total_intrinsic_curvature(curve, &job.strategy).context("tc")?;
    let mut pairs = Vec::new();
    let rows: Vec<RefinementCsvRow> = report
        .refinement
        .rows
        .iter()
        .map(|r| {
            pairs.push((r.modulus, r.rotation));
            RefinementCsvRow {
                n: r.n,
                mesh: r.mesh,
                modulus: r.modulus,
                rotation: r.rotation,
                euclid_rotation: r.euclid_rotation,
                estimate: curvkit::analysis::extrapolate(&pairs).estimate,
            }
        })
        .collect();
    sink.table("refinement.csv", &rows)?;
    let convergence: Vec<ConvergenceRow> = report
        .refinement
        .rows
        .iter()
        .map(|r| ConvergenceRow {
            modulus: r.modulus,
            rotation: r.rotation,
        })
        .collect();
    sink.table("convergence.csv", &convergence)?;
    let ex = &report.extrapolation;
    let summary = TcSummary {
        estimate: report.estimate,
        method: format!("{:?}", ex.method).to_lowercase(),
        order: ex.order,
        low_confidence: ex.low_confidence,
        converged: ex.converged,
        equality_gap: report.equality_gap,
        energy_total: report.energy.total,
    };
    sink.json("tc", &report)?;
    sink.csv("tc", &[&summary])?;
    println!("{:>8} {:>14} {:>14} {:>18}", "n", "mesh", "modulus", "rotation");
    for r in &rows {
        println!("{:>8} {:>14.6e} {:>14.6e} {:>18.12}", r.n, r.mesh, r.modulus, r.rotation);
    }
    println!("estimate {:.12} (energy {:.12}, gap {:.3e})", report.estimate, report.energy.total, report.equality_gap);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !ex.converged {
        return Err(CliError::NonConvergence(
            "the refinement rotations oscillate instead of settling; raise rounds or nodes".into(),
        ));
    }
    Ok(())
}

fn euclid_tc(curve: &SampledCurve, sink: &Sink) -> CliResult<()> {
    let value = euclidean_total_curvature(curve).context("euclid-tc")?;
    let report = EuclidReport {
        chart: curve.chart.name().to_string(),
        length: curve.length,
        euclidean_total_curvature: value,
    };
    println!("euclidean total curvature {value:.12}");
    sink.json("euclid_tc", &report)?;
    sink.csv("euclid_tc", &[report])
}

fn transport(job: &Job, curve: &SampledCurve, sink: &Sink) -> CliResult<()> {
    let backend = job.backend.unwrap_or_else(|| TransportBackend::default_for(&curve.chart));
    let (states, series) = transport_curve(curve, curve.tangents[0], backend).context("transport")?;
    let values = series.value_list();
    let mut rows: Vec<ThetaRow> = Vec::with_capacity(values.len() + series.jumps.len());
    let mut k = 0;
    for (&s, &theta) in series.grid.iter().zip(&values) {
        while k < series.jumps.len() && series.jumps[k].s < s {
            rows.push(jump_row(&series.jumps[k]));
            k += 1;
        }
        if k < series.jumps.len() && series.jumps[k].s == s {
            let j = series.jumps[k];
            rows.push(ThetaRow {
                s,
                theta,
                is_jump: true,
                theta_minus: Some(j.minus),
                theta_plus: Some(j.plus),
            });
            k += 1;
        } else {
            rows.push(ThetaRow {
                s,
                theta,
                is_jump: false,
                theta_minus: None,
                theta_plus: None,
            });
        }
    }
    rows.extend(series.jumps[k..].iter().map(jump_row));
    sink.table("theta.csv", &rows)?;
    let summary = TransportSummary {
        backend,
        length: curve.length,
        theta_start: values[0],
        theta_end: *values.last().unwrap_or(&f64::NAN),
        closing_jump: series.closing_jump,
        variation: series.variation(),
        max_norm_drift: states.max_norm_drift(),
        jumps: series.jumps.len(),
    };
    println!(
        "transport ({backend:?}): theta(0) {:.12} theta(L) {:.12} variation {:.12} drift {:.3e}",
        summary.theta_start,
        summary.theta_end,
        summary.variation.total(),
        summary.max_norm_drift
    );
    sink.json("transport", &summary)?;
    sink.csv("transport", &[TransportCsvRow::from(&summary)])
}

fn jump_row(j: &curvkit::transport::AngleJump) -> ThetaRow {
    ThetaRow {
        s: j.s,
        theta: j.plus,
        is_jump: true,
        theta_minus: Some(j.minus),
        theta_plus: Some(j.plus),
    }
}

fn develop_cmd(curve: &SampledCurve, sink: &Sink) -> CliResult<()> {
    let flat = develop(curve).context("develop")?;
    let rows: Vec<DevelopedRow> = flat
        .grid
        .iter()
        .zip(&flat.points)
        .map(|(&s, &p)| {
            let [x, y] = flat.chart.chart_plane(p);
            DevelopedRow { s, x, y }
        })
        .collect();
    sink.table("developed.csv", &rows)?;
    let (a, b) = (&rows[0], &rows[rows.len() - 1]);
    let summary = DevelopSummary {
        source_chart: curve.chart.name().to_string(),
        length: flat.length,
        closed: curve.closed,
        samples: rows.len(),
        end_gap: (b.x - a.x).hypot(b.y - a.y),
    };
    println!(
        "developed {} samples, length {:.12}, end gap {:.3e}",
        summary.samples, summary.length, summary.end_gap
    );
    sink.json("develop", &summary)?;
    sink.csv("develop", &[summary])
}

fn verify(job: &Job, sink: &Sink) -> CliResult<()> {
    let checks: Vec<GoldenCheck> = golden_suite(job.nodes);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    println!("{:<width$}  {:>18}  {:>18}  {:>9}  result", "name", "value", "expected", "tolerance");
    for c in &checks {
        let result = match (&c.error, c.passed) {
            (Some(e), _) => format!("FAIL ({e})"),
            (None, true) => "PASS".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        let tol = match c.comparison {
            curvkit::analysis::Comparison::AbsDiff => format!("{:.1e}", c.tolerance),
            curvkit::analysis::Comparison::GreaterThan => "> exp".to_string(),
        };
        println!("{:<width$}  {:>18.12}  {:>18.12}  {:>9}  {result}", c.name, c.value, c.expected, tol);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    sink.json("verify", &checks)?;
    let rows: Vec<VerifyRow> = checks
        .iter()
        .map(|c| VerifyRow {
            name: c.name.clone(),
            value: c.value,
            expected: c.expected,
            tolerance: c.tolerance,
            comparison: c.comparison.as_str().to_string(),
            passed: c.passed,
            error: c.error.clone().unwrap_or_default(),
        })
        .collect();
    sink.csv("verify", &rows)?;
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
