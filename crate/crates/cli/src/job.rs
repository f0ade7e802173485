//! JSON job documents: schema, defaults and validation.

use std::f64::consts::PI;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use curvkit::curve::generators::{
    cantor_graph, chart_smooth, flat_square, geodesic_polygon, octant_triangle, parallel, planar_circle,
};
use curvkit::curve::cantor::CantorPiece;
use curvkit::curve::{arc_length_param, CurvePiece, SampledCurve, SmoothPiece};
use curvkit::polygonal::RefinementStrategy;
use curvkit::surface::{ChartPoint, SurfaceChart};
use curvkit::transport::TransportBackend;

use crate::error::{CliError, CliResult, Context};

pub const DEFAULT_NODES: usize = 4096;
pub const DEFAULT_ROUNDS: usize = 6;
pub const DEFAULT_INITIAL: usize = 4;

#[derive(Debug, Clone)]
pub struct JobSpec {
    pub surface: Option<SurfaceSpec>,
    pub curve: Option<CurveSpec>,
    pub command: Command,
    pub params: Params,
    pub output: Option<OutputSpec>,
}

/// The document with the tagged objects left untyped.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    surface: Option<Value>,
    #[serde(default)]
    curve: Option<Value>,
    command: Command,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    output: Option<OutputSpec>,
}

const SURFACE_TYPES: &[&str] = &["sphere", "flat-polar", "plane", "custom-polar"];
const CURVE_TYPES: &[&str] = &[
    "parallel",
    "envelope-parallel",
    "geodesic-polygon",
    "chart-smooth",
    "cantor-graph",
    "circle",
    "octant-triangle",
    "flat-square",
    "piecewise",
];
const PIECE_KINDS: &[&str] = &["smooth", "geodesic", "cantor"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Tc,
    EuclidTc,
    Transport,
    Energy,
    GaussBonnet,
    Develop,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tc => "tc",
            Command::EuclidTc => "euclid-tc",
            Command::Transport => "transport",
            Command::Energy => "energy",
            Command::GaussBonnet => "gauss-bonnet",
            Command::Develop => "develop",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        #[serde(default)]
        r_min: Option<f64>,
    },
    FlatPolar {
        /// Angular period; anything other than 2π is a cone.
        #[serde(default)]
        period: Option<f64>,
    },
    Plane {},
    CustomPolar {
        metric: String,
        r_min: f64,
        r_max: f64,
    },
}

impl SurfaceSpec {
    pub fn chart(&self) -> CliResult<SurfaceChart> {
        Ok(match self {
            SurfaceSpec::Sphere { r_min } => match r_min {
                Some(m) if !(*m > 0.0 && *m < PI / 2.0) => {
                    return Err(CliError::Validation(format!("surface.r_min must lie in (0, π/2), got {m}")))
                }
                Some(m) => SurfaceChart::sphere().with_r_min(*m),
                None => SurfaceChart::sphere(),
            },
            SurfaceSpec::FlatPolar { period } => match period {
                Some(p) if !(*p > 0.0 && p.is_finite()) => {
                    return Err(CliError::Validation(format!("surface.period must be positive, got {p}")))
                }
                Some(p) => SurfaceChart::cone(*p),
                None => SurfaceChart::flat_polar(),
            },
            SurfaceSpec::Plane {} => SurfaceChart::plane(),
            SurfaceSpec::CustomPolar { metric, r_min, r_max } => {
                SurfaceChart::custom(metric, *r_min, *r_max).context("surface")?
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveSpec {
    /// Sphere parallel at the given colatitude, in radians.
    Parallel { colatitude: f64 },
    /// The same parallel on the flat envelope of its tangent planes.
    EnvelopeParallel { colatitude: f64 },
    GeodesicPolygon {
        vertices: Vec<[f64; 2]>,
        #[serde(default = "default_true")]
        closed: bool,
    },
    ChartSmooth { r: String, phi: String, t0: f64, t1: f64 },
    CantorGraph { depth: u32 },
    Circle { radius: f64 },
    OctantTriangle {},
    FlatSquare { center: [f64; 2], side: f64 },
    Piecewise { pieces: Vec<PieceSpec> },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PieceSpec {
    Smooth { r: String, phi: String, t0: f64, t1: f64 },
    Geodesic { from: [f64; 2], to: [f64; 2] },
    Cantor { depth: u32 },
}

impl CurveSpec {
    pub fn type_name(&self) -> &'static str {
        match self {
            CurveSpec::Parallel { .. } => "parallel",
            CurveSpec::EnvelopeParallel { .. } => "envelope-parallel",
            CurveSpec::GeodesicPolygon { .. } => "geodesic-polygon",
            CurveSpec::ChartSmooth { .. } => "chart-smooth",
            CurveSpec::CantorGraph { .. } => "cantor-graph",
            CurveSpec::Circle { .. } => "circle",
            CurveSpec::OctantTriangle {} => "octant-triangle",
            CurveSpec::FlatSquare { .. } => "flat-square",
            CurveSpec::Piecewise { .. } => "piecewise",
        }
    }

    /// Curves whose chart is fixed by their definition.
    fn implied_surface(&self) -> Option<&'static str> {
        match self {
            CurveSpec::Parallel { .. } | CurveSpec::OctantTriangle {} => Some("sphere"),
            CurveSpec::EnvelopeParallel { .. } => Some("flat-polar"),
            CurveSpec::CantorGraph { .. } | CurveSpec::Circle { .. } => Some("plane"),
            CurveSpec::FlatSquare { .. } => Some("flat-polar"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub nodes: Option<usize>,
    pub rounds: Option<usize>,
    pub initial: Option<usize>,
    #[serde(default)]
    pub strategy: StrategyKind,
    /// Seed of the random nested strategy.
    #[serde(default)]
    pub seed: u64,
    pub targets: Option<Vec<f64>>,
    pub backend: Option<BackendKind>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    #[default]
    UniformDoubling,
    RandomNested,
    ModulusTargets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    SphereFrame,
    Covariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(&self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(&self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<Format>,
}

/// A job with every default filled in.
#[derive(Debug, Clone)]
pub struct Job {
    pub command: Command,
    pub chart: Option<SurfaceChart>,
    pub curve: Option<CurveSpec>,
    pub nodes: usize,
    pub strategy: RefinementStrategy,
    pub backend: Option<TransportBackend>,
}

/// Parses a job document; schema errors name the offending field.
pub fn parse_spec(text: &str) -> CliResult<JobSpec> {
    let raw: RawSpec = typed(&mut serde_json::Deserializer::from_str(text), "")?;
    let surface = match raw.surface {
        Some(v) => Some(typed(retag(v, "type", SURFACE_TYPES, "surface")?, "surface")?),
        None => None,
    };
    let curve = match raw.curve {
        Some(v) => {
            let mut v = retag(v, "type", CURVE_TYPES, "curve")?;
            if let Some(pieces) = v.get_mut("piecewise").and_then(|p| p.get_mut("pieces")).and_then(Value::as_array_mut) {
                for (i, p) in pieces.iter_mut().enumerate() {
                    *p = retag(p.take(), "kind", PIECE_KINDS, &format!("curve.pieces[{i}]"))?;
                }
            }
            Some(typed(v, "curve")?)
        }
        None => None,
    };
    Ok(JobSpec {
        surface,
        curve,
        command: raw.command,
        params: raw.params,
        output: raw.output,
    })
}

/// Deserializes with field tracking. Variant wrappers added by [`retag`]
/// are dropped from the reported path.
fn typed<'de, T: DeserializeOwned, D: serde::Deserializer<'de>>(de: D, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = prefix.to_string();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => path.push_str(&format!("[{index}]")),
                serde_path_to_error::Segment::Map { key } => {
                    if !path.is_empty() {
                        path.push('.');
                    }
                    path.push_str(key);
                }
                serde_path_to_error::Segment::Enum { .. } | serde_path_to_error::Segment::Unknown => {}
            }
        }
        let inner = e.into_inner().to_string();
        let hint = degree_hint(&inner);
        let at = if path.is_empty() { ".".to_string() } else { path };
        CliError::Validation(format!("at `{at}`: {inner}{hint}"))
    })
}

/// Turns `{tag: name, ..fields}` into `{name: {..fields}}`, checking the name.
fn retag(value: Value, tag: &str, valid: &[&str], at: &str) -> CliResult<Value> {
    let Value::Object(mut fields) = value else {
        return Err(CliError::Validation(format!("at `{at}`: expected an object with a `{tag}` field")));
    };
    let name = match fields.remove(tag) {
        Some(Value::String(name)) => name,
        Some(other) => {
            return Err(CliError::Validation(format!("at `{at}.{tag}`: expected a string, got {other}")))
        }
        None => {
            return Err(CliError::Validation(format!(
                "at `{at}`: missing `{tag}`; valid types are {}",
                valid.join(", ")
            )))
        }
    };
    if !valid.contains(&name.as_str()) {
        return Err(CliError::Validation(format!(
            "at `{at}.{tag}`: unknown {tag} `{name}`; valid types are {}",
            valid.join(", ")
        )));
    }
    let mut outer = Map::new();
    outer.insert(name, Value::Object(fields));
    Ok(Value::Object(outer))
}

fn degree_hint(message: &str) -> &'static str {
    if message.contains("deg") {
        "; angles are given in radians only (e.g. 60° is 1.0472)"
    } else {
        ""
    }
}

fn check_colatitude(field: &str, c: f64) -> CliResult<()> {
    if !c.is_finite() {
        return Err(CliError::Validation(format!("{field} must be finite")));
    }
    if c > PI {
        return Err(CliError::Validation(format!(
            "{field} = {c} exceeds π; angles are in radians, did you mean {:.6} rad ({c}°)?",
            c.to_radians()
        )));
    }
    if c <= 0.0 || c >= PI {
        return Err(CliError::Validation(format!(
            "{field} = {c} puts the curve on a pole of the chart; it must lie in (0, π)"
        )));
    }
    Ok(())
}

impl JobSpec {
    /// Validates the document and fills in defaults. Flags given on the
    /// command line override the document.
    pub fn resolve(&self, nodes_flag: Option<usize>, rounds_flag: Option<usize>) -> CliResult<Job> {
        let nodes = nodes_flag.or(self.params.nodes).unwrap_or(DEFAULT_NODES);
        let rounds = rounds_flag.or(self.params.rounds).unwrap_or(DEFAULT_ROUNDS);
        let initial = self.params.initial.unwrap_or(DEFAULT_INITIAL);
        if nodes < 16 {
            return Err(CliError::Validation(format!("nodes must be at least 16, got {nodes}")));
        }
        if rounds == 0 || initial == 0 {
            return Err(CliError::Validation("rounds and initial must be positive".into()));
        }
        let strategy = match self.params.strategy {
            StrategyKind::UniformDoubling => RefinementStrategy::UniformDoubling { initial, rounds },
            StrategyKind::RandomNested => RefinementStrategy::RandomNested {
                initial,
                rounds,
                seed: self.params.seed,
            },
            StrategyKind::ModulusTargets => {
                let targets = self.params.targets.clone().ok_or_else(|| {
                    CliError::Validation("params.targets is required for the modulus-targets strategy".into())
                })?;
                RefinementStrategy::ModulusTargets { targets }
            }
        };
        let backend = self.params.backend.map(|b| match b {
            BackendKind::SphereFrame => TransportBackend::SphereFrame,
            BackendKind::Covariant => TransportBackend::Covariant,
        });
        if self.command == Command::Verify {
            return Ok(Job {
                command: self.command,
                chart: None,
                curve: None,
                nodes,
                strategy,
                backend,
            });
        }
        let curve = self
            .curve
            .clone()
            .ok_or_else(|| CliError::Validation(format!("command `{}` needs a curve", self.command.name())))?;
        if let CurveSpec::Parallel { colatitude } | CurveSpec::EnvelopeParallel { colatitude } = curve {
            check_colatitude("curve.colatitude", colatitude)?;
        }
        let chart = match (&self.surface, curve.implied_surface()) {
            (Some(s), Some(implied)) => {
                let chart = s.chart()?;
                if chart.name() != implied {
                    return Err(CliError::Validation(format!(
                        "curve type `{}` lives on the {implied} chart, not on `{}`",
                        curve.type_name(),
                        chart.name()
                    )));
                }
                chart
            }
            (Some(s), None) => s.chart()?,
            (None, Some(_)) => SurfaceChart::sphere(),
            (None, None) => {
                return Err(CliError::Validation(format!(
                    "curve type `{}` needs a surface (one of sphere, flat-polar, plane, custom-polar)",
                    curve.type_name()
                )))
            }
        };
        if backend == Some(TransportBackend::SphereFrame) && chart.name() != "sphere" {
            return Err(CliError::Validation("the sphere-frame backend needs the sphere chart".into()));
        }
        Ok(Job {
            command: self.command,
            chart: Some(chart),
            curve: Some(curve),
            nodes,
            strategy,
            backend,
        })
    }
}

/// Builds the sampled curve of a resolved job.
pub fn build_curve(spec: &CurveSpec, chart: &SurfaceChart, nodes: usize) -> CliResult<SampledCurve> {
    let pt = |v: &[f64; 2]| ChartPoint::new(v[0], v[1]);
    let curve = match spec {
        CurveSpec::Parallel { colatitude } => parallel(*colatitude, nodes),
        CurveSpec::EnvelopeParallel { colatitude } => {
            return curvkit::analysis::envelope_chart_of_parallel(*colatitude, nodes)
                .map(|e| e.curve)
                .context("curve")
        }
        CurveSpec::GeodesicPolygon { vertices, closed } => {
            let v: Vec<ChartPoint> = vertices.iter().map(pt).collect();
            geodesic_polygon(chart, &v, *closed, nodes)
        }
        CurveSpec::ChartSmooth { r, phi, t0, t1 } => chart_smooth(chart, r, phi, *t0, *t1, nodes),
        CurveSpec::CantorGraph { depth } => cantor_graph(*depth, nodes),
        CurveSpec::Circle { radius } => planar_circle(*radius, nodes),
        CurveSpec::OctantTriangle {} => octant_triangle(nodes),
        CurveSpec::FlatSquare { center, side } => flat_square(*center, *side, nodes),
        CurveSpec::Piecewise { pieces } => {
            let built = pieces
                .iter()
                .map(|p| match p {
                    PieceSpec::Smooth { r, phi, t0, t1 } => SmoothPiece::new(chart, r, phi, *t0, *t1).map(CurvePiece::Smooth),
                    PieceSpec::Geodesic { from, to } => chart.geodesic_connect(pt(from), pt(to)).map(CurvePiece::Geodesic),
                    PieceSpec::Cantor { depth } => Ok(CurvePiece::Cantor(CantorPiece::new(*depth))),
                })
                .collect::<curvkit::Result<Vec<_>>>()
                .context("curve")?;
            arc_length_param(chart, built, nodes)
        }
    };
    curve.context("curve")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> CliResult<Job> {
        parse_spec(text)?.resolve(None, None)
    }

    #[test]
    fn parallel_job_gets_defaults() {
        let job = resolve(r#"{"surface":{"type":"sphere"},"curve":{"type":"parallel","colatitude":1.0472},"command":"tc"}"#).unwrap();
        assert_eq!(job.nodes, DEFAULT_NODES);
        assert_eq!(job.strategy, RefinementStrategy::UniformDoubling { initial: 4, rounds: 6 });
        assert_eq!(job.chart.unwrap().name(), "sphere");
    }

    #[test]
    fn cantor_job_needs_no_surface() {
        let job = resolve(r#"{"curve":{"type":"cantor-graph","depth":8},"command":"euclid-tc"}"#).unwrap();
        assert_eq!(job.command, Command::EuclidTc);
        assert!(matches!(job.curve, Some(CurveSpec::CantorGraph { depth: 8 })));
    }

    #[test]
    fn pole_and_degrees_are_rejected() {
        let err = resolve(r#"{"curve":{"type":"parallel","colatitude":0},"command":"tc"}"#).unwrap_err();
        assert!(matches!(err, CliError::Validation(ref m) if m.contains("pole")), "{err}");
        let err = resolve(r#"{"curve":{"type":"parallel","colatitude":60},"command":"tc"}"#).unwrap_err();
        assert!(err.to_string().contains("radians"), "{err}");
        let err = resolve(r#"{"curve":{"type":"parallel","colatitude_deg":60},"command":"tc"}"#).unwrap_err();
        assert!(err.to_string().contains("radians"), "{err}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = parse_spec(r#"{"curve":{"type":"spiral"},"command":"tc"}"#).unwrap_err().to_string();
        assert!(err.contains("curve") && err.contains("parallel"), "{err}");
        let err = parse_spec(r#"{"surface":{"type":"torus"},"command":"tc"}"#).unwrap_err().to_string();
        assert!(err.contains("surface") && err.contains("custom-polar"), "{err}");
        let err = parse_spec(r#"{"curve":{"type":"circle","radius":"one"},"command":"tc"}"#).unwrap_err().to_string();
        assert!(err.contains("curve.radius"), "{err}");
    }

    #[test]
    fn flags_override_the_document() {
        let spec = parse_spec(r#"{"curve":{"type":"circle","radius":1},"command":"tc","params":{"nodes":512,"rounds":3}}"#).unwrap();
        let job = spec.resolve(Some(1024), None).unwrap();
        assert_eq!(job.nodes, 1024);
        assert_eq!(job.strategy, RefinementStrategy::UniformDoubling { initial: 4, rounds: 3 });
    }

    #[test]
    fn mismatched_surface_is_rejected() {
        let err = resolve(r#"{"surface":{"type":"plane"},"curve":{"type":"parallel","colatitude":1.0},"command":"tc"}"#).unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }
}
