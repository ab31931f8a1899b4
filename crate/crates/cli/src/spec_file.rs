//! Plain-text problem specs: `key = value` lines grouped in `[section]`s,
//! arrays as comma-separated reals, `#` comments.
//!
//! ```text
//! format_version = 1
//!
//! [problem]
//! n = 3
//! p = 2
//! geometry = radial
//!
//! [radial]
//! radius = 1
//! points = 2001
//!
//! [metric]
//! chi_scalar = 1
//!
//! [solution]
//! kind = radial-power
//! power = 2
//!
//! [rhs]
//! kind = manufactured
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use pluri_core::{Error as CoreError, FnSource, Geometry, HermitianMatrix, Monomial, ProblemSpec, RhsSource, ScalarFn};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl SpecError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        SpecError::Parse { line, message: message.into() }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        SpecError::Validation { field: field.to_string(), message: message.into() }
    }
}

impl From<CoreError> for SpecError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidField { field, reason } => SpecError::field(field, reason),
            CoreError::InvalidParams { .. } => SpecError::field("p", e.to_string()),
            CoreError::DimensionOutOfRange(_) => SpecError::field("n", e.to_string()),
            CoreError::MetricNotPositive { .. } => SpecError::field("omega", e.to_string()),
            CoreError::NotHermitian { .. } | CoreError::ShapeMismatch { .. } => SpecError::field("metric", e.to_string()),
            other => SpecError::field("problem", other.to_string()),
        }
    }
}

/// Settings outside the mathematical problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Newton sup-residual target; `None` uses the geometry default.
    pub tol: Option<f64>,
    /// Resolutions (box) or point counts (radial) for `refine-sweep`.
    pub levels: Vec<usize>,
    pub barrier_tau: f64,
    pub barrier_n: f64,
    /// Collar width; `None` means `0.1·diam`.
    pub barrier_delta: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: None, levels: Vec::new(), barrier_tau: 0.05, barrier_n: 50.0, barrier_delta: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub problem: ProblemSpec<f64>,
    pub solver: SolverSettings,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.iter().find(|e| e.1 == key).map(|e| (e.0, e.2.as_str()))
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.entries.iter().filter(move |e| e.1 == key).map(|e| (e.0, e.2.as_str()))
    }

    fn require(&self, name: &str, key: &str) -> Result<(usize, &str), SpecError> {
        self.get(key).ok_or_else(|| SpecError::parse(self.line, format!("[{name}] is missing `{key}`")))
    }
}

fn real(line: usize, v: &str) -> Result<f64, SpecError> {
    let x: f64 = v.trim().parse().map_err(|_| SpecError::parse(line, format!("expected a real number, got `{}`", v.trim())))?;
    if !x.is_finite() {
        return Err(SpecError::parse(line, "non-finite number"));
    }
    Ok(x)
}

fn integer<I: std::str::FromStr>(line: usize, v: &str) -> Result<I, SpecError> {
    v.trim().parse().map_err(|_| SpecError::parse(line, format!("expected a non-negative integer, got `{}`", v.trim())))
}

fn reals(line: usize, v: &str) -> Result<Vec<f64>, SpecError> {
    v.split(',').map(|x| real(line, x)).collect()
}

fn integers(line: usize, v: &str) -> Result<Vec<usize>, SpecError> {
    v.split(',').map(|x| integer(line, x)).collect()
}

const SECTIONS: &[&str] = &["problem", "box", "radial", "metric", "solution", "rhs", "boundary", "subsolution", "initial", "solver"];

fn split_sections(text: &str) -> Result<(BTreeMap<String, Section>, Option<(usize, String)>), SpecError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut version = None;
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| SpecError::parse(line, "unterminated section header"))?.trim();
            if !SECTIONS.contains(&name) {
                return Err(SpecError::parse(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(SpecError::parse(line, format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), Section { line, entries: Vec::new() });
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| SpecError::parse(line, "expected `key = value`"))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(SpecError::parse(line, "empty key"));
        }
        match &current {
            None if key == "format_version" => version = Some((line, value)),
            None => return Err(SpecError::parse(line, format!("`{key}` outside of a section"))),
            Some(name) => sections.get_mut(name).expect("inserted").entries.push((line, key, value)),
        }
    }
    Ok((sections, version))
}

fn matrix(metric: Option<&Section>, name: &str, n: usize) -> Result<HermitianMatrix<f64>, SpecError> {
    let default = if name == "omega" { 1.0 } else { 0.0 };
    let Some(sec) = metric else {
        return Ok(HermitianMatrix::scaled_identity(n, default)?);
    };
    if let Some((line, v)) = sec.get(&format!("{name}_scalar")) {
        return Ok(HermitianMatrix::scaled_identity(n, real(line, v)?)?);
    }
    let re = sec.get(&format!("{name}_re"));
    let im = sec.get(&format!("{name}_im"));
    let Some((line, re)) = re else {
        if let Some((line, _)) = im {
            return Err(SpecError::parse(line, format!("`{name}_im` needs `{name}_re`")));
        }
        return Ok(HermitianMatrix::scaled_identity(n, default)?);
    };
    let re = reals(line, re)?;
    let im = match im {
        Some((l, v)) => reals(l, v)?,
        None => vec![0.0; n * n],
    };
    if re.len() != n * n || im.len() != n * n {
        return Err(SpecError::field(name, format!("expected {} row-major entries", n * n)));
    }
    let entries = re.iter().zip(&im).map(|(&a, &b)| pluri_core::Complex::new(a, b)).collect();
    HermitianMatrix::new(n, entries).map_err(|e| SpecError::field(name, e.to_string()))
}

fn function(sec: &Section, name: &str) -> Result<ScalarFn<f64>, SpecError> {
    let (line, kind) = sec.require(name, "kind")?;
    Ok(match kind {
        "constant" => {
            let (l, v) = sec.require(name, "value")?;
            ScalarFn::Constant(real(l, v)?)
        }
        "quadratic" => {
            let (l, v) = sec.require(name, "coefficient")?;
            ScalarFn::Quadratic(real(l, v)?)
        }
        "radial-power" => {
            let (l, v) = sec.require(name, "power")?;
            let power = integer(l, v)?;
            let scale = match sec.get("scale") {
                Some((l, v)) => real(l, v)?,
                None => 1.0,
            };
            ScalarFn::RadialPower { power, scale }
        }
        "radial-poly" => {
            let (l, v) = sec.require(name, "coefficients")?;
            ScalarFn::RadialPoly(reals(l, v)?)
        }
        "polynomial" => {
            let mut terms = Vec::new();
            for (l, v) in sec.all("term") {
                let values = reals(l, v)?;
                let (coef, exps) = values.split_first().ok_or_else(|| SpecError::parse(l, "empty term"))?;
                let exponents = exps
                    .iter()
                    .map(|&e| if e >= 0.0 && e.fract() == 0.0 && e <= 64.0 { Ok(e as u32) } else { Err(SpecError::parse(l, "exponents must be small non-negative integers")) })
                    .collect::<Result<_, _>>()?;
                terms.push(Monomial { coef: *coef, exponents });
            }
            if terms.is_empty() {
                return Err(SpecError::parse(line, format!("[{name}] polynomial needs at least one `term`")));
            }
            ScalarFn::Polynomial(terms)
        }
        other => return Err(SpecError::parse(line, format!("unknown function kind `{other}`"))),
    })
}

fn source(sec: Option<&Section>, name: &str) -> Result<Option<FnSource<f64>>, SpecError> {
    let Some(sec) = sec else { return Ok(None) };
    let (_, kind) = sec.require(name, "kind")?;
    Ok(Some(if kind == "from-solution" { FnSource::FromSolution } else { FnSource::Function(function(sec, name)?) }))
}

/// Parses and validates a spec.
pub fn parse_spec(text: &str) -> Result<SpecFile, SpecError> {
    let (sections, version) = split_sections(text)?;
    match version {
        Some((line, v)) if integer::<u32>(line, &v)? == FORMAT_VERSION => {}
        Some((line, v)) => return Err(SpecError::parse(line, format!("unsupported format_version {v}"))),
        None => return Err(SpecError::parse(1, "missing `format_version = 1`")),
    }
    let problem = sections.get("problem").ok_or_else(|| SpecError::parse(1, "missing [problem] section"))?;
    let (l, v) = problem.require("problem", "n")?;
    let n: usize = integer(l, v)?;
    let (l, v) = problem.require("problem", "p")?;
    let p: usize = integer(l, v)?;
    if !(2..=pluri_core::hermitian::MAX_DIM).contains(&n) {
        return Err(SpecError::field("n", format!("must lie in 2..=6, got {n}")));
    }
    let geometry = match problem.get("geometry").map(|g| g.1).unwrap_or("box") {
        "box" => {
            let sec = sections.get("box").ok_or_else(|| SpecError::parse(problem.line, "box geometry needs a [box] section"))?;
            let (l, v) = sec.require("box", "resolution")?;
            let resolution = integer(l, v)?;
            let bound = |key: &str, default: f64| -> Result<Vec<f64>, SpecError> {
                match sec.get(key) {
                    Some((l, v)) => {
                        let vals = reals(l, v)?;
                        Ok(if vals.len() == 1 { vec![vals[0]; 2 * n] } else { vals })
                    }
                    None => Ok(vec![default; 2 * n]),
                }
            };
            Geometry::Box { lower: bound("lower", -1.0)?, upper: bound("upper", 1.0)?, resolution }
        }
        "radial" => {
            let sec = sections.get("radial").ok_or_else(|| SpecError::parse(problem.line, "radial geometry needs a [radial] section"))?;
            let (l, v) = sec.require("radial", "radius")?;
            let radius = real(l, v)?;
            let (l, v) = sec.require("radial", "points")?;
            Geometry::Radial { radius, points: integer(l, v)? }
        }
        other => return Err(SpecError::field("geometry", format!("expected `box` or `radial`, got `{other}`"))),
    };
    let metric = sections.get("metric");
    let chi = matrix(metric, "chi", n)?;
    let omega = matrix(metric, "omega", n)?;
    let solution = sections.get("solution").map(|s| function(s, "solution")).transpose()?;
    let rhs = match sections.get("rhs") {
        None => return Err(SpecError::parse(1, "missing [rhs] section")),
        Some(sec) if sec.require("rhs", "kind")?.1 == "manufactured" => RhsSource::Manufactured,
        Some(sec) => RhsSource::Function(function(sec, "rhs")?),
    };
    let boundary = source(sections.get("boundary"), "boundary")?.unwrap_or(FnSource::FromSolution);
    let subsolution = source(sections.get("subsolution"), "subsolution")?.unwrap_or(FnSource::FromSolution);
    let initial = source(sections.get("initial"), "initial")?;
    let spec = ProblemSpec { n, p, geometry, chi, omega, rhs, boundary, subsolution, solution, initial };
    spec.validate()?;

    let mut solver = SolverSettings::default();
    if let Some(sec) = sections.get("solver") {
        if let Some((l, v)) = sec.get("tol") {
            let tol = real(l, v)?;
            if !(tol > 0.0) {
                return Err(SpecError::field("tol", "must be positive"));
            }
            solver.tol = Some(tol);
        }
        if let Some((l, v)) = sec.get("levels") {
            solver.levels = integers(l, v)?;
        }
        if let Some((l, v)) = sec.get("barrier_tau") {
            solver.barrier_tau = real(l, v)?;
        }
        if let Some((l, v)) = sec.get("barrier_n") {
            solver.barrier_n = real(l, v)?;
        }
        if let Some((l, v)) = sec.get("barrier_delta") {
            solver.barrier_delta = Some(real(l, v)?);
        }
    }
    Ok(SpecFile { problem: spec, solver })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
}

fn emit_matrix(out: &mut String, name: &str, m: &HermitianMatrix<f64>) {
    let c = m.get(0, 0).re;
    if HermitianMatrix::scaled_identity(m.dim(), c).map(|id| &id == m).unwrap_or(false) {
        let _ = writeln!(out, "{name}_scalar = {c:?}");
        return;
    }
    let re: Vec<f64> = m.entries().iter().map(|z| z.re).collect();
    let im: Vec<f64> = m.entries().iter().map(|z| z.im).collect();
    let _ = writeln!(out, "{name}_re = {}", join(&re));
    let _ = writeln!(out, "{name}_im = {}", join(&im));
}

fn emit_function(out: &mut String, f: &ScalarFn<f64>) {
    match f {
        ScalarFn::Constant(c) => {
            let _ = writeln!(out, "kind = constant\nvalue = {c:?}");
        }
        ScalarFn::Quadratic(a) => {
            let _ = writeln!(out, "kind = quadratic\ncoefficient = {a:?}");
        }
        ScalarFn::RadialPower { power, scale } => {
            let _ = writeln!(out, "kind = radial-power\npower = {power}\nscale = {scale:?}");
        }
        ScalarFn::RadialPoly(c) => {
            let _ = writeln!(out, "kind = radial-poly\ncoefficients = {}", join(c));
        }
        ScalarFn::Polynomial(terms) => {
            let _ = writeln!(out, "kind = polynomial");
            for t in terms {
                let exps: Vec<String> = t.exponents.iter().map(|e| e.to_string()).collect();
                let _ = writeln!(out, "term = {:?}, {}", t.coef, exps.join(", "));
            }
        }
    }
}

fn emit_source(out: &mut String, name: &str, src: &FnSource<f64>) {
    let _ = writeln!(out, "\n[{name}]");
    match src {
        FnSource::FromSolution => {
            let _ = writeln!(out, "kind = from-solution");
        }
        FnSource::Function(f) => emit_function(out, f),
    }
}

/// Writes a spec that [`parse_spec`] reads back unchanged.
pub fn emit_spec(file: &SpecFile) -> String {
    let spec = &file.problem;
    let mut out = String::new();
    let _ = writeln!(out, "format_version = {FORMAT_VERSION}\n\n[problem]\nn = {}\np = {}", spec.n, spec.p);
    match &spec.geometry {
        Geometry::Box { lower, upper, resolution } => {
            let _ = writeln!(out, "geometry = box\n\n[box]\nlower = {}\nupper = {}\nresolution = {resolution}", join(lower), join(upper));
        }
        Geometry::Radial { radius, points } => {
            let _ = writeln!(out, "geometry = radial\n\n[radial]\nradius = {radius:?}\npoints = {points}");
        }
    }
    let _ = writeln!(out, "\n[metric]");
    emit_matrix(&mut out, "chi", &spec.chi);
    emit_matrix(&mut out, "omega", &spec.omega);
    if let Some(f) = &spec.solution {
        let _ = writeln!(out, "\n[solution]");
        emit_function(&mut out, f);
    }
    let _ = writeln!(out, "\n[rhs]");
    match &spec.rhs {
        RhsSource::Manufactured => {
            let _ = writeln!(out, "kind = manufactured");
        }
        RhsSource::Function(f) => emit_function(&mut out, f),
    }
    emit_source(&mut out, "boundary", &spec.boundary);
    emit_source(&mut out, "subsolution", &spec.subsolution);
    if let Some(src) = &spec.initial {
        emit_source(&mut out, "initial", src);
    }
    let s = &file.solver;
    let _ = writeln!(out, "\n[solver]");
    if let Some(tol) = s.tol {
        let _ = writeln!(out, "tol = {tol:?}");
    }
    if !s.levels.is_empty() {
        let levels: Vec<String> = s.levels.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "levels = {}", levels.join(", "));
    }
    let _ = writeln!(out, "barrier_tau = {:?}\nbarrier_n = {:?}", s.barrier_tau, s.barrier_n);
    if let Some(d) = s.barrier_delta {
        let _ = writeln!(out, "barrier_delta = {d:?}");
    }
    out
}
