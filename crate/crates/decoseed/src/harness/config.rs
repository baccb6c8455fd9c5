//! Scenario configuration: a line-oriented `[section]` / `key = value`
//! document, parsed into a fully validated config. Parsing is two-phase:
//! syntax errors stop at the first offending line, while semantic
//! validation collects every problem before reporting.
//!
//! Conventions: full-line `#` comments; matrices on one line as bracketed
//! row lists of `re+imi` literals; plain arrays comma-separated; booleans
//! `on`/`off` (or `true`/`false`); repeatable keys (`atom`, `term`,
//! `mixture_term`, `cutoff`) accumulate in order.

use num_complex::Complex64;

use crate::error::{DecoError, Result};
use crate::linalg::{self, CMat};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeBlock {
    pub t_max: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBlock {
    pub enabled: bool,
    /// Surrogate dimension: environment atoms for spectral models, Fock
    /// levels for mode models.
    pub dim: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhoSpec {
    UniformPlus,
    MaximallyMixed,
    Matrix(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureFamily {
    Gaussian {
        sigma: f64,
        center: f64,
    },
    /// (weight, sigma, center) per term; weights may be signed but must
    /// sum to one.
    GaussianMixture {
        terms: Vec<(f64, f64, f64)>,
    },
    Bump {
        smoothness: u32,
    },
    PointSpectrum {
        atoms: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArakiZurekBlock {
    pub h_s: Vec<Vec<Complex64>>,
    pub v_s: Vec<Vec<Complex64>>,
    pub family: MeasureFamily,
    pub grid_points: usize,
    pub rho: RhoSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingFamily {
    /// f(k) = amplitude * k * exp(-decay * k).
    DampedLinear { amplitude: f64, decay: f64 },
    /// f(k) = amplitude * k^exponent.
    PowerLaw { amplitude: f64, exponent: f64 },
}

impl CouplingFamily {
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            CouplingFamily::DampedLinear { amplitude, decay } => amplitude * k * (-decay * k).exp(),
            CouplingFamily::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * k.powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanHoveBlock {
    pub alpha: f64,
    pub beta: f64,
    pub coupling: CouplingFamily,
    pub dispersion_speed: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub grid_points: usize,
    pub allow_ir_divergent: bool,
    /// Decreasing momentum cutoffs for the infrared scan; empty = no scan.
    pub cutoffs: Vec<f64>,
    pub t_probe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeBlock {
    pub eps: f64,
    pub f0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Coherent mixture terms (f_amp, g_amp, weight).
    pub terms: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeParticleBlock {
    pub f0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub terms: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringBlock {
    pub h_s: Vec<Vec<Complex64>>,
    pub v_s: Vec<Vec<Complex64>>,
    pub env_dim: usize,
    pub level_spacing: f64,
    pub coupling_sigma: f64,
    pub potential_norm: f64,
    pub seed: u64,
    pub horizon: f64,
    pub moller_samples: usize,
    pub rho: RhoSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBlock {
    ArakiZurek(ArakiZurekBlock),
    VanHove(VanHoveBlock),
    SingleMode(SingleModeBlock),
    FreeParticle(FreeParticleBlock),
    Scattering(ScatteringBlock),
}

impl ModelBlock {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelBlock::ArakiZurek(_) => "araki_zurek",
            ModelBlock::VanHove(_) => "vanhove",
            ModelBlock::SingleMode(_) => "single_mode",
            ModelBlock::FreeParticle(_) => "free_particle",
            ModelBlock::Scattering(_) => "scattering",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelBlock,
    pub time: TimeBlock,
    pub oracle: OracleBlock,
    pub output: OutputBlock,
}

// ---------------------------------------------------------------------------
// Raw tokenization
// ---------------------------------------------------------------------------

struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

struct RawSection {
    name: String,
    entries: Vec<RawEntry>,
}

struct RawDoc {
    sections: Vec<RawSection>,
}

impl RawDoc {
    fn section(&self, name: &str) -> Option<&RawSection> {
        self.sections.iter().find(|s| s.name == name)
    }
}

fn tokenize(text: &str) -> Result<RawDoc> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| DecoError::ParseError {
                    line: line_no,
                    message: "section header must look like [name]".into(),
                })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(DecoError::ParseError {
                    line: line_no,
                    message: "empty section name".into(),
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(DecoError::ParseError {
                    line: line_no,
                    message: format!("duplicate section [{name}]"),
                });
            }
            sections.push(RawSection {
                name: name.to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(DecoError::ParseError {
                line: line_no,
                message: "expected key = value".into(),
            });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(DecoError::ParseError {
                line: line_no,
                message: "empty key".into(),
            });
        }
        if value.is_empty() {
            return Err(DecoError::ParseError {
                line: line_no,
                message: format!("key '{key}' has an empty value"),
            });
        }
        let Some(current) = sections.last_mut() else {
            return Err(DecoError::ParseError {
                line: line_no,
                message: "key = value before any [section] header".into(),
            });
        };
        current.entries.push(RawEntry {
            key: key.to_string(),
            value: value.to_string(),
            line: line_no,
        });
    }
    Ok(RawDoc { sections })
}

// ---------------------------------------------------------------------------
// Value literals
// ---------------------------------------------------------------------------

/// `a`, `a+bi`, `a-bi`, `bi` — the canonical complex literal.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    fn finite(v: f64, s: &str) -> std::result::Result<f64, String> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite number in '{s}'"))
        }
    }
    if s.ends_with('i') || s.ends_with('I') {
        let body = &s[..s.len() - 1];
        // Split at the last +/- that is not a leading sign and not part of
        // an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                split = Some(pos);
                break;
            }
        }
        match split {
            Some(pos) => {
                let re: f64 = body[..pos]
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad real part in '{s}'"))?;
                let im_str = body[pos..].trim();
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str
                        .parse()
                        .map_err(|_| format!("bad imaginary part in '{s}'"))?
                };
                Ok(Complex64::new(finite(re, s)?, finite(im, s)?))
            }
            None => {
                let body = body.trim();
                let im: f64 = if body.is_empty() {
                    1.0
                } else {
                    body.parse()
                        .map_err(|_| format!("bad imaginary literal '{s}'"))?
                };
                Ok(Complex64::new(0.0, finite(im, s)?))
            }
        }
    } else {
        let re: f64 = s.parse().map_err(|_| format!("bad number '{s}'"))?;
        Ok(Complex64::new(finite(re, s)?, 0.0))
    }
}

pub fn format_complex(z: Complex64) -> String {
    let re = z.re;
    let im = z.im;
    if im < 0.0 {
        format!("{}-{}i", fmt_f64(re), fmt_f64(-im))
    } else {
        format!("{}+{}i", fmt_f64(re), fmt_f64(im))
    }
}

fn fmt_f64(x: f64) -> String {
    // Display emits the shortest decimal string that round-trips.
    format!("{x}")
}

/// `[[a, b], [c, d]]` with complex entries; must be rectangular.
pub fn parse_matrix(s: &str) -> std::result::Result<Vec<Vec<Complex64>>, String> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| "matrix must be wrapped in [ ... ]".to_string())?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('[')
            .ok_or_else(|| "expected [ to open a matrix row".to_string())?;
        let close = open
            .find(']')
            .ok_or_else(|| "unterminated matrix row".to_string())?;
        let row_src = &open[..close];
        let mut row = Vec::new();
        for cell in row_src.split(',') {
            row.push(parse_complex(cell)?);
        }
        if row.is_empty() {
            return Err("empty matrix row".into());
        }
        rows.push(row);
        rest = open[close + 1..].trim();
        if let Some(after_comma) = rest.strip_prefix(',') {
            rest = after_comma.trim();
        } else if !rest.is_empty() {
            return Err("expected , between matrix rows".into());
        }
    }
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err("ragged matrix rows".into());
    }
    Ok(rows)
}

pub fn format_matrix(rows: &[Vec<Complex64>]) -> String {
    let body = rows
        .iter()
        .map(|r| {
            let cells = r
                .iter()
                .map(|&z| format_complex(z))
                .collect::<Vec<_>>()
                .join(", ");
            format!("[{cells}]")
        })
        .collect::<Vec<_>>()
        .join(", ");
    format!("[{body}]")
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|cell| {
            let cell = cell.trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(format!("non-finite number '{cell}'")),
                Err(_) => Err(format!("bad number '{cell}'")),
            }
        })
        .collect()
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        other => Err(format!("expected on/off, got '{other}'")),
    }
}

// ---------------------------------------------------------------------------
// Semantic extraction with error collection
// ---------------------------------------------------------------------------

struct Ctx<'a> {
    doc: &'a RawDoc,
    errors: Vec<String>,
}

impl<'a> Ctx<'a> {
    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn entry(&mut self, section: &str, key: &str) -> Option<&'a RawEntry> {
        let sec = self.doc.section(section)?;
        let hits: Vec<&RawEntry> = sec.entries.iter().filter(|e| e.key == key).collect();
        match hits.len() {
            0 => None,
            1 => Some(hits[0]),
            _ => {
                self.err(format!(
                    "line {}: [{section}] {key} given more than once",
                    hits[1].line
                ));
                Some(hits[0])
            }
        }
    }

    fn repeated(&self, section: &str, key: &str) -> Vec<&'a RawEntry> {
        self.doc
            .section(section)
            .map(|sec| sec.entries.iter().filter(|e| e.key == key).collect())
            .unwrap_or_default()
    }

    fn string(&mut self, section: &str, key: &str, default: &str) -> String {
        self.entry(section, key)
            .map(|e| e.value.clone())
            .unwrap_or_else(|| default.to_string())
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.doc
            .section(section)
            .is_some_and(|s| s.entries.iter().any(|e| e.key == key))
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> f64 {
        let Some(e) = self.entry(section, key) else {
            return default;
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                let msg = format!(
                    "line {}: [{section}] {key}: non-finite number '{}'",
                    e.line, e.value
                );
                self.err(msg);
                default
            }
            Err(_) => {
                let msg = format!(
                    "line {}: [{section}] {key}: bad number '{}'",
                    e.line, e.value
                );
                self.err(msg);
                default
            }
        }
    }

    fn f64_required(&mut self, section: &str, key: &str) -> f64 {
        if !self.has(section, key) {
            self.err(format!("[{section}] {key} is required"));
            return 0.0;
        }
        self.f64_or(section, key, 0.0)
    }

    fn usize_or(&mut self, section: &str, key: &str, default: usize) -> usize {
        let Some(e) = self.entry(section, key) else {
            return default;
        };
        match e.value.parse::<usize>() {
            Ok(v) => v,
            Err(_) => {
                let msg = format!(
                    "line {}: [{section}] {key}: bad integer '{}'",
                    e.line, e.value
                );
                self.err(msg);
                default
            }
        }
    }

    fn u64_or(&mut self, section: &str, key: &str, default: u64) -> u64 {
        let Some(e) = self.entry(section, key) else {
            return default;
        };
        match e.value.parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                let msg = format!(
                    "line {}: [{section}] {key}: bad integer '{}'",
                    e.line, e.value
                );
                self.err(msg);
                default
            }
        }
    }

    fn bool_or(&mut self, section: &str, key: &str, default: bool) -> bool {
        let Some(e) = self.entry(section, key) else {
            return default;
        };
        match parse_bool(&e.value) {
            Ok(v) => v,
            Err(m) => {
                let msg = format!("line {}: [{section}] {key}: {m}", e.line);
                self.err(msg);
                default
            }
        }
    }

    fn matrix_required(&mut self, section: &str, key: &str) -> Vec<Vec<Complex64>> {
        let Some(e) = self.entry(section, key) else {
            self.err(format!("[{section}] {key} is required"));
            return vec![vec![Complex64::new(0.0, 0.0)]];
        };
        match parse_matrix(&e.value) {
            Ok(m) => m,
            Err(msg) => {
                let full = format!("line {}: [{section}] {key}: {msg}", e.line);
                self.err(full);
                vec![vec![Complex64::new(0.0, 0.0)]]
            }
        }
    }

    fn rho(&mut self, section: &str, key: &str) -> RhoSpec {
        let Some(e) = self.entry(section, key) else {
            return RhoSpec::UniformPlus;
        };
        let v = e.value.trim();
        if v.starts_with('[') {
            match parse_matrix(v) {
                Ok(m) => RhoSpec::Matrix(m),
                Err(msg) => {
                    let full = format!("line {}: [{section}] {key}: {msg}", e.line);
                    self.err(full);
                    RhoSpec::UniformPlus
                }
            }
        } else {
            match v {
                "uniform_plus" => RhoSpec::UniformPlus,
                "maximally_mixed" => RhoSpec::MaximallyMixed,
                other => {
                    let msg = format!(
                        "line {}: [{section}] {key}: unknown initial state '{other}' \
                         (expected uniform_plus, maximally_mixed, or a matrix)",
                        e.line
                    );
                    self.err(msg);
                    RhoSpec::UniformPlus
                }
            }
        }
    }

    fn check_layout(&mut self, allowed: &[(&str, &[&str], &[&str])]) {
        // allowed: (section, single keys, repeatable keys)
        for sec in &self.doc.sections {
            let Some((_, singles, repeats)) = allowed.iter().find(|(name, _, _)| *name == sec.name)
            else {
                self.errors
                    .push(format!("unknown section [{}] for this model", sec.name));
                continue;
            };
            for e in &sec.entries {
                if !singles.contains(&e.key.as_str()) && !repeats.contains(&e.key.as_str()) {
                    self.errors.push(format!(
                        "line {}: unknown key '{}' in [{}]",
                        e.line, e.key, sec.name
                    ));
                }
            }
        }
    }
}

fn hermitian_from_rows(rows: &[Vec<Complex64>]) -> std::result::Result<CMat, String> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix must be square, got {n} rows"));
    }
    let m = CMat::from_fn(n, n, |i, j| rows[i][j]);
    let scale = linalg::max_abs(&m).max(1.0);
    if linalg::herm_defect(&m) > tol::HERM_TOL * scale {
        return Err("matrix is not Hermitian".into());
    }
    Ok(m)
}

fn validate_rho(errors: &mut Vec<String>, rho: &RhoSpec, dim: usize, what: &str) {
    if let RhoSpec::Matrix(rows) = rho {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            errors.push(format!("{what}: initial state matrix must be {dim}x{dim}"));
            return;
        }
        let m = CMat::from_fn(dim, dim, |i, j| rows[i][j]);
        let d = crate::qcore::validate_density(&m);
        if !d.is_valid() {
            errors.push(format!(
                "{what}: initial state is not a density operator \
                 (hermiticity defect {:.2e}, trace defect {:.2e}, min eigenvalue {:.2e})",
                d.hermiticity_defect, d.trace_defect, d.min_eigenvalue
            ));
        }
    }
}

/// Largest grid spacing of the measure a family will build, for the
/// sampling precondition; mirrors the construction without building it.
fn family_max_gap(family: &MeasureFamily, grid_points: usize) -> Option<f64> {
    let n = grid_points.max(2) as f64;
    match family {
        MeasureFamily::Gaussian { sigma, .. } => {
            Some(2.0 * tol::GAUSSIAN_PAD_SIGMAS * sigma / (n - 1.0))
        }
        MeasureFamily::GaussianMixture { terms } => terms
            .iter()
            .map(|&(_, sigma, _)| 2.0 * tol::GAUSSIAN_PAD_SIGMAS * sigma / (n - 1.0))
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |a| a.max(g)))
            }),
        MeasureFamily::Bump { .. } => Some(2.0 / (n - 1.0)),
        MeasureFamily::PointSpectrum { .. } => None,
    }
}

fn validate_araki_zurek(errors: &mut Vec<String>, block: &ArakiZurekBlock, time: &TimeBlock) {
    let h_s = hermitian_from_rows(&block.h_s);
    if let Err(m) = &h_s {
        errors.push(format!("[system] h_s: {m}"));
    }
    let v_s = hermitian_from_rows(&block.v_s);
    if let Err(m) = &v_s {
        errors.push(format!("[system] v_s: {m}"));
    }
    if let (Ok(h), Ok(v)) = (&h_s, &v_s) {
        if h.nrows() != v.nrows() {
            errors.push("[system] h_s and v_s must have the same dimension".into());
        } else {
            let comm = linalg::spectral_norm(&linalg::commutator(h, v));
            if comm > tol::COMMUTATOR_TOL {
                errors.push(format!(
                    "[system] h_s and v_s must commute; commutator norm {comm:.3e}"
                ));
            }
            validate_rho(errors, &block.rho, h.nrows(), "[initial] rho");
        }
    }
    if block.grid_points < 8 {
        errors.push(format!(
            "[environment] grid_points must be at least 8, got {}",
            block.grid_points
        ));
    }
    match &block.family {
        MeasureFamily::Gaussian { sigma, .. } => {
            if *sigma <= 0.0 {
                errors.push(format!("[environment] sigma must be positive, got {sigma}"));
            }
        }
        MeasureFamily::GaussianMixture { terms } => {
            if terms.is_empty() {
                errors
                    .push("[environment] gaussian_mixture needs at least one mixture_term".into());
            }
            for &(_, sigma, _) in terms {
                if sigma <= 0.0 {
                    errors.push(format!(
                        "[environment] mixture_term sigma must be positive, got {sigma}"
                    ));
                }
            }
            let sum: f64 = terms.iter().map(|t| t.0).sum();
            if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
                errors.push(format!(
                    "[environment] mixture weights sum to {sum}, must sum to 1"
                ));
            }
        }
        MeasureFamily::Bump { smoothness } => {
            if *smoothness == 0 || *smoothness > 8 {
                errors.push(format!(
                    "[environment] smoothness must be between 1 and 8, got {smoothness}"
                ));
            }
        }
        MeasureFamily::PointSpectrum { atoms } => {
            if atoms.is_empty() {
                errors.push("[environment] point family needs at least one atom".into());
            }
            if atoms.iter().any(|&(_, w)| w < 0.0) {
                errors.push("[environment] atom weights must be nonnegative".into());
            }
            let sum: f64 = atoms.iter().map(|a| a.1).sum();
            if !atoms.is_empty() && (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
                errors.push(format!(
                    "[environment] atom weights sum to {sum}, must sum to 1"
                ));
            }
        }
    }
    // Sampling precondition: the largest coupling gap times the largest
    // grid spacing times the horizon must stay below pi, or the discrete
    // transform aliases.
    if let (Ok(v), Some(max_gap)) = (&v_s, family_max_gap(&block.family, block.grid_points)) {
        let (vals, _) = linalg::eigh(v);
        let spread = if vals.is_empty() {
            0.0
        } else {
            vals[vals.len() - 1] - vals[0]
        };
        if spread > 0.0 && time.t_max > 0.0 {
            let product = spread * max_gap * time.t_max;
            if product > std::f64::consts::PI * (1.0 + 1e-9) {
                errors.push(format!(
                    "undersampled spectral grid: gap {spread:.3} x spacing {max_gap:.3e} \
                     x horizon {} = {product:.3} exceeds pi; raise grid_points or lower t_max",
                    time.t_max
                ));
            }
        }
    }
}

fn validate_terms(errors: &mut Vec<String>, terms: &[(f64, f64, f64)], what: &str) {
    if terms.is_empty() {
        errors.push(format!("{what}: at least one term is required"));
        return;
    }
    if terms.iter().any(|t| t.2 < 0.0) {
        errors.push(format!("{what}: term weights must be nonnegative"));
    }
    let sum: f64 = terms.iter().map(|t| t.2).sum();
    if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
        errors.push(format!("{what}: term weights sum to {sum}, must sum to 1"));
    }
}

fn validate_common(errors: &mut Vec<String>, config: &ScenarioConfig) {
    if !(config.time.t_max > 0.0) {
        errors.push(format!(
            "[time] t_max must be positive, got {}",
            config.time.t_max
        ));
    }
    if config.time.n_steps < 2 {
        errors.push(format!(
            "[time] n_steps must be at least 2, got {}",
            config.time.n_steps
        ));
    }
    if config.oracle.dim < 2 {
        errors.push(format!(
            "[oracle] dim must be at least 2, got {}",
            config.oracle.dim
        ));
    }
    if !(config.oracle.tolerance > 0.0) {
        errors.push(format!(
            "[oracle] tolerance must be positive, got {}",
            config.oracle.tolerance
        ));
    }
    if config.output.formats.is_empty() {
        errors.push("[output] formats must name at least one of csv, svg".into());
    }
    if config.output.directory.is_empty() {
        errors.push("[output] directory must not be empty".into());
    }
    if config.oracle.enabled && matches!(config.model, ModelBlock::VanHove(_)) {
        errors.push(
            "[oracle] enabled = on is not supported for the vanhove model: multimode \
             grids exceed any brute-force dimension (the mode pipeline is oracle-checked \
             at unit scale); set enabled = off"
                .into(),
        );
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let doc = tokenize(text)?;
    let mut ctx = Ctx {
        doc: &doc,
        errors: Vec::new(),
    };

    let name = ctx.string("scenario", "name", "scenario");
    let model_kind = ctx.string("scenario", "model", "");
    if ctx.doc.section("scenario").is_none() {
        ctx.err("missing [scenario] section");
    } else if model_kind.is_empty() {
        ctx.err("[scenario] model is required");
    }

    if ctx.doc.section("time").is_none() {
        ctx.err("missing [time] section");
    } else if !ctx.has("time", "n_steps") {
        ctx.err("[time] n_steps is required");
    }
    let time = TimeBlock {
        t_max: ctx.f64_required("time", "t_max"),
        n_steps: ctx.usize_or("time", "n_steps", 0),
    };

    let oracle = OracleBlock {
        enabled: ctx.bool_or("oracle", "enabled", false),
        dim: ctx.usize_or("oracle", "dim", 32),
        tolerance: ctx.f64_or("oracle", "tolerance", tol::ORACLE_TOL_DEFAULT),
    };

    let formats_raw = ctx.string("output", "formats", "csv, svg");
    let mut formats = Vec::new();
    for piece in formats_raw.split(',') {
        match piece.trim() {
            "csv" => formats.push(OutputFormat::Csv),
            "svg" => formats.push(OutputFormat::Svg),
            other => ctx.err(format!("[output] formats: unknown format '{other}'")),
        }
    }
    formats.dedup();
    let output = OutputBlock {
        directory: ctx.string("output", "directory", &format!("out/{name}")),
        formats,
    };

    const COMMON: [(&str, &[&str], &[&str]); 4] = [
        ("scenario", &["name", "model"], &[]),
        ("time", &["t_max", "n_steps"], &[]),
        ("oracle", &["enabled", "dim", "tolerance"], &[]),
        ("output", &["directory", "formats"], &[]),
    ];

    let model = match model_kind.as_str() {
        "araki_zurek" => {
            let mut layout = COMMON.to_vec();
            layout.push(("system", &["h_s", "v_s"], &[]));
            layout.push((
                "environment",
                &["family", "grid_points", "sigma", "center", "smoothness"],
                &["atom", "mixture_term"],
            ));
            layout.push(("initial", &["rho"], &[]));
            ctx.check_layout(&layout);

            let h_s = ctx.matrix_required("system", "h_s");
            let v_s = ctx.matrix_required("system", "v_s");
            let family_name = ctx.string("environment", "family", "gaussian");
            let grid_points = ctx.usize_or("environment", "grid_points", tol::DEFAULT_GRID_POINTS);
            let family = match family_name.as_str() {
                "gaussian" => MeasureFamily::Gaussian {
                    sigma: ctx.f64_or("environment", "sigma", 1.0),
                    center: ctx.f64_or("environment", "center", 0.0),
                },
                "gaussian_mixture" => {
                    let mut terms = Vec::new();
                    for e in ctx.repeated("environment", "mixture_term") {
                        match parse_f64_list(&e.value) {
                            Ok(v) if v.len() == 3 => terms.push((v[0], v[1], v[2])),
                            Ok(_) => ctx.err(format!(
                                "line {}: mixture_term needs weight, sigma, center",
                                e.line
                            )),
                            Err(m) => ctx.err(format!("line {}: mixture_term: {m}", e.line)),
                        }
                    }
                    MeasureFamily::GaussianMixture { terms }
                }
                "bump" => MeasureFamily::Bump {
                    smoothness: ctx.usize_or("environment", "smoothness", 1) as u32,
                },
                "point" => {
                    let mut atoms = Vec::new();
                    for e in ctx.repeated("environment", "atom") {
                        match parse_f64_list(&e.value) {
                            Ok(v) if v.len() == 2 => atoms.push((v[0], v[1])),
                            Ok(_) => {
                                ctx.err(format!("line {}: atom needs position, weight", e.line))
                            }
                            Err(m) => ctx.err(format!("line {}: atom: {m}", e.line)),
                        }
                    }
                    MeasureFamily::PointSpectrum { atoms }
                }
                other => {
                    ctx.err(format!(
                        "[environment] family: unknown family '{other}' \
                         (expected gaussian, gaussian_mixture, bump, point)"
                    ));
                    MeasureFamily::Gaussian {
                        sigma: 1.0,
                        center: 0.0,
                    }
                }
            };
            let rho = ctx.rho("initial", "rho");
            ModelBlock::ArakiZurek(ArakiZurekBlock {
                h_s,
                v_s,
                family,
                grid_points,
                rho,
            })
        }
        "vanhove" => {
            let mut layout = COMMON.to_vec();
            layout.push(("system", &["alpha", "beta"], &[]));
            layout.push((
                "environment",
                &[
                    "coupling",
                    "amplitude",
                    "decay",
                    "exponent",
                    "dispersion_speed",
                    "k_min",
                    "k_max",
                    "grid_points",
                    "allow_ir_divergent",
                    "t_probe",
                ],
                &["cutoff"],
            ));
            layout.push(("initial", &["state"], &[]));
            ctx.check_layout(&layout);

            let coupling_name = ctx.string("environment", "coupling", "damped_linear");
            let coupling = match coupling_name.as_str() {
                "damped_linear" => CouplingFamily::DampedLinear {
                    amplitude: ctx.f64_or("environment", "amplitude", 1.0),
                    decay: ctx.f64_or("environment", "decay", 1.0),
                },
                "power_law" => CouplingFamily::PowerLaw {
                    amplitude: ctx.f64_or("environment", "amplitude", 1.0),
                    exponent: ctx.f64_required("environment", "exponent"),
                },
                other => {
                    ctx.err(format!(
                        "[environment] coupling: unknown family '{other}' \
                         (expected damped_linear, power_law)"
                    ));
                    CouplingFamily::DampedLinear {
                        amplitude: 1.0,
                        decay: 1.0,
                    }
                }
            };
            let mut cutoffs = Vec::new();
            for e in ctx.repeated("environment", "cutoff") {
                match e.value.parse::<f64>() {
                    Ok(v) => cutoffs.push(v),
                    Err(_) => ctx.err(format!("line {}: cutoff: bad number '{}'", e.line, e.value)),
                }
            }
            let state = ctx.string("initial", "state", "vacuum");
            if state != "vacuum" {
                ctx.err(format!(
                    "[initial] state: only 'vacuum' is supported for multimode grids, got '{state}'"
                ));
            }
            ModelBlock::VanHove(VanHoveBlock {
                alpha: ctx.f64_required("system", "alpha"),
                beta: ctx.f64_required("system", "beta"),
                coupling,
                dispersion_speed: ctx.f64_or("environment", "dispersion_speed", 1.0),
                k_min: ctx.f64_required("environment", "k_min"),
                k_max: ctx.f64_required("environment", "k_max"),
                grid_points: ctx.usize_or("environment", "grid_points", tol::DEFAULT_GRID_POINTS),
                allow_ir_divergent: ctx.bool_or("environment", "allow_ir_divergent", false),
                cutoffs,
                t_probe: ctx.f64_or("environment", "t_probe", 10.0),
            })
        }
        "single_mode" | "free_particle" => {
            let is_single = model_kind == "single_mode";
            let mut layout = COMMON.to_vec();
            layout.push(("system", &["alpha", "beta"], &[]));
            if is_single {
                layout.push(("environment", &["eps", "f0"], &[]));
            } else {
                layout.push(("environment", &["f0"], &[]));
            }
            layout.push(("initial", &[], &["term"]));
            ctx.check_layout(&layout);

            let mut terms = Vec::new();
            for e in ctx.repeated("initial", "term") {
                match parse_f64_list(&e.value) {
                    Ok(v) if v.len() == 3 => terms.push((v[0], v[1], v[2])),
                    Ok(_) => ctx.err(format!("line {}: term needs f_amp, g_amp, weight", e.line)),
                    Err(m) => ctx.err(format!("line {}: term: {m}", e.line)),
                }
            }
            if terms.is_empty() {
                terms.push((0.0, 0.0, 1.0));
            }
            let alpha = ctx.f64_required("system", "alpha");
            let beta = ctx.f64_required("system", "beta");
            let f0 = ctx.f64_required("environment", "f0");
            if is_single {
                ModelBlock::SingleMode(SingleModeBlock {
                    eps: ctx.f64_required("environment", "eps"),
                    f0,
                    alpha,
                    beta,
                    terms,
                })
            } else {
                ModelBlock::FreeParticle(FreeParticleBlock {
                    f0,
                    alpha,
                    beta,
                    terms,
                })
            }
        }
        "scattering" => {
            let mut layout = COMMON.to_vec();
            layout.push(("system", &["h_s", "v_s"], &[]));
            layout.push((
                "environment",
                &[
                    "dim",
                    "level_spacing",
                    "coupling_sigma",
                    "potential_norm",
                    "seed",
                    "horizon",
                    "moller_samples",
                ],
                &[],
            ));
            layout.push(("initial", &["rho"], &[]));
            ctx.check_layout(&layout);

            ModelBlock::Scattering(ScatteringBlock {
                h_s: ctx.matrix_required("system", "h_s"),
                v_s: ctx.matrix_required("system", "v_s"),
                env_dim: ctx.usize_or("environment", "dim", 64),
                level_spacing: ctx.f64_or("environment", "level_spacing", 20.0),
                coupling_sigma: ctx.f64_or("environment", "coupling_sigma", 1.0),
                potential_norm: ctx.f64_required("environment", "potential_norm"),
                seed: ctx.u64_or("environment", "seed", 7),
                horizon: ctx.f64_required("environment", "horizon"),
                moller_samples: ctx.usize_or("environment", "moller_samples", 80),
                rho: ctx.rho("initial", "rho"),
            })
        }
        "" => {
            // Missing model already recorded; emit a placeholder so the
            // remaining validations can still run and accumulate.
            ModelBlock::SingleMode(SingleModeBlock {
                eps: 1.0,
                f0: 1.0,
                alpha: 0.5,
                beta: -0.5,
                terms: vec![(0.0, 0.0, 1.0)],
            })
        }
        other => {
            ctx.err(format!(
                "[scenario] model: unknown model '{other}' (expected araki_zurek, \
                 vanhove, single_mode, free_particle, scattering)"
            ));
            ModelBlock::SingleMode(SingleModeBlock {
                eps: 1.0,
                f0: 1.0,
                alpha: 0.5,
                beta: -0.5,
                terms: vec![(0.0, 0.0, 1.0)],
            })
        }
    };

    let config = ScenarioConfig {
        name,
        model,
        time,
        oracle,
        output,
    };

    let mut errors = ctx.errors;
    validate_common(&mut errors, &config);
    match &config.model {
        ModelBlock::ArakiZurek(block) => validate_araki_zurek(&mut errors, block, &config.time),
        ModelBlock::VanHove(block) => {
            if !(block.k_min > 0.0 && block.k_max > block.k_min) {
                errors.push(format!(
                    "[environment] need 0 < k_min < k_max, got [{}, {}]",
                    block.k_min, block.k_max
                ));
            }
            if block.grid_points < 8 {
                errors.push(format!(
                    "[environment] grid_points must be at least 8, got {}",
                    block.grid_points
                ));
            }
            if !(block.dispersion_speed > 0.0) {
                errors.push(format!(
                    "[environment] dispersion_speed must be positive, got {}",
                    block.dispersion_speed
                ));
            }
            if !(block.t_probe > 0.0) {
                errors.push(format!(
                    "[environment] t_probe must be positive, got {}",
                    block.t_probe
                ));
            }
            if !block.cutoffs.is_empty() {
                if block.cutoffs.len() < 2 {
                    errors.push("[environment] an infrared scan needs at least 2 cutoffs".into());
                }
                for w in block.cutoffs.windows(2) {
                    if !(w[1] < w[0]) {
                        errors.push(format!(
                            "[environment] cutoffs must strictly decrease, got {} then {}",
                            w[0], w[1]
                        ));
                    }
                }
                if block.cutoffs.first().is_some_and(|&c| c >= block.k_max) {
                    errors.push("[environment] cutoffs must lie below k_max".into());
                }
                if block.cutoffs.last().is_some_and(|&c| c <= 0.0) {
                    errors.push("[environment] cutoffs must be positive".into());
                }
            }
        }
        ModelBlock::SingleMode(block) => {
            if block.eps < 0.0 {
                errors.push(format!(
                    "[environment] eps must be nonnegative, got {}",
                    block.eps
                ));
            }
            validate_terms(&mut errors, &block.terms, "[initial] term");
        }
        ModelBlock::FreeParticle(block) => {
            validate_terms(&mut errors, &block.terms, "[initial] term");
        }
        ModelBlock::Scattering(block) => {
            if let Err(m) = hermitian_from_rows(&block.h_s) {
                errors.push(format!("[system] h_s: {m}"));
            }
            match hermitian_from_rows(&block.v_s) {
                Err(m) => errors.push(format!("[system] v_s: {m}")),
                Ok(v) => validate_rho(&mut errors, &block.rho, v.nrows(), "[initial] rho"),
            }
            if block.env_dim < 2 {
                errors.push(format!(
                    "[environment] dim must be at least 2, got {}",
                    block.env_dim
                ));
            }
            if block.h_s.len() * block.env_dim > tol::DIM_CAP {
                errors.push(format!(
                    "[environment] composite dimension {} exceeds the cap {}",
                    block.h_s.len() * block.env_dim,
                    tol::DIM_CAP
                ));
            }
            if !(block.level_spacing > 0.0) {
                errors.push(format!(
                    "[environment] level_spacing must be positive, got {}",
                    block.level_spacing
                ));
            }
            if !(block.coupling_sigma > 0.0) {
                errors.push(format!(
                    "[environment] coupling_sigma must be positive, got {}",
                    block.coupling_sigma
                ));
            }
            if block.potential_norm < 0.0 {
                errors.push(format!(
                    "[environment] potential_norm must be nonnegative, got {}",
                    block.potential_norm
                ));
            }
            if !(block.horizon > 0.0) {
                errors.push(format!(
                    "[environment] horizon must be positive, got {}",
                    block.horizon
                ));
            }
            if block.moller_samples < 8 {
                errors.push(format!(
                    "[environment] moller_samples must be at least 8, got {}",
                    block.moller_samples
                ));
            }
        }
    }

    if errors.is_empty() {
        Ok(config)
    } else {
        Err(DecoError::ValidationErrors(errors))
    }
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

pub fn serialize_scenario(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(&mut out, "[scenario]".into());
    push(&mut out, format!("name = {}", config.name));
    push(&mut out, format!("model = {}", config.model.kind_name()));
    push(&mut out, String::new());

    match &config.model {
        ModelBlock::ArakiZurek(b) => {
            push(&mut out, "[system]".into());
            push(&mut out, format!("h_s = {}", format_matrix(&b.h_s)));
            push(&mut out, format!("v_s = {}", format_matrix(&b.v_s)));
            push(&mut out, String::new());
            push(&mut out, "[environment]".into());
            match &b.family {
                MeasureFamily::Gaussian { sigma, center } => {
                    push(&mut out, "family = gaussian".into());
                    push(&mut out, format!("sigma = {sigma}"));
                    push(&mut out, format!("center = {center}"));
                }
                MeasureFamily::GaussianMixture { terms } => {
                    push(&mut out, "family = gaussian_mixture".into());
                    for (w, s, c) in terms {
                        push(&mut out, format!("mixture_term = {w}, {s}, {c}"));
                    }
                }
                MeasureFamily::Bump { smoothness } => {
                    push(&mut out, "family = bump".into());
                    push(&mut out, format!("smoothness = {smoothness}"));
                }
                MeasureFamily::PointSpectrum { atoms } => {
                    push(&mut out, "family = point".into());
                    for (x, w) in atoms {
                        push(&mut out, format!("atom = {x}, {w}"));
                    }
                }
            }
            push(&mut out, format!("grid_points = {}", b.grid_points));
            push(&mut out, String::new());
            push(&mut out, "[initial]".into());
            push(&mut out, format!("rho = {}", format_rho(&b.rho)));
        }
        ModelBlock::VanHove(b) => {
            push(&mut out, "[system]".into());
            push(&mut out, format!("alpha = {}", b.alpha));
            push(&mut out, format!("beta = {}", b.beta));
            push(&mut out, String::new());
            push(&mut out, "[environment]".into());
            match &b.coupling {
                CouplingFamily::DampedLinear { amplitude, decay } => {
                    push(&mut out, "coupling = damped_linear".into());
                    push(&mut out, format!("amplitude = {amplitude}"));
                    push(&mut out, format!("decay = {decay}"));
                }
                CouplingFamily::PowerLaw {
                    amplitude,
                    exponent,
                } => {
                    push(&mut out, "coupling = power_law".into());
                    push(&mut out, format!("amplitude = {amplitude}"));
                    push(&mut out, format!("exponent = {exponent}"));
                }
            }
            push(
                &mut out,
                format!("dispersion_speed = {}", b.dispersion_speed),
            );
            push(&mut out, format!("k_min = {}", b.k_min));
            push(&mut out, format!("k_max = {}", b.k_max));
            push(&mut out, format!("grid_points = {}", b.grid_points));
            push(
                &mut out,
                format!(
                    "allow_ir_divergent = {}",
                    if b.allow_ir_divergent { "on" } else { "off" }
                ),
            );
            for c in &b.cutoffs {
                push(&mut out, format!("cutoff = {c}"));
            }
            push(&mut out, format!("t_probe = {}", b.t_probe));
            push(&mut out, String::new());
            push(&mut out, "[initial]".into());
            push(&mut out, "state = vacuum".into());
        }
        ModelBlock::SingleMode(b) => {
            push(&mut out, "[system]".into());
            push(&mut out, format!("alpha = {}", b.alpha));
            push(&mut out, format!("beta = {}", b.beta));
            push(&mut out, String::new());
            push(&mut out, "[environment]".into());
            push(&mut out, format!("eps = {}", b.eps));
            push(&mut out, format!("f0 = {}", b.f0));
            push(&mut out, String::new());
            push(&mut out, "[initial]".into());
            for (f, g, w) in &b.terms {
                push(&mut out, format!("term = {f}, {g}, {w}"));
            }
        }
        ModelBlock::FreeParticle(b) => {
            push(&mut out, "[system]".into());
            push(&mut out, format!("alpha = {}", b.alpha));
            push(&mut out, format!("beta = {}", b.beta));
            push(&mut out, String::new());
            push(&mut out, "[environment]".into());
            push(&mut out, format!("f0 = {}", b.f0));
            push(&mut out, String::new());
            push(&mut out, "[initial]".into());
            for (f, g, w) in &b.terms {
                push(&mut out, format!("term = {f}, {g}, {w}"));
            }
        }
        ModelBlock::Scattering(b) => {
            push(&mut out, "[system]".into());
            push(&mut out, format!("h_s = {}", format_matrix(&b.h_s)));
            push(&mut out, format!("v_s = {}", format_matrix(&b.v_s)));
            push(&mut out, String::new());
            push(&mut out, "[environment]".into());
            push(&mut out, format!("dim = {}", b.env_dim));
            push(&mut out, format!("level_spacing = {}", b.level_spacing));
            push(&mut out, format!("coupling_sigma = {}", b.coupling_sigma));
            push(&mut out, format!("potential_norm = {}", b.potential_norm));
            push(&mut out, format!("seed = {}", b.seed));
            push(&mut out, format!("horizon = {}", b.horizon));
            push(&mut out, format!("moller_samples = {}", b.moller_samples));
            push(&mut out, String::new());
            push(&mut out, "[initial]".into());
            push(&mut out, format!("rho = {}", format_rho(&b.rho)));
        }
    }

    push(&mut out, String::new());
    push(&mut out, "[time]".into());
    push(&mut out, format!("t_max = {}", config.time.t_max));
    push(&mut out, format!("n_steps = {}", config.time.n_steps));
    push(&mut out, String::new());
    push(&mut out, "[oracle]".into());
    push(
        &mut out,
        format!(
            "enabled = {}",
            if config.oracle.enabled { "on" } else { "off" }
        ),
    );
    push(&mut out, format!("dim = {}", config.oracle.dim));
    push(&mut out, format!("tolerance = {}", config.oracle.tolerance));
    push(&mut out, String::new());
    push(&mut out, "[output]".into());
    push(&mut out, format!("directory = {}", config.output.directory));
    let formats = config
        .output
        .formats
        .iter()
        .map(|f| match f {
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        })
        .collect::<Vec<_>>()
        .join(", ");
    push(&mut out, format!("formats = {formats}"));
    out
}

fn format_rho(rho: &RhoSpec) -> String {
    match rho {
        RhoSpec::UniformPlus => "uniform_plus".into(),
        RhoSpec::MaximallyMixed => "maximally_mixed".into(),
        RhoSpec::Matrix(rows) => format_matrix(rows),
    }
}
