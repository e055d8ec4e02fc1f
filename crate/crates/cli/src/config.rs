//! Run configuration: a plain-text key-value format with dotted section
//! prefixes, one directive per line, `#` comments. Later assignments win,
//! unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use dtn_krein::numerics::{c, Complex64};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

/// Parse a complex scalar: `1`, `-2.5`, `i`, `-0.5i`, `2+i`, `1e-3-2e-4i`.
pub fn parse_complex(text: &str) -> Result<Complex64, ConfigError> {
    let s: String = text.chars().filter(|ch| !ch.is_whitespace()).collect();
    if s.is_empty() {
        return err("empty complex literal");
    }
    let parse_real = |part: &str| -> Result<f64, ConfigError> {
        part.parse::<f64>().map_err(|_| ConfigError(format!("bad number '{part}' in '{text}'")))
    };
    let parse_imag = |part: &str| -> Result<f64, ConfigError> {
        let coefficient = &part[..part.len() - 1];
        match coefficient {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            other => parse_real(other),
        }
    };
    // Split at the sign that separates real and imaginary parts: the last
    // '+'/'-' that is not a leading sign and not part of an exponent.
    let bytes = s.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let ch = bytes[k];
        if (ch == b'+' || ch == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    if s.ends_with('i') || s.ends_with('I') {
        match split {
            Some(k) if k > 0 => {
                let re = parse_real(&s[..k])?;
                let im = parse_imag(&s[k..])?;
                Ok(c(re, im))
            }
            _ => Ok(c(0.0, parse_imag(&s)?)),
        }
    } else {
        Ok(c(parse_real(&s)?, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Grid,
    Toy,
    Path3Bounded,
    Path3Coupled,
    ZeroCoupling,
    DecoupledInterior,
    RankDeficient,
    Random,
    RandomCoupled,
}

impl ModelKind {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "grid" => Ok(Self::Grid),
            "toy" => Ok(Self::Toy),
            "path3-bounded" => Ok(Self::Path3Bounded),
            "path3" => Ok(Self::Path3Coupled),
            "zero-coupling" => Ok(Self::ZeroCoupling),
            "decoupled-interior" => Ok(Self::DecoupledInterior),
            "rank-deficient" => Ok(Self::RankDeficient),
            "random" => Ok(Self::Random),
            "random-coupled" => Ok(Self::RandomCoupled),
            other => err(format!("unknown model.kind '{other}'")),
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, Self::RankDeficient | Self::Random | Self::RandomCoupled)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Toy => "toy",
            Self::Path3Bounded => "path3-bounded",
            Self::Path3Coupled => "path3",
            Self::ZeroCoupling => "zero-coupling",
            Self::DecoupledInterior => "decoupled-interior",
            Self::RankDeficient => "rank-deficient",
            Self::Random => "random",
            Self::RandomCoupled => "random-coupled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    Bounded,
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.min + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealAxis {
    /// 11 points spread below the bottom of the spectra.
    Auto,
    Explicit(SweepAxis),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub krein: f64,
    pub trace: f64,
    pub identity: f64,
    pub representation: f64,
    pub symmetry: f64,
    pub nevanlinna: f64,
    pub stieltjes: f64,
    pub steklov: f64,
    pub flux: f64,
    pub green: f64,
    pub singular: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            krein: 1e-10,
            trace: 1e-9,
            identity: 1e-10,
            representation: 1e-10,
            symmetry: 1e-12,
            nevanlinna: 1e-12,
            stieltjes: 1e-9,
            steklov: 1e-12,
            flux: 1e-12,
            green: 1e-12,
            singular: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteFlags {
    pub identity: bool,
    pub representation: bool,
    pub derivative: bool,
    pub nevanlinna: bool,
    pub stieltjes: bool,
    pub green: bool,
    pub krein: bool,
    pub trace: bool,
    pub rank: bool,
}

impl Default for SuiteFlags {
    fn default() -> Self {
        Self {
            identity: true,
            representation: true,
            derivative: true,
            nevanlinna: true,
            stieltjes: true,
            green: true,
            krein: true,
            trace: true,
            rank: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub layout: LayoutKind,
    pub nx: usize,
    pub ny: usize,
    /// None means `1/(nx-1)` (the unit square).
    pub h: Option<f64>,
    /// Inner box `i0 j0 i1 j1` for coupled grids; None picks a centered box.
    pub inner: Option<(usize, usize, usize, usize)>,
    pub preset: String,
    pub coeffs_csv: Option<PathBuf>,
    pub random_interior: usize,
    pub random_boundary: usize,
    pub random_exterior: usize,
    pub seed: Option<u64>,
    pub anchor: Complex64,
    pub lambda_points: Vec<Complex64>,
    pub sweep_re: SweepAxis,
    pub sweep_im: SweepAxis,
    pub real_axis: RealAxis,
    pub eta_list: Vec<f64>,
    pub schatten_p: Vec<f64>,
    pub tol: Tolerances,
    pub suites: SuiteFlags,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Grid,
            layout: LayoutKind::Bounded,
            nx: 8,
            ny: 8,
            h: None,
            inner: None,
            preset: "laplacian".into(),
            coeffs_csv: None,
            random_interior: 30,
            random_boundary: 6,
            random_exterior: 8,
            seed: None,
            anchor: c(0.0, 2.0),
            lambda_points: vec![c(0.0, 1.0), c(2.0, 1.0), c(-1.0, 0.0), c(0.5, 0.25)],
            sweep_re: SweepAxis { min: -2.0, max: 3.0, count: 21 },
            sweep_im: SweepAxis { min: 0.25, max: 2.75, count: 11 },
            real_axis: RealAxis::Auto,
            eta_list: vec![1e2, 1e4, 1e6],
            schatten_p: vec![1.0, 2.0],
            tol: Tolerances::default(),
            suites: SuiteFlags::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (line_no, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected 'key = value', got '{line}'", line_no + 1));
            };
            config.apply(key.trim(), value.trim()).map_err(|e| ConfigError(format!("line {}: {}", line_no + 1, e.0)))?;
        }
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, ConfigError> {
            value.parse::<T>().map_err(|_| ConfigError(format!("bad {what}: '{value}'")))
        }
        fn parse_f64_list(value: &str) -> Result<Vec<f64>, ConfigError> {
            value
                .split_whitespace()
                .map(|tok| parse::<f64>(tok, "number"))
                .collect()
        }
        fn parse_axis(value: &str) -> Result<SweepAxis, ConfigError> {
            let parts = parse_f64_list(value)?;
            if parts.len() != 3 {
                return err(format!("expected 'min max count', got '{value}'"));
            }
            let count = parts[2];
            if count < 1.0 || count.fract() != 0.0 {
                return err(format!("count must be a positive integer, got {count}"));
            }
            Ok(SweepAxis { min: parts[0], max: parts[1], count: count as usize })
        }
        fn parse_bool(value: &str) -> Result<bool, ConfigError> {
            match value {
                "true" | "on" | "yes" => Ok(true),
                "false" | "off" | "no" => Ok(false),
                other => err(format!("expected true/false, got '{other}'")),
            }
        }
        match key {
            "model.kind" => self.kind = ModelKind::parse(value)?,
            "grid.layout" => {
                self.layout = match value {
                    "bounded" => LayoutKind::Bounded,
                    "coupled" => LayoutKind::Coupled,
                    other => return err(format!("unknown grid.layout '{other}'")),
                }
            }
            "grid.nx" => self.nx = parse(value, "grid.nx")?,
            "grid.ny" => self.ny = parse(value, "grid.ny")?,
            "grid.h" => {
                self.h = if value == "auto" { None } else { Some(parse(value, "grid.h")?) };
            }
            "grid.inner" => {
                let parts: Vec<usize> = value
                    .split_whitespace()
                    .map(|tok| parse::<usize>(tok, "grid.inner index"))
                    .collect::<Result<_, _>>()?;
                if parts.len() != 4 {
                    return err(format!("grid.inner expects 'i0 j0 i1 j1', got '{value}'"));
                }
                self.inner = Some((parts[0], parts[1], parts[2], parts[3]));
            }
            "coeffs.preset" => self.preset = value.to_string(),
            "coeffs.csv" => self.coeffs_csv = Some(PathBuf::from(value)),
            "random.interior" => self.random_interior = parse(value, "random.interior")?,
            "random.boundary" => self.random_boundary = parse(value, "random.boundary")?,
            "random.exterior" => self.random_exterior = parse(value, "random.exterior")?,
            "seed" => self.seed = Some(parse(value, "seed")?),
            "anchor" => self.anchor = parse_complex(value)?,
            "lambda.points" => {
                self.lambda_points = value
                    .split(',')
                    .map(|tok| parse_complex(tok.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "sweep.re" => self.sweep_re = parse_axis(value)?,
            "sweep.im" => self.sweep_im = parse_axis(value)?,
            "sweep.real-axis" => {
                self.real_axis =
                    if value == "auto" { RealAxis::Auto } else { RealAxis::Explicit(parse_axis(value)?) };
            }
            "eta.list" => self.eta_list = parse_f64_list(value)?,
            "schatten.p" => self.schatten_p = parse_f64_list(value)?,
            "tol.krein" => self.tol.krein = parse(value, "tolerance")?,
            "tol.trace" => self.tol.trace = parse(value, "tolerance")?,
            "tol.identity" => self.tol.identity = parse(value, "tolerance")?,
            "tol.representation" => self.tol.representation = parse(value, "tolerance")?,
            "tol.symmetry" => self.tol.symmetry = parse(value, "tolerance")?,
            "tol.nevanlinna" => self.tol.nevanlinna = parse(value, "tolerance")?,
            "tol.stieltjes" => self.tol.stieltjes = parse(value, "tolerance")?,
            "tol.steklov" => self.tol.steklov = parse(value, "tolerance")?,
            "tol.flux" => self.tol.flux = parse(value, "tolerance")?,
            "tol.green" => self.tol.green = parse(value, "tolerance")?,
            "tol.singular" => self.tol.singular = parse(value, "tolerance")?,
            "suite.identity" => self.suites.identity = parse_bool(value)?,
            "suite.representation" => self.suites.representation = parse_bool(value)?,
            "suite.derivative" => self.suites.derivative = parse_bool(value)?,
            "suite.nevanlinna" => self.suites.nevanlinna = parse_bool(value)?,
            "suite.stieltjes" => self.suites.stieltjes = parse_bool(value)?,
            "suite.green" => self.suites.green = parse_bool(value)?,
            "suite.krein" => self.suites.krein = parse_bool(value)?,
            "suite.trace" => self.suites.trace = parse_bool(value)?,
            "suite.rank" => self.suites.rank = parse_bool(value)?,
            "out.dir" => self.out_dir = PathBuf::from(value),
            other => return err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Validate the cross-field invariants. Violations are configuration
    /// errors (exit status 2), raised before any file is written.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let tolerances = [
            ("tol.krein", self.tol.krein),
            ("tol.trace", self.tol.trace),
            ("tol.identity", self.tol.identity),
            ("tol.representation", self.tol.representation),
            ("tol.symmetry", self.tol.symmetry),
            ("tol.nevanlinna", self.tol.nevanlinna),
            ("tol.stieltjes", self.tol.stieltjes),
            ("tol.steklov", self.tol.steklov),
            ("tol.flux", self.tol.flux),
            ("tol.green", self.tol.green),
            ("tol.singular", self.tol.singular),
        ];
        for (name, value) in tolerances {
            if !(value > 0.0) || !value.is_finite() {
                return err(format!("{name} must be positive, got {value}"));
            }
        }
        if self.kind.needs_seed() && self.seed.is_none() {
            return err(format!("model.kind = {} requires a seed", self.kind.label()));
        }
        if self.lambda_points.is_empty() {
            return err("lambda.points must not be empty");
        }
        for axis in [&self.sweep_re, &self.sweep_im] {
            if axis.count < 1 {
                return err("sweep counts must be >= 1");
            }
            if !axis.min.is_finite() || !axis.max.is_finite() {
                return err("sweep bounds must be finite");
            }
        }
        if let RealAxis::Explicit(axis) = &self.real_axis {
            if axis.count < 1 {
                return err("sweep counts must be >= 1");
            }
        }
        if self.eta_list.iter().any(|eta| !(*eta > 0.0)) {
            return err("eta.list entries must be positive");
        }
        if self.schatten_p.iter().any(|p| !(*p > 0.0)) {
            return err("schatten.p entries must be positive");
        }
        if self.anchor.im == 0.0 {
            return err("anchor must be nonreal");
        }
        if self.kind == ModelKind::Grid {
            if self.nx < 3 || self.ny < 3 {
                return err(format!("grid must be at least 3x3 nodes, got {}x{}", self.nx, self.ny));
            }
            if self.preset == "csv" && self.coeffs_csv.is_none() {
                return err("coeffs.preset = csv requires coeffs.csv = <path>");
            }
        }
        Ok(())
    }

    pub fn grid_h(&self) -> f64 {
        self.h.unwrap_or(1.0 / (self.nx - 1) as f64)
    }

    /// Inner box of a coupled grid: configured or a centered default.
    pub fn inner_box(&self) -> (usize, usize, usize, usize) {
        self.inner.unwrap_or_else(|| {
            let i0 = self.nx / 3;
            let j0 = self.ny / 3;
            ((i0).max(2), (j0).max(2), (2 * self.nx / 3).min(self.nx - 3), (2 * self.ny / 3).min(self.ny - 3))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_forms() {
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("-2.5").unwrap(), c(-2.5, 0.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("2+i").unwrap(), c(2.0, 1.0));
        assert_eq!(parse_complex("0.5+0.25i").unwrap(), c(0.5, 0.25));
        assert_eq!(parse_complex("1e-3-2e-4i").unwrap(), c(1e-3, -2e-4));
        assert_eq!(parse_complex(" -1.5 + 0.5i ").unwrap(), c(-1.5, 0.5));
        assert!(parse_complex("2+").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn parses_config_text() {
        let text = "
# a comment
model.kind = grid
grid.nx = 16
grid.ny = 12   # trailing comment
grid.h = 0.125
lambda.points = i, 2+i, -1
tol.krein = 1e-9
suite.rank = off
out.dir = results
";
        let config = RunConfig::from_str(text).unwrap();
        assert_eq!(config.nx, 16);
        assert_eq!(config.ny, 12);
        assert_eq!(config.h, Some(0.125));
        assert_eq!(config.lambda_points.len(), 3);
        assert_eq!(config.tol.krein, 1e-9);
        assert!(!config.suites.rank);
        assert_eq!(config.out_dir, PathBuf::from("results"));
        config.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_str("grid.nz = 4").is_err());
        assert!(RunConfig::from_str("grid.nx").is_err());
        assert!(RunConfig::from_str("sweep.re = 1 2").is_err());
    }

    #[test]
    fn validation_catches_invariants() {
        let mut config = RunConfig::default();
        config.tol.krein = 0.0;
        assert!(config.validate().is_err());

        let mut config = RunConfig::default();
        config.kind = ModelKind::Random;
        assert!(config.validate().is_err());
        config.seed = Some(7);
        assert!(config.validate().is_ok());

        let mut config = RunConfig::default();
        config.anchor = c(1.0, 0.0);
        assert!(config.validate().is_err());
    }

    #[test]
    fn sweep_axis_points() {
        let axis = SweepAxis { min: 0.0, max: 1.0, count: 3 };
        assert_eq!(axis.points(), vec![0.0, 0.5, 1.0]);
        let single = SweepAxis { min: 2.0, max: 5.0, count: 1 };
        assert_eq!(single.points(), vec![2.0]);
    }
}
