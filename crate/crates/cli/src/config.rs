use std::fmt;
use std::path::{Path, PathBuf};

use lagdiff::energy::Law;
use lagdiff::solver::NewtonOptions;
use lagdiff::Integrator;
use serde::Serialize;

/// Invalid configuration, tagged with the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Where the reference mesh comes from. Lengths given as `support` resolve
/// to the support radius of the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Interval {
        left: Length,
        right: Length,
        nodes: usize,
    },
    IntervalRefined {
        left: Length,
        right: Length,
        nodes: usize,
        splits: usize,
    },
    Structured {
        x: (f64, f64),
        y: (f64, f64),
        nx: usize,
        ny: usize,
    },
    /// Graded ring mesh of the disk with about `nodes` nodes. With `base`,
    /// the mesh is the member of the ring-doubling family started at `base`
    /// nodes that is closest to `nodes`.
    Disk {
        radius: Length,
        nodes: usize,
        grading: f64,
        base: Option<usize>,
    },
    ArcTube {
        center_radius: f64,
        half_width: f64,
        theta0: f64,
        theta1: f64,
        nodes: usize,
    },
    /// Axisymmetric reduction on a uniform radial grid.
    Radial {
        radius: Length,
        nodes: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Value(f64),
    Support,
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Value(v) => write!(f, "{v}"),
            Length::Support => write!(f, "support"),
        }
    }
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Interval { left, right, nodes } => write!(f, "interval:{left},{right},{nodes}"),
            Self::IntervalRefined { left, right, nodes, splits } => {
                write!(f, "interval-refined:{left},{right},{nodes},{splits}")
            }
            Self::Structured { x, y, nx, ny } => write!(f, "structured:{},{},{},{},{nx},{ny}", x.0, x.1, y.0, y.1),
            Self::Disk { radius, nodes, grading, base: None } => write!(f, "disk:{radius},{nodes},{grading}"),
            Self::Disk { radius, nodes, grading, base: Some(b) } => write!(f, "disk:{radius},{nodes},{grading},{b}"),
            Self::ArcTube { center_radius, half_width, theta0, theta1, nodes } => {
                write!(f, "arc-tube:{center_radius},{half_width},{theta0},{theta1},{nodes}")
            }
            Self::Radial { radius, nodes } => write!(f, "radial:{radius},{nodes}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Parses `2`, `-1.5`, `pi`, `-pi`, `pi/2`, `2pi`, `3*pi/2`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (sign, s) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let coef = num.trim().strip_suffix("pi")?.trim().trim_end_matches('*');
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    Some(sign * coef * std::f64::consts::PI / den)
}

fn parse_length(s: &str) -> Option<Length> {
    if s.trim() == "support" {
        Some(Length::Support)
    } else {
        parse_number(s).map(Length::Value)
    }
}

impl MeshSource {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let bad = |m: String| ConfigError::new("mesh", m);
        let text = text.trim();
        let (kind, rest) = text.split_once(':').unwrap_or(("file", text));
        if kind == "file" {
            return Ok(Self::File(PathBuf::from(rest.trim())));
        }
        let args: Vec<&str> = rest.split(',').map(str::trim).collect();
        let want = |n: &[usize]| {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(bad(format!("'{kind}' takes {n:?} arguments, got {}", args.len())))
            }
        };
        let num = |i: usize| parse_number(args[i]).ok_or_else(|| bad(format!("'{}' is not a number", args[i])));
        let len = |i: usize| parse_length(args[i]).ok_or_else(|| bad(format!("'{}' is not a length", args[i])));
        let count = |i: usize| args[i].parse::<usize>().map_err(|_| bad(format!("'{}' is not a count", args[i])));
        match kind {
            "interval" => {
                want(&[2, 3])?;
                if args.len() == 2 {
                    Ok(Self::Interval { left: len(0)?, right: len(0)?, nodes: count(1)? }.symmetric())
                } else {
                    Ok(Self::Interval { left: len(0)?, right: len(1)?, nodes: count(2)? })
                }
            }
            "interval-refined" => {
                want(&[4])?;
                Ok(Self::IntervalRefined { left: len(0)?, right: len(1)?, nodes: count(2)?, splits: count(3)? })
            }
            "structured" => {
                want(&[6])?;
                Ok(Self::Structured { x: (num(0)?, num(1)?), y: (num(2)?, num(3)?), nx: count(4)?, ny: count(5)? })
            }
            "disk" => {
                want(&[3, 4])?;
                let base = if args.len() == 4 { Some(count(3)?) } else { None };
                Ok(Self::Disk { radius: len(0)?, nodes: count(1)?, grading: num(2)?, base })
            }
            "arc-tube" => {
                want(&[5])?;
                Ok(Self::ArcTube {
                    center_radius: num(0)?,
                    half_width: num(1)?,
                    theta0: num(2)?,
                    theta1: num(3)?,
                    nodes: count(4)?,
                })
            }
            "radial" => {
                want(&[2])?;
                Ok(Self::Radial { radius: len(0)?, nodes: count(1)? })
            }
            other => Err(bad(format!(
                "unknown mesh kind '{other}' (expected interval, interval-refined, structured, disk, arc-tube, radial or file)"
            ))),
        }
    }

    /// `interval:support,N` is shorthand for the symmetric support interval.
    fn symmetric(self) -> Self {
        match self {
            Self::Interval { left: Length::Value(v), right: _, nodes } => {
                Self::Interval { left: Length::Value(-v.abs()), right: Length::Value(v.abs()), nodes }
            }
            other => other,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Interval { .. } | Self::IntervalRefined { .. } | Self::Radial { .. } => Some(1),
            Self::Structured { .. } | Self::Disk { .. } | Self::ArcTube { .. } => Some(2),
            Self::File(_) => None,
        }
    }

    /// Nominal node count, where the source has one.
    pub fn nodes(&self) -> Option<usize> {
        match *self {
            Self::Interval { nodes, .. }
            | Self::IntervalRefined { nodes, .. }
            | Self::Disk { nodes, .. }
            | Self::ArcTube { nodes, .. }
            | Self::Radial { nodes, .. } => Some(nodes),
            Self::Structured { nx, ny, .. } => Some((nx + 1) * (ny + 1)),
            Self::File(_) => None,
        }
    }

    /// Same source with a different node count, for refinement ladders.
    pub fn with_nodes(&self, n: usize) -> Option<Self> {
        let mut out = self.clone();
        match &mut out {
            Self::Interval { nodes, .. }
            | Self::IntervalRefined { nodes, .. }
            | Self::Disk { nodes, .. }
            | Self::ArcTube { nodes, .. }
            | Self::Radial { nodes, .. } => *nodes = n,
            Self::Structured { .. } | Self::File(_) => return None,
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Free,
    Pinned,
}

/// Everything one run needs. Keys of the config file are the field names.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub law: Law,
    pub alpha: f64,
    pub dim: usize,
    pub mesh: MeshSource,
    pub datum: String,
    pub theta: f64,
    pub c0: f64,
    pub t0: f64,
    pub tau: f64,
    pub t_final: f64,
    pub boundary: BoundaryKind,
    pub cadence: usize,
    pub out: Option<PathBuf>,
    pub integrator: Integrator,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub newton_damping: f64,
}

pub const KEYS: [&str; 17] = [
    "law",
    "alpha",
    "dim",
    "mesh",
    "datum",
    "theta",
    "c0",
    "t0",
    "tau",
    "t_final",
    "boundary",
    "cadence",
    "out",
    "integrator",
    "newton_tol",
    "newton_max_iter",
    "newton_damping",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let newton = NewtonOptions::default();
        Self {
            law: Law::Law2,
            alpha: 2.0,
            dim: 1,
            mesh: MeshSource::Interval { left: Length::Support, right: Length::Support, nodes: 51 },
            datum: "barenblatt".into(),
            theta: 0.0,
            c0: 1.0,
            t0: 1.0,
            tau: 0.01,
            t_final: 1.0,
            boundary: BoundaryKind::Free,
            cadence: 10,
            out: None,
            integrator: Integrator::BackwardEuler,
            newton_tol: newton.tol,
            newton_max_iter: newton.max_iter,
            newton_damping: newton.damping,
        }
    }
}

fn law_name(law: Law) -> &'static str {
    match law {
        Law::Law1 => "law1",
        Law::Law2 => "law2",
    }
}

fn integrator_name(i: Integrator) -> &'static str {
    match i {
        Integrator::BackwardEuler => "backward",
        Integrator::ExplicitEuler => "explicit",
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen_dim = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new("config", format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            seen_dim |= key == "dim";
            cfg.set(key, value.trim())?;
        }
        if !seen_dim {
            if let Some(d) = cfg.mesh.dim() {
                cfg.dim = d;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let float = |v: &str| parse_number(v).ok_or_else(|| ConfigError::new(key, format!("'{v}' is not a number")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| ConfigError::new(key, format!("'{v}' is not a count")));
        match key {
            "law" => {
                self.law = match value {
                    "law1" => Law::Law1,
                    "law2" => Law::Law2,
                    _ => return Err(ConfigError::new(key, format!("'{value}' is not law1 or law2"))),
                }
            }
            "alpha" => self.alpha = float(value)?,
            "dim" => self.dim = int(value)?,
            "mesh" => self.mesh = MeshSource::parse(value)?,
            "datum" => self.datum = value.to_string(),
            "theta" => self.theta = float(value)?,
            "c0" => self.c0 = float(value)?,
            "t0" => self.t0 = float(value)?,
            "tau" => self.tau = float(value)?,
            "t_final" => self.t_final = float(value)?,
            "boundary" => {
                self.boundary = match value {
                    "free" => BoundaryKind::Free,
                    "pinned" => BoundaryKind::Pinned,
                    _ => return Err(ConfigError::new(key, format!("'{value}' is not free or pinned"))),
                }
            }
            "cadence" => self.cadence = int(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "integrator" => {
                self.integrator = match value {
                    "backward" => Integrator::BackwardEuler,
                    "explicit" => Integrator::ExplicitEuler,
                    _ => return Err(ConfigError::new(key, format!("'{value}' is not backward or explicit"))),
                }
            }
            "newton_tol" => self.newton_tol = float(value)?,
            "newton_max_iter" => self.newton_max_iter = int(value)?,
            "newton_damping" => self.newton_damping = float(value)?,
            _ => return Err(ConfigError::new(key, format!("unknown key (expected one of {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: String| if ok { Ok(()) } else { Err(ConfigError::new(key, msg)) };
        check(self.tau > 0.0, "tau", format!("must be positive, got {}", self.tau))?;
        check(self.t_final >= 0.0, "t_final", format!("must be non-negative, got {}", self.t_final))?;
        check(self.cadence >= 1, "cadence", "must be at least 1".into())?;
        check(self.alpha > 1.0, "alpha", format!("must exceed 1, got {}", self.alpha))?;
        check(self.dim == 1 || self.dim == 2, "dim", format!("must be 1 or 2, got {}", self.dim))?;
        if let Some(d) = self.mesh.dim() {
            check(d == self.dim, "mesh", format!("{}D mesh for a {}D run", d, self.dim))?;
        }
        check(self.newton_tol > 0.0, "newton_tol", format!("must be positive, got {}", self.newton_tol))?;
        check(self.newton_max_iter >= 1, "newton_max_iter", "must be at least 1".into())?;
        check(
            self.newton_damping > 0.0 && self.newton_damping <= 1.0,
            "newton_damping",
            format!("must lie in (0, 1], got {}", self.newton_damping),
        )?;
        check(self.t0 > 0.0, "t0", format!("must be positive, got {}", self.t0))?;
        check(self.c0 > 0.0, "c0", format!("must be positive, got {}", self.c0))?;
        if matches!(self.mesh, MeshSource::Radial { .. }) {
            check(
                self.integrator == Integrator::BackwardEuler,
                "integrator",
                "the radial reduction only supports backward".into(),
            )?;
            check(
                self.boundary == BoundaryKind::Free,
                "boundary",
                "the radial reduction has a free outer node".into(),
            )?;
        }
        Ok(())
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            damping: self.newton_damping,
            ..NewtonOptions::default()
        }
    }

    pub fn formal(&self) -> bool {
        self.law == Law::Law2 && self.alpha < 2.0
    }

    /// Config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("law", law_name(self.law).into());
        put("alpha", self.alpha.to_string());
        put("dim", self.dim.to_string());
        put("mesh", self.mesh.to_string());
        put("datum", self.datum.clone());
        put("theta", self.theta.to_string());
        put("c0", self.c0.to_string());
        put("t0", self.t0.to_string());
        put("tau", self.tau.to_string());
        put("t_final", self.t_final.to_string());
        put("boundary", if self.boundary == BoundaryKind::Free { "free" } else { "pinned" }.into());
        put("cadence", self.cadence.to_string());
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        put("integrator", integrator_name(self.integrator).into());
        put("newton_tol", self.newton_tol.to_string());
        put("newton_max_iter", self.newton_max_iter.to_string());
        put("newton_damping", self.newton_damping.to_string());
        s
    }
}
