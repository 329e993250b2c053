//! Exact Barenblatt–Pattle solutions, waiting-time theory and the library of
//! initial data used by the experiments.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Barenblatt–Pattle source solution of ρ_t = Δ(ρ^α) in d = 1 or 2 dimensions.
///
/// In 1D the constant is fixed to 1; in d-D it is the mass parameter C0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    alpha: f64,
    dim: usize,
    c0: f64,
}

impl Barenblatt {
    pub fn one_d(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1, 1.0)
    }

    pub fn new(alpha: f64, dim: usize, c0: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("C0 must be positive, got {c0}")));
        }
        Ok(Self { alpha, dim, c0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// k = (α − 1 + 2/d)^{-1}.
    pub fn k(&self) -> f64 {
        1.0 / (self.alpha - 1.0 + 2.0 / self.dim as f64)
    }

    /// Density at distance r from the origin.
    pub fn value_at_radius(&self, r: f64, t: f64) -> f64 {
        let (a, d, k) = (self.alpha, self.dim as f64, self.k());
        let bracket = self.c0 - k * (a - 1.0) / (2.0 * d * a) * r * r / t.powf(2.0 * k / d);
        if bracket <= 0.0 {
            return 0.0;
        }
        t.powf(-k) * bracket.powf(1.0 / (a - 1.0))
    }

    /// B_α(x, t); in 1D only the first coordinate is used.
    pub fn value(&self, x: [f64; 2], t: f64) -> f64 {
        let r = if self.dim == 1 { x[0].abs() } else { x[0].hypot(x[1]) };
        self.value_at_radius(r, t)
    }

    /// Radius ξ_α(t) of the support.
    pub fn interface_radius(&self, t: f64) -> f64 {
        let (a, d, k) = (self.alpha, self.dim as f64, self.k());
        (2.0 * d * a * self.c0 / (k * (a - 1.0))).sqrt() * t.powf(k / d)
    }
}

/// Theoretical waiting time 1/(2(α+1)(1−θ)) for the sine-power datum; `None`
/// outside 0 ≤ θ ≤ 1/4 where the formula is not available.
pub fn waiting_time_theory(theta: f64, alpha: f64) -> Option<f64> {
    if (0.0..=0.25).contains(&theta) {
        Some(1.0 / (2.0 * (alpha + 1.0) * (1.0 - theta)))
    } else {
        None
    }
}

/// Parameters an initial datum may read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatumParams {
    pub alpha: f64,
    pub dim: usize,
    pub theta: f64,
    pub c0: f64,
    /// Time at which the Barenblatt profile is sampled.
    pub t0: f64,
}

impl Default for DatumParams {
    fn default() -> Self {
        Self { alpha: 2.0, dim: 1, theta: 0.0, c0: 1.0, t0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDatum {
    Barenblatt {
        profile: Barenblatt,
        t0: f64,
    },
    /// (α/(α−1)) ρ0^{α−1} = (1−θ) sin²X + θ sin⁴X on [−π, 0].
    SinePower {
        theta: f64,
        alpha: f64,
    },
    /// cos(π r / 2) on the unit disk.
    CosineBump,
    /// Horseshoe-shaped support around the circle of radius 0.75.
    Donut {
        alpha: f64,
    },
    /// Two Gaussian peaks joined by a thin layer on [−1, 1]².
    TwoPeaks,
}

pub const DATUM_NAMES: [&str; 5] = ["barenblatt", "sine-power", "cosine-bump-2d", "donut", "two-peaks"];

impl InitialDatum {
    pub fn from_name(name: &str, p: &DatumParams) -> Result<Self> {
        match name {
            "barenblatt" => {
                let c0 = if p.dim == 1 { 1.0 } else { p.c0 };
                Ok(Self::Barenblatt { profile: Barenblatt::new(p.alpha, p.dim, c0)?, t0: p.t0 })
            }
            "sine-power" => {
                if !(p.alpha > 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", p.alpha)));
                }
                if !(0.0..=1.0).contains(&p.theta) {
                    return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {}", p.theta)));
                }
                Ok(Self::SinePower { theta: p.theta, alpha: p.alpha })
            }
            "cosine-bump-2d" => Ok(Self::CosineBump),
            "donut" => {
                if !(p.alpha > 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", p.alpha)));
                }
                Ok(Self::Donut { alpha: p.alpha })
            }
            "two-peaks" => Ok(Self::TwoPeaks),
            other => Err(Error::InvalidParameter(format!(
                "unknown initial datum '{other}' (expected one of {})",
                DATUM_NAMES.join(", ")
            ))),
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        match *self {
            Self::Barenblatt { profile, t0 } => profile.value(x, t0),
            Self::SinePower { theta, alpha } => {
                let s = x[0];
                if !(-PI..=0.0).contains(&s) {
                    return 0.0;
                }
                let s2 = s.sin().powi(2);
                let v0 = (1.0 - theta) * s2 + theta * s2 * s2;
                ((alpha - 1.0) / alpha * v0).powf(1.0 / (alpha - 1.0))
            }
            Self::CosineBump => {
                let r = x[0].hypot(x[1]);
                if r <= 1.0 {
                    (FRAC_PI_2 * r).cos()
                } else {
                    0.0
                }
            }
            Self::Donut { alpha } => {
                let (px, py) = (x[0], x[1]);
                let r = px.hypot(py);
                let q = 0.25 * 0.25;
                let base = if (0.5..=1.0).contains(&r) && (px < 0.0 || py < 0.0) {
                    q - (r - 0.75).powi(2)
                } else if px * px + (py - 0.75).powi(2) <= q && px >= 0.0 {
                    q - px * px - (py - 0.75).powi(2)
                } else if (px - 0.75).powi(2) + py * py <= q && py >= 0.0 {
                    q - (px - 0.75).powi(2) - py * py
                } else {
                    0.0
                };
                if base <= 0.0 {
                    return 0.0;
                }
                (25.0 * base.powf(1.5)).powf(1.0 / (alpha - 1.0))
            }
            Self::TwoPeaks => {
                let (px, py) = (x[0], x[1]);
                (-20.0 * ((px - 0.3).powi(2) + (py - 0.3).powi(2))).exp()
                    + (-20.0 * ((px + 0.3).powi(2) + (py + 0.3).powi(2))).exp()
                    + 0.001
            }
        }
    }
}
