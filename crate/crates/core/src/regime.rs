//! Phase map of the long-time behaviour in the `(α, γ)` plane.
//!
//! For `α ≤ ½` the walk oscillates (liminf −∞, limsup +∞) when `γ ≤ ½` and
//! converges when `γ > ½`. For `α > ½` it diverges monotonically to ±∞ when
//! `γ ≤ α` and converges when `γ > α`. Two curves inside the divergent regions
//! are excluded from the fluctuation results and are reported separately.

use serde::{Deserialize, Serialize};

/// Default on-curve detection width for analytical queries.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Critical decay exponent `max(α, ½)`.
pub fn gamma_c(alpha: f64) -> f64 {
    alpha.max(0.5)
}

/// `γ_0(α) = max(α, −α/(1−2α))` for `α < ½`.
pub fn gamma_0(alpha: f64) -> f64 {
    alpha.max(-alpha / (1.0 - 2.0 * alpha))
}

/// Non-negative root of `(1−2α)γ² + 2α²γ − α² = 0`; coincides with [`gamma_0`].
pub fn gamma_0_quadratic_root(alpha: f64) -> f64 {
    positive_root(1.0 - 2.0 * alpha, 2.0 * alpha * alpha, -alpha * alpha)
}

/// For `α ∈ (½, 1]`, the `γ ∈ (0, ½)` solving `γ√(2α−1) = α√(1−2γ)`, i.e. the
/// positive root of `(2α−1)γ² + 2α²γ − α² = 0`.
pub fn excluded_superdiffusive_gamma(alpha: f64) -> f64 {
    positive_root(2.0 * alpha - 1.0, 2.0 * alpha * alpha, -alpha * alpha)
}

/// Largest root of `a x² + b x + c` with `c ≤ 0 < b`, evaluated without
/// cancellation: `x = 2|c| / (b + √(b² − 4ac))`.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let disc = (b * b - 4.0 * a * c).max(0.0);
    -2.0 * c / (b + disc.sqrt())
}

/// Growth descriptor `n^a (log n)^b (log log n)^c (log log log n)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthScale {
    pub n_exponent: f64,
    pub log_exponent: f64,
    pub loglog_exponent: f64,
    pub logloglog_exponent: f64,
}

impl GrowthScale {
    pub const fn new(n: f64, log: f64, loglog: f64, logloglog: f64) -> Self {
        Self {
            n_exponent: n,
            log_exponent: log,
            loglog_exponent: loglog,
            logloglog_exponent: logloglog,
        }
    }

    /// Value at `n` (iterated logarithms are used as-is; callers pick `n` large
    /// enough that they are positive).
    pub fn eval(&self, n: f64) -> f64 {
        let mut v = n.powf(self.n_exponent);
        if self.log_exponent != 0.0 {
            v *= n.ln().powf(self.log_exponent);
        }
        if self.loglog_exponent != 0.0 {
            v *= n.ln().ln().powf(self.loglog_exponent);
        }
        if self.logloglog_exponent != 0.0 {
            v *= n.ln().ln().ln().powf(self.logloglog_exponent);
        }
        v
    }
}

/// Quantitative behaviour attached to a non-convergent regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scaling {
    /// `limsup ±S_n / scale` is a.s. bounded away from 0 and ∞.
    Envelope { scale: GrowthScale },
    /// `S_n / scale` is asymptotically `N(0, variance)`; `envelope` is the LIL scale.
    Gaussian {
        scale: GrowthScale,
        variance: f64,
        envelope: GrowthScale,
    },
    /// `S_n / scale → coefficient · L` a.s., with `L = lim T_n / n^α`.
    RandomDrift { scale: GrowthScale, coefficient: f64 },
}

impl Scaling {
    pub fn scale(&self) -> GrowthScale {
        match *self {
            Scaling::Envelope { scale }
            | Scaling::Gaussian { scale, .. }
            | Scaling::RandomDrift { scale, .. } => scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExcludedCurve {
    /// `γ = γ_0(α)` with `α < ½`.
    Gamma0,
    /// `γ√(2α−1) = α√(1−2γ)` with `α > ½`.
    SuperdiffusiveFluctuation,
}

impl ExcludedCurve {
    pub fn name(self) -> &'static str {
        match self {
            ExcludedCurve::Gamma0 => "gamma_0",
            ExcludedCurve::SuperdiffusiveFluctuation => "superdiffusive_fluctuation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeKind {
    Oscillatory,
    /// `S_n → +∞` or `S_n → −∞` a.s., the sign being random.
    DivergesMonotone,
    Convergent,
    OnCriticalLine,
    OnExcludedCurve(ExcludedCurve),
}

impl RegimeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeKind::Oscillatory => "oscillatory",
            RegimeKind::DivergesMonotone => "diverges_monotone",
            RegimeKind::Convergent => "convergent",
            RegimeKind::OnCriticalLine => "critical_line",
            RegimeKind::OnExcludedCurve(c) => c.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub kind: RegimeKind,
    /// Present only for non-convergent kinds, and only where the growth is known.
    pub scaling: Option<Scaling>,
}

const SQRT_LOGLOG: f64 = 0.5;

/// Places `(α, γ)` in the phase map.
///
/// Points within `eps` of `γ = γ_c(α)` are `OnCriticalLine`; points within
/// `eps` of an excluded curve (inside the divergent region) are
/// `OnExcludedCurve`. The vertical boundary `α = ½`, `γ < ½` is oscillatory.
pub fn classify(alpha: f64, gamma: f64, eps: f64) -> RegimeLabel {
    let critical = gamma_c(alpha);
    if (gamma - critical).abs() <= eps {
        return RegimeLabel {
            kind: RegimeKind::OnCriticalLine,
            scaling: critical_scaling(alpha),
        };
    }
    if gamma > critical {
        return RegimeLabel {
            kind: RegimeKind::Convergent,
            scaling: None,
        };
    }
    if alpha < 0.5 && (gamma - gamma_0(alpha)).abs() <= eps {
        return RegimeLabel {
            kind: RegimeKind::OnExcludedCurve(ExcludedCurve::Gamma0),
            scaling: None,
        };
    }
    if alpha > 0.5 && gamma < 0.5 && (gamma - excluded_superdiffusive_gamma(alpha)).abs() <= eps {
        return RegimeLabel {
            kind: RegimeKind::OnExcludedCurve(ExcludedCurve::SuperdiffusiveFluctuation),
            scaling: Some(drift_scaling(alpha, gamma)),
        };
    }
    if alpha <= 0.5 {
        let scaling = if alpha < 0.5 {
            Scaling::Envelope {
                scale: GrowthScale::new(0.5 - gamma, 0.0, SQRT_LOGLOG, 0.0),
            }
        } else {
            Scaling::Gaussian {
                scale: GrowthScale::new(0.5 - gamma, 0.5, 0.0, 0.0),
                variance: 1.0 / (1.0 - 2.0 * gamma).powi(2),
                envelope: GrowthScale::new(0.5 - gamma, 0.5, 0.0, 0.5),
            }
        };
        RegimeLabel {
            kind: RegimeKind::Oscillatory,
            scaling: Some(scaling),
        }
    } else {
        RegimeLabel {
            kind: RegimeKind::DivergesMonotone,
            scaling: Some(drift_scaling(alpha, gamma)),
        }
    }
}

fn drift_scaling(alpha: f64, gamma: f64) -> Scaling {
    Scaling::RandomDrift {
        scale: GrowthScale::new(alpha - gamma, 0.0, 0.0, 0.0),
        coefficient: alpha / (alpha - gamma),
    }
}

fn critical_scaling(alpha: f64) -> Option<Scaling> {
    if alpha < 0.5 {
        Some(Scaling::Gaussian {
            scale: GrowthScale::new(0.0, 0.5, 0.0, 0.0),
            variance: 1.0 / (1.0 - 2.0 * alpha).powi(2),
            envelope: GrowthScale::new(0.0, 0.5, 0.0, 0.5),
        })
    } else if alpha > 0.5 {
        Some(Scaling::RandomDrift {
            scale: GrowthScale::new(0.0, 1.0, 0.0, 0.0),
            coefficient: alpha,
        })
    } else {
        // α = γ = ½: oscillation is known, the growth rate is not.
        None
    }
}
