//! Bounded interaction functions `V` with their declared one-sided limits.
//!
//! Limits are declared with the interaction, never inferred: `at_zero`
//! holds `(V_+, V_-)`, the one-sided limits at `0±`, and `at_infinity`
//! holds `(V^+, V^-)`, the limits at `±∞`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CATALOG: &[&str] = &[
    "sgn",
    "heaviside",
    "arctan",
    "tanh",
    "gauss_bump",
    "step_at",
    "erf_scaled",
];

#[derive(Clone)]
enum Rule {
    Sgn,
    Heaviside,
    Arctan,
    Tanh,
    GaussBump,
    StepAt(f64),
    ErfScaled(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// One-sided limit pair `(at the + side, at the - side)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPair {
    pub plus: f64,
    pub minus: f64,
}

impl LimitPair {
    pub fn new(plus: f64, minus: f64) -> Self {
        LimitPair { plus, minus }
    }
    pub fn mean(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }
    pub fn jump(&self) -> f64 {
        0.5 * (self.plus - self.minus)
    }
}

#[derive(Clone)]
pub struct BoundedInteraction {
    name: String,
    rule: Rule,
    sup_norm: f64,
    at_zero: Option<LimitPair>,
    at_infinity: Option<LimitPair>,
    discontinuities: Vec<f64>,
    features: Vec<f64>,
}

impl fmt::Debug for BoundedInteraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedInteraction")
            .field("name", &self.name)
            .field("sup_norm", &self.sup_norm)
            .field("at_zero", &self.at_zero)
            .field("at_infinity", &self.at_infinity)
            .field("discontinuities", &self.discontinuities)
            .finish()
    }
}

/// The four coefficients entering the limit formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub mean0: Option<f64>,
    pub jump0: Option<f64>,
    pub meaninf: Option<f64>,
    pub jumpinf: Option<f64>,
}

impl BoundedInteraction {
    /// Build a catalog interaction. `shape` is the position of the step for
    /// `step_at` and the slope for `erf_scaled` (defaults 0 and 1).
    pub fn catalog(name: &str, shape: Option<f64>) -> Result<Self> {
        let both = |plus, minus| Some(LimitPair::new(plus, minus));
        let v = match name {
            "sgn" => Self::declared(name, Rule::Sgn, 1.0, both(1.0, -1.0), both(1.0, -1.0), vec![0.0]),
            "heaviside" => {
                Self::declared(name, Rule::Heaviside, 1.0, both(1.0, 0.0), both(1.0, 0.0), vec![0.0])
            }
            "arctan" => Self::declared(
                name,
                Rule::Arctan,
                std::f64::consts::FRAC_PI_2,
                both(0.0, 0.0),
                both(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2),
                vec![],
            ),
            "tanh" => Self::declared(name, Rule::Tanh, 1.0, both(0.0, 0.0), both(1.0, -1.0), vec![]),
            "gauss_bump" => {
                Self::declared(name, Rule::GaussBump, 1.0, both(1.0, 1.0), both(0.0, 0.0), vec![])
            }
            "step_at" => {
                let w0 = shape.unwrap_or(0.0);
                if !w0.is_finite() {
                    return Err(crate::error::invalid("shape", "step position must be finite"));
                }
                let zero = if w0 > 0.0 {
                    LimitPair::new(0.0, 0.0)
                } else if w0 < 0.0 {
                    LimitPair::new(1.0, 1.0)
                } else {
                    LimitPair::new(1.0, 0.0)
                };
                Self::declared(
                    name,
                    Rule::StepAt(w0),
                    1.0,
                    Some(zero),
                    both(1.0, 0.0),
                    vec![w0],
                )
            }
            "erf_scaled" => {
                let c = shape.unwrap_or(1.0);
                if !(c > 0.0 && c.is_finite()) {
                    return Err(crate::error::invalid("shape", "erf slope must be positive"));
                }
                Self::declared(
                    name,
                    Rule::ErfScaled(c),
                    1.0,
                    both(0.0, 0.0),
                    both(1.0, -1.0),
                    vec![],
                )
            }
            _ => {
                return Err(Error::UnknownInteraction {
                    name: name.to_string(),
                    available: CATALOG.join(", "),
                })
            }
        };
        Ok(v)
    }

    fn declared(
        name: &str,
        rule: Rule,
        sup_norm: f64,
        at_zero: Option<LimitPair>,
        at_infinity: Option<LimitPair>,
        discontinuities: Vec<f64>,
    ) -> Self {
        BoundedInteraction {
            name: name.to_string(),
            rule,
            sup_norm,
            at_zero,
            at_infinity,
            discontinuities,
            // Every catalog entry changes on the unit scale around 0.
            features: vec![0.0],
        }
    }

    /// A user-supplied interaction. Limits and jump locations must be declared.
    pub fn custom<F>(
        name: &str,
        f: F,
        sup_norm: f64,
        at_zero: Option<LimitPair>,
        at_infinity: Option<LimitPair>,
        discontinuities: Vec<f64>,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(sup_norm.is_finite() && sup_norm >= 0.0) {
            return Err(crate::error::invalid("sup_norm", "must be finite and >= 0"));
        }
        Ok(BoundedInteraction {
            name: name.to_string(),
            rule: Rule::Custom(Arc::new(f)),
            sup_norm,
            at_zero,
            at_infinity,
            features: vec![0.0],
            discontinuities,
        })
    }

    /// The constant interaction `V ≡ c`.
    pub fn constant(c: f64) -> Self {
        BoundedInteraction {
            name: format!("const({c})"),
            rule: Rule::Custom(Arc::new(move |_| c)),
            sup_norm: c.abs(),
            at_zero: Some(LimitPair::new(c, c)),
            at_infinity: Some(LimitPair::new(c, c)),
            discontinuities: vec![],
            features: vec![],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn at_zero(&self) -> Option<LimitPair> {
        self.at_zero
    }

    pub fn at_infinity(&self) -> Option<LimitPair> {
        self.at_infinity
    }

    /// Points where `V` jumps.
    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    /// Jumps plus points where `V` changes on the unit scale; quadrature
    /// splits its domain at these (after rescaling).
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.discontinuities.iter().chain(self.features.iter()).copied()
    }

    /// Whether `V(-w) = -V(w)`.
    pub fn is_odd(&self) -> bool {
        matches!(
            self.rule,
            Rule::Sgn | Rule::Arctan | Rule::Tanh | Rule::ErfScaled(_)
        )
    }

    pub fn eval(&self, w: f64) -> f64 {
        match &self.rule {
            Rule::Sgn => {
                if w > 0.0 {
                    1.0
                } else if w < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Rule::Heaviside => step(w, 0.0),
            Rule::Arctan => w.atan(),
            Rule::Tanh => w.tanh(),
            Rule::GaussBump => (-0.5 * w * w).exp(),
            Rule::StepAt(w0) => step(w, *w0),
            Rule::ErfScaled(c) => crate::special::erf(c * w),
            Rule::Custom(f) => f(w),
        }
    }

    pub fn asymptotics(&self) -> Asymptotics {
        Asymptotics {
            mean0: self.at_zero.map(|l| l.mean()),
            jump0: self.at_zero.map(|l| l.jump()),
            meaninf: self.at_infinity.map(|l| l.mean()),
            jumpinf: self.at_infinity.map(|l| l.jump()),
        }
    }

    /// `(V_+, V_-)` or an error naming assumption (A1).
    pub fn require_zero_limits(&self) -> Result<LimitPair> {
        self.at_zero.ok_or_else(|| Error::MissingAssumption {
            interaction: self.name.clone(),
            assumption: "(A1)",
            detail: "one-sided limits at 0 must exist",
        })
    }

    /// `(V^+, V^-)` or an error naming assumption (A2).
    pub fn require_infinity_limits(&self) -> Result<LimitPair> {
        self.at_infinity.ok_or_else(|| Error::MissingAssumption {
            interaction: self.name.clone(),
            assumption: "(A2)",
            detail: "limits at +/- infinity must exist",
        })
    }
}

fn step(w: f64, at: f64) -> f64 {
    if w > at {
        1.0
    } else if w < at {
        0.0
    } else {
        0.5
    }
}

/// `mean0, jump0, meaninf, jumpinf`, all required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullAsymptotics {
    pub mean0: f64,
    pub jump0: f64,
    pub meaninf: f64,
    pub jumpinf: f64,
}

/// Every coefficient, failing with the first missing assumption.
pub fn asymptotics(v: &BoundedInteraction) -> Result<FullAsymptotics> {
    let zero = v.require_zero_limits()?;
    let inf = v.require_infinity_limits()?;
    Ok(FullAsymptotics {
        mean0: zero.mean(),
        jump0: zero.jump(),
        meaninf: inf.mean(),
        jumpinf: inf.jump(),
    })
}

/// `V_Λ(w) = V(z_Λ w)` with `z_Λ = C_Λ(0)^κ`.
#[derive(Debug, Clone)]
pub struct ScaledInteraction {
    pub base: BoundedInteraction,
    pub kappa: f64,
}

impl ScaledInteraction {
    pub fn new(base: BoundedInteraction, kappa: f64) -> Self {
        ScaledInteraction { base, kappa }
    }

    /// `z_Λ` for the given `C_Λ(0)`.
    pub fn argument_scale(&self, c0: f64) -> f64 {
        c0.powf(self.kappa)
    }

    pub fn eval(&self, w: f64, c0: f64) -> f64 {
        self.base.eval(self.argument_scale(c0) * w)
    }

    pub fn sup_norm(&self) -> f64 {
        self.base.sup_norm()
    }
}
