//! Hyperparameter dimensions and their warping into the unit interval.
//!
//! Every dimension of a search space is described by a [`ParamDef`]. Numeric
//! definitions carry an invertible map between their native range and `[0,1]`
//! (the *warped* domain), so the surrogate model and acquisition optimizer can
//! work on the unit hypercube regardless of the original scales. Categorical
//! definitions hold opaque tokens; ordinals additionally carry an order.

use std::cmp::Ordering;
use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Search-space dimensions in declaration order, keyed by name.
pub type ParamMap = IndexMap<String, ParamDef>;

/// Slack accepted when clamping values sitting on a range boundary, relative
/// to the magnitude of the range. Absorbs float noise from warp round trips.
const EDGE_TOL: f64 = 1e-12;

fn default_decades() -> f64 {
    7.0
}

/// One dimension of a hyperparameter search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamDef {
    /// Unordered tokens ("relu", "tanh", ...). Not warpable, not comparable.
    Nominal { values: Vec<String> },
    /// Ordered tokens; compared by list position, warped by `index/(count-1)`.
    Ordinal { values: Vec<String> },
    /// Linear range `[lower, upper]`; warped affinely onto `[0,1]`.
    MinMax { lower: f64, upper: f64 },
    /// Log-scale range concentrating toward `asymptote`: `u = 0` maps to
    /// `border` and each further `1/decades` of warped distance moves one
    /// order of magnitude closer to the asymptote. Typical use: learning
    /// rates with asymptote 0, border 1.
    Asymptotic {
        asymptote: f64,
        border: f64,
        #[serde(default = "default_decades")]
        decades: f64,
    },
}

/// A concrete value for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Real(f64),
    Token(String),
}

impl ParamValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Token(_) => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            ParamValue::Real(_) => None,
            ParamValue::Token(t) => Some(t),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            ParamValue::Real(_) => "real",
            ParamValue::Token(_) => "token",
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Real(v) => write!(f, "{}", v),
            ParamValue::Token(t) => f.write_str(t),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(t: &str) -> Self {
        ParamValue::Token(t.to_owned())
    }
}

/// A full parameter document as serialized to JSON:
/// `{"name": ..., "kind": "nominal|ordinal|minmax|asymptotic", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDoc {
    pub name: String,
    #[serde(flatten)]
    pub def: ParamDef,
}

/// Errors from definition validation, warping, and comparison.
#[derive(Debug, Error)]
pub enum ParamError {
    #[error("value {value} outside range [{lower}, {upper}]")]
    OutOfRange { value: f64, lower: f64, upper: f64 },
    #[error("warped coordinate {0} outside [0, 1]")]
    UnitInterval(f64),
    #[error("token `{0}` is not among the allowed values")]
    UnknownToken(String),
    #[error("expected a {expected} value, got a {got}")]
    WrongValueKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("nominal values have no ordering")]
    NotComparable,
    #[error("nominal dimensions cannot be warped")]
    NotWarpable,
    #[error("invalid definition: {0}")]
    BadDefinition(String),
    #[error("dimension `{name}`: {source}")]
    Dimension {
        name: String,
        #[source]
        source: Box<ParamError>,
    },
    #[error("missing value for dimension `{0}`")]
    MissingDimension(String),
    #[error("value supplied for unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("point has {got} coordinates but the space has {want} dimensions")]
    DimensionCount { got: usize, want: usize },
}

impl ParamError {
    /// Attaches the owning dimension's name for error messages.
    pub fn in_dimension(self, name: &str) -> ParamError {
        ParamError::Dimension {
            name: name.to_owned(),
            source: Box::new(self),
        }
    }
}

fn check_tokens(values: &[String]) -> Result<(), ParamError> {
    if values.is_empty() {
        return Err(ParamError::BadDefinition("empty value list".into()));
    }
    for (i, v) in values.iter().enumerate() {
        if v.contains(',') || v.contains('\n') || v.contains('\r') {
            return Err(ParamError::BadDefinition(format!(
                "token `{}` contains a comma or line break (reserved for CSV output)",
                v.escape_default()
            )));
        }
        if values[..i].contains(v) {
            return Err(ParamError::BadDefinition(format!("duplicate token `{}`", v)));
        }
    }
    Ok(())
}

impl ParamDef {
    /// Builds a nominal definition, validating the token list.
    pub fn nominal<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Result<Self, ParamError> {
        let def = ParamDef::Nominal {
            values: values.into_iter().map(Into::into).collect(),
        };
        def.check()?;
        Ok(def)
    }

    /// Builds an ordinal definition, validating the token list.
    pub fn ordinal<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Result<Self, ParamError> {
        let def = ParamDef::Ordinal {
            values: values.into_iter().map(Into::into).collect(),
        };
        def.check()?;
        Ok(def)
    }

    /// Builds a linear numeric range.
    pub fn min_max(lower: f64, upper: f64) -> Result<Self, ParamError> {
        let def = ParamDef::MinMax { lower, upper };
        def.check()?;
        Ok(def)
    }

    /// Builds a log-scale range spanning the default seven decades.
    pub fn asymptotic(asymptote: f64, border: f64) -> Result<Self, ParamError> {
        Self::asymptotic_with_decades(asymptote, border, default_decades())
    }

    /// Builds a log-scale range spanning `decades` orders of magnitude.
    pub fn asymptotic_with_decades(
        asymptote: f64,
        border: f64,
        decades: f64,
    ) -> Result<Self, ParamError> {
        let def = ParamDef::Asymptotic {
            asymptote,
            border,
            decades,
        };
        def.check()?;
        Ok(def)
    }

    /// Verifies construction invariants. Call after deserializing.
    pub fn check(&self) -> Result<(), ParamError> {
        match self {
            ParamDef::Nominal { values } | ParamDef::Ordinal { values } => check_tokens(values),
            ParamDef::MinMax { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(ParamError::BadDefinition("non-finite bound".into()));
                }
                if lower >= upper {
                    return Err(ParamError::BadDefinition(format!(
                        "lower bound {} is not below upper bound {}",
                        lower, upper
                    )));
                }
                Ok(())
            }
            ParamDef::Asymptotic {
                asymptote,
                border,
                decades,
            } => {
                if !asymptote.is_finite() || !border.is_finite() || !decades.is_finite() {
                    return Err(ParamError::BadDefinition("non-finite field".into()));
                }
                if asymptote == border {
                    return Err(ParamError::BadDefinition(
                        "asymptote equals border".into(),
                    ));
                }
                if *decades <= 0.0 || *decades > 300.0 {
                    return Err(ParamError::BadDefinition(format!(
                        "decades {} outside (0, 300]",
                        decades
                    )));
                }
                Ok(())
            }
        }
    }

    /// True for definitions that carry a warp into `[0,1]` (everything but
    /// nominal).
    pub fn is_warpable(&self) -> bool {
        !matches!(self, ParamDef::Nominal { .. })
    }

    /// Maps a native value onto its `[0,1]` coordinate.
    ///
    /// Values within a hair of the range boundary are clamped onto it; values
    /// genuinely outside the range are rejected.
    pub fn warp_in(&self, value: &ParamValue) -> Result<f64, ParamError> {
        match self {
            ParamDef::Nominal { .. } => Err(ParamError::NotWarpable),
            ParamDef::Ordinal { values } => {
                let token = expect_token(value)?;
                let idx = token_index(values, token)?;
                if values.len() == 1 {
                    Ok(0.5)
                } else {
                    Ok(idx as f64 / (values.len() - 1) as f64)
                }
            }
            ParamDef::MinMax { lower, upper } => {
                let v = expect_real(value)?;
                let tol = EDGE_TOL * lower.abs().max(upper.abs()).max(1.0);
                if !v.is_finite() || v < lower - tol || v > upper + tol {
                    return Err(ParamError::OutOfRange {
                        value: v,
                        lower: *lower,
                        upper: *upper,
                    });
                }
                Ok(((v - lower) / (upper - lower)).clamp(0.0, 1.0))
            }
            ParamDef::Asymptotic {
                asymptote,
                border,
                decades,
            } => {
                let v = expect_real(value)?;
                // Fraction of the asymptote→border gap still remaining; in
                // range it lies in [10^-decades, 1].
                let t = (v - asymptote) / (border - asymptote);
                let u = if t > 0.0 { -t.log10() / decades } else { f64::INFINITY };
                if !v.is_finite() || !(-1e-10..=1.0 + 1e-10).contains(&u) {
                    let (lower, upper) = self.range().expect("asymptotic has a range");
                    return Err(ParamError::OutOfRange {
                        value: v,
                        lower,
                        upper,
                    });
                }
                Ok(u.clamp(0.0, 1.0))
            }
        }
    }

    /// Maps a `[0,1]` coordinate back to a native value; inverse of
    /// [`ParamDef::warp_in`].
    pub fn warp_out(&self, u: f64) -> Result<ParamValue, ParamError> {
        let u = unit_coord(u)?;
        match self {
            ParamDef::Nominal { .. } => Err(ParamError::NotWarpable),
            ParamDef::Ordinal { values } => {
                let idx = (u * (values.len() - 1) as f64).round() as usize;
                Ok(ParamValue::Token(values[idx].clone()))
            }
            ParamDef::MinMax { lower, upper } => {
                Ok(ParamValue::Real((lower + u * (upper - lower)).clamp(*lower, *upper)))
            }
            ParamDef::Asymptotic {
                asymptote,
                border,
                decades,
            } => Ok(ParamValue::Real(
                asymptote + (border - asymptote) * 10f64.powf(-decades * u),
            )),
        }
    }

    /// Draws a value uniformly: numeric ranges via a uniform warped
    /// coordinate, token lists by uniform choice.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParamDef::Nominal { values } | ParamDef::Ordinal { values } => {
                ParamValue::Token(values[rng.gen_range(0..values.len())].clone())
            }
            _ => self
                .warp_out(rng.gen::<f64>())
                .expect("uniform draw is in [0,1)"),
        }
    }

    /// True iff `value` lies in this definition's domain.
    pub fn validate(&self, value: &ParamValue) -> bool {
        match self {
            ParamDef::Nominal { values } | ParamDef::Ordinal { values } => match value {
                ParamValue::Token(t) => values.iter().any(|v| v == t),
                ParamValue::Real(_) => false,
            },
            ParamDef::MinMax { .. } | ParamDef::Asymptotic { .. } => match value {
                ParamValue::Real(v) => {
                    let (lower, upper) = self.range().expect("numeric has a range");
                    v.is_finite() && *v >= lower && *v <= upper
                }
                ParamValue::Token(_) => false,
            },
        }
    }

    /// Orders two values: ordinals by list position, numerics by warped
    /// coordinate. Nominal definitions have no ordering.
    pub fn compare_values(&self, a: &ParamValue, b: &ParamValue) -> Result<Ordering, ParamError> {
        match self {
            ParamDef::Nominal { .. } => Err(ParamError::NotComparable),
            ParamDef::Ordinal { values } => {
                let ia = token_index(values, expect_token(a)?)?;
                let ib = token_index(values, expect_token(b)?)?;
                Ok(ia.cmp(&ib))
            }
            _ => {
                let ua = self.warp_in(a)?;
                let ub = self.warp_in(b)?;
                Ok(ua.partial_cmp(&ub).expect("warped coords are finite"))
            }
        }
    }

    /// Native `[lower, upper]` range of a numeric definition.
    fn range(&self) -> Option<(f64, f64)> {
        match self {
            ParamDef::MinMax { lower, upper } => Some((*lower, *upper)),
            ParamDef::Asymptotic {
                asymptote,
                border,
                decades,
            } => {
                let near = asymptote + (border - asymptote) * 10f64.powf(-decades);
                Some((near.min(*border), near.max(*border)))
            }
            _ => None,
        }
    }
}

fn expect_real(value: &ParamValue) -> Result<f64, ParamError> {
    value.as_real().ok_or(ParamError::WrongValueKind {
        expected: "real",
        got: value.kind_name(),
    })
}

fn expect_token(value: &ParamValue) -> Result<&str, ParamError> {
    value.as_token().ok_or(ParamError::WrongValueKind {
        expected: "token",
        got: value.kind_name(),
    })
}

fn token_index(values: &[String], token: &str) -> Result<usize, ParamError> {
    values
        .iter()
        .position(|v| v == token)
        .ok_or_else(|| ParamError::UnknownToken(token.to_owned()))
}

fn unit_coord(u: f64) -> Result<f64, ParamError> {
    if !u.is_finite() || !(-EDGE_TOL..=1.0 + EDGE_TOL).contains(&u) {
        return Err(ParamError::UnitInterval(u));
    }
    Ok(u.clamp(0.0, 1.0))
}

/// A point in the unit hypercube, one coordinate per warpable dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedPoint {
    coords: Vec<f64>,
}

impl WarpedPoint {
    /// Wraps coordinates, clamping boundary float noise and rejecting
    /// anything genuinely outside `[0,1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self, ParamError> {
        let coords = coords
            .into_iter()
            .map(unit_coord)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WarpedPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Warps a full assignment into a [`WarpedPoint`], in space order.
///
/// Every dimension must be present and warpable; unknown names are rejected.
pub fn warp_params(
    space: &ParamMap,
    values: &IndexMap<String, ParamValue>,
) -> Result<WarpedPoint, ParamError> {
    if let Some(name) = values.keys().find(|k| !space.contains_key(*k)) {
        return Err(ParamError::UnknownDimension(name.clone()));
    }
    let mut coords = Vec::with_capacity(space.len());
    for (name, def) in space {
        let value = values
            .get(name)
            .ok_or_else(|| ParamError::MissingDimension(name.clone()))?;
        coords.push(def.warp_in(value).map_err(|e| e.in_dimension(name))?);
    }
    WarpedPoint::new(coords)
}

/// Maps a [`WarpedPoint`] back to named native values, in space order.
pub fn unwarp_params(
    space: &ParamMap,
    point: &WarpedPoint,
) -> Result<IndexMap<String, ParamValue>, ParamError> {
    if point.dim() != space.len() {
        return Err(ParamError::DimensionCount {
            got: point.dim(),
            want: space.len(),
        });
    }
    let mut values = IndexMap::with_capacity(space.len());
    for ((name, def), &u) in space.iter().zip(point.coords()) {
        let value = def.warp_out(u).map_err(|e| e.in_dimension(name))?;
        values.insert(name.clone(), value);
    }
    Ok(values)
}

/// Draws one uniform value per dimension, in space order.
pub fn sample_params<R: Rng + ?Sized>(
    space: &ParamMap,
    rng: &mut R,
) -> IndexMap<String, ParamValue> {
    space
        .iter()
        .map(|(name, def)| (name.clone(), def.sample_uniform(rng)))
        .collect()
}
