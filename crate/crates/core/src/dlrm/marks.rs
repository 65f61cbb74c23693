use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MarkError {
    #[error("invalid mark parameters: {0}")]
    Invalid(String),
    #[error("mark kind `{mark}` cannot be used with {shape}")]
    Incompatible { mark: &'static str, shape: String },
}

/// Mark measure attached to each leaf.
///
/// `Colour` and `Density` put a constant multiple of Lebesgue measure on the
/// leaf; for `Colour` the multiple is 1 with probability `p` and 0 otherwise.
/// `Seeds` thins the arrivals: with probability `q` the arrival is a seed set
/// (no leaf, atoms at `offsets` from its position), otherwise a leaf with no
/// mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkKind {
    BoundarySurface,
    CornerCounting,
    Colour { p: f64 },
    Density { levels: Vec<f64>, probs: Vec<f64> },
    Seeds { q: f64, offsets: Vec<Vec<f64>> },
}

impl MarkKind {
    pub fn name(&self) -> &'static str {
        match self {
            MarkKind::BoundarySurface => "boundary_surface",
            MarkKind::CornerCounting => "corner_counting",
            MarkKind::Colour { .. } => "colour",
            MarkKind::Density { .. } => "density",
            MarkKind::Seeds { .. } => "seeds",
        }
    }

    /// Checks the parameters for a model of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), MarkError> {
        let bad = |m: &str| Err(MarkError::Invalid(m.to_string()));
        match self {
            MarkKind::BoundarySurface => Ok(()),
            MarkKind::CornerCounting => {
                if dim != 2 {
                    return Err(MarkError::Incompatible {
                        mark: self.name(),
                        shape: "one-dimensional leaves".into(),
                    });
                }
                Ok(())
            }
            MarkKind::Colour { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad("colour probability must lie in [0, 1]");
                }
                Ok(())
            }
            MarkKind::Density { levels, probs } => {
                if levels.is_empty() || levels.len() != probs.len() {
                    return bad("density needs matching non-empty levels and probs");
                }
                if probs.iter().any(|&p| !(p >= 0.0)) || levels.iter().any(|l| !l.is_finite()) {
                    return bad("density probabilities must be nonnegative and levels finite");
                }
                if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad("density probabilities must sum to 1");
                }
                Ok(())
            }
            MarkKind::Seeds { q, offsets } => {
                if !(0.0..1.0).contains(q) {
                    return bad("seed probability must lie in [0, 1)");
                }
                if offsets.is_empty() {
                    return bad("seed sets need at least one offset");
                }
                if offsets
                    .iter()
                    .any(|o| o.len() != dim || o.iter().any(|v| !v.is_finite()))
                {
                    return bad("seed offsets must have one finite coordinate per dimension");
                }
                Ok(())
            }
        }
    }

    /// Level distribution of a Lebesgue-type mark as `(level, probability)`.
    pub fn levels(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            MarkKind::Colour { p } => Some(vec![(0.0, 1.0 - p), (1.0, *p)]),
            MarkKind::Density { levels, probs } => {
                Some(levels.iter().copied().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }

    /// Probability that an arrival is a leaf (rather than a seed set).
    pub fn leaf_probability(&self) -> f64 {
        match self {
            MarkKind::Seeds { q, .. } => 1.0 - q,
            _ => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m: MarkKind = serde_json::from_str(r#"{"kind":"colour","p":0.3}"#).unwrap();
        assert_eq!(m, MarkKind::Colour { p: 0.3 });
        let s: MarkKind =
            serde_json::from_str(r#"{"kind":"seeds","q":0.5,"offsets":[[0.0,0.0],[0.2,0.1]]}"#)
                .unwrap();
        s.validate(2).unwrap();
        assert!(s.validate(1).is_err());
        assert!(MarkKind::CornerCounting.validate(1).is_err());
        assert!(MarkKind::Colour { p: 1.5 }.validate(2).is_err());
        assert!(serde_json::from_str::<MarkKind>(r#"{"kind":"colour","p":0.3,"x":1}"#).is_err());
    }
}
