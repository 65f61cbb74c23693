use super::DlrmError;
use serde::{Deserialize, Serialize};

fn one() -> f64 {
    1.0
}

/// `weight · 1[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxTerm {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

impl BoxTerm {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .all(|((a, b), v)| a <= v && v < b)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Length of `[lo, hi) ∩ [a, b)` along the first axis.
    pub fn overlap_1d(&self, a: f64, b: f64) -> f64 {
        (b.min(self.hi[0]) - a.max(self.lo[0])).max(0.0)
    }
}

/// Piecewise-constant test function: a sum of weighted box indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub boxes: Vec<BoxTerm>,
}

impl TestFunction {
    pub fn indicator(lo: &[f64], hi: &[f64]) -> Self {
        Self {
            boxes: vec![BoxTerm {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
                weight: 1.0,
            }],
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.boxes.first().map(|b| b.lo.len())
    }

    pub fn validate(&self, dim: usize) -> Result<(), DlrmError> {
        let bad = |m: &str| Err(DlrmError::BadFunction(m.to_string()));
        if self.boxes.is_empty() {
            return bad("test function needs at least one box");
        }
        for b in &self.boxes {
            if b.lo.len() != dim || b.hi.len() != dim {
                return bad("box dimension does not match the model");
            }
            if !b.weight.is_finite() {
                return bad("box weight must be finite");
            }
            if b.lo
                .iter()
                .zip(&b.hi)
                .any(|(a, c)| !(a.is_finite() && c.is_finite() && a < c))
            {
                return bad("box corners must be finite with lo < hi");
            }
        }
        Ok(())
    }

    /// `T_n f(x) = f(n^{-1/d} x)`.
    pub fn scaled(&self, n: f64) -> Self {
        let boxes = self
            .boxes
            .iter()
            .map(|b| {
                let s = n.powf(1.0 / b.lo.len() as f64);
                BoxTerm {
                    lo: b.lo.iter().map(|v| v * s).collect(),
                    hi: b.hi.iter().map(|v| v * s).collect(),
                    weight: b.weight,
                }
            })
            .collect();
        Self { boxes }
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &TestFunction) -> Self {
        let mut boxes = self.boxes.clone();
        boxes.extend(other.boxes.iter().cloned());
        Self { boxes }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .filter(|b| b.contains(x))
            .map(|b| b.weight)
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.boxes.iter().map(|b| b.weight * b.volume()).sum()
    }

    /// Bounding box of the support.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim().unwrap_or(0);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in &self.boxes {
            for k in 0..d {
                lo[k] = lo[k].min(b.lo[k]);
                hi[k] = hi[k].max(b.hi[k]);
            }
        }
        (lo, hi)
    }
}
