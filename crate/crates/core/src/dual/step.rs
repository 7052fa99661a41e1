use serde::{Deserialize, Serialize};

/// Subgradient step rules. Each maps iteration `l` (1-based) and the
/// current subgradient norm to the factor `s` in `lambda - s theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepRule {
    /// `s = nu`.
    ConstantSize { nu: f64 },
    /// Step length `nu`.
    ConstantLength { nu: f64 },
    /// `s = nu / l`: nonsummable, square-summable.
    NonsumSqsum { nu: f64 },
    /// Step length `nu / sqrt(l)` until it would drop below `floor`, then
    /// constant length `floor`.
    Hybrid { nu: f64, floor: f64 },
}

impl StepRule {
    pub fn factor(&self, l: usize, theta_norm: f64) -> f64 {
        if theta_norm == 0.0 {
            return 0.0;
        }
        let l = l.max(1) as f64;
        match *self {
            StepRule::ConstantSize { nu } => nu,
            StepRule::ConstantLength { nu } => nu / theta_norm,
            StepRule::NonsumSqsum { nu } => nu / l,
            StepRule::Hybrid { nu, floor } => (nu / l.sqrt()).max(floor) / theta_norm,
        }
    }

    /// First iteration running at the constant floor length (hybrid only).
    pub fn switch_iteration(&self) -> Option<usize> {
        match *self {
            StepRule::Hybrid { nu, floor } if floor > 0.0 => {
                Some(((nu / floor).powi(2)).ceil().min(usize::MAX as f64) as usize)
            }
            _ => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            StepRule::ConstantSize { nu }
            | StepRule::ConstantLength { nu }
            | StepRule::NonsumSqsum { nu } => nu > 0.0 && nu.is_finite(),
            StepRule::Hybrid { nu, floor } => nu > 0.0 && nu.is_finite() && floor >= 0.0,
        }
    }
}
