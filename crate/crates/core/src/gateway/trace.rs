use serde::{Deserialize, Serialize};

/// One generated token with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub token: String,
    pub prob: f64,
    /// Full next-token distribution, when the provider returns one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<(String, f64)>>,
}

impl TokenRecord {
    pub fn chosen(token: impl Into<String>, prob: f64) -> Self {
        Self {
            token: token.into(),
            prob,
            distribution: None,
        }
    }

    /// A distribution is usable when it sums to one within 1e-6.
    pub fn full_distribution(&self) -> Option<&[(String, f64)]> {
        let d = self.distribution.as_deref()?;
        let total: f64 = d.iter().map(|(_, p)| p).sum();
        ((total - 1.0).abs() <= 1e-6 && !d.is_empty()).then_some(d)
    }

    pub fn is_well_formed(&self) -> bool {
        self.prob > 0.0 && self.prob <= 1.0 && self.distribution.as_ref().is_none_or(|_| self.full_distribution().is_some())
    }
}

/// Token records per fact, aligned with the envelope's fact list.
pub type TokenTrace = Vec<Vec<TokenRecord>>;
