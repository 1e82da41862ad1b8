use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Noise calibration for one private run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    #[serde(with = "extended_float")]
    pub epsilon: f64,
    pub n_max: usize,
    pub d: usize,
    pub horizon: f64,
    /// `epsilon / (6 n_max^2)`.
    #[serde(with = "extended_float")]
    pub epsilon_prime: f64,
    /// Per-coordinate Laplace scale for gradient sums: `sqrt(d) ln T / epsilon'`.
    pub scale_vec: f64,
    /// Laplace scale for inner-product sums: `ln T / epsilon'`.
    pub scale_scalar: f64,
}

pub fn budget(epsilon: f64, n_max: usize, d: usize, horizon: f64) -> Result<PrivacyBudget> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(horizon >= 2.0) {
        return Err(Error::Config(format!("horizon must be at least 2, got {horizon}")));
    }
    if n_max == 0 || d == 0 {
        return Err(Error::Config("n_max and d must be positive".into()));
    }
    let epsilon_prime = epsilon / (6.0 * (n_max * n_max) as f64);
    let (scale_vec, scale_scalar) = if epsilon.is_infinite() {
        (0.0, 0.0)
    } else {
        let lt = horizon.ln();
        ((d as f64).sqrt() * lt / epsilon_prime, lt / epsilon_prime)
    };
    Ok(PrivacyBudget { epsilon, n_max, d, horizon, epsilon_prime, scale_vec, scale_scalar })
}

/// Serializes `inf` as the string `"inf"` since JSON has no infinity.
pub(crate) mod extended_float {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let b = budget(6.0, 1, 4, std::f64::consts::E.powi(2)).unwrap();
        assert!((b.epsilon_prime - 1.0).abs() < 1e-15);
        assert!((b.scale_vec - 4.0).abs() < 1e-12);
        assert!((b.scale_scalar - 2.0).abs() < 1e-12);
        let inf = budget(f64::INFINITY, 3, 4, 100.0).unwrap();
        assert_eq!((inf.scale_vec, inf.scale_scalar), (0.0, 0.0));
        assert!((budget(54.0, 3, 1, 10.0).unwrap().epsilon_prime - 1.0).abs() < 1e-15);
        assert!(budget(1.0, 2, 2, 1.0).is_err());
        assert!(budget(0.0, 2, 2, 10.0).is_err());
    }

    #[test]
    fn json_keeps_infinity() {
        let b = budget(f64::INFINITY, 2, 3, 64.0).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"epsilon\":\"inf\""));
        let back: PrivacyBudget = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
