//! The JSON document every command prints.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::powerlaw::{KsVerdict, PowerLawFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub beta_hat: f64,
    pub sigma: f64,
    pub s_hat: f64,
    pub lambda_cutoff: f64,
    pub k: usize,
}

impl From<&PowerLawFit<f64>> for FitSummary {
    fn from(f: &PowerLawFit<f64>) -> Self {
        Self {
            beta_hat: f.beta_hat,
            sigma: f.sigma,
            s_hat: f.s_hat,
            lambda_cutoff: f.lambda_cutoff,
            k: f.k_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    pub d_ks: f64,
    pub d_c: f64,
    pub alpha: f64,
    pub accept: bool,
}

impl From<&KsVerdict<f64>> for KsSummary {
    fn from(v: &KsVerdict<f64>) -> Self {
        Self {
            d_ks: v.d_ks,
            d_c: v.d_c,
            alpha: v.alpha,
            accept: v.is_power_law,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub fit: Option<FitSummary>,
    pub ks: Option<KsSummary>,
    pub extras: Map<String, Value>,
    pub runtime_ms: f64,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            inputs: Map::new(),
            fit: None,
            ks: None,
            extras: Map::new(),
            runtime_ms: 0.0,
        }
    }

    pub fn with_fit(mut self, fit: &PowerLawFit<f64>, ks: &KsVerdict<f64>) -> Self {
        self.fit = Some(fit.into());
        self.ks = Some(ks.into());
        self
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(key.into(), to_value(value));
    }

    pub fn extra(&mut self, key: &str, value: impl Serialize) {
        self.extras.insert(key.into(), to_value(value));
    }

    /// `Some(accept)` when the report carries a KS verdict.
    pub fn accepted(&self) -> Option<bool> {
        self.ks.as_ref().map(|k| k.accept)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are always serializable")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn to_value(v: impl Serialize) -> Value {
    // non-finite floats have no JSON form and become null
    serde_json::to_value(v).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schema_field_names() {
        let fit = PowerLawFit::new(2.0, 0.5, 100).unwrap();
        let ks = KsVerdict {
            d_ks: 0.05,
            d_c: 0.136,
            alpha: 0.05,
            k_samples: 100,
            is_power_law: true,
        };
        let mut r = Report::new("fit").with_fit(&fit, &ks);
        r.input("path", "x.txt");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["command", "inputs", "fit", "ks", "extras", "runtime_ms"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["beta_hat", "sigma", "s_hat", "lambda_cutoff", "k"] {
            assert!(v["fit"].get(key).is_some(), "{key}");
        }
        for key in ["d_ks", "d_c", "alpha", "accept"] {
            assert!(v["ks"].get(key).is_some(), "{key}");
        }
        assert_eq!(r.accepted(), Some(true));
    }

    proptest! {
        #[test]
        fn json_round_trip(
            beta in 1.01f64..5.0,
            cut in 1e-12f64..1e6,
            k in 2usize..100_000,
            d in 0.0f64..1.0,
            ms in 0.0f64..1e7,
            note in "[a-z ]{0,12}",
        ) {
            let fit = PowerLawFit::new(beta, cut, k).unwrap();
            let ks = KsVerdict { d_ks: d, d_c: 0.1, alpha: 0.05, k_samples: k, is_power_law: d <= 0.1 };
            let mut r = Report::new("fit").with_fit(&fit, &ks);
            r.extra("note", &note);
            r.extra("values", vec![beta, cut, d]);
            r.runtime_ms = ms;
            prop_assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        }
    }
}
