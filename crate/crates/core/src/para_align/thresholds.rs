use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Newsela,
    Wiki,
}

/// Paragraph alignment thresholds. For the Wiki variant `tau4` counts
/// paragraphs; every other threshold is a similarity or relative distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSet {
    pub variant: Variant,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    pub tau5: f64,
}

impl ThresholdSet {
    /// Published thresholds tuned on the Newsela dev set.
    pub fn newsela() -> Self {
        ThresholdSet {
            variant: Variant::Newsela,
            tau1: 0.1,
            tau2: 0.34,
            tau3: 0.9998861788416304,
            tau4: 0.998915818299745,
            tau5: 0.5,
        }
    }

    /// Published thresholds tuned on the Wikipedia dev set.
    pub fn wiki() -> Self {
        ThresholdSet {
            variant: Variant::Wiki,
            tau1: 0.991775706637882,
            tau2: 0.8,
            tau3: 0.5,
            tau4: 5.0,
            tau5: 0.9958,
        }
    }

    /// `"newsela"` or `"wiki"`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "newsela" => Ok(Self::newsela()),
            "wiki" => Ok(Self::wiki()),
            other => Err(Error::InvalidArgument(format!(
                "unknown threshold set {other:?}, expected \"newsela\" or \"wiki\""
            ))),
        }
    }

    pub fn taus(&self) -> [f64; 5] {
        [self.tau1, self.tau2, self.tau3, self.tau4, self.tau5]
    }

    pub fn validate(&self) -> Result<()> {
        for (idx, tau) in self.taus().into_iter().enumerate() {
            let count = self.variant == Variant::Wiki && idx == 3;
            let ok = if count {
                tau >= 0.0 && tau.is_finite()
            } else {
                (0.0..=1.0).contains(&tau)
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "tau{} = {tau} out of range for {:?} thresholds",
                    idx + 1,
                    self.variant
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let th: ThresholdSet = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "threshold config".into(),
            source,
        })?;
        th.validate()?;
        Ok(th)
    }
}

pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ThresholdSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ThresholdSet::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ThresholdSet::newsela().validate().unwrap();
        ThresholdSet::wiki().validate().unwrap();
    }

    #[test]
    fn json_config() {
        let th = ThresholdSet::from_json(
            r#"{"variant":"wiki","tau1":0.991775706637882,"tau2":0.8,"tau3":0.5,"tau4":5,"tau5":0.9958}"#,
        )
        .unwrap();
        assert_eq!(th, ThresholdSet::wiki());
        let back = ThresholdSet::from_json(&serde_json::to_string(&ThresholdSet::newsela()).unwrap()).unwrap();
        assert_eq!(back, ThresholdSet::newsela());
    }

    #[test]
    fn out_of_range_rejected() {
        let mut th = ThresholdSet::newsela();
        th.tau4 = 5.0;
        assert!(th.validate().is_err());
        let mut th = ThresholdSet::wiki();
        th.tau4 = -1.0;
        assert!(th.validate().is_err());
        assert!(ThresholdSet::named("simple").is_err());
    }
}
