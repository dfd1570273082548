//! Named parameter and buffer arrays with an architecture fingerprint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::layer::Layer;

pub const CHECKPOINT_FORMAT: &str = "hsreg-nn-weights";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// The network's `describe()` string.
    pub fingerprint: String,
    pub seed: u64,
    pub arrays: BTreeMap<String, Vec<f64>>,
}

impl Checkpoint {
    pub fn capture(net: &dyn Layer, seed: u64) -> Self {
        let mut arrays = BTreeMap::new();
        for p in net.params() {
            arrays.insert(p.name.clone(), p.value.clone());
        }
        for (name, b) in net.buffers() {
            arrays.insert(name, b.clone());
        }
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            fingerprint: net.describe(),
            seed,
            arrays,
        }
    }

    /// Copies every array into `net`; the fingerprint must match exactly.
    pub fn restore(&self, net: &mut dyn Layer) -> Result<()> {
        let expected = net.describe();
        if expected != self.fingerprint {
            return Err(NnError::Incompatible {
                expected,
                found: self.fingerprint.clone(),
            });
        }
        let mut used = 0;
        let mut fetch = |name: &str, len: usize| -> Result<&Vec<f64>> {
            let a = self
                .arrays
                .get(name)
                .ok_or_else(|| NnError::Checkpoint(format!("missing array `{name}`")))?;
            if a.len() != len {
                return Err(NnError::Checkpoint(format!(
                    "array `{name}` has {} values, expected {len}",
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(NnError::Checkpoint(format!("array `{name}` holds non-finite values")));
            }
            used += 1;
            Ok(a)
        };
        for p in net.params_mut() {
            let src = fetch(&p.name, p.len())?;
            p.value.copy_from_slice(src);
            p.zero_grad();
        }
        for (name, b) in net.buffers_mut() {
            let src = fetch(&name, b.len())?;
            b.copy_from_slice(src);
        }
        if used != self.arrays.len() {
            return Err(NnError::Checkpoint(format!(
                "{} arrays in the checkpoint are unused by the network",
                self.arrays.len() - used
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        c.check_header()?;
        Ok(c)
    }

    pub(crate) fn check_header(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported container {} v{}",
                self.format, self.version
            )));
        }
        Ok(())
    }
}
