//! Versioned tolerances and pinned constants. Every report embeds the hash
//! of the manifest it was judged against.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub tolerances: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
}

const TOLERANCES: &[(&str, f64)] = &[
    ("apriori.stability", 0.10),
    ("bourgain.galilean", 1e-6),
    ("bourgain.slope_band", 0.2),
    ("brute_force.relative", 1e-12),
    ("cross_engine.min_order", 1.9),
    ("domain_virial.residual", 5e-2),
    ("l4.ratio_spread", 2.0),
    ("momentum.slack", 1e-8),
    ("ot.ratio_band", 0.03),
    ("plancherel.monotone_band", 0.05),
    ("plancherel.residual", 1e-2),
    ("smoothing.data_spread", 0.05),
    ("t1.convexity", 1e-8),
    ("t1.residual", 1e-2),
    ("t1d.residual", 5e-2),
    ("t2.order_band", 0.25),
    ("t2.residual", 1e-3),
    ("t3.consistency", 1e-8),
    ("wrap.limit", 1e-6),
];

impl Manifest {
    pub fn current() -> Self {
        let tolerances = TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let constants = [
            // d^2/dt^2 I_omega = 4 * (sum of the directional terms)
            ("t1.factor", 0.25),
            // boundary flux enters the domain identity with weight 1/2
            ("t1d.boundary_factor", 0.5),
            // || |d_s|^{1/2} R f ||^2_{L^2(s, omega)} = C ||f||^2, unnormalised arc length
            ("radon_plancherel.constant", 4.0 * PI),
            // the constant as printed for the 1D space-time identity, and the value
            // the Fourier computation produces under the e^{-2 pi i x xi} convention
            ("ot.stated_constant", 4.0 * PI),
            ("ot.derived_constant", PI),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        Self { version: MANIFEST_VERSION, tolerances, constants }
    }

    pub fn tolerance(&self, key: &str) -> Result<f64> {
        self.tolerances.get(key).copied().ok_or_else(|| Error::Format(format!("manifest has no tolerance `{key}`")))
    }

    pub fn constant(&self, key: &str) -> Result<f64> {
        self.constants.get(key).copied().ok_or_else(|| Error::Format(format!("manifest has no constant `{key}`")))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("maps of floats serialise");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Manifest::current();
        assert_eq!(a.hash(), Manifest::current().hash());
        assert_eq!(a.hash().len(), 64);
        let mut b = a.clone();
        b.tolerances.insert("t2.residual".into(), 2e-3);
        assert_ne!(a.hash(), b.hash());
        assert!(a.tolerance("missing").is_err());
        assert_eq!(a.tolerance("t3.consistency").unwrap(), 1e-8);
    }
}
