//! Configuration presets shipped in the repository's `presets/` directory.

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

macro_rules! preset {
    ($name:literal, $description:literal) => {
        Preset {
            name: $name,
            description: $description,
            json: include_str!(concat!("../../../presets/", $name, ".json")),
        }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("short-photon-storage", "50 ns heralded photon, 100 ns storage at od 60, Ω 11, γ12 0.03"),
    preset!("long-photon-storage", "200 ns photon with its precursor blocked, 100 ns storage"),
    preset!("optimal-storage-a", "time-reversal optimization at od 60, Ω 11, γ12 0.03"),
    preset!("optimal-storage-b", "time-reversal optimization at od 60, Ω 6.88, γ12 0.01"),
    preset!("heralded-counts", "Monte Carlo heralded autocorrelation, 10⁶ heralds"),
    preset!("loss-budget", "generation rates and pairing efficiencies from the loss chain"),
    preset!("spectrum-fit", "EIT transmission spectrum with a dephasing round-trip fit"),
    preset!("memory-lifetime", "storage-time scan with a 1.6 µs spin-wave lifetime"),
    preset!("slow-light", "200 ns pulse under constant coupling with spin-wave snapshots"),
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::invalid("preset", format!("unknown preset {name:?}; available: {}", names.join(", ")))
    })
}

pub fn load(name: &str) -> Result<RunConfig> {
    let preset = find(name)?;
    config::parse(preset.json).map_err(|issues| {
        Error::invalid(
            format!("preset {name}"),
            issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in PRESETS {
            let cfg = load(p.name).unwrap();
            let issues = cfg.resolved().validate();
            assert!(issues.is_empty(), "{}: {issues:?}", p.name);
        }
    }

    #[test]
    fn unknown_preset_lists_alternatives() {
        let msg = find("nope").err().unwrap().to_string();
        assert!(msg.contains("optimal-storage-a"));
    }
}
