//! Optional TOML configuration for shaping instances.
//!
//! Every field is optional; values merge over the architecture defaults,
//! and command-line flags applied afterwards win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::harness::Instance;
use crate::topology::{Architecture, DeviceKind};
use crate::{Error, Result};

/// Per-kind override of the hardware profile table.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    pub p_max: Option<f64>,
    pub p_idle: Option<f64>,
    pub capacity: Option<f64>,
    pub idle_fraction: Option<f64>,
    pub pue: Option<f64>,
}

/// Root of the config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub architecture: Option<String>,
    pub zones: Option<usize>,
    pub clusters_per_zone: Option<usize>,
    pub vns_per_cluster: Option<usize>,
    pub cc_servers: Option<usize>,
    pub rr_hops: Option<usize>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileOverride>,
}

impl FileConfig {
    /// Parses the architecture field, if present.
    pub fn architecture(&self) -> Result<Option<Architecture>> {
        match &self.architecture {
            None => Ok(None),
            Some(label) => Architecture::from_label(label)
                .map(Some)
                .ok_or_else(|| Error::Config(format!("unknown architecture {label}"))),
        }
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Merges the file's sizing knobs and profile overrides onto an instance.
pub fn apply(instance: &mut Instance, cfg: &FileConfig) -> Result<()> {
    if let Some(z) = cfg.zones {
        instance.zones = z;
    }
    if let Some(c) = cfg.clusters_per_zone {
        instance.clusters_per_zone = c;
    }
    if let Some(v) = cfg.vns_per_cluster {
        instance.vns_per_cluster = Some(v);
    }
    if let Some(s) = cfg.cc_servers {
        instance.cc_servers = s;
    }
    if let Some(h) = cfg.rr_hops {
        instance.rr_hops = h;
    }
    for (label, over) in &cfg.profiles {
        let kind = DeviceKind::from_label(label)
            .ok_or_else(|| Error::Config(format!("unknown device kind {label}")))?;
        let profile = instance
            .profiles
            .get_mut(&kind)
            .expect("default table covers every kind");
        if let Some(v) = over.p_max {
            profile.p_max = v;
        }
        if let Some(v) = over.p_idle {
            profile.p_idle = v;
        }
        if let Some(v) = over.capacity {
            profile.capacity = v;
        }
        if let Some(v) = over.idle_fraction {
            profile.idle_fraction = v;
        }
        if let Some(v) = over.pue {
            profile.pue = v;
        }
        profile.validate()?;
    }
    Ok(())
}
