//! Power model: linear load-proportional device power with partial idle
//! attribution, PUE weighting, and per-tier aggregation.
//!
//! Each device draws `idle_part + load * marginal`, all scaled by its PUE.
//! The idle part is charged only when the device is activated for the
//! studied application, weighted by the profile's idle-attribution
//! fraction. VN processors are battery-powered vehicles whose baseline
//! draw exists regardless of our placement, so their idle power is never
//! charged; their wireless adapters, in contrast, are powered up
//! specifically for this service and carry full idle when active.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::topology::{DeviceKind, DeviceProfile, Topology};
use crate::workload::Task;
use crate::{Error, Result};

/// Total power split by tier. Network covers the shared access and metro
/// trunk: core routers (rr), metro router (mr), metro switch (ms), OLT (o),
/// ONUs (u), and APs (a).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub tpc_cc: f64,
    pub tpc_mf: f64,
    pub tpc_lf: f64,
    pub tpc_nf: f64,
    pub tpc_vn: f64,
    pub tpc_rr: f64,
    pub tpc_mr: f64,
    pub tpc_ms: f64,
    pub tpc_o: f64,
    pub tpc_u: f64,
    pub tpc_a: f64,
    pub total: f64,
}

impl PowerBreakdown {
    /// Network share: everything outside the five processing tiers.
    pub fn tpc_net(&self) -> f64 {
        self.tpc_rr + self.tpc_mr + self.tpc_ms + self.tpc_o + self.tpc_u + self.tpc_a
    }
}

/// Explicit device loading: processing MIPS per PN, traversal traffic in
/// Mb/s per network device, and the activation flags the idle charges key
/// off.
#[derive(Clone, Debug, Default)]
pub struct LoadAssignment {
    /// MIPS per processing node id.
    pub pn_load: BTreeMap<usize, f64>,
    /// Mb/s per traffic device id.
    pub traffic: BTreeMap<usize, f64>,
    /// Activated processing nodes.
    pub delta: BTreeMap<usize, bool>,
    /// Activated traffic devices.
    pub psi: BTreeMap<usize, bool>,
}

/// Load-proportional power of one device, no PUE, no idle attribution.
/// Endpoints are exact: zero load draws `p_idle`, full load draws `p_max`.
pub fn linear_power(profile: &DeviceProfile, load: f64) -> Result<f64> {
    if !(0.0..=profile.capacity).contains(&load) {
        return Err(Error::CapacityExceeded {
            device: profile.kind.label().to_string(),
            load,
            capacity: profile.capacity,
        });
    }
    if load == 0.0 {
        Ok(profile.p_idle)
    } else if load == profile.capacity {
        Ok(profile.p_max)
    } else {
        Ok(profile.p_idle + load * profile.marginal())
    }
}

const CARRY_TOL: f64 = 1e-9;

/// Attributed power of one device: PUE times idle part plus proportional
/// part.
///
/// Capacity is enforced for processors and the VW wireless adapter. Shared
/// duplex network devices traverse each flow twice on one fabric, so their
/// traversal sum can legitimately exceed the per-port nameplate; they
/// extrapolate linearly instead of erroring. Activation is required for any
/// nonzero load.
pub fn device_power(profile: &DeviceProfile, load: f64, activated: bool) -> Result<f64> {
    if load < 0.0 {
        return Err(Error::InconsistentAssignment(format!(
            "{}: negative load {load}",
            profile.kind.label()
        )));
    }
    if load > CARRY_TOL && !activated {
        return Err(Error::InconsistentAssignment(format!(
            "{}: load {load} on a device that is not activated",
            profile.kind.label()
        )));
    }
    let enforce_cap = profile.kind.is_processing() || profile.kind == DeviceKind::Vw;
    if enforce_cap && load > profile.capacity {
        return Err(Error::CapacityExceeded {
            device: profile.kind.label().to_string(),
            load,
            capacity: profile.capacity,
        });
    }
    let idle_part = if activated && profile.kind != DeviceKind::Vn {
        profile.idle_fraction * profile.p_idle
    } else {
        0.0
    };
    Ok(profile.pue * (idle_part + load * profile.marginal()))
}

/// Evaluates the full power breakdown of an explicit assignment.
pub fn total_power(topo: &Topology, load: &LoadAssignment) -> Result<PowerBreakdown> {
    let mut out = PowerBreakdown::default();
    for dev in &topo.devices {
        let profile = topo.profile(dev.kind);
        let (load_val, activated) = if dev.kind.is_processing() {
            (
                load.pn_load.get(&dev.id).copied().unwrap_or(0.0),
                load.delta.get(&dev.id).copied().unwrap_or(false),
            )
        } else if dev.kind.is_traffic() {
            (
                load.traffic.get(&dev.id).copied().unwrap_or(0.0),
                load.psi.get(&dev.id).copied().unwrap_or(false),
            )
        } else {
            continue;
        };
        let p = device_power(profile, load_val, activated)?;
        let slot = match dev.kind {
            DeviceKind::Cc | DeviceKind::Cs | DeviceKind::Cr => &mut out.tpc_cc,
            DeviceKind::Mf | DeviceKind::Mfr | DeviceKind::Mfs => &mut out.tpc_mf,
            DeviceKind::Lf | DeviceKind::Lfr | DeviceKind::Lfs => &mut out.tpc_lf,
            DeviceKind::Nf => &mut out.tpc_nf,
            DeviceKind::Vn | DeviceKind::Vw => &mut out.tpc_vn,
            DeviceKind::Rr => &mut out.tpc_rr,
            DeviceKind::Mr => &mut out.tpc_mr,
            DeviceKind::Ms => &mut out.tpc_ms,
            DeviceKind::Olt => &mut out.tpc_o,
            DeviceKind::Onu => &mut out.tpc_u,
            DeviceKind::Ap => &mut out.tpc_a,
            DeviceKind::Sn => unreachable!(),
        };
        *slot += p;
    }
    out.total = out.tpc_cc + out.tpc_mf + out.tpc_lf + out.tpc_nf + out.tpc_vn + out.tpc_net();
    Ok(out)
}

/// Builds the load assignment induced by per-task MIPS allocations,
/// walking each task's path and accumulating traffic on every non-terminal
/// device. Activation flags are derived: a device is active iff it carries
/// anything.
pub fn induced_assignment(
    topo: &Topology,
    tasks: &[Task],
    alloc: &[(usize, usize, f64)],
) -> Result<LoadAssignment> {
    let mut out = LoadAssignment::default();
    for &(task_idx, pn, mips) in alloc {
        if mips < 0.0 {
            return Err(Error::InconsistentAssignment(format!(
                "task {task_idx}: negative allocation {mips}"
            )));
        }
        if mips == 0.0 {
            continue;
        }
        let task = tasks.get(task_idx).ok_or_else(|| {
            Error::InconsistentAssignment(format!("unknown task index {task_idx}"))
        })?;
        *out.pn_load.entry(pn).or_insert(0.0) += mips;
        out.delta.insert(pn, true);
        let path = topo.path(task.source_zone, task.source_cluster, pn)?;
        for &dev in &path[..path.len() - 1] {
            *out.traffic.entry(dev).or_insert(0.0) += task.drr * mips;
            out.psi.insert(dev, true);
        }
    }
    Ok(out)
}
