//! Tree topology of the cloud-fog-VEC architecture.
//!
//! Devices get dense ids ordered by (zone, cluster, kind, index). Zone 0
//! holds the shared trunk: OLT, metro switch and router, core router ports,
//! the central-cloud pool with its switch and router, and the OLT/metro fog
//! units. Every other zone holds one ONU and one ONU fog processor (NF),
//! plus its clusters; every cluster holds one AP and the vehicular nodes
//! (VN), each paired with a dedicated wireless adapter (VW).
//!
//! The routing layer is a tree, so each (source cluster, processing node)
//! pair has exactly one device path; [`Topology::path`] returns it and the
//! model charges traffic to every device on it except the terminal
//! processor.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Equipment classes. Declaration order fixes the within-cluster device
/// ordering and is part of the deterministic id scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceKind {
    /// Source node: generates tasks, carries no power and no capacity.
    Sn,
    /// Access point serving one cluster.
    Ap,
    /// Optical network unit, one per zone.
    Onu,
    /// Optical line terminal, one per instance.
    Olt,
    /// Metro switch.
    Ms,
    /// Metro router port.
    Mr,
    /// Core router port.
    Rr,
    /// Cloud-side router port.
    Cr,
    /// Cloud-side switch.
    Cs,
    /// Central-cloud server.
    Cc,
    /// Metro fog router port.
    Mfr,
    /// Metro fog switch.
    Mfs,
    /// Metro fog server.
    Mf,
    /// OLT fog router port.
    Lfr,
    /// OLT fog switch.
    Lfs,
    /// OLT fog server.
    Lf,
    /// ONU fog processor.
    Nf,
    /// Vehicular node processor.
    Vn,
    /// Vehicular wireless adapter, one per VN.
    Vw,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 19] = [
        DeviceKind::Sn,
        DeviceKind::Ap,
        DeviceKind::Onu,
        DeviceKind::Olt,
        DeviceKind::Ms,
        DeviceKind::Mr,
        DeviceKind::Rr,
        DeviceKind::Cr,
        DeviceKind::Cs,
        DeviceKind::Cc,
        DeviceKind::Mfr,
        DeviceKind::Mfs,
        DeviceKind::Mf,
        DeviceKind::Lfr,
        DeviceKind::Lfs,
        DeviceKind::Lf,
        DeviceKind::Nf,
        DeviceKind::Vn,
        DeviceKind::Vw,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DeviceKind::Sn => "SN",
            DeviceKind::Ap => "AP",
            DeviceKind::Onu => "ONU",
            DeviceKind::Olt => "OLT",
            DeviceKind::Ms => "MS",
            DeviceKind::Mr => "MR",
            DeviceKind::Rr => "RR",
            DeviceKind::Cr => "CR",
            DeviceKind::Cs => "CS",
            DeviceKind::Cc => "CC",
            DeviceKind::Mfr => "MFR",
            DeviceKind::Mfs => "MFS",
            DeviceKind::Mf => "MF",
            DeviceKind::Lfr => "LFR",
            DeviceKind::Lfs => "LFS",
            DeviceKind::Lf => "LF",
            DeviceKind::Nf => "NF",
            DeviceKind::Vn => "VN",
            DeviceKind::Vw => "VW",
        }
    }

    pub fn from_label(s: &str) -> Option<DeviceKind> {
        DeviceKind::ALL
            .iter()
            .copied()
            .find(|k| k.label().eq_ignore_ascii_case(s))
    }

    /// Processing nodes: the devices workload can be allocated to.
    pub fn is_processing(self) -> bool {
        matches!(
            self,
            DeviceKind::Cc | DeviceKind::Mf | DeviceKind::Lf | DeviceKind::Nf | DeviceKind::Vn
        )
    }

    /// Devices that carry application traffic (everything routable that is
    /// neither a source nor a processor).
    pub fn is_traffic(self) -> bool {
        !self.is_processing() && self != DeviceKind::Sn
    }
}

/// Power, capacity, and attribution parameters of one equipment class.
///
/// `capacity` is MIPS for processors and Mb/s for network devices.
/// `idle_fraction` is the share of idle power attributed to the studied
/// application: 0.06 on shared trunk devices, 1.0 on dedicated ones.
/// The VN processor is the one exception handled downstream: its idle power
/// is never charged at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceProfile {
    pub kind: DeviceKind,
    pub p_max: f64,
    pub p_idle: f64,
    pub capacity: f64,
    pub idle_fraction: f64,
    pub pue: f64,
}

impl DeviceProfile {
    /// Marginal power per unit load: (p_max - p_idle) / capacity.
    pub fn marginal(&self) -> f64 {
        (self.p_max - self.p_idle) / self.capacity
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_idle >= 0.0 && self.p_idle <= self.p_max) {
            return Err(Error::Config(format!(
                "{}: idle power must satisfy 0 <= idle <= max",
                self.kind.label()
            )));
        }
        if !(self.capacity > 0.0) {
            return Err(Error::Config(format!(
                "{}: capacity must be positive",
                self.kind.label()
            )));
        }
        if !(self.idle_fraction > 0.0 && self.idle_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "{}: idle fraction must be in (0, 1]",
                self.kind.label()
            )));
        }
        if !(self.pue >= 1.0) {
            return Err(Error::Config(format!(
                "{}: PUE must be >= 1",
                self.kind.label()
            )));
        }
        Ok(())
    }
}

const SHARED_IDLE_FRACTION: f64 = 0.06;

/// Default equipment parameters for every powered device class.
pub fn default_profiles() -> BTreeMap<DeviceKind, DeviceProfile> {
    let rows: [(DeviceKind, f64, f64, f64, f64, f64); 18] = [
        // kind, p_max W, p_idle W, capacity, idle fraction, PUE
        (DeviceKind::Ap, 11.0, 4.8, 1_167.0, 1.0, 1.0),
        (DeviceKind::Onu, 15.0, 13.5, 10_000.0, 1.0, 1.0),
        (
            DeviceKind::Olt,
            50.0,
            45.0,
            1_920_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (
            DeviceKind::Ms,
            500.0,
            450.0,
            1_800_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (
            DeviceKind::Mr,
            25.0,
            22.5,
            40_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (
            DeviceKind::Rr,
            638.0,
            574.2,
            40_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (
            DeviceKind::Cr,
            25.0,
            22.5,
            40_000.0,
            SHARED_IDLE_FRACTION,
            1.1,
        ),
        (
            DeviceKind::Cs,
            460.0,
            414.0,
            600_000.0,
            SHARED_IDLE_FRACTION,
            1.1,
        ),
        (DeviceKind::Cc, 115.0, 69.0, 144_000.0, 1.0, 1.1),
        (
            DeviceKind::Mfr,
            13.0,
            11.7,
            40_000.0,
            SHARED_IDLE_FRACTION,
            1.4,
        ),
        (
            DeviceKind::Mfs,
            245.0,
            220.5,
            200_000.0,
            SHARED_IDLE_FRACTION,
            1.4,
        ),
        (DeviceKind::Mf, 85.0, 51.0, 88_000.0, 1.0, 1.4),
        (
            DeviceKind::Lfr,
            13.0,
            11.7,
            40_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (
            DeviceKind::Lfs,
            245.0,
            220.5,
            200_000.0,
            SHARED_IDLE_FRACTION,
            1.5,
        ),
        (DeviceKind::Lf, 85.0, 51.0, 54_400.0, 1.0, 1.5),
        (DeviceKind::Nf, 15.0, 9.0, 6_000.0, 1.0, 1.0),
        (DeviceKind::Vn, 10.0, 6.0, 3_200.0, 1.0, 1.0),
        (DeviceKind::Vw, 2.5, 1.5, 72.2, 1.0, 1.0),
    ];
    rows.iter()
        .map(|&(kind, p_max, p_idle, capacity, idle_fraction, pue)| {
            (
                kind,
                DeviceProfile {
                    kind,
                    p_max,
                    p_idle,
                    capacity,
                    idle_fraction,
                    pue,
                },
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Architecture {
    OneZone,
    MultiZone,
}

impl Architecture {
    pub fn label(self) -> &'static str {
        match self {
            Architecture::OneZone => "one-zone",
            Architecture::MultiZone => "multi-zone",
        }
    }

    pub fn from_label(s: &str) -> Option<Architecture> {
        match s {
            "one-zone" => Some(Architecture::OneZone),
            "multi-zone" => Some(Architecture::MultiZone),
            _ => None,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug)]
pub struct Device {
    pub id: usize,
    pub kind: DeviceKind,
    /// 0 for shared trunk devices, 1-based otherwise.
    pub zone: usize,
    /// 0 for zone-level devices (ONU, NF), 1-based otherwise.
    pub cluster: usize,
    /// Distinguishes same-kind devices in one (zone, cluster): RR hops,
    /// CC servers, VNs, VWs. 0-based.
    pub index: usize,
    pub name: String,
}

/// Undirected physical connection. Capacity is the tighter of the two
/// endpoint routing rates (infinite where no rate applies, e.g. into a
/// processor or through an AP's wired side).
#[derive(Clone, Debug)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug)]
pub struct Topology {
    pub architecture: Architecture,
    pub zones: usize,
    pub clusters_per_zone: usize,
    pub vns_per_cluster: usize,
    pub cc_servers: usize,
    /// Number of core router ports a cloud-bound flow traverses.
    pub rr_hops: usize,
    pub devices: Vec<Device>,
    pub links: Vec<Link>,
    pub profiles: BTreeMap<DeviceKind, DeviceProfile>,
}

/// One-zone architecture: a single ONU/NF zone holding `clusters` clusters.
pub fn build_one_zone(clusters: usize, vns_per_cluster: usize, cc_servers: usize) -> Topology {
    build_custom(
        Architecture::OneZone,
        1,
        clusters,
        vns_per_cluster,
        cc_servers,
        1,
        default_profiles(),
    )
}

/// Multi-zone architecture: `zones` ONU/NF zones behind one OLT.
pub fn build_multi_zone(
    zones: usize,
    clusters_per_zone: usize,
    vns_per_cluster: usize,
    cc_servers: usize,
) -> Topology {
    build_custom(
        Architecture::MultiZone,
        zones,
        clusters_per_zone,
        vns_per_cluster,
        cc_servers,
        1,
        default_profiles(),
    )
}

/// Full constructor: explicit counts, core hop count, and equipment profiles.
pub fn build_custom(
    architecture: Architecture,
    zones: usize,
    clusters_per_zone: usize,
    vns_per_cluster: usize,
    cc_servers: usize,
    rr_hops: usize,
    profiles: BTreeMap<DeviceKind, DeviceProfile>,
) -> Topology {
    assert!(zones >= 1, "at least one zone required");
    assert!(
        architecture == Architecture::MultiZone || zones == 1,
        "one-zone architecture has exactly one zone"
    );
    assert!(clusters_per_zone >= 1, "at least one cluster per zone");
    assert!(cc_servers >= 1, "at least one cloud server");
    assert!(rr_hops >= 1, "at least one core router hop");
    for kind in DeviceKind::ALL {
        if kind == DeviceKind::Sn {
            continue;
        }
        let p = profiles
            .get(&kind)
            .unwrap_or_else(|| panic!("missing profile for {}", kind.label()));
        p.validate().expect("invalid device profile");
    }

    let mut devices: Vec<Device> = Vec::new();
    let add = |devices: &mut Vec<Device>,
               kind: DeviceKind,
               zone: usize,
               cluster: usize,
               index: usize,
               name: String|
     -> usize {
        let id = devices.len();
        devices.push(Device {
            id,
            kind,
            zone,
            cluster,
            index,
            name,
        });
        id
    };

    // Shared trunk, zone 0, in (kind, index) order.
    let olt = add(&mut devices, DeviceKind::Olt, 0, 0, 0, "olt".into());
    let ms = add(&mut devices, DeviceKind::Ms, 0, 0, 0, "ms".into());
    let mr = add(&mut devices, DeviceKind::Mr, 0, 0, 0, "mr".into());
    let rr: Vec<usize> = (0..rr_hops)
        .map(|i| {
            add(
                &mut devices,
                DeviceKind::Rr,
                0,
                0,
                i,
                format!("rr{}", i + 1),
            )
        })
        .collect();
    let cr = add(&mut devices, DeviceKind::Cr, 0, 0, 0, "cr".into());
    let cs = add(&mut devices, DeviceKind::Cs, 0, 0, 0, "cs".into());
    let cc: Vec<usize> = (0..cc_servers)
        .map(|i| {
            add(
                &mut devices,
                DeviceKind::Cc,
                0,
                0,
                i,
                format!("cc{}", i + 1),
            )
        })
        .collect();
    let mfr = add(&mut devices, DeviceKind::Mfr, 0, 0, 0, "mfr".into());
    let mfs = add(&mut devices, DeviceKind::Mfs, 0, 0, 0, "mfs".into());
    let mf = add(&mut devices, DeviceKind::Mf, 0, 0, 0, "mf".into());
    let lfr = add(&mut devices, DeviceKind::Lfr, 0, 0, 0, "lfr".into());
    let lfs = add(&mut devices, DeviceKind::Lfs, 0, 0, 0, "lfs".into());
    let lf = add(&mut devices, DeviceKind::Lf, 0, 0, 0, "lf".into());

    let mut links: Vec<(usize, usize)> = vec![
        (olt, ms),
        (ms, mr),
        (mr, rr[0]),
        (cr, cs),
        (ms, mfr),
        (mfr, mfs),
        (mfs, mf),
        (olt, lfr),
        (lfr, lfs),
        (lfs, lf),
    ];
    for w in rr.windows(2) {
        links.push((w[0], w[1]));
    }
    links.push((rr[rr_hops - 1], cr));
    for &c in &cc {
        links.push((cs, c));
    }

    for z in 1..=zones {
        let onu = add(&mut devices, DeviceKind::Onu, z, 0, 0, format!("onu{z}"));
        let nf = add(&mut devices, DeviceKind::Nf, z, 0, 0, format!("nf{z}"));
        links.push((olt, onu));
        links.push((onu, nf));
        for c in 1..=clusters_per_zone {
            let ap = add(&mut devices, DeviceKind::Ap, z, c, 0, format!("ap{z}_{c}"));
            links.push((onu, ap));
            let vns: Vec<usize> = (0..vns_per_cluster)
                .map(|i| {
                    add(
                        &mut devices,
                        DeviceKind::Vn,
                        z,
                        c,
                        i,
                        format!("vn{z}_{c}_{}", i + 1),
                    )
                })
                .collect();
            for (i, &vn) in vns.iter().enumerate() {
                let vw = add(
                    &mut devices,
                    DeviceKind::Vw,
                    z,
                    c,
                    i,
                    format!("vw{z}_{c}_{}", i + 1),
                );
                links.push((ap, vw));
                links.push((vw, vn));
            }
        }
    }

    let mut topo = Topology {
        architecture,
        zones,
        clusters_per_zone,
        vns_per_cluster,
        cc_servers,
        rr_hops,
        devices,
        links: Vec::new(),
        profiles,
    };
    topo.links = links
        .into_iter()
        .map(|(a, b)| Link {
            a,
            b,
            capacity: topo.hop_capacity(a, b),
        })
        .collect();
    topo
}

impl Topology {
    pub fn device(&self, id: usize) -> &Device {
        &self.devices[id]
    }

    pub fn profile(&self, kind: DeviceKind) -> &DeviceProfile {
        self.profiles
            .get(&kind)
            .unwrap_or_else(|| panic!("missing profile for {}", kind.label()))
    }

    pub fn profile_of(&self, id: usize) -> &DeviceProfile {
        self.profile(self.devices[id].kind)
    }

    pub fn find(
        &self,
        kind: DeviceKind,
        zone: usize,
        cluster: usize,
        index: usize,
    ) -> Option<usize> {
        self.devices
            .iter()
            .find(|d| d.kind == kind && d.zone == zone && d.cluster == cluster && d.index == index)
            .map(|d| d.id)
    }

    /// Looks up a device id by its display name.
    pub fn id_by_name(&self, name: &str) -> Option<usize> {
        self.devices.iter().find(|d| d.name == name).map(|d| d.id)
    }

    fn sole(&self, kind: DeviceKind) -> usize {
        self.find(kind, 0, 0, 0)
            .unwrap_or_else(|| panic!("missing {}", kind.label()))
    }

    pub fn olt(&self) -> usize {
        self.sole(DeviceKind::Olt)
    }

    pub fn ms(&self) -> usize {
        self.sole(DeviceKind::Ms)
    }

    pub fn mr(&self) -> usize {
        self.sole(DeviceKind::Mr)
    }

    pub fn cr(&self) -> usize {
        self.sole(DeviceKind::Cr)
    }

    pub fn cs(&self) -> usize {
        self.sole(DeviceKind::Cs)
    }

    pub fn mf(&self) -> usize {
        self.sole(DeviceKind::Mf)
    }

    pub fn lf(&self) -> usize {
        self.sole(DeviceKind::Lf)
    }

    pub fn mfr(&self) -> usize {
        self.sole(DeviceKind::Mfr)
    }

    pub fn mfs(&self) -> usize {
        self.sole(DeviceKind::Mfs)
    }

    pub fn lfr(&self) -> usize {
        self.sole(DeviceKind::Lfr)
    }

    pub fn lfs(&self) -> usize {
        self.sole(DeviceKind::Lfs)
    }

    pub fn rr_ids(&self) -> Vec<usize> {
        (0..self.rr_hops)
            .map(|i| self.find(DeviceKind::Rr, 0, 0, i).expect("missing RR"))
            .collect()
    }

    pub fn cc_ids(&self) -> Vec<usize> {
        (0..self.cc_servers)
            .map(|i| self.find(DeviceKind::Cc, 0, 0, i).expect("missing CC"))
            .collect()
    }

    pub fn onu(&self, zone: usize) -> usize {
        self.find(DeviceKind::Onu, zone, 0, 0)
            .unwrap_or_else(|| panic!("missing ONU for zone {zone}"))
    }

    pub fn nf(&self, zone: usize) -> usize {
        self.find(DeviceKind::Nf, zone, 0, 0)
            .unwrap_or_else(|| panic!("missing NF for zone {zone}"))
    }

    pub fn ap(&self, zone: usize, cluster: usize) -> usize {
        self.find(DeviceKind::Ap, zone, cluster, 0)
            .unwrap_or_else(|| panic!("missing AP for zone {zone} cluster {cluster}"))
    }

    /// The wireless adapter paired with a VN.
    pub fn vw_of(&self, vn: usize) -> usize {
        let d = &self.devices[vn];
        assert_eq!(d.kind, DeviceKind::Vn, "vw_of takes a VN id");
        self.find(DeviceKind::Vw, d.zone, d.cluster, d.index)
            .expect("missing VW for VN")
    }

    /// All processing-node ids in id order.
    pub fn processing_nodes(&self) -> Vec<usize> {
        self.devices
            .iter()
            .filter(|d| d.kind.is_processing())
            .map(|d| d.id)
            .collect()
    }

    /// All traffic-carrying device ids in id order.
    pub fn traffic_devices(&self) -> Vec<usize> {
        self.devices
            .iter()
            .filter(|d| d.kind.is_traffic())
            .map(|d| d.id)
            .collect()
    }

    pub fn vn_ids(&self) -> Vec<usize> {
        self.devices
            .iter()
            .filter(|d| d.kind == DeviceKind::Vn)
            .map(|d| d.id)
            .collect()
    }

    /// (zone, cluster) pairs in id order.
    pub fn clusters(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for z in 1..=self.zones {
            for c in 1..=self.clusters_per_zone {
                out.push((z, c));
            }
        }
        out
    }

    /// Rate limit a flow experiences when hopping between two adjacent
    /// devices: the tighter of the two endpoint rates. Processors have no
    /// routing rate (their intake is bounded by processing capacity) and the
    /// AP's wired side is not rate-limited here; its wireless side is
    /// capped separately per cluster.
    pub fn hop_capacity(&self, a: usize, b: usize) -> f64 {
        f64::min(self.routing_rate(a), self.routing_rate(b))
    }

    fn routing_rate(&self, id: usize) -> f64 {
        let d = &self.devices[id];
        if d.kind.is_processing() || d.kind == DeviceKind::Ap || d.kind == DeviceKind::Sn {
            f64::INFINITY
        } else {
            self.profile(d.kind).capacity
        }
    }

    /// Unique device path from a cluster's AP to a processing node,
    /// terminal processor included. Traffic is charged to every device on
    /// the path except that terminal.
    pub fn path(&self, source_zone: usize, source_cluster: usize, pn: usize) -> Result<Vec<usize>> {
        if pn >= self.devices.len() || !self.devices[pn].kind.is_processing() {
            return Err(Error::UnknownNode(format!(
                "device {pn} is not a processing node"
            )));
        }
        assert!(
            source_zone >= 1 && source_zone <= self.zones,
            "unknown source zone {source_zone}"
        );
        assert!(
            source_cluster >= 1 && source_cluster <= self.clusters_per_zone,
            "unknown source cluster {source_cluster}"
        );
        let ap_src = self.ap(source_zone, source_cluster);
        let onu_src = self.onu(source_zone);
        let dst = &self.devices[pn];
        let mut path = vec![ap_src];
        match dst.kind {
            DeviceKind::Vn => {
                let vw = self.vw_of(pn);
                if dst.zone == source_zone && dst.cluster == source_cluster {
                    // Local VEC: wireless hop only.
                } else if dst.zone == source_zone {
                    path.push(onu_src);
                    path.push(self.ap(dst.zone, dst.cluster));
                } else {
                    path.push(onu_src);
                    path.push(self.olt());
                    path.push(self.onu(dst.zone));
                    path.push(self.ap(dst.zone, dst.cluster));
                }
                path.push(vw);
            }
            DeviceKind::Nf => {
                path.push(onu_src);
                if dst.zone != source_zone {
                    path.push(self.olt());
                    path.push(self.onu(dst.zone));
                }
            }
            DeviceKind::Lf => {
                path.push(onu_src);
                path.push(self.olt());
                path.push(self.lfr());
                path.push(self.lfs());
            }
            DeviceKind::Mf => {
                path.push(onu_src);
                path.push(self.olt());
                path.push(self.ms());
                path.push(self.mfr());
                path.push(self.mfs());
            }
            DeviceKind::Cc => {
                path.push(onu_src);
                path.push(self.olt());
                path.push(self.ms());
                path.push(self.mr());
                path.extend(self.rr_ids());
                path.push(self.cr());
                path.push(self.cs());
            }
            _ => unreachable!(),
        }
        path.push(pn);
        Ok(path)
    }
}
