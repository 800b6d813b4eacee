//! Instantaneous signal quantities: SINRs, co-band interference, harvested
//! power and Shannon capacity. All values are linear (W, ratios, bit/s).

use crate::channel::{ChannelState, Link};
use crate::scenario::{BandOwner, OwnerInterference, ScenarioConfig, Topology};
use crate::units::{db_to_linear, dbm_to_watts};

/// Linear-unit constants and membership tables derived from a config and a
/// topology.
#[derive(Debug, Clone)]
pub struct Network {
    pub sub_bands: usize,
    pub hues: usize,
    pub clusters: usize,
    pub cmtcds: usize,
    pub tmtcds: usize,
    pub band_owner: Vec<BandOwner>,
    pub cmtcd_cluster: Vec<usize>,
    pub tmtcd_cluster: Vec<usize>,
    pub noise_w: f64,
    pub p_bs_w: f64,
    pub p_cmtcd_w: f64,
    pub p_circuit_w: f64,
    pub p_max_w: f64,
    pub sinr_cap: f64,
    pub sinr_min_h2h: f64,
    pub sinr_min_cmtcd: f64,
    pub sub_band_hz: f64,
    pub energy_conversion: f64,
    /// Power-splitting ratio of every critical device (1 without SWIPT).
    pub cmtcd_ps_ratio: f64,
    pub owner_interference: OwnerInterference,
}

impl Network {
    pub fn new(cfg: &ScenarioConfig, topo: &Topology, swipt: bool) -> Self {
        Network {
            sub_bands: topo.band_owner.len(),
            hues: topo.hues.len(),
            clusters: topo.gateways.len(),
            cmtcds: topo.cmtcds.len(),
            tmtcds: topo.tmtcds.len(),
            band_owner: topo.band_owner.clone(),
            cmtcd_cluster: topo.cmtcds.iter().map(|d| d.cluster).collect(),
            tmtcd_cluster: topo.tmtcds.iter().map(|d| d.cluster).collect(),
            noise_w: dbm_to_watts(cfg.noise_power_dbm),
            p_bs_w: dbm_to_watts(cfg.p_bs_dbm),
            p_cmtcd_w: dbm_to_watts(cfg.p_cmtcd_dbm),
            p_circuit_w: dbm_to_watts(cfg.circuit_power_dbm),
            p_max_w: dbm_to_watts(cfg.p_max_dbm),
            sinr_cap: db_to_linear(cfg.sinr_cap_db),
            sinr_min_h2h: db_to_linear(cfg.sinr_min_h2h_db),
            sinr_min_cmtcd: db_to_linear(cfg.sinr_min_cmtcd_db),
            sub_band_hz: cfg.sub_band_hz(),
            energy_conversion: cfg.energy_conversion,
            cmtcd_ps_ratio: if swipt { cfg.cmtcd_ps_ratio } else { 1.0 },
            owner_interference: cfg.owner_interference,
        }
    }

    pub fn hue_band(&self, h: usize) -> usize {
        h
    }

    pub fn cmtcd_band(&self, s: usize) -> usize {
        self.hues + s
    }
}

/// Resource choice of every tolerable link.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Zero-based sub-band index per link.
    pub sub_band: Vec<usize>,
    /// Transmit power in watts per link.
    pub power_w: Vec<f64>,
    /// Power-splitting ratio per link, in (0, 1].
    pub ps_ratio: Vec<f64>,
}

impl Allocation {
    pub fn empty() -> Self {
        Allocation {
            sub_band: vec![],
            power_w: vec![],
            ps_ratio: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.sub_band.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_band.is_empty()
    }

    /// Spectrum indicator: 1 iff link `n` transmits on `k`.
    pub fn indicator(&self, n: usize, k: usize) -> bool {
        self.sub_band[n] == k
    }

    /// Links transmitting on sub-band `k`.
    pub fn on_band(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.sub_band
            .iter()
            .enumerate()
            .filter(move |&(_, &b)| b == k)
            .map(|(n, _)| n)
    }
}

fn cap(net: &Network, sinr: f64) -> f64 {
    sinr.min(net.sinr_cap)
}

/// Tolerable-link interference received by HUE `h` on its band.
pub fn hue_interference(net: &Network, alloc: &Allocation, ch: &ChannelState, h: usize) -> f64 {
    let k = net.hue_band(h);
    alloc
        .on_band(k)
        .map(|n| alloc.power_w[n] * ch.gain(Link::GwHue(net.tmtcd_cluster[n], h), k))
        .sum()
}

/// Tolerable-link interference received by critical device `s` on its band,
/// intra- and inter-cluster transmitters alike.
pub fn cmtcd_interference(net: &Network, alloc: &Allocation, ch: &ChannelState, s: usize) -> f64 {
    let k = net.cmtcd_band(s);
    alloc
        .on_band(k)
        .map(|n| alloc.power_w[n] * ch.gain(Link::GwCmtcd(net.tmtcd_cluster[n], s), k))
        .sum()
}

/// Interference the tolerable receiver `n` sees on sub-band `k` from the
/// band owner's transmission and every other tolerable link on `k`.
/// Link `n`'s own transmission is never counted, wherever it is.
pub fn tmtcd_interference(
    net: &Network,
    alloc: &Allocation,
    ch: &ChannelState,
    n: usize,
    k: usize,
) -> f64 {
    let m = net.tmtcd_cluster[n];
    let owner = match (net.owner_interference, net.band_owner[k]) {
        (OwnerInterference::AsPrinted, BandOwner::Hue(_)) => {
            net.p_cmtcd_w * ch.gain(Link::GwTmtcd(m, n), k)
        }
        (OwnerInterference::AsPrinted, BandOwner::Cmtcd(_)) => {
            net.p_bs_w * ch.gain(Link::BsTmtcd(n), k)
        }
        (OwnerInterference::OwnerTransmitter, BandOwner::Hue(_)) => {
            net.p_bs_w * ch.gain(Link::BsTmtcd(n), k)
        }
        (OwnerInterference::OwnerTransmitter, BandOwner::Cmtcd(s)) => {
            net.p_cmtcd_w * ch.gain(Link::GwTmtcd(net.cmtcd_cluster[s], n), k)
        }
    };
    let others: f64 = alloc
        .on_band(k)
        .filter(|&j| j != n)
        .map(|j| alloc.power_w[j] * ch.gain(Link::GwTmtcd(net.tmtcd_cluster[j], n), k))
        .sum();
    owner + others
}

/// SINR of the H2H link of HUE `h`, capped.
pub fn h2h_sinr(net: &Network, alloc: &Allocation, ch: &ChannelState, h: usize) -> f64 {
    let k = net.hue_band(h);
    let signal = net.p_bs_w * ch.gain(Link::BsHue(h), k);
    cap(net, signal / (hue_interference(net, alloc, ch, h) + net.noise_w))
}

/// SINR of critical device `s` behind its power splitter, capped.
pub fn cmtcd_sinr(net: &Network, alloc: &Allocation, ch: &ChannelState, s: usize) -> f64 {
    let k = net.cmtcd_band(s);
    let rho = net.cmtcd_ps_ratio;
    let signal = net.p_cmtcd_w * ch.gain(Link::GwCmtcd(net.cmtcd_cluster[s], s), k);
    let i = cmtcd_interference(net, alloc, ch, s);
    cap(net, rho * signal / (rho * i + net.noise_w))
}

/// SINR of tolerable link `n` on its allocated sub-band, capped.
pub fn tmtcd_sinr(net: &Network, alloc: &Allocation, ch: &ChannelState, n: usize) -> f64 {
    let k = alloc.sub_band[n];
    let rho = alloc.ps_ratio[n];
    let signal = alloc.power_w[n] * ch.gain(Link::GwTmtcd(net.tmtcd_cluster[n], n), k);
    let i = tmtcd_interference(net, alloc, ch, n, k);
    cap(net, rho * signal / (rho * i + net.noise_w))
}

/// Linear energy harvesting: `theta (1 - rho)` of the received RF power.
pub fn harvest(theta: f64, rho: f64, received_w: f64) -> f64 {
    theta * (1.0 - rho) * received_w
}

/// Power harvested by critical device `s`.
pub fn cmtcd_harvested(net: &Network, alloc: &Allocation, ch: &ChannelState, s: usize) -> f64 {
    let k = net.cmtcd_band(s);
    let signal = net.p_cmtcd_w * ch.gain(Link::GwCmtcd(net.cmtcd_cluster[s], s), k);
    let i = cmtcd_interference(net, alloc, ch, s);
    harvest(net.energy_conversion, net.cmtcd_ps_ratio, signal + i)
}

/// Power harvested by tolerable device `n`.
pub fn tmtcd_harvested(net: &Network, alloc: &Allocation, ch: &ChannelState, n: usize) -> f64 {
    let k = alloc.sub_band[n];
    let signal = alloc.power_w[n] * ch.gain(Link::GwTmtcd(net.tmtcd_cluster[n], n), k);
    let i = tmtcd_interference(net, alloc, ch, n, k);
    harvest(net.energy_conversion, alloc.ps_ratio[n], signal + i)
}

/// Shannon capacity over one sub-band, bit/s.
pub fn link_capacity(sinr: f64, sub_band_hz: f64) -> f64 {
    sub_band_hz * (1.0 + sinr).log2()
}

/// Every per-link quantity for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    pub sinr_hue: Vec<f64>,
    pub sinr_cmtcd: Vec<f64>,
    pub sinr_tmtcd: Vec<f64>,
    pub interference_hue: Vec<f64>,
    pub interference_cmtcd: Vec<f64>,
    pub interference_tmtcd: Vec<f64>,
    pub harvested_cmtcd: Vec<f64>,
    pub harvested_tmtcd: Vec<f64>,
    pub capacity_tmtcd: Vec<f64>,
}

/// Single pass over all links; each interference sum is evaluated once and
/// shared by the SINR and harvesting expressions.
pub fn compute_all_metrics(net: &Network, alloc: &Allocation, ch: &ChannelState) -> LinkMetrics {
    let noise = net.noise_w;
    let mut m = LinkMetrics {
        sinr_hue: Vec::with_capacity(net.hues),
        sinr_cmtcd: Vec::with_capacity(net.cmtcds),
        sinr_tmtcd: Vec::with_capacity(net.tmtcds),
        interference_hue: Vec::with_capacity(net.hues),
        interference_cmtcd: Vec::with_capacity(net.cmtcds),
        interference_tmtcd: Vec::with_capacity(net.tmtcds),
        harvested_cmtcd: Vec::with_capacity(net.cmtcds),
        harvested_tmtcd: Vec::with_capacity(net.tmtcds),
        capacity_tmtcd: Vec::with_capacity(net.tmtcds),
    };

    for h in 0..net.hues {
        let i = hue_interference(net, alloc, ch, h);
        let signal = net.p_bs_w * ch.gain(Link::BsHue(h), net.hue_band(h));
        m.interference_hue.push(i);
        m.sinr_hue.push(cap(net, signal / (i + noise)));
    }

    let rho = net.cmtcd_ps_ratio;
    for s in 0..net.cmtcds {
        let k = net.cmtcd_band(s);
        let i = cmtcd_interference(net, alloc, ch, s);
        let signal = net.p_cmtcd_w * ch.gain(Link::GwCmtcd(net.cmtcd_cluster[s], s), k);
        m.interference_cmtcd.push(i);
        m.sinr_cmtcd.push(cap(net, rho * signal / (rho * i + noise)));
        m.harvested_cmtcd.push(harvest(net.energy_conversion, rho, signal + i));
    }

    for n in 0..alloc.len() {
        let k = alloc.sub_band[n];
        let rho = alloc.ps_ratio[n];
        let i = tmtcd_interference(net, alloc, ch, n, k);
        let signal = alloc.power_w[n] * ch.gain(Link::GwTmtcd(net.tmtcd_cluster[n], n), k);
        let sinr = cap(net, rho * signal / (rho * i + noise));
        m.interference_tmtcd.push(i);
        m.sinr_tmtcd.push(sinr);
        m.harvested_tmtcd.push(harvest(net.energy_conversion, rho, signal + i));
        m.capacity_tmtcd.push(link_capacity(sinr, net.sub_band_hz));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_large_scale, ChannelState};
    use crate::scenario::generate_topology;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn world(seed: u64) -> (Network, ChannelState) {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = generate_topology(&cfg, &mut rng);
        let large = build_large_scale(&topo, &cfg, &mut rng);
        let ch = ChannelState::draw(&large, cfg.num_sub_bands(), &mut rng);
        (Network::new(&cfg, &topo, true), ch)
    }

    /// A channel whose every gain is `1.0` so that expressions reduce to
    /// hand-checkable numbers.
    fn flat_channel(net: &Network, value: f64) -> ChannelState {
        let layout = crate::channel::LinkLayout {
            hues: net.hues,
            gateways: net.clusters,
            cmtcds: net.cmtcds,
            tmtcds: net.tmtcds,
        };
        let n = layout.len() * net.sub_bands;
        ChannelState {
            layout,
            sub_bands: net.sub_bands,
            h: vec![1.0; n],
            g: vec![value; n],
        }
    }

    fn set_gain(ch: &mut ChannelState, link: Link, k: usize, g: f64) {
        let i = ch.layout.index(link) * ch.sub_bands + k;
        ch.g[i] = g;
    }

    fn random_alloc(net: &Network, rng: &mut impl Rng) -> Allocation {
        let n = net.tmtcds;
        Allocation {
            sub_band: (0..n).map(|_| rng.random_range(0..net.sub_bands)).collect(),
            power_w: (0..n)
                .map(|_| net.p_max_w * rng.random_range(1..=10) as f64 / 10.0)
                .collect(),
            ps_ratio: (0..n).map(|_| rng.random_range(1..=5) as f64 / 5.0).collect(),
        }
    }

    #[test]
    fn h2h_interference_free() {
        let (net, ch) = world(1);
        let alloc = Allocation {
            sub_band: vec![2, 3, 2, 3],
            power_w: vec![0.01; 4],
            ps_ratio: vec![1.0; 4],
        };
        let raw = net.p_bs_w * ch.gain(Link::BsHue(0), 0) / net.noise_w;
        assert_eq!(h2h_sinr(&net, &alloc, &ch, 0), raw.min(net.sinr_cap));
    }

    #[test]
    fn h2h_hand_value() {
        let (mut net, _) = world(1);
        net.p_bs_w = 1.0;
        let mut ch = flat_channel(&net, 0.0);
        set_gain(&mut ch, Link::BsHue(0), 0, 1e-9);
        // One interferer contributing 1e-10 W: power 1e-2 W, gain 1e-8.
        set_gain(&mut ch, Link::GwHue(0, 0), 0, 1e-8);
        let alloc = Allocation {
            sub_band: vec![0, 3, 3, 3],
            power_w: vec![1e-2, 0.0, 0.0, 0.0],
            ps_ratio: vec![1.0; 4],
        };
        let noise = 10f64.powf(-114.0 / 10.0) / 1000.0;
        let expect = 1e-9 / (1e-10 + noise);
        let got = h2h_sinr(&net, &alloc, &ch, 0);
        assert!((got - expect).abs() < 1e-9 * expect);
        assert!((got - 10.0).abs() < 1e-3, "{got}");
    }

    #[test]
    fn sinr_cap_applies() {
        let (net, _) = world(1);
        let mut ch = flat_channel(&net, 0.0);
        // 40 dB raw SNR.
        set_gain(&mut ch, Link::BsHue(1), 1, 1e4 * net.noise_w / net.p_bs_w);
        let sinr = h2h_sinr(&net, &Allocation::empty(), &ch, 1);
        assert!((10.0 * sinr.log10() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn cmtcd_cases() {
        let (mut net, _) = world(2);
        let mut ch = flat_channel(&net, 0.0);
        let s = 0;
        let k = net.cmtcd_band(s);
        set_gain(&mut ch, Link::GwCmtcd(0, s), k, 1e-7);
        let none = Allocation {
            sub_band: vec![0, 0, 1, 1],
            power_w: vec![0.01; 4],
            ps_ratio: vec![1.0; 4],
        };
        let rho = net.cmtcd_ps_ratio;
        let expect = rho * net.p_cmtcd_w * 1e-7 / net.noise_w;
        assert!((cmtcd_sinr(&net, &none, &ch, s) - expect.min(net.sinr_cap)).abs() < 1e-9);

        // Full decoding split, one intra-cluster interferer.
        net.cmtcd_ps_ratio = 1.0;
        set_gain(&mut ch, Link::GwCmtcd(0, s), k, 1e-10);
        let one = Allocation {
            sub_band: vec![k, 0, 1, 1],
            power_w: vec![0.02, 0.01, 0.01, 0.01],
            ps_ratio: vec![1.0; 4],
        };
        let expect = net.p_cmtcd_w * 1e-10 / (0.02 * 1e-10 + net.noise_w);
        assert!((cmtcd_sinr(&net, &one, &ch, s) - expect).abs() < 1e-9 * expect);

        // Intra (cluster 0, link 1) and inter (cluster 1, link 2) together.
        set_gain(&mut ch, Link::GwCmtcd(1, s), k, 3e-12);
        let both = Allocation {
            sub_band: vec![0, k, k, 1],
            power_w: vec![0.01, 0.02, 0.03, 0.01],
            ps_ratio: vec![1.0; 4],
        };
        let mut oracle = 0.0;
        for n in 0..4 {
            if both.sub_band[n] == k {
                let m = if n < 2 { 0 } else { 1 };
                let g = if m == 0 { 1e-10 } else { 3e-12 };
                oracle += both.power_w[n] * g;
            }
        }
        assert!((cmtcd_interference(&net, &both, &ch, s) - oracle).abs() < 1e-24);
    }

    #[test]
    fn tmtcd_owner_term_alone() {
        let (net, ch) = world(3);
        // Link 0 alone on CMTCD band 2; everyone else on band 0.
        let alloc = Allocation {
            sub_band: vec![2, 0, 0, 0],
            power_w: vec![0.01; 4],
            ps_ratio: vec![1.0; 4],
        };
        let i = tmtcd_interference(&net, &alloc, &ch, 0, 2);
        assert_eq!(i, net.p_bs_w * ch.gain(Link::BsTmtcd(0), 2));
        // HUE band 0 as printed: critical-link power over own gateway channel.
        let alloc = Allocation {
            sub_band: vec![0, 1, 1, 1],
            ..alloc
        };
        let i = tmtcd_interference(&net, &alloc, &ch, 0, 0);
        assert_eq!(i, net.p_cmtcd_w * ch.gain(Link::GwTmtcd(0, 0), 0));
    }

    #[test]
    fn tmtcd_owner_term_by_owner_transmitter() {
        let (mut net, ch) = world(3);
        net.owner_interference = OwnerInterference::OwnerTransmitter;
        let alloc = Allocation {
            sub_band: vec![3, 0, 1, 1],
            power_w: vec![0.01; 4],
            ps_ratio: vec![1.0; 4],
        };
        // Band 3 belongs to the critical device of cluster 1.
        let i = tmtcd_interference(&net, &alloc, &ch, 0, 3);
        assert_eq!(i, net.p_cmtcd_w * ch.gain(Link::GwTmtcd(1, 0), 3));
        let i = tmtcd_interference(&net, &alloc, &ch, 0, 0);
        let other = 0.01 * ch.gain(Link::GwTmtcd(0, 0), 0);
        let expect = net.p_bs_w * ch.gain(Link::BsTmtcd(0), 0) + other;
        assert!((i - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn tmtcd_hand_value() {
        let (net, _) = world(4);
        let mut ch = flat_channel(&net, 0.0);
        let k = 2;
        set_gain(&mut ch, Link::GwTmtcd(0, 0), k, 1e-6);
        // Owner term 1e-9 W from the BS.
        set_gain(&mut ch, Link::BsTmtcd(0), k, 1e-9 / net.p_bs_w);
        let alloc = Allocation {
            sub_band: vec![k, 0, 1, 1],
            power_w: vec![1e-2, 0.01, 0.01, 0.01],
            ps_ratio: vec![1.0, 1.0, 1.0, 1.0],
        };
        let sinr = tmtcd_sinr(&net, &alloc, &ch, 0);
        assert!((sinr - 10.0).abs() < 1e-4, "{sinr}");
    }

    #[test]
    fn intra_cluster_interference_is_symmetric() {
        let (net, ch) = world(5);
        // Links 0 and 1 share cluster 0 and sub-band 3.
        let alloc = Allocation {
            sub_band: vec![3, 3, 0, 1],
            power_w: vec![0.02, 0.03, 0.01, 0.01],
            ps_ratio: vec![1.0; 4],
        };
        let owner = |n: usize| net.p_bs_w * ch.gain(Link::BsTmtcd(n), 3);
        let i0 = tmtcd_interference(&net, &alloc, &ch, 0, 3) - owner(0);
        let i1 = tmtcd_interference(&net, &alloc, &ch, 1, 3) - owner(1);
        assert!((i0 - 0.03 * ch.gain(Link::GwTmtcd(0, 0), 3)).abs() <= 1e-12 * i0);
        assert!((i1 - 0.02 * ch.gain(Link::GwTmtcd(0, 1), 3)).abs() <= 1e-12 * i1);
    }

    #[test]
    fn harvesting_cases() {
        assert_eq!(harvest(0.7, 1.0, 5e-6), 0.0);
        assert!((harvest(0.7, 0.5, 2e-6) - 7e-7).abs() < 1e-20);
        assert_eq!(harvest(0.7, 0.0, 2e-6), 0.7 * 2e-6);
    }

    #[test]
    fn capacity_cases() {
        let b = 1e6;
        assert_eq!(link_capacity(1.0, b), b);
        assert_eq!(link_capacity(3.0, b), 2.0 * b);
        assert_eq!(link_capacity(0.0, b), 0.0);
    }

    #[test]
    fn all_metrics_match_individual_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..50 {
            let (net, ch) = world(seed);
            let alloc = random_alloc(&net, &mut rng);
            let m = compute_all_metrics(&net, &alloc, &ch);
            for h in 0..net.hues {
                assert_eq!(m.sinr_hue[h], h2h_sinr(&net, &alloc, &ch, h));
            }
            for s in 0..net.cmtcds {
                assert_eq!(m.sinr_cmtcd[s], cmtcd_sinr(&net, &alloc, &ch, s));
                assert_eq!(m.harvested_cmtcd[s], cmtcd_harvested(&net, &alloc, &ch, s));
            }
            for n in 0..net.tmtcds {
                assert_eq!(m.sinr_tmtcd[n], tmtcd_sinr(&net, &alloc, &ch, n));
                assert_eq!(m.harvested_tmtcd[n], tmtcd_harvested(&net, &alloc, &ch, n));
                assert_eq!(
                    m.capacity_tmtcd[n],
                    link_capacity(m.sinr_tmtcd[n], net.sub_band_hz)
                );
            }
        }
    }

    #[test]
    fn empty_tolerable_set_is_interference_free() {
        let (net, ch) = world(8);
        let m = compute_all_metrics(&net, &Allocation::empty(), &ch);
        assert!(m.interference_hue.iter().all(|&i| i == 0.0));
        assert!(m.interference_cmtcd.iter().all(|&i| i == 0.0));
        assert!(m.sinr_tmtcd.is_empty());
    }

    #[test]
    fn metrics_finite_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let (net, mut ch) = world(9);
        let cfg = ScenarioConfig::default();
        let topo = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let large = build_large_scale(&topo, &cfg, &mut rng);
        for _ in 0..10_000 {
            crate::channel::update_small_scale(&mut ch, &large, &mut rng);
            let alloc = random_alloc(&net, &mut rng);
            let m = compute_all_metrics(&net, &alloc, &ch);
            for v in [
                &m.sinr_hue,
                &m.sinr_cmtcd,
                &m.sinr_tmtcd,
                &m.interference_hue,
                &m.interference_cmtcd,
                &m.interference_tmtcd,
                &m.harvested_cmtcd,
                &m.harvested_tmtcd,
                &m.capacity_tmtcd,
            ] {
                assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
            }
            assert!(m.sinr_tmtcd.iter().all(|&s| s <= net.sinr_cap));
        }
    }
}
