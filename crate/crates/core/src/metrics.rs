//! QoS indicators, the analytical critical-link outage, energy efficiency
//! and the common reward.

use crate::channel::{LargeScale, Link};
use crate::error::{Error, Result};
use crate::phy::{Allocation, LinkMetrics, Network};

/// Satisfaction flag together with its reward penalty (0 or 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub satisfied: bool,
    pub penalty: f64,
}

impl Indicator {
    fn from(satisfied: bool) -> Self {
        Indicator {
            satisfied,
            penalty: if satisfied { 0.0 } else { 1.0 },
        }
    }
}

/// H2H QoS: SINR at or above the threshold (inclusive).
pub fn h2h_indicator(sinr: f64, net: &Network) -> Indicator {
    Indicator::from(sinr >= net.sinr_min_h2h)
}

/// Critical QoS: outage at or below the target (inclusive).
pub fn cmtcd_indicator(outage: f64, target: f64) -> Indicator {
    Indicator::from(outage <= target)
}

/// `Pr{z1 <= z2 + ... + zn + c}` for independent exponentials with rates
/// `lambda1, rates...`.
pub fn lemma1_probability(lambda1: f64, rates: &[f64], c: f64) -> f64 {
    let log_prod: f64 = rates.iter().map(|&l| (lambda1 / l).ln_1p()).sum();
    -(-lambda1 * c - log_prod).exp_m1()
}

/// Mean received power `p chi beta` of every tolerable link sharing the
/// band of critical device `s`.
pub fn mean_interference_terms(
    net: &Network,
    alloc: &Allocation,
    large: &LargeScale,
    s: usize,
) -> Vec<f64> {
    let k = net.cmtcd_band(s);
    alloc
        .on_band(k)
        .map(|n| alloc.power_w[n] * large.mean_gain(Link::GwCmtcd(net.tmtcd_cluster[n], s)))
        .collect()
}

fn mean_signal(net: &Network, large: &LargeScale, s: usize) -> f64 {
    net.p_cmtcd_w * large.mean_gain(Link::GwCmtcd(net.cmtcd_cluster[s], s))
}

/// Closed-form outage of critical device `s` over Rayleigh fading, one
/// product term per co-band tolerable transmitter.
pub fn outage_exact(net: &Network, alloc: &Allocation, large: &LargeScale, s: usize) -> f64 {
    let signal = mean_signal(net, large, s);
    let gamma = net.sinr_min_cmtcd;
    let a = net.noise_w * gamma / (net.cmtcd_ps_ratio * signal);
    let log_prod: f64 = mean_interference_terms(net, alloc, large, s)
        .iter()
        .map(|&i| (i * gamma / signal).ln_1p())
        .sum();
    -(-a - log_prod).exp_m1()
}

/// Upper bound on the outage using the aggregate mean interference.
pub fn outage_bound(net: &Network, alloc: &Allocation, large: &LargeScale, s: usize) -> f64 {
    let signal = mean_signal(net, large, s);
    let aggregate: f64 = mean_interference_terms(net, alloc, large, s).iter().sum();
    outage_bound_from(net, signal, aggregate)
}

/// The bound as a function of the mean signal power and aggregate mean
/// interference.
pub fn outage_bound_from(net: &Network, mean_signal_w: f64, aggregate_w: f64) -> f64 {
    let gamma = net.sinr_min_cmtcd;
    -(-gamma * (aggregate_w + net.noise_w) / (net.cmtcd_ps_ratio * mean_signal_w)).exp_m1()
}

/// Tolerable-link penalty: remaining fraction of the time budget while the
/// payload is undelivered, zero afterwards.
pub fn tolerable_reward(payload_remaining: f64, t: usize, time_budget: usize) -> f64 {
    if payload_remaining > 0.0 {
        (time_budget - t) as f64 / time_budget as f64
    } else {
        0.0
    }
}

/// Per-slot QoS state of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct QosReport {
    pub qos_h: Vec<bool>,
    pub qos_s: Vec<bool>,
    /// Outage probability used for `qos_s`.
    pub outage: Vec<f64>,
    pub payload_remaining: Vec<f64>,
    pub slots_remaining: usize,
    pub u_h: Vec<f64>,
    pub u_s: Vec<f64>,
    pub u_n: Vec<f64>,
}

/// Evaluates every QoS constraint for slot `t`; critical devices are judged
/// by the outage bound.
pub fn evaluate_qos(
    net: &Network,
    alloc: &Allocation,
    large: &LargeScale,
    metrics: &LinkMetrics,
    payload_remaining: &[f64],
    outage_target: f64,
    t: usize,
    time_budget: usize,
) -> QosReport {
    let hue: Vec<Indicator> = metrics.sinr_hue.iter().map(|&s| h2h_indicator(s, net)).collect();
    let outage: Vec<f64> = (0..net.cmtcds).map(|s| outage_bound(net, alloc, large, s)).collect();
    let crit: Vec<Indicator> = outage.iter().map(|&p| cmtcd_indicator(p, outage_target)).collect();
    QosReport {
        qos_h: hue.iter().map(|i| i.satisfied).collect(),
        qos_s: crit.iter().map(|i| i.satisfied).collect(),
        u_h: hue.iter().map(|i| i.penalty).collect(),
        u_s: crit.iter().map(|i| i.penalty).collect(),
        u_n: payload_remaining
            .iter()
            .map(|&v| tolerable_reward(v, t, time_budget))
            .collect(),
        outage,
        payload_remaining: payload_remaining.to_vec(),
        slots_remaining: time_budget - t,
    }
}

/// Numerator, denominator and ratio of the energy-efficiency objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeBreakdown {
    /// Summed spectral efficiency of all M2M links, bit/s/Hz.
    pub r_total: f64,
    /// Net power consumption, W.
    pub ec_total: f64,
    /// `r_total / ec_total`.
    pub eta: f64,
}

pub fn ee_objective(metrics: &LinkMetrics, alloc: &Allocation, net: &Network) -> Result<EeBreakdown> {
    let r_total: f64 = metrics
        .sinr_cmtcd
        .iter()
        .chain(&metrics.sinr_tmtcd)
        .map(|s| (1.0 + s).log2())
        .sum();
    let transmit: f64 = alloc.power_w.iter().sum::<f64>() + net.p_cmtcd_w * net.cmtcds as f64;
    let harvested: f64 = metrics
        .harvested_cmtcd
        .iter()
        .chain(&metrics.harvested_tmtcd)
        .sum();
    let ec_total = transmit + net.p_circuit_w - harvested;
    if !(ec_total > 0.0) {
        return Err(Error::NonPositiveConsumption(ec_total));
    }
    Ok(EeBreakdown {
        r_total,
        ec_total,
        eta: r_total / ec_total,
    })
}

/// Common reward `mu * eta - sum U_n - sum U_s - sum U_h`.
pub fn assemble_reward(ee: &EeBreakdown, report: &QosReport, reward_weight: f64) -> f64 {
    let penalties: f64 = report.u_n.iter().sum::<f64>()
        + report.u_s.iter().sum::<f64>()
        + report.u_h.iter().sum::<f64>();
    reward_weight * ee.eta - penalties
}
