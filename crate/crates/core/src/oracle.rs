//! Monte-Carlo validation of the analytical outage expressions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::channel::{build_large_scale, Link};
use crate::metrics::{lemma1_probability, outage_bound, outage_exact};
use crate::phy::{Allocation, Network};
use crate::rng::{stream, Stream};
use crate::scenario::{generate_topology, ScenarioConfig};
use crate::units::db_to_linear;

/// Sample proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Signed distance from a hypothesized probability `p`, as the normal
    /// quantile of the exact binomial tail of the observed hit count: `+3`
    /// means as many or more hits would occur with probability
    /// `1 - Phi(3)` if `p` were the truth. Normal approximations fail at the
    /// extremes, where a single hit or miss can look like many standard
    /// errors.
    pub fn z_against(&self, p: f64) -> f64 {
        let n = self.samples as u64;
        let k = (self.estimate * self.samples as f64).round() as u64;
        if p <= 0.0 {
            return if k > 0 { f64::INFINITY } else { 0.0 };
        }
        if p >= 1.0 {
            return if k < n { f64::NEG_INFINITY } else { 0.0 };
        }
        let binom = Binomial::new(p, n).expect("probability in (0, 1)");
        let normal = Normal::standard();
        if self.estimate >= p {
            let upper = if k == 0 { 1.0 } else { binom.sf(k - 1) };
            (-normal.inverse_cdf(upper.min(0.5))).max(0.0)
        } else {
            normal.inverse_cdf(binom.cdf(k).min(0.5)).min(0.0)
        }
    }

    fn from_hits(hits: usize, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        McEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Frequency of `z1 <= z2 + ... + zn + c` with `z_i` exponential of rate
/// `lambda_i`.
pub fn lemma1_monte_carlo<R: Rng + ?Sized>(
    lambda1: f64,
    rates: &[f64],
    c: f64,
    samples: usize,
    rng: &mut R,
) -> McEstimate {
    let hits = (0..samples)
        .filter(|_| {
            let z1 = exp1(rng) / lambda1;
            let rest: f64 = rates.iter().map(|&l| exp1(rng) / l).sum();
            z1 <= rest + c
        })
        .count();
    McEstimate::from_hits(hits, samples)
}

/// Outage frequency of a power-splitting receiver over Rayleigh fading:
/// `rho S h0 / (rho sum I_j h_j + noise) < gamma`, with `S` and `I_j` mean
/// received powers and unit-mean exponential `h`.
pub fn outage_monte_carlo<R: Rng + ?Sized>(
    mean_signal: f64,
    mean_interference: &[f64],
    noise: f64,
    gamma: f64,
    rho: f64,
    samples: usize,
    rng: &mut R,
) -> McEstimate {
    let hits = (0..samples)
        .filter(|_| {
            let s = rho * mean_signal * exp1(rng);
            let i: f64 = mean_interference.iter().map(|&m| m * exp1(rng)).sum();
            s / (rho * i + noise) < gamma
        })
        .count();
    McEstimate::from_hits(hits, samples)
}

/// One-sided threshold that keeps the chance of any false alarm among
/// `tests` comparisons at the single-comparison 3 se level (Bonferroni).
pub fn familywise_z(tests: usize) -> f64 {
    let alpha = Normal::standard().sf(3.0) / tests.max(1) as f64;
    Normal::standard().inverse_cdf(1.0 - alpha)
}

/// One closed-form versus simulation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Row {
    pub lambda1: f64,
    pub rates: Vec<f64>,
    pub c: f64,
    pub closed_form: f64,
    pub mc: McEstimate,
}

impl Lemma1Row {
    /// Distance between closed form and simulation in standard errors.
    pub fn z_score(&self) -> f64 {
        self.mc.z_against(self.closed_form).abs()
    }
}

/// Random rate/offset cases with their simulated probabilities.
pub fn lemma1_suite(cases: usize, samples: usize, seed: u64) -> Vec<Lemma1Row> {
    let mut rng = stream(seed, Stream::Test);
    (0..cases)
        .map(|_| {
            let lambda1 = 10f64.powf(rng.random_range(-1.0..1.0));
            let n = rng.random_range(0..=4);
            let rates: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
            let c = rng.random_range(0.0..2.0);
            let mc = lemma1_monte_carlo(lambda1, &rates, c, samples, &mut rng);
            Lemma1Row {
                closed_form: lemma1_probability(lambda1, &rates, c),
                lambda1,
                rates,
                c,
                mc,
            }
        })
        .collect()
}

/// Bound, exact value and simulation for one critical device.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageRow {
    pub bound: f64,
    pub exact: f64,
    pub mc: McEstimate,
    pub interferers: usize,
}

impl OutageRow {
    pub fn bound_holds(&self) -> bool {
        self.bound >= self.exact
    }

    /// Simulation minus exact value, in standard errors.
    pub fn z_score(&self) -> f64 {
        self.mc.z_against(self.exact)
    }

    /// Exact value not below the simulation by more than three standard
    /// errors.
    pub fn exact_consistent(&self) -> bool {
        self.z_score() <= 3.0
    }
}

/// Random critical-device configurations: topology and shadowing from a
/// fresh seed, power-splitting ratio in [0.2, 1], and a random allocation
/// of the tolerable links with at least one link on the device's band
/// where possible.
pub fn outage_suite(configs: usize, samples: usize, seed: u64) -> Vec<OutageRow> {
    let mut rng = stream(seed, Stream::Test);
    (0..configs)
        .map(|_| random_outage_row(&mut rng, samples))
        .collect()
}

fn random_outage_row(rng: &mut ChaCha8Rng, samples: usize) -> OutageRow {
    let cfg = ScenarioConfig {
        tmtcd_per_cluster: rng.random_range(1..=4),
        cmtcd_ps_ratio: rng.random_range(0.2..=1.0),
        p_max_dbm: rng.random_range(0.0..25.0),
        ..Default::default()
    };
    let topo = generate_topology(&cfg, rng);
    let large = build_large_scale(&topo, &cfg, rng);
    let net = Network::new(&cfg, &topo, true);
    let s = rng.random_range(0..net.cmtcds);
    let band = net.cmtcd_band(s);
    let n = net.tmtcds;
    let mut sub_band: Vec<usize> = (0..n).map(|_| rng.random_range(0..net.sub_bands)).collect();
    sub_band[rng.random_range(0..n)] = band;
    let alloc = Allocation {
        sub_band,
        power_w: (0..n).map(|_| net.p_max_w * rng.random_range(0.1..=1.0)).collect(),
        ps_ratio: vec![1.0; n],
    };

    let signal = net.p_cmtcd_w * large.mean_gain(Link::GwCmtcd(net.cmtcd_cluster[s], s));
    let interference: Vec<f64> = alloc
        .on_band(band)
        .map(|j| alloc.power_w[j] * large.mean_gain(Link::GwCmtcd(net.tmtcd_cluster[j], s)))
        .collect();
    let mc = outage_monte_carlo(
        signal,
        &interference,
        net.noise_w,
        net.sinr_min_cmtcd,
        net.cmtcd_ps_ratio,
        samples,
        rng,
    );
    OutageRow {
        bound: outage_bound(&net, &alloc, &large, s),
        exact: outage_exact(&net, &alloc, &large, s),
        mc,
        interferers: interference.len(),
    }
}

/// Relative gap `(bound - exact) / exact` with a single interferer whose
/// mean received power is `fraction` of the noise power; signal set so the
/// exact outage is near `target`.
pub fn single_interferer_gap(fraction: f64, target: f64, rho: f64) -> (f64, f64) {
    let noise = 1.0;
    let gamma = db_to_linear(5.0);
    let interference = fraction * noise;
    // Noise-only outage 1 - exp(-gamma noise / (rho S)) = target.
    let signal = gamma * noise / (rho * -(1.0 - target).ln());
    let exact = -(-gamma * noise / (rho * signal) - (interference * gamma / signal).ln_1p()).exp_m1();
    let bound = -(-gamma * (interference + noise) / (rho * signal)).exp_m1();
    (exact, bound)
}
