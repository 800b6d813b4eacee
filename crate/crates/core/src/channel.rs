//! Large-scale (path loss, shadowing) and small-scale (Rayleigh) channels.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::scenario::{Point, ScenarioConfig, Topology};
use crate::units::db_to_linear;

/// Links closer than this are evaluated at this distance.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// `-128 - 37.6 log10(d)` with `d` in km.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {distance_km} km"
        )));
    }
    Ok(-128.0 - 37.6 * distance_km.log10())
}

/// Log-normal shadowing gain with the given dB standard deviation.
pub fn draw_shadowing<R: Rng + ?Sized>(std_db: f64, rng: &mut R) -> f64 {
    let x: f64 = rng.sample(StandardNormal);
    db_to_linear(std_db * x)
}

/// Rayleigh fading power: unit-mean exponential.
pub fn draw_fast_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// A transmitter/receiver pair that appears in some SINR or observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// BS to HUE `h` (serving link).
    BsHue(usize),
    /// BS to tolerable device `n` (interference).
    BsTmtcd(usize),
    /// Gateway `m` to HUE `h` (interference).
    GwHue(usize, usize),
    /// Gateway `m` to critical device `s`.
    GwCmtcd(usize, usize),
    /// Gateway `m` to tolerable device `n`.
    GwTmtcd(usize, usize),
}

/// Flat indexing of every [`Link`] of a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkLayout {
    pub hues: usize,
    pub gateways: usize,
    pub cmtcds: usize,
    pub tmtcds: usize,
}

impl LinkLayout {
    pub fn of(topo: &Topology) -> Self {
        LinkLayout {
            hues: topo.hues.len(),
            gateways: topo.gateways.len(),
            cmtcds: topo.cmtcds.len(),
            tmtcds: topo.tmtcds.len(),
        }
    }

    pub fn len(&self) -> usize {
        let (h, m, s, n) = (self.hues, self.gateways, self.cmtcds, self.tmtcds);
        h + n + m * h + m * s + m * n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, link: Link) -> usize {
        let (h, m, s, n) = (self.hues, self.gateways, self.cmtcds, self.tmtcds);
        match link {
            Link::BsHue(i) => i,
            Link::BsTmtcd(i) => h + i,
            Link::GwHue(g, i) => h + n + g * h + i,
            Link::GwCmtcd(g, i) => h + n + m * h + g * s + i,
            Link::GwTmtcd(g, i) => h + n + m * h + m * s + g * n + i,
        }
    }

    /// Every link in index order.
    pub fn links(&self) -> Vec<Link> {
        let (h, m, s, n) = (self.hues, self.gateways, self.cmtcds, self.tmtcds);
        let mut v = Vec::with_capacity(self.len());
        v.extend((0..h).map(Link::BsHue));
        v.extend((0..n).map(Link::BsTmtcd));
        for g in 0..m {
            v.extend((0..h).map(|i| Link::GwHue(g, i)));
        }
        for g in 0..m {
            v.extend((0..s).map(|i| Link::GwCmtcd(g, i)));
        }
        for g in 0..m {
            v.extend((0..n).map(|i| Link::GwTmtcd(g, i)));
        }
        v
    }

    pub fn endpoints(&self, topo: &Topology, link: Link) -> (Point, Point) {
        match link {
            Link::BsHue(i) => (topo.bs, topo.hues[i]),
            Link::BsTmtcd(i) => (topo.bs, topo.tmtcds[i].position),
            Link::GwHue(g, i) => (topo.gateways[g], topo.hues[i]),
            Link::GwCmtcd(g, i) => (topo.gateways[g], topo.cmtcds[i].position),
            Link::GwTmtcd(g, i) => (topo.gateways[g], topo.tmtcds[i].position),
        }
    }
}

/// Frequency-independent path loss `chi` and shadowing `beta` per link.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub layout: LinkLayout,
    pub chi: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LargeScale {
    pub fn chi(&self, link: Link) -> f64 {
        self.chi[self.layout.index(link)]
    }

    pub fn beta(&self, link: Link) -> f64 {
        self.beta[self.layout.index(link)]
    }

    /// Mean channel power `chi * beta`.
    pub fn mean_gain(&self, link: Link) -> f64 {
        let i = self.layout.index(link);
        self.chi[i] * self.beta[i]
    }
}

/// Path loss from pairwise distances, one shadowing draw per link.
pub fn build_large_scale<R: Rng + ?Sized>(
    topo: &Topology,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> LargeScale {
    let layout = LinkLayout::of(topo);
    let links = layout.links();
    let mut chi = Vec::with_capacity(links.len());
    let mut beta = Vec::with_capacity(links.len());
    for link in links {
        let (a, b) = layout.endpoints(topo, link);
        let d_km = a.distance(b).max(MIN_DISTANCE_M) / 1000.0;
        chi.push(db_to_linear(path_loss_db(d_km).expect("distance clamped positive")));
        beta.push(draw_shadowing(cfg.shadowing_std_db, rng));
    }
    LargeScale { layout, chi, beta }
}

/// Instantaneous gains `g = chi * beta * h` for every link and sub-band.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub layout: LinkLayout,
    pub sub_bands: usize,
    /// Small-scale power, `[link * sub_bands + k]`.
    pub h: Vec<f64>,
    /// Composite gain, same indexing.
    pub g: Vec<f64>,
}

impl ChannelState {
    /// Draws a fresh small-scale realization on top of `large`.
    pub fn draw<R: Rng + ?Sized>(large: &LargeScale, sub_bands: usize, rng: &mut R) -> Self {
        let n = large.layout.len() * sub_bands;
        let mut state = ChannelState {
            layout: large.layout,
            sub_bands,
            h: vec![0.0; n],
            g: vec![0.0; n],
        };
        state.redraw(large, rng);
        state
    }

    #[inline]
    pub fn gain(&self, link: Link, k: usize) -> f64 {
        self.g[self.layout.index(link) * self.sub_bands + k]
    }

    #[inline]
    pub fn fading(&self, link: Link, k: usize) -> f64 {
        self.h[self.layout.index(link) * self.sub_bands + k]
    }

    fn redraw<R: Rng + ?Sized>(&mut self, large: &LargeScale, rng: &mut R) {
        assert_eq!(self.layout, large.layout, "channel and large-scale link sets differ");
        for (i, (h, g)) in self.h.iter_mut().zip(self.g.iter_mut()).enumerate() {
            let link = i / self.sub_bands;
            *h = draw_fast_fading(rng);
            *g = large.chi[link] * large.beta[link] * *h;
        }
    }
}

/// Redraws every small-scale term independently and recomputes the gains.
pub fn update_small_scale<R: Rng + ?Sized>(
    state: &mut ChannelState,
    large: &LargeScale,
    rng: &mut R,
) {
    state.redraw(large, rng);
}
