//! Seeded synthetic corpora for tests and benchmarks.

use rand_distr::{ChiSquared, Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Anisotropic Gaussian mixture with heavy-tailed members.
///
/// Component `c` has weight `∝ (c + 1)^-weight_skew`, a mean drawn from `N(0, spread²)` per
/// coordinate, and per-coordinate standard deviations taken from the decaying spectrum
/// `(j + 1)^-decay`, randomly permuted per component and jittered by a log-normal factor.
/// With `tail_dof > 0` each point's offset from its mean is scaled by `sqrt(ν / χ²_ν)`, which
/// makes the members multivariate Student-t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub d: usize,
    pub components: usize,
    pub spread: f64,
    pub decay: f64,
    pub jitter: f64,
    pub weight_skew: f64,
    pub tail_dof: f64,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(d: usize, components: usize, seed: u64) -> Self {
        Self { d, components, spread: 1.0, decay: 0.5, jitter: 0.3, weight_skew: 0.5, tail_dof: 4.0, seed }
    }
}

/// A fixed mixture that can be sampled repeatedly.
#[derive(Debug, Clone)]
pub struct Mixture {
    spec: MixtureSpec,
    cumulative: Vec<f64>,
    means: Vec<f32>,
    scales: Vec<f32>,
}

impl Mixture {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        if spec.d == 0 || spec.components == 0 {
            return Err(Error::invalid("mixture needs d >= 1 and at least one component"));
        }
        let mut r = rng::seeded(spec.seed);
        let unit = Normal::new(0.0f64, 1.0).unwrap();
        let (d, c) = (spec.d, spec.components);

        let weights: Vec<f64> = (0..c).map(|i| (i as f64 + 1.0).powf(-spec.weight_skew)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();

        let means = (0..c * d).map(|_| (unit.sample(&mut r) * spec.spread) as f32).collect();
        let spectrum: Vec<f64> = (0..d).map(|j| (j as f64 + 1.0).powf(-spec.decay)).collect();
        let mut scales = Vec::with_capacity(c * d);
        for _ in 0..c {
            let mut order: Vec<usize> = (0..d).collect();
            rng::shuffle(&mut r, &mut order);
            for &j in &order {
                let jitter = (unit.sample(&mut r) * spec.jitter).exp();
                scales.push((spectrum[j] * jitter) as f32);
            }
        }
        Ok(Self { spec, cumulative, means, scales })
    }

    /// Draws `n` points; different `seed`s give independent samples of the same mixture.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let d = self.spec.d;
        let mut r = rng::seeded(rng::derive(self.spec.seed, seed.wrapping_add(1)));
        let unit = Normal::new(0.0f64, 1.0).unwrap();
        let chi = (self.spec.tail_dof > 0.0).then(|| ChiSquared::new(self.spec.tail_dof).unwrap());
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let u = rng::unit_f64(&mut r);
            let c = self.cumulative.partition_point(|&p| p <= u).min(self.spec.components - 1);
            let radial = match &chi {
                Some(chi) => (self.spec.tail_dof / chi.sample(&mut r).max(1e-12)).sqrt(),
                None => 1.0,
            };
            let mean = &self.means[c * d..(c + 1) * d];
            let scale = &self.scales[c * d..(c + 1) * d];
            for j in 0..d {
                data.push(mean[j] + (unit.sample(&mut r) * radial) as f32 * scale[j]);
            }
        }
        Dataset::new(n, d, data)
    }
}
