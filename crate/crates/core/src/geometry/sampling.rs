//! Sample domains and the deterministic point sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::ScalarExpr;

/// Points closer than this to an excluded locus are rejected.
pub const EXCLUSION_DISTANCE: f64 = 1e-3;

/// A hypersurface that samples must avoid.
#[derive(Clone, Debug, PartialEq)]
pub enum ExcludedLocus {
    /// `x_coord = offset + k * step` for integer `k`.
    Periodic {
        coord: usize,
        step: f64,
        offset: f64,
    },
    /// Zero set of an expression; distance is the first-order estimate `|f| / |∇f|`.
    ZeroSet(ScalarExpr),
}

impl ExcludedLocus {
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            ExcludedLocus::Periodic {
                coord,
                step,
                offset,
            } => {
                let t = (p[*coord] - offset) / step;
                (t - t.round()).abs() * step.abs()
            }
            ExcludedLocus::ZeroSet(e) => match e.eval_jet2(p) {
                Ok(j) => {
                    let g = j.gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if g == 0.0 {
                        if j.value == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        j.value.abs() / g
                    }
                }
                Err(_) => 0.0,
            },
        }
    }
}

/// Coordinate box with optional excluded hypersurfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDomain {
    pub bounds: Vec<(f64, f64)>,
    pub excluded: Vec<ExcludedLocus>,
}

impl SampleDomain {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        SampleDomain {
            bounds: vec![(lo, hi); dim],
            excluded: Vec::new(),
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        SampleDomain::cube(dim, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn with_exclusion(mut self, locus: ExcludedLocus) -> Self {
        self.excluded.push(locus);
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.bounds.len()
            && p.iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    pub fn near_excluded(&self, p: &[f64]) -> bool {
        self.excluded
            .iter()
            .any(|l| l.distance(p) < EXCLUSION_DISTANCE)
    }

    pub fn is_valid_box(&self) -> bool {
        self.bounds
            .iter()
            .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi)
    }

    /// Draws up to `count` points from the low-discrepancy sequence, skipping
    /// points near excluded loci and points rejected by `accept`. Gives up
    /// after `100 * count` candidates.
    pub fn sample(
        &self,
        count: usize,
        seed: u64,
        mut accept: impl FnMut(&[f64]) -> bool,
    ) -> SampleOutcome {
        let mut seq = RdSequence::new(self.bounds.len(), seed);
        let mut points = Vec::with_capacity(count);
        let mut rejected = 0;
        let budget = count.saturating_mul(100).max(100);
        for _ in 0..budget {
            if points.len() == count {
                break;
            }
            let u = seq.next_point();
            let p: Vec<f64> = u
                .iter()
                .zip(&self.bounds)
                .map(|(t, (lo, hi))| lo + t * (hi - lo))
                .collect();
            if self.near_excluded(&p) || !accept(&p) {
                rejected += 1;
                continue;
            }
            points.push(p);
        }
        SampleOutcome { points, rejected }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub points: Vec<Vec<f64>>,
    pub rejected: usize,
}

/// Additive recurrence `u_k = frac(shift + k α)` with `α_j = φ_d^{-j}`,
/// `φ_d` the positive root of `x^{d+1} = x + 1`. The shift is drawn from a
/// ChaCha stream seeded with the scene seed.
#[derive(Clone, Debug)]
pub struct RdSequence {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl RdSequence {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|j| phi.powi(-(j as i32)).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = (0..dim).map(|_| rng.random::<f64>()).collect();
        RdSequence { alpha, state }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s = (*s + a).fract();
        }
        self.state.clone()
    }
}
