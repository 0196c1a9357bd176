//! Kernel-density score of the predicted belief, used by the study flag
//! that adds the transition-mixture term to the observation score.

use crate::error::Result;
use crate::numkit::{median_bandwidth, ParticleSet};
use crate::scalar::Real;

/// Gaussian KDE over a fixed particle cloud with an isotropic bandwidth
/// from the median heuristic.
pub struct KdeScore<T> {
    points: Vec<Vec<T>>,
    inv_var: T,
}

impl<T: Real> KdeScore<T> {
    pub fn new(cloud: &ParticleSet<T>, h0: T) -> Result<Self> {
        let band = if cloud.len() >= 2 {
            median_bandwidth(cloud, h0)?.max(T::of(1e-3))
        } else {
            h0.max(T::of(1e-3))
        };
        let points = (0..cloud.len())
            .map(|i| cloud.particle(i).to_vec())
            .collect();
        Ok(KdeScore {
            points,
            inv_var: T::one() / (band * band),
        })
    }

    /// Gradient of log (1/n sum_j exp(-||x - x_j||^2 / (2 h^2))):
    /// sum_j gamma_j (x_j - x) / h^2 with softmax responsibilities gamma.
    pub fn score(&self, x: &[T]) -> Vec<T> {
        let d = x.len();
        let logits: Vec<T> = self
            .points
            .iter()
            .map(|p| {
                let sq: T = p
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .sum();
                -sq * self.inv_var / T::of(2.0)
            })
            .collect();
        let m = logits.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
        let mut total = T::zero();
        let gammas: Vec<T> = logits
            .iter()
            .map(|l| {
                let g = (*l - m).exp();
                total += g;
                g
            })
            .collect();
        let mut out = vec![T::zero(); d];
        for (p, g) in self.points.iter().zip(gammas) {
            let w = g / total * self.inv_var;
            for (o, (a, b)) in out.iter_mut().zip(p.iter().zip(x)) {
                *o += w * (*a - *b);
            }
        }
        out
    }
}
