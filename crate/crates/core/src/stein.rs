//! Standard SVGD velocity field and step, with high-dimension repulsion
//! scaling and optional Gaussian noise injection.

use crate::error::{Error, Result};
use crate::numkit::{median_bandwidth, rbf_kernel_grad, KernelGradients, Matrix, ParticleSet};
use crate::rng::Rng;
use crate::scalar::Real;

/// Configuration of the plain SVGD update.
#[derive(Debug, Clone)]
pub struct SvgdConfig<T> {
    /// Step size epsilon.
    pub step_size: T,
    /// Base bandwidth h0 of the adaptive median heuristic.
    pub bandwidth_base: T,
    /// Scale the repulsive term by (1 + 0.1 d).
    pub repulsion_scale_enabled: bool,
    /// Inject Gaussian noise with variance 0.01 (1 + 0.1 d) after the step.
    pub noise_enabled: bool,
}

impl<T: Real> Default for SvgdConfig<T> {
    fn default() -> Self {
        SvgdConfig {
            step_size: T::of(0.01),
            bandwidth_base: T::of(0.1),
            repulsion_scale_enabled: true,
            noise_enabled: false,
        }
    }
}

/// Per-component variance of the injected noise: 0.01 (1 + 0.1 d).
pub fn noise_variance<T: Real>(dim: usize) -> T {
    T::of(0.01) * (T::one() + T::of(0.1) * T::of(dim as f64))
}

/// Repulsion scale factor (1 + 0.1 d).
pub fn repulsion_scale<T: Real>(dim: usize) -> T {
    T::one() + T::of(0.1) * T::of(dim as f64)
}

/// Evaluate the score at every particle, checking finiteness and shape.
pub fn evaluate_scores<T: Real>(
    x: &ParticleSet<T>,
    score_fn: impl Fn(&[T]) -> Vec<T>,
) -> Result<Vec<Vec<T>>> {
    let n = x.len();
    let d = x.dim();
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let s = score_fn(x.particle(i));
        if s.len() != d {
            return Err(Error::Dimension {
                context: "svgd_direction score",
                expected: d,
                got: s.len(),
            });
        }
        if let Some(j) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                phase: "svgd score",
                detail: format!("particle {i}, dimension {j}"),
            });
        }
        scores.push(s);
    }
    Ok(scores)
}

/// Assemble the velocity field from precomputed scores and kernel parts:
/// row i = (1/n) sum_j k(x_j, x_i) score(x_j) + rho (1/n) sum_j grad_j k.
pub fn assemble_direction<T: Real>(
    scores: &[Vec<T>],
    kernel: &Matrix<T>,
    grads: &KernelGradients<T>,
    rho: T,
) -> Matrix<T> {
    let n = scores.len();
    let d = scores[0].len();
    let inv_n = T::one() / T::of(n as f64);
    let mut out = Matrix::zeros(n, d);
    let mut attract = vec![T::zero(); d];
    let mut repulse = vec![T::zero(); d];
    for i in 0..n {
        attract.iter_mut().for_each(|v| *v = T::zero());
        repulse.iter_mut().for_each(|v| *v = T::zero());
        for (j, s) in scores.iter().enumerate() {
            let k = kernel[(j, i)];
            let g = grads.get(i, j);
            for dim in 0..d {
                attract[dim] += k * s[dim];
                repulse[dim] += g[dim];
            }
        }
        let row = out.row_mut(i);
        // The repulsion scale multiplies only the repulsive summand, applied
        // after averaging so a zero score field scales exactly by rho.
        for dim in 0..d {
            row[dim] = attract[dim] * inv_n + rho * (repulse[dim] * inv_n);
        }
    }
    out
}

/// SVGD velocity field: row i holds
/// (1/n) sum_j [ k(x_j, x_i) score(x_j) + rho_d grad_{x_j} k(x_j, x_i) ].
///
/// The kernel bandwidth comes from the adaptive median heuristic; with a
/// single particle the repulsive term vanishes and the row equals the score.
pub fn svgd_direction<T: Real>(
    x: &ParticleSet<T>,
    score_fn: impl Fn(&[T]) -> Vec<T>,
    cfg: &SvgdConfig<T>,
) -> Result<Matrix<T>> {
    let mut scores = evaluate_scores(x, score_fn)?;
    if x.len() == 1 {
        return Ok(Matrix::from_rows(vec![scores.pop().expect("one score")]));
    }
    let h = median_bandwidth(x, cfg.bandwidth_base)?;
    let (kernel, grads) = rbf_kernel_grad(x, h)?;
    let rho = if cfg.repulsion_scale_enabled {
        repulsion_scale(x.dim())
    } else {
        T::one()
    };
    Ok(assemble_direction(&scores, &kernel, &grads, rho))
}

/// One SVGD step: x' = x + eps * direction (+ noise when enabled).
/// The timestep is unchanged; this is an inner iteration of a belief update.
pub fn svgd_step<T: Real>(
    x: &ParticleSet<T>,
    score_fn: impl Fn(&[T]) -> Vec<T>,
    cfg: &SvgdConfig<T>,
    rng: &mut Rng,
) -> Result<ParticleSet<T>> {
    let dir = svgd_direction(x, score_fn, cfg)?;
    let mut positions = x.positions().clone();
    let n = x.len();
    let d = x.dim();
    for i in 0..n {
        let row = positions.row_mut(i);
        let v = dir.row(i);
        for dim in 0..d {
            row[dim] += cfg.step_size * v[dim];
        }
    }
    if cfg.noise_enabled {
        let std = noise_variance::<T>(d).sqrt();
        for i in 0..n {
            let row = positions.row_mut(i);
            for dim in 0..d {
                row[dim] += std * rng.normal::<T>();
            }
        }
    }
    let mut out = ParticleSet::new(positions)?;
    out.set_timestep(x.timestep());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::correlation_matrix;
    use crate::targets::{benchmark_catalog, GmmSpec};

    fn gaussian_1d() -> GmmSpec<f64> {
        GmmSpec::new(vec![(
            1.0,
            vec![0.0],
            Matrix::from_rows(vec![vec![1.0]]),
        )])
        .unwrap()
    }

    #[test]
    fn single_particle_direction_is_the_score() {
        let x = ParticleSet::from_rows(vec![vec![1.5, -0.5]]).unwrap();
        let cfg = SvgdConfig::default();
        let dir = svgd_direction(&x, |p| vec![-p[0], -p[1]], &cfg).unwrap();
        assert_eq!(dir.row(0), &[-1.5, 0.5]);
    }

    #[test]
    fn symmetric_pair_gets_opposite_directions() {
        let g = gaussian_1d();
        let x = ParticleSet::from_rows(vec![vec![-1.0], vec![1.0]]).unwrap();
        let cfg = SvgdConfig::default();
        let dir = svgd_direction(&x, |p| g.score_at(p).unwrap(), &cfg).unwrap();
        assert!((dir[(0, 0)] + dir[(1, 0)]).abs() < 1e-12);
        assert!(dir[(0, 0)].abs() > 0.0);
    }

    #[test]
    fn converges_to_standard_normal_moments() {
        let g = gaussian_1d();
        let mut rng = Rng::from_seed(404);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.uniform_range(-6.0, 6.0)]).collect();
        let mut x = ParticleSet::from_rows(rows).unwrap();
        // Wide base bandwidth so the 200-particle cloud couples globally.
        let cfg = SvgdConfig {
            step_size: 0.05,
            bandwidth_base: 2.0,
            ..SvgdConfig::default()
        };
        for _ in 0..500 {
            x = svgd_step(&x, |p| g.score_at(p).unwrap(), &cfg, &mut rng).unwrap();
        }
        let mean = x.mean()[0];
        let var: f64 = (0..x.len())
            .map(|i| (x.particle(i)[0] - mean).powi(2))
            .sum::<f64>()
            / (x.len() - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn zero_step_no_noise_is_identity() {
        let x = ParticleSet::from_rows(vec![vec![1.0, 2.0], vec![-0.5, 0.25]]).unwrap();
        let cfg = SvgdConfig {
            step_size: 0.0,
            noise_enabled: false,
            ..SvgdConfig::default()
        };
        let mut rng = Rng::from_seed(1);
        let y = svgd_step(&x, |p| vec![p[0], p[1]], &cfg, &mut rng).unwrap();
        assert_eq!(x.positions().data(), y.positions().data());
    }

    #[test]
    fn noise_variance_matches_dimension_scaling() {
        // d = 10: variance 0.01 * 2 = 0.02, validated over 1e5 draws.
        let d = 10;
        let x = ParticleSet::from_rows(vec![vec![0.0; d]; 2]).unwrap();
        let cfg = SvgdConfig {
            step_size: 0.0,
            noise_enabled: true,
            ..SvgdConfig::default()
        };
        let mut rng = Rng::from_seed(5150);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut count = 0usize;
        for _ in 0..5_000 {
            let y = svgd_step(&x, |_| vec![0.0; d], &cfg, &mut rng).unwrap();
            for i in 0..y.len() {
                for v in y.particle(i) {
                    sum += v;
                    sumsq += v * v;
                    count += 1;
                }
            }
        }
        assert!(count >= 100_000);
        let mean = sum / count as f64;
        let var = sumsq / count as f64 - mean * mean;
        assert!((var - 0.02).abs() / 0.02 < 0.05, "noise variance {var}");
    }

    #[test]
    fn same_seed_same_output() {
        let x = ParticleSet::from_rows(vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let cfg = SvgdConfig {
            noise_enabled: true,
            ..SvgdConfig::default()
        };
        let mut r1 = Rng::from_seed(9);
        let mut r2 = Rng::from_seed(9);
        let y1 = svgd_step(&x, |p| vec![-p[0], -p[1]], &cfg, &mut r1).unwrap();
        let y2 = svgd_step(&x, |p| vec![-p[0], -p[1]], &cfg, &mut r2).unwrap();
        assert_eq!(y1.positions().data(), y2.positions().data());
    }

    #[test]
    fn non_finite_score_reports_particle_index() {
        let x = ParticleSet::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let cfg = SvgdConfig::default();
        let err = svgd_direction(
            &x,
            |p| vec![if p[0] > 0.5 { f64::NAN } else { 0.0 }],
            &cfg,
        )
        .unwrap_err();
        match err {
            Error::NonFinite { detail, .. } => assert!(detail.contains("particle 1")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn translation_equivariance() {
        // Shifting particles and target together leaves directions unchanged.
        let g = benchmark_catalog::<f64>("gmm2d").unwrap();
        let mut rng = Rng::from_seed(77);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| rng.normal_vec(2)).collect();
        let shift = [5.0, -3.0];
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r[0] + shift[0], r[1] + shift[1]])
            .collect();
        let x = ParticleSet::from_rows(rows).unwrap();
        let xs = ParticleSet::from_rows(shifted).unwrap();
        let cfg = SvgdConfig::default();
        let d1 = svgd_direction(&x, |p| g.score_at(p).unwrap(), &cfg).unwrap();
        let d2 = svgd_direction(
            &xs,
            |p| g.score_at(&[p[0] - shift[0], p[1] - shift[1]]).unwrap(),
            &cfg,
        )
        .unwrap();
        for i in 0..x.len() {
            for dim in 0..2 {
                assert!(
                    (d1[(i, dim)] - d2[(i, dim)]).abs() < 1e-10,
                    "row {i} dim {dim}"
                );
            }
        }
    }

    #[test]
    fn repulsion_scaling_is_exact_with_zero_score() {
        let mut rng = Rng::from_seed(15);
        let d = 7;
        let rows: Vec<Vec<f64>> = (0..12).map(|_| rng.normal_vec(d)).collect();
        let x = ParticleSet::from_rows(rows).unwrap();
        let on = SvgdConfig {
            repulsion_scale_enabled: true,
            ..SvgdConfig::default()
        };
        let off = SvgdConfig {
            repulsion_scale_enabled: false,
            ..SvgdConfig::default()
        };
        let zero = |_: &[f64]| vec![0.0; d];
        let d_on = svgd_direction(&x, zero, &on).unwrap();
        let d_off = svgd_direction(&x, zero, &off).unwrap();
        let rho = 1.0 + 0.1 * d as f64;
        for i in 0..x.len() {
            for dim in 0..d {
                assert_eq!(d_on[(i, dim)], rho * d_off[(i, dim)]);
            }
        }
    }

    #[test]
    fn mean_log_density_non_decreasing_on_log_concave_target() {
        // Strictly log-concave 2D Gaussian, 50 particles, small step,
        // checked over 20 seeds.
        let g = GmmSpec::new(vec![(
            1.0,
            vec![0.0, 0.0],
            Matrix::from_rows(vec![vec![1.0, 0.3], vec![0.3, 1.0]]),
        )])
        .unwrap();
        let cfg = SvgdConfig {
            step_size: 1e-3,
            noise_enabled: false,
            ..SvgdConfig::default()
        };
        for seed in 0..20 {
            let mut rng = Rng::from_seed(seed);
            let rows: Vec<Vec<f64>> = (0..50)
                .map(|_| vec![rng.uniform_range(-4.0, 4.0), rng.uniform_range(-4.0, 4.0)])
                .collect();
            let mut x = ParticleSet::from_rows(rows).unwrap();
            let mean_logp = |x: &ParticleSet<f64>| -> f64 {
                (0..x.len())
                    .map(|i| g.log_density_at(x.particle(i)).unwrap())
                    .sum::<f64>()
                    / x.len() as f64
            };
            let mut prev = mean_logp(&x);
            for _ in 0..50 {
                x = svgd_step(&x, |p| g.score_at(p).unwrap(), &cfg, &mut rng).unwrap();
                let cur = mean_logp(&x);
                assert!(cur >= prev - 1e-9, "seed {seed}: {cur} < {prev}");
                prev = cur;
            }
        }
    }

    #[test]
    fn kernel_matrix_is_positive_semidefinite() {
        // Random particle sets up to n = 50: min eigenvalue > -1e-8.
        let mut rng = Rng::from_seed(33);
        for round in 0..10 {
            let n = 5 + (round * 5) % 46;
            let d = 1 + round % 4;
            let rows: Vec<Vec<f64>> = (0..n).map(|_| rng.normal_vec(d)).collect();
            let x = ParticleSet::from_rows(rows).unwrap();
            let h = median_bandwidth(&x, 0.1).unwrap();
            let (k, _) = rbf_kernel_grad(&x, h).unwrap();
            let (vals, _) = crate::numkit::symmetric_eigen(&k).unwrap();
            let min = *vals.last().unwrap();
            assert!(min > -1e-8, "round {round}: min eigenvalue {min}");
        }
    }

    #[test]
    fn svgd_particle_correlation_tracks_target() {
        // Sanity: on a correlated Gaussian the particle correlation ends up
        // near the target correlation.
        let g = GmmSpec::new(vec![(
            1.0,
            vec![0.0, 0.0],
            Matrix::from_rows(vec![vec![1.0, 0.8], vec![0.8, 1.0]]),
        )])
        .unwrap();
        let mut rng = Rng::from_seed(2);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| rng.normal_vec(2)).collect();
        let mut x = ParticleSet::from_rows(rows).unwrap();
        let cfg = SvgdConfig {
            step_size: 0.05,
            ..SvgdConfig::default()
        };
        for _ in 0..400 {
            x = svgd_step(&x, |p| g.score_at(p).unwrap(), &cfg, &mut rng).unwrap();
        }
        let c = correlation_matrix(&x).unwrap();
        assert!((c[(0, 1)] - 0.8).abs() < 0.15, "correlation {}", c[(0, 1)]);
    }
}
