// Temporary tuning harness; not part of the deliverable surface.
use escort::belief::{escort_update, sir_update, EscortConfig, FilterState, ScoreMode};
use escort::envs::{EnvModel, Observation, StaticTargetEnv};
use escort::metrics::{correlation_error, mode_coverage, sliced_wasserstein};
use escort::numkit::ParticleSet;
use escort::rng::{stream, Rng};
use escort::targets::benchmark_catalog;

fn init(d: usize, n: usize, seed: u64) -> ParticleSet<f64> {
    let mut rng = Rng::stream(seed, stream::INIT);
    ParticleSet::from_rows((0..n).map(|_| (0..d).map(|_| 2.0 * rng.normal::<f64>()).collect()).collect()).unwrap()
}

/// Wide-to-tight homotopy: the target with covariances scaled by 1/beta.
fn widened(g: &escort::Gmm64, beta: f64) -> escort::Gmm64 {
    let comps = g
        .weights()
        .into_iter()
        .zip(g.modes())
        .enumerate()
        .map(|(k, (w, mean))| {
            let cov = g.covariance(k);
            let scaled =
                escort::Matrix64::from_fn(cov.rows(), cov.cols(), |i, j| cov[(i, j)] / beta);
            (w, mean, scaled)
        })
        .collect();
    escort::targets::GmmSpec::new(comps).unwrap()
}

/// Geometric annealing schedule from beta0 to 1 over the ramp fraction.
fn beta_schedule(outer: usize, total: usize, beta0: f64, ramp: f64) -> f64 {
    let ramp_len = ((total as f64 - 1.0) * ramp).max(1.0);
    let u = (outer as f64 / ramp_len).min(1.0);
    (beta0.ln() * (1.0 - u)).exp()
}

// trace <target> <eps> <decay> <lc> <lt>: per-update transport diagnostics.
fn trace(args: &[String]) {
    let target_name = args.first().map(|s| s.as_str()).unwrap_or("gmm20d");
    let g = benchmark_catalog::<f64>(target_name).unwrap();
    let d = g.dim();
    let modes = g.modes();
    let cfg = EscortConfig {
        score_mode: ScoreMode::Analytic,
        alpha: 0.5,
        noise_enabled: false,
        step_size: args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0),
        step_decay: args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.99),
        lambda_corr: args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.02),
        lambda_temp: args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.02),
        repulsion_scale_enabled: args.get(5).map(|s| s == "scale").unwrap_or(true),
        ..EscortConfig::default()
    };
    let env = StaticTargetEnv::new(g.clone(), 2.0);
    let mut st = FilterState::new(init(d, 100, 0), 0);
    for outer in 0..30 {
        let beta = beta_schedule(outer, 30, 0.02, 0.7);
        let env_t = StaticTargetEnv::new(widened(&g, beta), 2.0);
        let _ = &env;
        escort_update(&mut st, 0, &Observation::empty(), &env_t, &cfg).unwrap();
        if outer % 5 == 4 || outer == 0 {
            let mut nearest_any = vec![f64::INFINITY; modes.len()];
            let mut per_particle_min = Vec::new();
            for i in 0..st.particles.len() {
                let mut best = f64::INFINITY;
                for (k, m) in modes.iter().enumerate() {
                    let dist: f64 = st.particles.particle(i).iter().zip(m)
                        .map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    best = best.min(dist);
                    nearest_any[k] = nearest_any[k].min(dist);
                }
                per_particle_min.push(best);
            }
            per_particle_min.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let cov = mode_coverage(&st.particles, &modes, 1.0);
            println!(
                "outer {outer:2}: cov={cov:.2} particle-to-own-mode dist [p10 {:.2} p50 {:.2} p90 {:.2}] worst-mode nearest {:.2}",
                per_particle_min[10], per_particle_min[50], per_particle_min[90],
                nearest_any.iter().cloned().fold(0.0f64, f64::max)
            );
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(|s| s.as_str()) == Some("trace") {
        trace(&args[2..]);
        return;
    }
    let target_name = args.get(1).map(|s| s.as_str()).unwrap_or("gmm2d");
    let iters: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(300);
    let alpha: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let noise: bool = args.get(4).map(|s| s == "noise").unwrap_or(false);
    let eps: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let h0: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let lc: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let lt: f64 = args.get(9).and_then(|s| s.parse().ok()).unwrap_or(0.1);

    let g = benchmark_catalog::<f64>(target_name).unwrap();
    let d = g.dim();
    let c_true = g.mixture_correlation();
    let modes = g.modes();
    let n = 100usize;
    let inner = 10usize;
    let outer = iters / inner;

    for (label, no_corr, no_temp, random_proj) in [
        ("escort", false, false, false),
        ("svgd  ", true, true, false),
        ("nocorr", true, false, false),
        ("noproj", false, false, true),
    ] {
        let mut errs = Vec::new();
        let mut covs = Vec::new();
        let mut sws = Vec::new();
        for seed in 0..5u64 {
            let env = StaticTargetEnv::new(g.clone(), 2.0);
            let cfg = EscortConfig {
                score_mode: ScoreMode::Analytic,
                alpha,
                noise_enabled: noise,
                no_corr,
                no_temp,
                random_proj,
                step_size: eps,
                bandwidth_base: h0,
                step_decay: args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.999),
                lambda_corr: lc,
                lambda_temp: lt,
                repulsion_scale_enabled: args.get(10).map(|s| s.as_str() == "scale").unwrap_or(true),
                ..EscortConfig::default()
            };
            let mut st = FilterState::new(init(d, n, seed), seed);
            for o in 0..outer {
                let beta = beta_schedule(o, outer, 0.02, 0.7);
                let env_t = StaticTargetEnv::new(widened(&g, beta), 2.0);
                let _ = &env;
                escort_update(&mut st, 0, &Observation::empty(), &env_t, &cfg).unwrap();
            }
            if d >= 2 {
                errs.push(correlation_error(&st.particles, &c_true).unwrap());
            }
            covs.push(mode_coverage(&st.particles, &modes, 1.0));
            let mut eval = Rng::stream(seed, stream::EVAL);
            let reference = g.sample(n, &mut eval).unwrap();
            sws.push(sliced_wasserstein(&st.particles, &reference, 100, &mut eval).unwrap());
        }
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        println!(
            "{label} corr_err={:.4} coverage={:.3} sw={:.4}",
            m(&errs),
            m(&covs),
            m(&sws)
        );
    }

    // SIR baseline.
    let mut covs = Vec::new();
    let mut sws = Vec::new();
    for seed in 0..5u64 {
        let env = StaticTargetEnv::new(g.clone(), 2.0);
        let mut rng = Rng::stream(seed, stream::TRANSITION);
        let mut x = init(d, n, seed);
        for o in 0..outer {
            let beta = beta_schedule(o, outer, 0.02, 0.7);
            let env_t = StaticTargetEnv::new(widened(&g, beta), 2.0);
            let _ = &env;
            x = sir_update(&x, 0, &Observation::empty(), &env_t, &mut rng).unwrap();
        }
        covs.push(mode_coverage(&x, &modes, 1.0));
        let mut eval = Rng::stream(seed, stream::EVAL);
        let reference = g.sample(n, &mut eval).unwrap();
        sws.push(sliced_wasserstein(&x, &reference, 100, &mut eval).unwrap());
    }
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!("sir    coverage={:.3} sw={:.4}", m(&covs), m(&sws));

    // Initial-cloud context.
    let x0 = init(d, n, 0);
    if d >= 2 {
        println!("init corr_err={:.4}", correlation_error(&x0, &c_true).unwrap());
    }
    println!("init coverage={:.3}", mode_coverage(&x0, &modes, 1.0));

    // Per-mode diagnostics for one escort run (seed 0).
    let env = StaticTargetEnv::new(g.clone(), 2.0);
    let cfg = EscortConfig {
        score_mode: ScoreMode::Analytic,
        alpha,
        noise_enabled: noise,
        step_size: args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.05),
        bandwidth_base: args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.1),
        step_decay: args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.999),
        lambda_corr: lc,
        lambda_temp: lt,
        repulsion_scale_enabled: args.get(10).map(|s| s.as_str() == "scale").unwrap_or(true),
        ..EscortConfig::default()
    };
    let mut st = FilterState::new(init(d, n, 0), 0);
    for o in 0..outer {
        let beta = beta_schedule(o, outer, 0.02, 0.7);
        let env_t = StaticTargetEnv::new(widened(&g, beta), 2.0);
        escort_update(&mut st, 0, &Observation::empty(), &env_t, &cfg).unwrap();
    }
    for (k, m) in modes.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        let mut inside = 0usize;
        for i in 0..st.particles.len() {
            let dist: f64 = st
                .particles
                .particle(i)
                .iter()
                .zip(m)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            nearest = nearest.min(dist);
            if dist < 1.0 {
                inside += 1;
            }
        }
        println!("mode {k}: nearest={nearest:.3} inside={inside}");
    }
    // Spread of particle norms.
    let norms: Vec<f64> = (0..st.particles.len())
        .map(|i| st.particles.particle(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mn = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = norms.iter().cloned().fold(0.0f64, f64::max);
    println!("particle radius range [{mn:.2}, {mx:.2}]");
}
