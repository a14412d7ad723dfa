//! Sample accounts from the built-in influence model, refit from scratch,
//! and compare the recovered coefficients against the originals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use termburst::classify::{fit_lr, ActivityFeatures, FitOptions, InfluenceClass, LRModel};

fn main() -> termburst::Result<()> {
    let truth = LRModel::default_model();
    let beta = truth.raw_coefficients();

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut examples = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let logit = beta[0] + beta[1] * x[0] + beta[2] * x[1] + beta[3] * x[2] + beta[4] * x[3];
        let p = 1.0 / (1.0 + (-logit).exp());
        let class = if rng.gen_bool(p) { InfluenceClass::Mdi } else { InfluenceClass::Idi };
        examples.push((ActivityFeatures::new(x[0], x[1], x[2], x[3]), class));
    }

    let fit = fit_lr(&examples, &FitOptions::default())?;
    println!("converged: {} after {} iterations", fit.converged, fit.iterations);
    let recovered = fit.model.raw_coefficients();
    let names = ["intercept", "retweet_rate", "reply_rate", "link_rate", "median_length"];
    for k in 0..5 {
        println!("{:>14}: true {:+.2}  fitted {:+.3}", names[k], beta[k], recovered[k]);
    }

    let broadcast = ActivityFeatures::new(0.1, 0.05, 0.9, 0.8);
    let conversational = ActivityFeatures::new(0.4, 0.8, 0.02, -0.5);
    for (tag, f) in [("link-heavy", broadcast), ("reply-heavy", conversational)] {
        let (class, p) = fit.model.classify(&f)?;
        println!("{tag}: {} (p = {p:.3})", class.as_str());
    }
    Ok(())
}
