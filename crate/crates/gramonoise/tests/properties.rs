//! Property tests over the schedule algebra, normalization, and the small
//! signal operators.

use gramonoise::analysis::{pairwise_deviation_std, DeviationMode};
use gramonoise::dataset::{normalize_median_rms, NormalizationSettings};
use gramonoise::denoiser::layers::{film_modulate, Buf2};
use gramonoise::denoiser::rff_embed;
use gramonoise::rng::{normal_frame, rng_from_seed};
use gramonoise::sampler::{assemble_track, perturb};
use gramonoise::schedule::{alpha, alpha_ratio, sigma, sigma_cond_sq, DiffusionTime};
use proptest::prelude::*;

fn dt(x: f64) -> DiffusionTime {
    DiffusionTime::new(x).unwrap()
}

proptest! {
    #[test]
    fn variance_preserving_everywhere(tau in 0.0f64..=1.0) {
        let s = sigma(dt(tau));
        let a = (1.0 - s * s).max(0.0).sqrt();
        prop_assert!((a * a + s * s - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(alpha(dt(tau)) >= 1e-4);
    }

    #[test]
    fn conditional_composition(mut taus in proptest::array::uniform3(0.0f64..=1.0)) {
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (r, s, tau) = (dt(taus[0]), dt(taus[1]), dt(taus[2]));
        let lhs = alpha_ratio(tau, s).unwrap() * alpha_ratio(s, r).unwrap();
        prop_assert!((lhs - alpha_ratio(tau, r).unwrap()).abs() < 1e-12);
        let marginal = alpha_ratio(tau, s).unwrap().powi(2) * sigma(s) * sigma(s)
            + sigma_cond_sq(tau, s).unwrap();
        prop_assert!((marginal - sigma(tau) * sigma(tau)).abs() < 1e-12);
    }

    #[test]
    fn normalization_scale_equivariance(seed in 0u64..500, scale in 1e-3f64..1e3) {
        let x = normal_frame(&mut rng_from_seed(seed), 257);
        let settings = NormalizationSettings::default();
        let base = normalize_median_rms(&x, &settings).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let from_scaled = normalize_median_rms(&scaled, &settings).unwrap();
        for (a, b) in base.iter().zip(&from_scaled) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-9));
        }
    }

    #[test]
    fn rff_pairs_lie_on_the_unit_circle(sigma_level in 0.0f64..=1.0, seed in 0u64..100) {
        let freqs = normal_frame(&mut rng_from_seed(seed), 8);
        let emb = rff_embed(sigma_level, &freqs);
        prop_assert_eq!(emb.len(), 16);
        for pair in emb.chunks(2) {
            prop_assert!((pair[0] * pair[0] + pair[1] * pair[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn film_identity_is_identity(seed in 0u64..100) {
        let mut rng = rng_from_seed(seed);
        let x = Buf2 { ch: 3, len: 17, data: normal_frame(&mut rng, 51) };
        let out = film_modulate(&x, &[1.0; 3], &[0.0; 3]).unwrap();
        prop_assert_eq!(out.data, x.data);
    }

    #[test]
    fn perturbation_interpolates_between_data_and_noise(tau in 0.0f64..=1.0, seed in 0u64..100) {
        let mut rng = rng_from_seed(seed);
        let x = normal_frame(&mut rng, 32);
        let eps = normal_frame(&mut rng, 32);
        let z = perturb(&x, dt(tau), &eps).unwrap();
        let (a, s) = (alpha(dt(tau)), sigma(dt(tau)));
        for ((zv, xv), ev) in z.z.iter().zip(&x).zip(&eps) {
            prop_assert!((zv - (a * xv + s * ev)).abs() < 1e-15);
        }
    }

    #[test]
    fn track_length_is_exact(duration in 0.05f64..3.0, overlap in 0.0f64..0.01, seed in 0u64..50) {
        let mut rng = rng_from_seed(seed);
        let frames = vec![normal_frame(&mut rng, 400), normal_frame(&mut rng, 400)];
        let track = assemble_track(&frames, 8000, duration, overlap, &mut rng).unwrap();
        prop_assert_eq!(track.len(), (8000.0 * duration).round() as usize);
    }

    #[test]
    fn deviation_profiles_are_non_negative(seed in 0u64..100, items in 2usize..6) {
        let mut rng = rng_from_seed(seed);
        let series: Vec<Vec<f64>> = (0..items).map(|_| normal_frame(&mut rng, 24)).collect();
        for mode in [DeviationMode::FromReference, DeviationMode::AllPairs] {
            let profile = pairwise_deviation_std(&series, mode).unwrap();
            prop_assert!(profile.iter().all(|&v| v >= 0.0));
        }
    }
}
