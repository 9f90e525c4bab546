//! Synthetic labeled dataset of component states under hurricane scenarios.
//!
//! Labels are assigned first (an exact outage count, then shuffled) and
//! features are drawn from the class-conditional profile of each label. Wind
//! speed comes from a per-class Saffir-Simpson category mixture, each category
//! a normal around the midpoint of its wind band. Resilience and distance
//! means depend on the drawn category as well as the class, so the boundary
//! between the classes shifts with storm strength. Features are normalized by
//! the configured maxima, perturbed with small Gaussian noise and clamped to
//! `[0, 1]`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureVector, Label, LabeledSample};
use crate::error::{OutageError, Result};
use crate::hazard::{ComponentClass, HazardModel};

/// One-minute sustained wind bands (mph) for categories 1 to 5. Category 5
/// is open-ended; its upper bound here only fixes the sampling midpoint.
pub const SAFFIR_SIMPSON_BANDS: [(f64, f64); 5] = [
    (74.0, 95.0),
    (96.0, 110.0),
    (111.0, 129.0),
    (130.0, 156.0),
    (157.0, 183.0),
];

pub fn band_midpoint(cat: u8) -> Result<f64> {
    match cat {
        1..=5 => {
            let (lo, hi) = SAFFIR_SIMPSON_BANDS[usize::from(cat - 1)];
            Ok(0.5 * (lo + hi))
        }
        _ => Err(OutageError::InvalidCategory(cat)),
    }
}

/// Draws a sustained wind speed for a category: normal around the band
/// midpoint with standard deviation `sd`, truncated to non-negative values.
pub fn sample_wind_speed<R: Rng + ?Sized>(cat: u8, sd: f64, rng: &mut R) -> Result<f64> {
    let mid = band_midpoint(cat)?;
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(OutageError::InvalidParameter(format!(
            "wind sd must be non-negative, got {sd}"
        )));
    }
    for _ in 0..64 {
        let z: f64 = rng.sample(StandardNormal);
        let w = mid + sd * z;
        if w >= 0.0 {
            return Ok(w);
        }
    }
    Ok(0.0)
}

/// How the resilience feature of a sample is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResilienceMode {
    /// Class-conditional normal draw.
    Direct,
    /// Resilience index of a random component class under the sampled
    /// category and wind.
    HazardModel,
}

/// Feature distribution of one class. Means are indexed by category 1 to 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassProfile {
    pub resilience_mean: [f64; 5],
    pub resilience_sd: f64,
    /// Distance from the hurricane center, in raw distance units.
    pub distance_mean: [f64; 5],
    pub distance_sd: f64,
    /// Category mixture weights for the wind draw, categories 1 to 5.
    pub category_weights: [f64; 5],
}

impl ClassProfile {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |what: &str| OutageError::Config(format!("{name}: {what}"));
        let finite = self
            .resilience_mean
            .iter()
            .chain(&self.distance_mean)
            .chain([&self.resilience_sd, &self.distance_sd]);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(bad("profile values must be finite"));
        }
        if self.resilience_sd < 0.0 || self.distance_sd < 0.0 {
            return Err(bad("standard deviations must be non-negative"));
        }
        if self
            .category_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(bad("category weights must be non-negative"));
        }
        if self.category_weights.iter().sum::<f64>() <= 0.0 {
            return Err(bad("category weights must not all be zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub sample_count: usize,
    /// Fraction of samples labeled outage.
    pub outage_fraction: f64,
    pub outage: ClassProfile,
    pub operational: ClassProfile,
    /// Spread (mph) of the wind draw around a category's band midpoint.
    pub wind_sd: f64,
    /// Gaussian noise added to the normalized (resilience, distance, intensity).
    pub noise_sd: [f64; 3],
    /// Wind speed (mph) that normalizes to 1.
    pub max_wind: f64,
    /// Distance that normalizes to 1.
    pub max_distance: f64,
    pub resilience_mode: ResilienceMode,
    /// Hazard model used by [`ResilienceMode::HazardModel`].
    pub hazard: HazardModel,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            sample_count: 1000,
            outage_fraction: 0.5,
            outage: ClassProfile {
                resilience_mean: [0.064, 0.101, 0.373, 0.387, 0.392],
                resilience_sd: 0.05,
                distance_mean: [9.0, 18.2, 65.8, 80.2, 82.6],
                distance_sd: 50.4,
                category_weights: [0.074, 0.099, 0.158, 0.192, 0.477],
            },
            operational: ClassProfile {
                resilience_mean: [0.329, 0.363, 0.397, 0.665, 0.67],
                resilience_sd: 0.188,
                distance_mean: [65.6, 77.0, 95.6, 157.2, 193.0],
                distance_sd: 56.691,
                category_weights: [0.53, 0.19, 0.15, 0.08, 0.05],
            },
            wind_sd: 10.0,
            noise_sd: [0.02, 0.02, 0.02],
            max_wind: 200.0,
            max_distance: 200.0,
            resilience_mode: ResilienceMode::Direct,
            hazard: HazardModel::default(),
            seed: 1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 2 {
            return Err(OutageError::Config(format!(
                "sample_count must be at least 2, got {}",
                self.sample_count
            )));
        }
        if !(self.outage_fraction > 0.0 && self.outage_fraction < 1.0) {
            return Err(OutageError::Config(format!(
                "outage_fraction must lie strictly between 0 and 1, got {}",
                self.outage_fraction
            )));
        }
        if self.noise_sd.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(OutageError::Config(
                "noise_sd entries must be positive".into(),
            ));
        }
        if !(self.wind_sd.is_finite() && self.wind_sd >= 0.0) {
            return Err(OutageError::Config("wind_sd must be non-negative".into()));
        }
        if !(self.max_wind.is_finite() && self.max_wind > 0.0)
            || !(self.max_distance.is_finite() && self.max_distance > 0.0)
        {
            return Err(OutageError::Config(
                "max_wind and max_distance must be positive".into(),
            ));
        }
        self.outage.validate("outage profile")?;
        self.operational.validate("operational profile")?;
        if self.resilience_mode == ResilienceMode::HazardModel {
            self.hazard.validate()?;
        }
        Ok(())
    }

    /// Number of samples labeled outage: `round(outage_fraction * sample_count)`.
    pub fn outage_count(&self) -> usize {
        (self.outage_fraction * self.sample_count as f64).round() as usize
    }

    fn profile(&self, label: Label) -> &ClassProfile {
        match label {
            Label::Outage => &self.outage,
            Label::Operational => &self.operational,
        }
    }
}

/// Scales raw wind (mph) and distance by the configured maxima, clamped to `[0, 1]`.
pub fn normalize(raw_wind: f64, raw_distance: f64, cfg: &GenConfig) -> (f64, f64) {
    (
        (raw_wind / cfg.max_wind).clamp(0.0, 1.0),
        (raw_distance / cfg.max_distance).clamp(0.0, 1.0),
    )
}

pub fn generate_dataset(cfg: &GenConfig) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n_out = cfg.outage_count();
    let mut labels: Vec<Label> = (0..cfg.sample_count)
        .map(|i| {
            if i < n_out {
                Label::Outage
            } else {
                Label::Operational
            }
        })
        .collect();
    labels.shuffle(&mut rng);

    let weights = |p: &ClassProfile| {
        WeightedIndex::new(p.category_weights)
            .map_err(|e| OutageError::Config(format!("category weights: {e}")))
    };
    let outage_cats = weights(&cfg.outage)?;
    let operational_cats = weights(&cfg.operational)?;

    let mut samples = Vec::with_capacity(cfg.sample_count);
    for label in labels {
        let profile = cfg.profile(label);
        let cats = match label {
            Label::Outage => &outage_cats,
            Label::Operational => &operational_cats,
        };
        let cat = cats.sample(&mut rng) as u8 + 1;
        let wind = sample_wind_speed(cat, cfg.wind_sd, &mut rng)?;
        let k = usize::from(cat - 1);
        let raw_distance =
            (profile.distance_mean[k] + profile.distance_sd * normal(&mut rng)).max(0.0);
        let resilience = match cfg.resilience_mode {
            ResilienceMode::Direct => {
                profile.resilience_mean[k] + profile.resilience_sd * normal(&mut rng)
            }
            ResilienceMode::HazardModel => {
                let class = ComponentClass::ALL[rng.random_range(0..ComponentClass::ALL.len())];
                cfg.hazard.resilience_index(class, cat, wind)?
            }
        };
        let (intensity, distance) = normalize(wind, raw_distance, cfg);

        let jitter = |v: f64, sd: f64, rng: &mut ChaCha8Rng| (v + sd * normal(rng)).clamp(0.0, 1.0);
        let features = FeatureVector::new(
            jitter(resilience, cfg.noise_sd[0], &mut rng),
            jitter(distance, cfg.noise_sd[1], &mut rng),
            jitter(intensity, cfg.noise_sd[2], &mut rng),
        );
        samples.push(LabeledSample::new(features, label));
    }
    Ok(samples)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::class_counts;
    use proptest::prelude::*;

    #[test]
    fn degenerate_wind_draw_is_band_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_wind_speed(1, 0.0, &mut rng).unwrap(), 84.5);
        assert_eq!(sample_wind_speed(5, 0.0, &mut rng).unwrap(), 170.0);
        assert!(sample_wind_speed(0, 1.0, &mut rng).is_err());
        assert!(sample_wind_speed(6, 1.0, &mut rng).is_err());
    }

    #[test]
    fn wind_draw_is_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            assert!(sample_wind_speed(5, 200.0, &mut rng).unwrap() >= 0.0);
        }
    }

    #[test]
    fn wind_sample_mean_matches_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let sd = 8.0;
        let mean: f64 = (0..n)
            .map(|_| sample_wind_speed(3, sd, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let bound = 3.0 * sd / (n as f64).sqrt();
        assert!((mean - 120.0).abs() <= bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn normalization_endpoints() {
        let cfg = GenConfig::default();
        assert_eq!(normalize(cfg.max_wind, 0.0, &cfg), (1.0, 0.0));
        assert_eq!(normalize(0.0, cfg.max_distance, &cfg), (0.0, 1.0));
        assert_eq!(
            normalize(cfg.max_wind / 2.0, cfg.max_distance / 2.0, &cfg),
            (0.5, 0.5)
        );
        assert_eq!(normalize(cfg.max_wind * 3.0, 0.0, &cfg).0, 1.0);
    }

    #[test]
    fn default_dataset_is_balanced_and_deterministic() {
        let cfg = GenConfig::default();
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(class_counts(&a), (500, 500));
        assert_eq!(a, b);
        let c = generate_dataset(&GenConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_conditional_direction() {
        let data = generate_dataset(&GenConfig::default()).unwrap();
        let mean = |label: Label, f: fn(&FeatureVector) -> f64| {
            let v: Vec<f64> = data
                .iter()
                .filter(|s| s.label == label)
                .map(|s| f(&s.features))
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(Label::Outage, |x| x.intensity) > mean(Label::Operational, |x| x.intensity));
        assert!(mean(Label::Outage, |x| x.resilience) < mean(Label::Operational, |x| x.resilience));
        assert!(mean(Label::Outage, |x| x.distance) < mean(Label::Operational, |x| x.distance));
    }

    #[test]
    fn rounding_contract() {
        let cfg = GenConfig {
            sample_count: 10,
            outage_fraction: 0.3,
            ..GenConfig::default()
        };
        assert_eq!(class_counts(&generate_dataset(&cfg).unwrap()), (3, 7));
    }

    #[test]
    fn hazard_model_mode_runs() {
        let cfg = GenConfig {
            resilience_mode: ResilienceMode::HazardModel,
            sample_count: 200,
            ..GenConfig::default()
        };
        let data = generate_dataset(&cfg).unwrap();
        assert_eq!(data.len(), 200);
        assert!(data.iter().all(|s| s.features.validate().is_ok()));
    }

    #[test]
    fn invalid_configs_rejected() {
        let d = GenConfig::default();
        for cfg in [
            GenConfig {
                sample_count: 1,
                ..d.clone()
            },
            GenConfig {
                outage_fraction: 0.0,
                ..d.clone()
            },
            GenConfig {
                outage_fraction: 1.0,
                ..d.clone()
            },
            GenConfig {
                noise_sd: [0.0, 0.1, 0.1],
                ..d.clone()
            },
            GenConfig {
                max_wind: 0.0,
                ..d.clone()
            },
            GenConfig {
                max_distance: -1.0,
                ..d.clone()
            },
        ] {
            assert!(matches!(
                generate_dataset(&cfg),
                Err(OutageError::Config(_))
            ));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn features_always_in_unit_cube(n in 2usize..120, frac in 0.05f64..0.95, seed in any::<u64>(),
                                        noise in 0.001f64..0.5, wind_sd in 0.0f64..80.0,
                                        max_wind in 50.0f64..250.0, model in any::<bool>()) {
            let cfg = GenConfig {
                sample_count: n,
                outage_fraction: frac,
                noise_sd: [noise; 3],
                wind_sd,
                max_wind,
                seed,
                resilience_mode: if model { ResilienceMode::HazardModel } else { ResilienceMode::Direct },
                ..GenConfig::default()
            };
            let data = generate_dataset(&cfg).unwrap();
            prop_assert_eq!(data.len(), n);
            prop_assert_eq!(class_counts(&data).0, (frac * n as f64).round() as usize);
            for s in &data {
                prop_assert!(s.features.validate().is_ok());
            }
        }
    }
}
