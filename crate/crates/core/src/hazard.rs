//! Hurricane hazard and component fragility.
//!
//! Hurricane arrivals follow a homogeneous Poisson process, so the time between
//! successive events is exponential with the annual rate. Each event falls in a
//! Saffir-Simpson category with a fixed climatological probability. Components
//! respond to one-minute sustained wind (mph) through normal-CDF fragility curves,
//! one per damage state.
//!
//! The resilience index combines the two risk quantities as
//! `1 - (P_damage(wind) + p_category) / 2`, so higher is more resilient and the
//! value stays in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{OutageError, Result};

/// Climatological probability of a hurricane falling in categories 1 through 5.
pub const DEFAULT_CATEGORY_PROBS: [f64; 5] = [0.53, 0.19, 0.15, 0.08, 0.05];

/// One hurricane every seven years on average.
pub const DEFAULT_ANNUAL_RATE: f64 = 1.0 / 7.0;

const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardParams {
    /// Poisson occurrence rate, events per year.
    pub annual_rate: f64,
    /// Probability per Saffir-Simpson category, index 0 is category 1.
    pub category_probs: [f64; 5],
}

impl Default for HazardParams {
    fn default() -> Self {
        Self {
            annual_rate: DEFAULT_ANNUAL_RATE,
            category_probs: DEFAULT_CATEGORY_PROBS,
        }
    }
}

impl HazardParams {
    pub fn new(annual_rate: f64, category_probs: [f64; 5]) -> Result<Self> {
        let p = Self {
            annual_rate,
            category_probs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.annual_rate.is_finite() && self.annual_rate > 0.0) {
            return Err(OutageError::InvalidParameter(format!(
                "annual_rate must be positive, got {}",
                self.annual_rate
            )));
        }
        for (i, &p) in self.category_probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(OutageError::InvalidParameter(format!(
                    "category {} probability {} is outside [0, 1]",
                    i + 1,
                    p
                )));
            }
        }
        let sum: f64 = self.category_probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(OutageError::InvalidParameter(format!(
                "category probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Exponential inter-arrival density, per year.
    pub fn interarrival_pdf(&self, t: f64) -> f64 {
        interarrival_pdf(t, self)
    }

    pub fn category_probability(&self, cat: u8) -> Result<f64> {
        category_probability(cat, self)
    }
}

/// Density of the time (years) between successive hurricanes.
pub fn interarrival_pdf(t: f64, params: &HazardParams) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        params.annual_rate * (-params.annual_rate * t).exp()
    }
}

pub fn category_probability(cat: u8, params: &HazardParams) -> Result<f64> {
    match cat {
        1..=5 => Ok(params.category_probs[usize::from(cat - 1)]),
        _ => Err(OutageError::InvalidCategory(cat)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentClass {
    GenerationUnit,
    TransmissionLine,
    DistributionLine,
    Substation,
}

impl ComponentClass {
    pub const ALL: [ComponentClass; 4] = [
        ComponentClass::GenerationUnit,
        ComponentClass::TransmissionLine,
        ComponentClass::DistributionLine,
        ComponentClass::Substation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentClass::GenerationUnit => "generation_unit",
            ComponentClass::TransmissionLine => "transmission_line",
            ComponentClass::DistributionLine => "distribution_line",
            ComponentClass::Substation => "substation",
        }
    }
}

impl fmt::Display for ComponentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentClass {
    type Err = OutageError;

    fn from_str(s: &str) -> Result<Self> {
        ComponentClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| OutageError::InvalidParameter(format!("unknown component class `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageState {
    Low,
    Moderate,
    Severe,
    Complete,
}

impl DamageState {
    pub const ALL: [DamageState; 4] = [
        DamageState::Low,
        DamageState::Moderate,
        DamageState::Severe,
        DamageState::Complete,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// Normal-CDF fragility function for one damage state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFragility {
    /// Wind speed (mph) at which the damage state is reached with probability 0.5.
    pub mean: f64,
    pub sd: f64,
}

impl NormalFragility {
    pub fn probability(&self, wind: f64) -> f64 {
        standard_normal_cdf((wind - self.mean) / self.sd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragilityCurve {
    pub low: NormalFragility,
    pub moderate: NormalFragility,
    pub severe: NormalFragility,
    pub complete: NormalFragility,
}

impl FragilityCurve {
    pub fn new(states: [NormalFragility; 4]) -> Result<Self> {
        let [low, moderate, severe, complete] = states;
        let curve = Self {
            low,
            moderate,
            severe,
            complete,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Curve whose damage-state means step down from `complete_mean` in 20 mph
    /// increments, all sharing one standard deviation.
    pub fn stepped(complete_mean: f64, sd: f64) -> Result<Self> {
        let at = |offset: f64| NormalFragility {
            mean: complete_mean - offset,
            sd,
        };
        Self::new([at(60.0), at(40.0), at(20.0), at(0.0)])
    }

    pub fn states(&self) -> [NormalFragility; 4] {
        [self.low, self.moderate, self.severe, self.complete]
    }

    pub fn state(&self, state: DamageState) -> NormalFragility {
        self.states()[state.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let states = self.states();
        for (s, f) in DamageState::ALL.iter().zip(states.iter()) {
            if !(f.sd.is_finite() && f.sd > 0.0) {
                return Err(OutageError::InvalidParameter(format!(
                    "fragility sd for {s:?} must be positive, got {}",
                    f.sd
                )));
            }
            if !f.mean.is_finite() {
                return Err(OutageError::InvalidParameter(format!(
                    "fragility mean for {s:?} is not finite"
                )));
            }
        }
        if !states.windows(2).all(|w| w[0].mean < w[1].mean) {
            return Err(OutageError::InvalidParameter(
                "fragility means must increase strictly from low to complete".into(),
            ));
        }
        Ok(())
    }
}

/// Probability that `wind` (mph) drives a component into `state` or worse.
pub fn damage_probability(curve: &FragilityCurve, state: DamageState, wind: f64) -> f64 {
    curve.state(state).probability(wind)
}

/// Resilience index of a component facing a category-`cat` hurricane with
/// sustained wind `wind` mph, using the given damage state of its curve.
pub fn resilience_index(
    curve: &FragilityCurve,
    state: DamageState,
    cat: u8,
    wind: f64,
    params: &HazardParams,
) -> Result<f64> {
    let p_cat = category_probability(cat, params)?;
    if !(wind.is_finite() && wind >= 0.0) {
        return Err(OutageError::InvalidParameter(format!(
            "wind speed must be a non-negative finite mph value, got {wind}"
        )));
    }
    let p_damage = damage_probability(curve, state, wind);
    Ok(combine_risks(p_damage, p_cat))
}

/// Complement of the mean of two risk probabilities, clamped to `[0, 1]`.
pub fn combine_risks(p_damage: f64, p_category: f64) -> f64 {
    (1.0 - 0.5 * (p_damage + p_category)).clamp(0.0, 1.0)
}

/// Per-class fragility curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FragilitySet {
    pub generation_unit: FragilityCurve,
    pub transmission_line: FragilityCurve,
    pub distribution_line: FragilityCurve,
    pub substation: FragilityCurve,
}

impl Default for FragilitySet {
    /// Calibration defaults: complete-damage means of 130, 120, 110 and 125 mph,
    /// all states with sd 20 mph.
    fn default() -> Self {
        let c = |mean| FragilityCurve::stepped(mean, 20.0).expect("valid default curve");
        Self {
            generation_unit: c(130.0),
            transmission_line: c(120.0),
            distribution_line: c(110.0),
            substation: c(125.0),
        }
    }
}

impl FragilitySet {
    pub fn curve(&self, class: ComponentClass) -> &FragilityCurve {
        match class {
            ComponentClass::GenerationUnit => &self.generation_unit,
            ComponentClass::TransmissionLine => &self.transmission_line,
            ComponentClass::DistributionLine => &self.distribution_line,
            ComponentClass::Substation => &self.substation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for class in ComponentClass::ALL {
            self.curve(class)
                .validate()
                .map_err(|e| OutageError::InvalidParameter(format!("{class}: {e}")))?;
        }
        Ok(())
    }
}

/// Hazard parameters plus fragility curves, as loaded from a hazard config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardModel {
    #[serde(rename = "hazard")]
    pub params: HazardParams,
    /// Damage state whose probability feeds the resilience index.
    pub index_damage_state: DamageState,
    pub fragility: FragilitySet,
}

impl Default for HazardModel {
    fn default() -> Self {
        Self {
            params: HazardParams::default(),
            index_damage_state: DamageState::Complete,
            fragility: FragilitySet::default(),
        }
    }
}

impl HazardModel {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.fragility.validate()
    }

    pub fn resilience_index(&self, class: ComponentClass, cat: u8, wind: f64) -> Result<f64> {
        resilience_index(
            self.fragility.curve(class),
            self.index_damage_state,
            cat,
            wind,
            &self.params,
        )
    }
}

/// Standard normal CDF.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
