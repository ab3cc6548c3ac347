//! Gas totals and the 37 ratio-based DGA parameters.
//!
//! Feature numbering is 1-based and fixed across the crate:
//!
//! - 1..=5: each gas over TH
//! - 6..=9: C2H2 over H2, CH4, C2H6, C2H4
//! - 10..=12: C2H4 over H2, CH4, C2H6; 13 is C2H4/H2 + C2H4/CH4
//! - 14..=18: raw H2, CH4, C2H6, C2H4, C2H2
//! - 19..=22: TH, THD, THH, TCH
//! - 23..=27, 28..=32, 33..=37: each gas over THD, THH and TCH
//!
//! Within each "gas over total" block the gas order is H2, CH4, C2H6, C2H4, C2H2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of DGA parameters per sample.
pub const FEATURE_COUNT: usize = 37;

/// Value substituted for `x / 0` with `x > 0`.
pub const RATIO_CAP: f64 = 1e6;

/// Human-readable names, index `i` holds feature `i + 1`.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "H2/TH",
    "CH4/TH",
    "C2H6/TH",
    "C2H4/TH",
    "C2H2/TH",
    "C2H2/H2",
    "C2H2/CH4",
    "C2H2/C2H6",
    "C2H2/C2H4",
    "C2H4/H2",
    "C2H4/CH4",
    "C2H4/C2H6",
    "C2H4/H2+C2H4/CH4",
    "H2",
    "CH4",
    "C2H6",
    "C2H4",
    "C2H2",
    "TH",
    "THD",
    "THH",
    "TCH",
    "H2/THD",
    "CH4/THD",
    "C2H6/THD",
    "C2H4/THD",
    "C2H2/THD",
    "H2/THH",
    "CH4/THH",
    "C2H6/THH",
    "C2H4/THH",
    "C2H2/THH",
    "H2/TCH",
    "CH4/TCH",
    "C2H6/TCH",
    "C2H4/TCH",
    "C2H2/TCH",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultClass {
    PD,
    D1,
    D2,
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuperClass {
    Discharge,
    Thermal,
}

impl FaultClass {
    pub const ALL: [FaultClass; 6] = [
        FaultClass::PD,
        FaultClass::D1,
        FaultClass::D2,
        FaultClass::T1,
        FaultClass::T2,
        FaultClass::T3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<FaultClass> {
        Self::ALL.get(i).copied()
    }

    pub fn superclass(self) -> SuperClass {
        match self {
            FaultClass::PD | FaultClass::D1 | FaultClass::D2 => SuperClass::Discharge,
            FaultClass::T1 | FaultClass::T2 | FaultClass::T3 => SuperClass::Thermal,
        }
    }

    /// Position of the class inside its superclass (0..3).
    pub fn branch_index(self) -> usize {
        self.index() % 3
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaultClass::PD => "PD",
            FaultClass::D1 => "D1",
            FaultClass::D2 => "D2",
            FaultClass::T1 => "T1",
            FaultClass::T2 => "T2",
            FaultClass::T3 => "T3",
        }
    }
}

impl SuperClass {
    pub const ALL: [SuperClass; 2] = [SuperClass::Discharge, SuperClass::Thermal];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn members(self) -> [FaultClass; 3] {
        match self {
            SuperClass::Discharge => [FaultClass::PD, FaultClass::D1, FaultClass::D2],
            SuperClass::Thermal => [FaultClass::T1, FaultClass::T2, FaultClass::T3],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SuperClass::Discharge => "Discharge",
            SuperClass::Thermal => "Thermal",
        }
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for SuperClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PD" => Ok(FaultClass::PD),
            "D1" => Ok(FaultClass::D1),
            "D2" => Ok(FaultClass::D2),
            "T1" => Ok(FaultClass::T1),
            "T2" => Ok(FaultClass::T2),
            "T3" => Ok(FaultClass::T3),
            _ => Err(format!("unknown fault label `{}`", s.trim())),
        }
    }
}

/// One transformer's dissolved-gas measurement, concentrations in ppm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSample {
    pub id: String,
    pub h2: f64,
    pub ch4: f64,
    pub c2h6: f64,
    pub c2h4: f64,
    pub c2h2: f64,
    pub label: Option<FaultClass>,
}

impl GasSample {
    /// Builds a validated sample.
    pub fn new(
        id: impl Into<String>,
        [h2, ch4, c2h6, c2h4, c2h2]: [f64; 5],
        label: Option<FaultClass>,
    ) -> Result<Self> {
        let sample = GasSample {
            id: id.into(),
            h2,
            ch4,
            c2h6,
            c2h4,
            c2h2,
            label,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn gases(&self) -> [f64; 5] {
        [self.h2, self.ch4, self.c2h6, self.c2h4, self.c2h2]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in ["h2", "ch4", "c2h6", "c2h4", "c2h2"]
            .iter()
            .zip(self.gases())
        {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSample {
                    id: self.id.clone(),
                    reason: format!("{name} = {v} is not a finite non-negative concentration"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasTotals {
    pub th: f64,
    pub thd: f64,
    pub thh: f64,
    pub tch: f64,
}

/// The 37 parameters of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; FEATURE_COUNT]);

impl FeatureVector {
    /// Feature by its 1-based number.
    ///
    /// Panics if `number` is outside `1..=37`.
    pub fn get(&self, number: usize) -> f64 {
        assert!(
            (1..=FEATURE_COUNT).contains(&number),
            "feature number {number} outside 1..=37"
        );
        self.0[number - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }
}

/// Ratio with the zero-denominator policy: `0/0 = 0`, `x/0 = RATIO_CAP`.
pub fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            RATIO_CAP
        }
    } else {
        num / den
    }
}

pub fn compute_totals(sample: &GasSample) -> GasTotals {
    let GasSample {
        h2,
        ch4,
        c2h6,
        c2h4,
        c2h2,
        ..
    } = *sample;
    GasTotals {
        th: h2 + ch4 + c2h6 + c2h4 + c2h2,
        thd: ch4 + c2h4 + c2h2,
        thh: h2 + c2h4 + c2h2,
        tch: ch4 + c2h6 + c2h4 + c2h2,
    }
}

pub fn compute_features(sample: &GasSample) -> Result<FeatureVector> {
    sample.validate()?;
    let gases = sample.gases();
    if gases.iter().all(|&g| g == 0.0) {
        return Err(Error::DegenerateSample(sample.id.clone()));
    }
    let [h2, ch4, c2h6, c2h4, c2h2] = gases;
    let t = compute_totals(sample);

    let mut v = [0.0; FEATURE_COUNT];
    let mut put = |number: usize, value: f64| v[number - 1] = value;

    for (k, g) in gases.iter().enumerate() {
        put(1 + k, safe_ratio(*g, t.th));
        put(14 + k, *g);
    }
    put(6, safe_ratio(c2h2, h2));
    put(7, safe_ratio(c2h2, ch4));
    put(8, safe_ratio(c2h2, c2h6));
    put(9, safe_ratio(c2h2, c2h4));
    put(10, safe_ratio(c2h4, h2));
    put(11, safe_ratio(c2h4, ch4));
    put(12, safe_ratio(c2h4, c2h6));
    put(13, safe_ratio(c2h4, h2) + safe_ratio(c2h4, ch4));
    put(19, t.th);
    put(20, t.thd);
    put(21, t.thh);
    put(22, t.tch);

    // gas / THD covers H2, CH4, C2H6, C2H4, C2H2 even though THD omits H2 and C2H6.
    for (block, total) in [(23, t.thd), (28, t.thh), (33, t.tch)] {
        for (k, g) in gases.iter().enumerate() {
            put(block + k, safe_ratio(*g, total));
        }
    }

    Ok(FeatureVector(v))
}

/// Row-major `N × 37` matrix for a batch of samples.
pub fn feature_matrix(samples: &[GasSample]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| compute_features(s).map(|f| f.to_vec()))
        .collect()
}
