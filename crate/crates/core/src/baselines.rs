//! Conventional rule-based DGA diagnosers: Duval triangle, Rogers four-ratio
//! and IEC three-ratio codes. Rule constants are read from a TOML rules file;
//! a default copy is bundled (see `rules/default_rules.toml` for the schema).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{safe_ratio, FaultClass, GasSample};

pub const RULES_SCHEMA_VERSION: u32 = 1;

const BUNDLED_RULES: &str = include_str!("../rules/default_rules.toml");

/// Edge tolerance for point-in-polygon tests, in percentage points.
const EDGE_EPS: f64 = 1e-9;

/// Outcome of a rule-based diagnoser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Verdict {
    Fault(FaultClass),
    NoResult,
}

impl Verdict {
    pub fn fault(self) -> Option<FaultClass> {
        match self {
            Verdict::Fault(c) => Some(c),
            Verdict::NoResult => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Fault(c) => write!(f, "{c}"),
            Verdict::NoResult => f.write_str("NoResult"),
        }
    }
}

impl TryFrom<String> for Verdict {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        if s.eq_ignore_ascii_case("noresult") {
            Ok(Verdict::NoResult)
        } else {
            s.parse().map(Verdict::Fault)
        }
    }
}

impl From<Verdict> for String {
    fn from(v: Verdict) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleCoordinates {
    pub pct_ch4: f64,
    pub pct_c2h4: f64,
    pub pct_c2h2: f64,
}

impl TriangleCoordinates {
    /// Cartesian position used for polygon tests: (%C2H4, %C2H2).
    fn plane(self) -> (f64, f64) {
        (self.pct_c2h4, self.pct_c2h2)
    }
}

/// Relative CH4, C2H4, C2H2 percentages; `None` when all three are zero.
pub fn duval_coordinates(sample: &GasSample) -> Option<TriangleCoordinates> {
    let total = sample.ch4 + sample.c2h4 + sample.c2h2;
    if !(total > 0.0) {
        return None;
    }
    Some(TriangleCoordinates {
        pct_ch4: 100.0 * sample.ch4 / total,
        pct_c2h4: 100.0 * sample.c2h4 / total,
        pct_c2h2: 100.0 * sample.c2h2 / total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    pub verdict: Verdict,
    /// Vertices as `[pct_ch4, pct_c2h4, pct_c2h2]`.
    pub polygon: Vec<[f64; 3]>,
}

impl Zone {
    fn plane_vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.polygon.iter().map(|v| (v[1], v[2]))
    }

    fn area(&self) -> f64 {
        let pts: Vec<_> = self.plane_vertices().collect();
        let mut twice = 0.0;
        for i in 0..pts.len() {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % pts.len()];
            twice += x0 * y1 - x1 * y0;
        }
        0.5 * twice.abs()
    }

    /// Inclusive containment: points on an edge count as inside.
    pub fn contains(&self, coords: TriangleCoordinates) -> bool {
        let (px, py) = coords.plane();
        let pts: Vec<_> = self.plane_vertices().collect();
        let mut inside = false;
        for i in 0..pts.len() {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % pts.len()];
            if on_segment(px, py, x0, y0, x1, y1) {
                return true;
            }
            if (y0 > py) != (y1 > py) {
                let cross_x = x0 + (py - y0) * (x1 - x0) / (y1 - y0);
                if px < cross_x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn on_segment(px: f64, py: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return (px - x0).abs() <= EDGE_EPS && (py - y0).abs() <= EDGE_EPS;
    }
    let cross = (px - x0) * dy - (py - y0) * dx;
    if cross.abs() / len > EDGE_EPS {
        return false;
    }
    let t = ((px - x0) * dx + (py - y0) * dy) / (len * len);
    (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTable {
    pub zones: Vec<Zone>,
}

impl ZoneTable {
    /// First zone in declared order containing the point.
    pub fn zone_of(&self, coords: TriangleCoordinates) -> Option<&Zone> {
        self.zones.iter().find(|z| z.contains(coords))
    }

    fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::Rules("duval: no zones".into()));
        }
        let mut area = 0.0;
        for z in &self.zones {
            if z.polygon.len() < 3 {
                return Err(Error::Rules(format!(
                    "duval zone {}: fewer than 3 vertices",
                    z.name
                )));
            }
            for v in &z.polygon {
                let sum: f64 = v.iter().sum();
                if v.iter().any(|c| !(0.0..=100.0).contains(c)) || (sum - 100.0).abs() > 1e-6 {
                    return Err(Error::Rules(format!(
                        "duval zone {}: vertex {v:?} is not a valid triangle coordinate",
                        z.name
                    )));
                }
            }
            area += z.area();
        }
        // the triangle has area 100*100/2 in the (C2H4, C2H2) plane
        if (area - 5000.0).abs() > 1e-6 {
            return Err(Error::Rules(format!(
                "duval zones cover area {area}, expected the full triangle (5000)"
            )));
        }
        Ok(())
    }
}

/// Point lookup in declared zone order.
pub fn duval_classify(coords: TriangleCoordinates, zones: &ZoneTable) -> Verdict {
    zones
        .zone_of(coords)
        .map_or(Verdict::NoResult, |z| z.verdict)
}

pub fn duval_diagnose(sample: &GasSample, zones: &ZoneTable) -> Verdict {
    duval_coordinates(sample).map_or(Verdict::NoResult, |c| duval_classify(c, zones))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gas {
    H2,
    Ch4,
    C2h6,
    C2h4,
    C2h2,
}

impl Gas {
    pub fn of(self, s: &GasSample) -> f64 {
        match self {
            Gas::H2 => s.h2,
            Gas::Ch4 => s.ch4,
            Gas::C2h6 => s.c2h6,
            Gas::C2h4 => s.c2h4,
            Gas::C2h2 => s.c2h2,
        }
    }
}

/// Half-open band `lower <= r < upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub code: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    pub name: String,
    pub numerator: Gas,
    pub denominator: Gas,
    pub bands: Vec<Band>,
}

impl RatioSpec {
    pub fn ratio(&self, sample: &GasSample) -> f64 {
        safe_ratio(self.numerator.of(sample), self.denominator.of(sample))
    }

    pub fn code_of(&self, ratio: f64) -> Option<u8> {
        self.bands
            .iter()
            .find(|b| b.lower <= ratio && ratio < b.upper)
            .map(|b| b.code)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeRule {
    pub diagnosis: String,
    /// Allowed codes per ratio position.
    pub codes: Vec<Vec<u8>>,
    pub verdict: Verdict,
}

impl CodeRule {
    fn matches(&self, codes: &[Option<u8>]) -> bool {
        self.codes.len() == codes.len()
            && self
                .codes
                .iter()
                .zip(codes)
                .all(|(allowed, c)| c.is_some_and(|c| allowed.contains(&c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRuleTable {
    pub ratios: Vec<RatioSpec>,
    pub rules: Vec<CodeRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioDiagnosis {
    pub ratios: Vec<f64>,
    /// `None` where a ratio falls in no band.
    pub codes: Vec<Option<u8>>,
    /// Diagnosis text of the matched rule.
    pub rule: Option<String>,
    pub verdict: Verdict,
}

impl RatioRuleTable {
    pub fn diagnose(&self, sample: &GasSample) -> RatioDiagnosis {
        let ratios: Vec<f64> = self.ratios.iter().map(|r| r.ratio(sample)).collect();
        let codes: Vec<Option<u8>> = self
            .ratios
            .iter()
            .zip(&ratios)
            .map(|(spec, &r)| spec.code_of(r))
            .collect();
        let rule = self.rules.iter().find(|r| r.matches(&codes));
        RatioDiagnosis {
            verdict: rule.map_or(Verdict::NoResult, |r| r.verdict),
            rule: rule.map(|r| r.diagnosis.clone()),
            ratios,
            codes,
        }
    }

    fn validate(&self, table: &str) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::Rules(format!("{table}: no ratios")));
        }
        for spec in &self.ratios {
            let mut prev_upper = f64::NEG_INFINITY;
            for b in &spec.bands {
                if !(b.lower < b.upper) || b.lower < prev_upper {
                    return Err(Error::Rules(format!(
                        "{table} ratio {}: bands must be ordered and non-overlapping",
                        spec.name
                    )));
                }
                prev_upper = b.upper;
            }
        }
        for rule in &self.rules {
            if rule.codes.len() != self.ratios.len() {
                return Err(Error::Rules(format!(
                    "{table} rule `{}` has {} code positions, expected {}",
                    rule.diagnosis,
                    rule.codes.len(),
                    self.ratios.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn rogers_classify(sample: &GasSample, table: &RatioRuleTable) -> Verdict {
    table.diagnose(sample).verdict
}

pub fn iec_classify(sample: &GasSample, table: &RatioRuleTable) -> Verdict {
    table.diagnose(sample).verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Duval,
    Rogers,
    Iec,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Duval, Method::Rogers, Method::Iec];

    pub fn label(self) -> &'static str {
        match self {
            Method::Duval => "Duval Method",
            Method::Rogers => "Rogers Four ratio method",
            Method::Iec => "IEC method",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "duval" => Ok(Method::Duval),
            "rogers" => Ok(Method::Rogers),
            "iec" => Ok(Method::Iec),
            other => Err(format!(
                "unknown method `{other}` (expected duval|rogers|iec)"
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Duval => "duval",
            Method::Rogers => "rogers",
            Method::Iec => "iec",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub schema_version: u32,
    pub duval: ZoneTable,
    pub rogers: RatioRuleTable,
    pub iec: RatioRuleTable,
}

impl RuleSet {
    /// The rules file shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_RULES).expect("bundled rules file is valid")
    }

    pub fn bundled_source() -> &'static str {
        BUNDLED_RULES
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let rules: RuleSet = toml::from_str(text).map_err(|e| Error::Rules(e.to_string()))?;
        if rules.schema_version != RULES_SCHEMA_VERSION {
            return Err(Error::Rules(format!(
                "unsupported schema_version {} (expected {RULES_SCHEMA_VERSION})",
                rules.schema_version
            )));
        }
        rules.duval.validate()?;
        rules.rogers.validate("rogers")?;
        rules.iec.validate("iec")?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn diagnose(&self, method: Method, sample: &GasSample) -> Verdict {
        match method {
            Method::Duval => duval_diagnose(sample, &self.duval),
            Method::Rogers => rogers_classify(sample, &self.rogers),
            Method::Iec => iec_classify(sample, &self.iec),
        }
    }
}
