//! Elastomer constitutive model and the reduced-order extension law.
//!
//! The actuator body is a soft elastomer described by a third-order Yeoh
//! strain-energy function
//!
//! ```text
//! W(I1) = c10 (I1 - 3) + c20 (I1 - 3)^2 + c30 (I1 - 3)^3
//! ```
//!
//! with incompressible uniaxial Cauchy stress
//!
//! ```text
//! sigma(l) = 2 (l^2 - 1/l) (c10 + 2 c20 (I1 - 3) + 3 c30 (I1 - 3)^2),
//! I1 = l^2 + 2/l.
//! ```
//!
//! Full finite-element analysis of the chamber is out of scope; the coupling
//! from pressure to motion is a reduced-order extension law: tabulated
//! (pressure, length) anchor points interpolated linearly (two anchors) or
//! with a monotone cubic (three or more), never overshooting the data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Third-order Yeoh coefficients. `c10` must be positive for a stable
/// small-strain response; higher coefficients may take either sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YeohCoefficients {
    pub c10: f64,
    pub c20: f64,
    pub c30: f64,
    /// Stress/energy unit label the coefficients are expressed in. Carried
    /// through reports verbatim; the arithmetic is unit-agnostic.
    pub unit: String,
}

impl Default for YeohCoefficients {
    /// Fitted coefficients for the printed thermoplastic elastomer used in
    /// the actuator body, in MPa.
    fn default() -> Self {
        YeohCoefficients { c10: 2.61, c20: -0.561, c30: 0.0972, unit: "MPa".to_string() }
    }
}

impl YeohCoefficients {
    pub fn violations(&self, ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.c10 > 0.0) || !self.c10.is_finite() {
            v.push(format!("{ctx}.c10: must be finite and > 0, got {}", self.c10));
        }
        for (name, val) in [("c20", self.c20), ("c30", self.c30)] {
            if !val.is_finite() {
                v.push(format!("{ctx}.{name}: must be finite, got {val}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("yeoh");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { violations: v })
        }
    }
}

/// Strain energy density `W(I1)` for first invariant `i1 >= 3`.
///
/// `i1 < 3` is kinematically impossible for an incompressible material and
/// is rejected as a domain error.
pub fn yeoh_energy(c: &YeohCoefficients, i1: f64) -> Result<f64> {
    if !i1.is_finite() || i1 < 3.0 {
        return Err(Error::domain(format!(
            "first invariant {i1} below the incompressible minimum of 3"
        )));
    }
    let x = i1 - 3.0;
    Ok(c.c10 * x + c.c20 * x * x + c.c30 * x * x * x)
}

/// First invariant of the uniaxial incompressible deformation at stretch `l`.
pub fn uniaxial_invariant(lambda: f64) -> f64 {
    lambda * lambda + 2.0 / lambda
}

/// Uniaxial Cauchy stress at stretch `lambda` (same unit as the coefficients).
///
/// Positive stretch only; `sigma(1) = 0`. Consistent with [`yeoh_energy`]:
/// `sigma(l) = l * dW/dl` along the uniaxial path.
pub fn uniaxial_stress(c: &YeohCoefficients, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::domain(format!("stretch {lambda} must be > 0")));
    }
    let x = uniaxial_invariant(lambda) - 3.0;
    let dw = c.c10 + 2.0 * c.c20 * x + 3.0 * c.c30 * x * x;
    Ok(2.0 * (lambda * lambda - 1.0 / lambda) * dw)
}

/// Interpolation scheme of an [`ExtensionLaw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    MonotoneCubic,
}

/// Tabulated pressure-to-length response of one actuator chamber.
///
/// Anchors are strictly increasing in both pressure (kPa) and length (mm);
/// the first anchor sits at zero pressure (the rest length). Queries outside
/// the anchored pressure span are range errors, never extrapolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExtensionLawRepr", into = "ExtensionLawRepr")]
pub struct ExtensionLaw {
    anchors: Vec<(f64, f64)>,
    interpolation: Interpolation,
    /// Hermite tangents dL/dP at each anchor (monotone cubic only).
    tangents: Vec<f64>,
}

/// Serialized form of [`ExtensionLaw`]; tangents are derived, not stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionLawRepr {
    anchors: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interpolation: Option<Interpolation>,
}

impl TryFrom<ExtensionLawRepr> for ExtensionLaw {
    type Error = Error;
    fn try_from(repr: ExtensionLawRepr) -> Result<Self> {
        match repr.interpolation {
            Some(i) => ExtensionLaw::with_interpolation(repr.anchors, i),
            None => ExtensionLaw::new(repr.anchors),
        }
    }
}

impl From<ExtensionLaw> for ExtensionLawRepr {
    fn from(law: ExtensionLaw) -> Self {
        ExtensionLawRepr { anchors: law.anchors, interpolation: Some(law.interpolation) }
    }
}

impl Default for ExtensionLaw {
    /// Two-point law of the reference actuator: 104 mm at rest, 200.55 mm at
    /// 100 kPa, linear in between.
    fn default() -> Self {
        ExtensionLaw::new(vec![(0.0, 104.0), (100.0, 200.55)]).expect("default law is valid")
    }
}

impl ExtensionLaw {
    /// Builds a law from anchors, choosing linear interpolation for two
    /// anchors and a monotone cubic for three or more.
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        let interpolation =
            if anchors.len() <= 2 { Interpolation::Linear } else { Interpolation::MonotoneCubic };
        ExtensionLaw::with_interpolation(anchors, interpolation)
    }

    /// Builds a law with an explicit interpolation scheme.
    pub fn with_interpolation(anchors: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        let violations = Self::anchor_violations(&anchors, "extension_law");
        if !violations.is_empty() {
            return Err(Error::Validation { violations });
        }
        let tangents = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::MonotoneCubic => monotone_tangents(&anchors),
        };
        Ok(ExtensionLaw { anchors, interpolation, tangents })
    }

    /// Lists anchor-set constraint violations; empty when valid.
    pub fn anchor_violations(anchors: &[(f64, f64)], ctx: &str) -> Vec<String> {
        let mut v = Vec::new();
        if anchors.len() < 2 {
            v.push(format!("{ctx}.anchors: need at least 2 anchors, got {}", anchors.len()));
            return v;
        }
        if anchors.iter().any(|(p, l)| !p.is_finite() || !l.is_finite()) {
            v.push(format!("{ctx}.anchors: all coordinates must be finite"));
            return v;
        }
        if anchors[0].0 != 0.0 {
            v.push(format!(
                "{ctx}.anchors: first anchor must sit at pressure 0 kPa, got {} kPa",
                anchors[0].0
            ));
        }
        for w in anchors.windows(2) {
            if w[1].0 <= w[0].0 {
                v.push(format!(
                    "{ctx}.anchors: pressures must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                ));
            }
            if w[1].1 <= w[0].1 {
                v.push(format!(
                    "{ctx}.anchors: lengths must be strictly increasing ({} then {})",
                    w[0].1, w[1].1
                ));
            }
        }
        v
    }

    /// Reads a law from two-column CSV text: a mandatory header row naming
    /// the columns (pressure_kPa, length_mm) followed by numeric rows.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Validation { violations: vec!["csv: file is empty".into()] })?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 2 || fields[0].parse::<f64>().is_ok() {
            return Err(Error::Validation {
                violations: vec![format!(
                    "csv line 1: expected a two-column header row such as \
                     'pressure_kPa,length_mm', got '{header}'"
                )],
            });
        }
        let mut anchors = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::Validation {
                    violations: vec![format!("csv line {}: expected 2 columns, got {}", idx + 1, cols.len())],
                });
            }
            let p: f64 = cols[0].parse().map_err(|_| Error::Validation {
                violations: vec![format!("csv line {}: bad pressure '{}'", idx + 1, cols[0])],
            })?;
            let l: f64 = cols[1].parse().map_err(|_| Error::Validation {
                violations: vec![format!("csv line {}: bad length '{}'", idx + 1, cols[1])],
            })?;
            anchors.push((p, l));
        }
        ExtensionLaw::new(anchors)
    }

    /// Reads a law from a CSV file on disk.
    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExtensionLaw::from_csv_str(&text)
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Rest length L(0), mm.
    pub fn rest_length_mm(&self) -> f64 {
        self.anchors[0].1
    }

    /// Largest anchored pressure, kPa.
    pub fn max_pressure_kpa(&self) -> f64 {
        self.anchors[self.anchors.len() - 1].0
    }

    /// Chamber length (mm) at `pressure` (kPa).
    ///
    /// Exact at anchors; monotone nondecreasing in pressure; a range error
    /// outside the anchored span.
    pub fn length_at(&self, pressure: f64) -> Result<f64> {
        let (lo, hi) = (self.anchors[0].0, self.max_pressure_kpa());
        if !pressure.is_finite() || pressure < lo || pressure > hi {
            return Err(Error::range(format!(
                "pressure {pressure} kPa outside the anchored span [{lo}, {hi}] kPa"
            )));
        }
        // Anchor hits are returned exactly regardless of the scheme.
        let seg = match self.anchors.iter().position(|&(p, _)| p >= pressure) {
            Some(i) if self.anchors[i].0 == pressure => return Ok(self.anchors[i].1),
            Some(i) => i - 1,
            None => unreachable!("pressure bounded by the last anchor"),
        };
        let (p0, l0) = self.anchors[seg];
        let (p1, l1) = self.anchors[seg + 1];
        let h = p1 - p0;
        let t = (pressure - p0) / h;
        Ok(match self.interpolation {
            Interpolation::Linear => l0 + (l1 - l0) * t,
            Interpolation::MonotoneCubic => {
                let (m0, m1) = (self.tangents[seg], self.tangents[seg + 1]);
                hermite(l0, l1, m0 * h, m1 * h, t)
            }
        })
    }

    /// Inverse lookup: pressure (kPa) at which the chamber reaches `length`
    /// (mm). Range error outside the anchored length span.
    pub fn pressure_for_length(&self, length: f64) -> Result<f64> {
        let lo = self.rest_length_mm();
        let hi = self.anchors[self.anchors.len() - 1].1;
        if !length.is_finite() || length < lo || length > hi {
            return Err(Error::range(format!(
                "length {length} mm outside the anchored span [{lo}, {hi}] mm"
            )));
        }
        let seg = match self.anchors.iter().position(|&(_, l)| l >= length) {
            Some(i) if self.anchors[i].1 == length => return Ok(self.anchors[i].0),
            Some(i) => i - 1,
            None => unreachable!("length bounded by the last anchor"),
        };
        let (p0, l0) = self.anchors[seg];
        let (p1, l1) = self.anchors[seg + 1];
        match self.interpolation {
            Interpolation::Linear => Ok(p0 + (p1 - p0) * (length - l0) / (l1 - l0)),
            Interpolation::MonotoneCubic => {
                // Bisection on the monotone segment.
                let (mut a, mut b) = (p0, p1);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if self.length_at(mid)? < length {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                Ok(0.5 * (a + b))
            }
        }
    }
}

/// Cubic Hermite basis on t in [0, 1] with endpoint slopes scaled by h.
fn hermite(l0: f64, l1: f64, m0h: f64, m1h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * l0
        + (t3 - 2.0 * t2 + t) * m0h
        + (-2.0 * t3 + 3.0 * t2) * l1
        + (t3 - t2) * m1h
}

/// Fritsch-Carlson tangents: monotone data in, monotone interpolant out.
fn monotone_tangents(anchors: &[(f64, f64)]) -> Vec<f64> {
    let n = anchors.len();
    let secants: Vec<f64> = anchors
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        m[i] = 0.5 * (secants[i - 1] + secants[i]);
    }
    // Limit tangents so no segment overshoots its endpoints.
    for i in 0..n - 1 {
        let d = secants[i];
        let a = m[i] / d;
        let b = m[i + 1] / d;
        let r = a * a + b * b;
        if r > 9.0 {
            let scale = 3.0 / r.sqrt();
            m[i] = scale * a * d;
            m[i + 1] = scale * b * d;
        }
    }
    m
}
