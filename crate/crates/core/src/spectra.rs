//! Roughness spectra `sigma(k) = sigma_11(k) + sigma_22(k)` (nm^4), summed over
//! both plates with no cross-correlation.
//!
//! Moments use the isotropic 2-D measure `d^2k / (4 pi^2) = k dk / (2 pi)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{self, QuadratureError};

pub const CSV_HEADER: [&str; 2] = ["k_nm_inv", "sigma_nm4"];

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("invalid spectrum parameter: {0}")]
    InvalidParameter(String),
    #[error("wavevector must be finite and >= 0, got {0}")]
    NegativeWavevector(f64),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cannot read spectrum file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `sigma(k) = a^2 pi l_C^2 exp(-k^2 l_C^2 / 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSpectrum {
    /// Variance `a^2`, nm^2.
    pub a2: f64,
    /// Correlation length `l_C`, nm.
    pub l_c: f64,
}

impl GaussianSpectrum {
    pub fn new(a2: f64, l_c: f64) -> Result<Self, SpectrumError> {
        if !(a2.is_finite() && a2 > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!("a^2 must be > 0, got {a2}")));
        }
        if !(l_c.is_finite() && l_c > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!("l_C must be > 0, got {l_c}")));
        }
        Ok(GaussianSpectrum { a2, l_c })
    }

    /// From the rms amplitude `a` instead of the variance.
    pub fn from_amplitude(a: f64, l_c: f64) -> Result<Self, SpectrumError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(SpectrumError::InvalidParameter(format!("a must be > 0, got {a}")));
        }
        GaussianSpectrum::new(a * a, l_c)
    }

    pub fn sigma(&self, k: f64) -> f64 {
        let x = k * self.l_c;
        self.a2 * PI * self.l_c * self.l_c * (-0.25 * x * x).exp()
    }
}

/// Measured spectrum: linear interpolation between samples, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedSpectrum {
    samples: Vec<(f64, f64)>,
}

impl TabulatedSpectrum {
    /// Samples `(k, sigma)` must have strictly increasing `k >= 0` and
    /// `sigma >= 0`; at least two are required.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, SpectrumError> {
        if samples.len() < 2 {
            return Err(SpectrumError::InvalidParameter(format!(
                "a tabulated spectrum needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(k, s)) in samples.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(SpectrumError::InvalidParameter(format!("sample {i}: k = {k} is not >= 0")));
            }
            if !(s.is_finite() && s >= 0.0) {
                return Err(SpectrumError::InvalidParameter(format!("sample {i}: sigma = {s} is negative")));
            }
            if i > 0 && k <= samples[i - 1].0 {
                return Err(SpectrumError::InvalidParameter(format!(
                    "sample {i}: k = {k} does not increase"
                )));
            }
        }
        Ok(TabulatedSpectrum { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn sigma(&self, k: f64) -> f64 {
        let s = &self.samples;
        if k < s[0].0 || k > s[s.len() - 1].0 {
            return 0.0;
        }
        let i = s.partition_point(|&(kk, _)| kk <= k);
        if i == s.len() {
            return s[s.len() - 1].1;
        }
        let (k0, s0) = s[i - 1];
        let (k1, s1) = s[i];
        s0 + (s1 - s0) * (k - k0) / (k1 - k0)
    }

    /// `int k^n sigma(k) dk` of the interpolant, exact for `n <= 4`
    /// (three-point Gauss-Legendre per segment).
    fn moment(&self, n: i32) -> f64 {
        const NODES: [(f64, f64); 3] = [
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ];
        self.samples
            .windows(2)
            .map(|w| {
                let ((k0, s0), (k1, s1)) = (w[0], w[1]);
                let half = 0.5 * (k1 - k0);
                NODES
                    .iter()
                    .map(|&(x, wt)| {
                        let t = 0.5 * (1.0 + x);
                        let k = k0 + half * (1.0 + x);
                        wt * k.powi(n) * (s0 + (s1 - s0) * t)
                    })
                    .sum::<f64>()
                    * half
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoughnessSpectrum {
    Gaussian(GaussianSpectrum),
    Tabulated(TabulatedSpectrum),
}

impl RoughnessSpectrum {
    pub fn gaussian(a2: f64, l_c: f64) -> Result<Self, SpectrumError> {
        Ok(RoughnessSpectrum::Gaussian(GaussianSpectrum::new(a2, l_c)?))
    }

    /// `sigma(k)` in nm^4 at `k` in nm^-1.
    pub fn sigma(&self, k: f64) -> Result<f64, SpectrumError> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(SpectrumError::NegativeWavevector(k));
        }
        Ok(self.sigma_unchecked(k))
    }

    pub(crate) fn sigma_unchecked(&self, k: f64) -> f64 {
        match self {
            RoughnessSpectrum::Gaussian(g) => g.sigma(k),
            RoughnessSpectrum::Tabulated(t) => t.sigma(k),
        }
    }

    /// `a^2 = int d^2k/(4 pi^2) sigma(k)`, nm^2.
    pub fn variance(&self, rel_tol: f64) -> Result<f64, SpectrumError> {
        match self {
            RoughnessSpectrum::Gaussian(g) => {
                // k = x / l_C puts the Gaussian on a unit scale.
                let lc = g.l_c;
                let r = quadrature::integrate_semi_infinite(
                    |x| x * g.sigma(x / lc) / (2.0 * PI * lc * lc),
                    rel_tol,
                )?;
                Ok(r.value)
            }
            RoughnessSpectrum::Tabulated(t) => Ok(t.moment(1) / (2.0 * PI)),
        }
    }

    /// Spectral mean `<k^2>` under the weight `k sigma(k)`; `None` for a zero
    /// spectrum.
    pub fn mean_square_wavevector(&self) -> Option<f64> {
        match self {
            RoughnessSpectrum::Gaussian(g) => Some(4.0 / (g.l_c * g.l_c)),
            RoughnessSpectrum::Tabulated(t) => {
                let m1 = t.moment(1);
                (m1 > 0.0).then(|| t.moment(3) / m1)
            }
        }
    }

    /// Correlation length `2 / sqrt(<k^2>)`, exact for the Gaussian model.
    pub fn correlation_length(&self) -> Option<f64> {
        match self {
            RoughnessSpectrum::Gaussian(g) => Some(g.l_c),
            RoughnessSpectrum::Tabulated(_) => {
                self.mean_square_wavevector().map(|m| 2.0 / m.sqrt())
            }
        }
    }
}

impl fmt::Display for RoughnessSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoughnessSpectrum::Gaussian(g) => write!(f, "gaussian:a={},lc={}", g.a2.sqrt(), g.l_c),
            RoughnessSpectrum::Tabulated(t) => write!(f, "tabulated:{} samples", t.samples.len()),
        }
    }
}

/// Parses `gaussian:a=<nm>,lc=<nm>` with `a` the rms amplitude.
impl FromStr for RoughnessSpectrum {
    type Err = SpectrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| SpectrumError::InvalidParameter(msg);
        let rest = s
            .trim()
            .strip_prefix("gaussian:")
            .ok_or_else(|| bad(format!("expected 'gaussian:a=<nm>,lc=<nm>', got '{s}'")))?;
        let (mut a, mut lc) = (None, None);
        for part in rest.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got '{part}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("'{}' is not a number", value.trim())))?;
            match key.trim() {
                "a" => a = Some(value),
                "lc" | "l_c" => lc = Some(value),
                other => return Err(bad(format!("unknown gaussian parameter '{other}'"))),
            }
        }
        let a = a.ok_or_else(|| bad("missing a=<nm>".into()))?;
        let lc = lc.ok_or_else(|| bad("missing lc=<nm>".into()))?;
        Ok(RoughnessSpectrum::Gaussian(GaussianSpectrum::from_amplitude(a, lc)?))
    }
}

/// Reads a spectrum CSV: header `k_nm_inv,sigma_nm4`, one `k,sigma` pair per
/// line, `#` comments.
pub fn parse_spectrum<R: Read>(reader: R) -> Result<RoughnessSpectrum, SpectrumError> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let headers = csv
        .headers()
        .map_err(|e| SpectrumError::Parse {
            line: e.position().map_or(1, |p| p.line()),
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(SpectrumError::Parse {
            line: headers.position().map_or(1, |p| p.line()).max(1),
            message: format!(
                "expected header '{}', got '{}'",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut samples: Vec<(f64, f64)> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| SpectrumError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| SpectrumError::Parse { line, message };
        if record.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", record.len())));
        }
        let number = |i: usize| -> Result<f64, SpectrumError> {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("'{}' is not a finite number", &record[i])))
        };
        let (k, sigma) = (number(0)?, number(1)?);
        if k < 0.0 {
            return Err(err(format!("negative wavevector {k}")));
        }
        if sigma < 0.0 {
            return Err(err(format!("negative spectrum value {sigma}")));
        }
        if let Some(&(prev, _)) = samples.last() {
            if k == prev {
                return Err(err(format!("duplicate wavevector {k}")));
            }
            if k < prev {
                return Err(err(format!("wavevector {k} is smaller than the previous {prev}")));
            }
        }
        samples.push((k, sigma));
    }
    let count = samples.len();
    TabulatedSpectrum::new(samples)
        .map(RoughnessSpectrum::Tabulated)
        .map_err(|e| SpectrumError::Parse {
            line: count as u64 + 1,
            message: e.to_string(),
        })
}

pub fn load_spectrum<P: AsRef<Path>>(path: P) -> Result<RoughnessSpectrum, SpectrumError> {
    let file = std::fs::File::open(path)?;
    parse_spectrum(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<RoughnessSpectrum, SpectrumError> {
        parse_spectrum(text.as_bytes())
    }

    fn parse_line(text: &str) -> u64 {
        match parse(text) {
            Err(SpectrumError::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_values() {
        let g = RoughnessSpectrum::gaussian(4.0, 10.0).unwrap();
        let peak = 4.0 * PI * 100.0;
        assert!((g.sigma(0.0).unwrap() - peak).abs() < 1e-12 * peak);
        assert!((g.sigma(0.2).unwrap() - peak / std::f64::consts::E).abs() < 1e-12 * peak);
        assert!(g.sigma(-1.0).is_err());
    }

    #[test]
    fn gaussian_variance() {
        let g = RoughnessSpectrum::gaussian(25.0, 60.0).unwrap();
        assert!((g.variance(1e-10).unwrap() - 25.0).abs() < 25.0 * 1e-9);
    }

    #[test]
    fn tabulated_interpolation() {
        let t = RoughnessSpectrum::Tabulated(TabulatedSpectrum::new(vec![(0.0, 4.0), (1.0, 0.0)]).unwrap());
        assert_eq!(t.sigma(0.5).unwrap(), 2.0);
        assert_eq!(t.sigma(1.5).unwrap(), 0.0);
        assert_eq!(t.sigma(1.0).unwrap(), 0.0);
        assert_eq!(t.sigma(0.0).unwrap(), 4.0);
    }

    #[test]
    fn zero_spectrum() {
        let t = RoughnessSpectrum::Tabulated(TabulatedSpectrum::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap());
        assert_eq!(t.variance(1e-8).unwrap(), 0.0);
        assert!(t.correlation_length().is_none());
    }

    #[test]
    fn narrow_box_variance() {
        // Box of height s0 on [k0, k0 + d]: (1/2pi) int k s0 dk = s0 (2 k0 d + d^2) / (4 pi).
        let (k0, d, s0) = (0.3, 1e-6, 7.0);
        let eps = 1e-12;
        let t = TabulatedSpectrum::new(vec![(k0 - eps, 0.0), (k0, s0), (k0 + d, s0), (k0 + d + eps, 0.0)]).unwrap();
        let v = RoughnessSpectrum::Tabulated(t).variance(1e-8).unwrap();
        let strip = k0 * s0 * d / (2.0 * PI);
        assert!((v - strip).abs() < 1e-5 * strip);
    }

    #[test]
    fn tabulated_gaussian_correlation_length() {
        let g = GaussianSpectrum::new(1.0, 20.0).unwrap();
        let samples = (0..4000).map(|i| {
            let k = i as f64 * 1e-3;
            (k, g.sigma(k))
        });
        let t = RoughnessSpectrum::Tabulated(TabulatedSpectrum::new(samples.collect()).unwrap());
        assert!((t.correlation_length().unwrap() - 20.0).abs() < 1e-3);
        assert!((t.variance(1e-8).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn spec_string() {
        let s: RoughnessSpectrum = "gaussian:a=5,lc=60".parse().unwrap();
        assert_eq!(s, RoughnessSpectrum::gaussian(25.0, 60.0).unwrap());
        assert!("gaussian:a=5".parse::<RoughnessSpectrum>().is_err());
        assert!("gaussian:a=x,lc=3".parse::<RoughnessSpectrum>().is_err());
        assert!("lorentz:a=1,lc=3".parse::<RoughnessSpectrum>().is_err());
        assert!("gaussian:a=-1,lc=3".parse::<RoughnessSpectrum>().is_err());
        assert!("gaussian:a=0,lc=3".parse::<RoughnessSpectrum>().is_err());
    }

    #[test]
    fn csv_two_rows() {
        let s = parse("# measured\nk_nm_inv,sigma_nm4\n0.0,10\n0.1,5\n").unwrap();
        match s {
            RoughnessSpectrum::Tabulated(t) => assert_eq!(t.samples().len(), 2),
            _ => unreachable!(),
        }
    }

    #[test]
    fn csv_errors_name_lines() {
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n0.0,1\n0.2,1\n0.1,1\n"), 4);
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n0.0,1\n0.0,2\n"), 3);
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n0.0,1\n0.1,-2\n"), 3);
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n0.0,1\n0.1,abc\n"), 3);
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n0.0,1\n0.1\n"), 3);
        assert_eq!(parse_line("k_nm_inv,sigma_nm4\n-0.1,1\n0.1,1\n"), 2);
        assert!(parse("k,sigma\n0,1\n1,1\n").is_err());
        assert!(parse("k_nm_inv,sigma_nm4\n0,1\n").is_err());
    }

    proptest! {
        #[test]
        fn gaussian_variance_independent_of_length(a2 in 1e-3f64..1e3, lc in 1e-1f64..1e4) {
            let v = RoughnessSpectrum::gaussian(a2, lc).unwrap().variance(1e-10).unwrap();
            prop_assert!((v / a2 - 1.0).abs() < 1e-6);
        }

        #[test]
        fn sigma_non_negative_and_decaying(a2 in 1e-3f64..1e3, lc in 1e-1f64..1e4, x in 0.0f64..100.0) {
            let g = RoughnessSpectrum::gaussian(a2, lc).unwrap();
            let s = g.sigma(x / lc).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert!(g.sigma(40.0 / lc).unwrap() < 1e-150 * g.sigma(0.0).unwrap());
        }
    }
}
