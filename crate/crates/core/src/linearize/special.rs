//! `sin(t)/t`, `sinh(t)/t` and `artanh(t)/t` with their removable singularity
//! at zero resolved.
//!
//! Below `|t| < 2^-13` a four-term even series is used; its truncation error
//! is below `t^8/9! < 1e-36`. Above the threshold the closed forms carry no
//! cancellation.

use thiserror::Error;

const SERIES_THRESHOLD: f64 = 1.0 / 8192.0;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("artanhc is undefined for |t| >= 1 (t = {0})")]
pub struct ArtanhcDomainError(pub f64);

pub fn sinc(t: f64) -> f64 {
    if t.abs() < SERIES_THRESHOLD {
        let t2 = t * t;
        1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    } else {
        t.sin() / t
    }
}

pub fn sinhc(t: f64) -> f64 {
    if t.abs() < SERIES_THRESHOLD {
        let t2 = t * t;
        1.0 + t2 / 6.0 * (1.0 + t2 / 20.0 * (1.0 + t2 / 42.0))
    } else {
        t.sinh() / t
    }
}

pub fn artanhc(t: f64) -> Result<f64, ArtanhcDomainError> {
    if !(t.abs() < 1.0) {
        return Err(ArtanhcDomainError(t));
    }
    Ok(if t.abs() < SERIES_THRESHOLD {
        let t2 = t * t;
        1.0 + t2 * (1.0 / 3.0 + t2 * (1.0 / 5.0 + t2 / 7.0))
    } else {
        // std atanh loses accuracy near -1; the function is even.
        let a = t.abs();
        a.atanh() / a
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removable_singularities() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinhc(0.0), 1.0);
        assert_eq!(artanhc(0.0), Ok(1.0));
        assert_eq!(sinc(-0.0), 1.0);
    }

    #[test]
    fn sinc_at_pi() {
        assert!(sinc(std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn sinhc_tiny_argument() {
        // 1 + 1e-16/6 rounds to the double nearest that value.
        let v = sinhc(1e-8);
        assert_eq!(v, 1.0 + 1e-16 / 6.0);
        assert!(v >= 1.0);
    }

    #[test]
    fn artanhc_domain() {
        assert!(artanhc(1.0).is_err());
        assert!(artanhc(-1.5).is_err());
        assert!(artanhc(f64::NAN).is_err());
        assert!(artanhc(0.999).is_ok());
    }

    #[test]
    fn artanhc_is_even_near_minus_one() {
        let t = -0.9999999999999999;
        assert_eq!(artanhc(t), artanhc(-t));
    }

    #[test]
    fn continuity_across_threshold() {
        let t = SERIES_THRESHOLD;
        for f in [sinc, sinhc, |x| artanhc(x).unwrap()] {
            let below = f(t * (1.0 - 1e-12));
            let above = f(t * (1.0 + 1e-12));
            assert!((below - above).abs() < 4e-16, "{below} vs {above}");
        }
    }
}
