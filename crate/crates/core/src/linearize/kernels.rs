//! Division-free secant kernels in midpoint-radius form.
//!
//! Every kernel maps the argument pair(s) `(mid, rad)` to the result pair and
//! the secant slope(s) `c` with `c * rad_in = rad_out`. When all argument
//! radii vanish the tangent rule applies, so coalesced points reproduce the
//! tangent model bit for bit.

use thiserror::Error;

use super::special::{artanhc, sinc, sinhc};
use crate::tape::{CustomElemental, Opcode};

/// A pair of traces `(lo, hi)` stored as midpoint and signed radius,
/// `lo = mid - rad`, `hi = mid + rad`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct MidRad {
    pub mid: f64,
    pub rad: f64,
}

impl MidRad {
    pub fn new(mid: f64, rad: f64) -> Self {
        Self { mid, rad }
    }

    pub fn point(v: f64) -> Self {
        Self { mid: v, rad: 0.0 }
    }

    pub fn from_endpoints(lo: f64, hi: f64) -> Self {
        Self {
            mid: 0.5 * (lo + hi),
            rad: 0.5 * (hi - lo),
        }
    }

    pub fn lo(&self) -> f64 {
        self.mid - self.rad
    }

    pub fn hi(&self) -> f64 {
        self.mid + self.rad
    }

    pub fn is_point(&self) -> bool {
        self.rad == 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("{0}")]
    Domain(String),
    #[error("derivative undefined: {0}")]
    Derivative(String),
}

fn finite(m: MidRad, slopes: &[f64], what: &str) -> Result<(), KernelError> {
    if m.mid.is_finite() && m.rad.is_finite() && slopes.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(KernelError::Domain(format!("{what} produced a non-finite value")))
    }
}

pub fn add(a: MidRad, b: MidRad) -> (MidRad, [f64; 2]) {
    (MidRad::new(a.mid + b.mid, a.rad + b.rad), [1.0, 1.0])
}

pub fn sub(a: MidRad, b: MidRad) -> (MidRad, [f64; 2]) {
    (MidRad::new(a.mid - b.mid, a.rad - b.rad), [1.0, -1.0])
}

pub fn mul(a: MidRad, b: MidRad) -> Result<(MidRad, [f64; 2]), KernelError> {
    let out = MidRad::new(
        a.mid * b.mid + a.rad * b.rad,
        a.rad * b.mid + a.mid * b.rad,
    );
    let slopes = [b.mid, a.mid];
    finite(out, &slopes, "mul")?;
    Ok((out, slopes))
}

/// Quotient `a / b`. The slopes `(b.mid/den, -a.mid/den)` with
/// `den = b.lo * b.hi` make the model coincide with `a * recip(b)`.
pub fn div(a: MidRad, b: MidRad) -> Result<(MidRad, [f64; 2]), KernelError> {
    if b.lo() == 0.0 || b.hi() == 0.0 {
        return Err(KernelError::Domain("division by zero".into()));
    }
    let (out, slopes) = if a.is_point() && b.is_point() {
        let v = a.mid / b.mid;
        (MidRad::point(v), [1.0 / b.mid, -a.mid / (b.mid * b.mid)])
    } else {
        let den = b.lo() * b.hi();
        (
            MidRad::new(
                (a.mid * b.mid - a.rad * b.rad) / den,
                (a.rad * b.mid - a.mid * b.rad) / den,
            ),
            [b.mid / den, -a.mid / den],
        )
    };
    finite(out, &slopes, "div")?;
    Ok((out, slopes))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Smooth univariate kernels of the library.
pub fn unary(op: Opcode, u: MidRad) -> Result<(MidRad, f64), KernelError> {
    let (m, d) = (u.mid, u.rad);
    let point = u.is_point();
    let (out, c) = match op {
        Opcode::Neg => (MidRad::new(-m, -d), -1.0),
        Opcode::Sin => {
            if point {
                (MidRad::point(m.sin()), m.cos())
            } else {
                let (s, co) = m.sin_cos();
                (MidRad::new(s * d.cos(), co * d.sin()), co * sinc(d))
            }
        }
        Opcode::Cos => {
            if point {
                (MidRad::point(m.cos()), -m.sin())
            } else {
                let (s, co) = m.sin_cos();
                (MidRad::new(co * d.cos(), -s * d.sin()), -s * sinc(d))
            }
        }
        Opcode::Exp => {
            let e = m.exp();
            if point {
                (MidRad::point(e), e)
            } else {
                (MidRad::new(e * d.cosh(), e * d.sinh()), e * sinhc(d))
            }
        }
        Opcode::Log => {
            if !(u.lo() > 0.0 && u.hi() > 0.0) {
                return Err(KernelError::Domain(format!(
                    "log over [{}, {}]",
                    u.lo(),
                    u.hi()
                )));
            }
            if point {
                (MidRad::point(m.ln()), 1.0 / m)
            } else {
                let t = d / m;
                let ac = artanhc(t).map_err(|e| KernelError::Domain(e.to_string()))?;
                (
                    MidRad::new(m.ln() + 0.5 * (-t * t).ln_1p(), t.atanh()),
                    ac / m,
                )
            }
        }
        Opcode::Sqrt => {
            if !(u.lo() >= 0.0 && u.hi() >= 0.0) {
                return Err(KernelError::Domain(format!(
                    "sqrt over [{}, {}]",
                    u.lo(),
                    u.hi()
                )));
            }
            if point {
                let r = m.sqrt();
                if r == 0.0 {
                    return Err(KernelError::Derivative("sqrt at 0".into()));
                }
                (MidRad::point(r), 0.5 / r)
            } else {
                let sum = u.lo().sqrt() + u.hi().sqrt();
                (MidRad::new(0.5 * sum, d / sum), 1.0 / sum)
            }
        }
        Opcode::Square => (MidRad::new(m * m + d * d, 2.0 * m * d), 2.0 * m),
        Opcode::PowInt(k) => {
            if point {
                (MidRad::point(m.powi(k as i32)), k as f64 * m.powi(k as i32 - 1))
            } else {
                let (mut even, mut odd, mut slope) = (0.0, 0.0, 0.0);
                for j in 0..=k {
                    let coef = binomial(k, j) * m.powi((k - j) as i32);
                    if j % 2 == 0 {
                        even += coef * d.powi(j as i32);
                    } else {
                        slope += coef * d.powi(j as i32 - 1);
                        odd += coef * d.powi(j as i32);
                    }
                }
                (MidRad::new(even, odd), slope)
            }
        }
        Opcode::Recip => {
            if u.lo() == 0.0 || u.hi() == 0.0 {
                return Err(KernelError::Domain("reciprocal of zero".into()));
            }
            if point {
                (MidRad::point(1.0 / m), -1.0 / (m * m))
            } else {
                let den = u.lo() * u.hi();
                (MidRad::new(m / den, -d / den), -1.0 / den)
            }
        }
        other => panic!("{} is not a smooth univariate", other.name()),
    };
    finite(out, &[c], op.name())?;
    Ok((out, c))
}

/// Relative radius below which a custom secant slope falls back to averaged
/// partial derivatives instead of a difference quotient.
const CUSTOM_FALLBACK: f64 = 1.0 / 1_048_576.0;

/// Secant kernel for user elementals.
///
/// Slopes are Shapley averages of the difference quotients over the corners of
/// the argument box, so `sum_j c_j * rad_j = (phi(hi) - phi(lo)) / 2` holds
/// exactly and the model interpolates at both endpoints. For a product this
/// reduces to the midpoint product rule.
pub fn custom(elem: &CustomElemental, args: &[MidRad]) -> Result<(MidRad, Vec<f64>), KernelError> {
    let k = args.len();
    let undefined =
        |at: &[f64]| KernelError::Domain(format!("{} undefined at {:?}", elem.name(), at));
    let eval = |at: &[f64]| elem.value(at).ok_or_else(|| undefined(at));
    let grad = |at: &[f64]| -> Result<Vec<f64>, KernelError> {
        let mut g = vec![0.0; k];
        if elem.partials(at, &mut g) {
            Ok(g)
        } else {
            Err(KernelError::Derivative(format!(
                "{} partials undefined at {:?}",
                elem.name(),
                at
            )))
        }
    };
    let mids: Vec<f64> = args.iter().map(|a| a.mid).collect();

    if args.iter().all(MidRad::is_point) {
        let v = eval(&mids)?;
        let g = grad(&mids)?;
        return Ok((MidRad::point(v), g));
    }

    if k == 1 && elem.series_kernel() {
        let mut d = [0.0; 9];
        if !elem.taylor(mids[0], &mut d) {
            return Err(undefined(&mids));
        }
        let r = args[0].rad;
        let (mut even, mut odd, mut slope) = (0.0, 0.0, 0.0);
        let mut fact = 1.0;
        for (j, dj) in d.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            let term = dj / fact;
            if j % 2 == 0 {
                even += term * r.powi(j as i32);
            } else {
                odd += term * r.powi(j as i32);
                slope += term * r.powi(j as i32 - 1);
            }
        }
        let out = MidRad::new(even, odd);
        finite(out, &[slope], elem.name())?;
        return Ok((out, vec![slope]));
    }

    // Corner `mask` takes hi in coordinate j when bit j is set, lo otherwise.
    let corner = |mask: usize| -> Vec<f64> {
        args.iter()
            .enumerate()
            .map(|(j, a)| if mask >> j & 1 == 1 { a.hi() } else { a.lo() })
            .collect()
    };
    let mut values = vec![0.0; 1 << k];
    for (mask, v) in values.iter_mut().enumerate() {
        *v = eval(&corner(mask))?;
    }
    let full = (1 << k) - 1;
    let out = MidRad::new(0.5 * (values[0] + values[full]), 0.5 * (values[full] - values[0]));

    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    let weight = |size: usize| fact(size) * fact(k - 1 - size) / fact(k);
    let mut slopes = vec![0.0; k];
    for (j, a) in args.iter().enumerate() {
        let bit = 1 << j;
        let small = a.rad.abs() <= CUSTOM_FALLBACK * (1.0 + a.mid.abs());
        let mut acc = 0.0;
        for mask in (0..=full).filter(|m| m & bit == 0) {
            let w = weight(mask.count_ones() as usize);
            if small {
                let mut at = corner(mask);
                at[j] = a.mid;
                acc += w * grad(&at)?[j];
            } else {
                acc += w * (values[mask | bit] - values[mask]) / (2.0 * a.rad);
            }
        }
        slopes[j] = acc;
    }
    finite(out, &slopes, elem.name())?;
    Ok((out, slopes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn quotient(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        (f(hi) - f(lo)) / (hi - lo)
    }

    #[test]
    fn log_slope_matches_quotient() {
        let e2 = std::f64::consts::E.powi(2);
        let (_, c) = unary(Opcode::Log, MidRad::from_endpoints(1.0, e2)).unwrap();
        let want = 2.0 / (e2 - 1.0);
        assert!((c - want).abs() < 1e-15 * want);
    }

    #[test]
    fn square_secant() {
        let (out, c) = unary(Opcode::Square, MidRad::from_endpoints(1.0, 3.0)).unwrap();
        assert_eq!(out, MidRad::new(5.0, 4.0));
        assert_eq!(c, 4.0);
    }

    #[test]
    fn monomials_interpolate() {
        for k in 2..9 {
            let u = MidRad::from_endpoints(-1.3, 0.7);
            let (out, c) = unary(Opcode::PowInt(k), u).unwrap();
            let f = |x: f64| x.powi(k as i32);
            assert!((out.lo() - f(-1.3)).abs() < 1e-14);
            assert!((out.hi() - f(0.7)).abs() < 1e-14);
            assert!((c - quotient(-1.3, 0.7, f)).abs() < 1e-13);
        }
    }

    #[test]
    fn sqrt_with_zero_endpoint() {
        let (out, c) = unary(Opcode::Sqrt, MidRad::from_endpoints(0.0, 4.0)).unwrap();
        assert_eq!(out, MidRad::new(1.0, 1.0));
        assert_eq!(c, 0.5);
        assert!(matches!(
            unary(Opcode::Sqrt, MidRad::point(0.0)),
            Err(KernelError::Derivative(_))
        ));
    }

    #[test]
    fn division_interpolates_and_matches_recip_product() {
        let a = MidRad::from_endpoints(2.0, -1.0);
        let b = MidRad::from_endpoints(0.5, 3.0);
        let (q, s) = div(a, b).unwrap();
        assert!((q.lo() - 4.0).abs() < 1e-15);
        assert!((q.hi() + 1.0 / 3.0).abs() < 1e-15);
        assert!((s[0] * a.rad + s[1] * b.rad - q.rad).abs() < 1e-15);
        let (r, cr) = unary(Opcode::Recip, b).unwrap();
        let (p, sp) = mul(a, r).unwrap();
        assert!((p.mid - q.mid).abs() < 1e-15);
        assert!((sp[0] - s[0]).abs() < 1e-15);
        assert!((sp[1] * cr - s[1]).abs() < 1e-15);
    }

    #[test]
    fn product_custom_reduces_to_product_rule() {
        let prod = CustomElemental::new(
            "prod",
            2,
            Arc::new(|a: &[f64]| Some(a[0] * a[1])),
            Arc::new(|a: &[f64], g: &mut [f64]| {
                g[0] = a[1];
                g[1] = a[0];
                true
            }),
        );
        let u = MidRad::from_endpoints(1.0, 2.0);
        let w = MidRad::from_endpoints(-3.0, 5.0);
        let (out, s) = custom(&prod, &[u, w]).unwrap();
        let (want, ws) = mul(u, w).unwrap();
        assert!((out.mid - want.mid).abs() < 1e-15);
        assert!((out.rad - want.rad).abs() < 1e-15);
        assert!((s[0] - ws[0]).abs() < 1e-15 && (s[1] - ws[1]).abs() < 1e-15);
    }

    #[test]
    fn custom_slopes_telescope() {
        let f = CustomElemental::new(
            "f",
            3,
            Arc::new(|a: &[f64]| Some(a[0].sin() * a[1].exp() + a[2] * a[0])),
            Arc::new(|a: &[f64], g: &mut [f64]| {
                g[0] = a[0].cos() * a[1].exp() + a[2];
                g[1] = a[0].sin() * a[1].exp();
                g[2] = a[0];
                true
            }),
        );
        let args = [
            MidRad::from_endpoints(0.1, 1.2),
            MidRad::from_endpoints(-0.4, 0.3),
            MidRad::from_endpoints(2.0, 1.0),
        ];
        let (out, s) = custom(&f, &args).unwrap();
        let sum: f64 = s.iter().zip(&args).map(|(c, a)| c * a.rad).sum();
        assert!((sum - out.rad).abs() < 1e-15);
    }

    #[test]
    fn series_kernel_matches_closed_form() {
        let taylor: crate::tape::TaylorFn = Arc::new(|u: f64, d: &mut [f64; 9]| {
            let e = u.exp();
            d.iter_mut().for_each(|x| *x = e);
            true
        });
        let f = CustomElemental::univariate("myexp", f64::exp, f64::exp)
            .with_taylor(taylor)
            .with_series_kernel(true);
        let u = MidRad::new(0.3, 1e-3);
        let (out, s) = custom(&f, &[u]).unwrap();
        let (want, c) = unary(Opcode::Exp, u).unwrap();
        assert!((out.mid - want.mid).abs() < 1e-15);
        assert!((out.rad - want.rad).abs() < 1e-15);
        assert!((s[0] - c).abs() < 1e-15);
    }
}
