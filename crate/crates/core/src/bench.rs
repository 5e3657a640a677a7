//! Rotation map benchmark.
//!
//! `F(x) = R(theta) x + c` with `theta = phi(angle(x)) - angle(x)`, where
//! `angle(x)` in `[0, 2 pi)` is the polar angle of `x` and
//! `phi(psi) = psi + 8/(5 pi) psi^2 - 8/(5 pi^2) psi^3 + 2/(5 pi^3) psi^4`
//! maps `[0, 2 pi)` monotonically onto itself. An optional oscillating term
//! `sin(5000 (x1 + x2)) / 1e4` is added to both components.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::newton::{newton_secant, newton_tangent, NewtonOptions, NewtonReport};
use crate::tape::{CustomElemental, EvalProcedure, Opcode, ProcBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationConfig {
    pub c: [f64; 2],
    pub noise: bool,
    pub noise_frequency: f64,
    pub noise_amplitude: f64,
    pub start_tangent: [f64; 2],
    pub start_secant: ([f64; 2], [f64; 2]),
}

impl Default for RotationConfig {
    fn default() -> Self {
        let lo = [-3.7, -2.05];
        let hi = [7.0, 8.0];
        Self {
            c: [1.001, 10.01],
            noise: false,
            noise_frequency: 5000.0,
            noise_amplitude: 1e-4,
            start_tangent: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            start_secant: (lo, hi),
        }
    }
}

impl RotationConfig {
    pub fn with_noise(noise: bool) -> Self {
        Self {
            noise,
            ..Self::default()
        }
    }
}

/// Polar angle in `[0, 2 pi)`, undefined at the origin.
pub fn angle(x1: f64, x2: f64) -> Option<f64> {
    if x1 == 0.0 && x2 == 0.0 {
        return None;
    }
    let a = x2.atan2(x1);
    Some(if a < 0.0 { a + 2.0 * PI } else { a })
}

/// The angle as a custom elemental with partials `(-x2, x1) / r^2`.
pub fn angle_elemental() -> CustomElemental {
    CustomElemental::new(
        "angle",
        2,
        Arc::new(|a: &[f64]| angle(a[0], a[1])),
        Arc::new(|a: &[f64], g: &mut [f64]| {
            let r2 = a[0] * a[0] + a[1] * a[1];
            if r2 == 0.0 {
                return false;
            }
            g[0] = -a[1] / r2;
            g[1] = a[0] / r2;
            true
        }),
    )
}

pub fn build_rotation(cfg: &RotationConfig) -> EvalProcedure {
    let mut b = ProcBuilder::new(2);
    let id = b
        .register_custom(angle_elemental())
        .expect("fresh builder has no customs");
    let x1 = b.input(0);
    let x2 = b.input(1);
    let psi = b.custom(id, &[x1, x2]);
    // theta = phi(psi) - psi = psi^2 (a2 + psi (a3 + a4 psi))
    let a2 = b.constant(8.0 / (5.0 * PI));
    let a3 = b.constant(-8.0 / (5.0 * PI * PI));
    let a4 = b.constant(2.0 / (5.0 * PI * PI * PI));
    let t = b.mul(a4, psi);
    let t = b.add(a3, t);
    let t = b.mul(psi, t);
    let t = b.add(a2, t);
    let psi2 = b.unary(Opcode::Square, psi);
    let theta = b.mul(psi2, t);
    let ct = b.unary(Opcode::Cos, theta);
    let st = b.unary(Opcode::Sin, theta);
    let c1 = b.constant(cfg.c[0]);
    let c2 = b.constant(cfg.c[1]);

    let p = b.mul(ct, x1);
    let q = b.mul(st, x2);
    let f1 = b.sub(p, q);
    let mut f1 = b.add(f1, c1);
    let p = b.mul(st, x1);
    let q = b.mul(ct, x2);
    let f2 = b.add(p, q);
    let mut f2 = b.add(f2, c2);

    if cfg.noise {
        let s = b.add(x1, x2);
        let s = b.scale(cfg.noise_frequency, s);
        let s = b.unary(Opcode::Sin, s);
        let noise = b.scale(cfg.noise_amplitude, s);
        f1 = b.add(f1, noise);
        f2 = b.add(f2, noise);
    }
    b.finish(&[f1, f2]).expect("rotation procedure is well formed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationTables {
    pub noise: bool,
    pub tangent: NewtonReport,
    pub secant: NewtonReport,
}

/// Runs both Newton modes from the configured starts.
pub fn reproduce_tables(cfg: &RotationConfig, opts: &NewtonOptions) -> RotationTables {
    let proc = build_rotation(cfg);
    let tangent = newton_tangent(&proc, &cfg.start_tangent, opts);
    let (lo, hi) = cfg.start_secant;
    let secant = newton_secant(&proc, &lo, &hi, opts);
    RotationTables {
        noise: cfg.noise,
        tangent,
        secant,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |r| format!("{r:.11e}"))
}

impl RotationTables {
    /// Residual rows, each run listed from its first starting point.
    fn rows(&self) -> Vec<(Option<f64>, Option<f64>)> {
        let t = &self.tangent.residual_norms;
        let s = &self.secant.residual_norms;
        (0..t.len().max(s.len()))
            .map(|k| (t.get(k).copied(), s.get(k).copied()))
            .collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| iteration | residual with tangent mode | residual with secant mode |");
        let _ = writeln!(out, "|---:|---:|---:|");
        for (k, (t, s)) in self.rows().into_iter().enumerate() {
            let _ = writeln!(out, "| {k} | {} | {} |", fmt_opt(t), fmt_opt(s));
        }
        let _ = writeln!(
            out,
            "| rate | {} | {} |",
            self.tangent.rate_estimate.map_or("n/a".into(), |g| format!("{g:.6}")),
            self.secant.rate_estimate.map_or("n/a".into(), |g| format!("{g:.6}")),
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,tangent,secant\n");
        for (k, (t, s)) in self.rows().into_iter().enumerate() {
            let _ = writeln!(out, "{k},{},{}", fmt_opt(t), fmt_opt(s));
        }
        let _ = writeln!(
            out,
            "rate,{},{}",
            fmt_opt(self.tangent.rate_estimate),
            fmt_opt(self.secant.rate_estimate)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_values() {
        assert_eq!(angle(1.0, 0.0), Some(0.0));
        assert_eq!(angle(0.0, 1.0), Some(PI / 2.0));
        assert!((angle(0.0, -1.0).unwrap() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(angle(0.0, 0.0), None);
    }

    #[test]
    fn phi_is_a_monotone_bijection() {
        let phi = |p: f64| {
            p + 8.0 / (5.0 * PI) * p * p - 8.0 / (5.0 * PI * PI) * p.powi(3)
                + 2.0 / (5.0 * PI.powi(3)) * p.powi(4)
        };
        assert!((phi(2.0 * PI) - 2.0 * PI).abs() < 1e-12);
        let mut prev = phi(0.0);
        for k in 1..=1000 {
            let v = phi(2.0 * PI * k as f64 / 1000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn matches_matrix_form() {
        let p = build_rotation(&RotationConfig::default());
        for x in [[1.0, 2.0], [-3.0, 0.5], [0.2, -4.0]] {
            let psi = angle(x[0], x[1]).unwrap();
            let th = 8.0 / (5.0 * PI) * psi * psi - 8.0 / (5.0 * PI * PI) * psi.powi(3)
                + 2.0 / (5.0 * PI.powi(3)) * psi.powi(4);
            let want = [
                th.cos() * x[0] - th.sin() * x[1] + 1.001,
                th.sin() * x[0] + th.cos() * x[1] + 10.01,
            ];
            let got = p.eval(&x).unwrap();
            for i in 0..2 {
                assert!((got[i] - want[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_across_the_branch_cut() {
        let p = build_rotation(&RotationConfig::default());
        let above = p.eval(&[2.0, 1e-12]).unwrap();
        let below = p.eval(&[2.0, -1e-12]).unwrap();
        assert!((above[0] - below[0]).abs() < 1e-9 && (above[1] - below[1]).abs() < 1e-9);
    }

    #[test]
    fn starting_residuals() {
        let cfg = RotationConfig::default();
        let p = build_rotation(&cfg);
        let norm = |x: &[f64; 2]| p.eval(x).unwrap().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!((norm(&cfg.start_tangent) - 13.3919956235).abs() < 1e-9);
        assert!((norm(&cfg.start_secant.0) - 5.81435555868).abs() < 1e-9);
        assert!((norm(&cfg.start_secant.1) - 19.6157765738).abs() < 1e-9);
    }

    #[test]
    fn origin_is_a_domain_error() {
        let p = build_rotation(&RotationConfig::default());
        assert!(p.eval(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn noise_is_small() {
        let f = build_rotation(&RotationConfig::default());
        let g = build_rotation(&RotationConfig::with_noise(true));
        for k in 0..200 {
            let x = [(k as f64 * 0.3).sin() * 5.0, (k as f64 * 0.7).cos() * 5.0];
            let (a, b) = (f.eval(&x).unwrap(), g.eval(&x).unwrap());
            assert!((a[0] - b[0]).abs() <= 1e-4 && (a[1] - b[1]).abs() <= 1e-4);
        }
    }

    #[test]
    fn tables_render() {
        let t = reproduce_tables(&RotationConfig::default(), &NewtonOptions::default());
        let md = t.to_markdown();
        assert!(md.lines().count() >= 4);
        assert!(t.to_csv().starts_with("iteration,tangent,secant\n"));
    }
}
