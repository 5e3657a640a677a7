//! Lipschitz certificates for procedures and their piecewise linear models.
//!
//! Over a box `K`, `beta_F` bounds the Lipschitz constant of `F` and of its
//! models, and `gamma_F` bounds the model error: for a secant model through
//! `x_lo` and `x_hi`,
//!
//! ```text
//! |F(x) - model(x)| <= gamma_F / 2 * |x - x_lo| * |x - x_hi|
//! ```
//!
//! in the infinity norm. Both constants are propagated through the procedure
//! after rewriting products as differences of squares.

mod interval;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearize::AbsNormalForm;
use crate::plsolve::{piece_matrix, Signature, SolveError, DEFAULT_CAP};
use crate::tape::{lower_minmax, CustomElemental, EvalProcedure, NodeId, Opcode, ProcBuilder, TapeError};
use interval::{add_up, mul_up};
pub use interval::Interval;

const SAMPLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("box has dimension {got}, procedure expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("enclosure of node {node} meets the domain boundary of {op}: {detail}")]
    Domain {
        node: usize,
        op: &'static str,
        detail: String,
    },
    #[error("derivative bound at node {node} ({op}) is unbounded over the box")]
    Unbounded { node: usize, op: &'static str },
    #[error("piece {0} is singular")]
    SingularPiece(Signature),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxK {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxK {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, CertError> {
        if lower.len() != upper.len() {
            return Err(CertError::InvalidBox("bounds differ in length".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) {
                return Err(CertError::InvalidBox(format!("coordinate {i} is unbounded")));
            }
            if l > u {
                return Err(CertError::InvalidBox(format!("coordinate {i} is empty")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The box `center +- radius` in every coordinate.
    pub fn around(center: &[f64], radius: f64) -> Self {
        Self {
            lower: center.iter().map(|c| c - radius).collect(),
            upper: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if l == u { *l } else { rng.gen_range(*l..=*u) })
            .collect()
    }

    fn intervals(&self) -> Vec<Interval> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| Interval::new(*l, *u))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCert {
    pub lo: f64,
    pub hi: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Certificates over `K`. `per_node` refers to the product-free procedure
/// returned by [`multiplication_lowering`] of the min/max-lowered input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCerts {
    #[serde(rename = "K")]
    pub k: BoxK,
    pub per_node: Vec<NodeCert>,
    #[serde(rename = "beta_F")]
    pub beta_f: f64,
    #[serde(rename = "gamma_F")]
    pub gamma_f: f64,
    /// `false` if some bound relied on sampling a custom elemental.
    pub rigorous: bool,
}

fn domain(node: usize, op: Opcode, detail: impl Into<String>) -> CertError {
    CertError::Domain {
        node,
        op: op.name(),
        detail: detail.into(),
    }
}

struct Sampled {
    value: Interval,
    /// Largest `|d phi / d u_j|` per argument.
    slope: Vec<f64>,
    /// Largest l1 norm of each row of the Hessian, or the hint.
    curvature: Vec<f64>,
}

/// Deterministic sample points of an argument box: its corners, its center,
/// and uniform random points.
fn box_samples(args: &[Interval], count: usize) -> Vec<Vec<f64>> {
    let k = args.len();
    let mut pts = Vec::with_capacity(count + (1 << k.min(10)) + 1);
    pts.push(args.iter().map(|a| 0.5 * (a.lo + a.hi)).collect());
    if k <= 10 {
        for mask in 0..(1usize << k) {
            pts.push(
                (0..k)
                    .map(|j| if mask >> j & 1 == 1 { args[j].hi } else { args[j].lo })
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    while pts.len() < count {
        pts.push(
            args.iter()
                .map(|a| if a.lo == a.hi { a.lo } else { rng.gen_range(a.lo..=a.hi) })
                .collect(),
        );
    }
    pts
}

fn sample_custom(
    elem: &CustomElemental,
    args: &[Interval],
    node: usize,
    op: Opcode,
    derivatives: bool,
) -> Result<Sampled, CertError> {
    let k = args.len();
    let pts = box_samples(args, SAMPLES);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut slope = vec![0.0f64; k];
    let mut g = vec![0.0; k];
    for p in &pts {
        let v = elem
            .value(p)
            .ok_or_else(|| domain(node, op, format!("{} undefined at {:?}", elem.name(), p)))?;
        lo = lo.min(v);
        hi = hi.max(v);
        if derivatives {
            if !elem.partials(p, &mut g) {
                return Err(CertError::Unbounded { node, op: op.name() });
            }
            for (s, gj) in slope.iter_mut().zip(&g) {
                *s = s.max(gj.abs());
            }
        }
    }
    // Values between samples may overshoot by about slope * spacing.
    let spacing: f64 = args
        .iter()
        .map(|a| a.width() / (SAMPLES as f64).powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    let slack = slope.iter().sum::<f64>() * spacing + 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let value = Interval::new(lo - slack, hi + slack);
    let curvature = match elem.curvature_hint() {
        Some(h) => h.to_vec(),
        None if derivatives => sample_curvature(elem, args, &pts, node, op)?,
        None => vec![0.0; k],
    };
    Ok(Sampled {
        value,
        slope: slope.iter().map(|s| s * 1.01).collect(),
        curvature,
    })
}

/// Central differences of the partials estimate the Hessian rows.
fn sample_curvature(
    elem: &CustomElemental,
    args: &[Interval],
    pts: &[Vec<f64>],
    node: usize,
    op: Opcode,
) -> Result<Vec<f64>, CertError> {
    let k = args.len();
    let mut out = vec![0.0f64; k];
    let (mut gp, mut gm) = (vec![0.0; k], vec![0.0; k]);
    let step: Vec<f64> = args.iter().map(|a| 1e-6 * (1.0 + a.mag())).collect();
    for p in pts.iter().take(SAMPLES / 4) {
        let mut row = vec![0.0f64; k];
        for i in 0..k {
            let mut xp = p.clone();
            let mut xm = p.clone();
            xp[i] = (p[i] + step[i]).min(args[i].hi);
            xm[i] = (p[i] - step[i]).max(args[i].lo);
            let h = xp[i] - xm[i];
            if h <= 0.0 {
                continue;
            }
            if !(elem.partials(&xp, &mut gp) && elem.partials(&xm, &mut gm)) {
                return Err(CertError::Unbounded { node, op: op.name() });
            }
            for j in 0..k {
                row[j] += ((gp[j] - gm[j]) / h).abs();
            }
        }
        for j in 0..k {
            out[j] = out[j].max(row[j]);
        }
    }
    Ok(out.iter().map(|c| c * 1.01).collect())
}

fn enclose(
    proc: &EvalProcedure,
    node: usize,
    op: Opcode,
    a: &[Interval],
) -> Result<Interval, CertError> {
    let v = match op {
        Opcode::Input(_) | Opcode::Const(_) => unreachable!("leaves are seeded directly"),
        Opcode::Add => a[0].add(a[1]),
        Opcode::Sub => a[0].sub(a[1]),
        Opcode::Mul => a[0].mul(a[1]),
        Opcode::Div => a[0]
            .div(a[1])
            .ok_or_else(|| domain(node, op, "divisor interval contains zero"))?,
        Opcode::Neg => a[0].neg(),
        Opcode::Abs => a[0].abs(),
        Opcode::Min => a[0].min(a[1]),
        Opcode::Max => a[0].max(a[1]),
        Opcode::Sin => a[0].sin(),
        Opcode::Cos => a[0].cos(),
        Opcode::Exp => a[0].exp(),
        Opcode::Log => a[0]
            .ln()
            .ok_or_else(|| domain(node, op, format!("argument interval {:?}", a[0])))?,
        Opcode::Sqrt => a[0]
            .sqrt()
            .ok_or_else(|| domain(node, op, format!("argument interval {:?}", a[0])))?,
        Opcode::Square => a[0].square(),
        Opcode::PowInt(k) => a[0].powi(k),
        Opcode::Recip => a[0]
            .recip()
            .ok_or_else(|| domain(node, op, "argument interval contains zero"))?,
        Opcode::Custom(id) => sample_custom(proc.custom(id), a, node, op, false)?.value,
    };
    if !v.is_finite() {
        return Err(domain(node, op, "enclosure overflows"));
    }
    Ok(v)
}

/// Outward-rounded enclosures of every node over `K`.
pub fn interval_evaluate(proc: &EvalProcedure, k: &BoxK) -> Result<Vec<Interval>, CertError> {
    if k.dim() != proc.n() {
        return Err(CertError::Dimension {
            expected: proc.n(),
            got: k.dim(),
        });
    }
    let xs = k.intervals();
    let mut out: Vec<Interval> = Vec::with_capacity(proc.len());
    for (i, node) in proc.nodes().iter().enumerate() {
        let v = match node.op {
            Opcode::Input(slot) => xs[slot],
            Opcode::Const(c) => Interval::point(c),
            op => {
                let args: Vec<Interval> = node.args.iter().map(|&j| out[j]).collect();
                enclose(proc, i, op, &args)?
            }
        };
        out.push(v);
    }
    Ok(out)
}

fn const_value(proc: &EvalProcedure, node: usize) -> Option<f64> {
    match proc.nodes()[node].op {
        Opcode::Const(c) => Some(c),
        _ => None,
    }
}

/// Rewrites `u * w` as `((u + w)^2 - (u - w)^2) / 4` and `u / w` as
/// `u * recip(w)`. Products with a constant factor stay as scalings.
pub fn multiplication_lowering(proc: &EvalProcedure) -> EvalProcedure {
    let mut b = ProcBuilder::new(proc.n()).without_sharing();
    for elem in proc.customs() {
        b.register_custom(CustomElemental::clone(Arc::as_ref(elem)))
            .expect("customs of a valid procedure have unique names");
    }
    let mut map: Vec<NodeId> = Vec::with_capacity(proc.len());
    let mut quarter = None;
    for node in proc.nodes() {
        let args: Vec<NodeId> = node.args.iter().map(|&a| map[a]).collect();
        let konst = |j: usize| const_value(proc, node.args[j]);
        let mut product = |b: &mut ProcBuilder, u: NodeId, w: NodeId| {
            let sum = b.add(u, w);
            let diff = b.sub(u, w);
            let s1 = b.unary(Opcode::Square, sum);
            let s2 = b.unary(Opcode::Square, diff);
            let d = b.sub(s1, s2);
            let q = *quarter.get_or_insert_with(|| b.constant(0.25));
            b.mul(q, d)
        };
        let id = match node.op {
            Opcode::Mul if konst(0).is_some() || konst(1).is_some() => {
                b.mul(args[0], args[1])
            }
            Opcode::Mul => product(&mut b, args[0], args[1]),
            Opcode::Div => match konst(1) {
                Some(c) => {
                    let r = b.constant(1.0 / c);
                    b.mul(args[0], r)
                }
                None => {
                    let r = b.unary(Opcode::Recip, args[1]);
                    if konst(0).is_some() {
                        b.mul(args[0], r)
                    } else {
                        product(&mut b, args[0], r)
                    }
                }
            },
            op => b.push(op, &args),
        };
        map.push(id);
    }
    let outputs: Vec<NodeId> = proc.outputs().iter().map(|&o| map[o]).collect();
    b.finish(&outputs).expect("lowering preserves well-formedness")
}

/// `sup |phi'|` and `sup |phi''|` of a library univariate over `u`.
fn univariate_bounds(op: Opcode, u: Interval) -> (f64, f64) {
    let m = u.mag();
    match op {
        Opcode::Neg => (1.0, 0.0),
        Opcode::Sin => (u.sup_abs_cos(), u.sup_abs_sin()),
        Opcode::Cos => (u.sup_abs_sin(), u.sup_abs_cos()),
        Opcode::Exp => {
            let e = Interval::bound(u.hi.exp());
            (e, e)
        }
        Opcode::Log => (Interval::bound(1.0 / u.lo), Interval::bound(1.0 / (u.lo * u.lo))),
        Opcode::Sqrt => {
            let r = u.lo.sqrt();
            (
                Interval::bound(0.5 / r),
                Interval::bound(0.25 / (r * r * r)),
            )
        }
        Opcode::Square => (2.0 * m, 2.0),
        Opcode::PowInt(k) => {
            let k = k as f64;
            (
                Interval::bound(k * m.powf(k - 1.0)),
                Interval::bound(k * (k - 1.0) * m.powf(k - 2.0)),
            )
        }
        Opcode::Recip => {
            let g = u.mig();
            (Interval::bound(1.0 / (g * g)), Interval::bound(2.0 / (g * g * g)))
        }
        _ => unreachable!("not a smooth univariate: {op:?}"),
    }
}

/// Propagates the Lipschitz constants `beta` (of the node value) and `gamma`
/// (of its derivative) through the product-free form of `proc`:
///
/// ```text
/// beta_v  = L beta_u
/// gamma_v = L gamma_u + L' beta_u^2
/// ```
///
/// with `L = sup |phi'|` and `L' = sup |phi''|` over the node enclosure.
pub fn beta_gamma(proc: &EvalProcedure, k: &BoxK) -> Result<LipschitzCerts, CertError> {
    let lowered = multiplication_lowering(&lower_minmax(proc));
    let enc = interval_evaluate(&lowered, k)?;
    let mut rigorous = true;
    let mut beta: Vec<f64> = Vec::with_capacity(lowered.len());
    let mut gamma: Vec<f64> = Vec::with_capacity(lowered.len());
    for (i, node) in lowered.nodes().iter().enumerate() {
        let a = &node.args;
        let (bv, gv) = match node.op {
            Opcode::Input(_) => (1.0, 0.0),
            Opcode::Const(_) => (0.0, 0.0),
            Opcode::Add | Opcode::Sub => (
                add_up(beta[a[0]], beta[a[1]]),
                add_up(gamma[a[0]], gamma[a[1]]),
            ),
            Opcode::Neg | Opcode::Abs => (beta[a[0]], gamma[a[0]]),
            Opcode::Mul => {
                let (c, u) = match (const_value(&lowered, a[0]), const_value(&lowered, a[1])) {
                    (Some(c), _) => (c, a[1]),
                    (_, Some(c)) => (c, a[0]),
                    _ => unreachable!("products are lowered"),
                };
                (mul_up(c.abs(), beta[u]), mul_up(c.abs(), gamma[u]))
            }
            Opcode::Div | Opcode::Min | Opcode::Max => unreachable!("lowered away"),
            Opcode::Custom(id) => {
                rigorous = false;
                let args: Vec<Interval> = a.iter().map(|&j| enc[j]).collect();
                let s = sample_custom(lowered.custom(id), &args, i, node.op, true)?;
                let bmax = a.iter().map(|&j| beta[j]).fold(0.0, f64::max);
                let (mut bv, mut gv) = (0.0, 0.0);
                for (p, &j) in a.iter().enumerate() {
                    bv = add_up(bv, mul_up(s.slope[p], beta[j]));
                    let curv = mul_up(mul_up(s.curvature[p], beta[j]), bmax);
                    gv = add_up(gv, add_up(mul_up(s.slope[p], gamma[j]), curv));
                }
                (bv, gv)
            }
            op => {
                let (l1, l2) = univariate_bounds(op, enc[a[0]]);
                let (bu, gu) = (beta[a[0]], gamma[a[0]]);
                (
                    mul_up(l1, bu),
                    add_up(mul_up(l1, gu), mul_up(mul_up(l2, bu), bu)),
                )
            }
        };
        if !(bv.is_finite() && gv.is_finite()) {
            return Err(CertError::Unbounded {
                node: i,
                op: node.op.name(),
            });
        }
        beta.push(bv);
        gamma.push(gv);
    }
    let outs = lowered.outputs();
    let beta_f = outs.iter().map(|&o| beta[o]).fold(0.0, f64::max);
    let gamma_f = outs.iter().map(|&o| gamma[o]).fold(0.0, f64::max);
    Ok(LipschitzCerts {
        k: k.clone(),
        per_node: enc
            .iter()
            .zip(beta.iter().zip(&gamma))
            .map(|(e, (b, g))| NodeCert {
                lo: e.lo,
                hi: e.hi,
                beta: *b,
                gamma: *g,
            })
            .collect(),
        beta_f,
        gamma_f,
        rigorous,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRadius {
    #[serde(rename = "rho_F")]
    pub rho_f: f64,
    /// `rho_F / gamma_F`, infinite when `gamma_F = 0`.
    pub radius: f64,
    pub unbounded: bool,
}

/// Infinity norm of the inverse of `a`, or `None` if `a` is singular.
fn inverse_norm(a: &nalgebra::DMatrix<f64>) -> Option<f64> {
    let inv = a.clone().try_inverse()?;
    let norm = inv
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    norm.is_finite().then_some(norm)
}

/// `rho_F = min over pieces of 1 / |A_sigma^-1|` and the radius
/// `rho_F / gamma_F` within which the degree of the model cannot change.
pub fn stability_radius(
    anf: &AbsNormalForm,
    certs: &LipschitzCerts,
) -> Result<StabilityRadius, CertError> {
    anf.validate().map_err(SolveError::from)?;
    if anf.n != anf.m {
        return Err(SolveError::NotSquare { n: anf.n, m: anf.m }.into());
    }
    if anf.s > DEFAULT_CAP {
        return Err(SolveError::EnumerationCapExceeded {
            s: anf.s,
            cap: DEFAULT_CAP,
        }
        .into());
    }
    let mut rho = f64::INFINITY;
    for k in 0..(1u64 << anf.s) {
        let sigma = Signature::from_index(k, anf.s);
        let a = piece_matrix(anf, &sigma);
        let norm = if anf.n == 0 {
            0.0
        } else {
            inverse_norm(&a).ok_or_else(|| CertError::SingularPiece(sigma.clone()))?
        };
        rho = rho.min(1.0 / norm);
    }
    let unbounded = certs.gamma_f == 0.0;
    Ok(StabilityRadius {
        rho_f: rho,
        radius: if unbounded { f64::INFINITY } else { rho / certs.gamma_f },
        unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::tangent;
    use crate::tape::parse_expression;

    fn unit_box(n: usize) -> BoxK {
        BoxK::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn sum_of_inputs() {
        let p = parse_expression("x1 + x2", 2).unwrap();
        let c = beta_gamma(&p, &unit_box(2)).unwrap();
        assert_eq!((c.beta_f, c.gamma_f), (2.0, 0.0));
        assert!(c.rigorous);
    }

    #[test]
    fn square_hand_recurrence() {
        let p = parse_expression("sqr(x1)", 1).unwrap();
        let k = BoxK::new(vec![-1.0], vec![2.0]).unwrap();
        let enc = interval_evaluate(&p, &k).unwrap();
        assert!(enc[1].lo <= 0.0 && enc[1].hi >= 4.0);
        let c = beta_gamma(&p, &k).unwrap();
        assert!((c.beta_f - 4.0).abs() < 1e-14);
        assert_eq!(c.gamma_f, 2.0);
    }

    #[test]
    fn abs_sin() {
        let p = parse_expression("abs(sin(x1))", 1).unwrap();
        let k = BoxK::new(vec![0.0], vec![std::f64::consts::PI]).unwrap();
        let c = beta_gamma(&p, &k).unwrap();
        assert_eq!((c.beta_f, c.gamma_f), (1.0, 1.0));
    }

    #[test]
    fn abs_enclosure() {
        let p = parse_expression("abs(x1)", 1).unwrap();
        let k = BoxK::new(vec![-3.0], vec![1.0]).unwrap();
        let enc = interval_evaluate(&p, &k).unwrap();
        assert_eq!((enc[1].lo, enc[1].hi), (0.0, 3.0));
    }

    #[test]
    fn log_over_zero_is_domain_error() {
        let p = parse_expression("log(x1)", 1).unwrap();
        let k = BoxK::new(vec![-1.0], vec![1.0]).unwrap();
        assert!(matches!(beta_gamma(&p, &k), Err(CertError::Domain { node: 1, .. })));
    }

    #[test]
    fn lowering_preserves_values() {
        let p = parse_expression("x1*x2 + x1/x2 + 3*x1 + x2/4", 2).unwrap();
        let q = multiplication_lowering(&p);
        assert!(q.nodes().iter().all(|n| n.op != Opcode::Div));
        for x in [[3.0, 4.0], [-1.5, 0.25], [7.0, -2.0]] {
            let (u, v) = (p.eval(&x).unwrap()[0], q.eval(&x).unwrap()[0]);
            assert!((u - v).abs() <= 1e-13 * (1.0 + u.abs()));
        }
        let prod = multiplication_lowering(&parse_expression("x1*x2", 2).unwrap());
        assert_eq!(prod.eval(&[3.0, 4.0]).unwrap(), vec![12.0]);
    }

    #[test]
    fn radius_of_identity_is_unbounded() {
        let p = parse_expression("x1; x2", 2).unwrap();
        let k = unit_box(2);
        let certs = beta_gamma(&p, &k).unwrap();
        let anf = tangent(&p, &[0.5, 0.5]).unwrap().abs_normal();
        let r = stability_radius(&anf, &certs).unwrap();
        assert_eq!(r.rho_f, 1.0);
        assert!(r.unbounded && r.radius.is_infinite());
    }

    #[test]
    fn radius_of_abs() {
        let p = parse_expression("abs(x1)", 1).unwrap();
        let certs = beta_gamma(&p, &unit_box(1)).unwrap();
        let anf = tangent(&p, &[0.0]).unwrap().abs_normal();
        assert_eq!(stability_radius(&anf, &certs).unwrap().rho_f, 1.0);
    }

    #[test]
    fn singular_piece() {
        let p = parse_expression("x1 + abs(x1)", 1).unwrap();
        let certs = beta_gamma(&p, &unit_box(1)).unwrap();
        let anf = tangent(&p, &[0.0]).unwrap().abs_normal();
        assert!(matches!(
            stability_radius(&anf, &certs),
            Err(CertError::SingularPiece(_))
        ));
    }

    #[test]
    fn bad_box() {
        assert!(BoxK::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxK::new(vec![0.0], vec![f64::INFINITY]).is_err());
    }
}
