//! Tangent and secant piecewise linear models of evaluation procedures.
//!
//! Smooth elementals are replaced by their tangent or secant lines, while abs
//! is kept as is. The result is a continuous piecewise linear increment
//! function `dx -> dF` anchored at the reference point (tangent mode) or at
//! the midpoint of a reference pair (secant mode).

mod anf;
pub mod kernels;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tape::{EvalProcedure, Opcode, TapeError};
pub use anf::{AbsNormalForm, AnfError};
pub use kernels::{KernelError, MidRad};
pub use special::{artanhc, sinc, sinhc, ArtanhcDomainError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tangent,
    Secant,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearizeError {
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("procedure still contains min/max; lower it with `lower_minmax` first")]
    UnloweredMinMax,
    #[error("domain error at node {node}: {reason}")]
    Domain { node: usize, reason: String },
    #[error("derivative undefined at node {node}: {reason}")]
    DerivativeDomain { node: usize, reason: String },
    #[error("reference points have dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelNode {
    Input(usize),
    Const,
    /// `dv_i = sum c * dv_j` over predecessor increments.
    Linear(Vec<(usize, f64)>),
    /// `dv_i = |anchor_arg + dv_arg| - anchor`.
    Abs {
        arg: usize,
        anchor_arg: f64,
        anchor: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    Tangent(Vec<f64>),
    Secant { lo: Vec<f64>, hi: Vec<f64> },
}

/// Piecewise linear model of a procedure around its reference point(s).
#[derive(Clone, Debug)]
pub struct PLModel {
    mode: Mode,
    reference: Reference,
    center: Vec<f64>,
    ref_output: Vec<f64>,
    nodes: Vec<ModelNode>,
    midrad: Vec<MidRad>,
    outputs: Vec<usize>,
    s: usize,
}

/// Tangent model `F(x0) + dF(x0; x - x0)`.
pub fn tangent(proc: &EvalProcedure, x0: &[f64]) -> Result<PLModel, LinearizeError> {
    check(proc, x0)?;
    let y0 = proc.eval(x0)?;
    build(proc, x0, x0, Mode::Tangent, y0)
}

/// Secant model through the traces at `lo` and `hi`, centered at their
/// midpoint. Coinciding points give the tangent model.
pub fn secant(proc: &EvalProcedure, lo: &[f64], hi: &[f64]) -> Result<PLModel, LinearizeError> {
    check(proc, lo)?;
    check(proc, hi)?;
    let ylo = proc.eval(lo)?;
    let yhi = proc.eval(hi)?;
    let ymid = ylo.iter().zip(&yhi).map(|(a, b)| 0.5 * (a + b)).collect();
    build(proc, lo, hi, Mode::Secant, ymid)
}

fn check(proc: &EvalProcedure, x: &[f64]) -> Result<(), LinearizeError> {
    if proc.has_minmax() {
        return Err(LinearizeError::UnloweredMinMax);
    }
    if x.len() != proc.n() {
        return Err(LinearizeError::Dimension {
            expected: proc.n(),
            got: x.len(),
        });
    }
    Ok(())
}

fn kernel_error(node: usize, e: KernelError) -> LinearizeError {
    match e {
        KernelError::Domain(reason) => LinearizeError::Domain { node, reason },
        KernelError::Derivative(reason) => LinearizeError::DerivativeDomain { node, reason },
    }
}

fn build(
    proc: &EvalProcedure,
    lo: &[f64],
    hi: &[f64],
    mode: Mode,
    ref_output: Vec<f64>,
) -> Result<PLModel, LinearizeError> {
    let mut midrad: Vec<MidRad> = Vec::with_capacity(proc.len());
    let mut nodes = Vec::with_capacity(proc.len());
    for (i, node) in proc.nodes().iter().enumerate() {
        let a = &node.args;
        let err = |e| kernel_error(i, e);
        let (mr, mnode) = match node.op {
            Opcode::Input(slot) => (
                MidRad::from_endpoints(lo[slot], hi[slot]),
                ModelNode::Input(slot),
            ),
            Opcode::Const(c) => (MidRad::point(c), ModelNode::Const),
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::Div => {
                let (u, w) = (midrad[a[0]], midrad[a[1]]);
                let (out, c) = match node.op {
                    Opcode::Add => kernels::add(u, w),
                    Opcode::Sub => kernels::sub(u, w),
                    Opcode::Mul => kernels::mul(u, w).map_err(err)?,
                    _ => kernels::div(u, w).map_err(err)?,
                };
                (out, ModelNode::Linear(vec![(a[0], c[0]), (a[1], c[1])]))
            }
            Opcode::Abs => {
                let u = midrad[a[0]];
                let (alo, ahi) = (u.lo().abs(), u.hi().abs());
                let anchor = match mode {
                    Mode::Tangent => u.mid.abs(),
                    Mode::Secant => 0.5 * (alo + ahi),
                };
                (
                    MidRad::new(anchor, 0.5 * (ahi - alo)),
                    ModelNode::Abs {
                        arg: a[0],
                        anchor_arg: u.mid,
                        anchor,
                    },
                )
            }
            Opcode::Min | Opcode::Max => return Err(LinearizeError::UnloweredMinMax),
            Opcode::Custom(id) => {
                let args: Vec<MidRad> = a.iter().map(|&j| midrad[j]).collect();
                let (out, c) = kernels::custom(proc.custom(id), &args).map_err(err)?;
                (
                    out,
                    ModelNode::Linear(a.iter().copied().zip(c).collect()),
                )
            }
            op => {
                let (out, c) = kernels::unary(op, midrad[a[0]]).map_err(err)?;
                (out, ModelNode::Linear(vec![(a[0], c)]))
            }
        };
        midrad.push(mr);
        nodes.push(mnode);
    }
    let center = match mode {
        Mode::Tangent => lo.to_vec(),
        Mode::Secant => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
    };
    let reference = match mode {
        Mode::Tangent => Reference::Tangent(lo.to_vec()),
        Mode::Secant => Reference::Secant {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        },
    };
    Ok(PLModel {
        mode,
        reference,
        center,
        ref_output,
        s: proc.s(),
        nodes,
        midrad,
        outputs: proc.outputs().to_vec(),
    })
}

impl PLModel {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    /// `x0` in tangent mode, the midpoint of the pair in secant mode.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// `F(x0)`, or the mean of the two output traces in secant mode.
    pub fn ref_output(&self) -> &[f64] {
        &self.ref_output
    }

    pub fn nodes(&self) -> &[ModelNode] {
        &self.nodes
    }

    /// Per-node midpoint and radius of the reference traces.
    pub fn midrad(&self) -> &[MidRad] {
        &self.midrad
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn m(&self) -> usize {
        self.outputs.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Increments of every node for the input increment `dx`.
    pub fn node_increments(&self, dx: &[f64]) -> Vec<f64> {
        assert_eq!(dx.len(), self.n(), "increment has wrong dimension");
        let mut dv: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                ModelNode::Input(slot) => dx[*slot],
                ModelNode::Const => 0.0,
                ModelNode::Linear(terms) => terms.iter().map(|&(j, c)| c * dv[j]).sum(),
                ModelNode::Abs {
                    arg,
                    anchor_arg,
                    anchor,
                } => (anchor_arg + dv[*arg]).abs() - anchor,
            };
            dv.push(v);
        }
        dv
    }

    /// The increment function `dF(.; dx)`.
    pub fn eval_increment(&self, dx: &[f64]) -> Vec<f64> {
        let dv = self.node_increments(dx);
        self.outputs.iter().map(|&o| dv[o]).collect()
    }

    /// The nonincremental model `ref_output + dF(.; x - center)`.
    pub fn eval_model(&self, x: &[f64]) -> Vec<f64> {
        let dx: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.eval_increment(&dx)
            .into_iter()
            .zip(&self.ref_output)
            .map(|(d, f)| f + d)
            .collect()
    }

    pub fn abs_normal(&self) -> AbsNormalForm {
        AbsNormalForm::from_model(self)
    }
}
