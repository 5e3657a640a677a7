use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelNode, PLModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnfError {
    #[error("{name} has shape {got:?}, expected {expected:?}")]
    Shape {
        name: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("L is not strictly lower triangular (entry {0},{1} is nonzero)")]
    NotLowerTriangular(usize, usize),
    #[error("{0} contains a non-finite entry")]
    NonFinite(&'static str),
    #[error("invalid abs-normal form JSON: {0}")]
    Json(String),
}

/// Abs-normal form of a piecewise linear increment function:
///
/// ```text
/// z  = c + Z dx + L |z|
/// dy = b + J dx + Y |z|
/// ```
///
/// with `L` strictly lower triangular. `center` and `offset` locate the
/// model: `F(x) ~ offset + dy(x - center)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsNormalForm {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub center: Vec<f64>,
    pub offset: Vec<f64>,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<f64>>,
}

fn check_matrix(
    name: &'static str,
    a: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), AnfError> {
    let bad = a.len() != rows || a.iter().any(|r| r.len() != cols);
    if bad {
        let got = (a.len(), a.first().map_or(0, Vec::len));
        return Err(AnfError::Shape {
            name,
            expected: (rows, cols),
            got,
        });
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnfError::NonFinite(name));
    }
    Ok(())
}

fn check_vector(name: &'static str, v: &[f64], len: usize) -> Result<(), AnfError> {
    if v.len() != len {
        return Err(AnfError::Shape {
            name,
            expected: (len, 1),
            got: (v.len(), 1),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(AnfError::NonFinite(name));
    }
    Ok(())
}

fn dot(row: &[f64], v: &[f64]) -> f64 {
    row.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl AbsNormalForm {
    /// An all-zero form of the given dimensions, centered at the origin.
    pub fn zeros(n: usize, m: usize, s: usize) -> Self {
        AbsNormalForm {
            n,
            m,
            s,
            center: vec![0.0; n],
            offset: vec![0.0; m],
            c: vec![0.0; s],
            b: vec![0.0; m],
            z: vec![vec![0.0; n]; s],
            l: vec![vec![0.0; s]; s],
            j: vec![vec![0.0; n]; m],
            y: vec![vec![0.0; s]; m],
        }
    }

    pub(crate) fn from_model(model: &PLModel) -> Self {
        let (n, s) = (model.n(), model.s());
        let width = n + s;
        // Each node increment as an affine function of (dx, |z|).
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::with_capacity(model.nodes().len());
        let mut anf = AbsNormalForm::zeros(n, model.m(), s);
        anf.center = model.center().to_vec();
        anf.offset = model.ref_output().to_vec();
        let mut k = 0;
        for node in model.nodes() {
            let row = match node {
                ModelNode::Input(slot) => {
                    let mut r = vec![0.0; width];
                    r[*slot] = 1.0;
                    (0.0, r)
                }
                ModelNode::Const => (0.0, vec![0.0; width]),
                ModelNode::Linear(terms) => {
                    let mut r = vec![0.0; width];
                    let mut c0 = 0.0;
                    for &(j, c) in terms {
                        let (cj, rj) = &rows[j];
                        c0 += c * cj;
                        for (a, b) in r.iter_mut().zip(rj) {
                            *a += c * b;
                        }
                    }
                    (c0, r)
                }
                ModelNode::Abs {
                    arg,
                    anchor_arg,
                    anchor,
                } => {
                    let (ca, ra) = &rows[*arg];
                    anf.c[k] = anchor_arg + ca;
                    anf.z[k].copy_from_slice(&ra[..n]);
                    anf.l[k].copy_from_slice(&ra[n..]);
                    let mut r = vec![0.0; width];
                    r[n + k] = 1.0;
                    k += 1;
                    (-anchor, r)
                }
            };
            rows.push(row);
        }
        for (i, &o) in model.outputs().iter().enumerate() {
            let (co, ro) = &rows[o];
            anf.b[i] = *co;
            anf.j[i].copy_from_slice(&ro[..n]);
            anf.y[i].copy_from_slice(&ro[n..]);
        }
        anf
    }

    pub fn validate(&self) -> Result<(), AnfError> {
        let (n, m, s) = (self.n, self.m, self.s);
        check_vector("center", &self.center, n)?;
        check_vector("offset", &self.offset, m)?;
        check_vector("c", &self.c, s)?;
        check_vector("b", &self.b, m)?;
        check_matrix("Z", &self.z, s, n)?;
        check_matrix("L", &self.l, s, s)?;
        check_matrix("J", &self.j, m, n)?;
        check_matrix("Y", &self.y, m, s)?;
        for (i, row) in self.l.iter().enumerate() {
            if let Some(j) = (i..s).find(|&j| row[j] != 0.0) {
                return Err(AnfError::NotLowerTriangular(i, j));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, AnfError> {
        let anf: AbsNormalForm =
            serde_json::from_str(text).map_err(|e| AnfError::Json(e.to_string()))?;
        anf.validate()?;
        Ok(anf)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("abs-normal form serializes")
    }

    /// Switching vector `z` by forward substitution.
    pub fn switching(&self, dx: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.s);
        for i in 0..self.s {
            let mut v = self.c[i] + dot(&self.z[i], dx);
            for (j, zj) in z.iter().enumerate() {
                v += self.l[i][j] * f64::abs(*zj);
            }
            z.push(v);
        }
        z
    }

    /// Returns `(z, dy)` for the increment `dx`.
    pub fn eval_increment(&self, dx: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = self.switching(dx);
        let az: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        let dy = (0..self.m)
            .map(|i| self.b[i] + dot(&self.j[i], dx) + dot(&self.y[i], &az))
            .collect();
        (z, dy)
    }

    /// `offset + dy(x - center)`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let dx: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let (_, dy) = self.eval_increment(&dx);
        dy.iter().zip(&self.offset).map(|(d, f)| d + f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::{secant, tangent};
    use crate::tape::{lower_minmax, parse_expression};

    #[test]
    fn abs_at_origin() {
        let p = parse_expression("abs(x1)", 1).unwrap();
        let a = tangent(&p, &[0.0]).unwrap().abs_normal();
        assert_eq!(a.s, 1);
        assert_eq!(a.c, vec![0.0]);
        assert_eq!(a.z, vec![vec![1.0]]);
        assert_eq!(a.l, vec![vec![0.0]]);
        assert_eq!(a.j, vec![vec![0.0]]);
        assert_eq!(a.y, vec![vec![1.0]]);
        assert_eq!(a.b, vec![0.0]);
    }

    #[test]
    fn smooth_model_is_jacobian() {
        let p = parse_expression("x1*x2; sin(x1)", 2).unwrap();
        let a = tangent(&p, &[2.0, 5.0]).unwrap().abs_normal();
        assert_eq!(a.s, 0);
        assert_eq!(a.j, vec![vec![5.0, 2.0], vec![2f64.cos(), 0.0]]);
        assert!(a.z.is_empty() && a.l.is_empty());
        assert!(a.y.iter().all(Vec::is_empty));
    }

    #[test]
    fn lowered_max_round_trip() {
        let p = lower_minmax(&parse_expression("max(x1, x2)", 2).unwrap());
        let model = tangent(&p, &[0.0, 0.0]).unwrap();
        let a = model.abs_normal();
        for dx in [[1.0f64, -2.0], [-0.5, 0.25], [3.0, 3.0]] {
            let expect = 0.5 * (dx[0] + dx[1] + (dx[0] - dx[1]).abs());
            assert_eq!(a.eval_increment(&dx).1, vec![expect]);
            assert_eq!(model.eval_increment(&dx), vec![expect]);
        }
    }

    #[test]
    fn nested_abs_round_trip() {
        let p = parse_expression("abs(abs(x1) - x2*x2) + sin(x2); abs(x1 - 1)*3", 2).unwrap();
        let model = secant(&p, &[0.3, -1.0], &[-0.7, 2.0]).unwrap();
        let a = model.abs_normal();
        a.validate().unwrap();
        for k in 0..50 {
            let dx = [(k as f64 * 0.37).sin() * 3.0, (k as f64 * 0.91).cos() * 2.0];
            let lhs = a.eval_increment(&dx).1;
            let rhs = model.eval_increment(&dx);
            for (u, v) in lhs.iter().zip(&rhs) {
                assert!((u - v).abs() <= 1e-13 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let p = parse_expression("abs(x1) - 0.5", 1).unwrap();
        let a = tangent(&p, &[0.25]).unwrap().abs_normal();
        let text = a.to_json();
        assert!(text.contains("\"Z\""));
        assert_eq!(AbsNormalForm::from_json(&text).unwrap(), a);
    }

    #[test]
    fn rejects_upper_l() {
        let mut a = AbsNormalForm::zeros(1, 1, 2);
        a.l[0][1] = 1.0;
        assert_eq!(a.validate(), Err(AnfError::NotLowerTriangular(0, 1)));
        let mut a = AbsNormalForm::zeros(1, 1, 2);
        a.z.pop();
        assert!(matches!(a.validate(), Err(AnfError::Shape { name: "Z", .. })));
    }
}
