//! Root finding for piecewise linear systems in abs-normal form.
//!
//! Every signature `sigma` in `{-1, +1}^s` fixes the signs of the switching
//! variables and turns the system into a linear one of size `n + s`. Solving
//! all of them and keeping the sign-consistent solutions yields every root.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearize::{AbsNormalForm, AnfError};

pub const DEFAULT_CAP: usize = 16;
const SIGN_TOL: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Anf(#[from] AnfError),
    #[error("system is not square: n = {n}, m = {m}")]
    NotSquare { n: usize, m: usize },
    #[error("target has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("s = {s} exceeds the enumeration cap {cap}")]
    EnumerationCapExceeded { s: usize, cap: usize },
    #[error("the piecewise linear system has no root")]
    NoRoot,
    #[error("{0} is not a regular value: a root lies on a piece boundary or a singular piece")]
    Regularity(String),
    #[error("J is singular")]
    SingularJ,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Sign vector selecting one linear piece.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub Vec<i8>);

impl Signature {
    /// The `k`-th signature in lexicographic order (`-1 < +1`, first
    /// coordinate most significant).
    pub fn from_index(k: u64, s: usize) -> Self {
        Signature(
            (0..s)
                .map(|i| if (k >> (s - 1 - i)) & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Signature of a switching vector, zeros counting as `+1`.
    pub fn of(z: &[f64]) -> Self {
        Signature(z.iter().map(|v| if *v < 0.0 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for s in &self.0 {
            f.write_str(if *s < 0 { "-" } else { "+" })?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub x: Vec<f64>,
    pub sigma: Signature,
    pub det_sign: i8,
    /// Some switching variable vanishes within the sign tolerance.
    #[serde(skip)]
    pub boundary: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree: Option<i64>,
    /// Pieces whose linear system was singular and therefore skipped.
    #[serde(skip)]
    pub singular_pieces: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub cap: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    /// Visit signatures in a shuffled order; the result must not change.
    pub shuffle_seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            jobs: None,
            shuffle_seed: None,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

fn check(anf: &AbsNormalForm, target: &[f64], cap: usize) -> Result<(), SolveError> {
    anf.validate()?;
    if anf.n != anf.m {
        return Err(SolveError::NotSquare { n: anf.n, m: anf.m });
    }
    if target.len() != anf.m {
        return Err(SolveError::Dimension {
            expected: anf.m,
            got: target.len(),
        });
    }
    if anf.s > cap || anf.s >= 63 {
        return Err(SolveError::EnumerationCapExceeded { s: anf.s, cap });
    }
    Ok(())
}

/// Linear part `J + Y S (I - L S)^-1 Z` of the selection function for `sigma`,
/// with `S = diag(sigma)`.
pub fn piece_matrix(anf: &AbsNormalForm, sigma: &Signature) -> DMatrix<f64> {
    let (n, s) = (anf.n, anf.s);
    // W = (I - L S)^-1 Z by forward substitution (unit lower triangular).
    let mut w = DMatrix::<f64>::zeros(s, n);
    for i in 0..s {
        for col in 0..n {
            let mut v = anf.z[i][col];
            for j in 0..i {
                v += anf.l[i][j] * sigma.0[j] as f64 * w[(j, col)];
            }
            w[(i, col)] = v;
        }
    }
    let mut a = to_matrix(&anf.j, anf.m, n);
    for r in 0..anf.m {
        for k in 0..s {
            let ys = anf.y[r][k] * sigma.0[k] as f64;
            if ys != 0.0 {
                for col in 0..n {
                    a[(r, col)] += ys * w[(k, col)];
                }
            }
        }
    }
    a
}

fn det_sign(a: &DMatrix<f64>) -> i8 {
    if a.nrows() == 0 {
        return 1;
    }
    let d = a.clone().lu().determinant();
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

struct Candidate {
    x: Vec<f64>,
    sigma: Signature,
    det_sign: i8,
    boundary: bool,
}

enum PieceOutcome {
    Root(Candidate),
    Infeasible,
    Singular,
}

fn solve_piece(anf: &AbsNormalForm, rhs: &[f64], sigma: Signature) -> PieceOutcome {
    let (n, s) = (anf.n, anf.s);
    let size = n + s;
    // Unknowns (dx, z): z - L S z - Z dx = c and J dx + Y S z = rhs - b.
    let mut m = DMatrix::<f64>::zeros(size, size);
    let mut r = DVector::<f64>::zeros(size);
    for i in 0..s {
        for col in 0..n {
            m[(i, col)] = -anf.z[i][col];
        }
        for j in 0..i {
            m[(i, n + j)] = -anf.l[i][j] * sigma.0[j] as f64;
        }
        m[(i, n + i)] = 1.0;
        r[i] = anf.c[i];
    }
    for i in 0..anf.m {
        for col in 0..n {
            m[(s + i, col)] = anf.j[i][col];
        }
        for k in 0..s {
            m[(s + i, n + k)] = anf.y[i][k] * sigma.0[k] as f64;
        }
        r[s + i] = rhs[i] - anf.b[i];
    }
    let Some(sol) = m.lu().solve(&r) else {
        return PieceOutcome::Singular;
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return PieceOutcome::Singular;
    }
    let z: Vec<f64> = sol.iter().skip(n).copied().collect();
    let tol = SIGN_TOL * (1.0 + inf_norm(&z));
    if z.iter().zip(&sigma.0).any(|(zi, si)| *si as f64 * zi < -tol) {
        return PieceOutcome::Infeasible;
    }
    let boundary = z.iter().any(|zi| zi.abs() <= tol);
    let x = sol
        .iter()
        .take(n)
        .zip(&anf.center)
        .map(|(d, c)| c + d)
        .collect();
    let det_sign = det_sign(&piece_matrix(anf, &sigma));
    PieceOutcome::Root(Candidate {
        x,
        sigma,
        det_sign,
        boundary,
    })
}

fn run_in_pool<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, SolveError> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| SolveError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// All roots of `offset + dy(x - center) = target`, sorted by signature.
pub fn enumerate_roots(
    anf: &AbsNormalForm,
    target: &[f64],
    opts: &SolveOptions,
) -> Result<RootSet, SolveError> {
    check(anf, target, opts.cap)?;
    let rhs: Vec<f64> = target.iter().zip(&anf.offset).map(|(t, f)| t - f).collect();
    let count = 1u64 << anf.s;
    let mut order: Vec<u64> = (0..count).collect();
    if let Some(seed) = opts.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut outcomes: Vec<(u64, PieceOutcome)> = run_in_pool(opts.jobs, || {
        order
            .par_iter()
            .map(|&k| (k, solve_piece(anf, &rhs, Signature::from_index(k, anf.s))))
            .collect()
    })?;
    outcomes.sort_by_key(|(k, _)| *k);

    let mut set = RootSet::default();
    for (_, outcome) in outcomes {
        match outcome {
            PieceOutcome::Singular => set.singular_pieces += 1,
            PieceOutcome::Infeasible => {}
            PieceOutcome::Root(c) => {
                let scale = 1.0 + inf_norm(&c.x);
                let dup = set.roots.iter_mut().find(|r| {
                    r.x.iter().zip(&c.x).all(|(a, b)| (a - b).abs() <= DEDUP_TOL * scale)
                });
                match dup {
                    Some(r) => r.boundary = true,
                    None => set.roots.push(Root {
                        x: c.x,
                        sigma: c.sigma,
                        det_sign: c.det_sign,
                        boundary: c.boundary,
                    }),
                }
            }
        }
    }
    Ok(set)
}

fn dist_inf(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).fold(0.0, |a, (u, v)| a.max((u - v).abs()))
}

fn dist_2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Picks the root closest to `center` in the infinity norm. Near-ties
/// (within `1e-12 (1 + d)`) go to the smaller Euclidean distance, then to the
/// lexicographically smallest point.
pub fn select_min_norm<'a>(roots: &'a [Root], center: &[f64]) -> Option<&'a Root> {
    let dmin = roots
        .iter()
        .map(|r| dist_inf(&r.x, center))
        .fold(f64::INFINITY, f64::min);
    let near: Vec<&Root> = roots
        .iter()
        .filter(|r| dist_inf(&r.x, center) <= dmin + 1e-12 * (1.0 + dmin))
        .collect();
    let emin = near
        .iter()
        .map(|r| dist_2(&r.x, center))
        .fold(f64::INFINITY, f64::min);
    near.into_iter()
        .filter(|r| dist_2(&r.x, center) <= emin + 1e-12 * (1.0 + emin))
        .min_by(|a, b| lexicographic(&a.x, &b.x))
}

/// Root of the model nearest to `center`; see [`select_min_norm`].
pub fn min_norm_root(
    anf: &AbsNormalForm,
    center: &[f64],
    target: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<f64>, SolveError> {
    if center.len() != anf.n {
        return Err(SolveError::Dimension {
            expected: anf.n,
            got: center.len(),
        });
    }
    let set = enumerate_roots(anf, target, opts)?;
    select_min_norm(&set.roots, center)
        .map(|r| r.x.clone())
        .ok_or(SolveError::NoRoot)
}

/// Mapping degree at the regular value `y`.
pub fn degree(anf: &AbsNormalForm, y: &[f64], opts: &SolveOptions) -> Result<i64, SolveError> {
    let set = enumerate_roots(anf, y, opts)?;
    if set.roots.iter().any(|r| r.boundary || r.det_sign == 0) {
        return Err(SolveError::Regularity(format!("{y:?}")));
    }
    Ok(set.roots.iter().map(|r| r.det_sign as i64).sum())
}

/// Fixed point iteration `dx = J^-1 (target - offset - b - Y |z(dx)|)`.
/// Returns a root if the residual falls below `tol` within `maxit` sweeps.
pub fn modulus_iteration(
    anf: &AbsNormalForm,
    target: &[f64],
    maxit: usize,
    tol: f64,
) -> Result<Option<Vec<f64>>, SolveError> {
    check(anf, target, usize::MAX)?;
    let n = anf.n;
    let lu = to_matrix(&anf.j, n, n).lu();
    if !lu.is_invertible() {
        return Err(SolveError::SingularJ);
    }
    let rhs: Vec<f64> = (0..n).map(|i| target[i] - anf.offset[i] - anf.b[i]).collect();
    let mut z = anf.switching(&vec![0.0; n]);
    for _ in 0..maxit {
        let r = DVector::from_fn(n, |i, _| {
            rhs[i]
                - anf.y[i]
                    .iter()
                    .zip(&z)
                    .map(|(y, zk)| y * zk.abs())
                    .sum::<f64>()
        });
        let Some(dx) = lu.solve(&r) else {
            return Err(SolveError::SingularJ);
        };
        let dx: Vec<f64> = dx.iter().copied().collect();
        if dx.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let (znew, dy) = anf.eval_increment(&dx);
        let res = dy
            .iter()
            .zip(target.iter().zip(&anf.offset))
            .fold(0.0f64, |a, (d, (t, f))| a.max((f + d - t).abs()));
        if res <= tol {
            return Ok(Some(dx.iter().zip(&anf.center).map(|(d, c)| c + d).collect()));
        }
        z = znew;
    }
    Ok(None)
}
