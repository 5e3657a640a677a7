//! Piecewise linear expansions of nonsmooth evaluation procedures.
//!
//! A function is recorded as a straight-line [`tape::EvalProcedure`]. From
//! it, [`linearize`] builds tangent and secant piecewise linear models,
//! [`bounds`] certifies Lipschitz constants of the error terms, [`plsolve`]
//! solves the resulting piecewise linear systems, and [`newton`] iterates
//! them.

pub mod linearize;
pub mod tape;
pub mod bounds;
pub mod plsolve;
pub mod newton;
pub mod bench;
