use std::fmt;
use std::sync::Arc;

/// Value of the elemental; `None` marks a point outside its domain.
pub type ValueFn = Arc<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;
/// Writes all partial derivatives into the slice; `false` marks a point where
/// the derivative is undefined.
pub type PartialsFn = Arc<dyn Fn(&[f64], &mut [f64]) -> bool + Send + Sync>;
/// For univariates: writes `phi^(k)(u)` for `k = 0..=8`.
pub type TaylorFn = Arc<dyn Fn(f64, &mut [f64; 9]) -> bool + Send + Sync>;

/// A user-supplied smooth elemental together with its derivative.
///
/// The derivative cannot be obtained mechanically from the value function, so
/// both are supplied by the caller.
#[derive(Clone)]
pub struct CustomElemental {
    name: String,
    arity: usize,
    value: ValueFn,
    partials: PartialsFn,
    curvature_hint: Option<Vec<f64>>,
    taylor: Option<TaylorFn>,
    series_kernel: bool,
}

impl fmt::Debug for CustomElemental {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomElemental")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("curvature_hint", &self.curvature_hint)
            .field("series_kernel", &self.series_kernel)
            .finish()
    }
}

impl CustomElemental {
    pub fn new(name: impl Into<String>, arity: usize, value: ValueFn, partials: PartialsFn) -> Self {
        assert!(arity > 0, "custom elementals take at least one argument");
        Self {
            name: name.into(),
            arity,
            value,
            partials,
            curvature_hint: None,
            taylor: None,
            series_kernel: false,
        }
    }

    /// Convenience constructor for a univariate that is defined everywhere.
    pub fn univariate<F, D>(name: impl Into<String>, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            name,
            1,
            Arc::new(move |a: &[f64]| Some(f(a[0]))),
            Arc::new(move |a: &[f64], g: &mut [f64]| {
                g[0] = df(a[0]);
                g[0].is_finite()
            }),
        )
    }

    /// Upper bounds on the Lipschitz constants of each partial derivative,
    /// used by the curvature recurrence instead of sampling.
    pub fn with_curvature_hint(mut self, hint: Vec<f64>) -> Self {
        assert_eq!(hint.len(), self.arity);
        assert!(hint.iter().all(|h| *h >= 0.0 && h.is_finite()));
        self.curvature_hint = Some(hint);
        self
    }

    /// Supplies derivatives up to order 8 (univariates only).
    pub fn with_taylor(mut self, taylor: TaylorFn) -> Self {
        assert_eq!(self.arity, 1, "taylor data is only used for univariates");
        self.taylor = Some(taylor);
        self
    }

    /// Switches the secant kernel to the truncated Taylor form. Requires
    /// [`with_taylor`](Self::with_taylor).
    pub fn with_series_kernel(mut self, on: bool) -> Self {
        assert!(!on || self.taylor.is_some(), "series kernel needs taylor data");
        self.series_kernel = on;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn curvature_hint(&self) -> Option<&[f64]> {
        self.curvature_hint.as_deref()
    }

    pub fn series_kernel(&self) -> bool {
        self.series_kernel
    }

    pub fn value(&self, args: &[f64]) -> Option<f64> {
        (self.value)(args).filter(|v| v.is_finite())
    }

    pub fn partials(&self, args: &[f64], out: &mut [f64]) -> bool {
        (self.partials)(args, out) && out.iter().all(|g| g.is_finite())
    }

    pub fn taylor(&self, u: f64, out: &mut [f64; 9]) -> bool {
        match &self.taylor {
            Some(t) => t(u, out) && out.iter().all(|d| d.is_finite()),
            None => false,
        }
    }
}
