//! Centralized numeric tolerances.
//!
//! Exact-rational identities need no tolerance; everything that crosses the
//! numeric boundary (quadrature, root finding, rank decisions) reads its
//! threshold from here so tests and the CLI calibrate against one record.

#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Embedding residual allowed for catalog points.
    pub on_space: f64,
    /// Tangency residual for tangent vectors against the normal space.
    pub tangent: f64,
    /// Orthonormality residual for parallel frames.
    pub frame_orth: f64,
    /// Geodesic semigroup property residual.
    pub geodesic_compose: f64,
    /// |distance(p, c(t)) - t| along a geodesic inside the injectivity radius.
    pub distance_along: f64,
    /// Curvature operator vs finite-difference Jacobi oracle.
    pub curvature_fd: f64,
    /// Gradient vs finite-difference directional derivative.
    pub gradient_fd: f64,
    /// Pointwise Gram-matrix vs gradient-field dot products.
    pub gram_pointwise: f64,
    /// Fiberwise constancy of quotient-map components.
    pub fiber_constancy: f64,
    /// Chart parameterization residual against the embedding equations.
    pub chart_on_space: f64,
    /// Relative error of quadrature fiber volumes against closed forms.
    pub fiber_volume: f64,
    /// Relative singular-value threshold for numeric rank decisions.
    pub rank_rel: f64,
    /// A singular value within this factor of the threshold is inconclusive.
    pub rank_ambiguity_factor: f64,
    /// Relative singular-value threshold for focal kernel dimensions.
    pub kernel_svd_rel: f64,
    /// Bisection width for det E(t) roots.
    pub root_bisect: f64,
    /// Roots closer than this are merged with summed multiplicity.
    pub root_merge: f64,
    /// Margin that triggers the window-edge warning.
    pub window_edge: f64,
    /// Closed-form vs ODE Jacobi backend agreement.
    pub backend_agree: f64,
    /// Wronskian-pairing drift allowed along a Jacobi system.
    pub wronskian: f64,
    /// Distance-to-fiber refinement tolerance (golden section).
    pub distance_refine: f64,
    /// Affine tail fit residual above which the tail model is rejected.
    pub tail_fit: f64,
    /// Step for central finite differences on charts.
    pub fd_step: f64,
    /// Agreement required between d_rho(v1) and d_rho(v2) in basic-focal checks.
    pub dsigma_match: f64,
    /// Numeric commutator residual allowed on quadrature backends.
    pub commutator_numeric: f64,
    /// Spread allowed in basic-mean-curvature reports.
    pub mean_curvature_spread: f64,
    /// Degree cap for canonical forms and filtrations.
    pub degree_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on_space: 1e-14,
            tangent: 1e-12,
            frame_orth: 1e-12,
            geodesic_compose: 1e-12,
            distance_along: 1e-10,
            curvature_fd: 1e-6,
            gradient_fd: 1e-6,
            gram_pointwise: 1e-10,
            fiber_constancy: 1e-10,
            chart_on_space: 1e-12,
            fiber_volume: 1e-10,
            rank_rel: 1e-8,
            rank_ambiguity_factor: 10.0,
            kernel_svd_rel: 1e-7,
            root_bisect: 1e-10,
            root_merge: 1e-8,
            window_edge: 1e-6,
            backend_agree: 1e-9,
            wronskian: 1e-9,
            distance_refine: 1e-10,
            tail_fit: 1e-3,
            fd_step: 1e-4,
            dsigma_match: 1e-10,
            commutator_numeric: 1e-8,
            mean_curvature_spread: 1e-6,
            degree_cap: 12,
        }
    }
}
