use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is not on the space (residual {residual:.3e})")]
    OffSpace { residual: f64 },

    #[error("vector is not a unit tangent vector (|v| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error("unknown space id `{0}`")]
    UnknownSpace(String),

    #[error("unknown submetry id `{0}`")]
    UnknownSubmetry(String),

    #[error("spaces do not match: `{0}` vs `{1}`")]
    SpaceMismatch(String, String),

    #[error("parse error in polynomial `{input}`: {msg}")]
    PolyParse { input: String, msg: String },

    #[error("degree bound {requested} exceeds configured cap {cap}")]
    DegreeCap { requested: usize, cap: usize },

    #[error("eigenvalue cutoff exceeded: component at lambda = {lambda} > cutoff {cutoff}")]
    CutoffExceeded { lambda: f64, cutoff: f64 },

    #[error("subalgebra is not certified Laplacian-closed: {0}")]
    NotClosed(String),

    #[error("function is not basic: generator {index} varies by {spread:.3e} on a fiber")]
    NotBasic { index: usize, spread: f64 },

    #[error("quadrature order {order} insufficient for trigonometric degree {needed}")]
    QuadratureOrder { order: usize, needed: usize },

    #[error("exact averaging backend does not support submetry `{0}`")]
    ExactBackendUnsupported(String),

    #[error("sample lies off the regular set of `{0}`")]
    SingularSample(String),

    #[error("rank decision inconclusive at lambda = {lambda}: singular value {sv:.3e} within 10x of threshold {threshold:.3e}")]
    RankInconclusive { lambda: f64, sv: f64, threshold: f64 },

    #[error("degenerate chart parameterization: tangent frame is rank-deficient")]
    DegenerateChart,

    #[error("integrator tolerance not met (achieved {achieved:.3e}, requested {requested:.3e})")]
    IntegratorTolerance { achieved: f64, requested: f64 },

    #[error("focal root at window edge (t = {t:.6}) within {margin:.1e}")]
    RootAtWindowEdge { t: f64, margin: f64 },

    #[error("multiplicity ambiguity near t = {t:.6}: unresolved double root")]
    MultiplicityAmbiguity { t: f64 },

    #[error("tail model unreliable: fit residual {residual:.3e} exceeds {limit:.3e}")]
    TailModelUnreliable { residual: f64, limit: f64 },

    #[error("need at least {needed} focal pairs in the window, found {found}")]
    TooFewPairs { needed: usize, found: usize },

    #[error("pole of cot at phi = {0}")]
    CotPole(f64),

    #[error("pushed-forward directions disagree: |d_rho(v1) - d_rho(v2)| = {0:.3e}")]
    DirectionMismatch(f64),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
