use thiserror::Error;

/// Failure modes of the laboratory, named after the module contracts they
/// come from. [`CdftError::name`] gives the stable snake_case identifier that
/// ends up in run manifests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdftError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("operation not defined in dimension {0}")]
    DimensionUnsupported(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbitals are not orthonormalizable: {0}")]
    NotOrthonormalizable(String),
    #[error("dimension budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("ground state is degenerate or nearly so (gap {gap:.3e})")]
    DegenerateGroundState { gap: f64 },

    #[error("density vanishes (min {min:.3e} at or below floor {floor:.3e})")]
    DensityVanishes { min: f64, floor: f64 },
    #[error("density not normalized: integral {total} (expected {expected})")]
    NotNormalized { total: f64, expected: f64 },
    #[error("epsilon {0} outside (0, 1/2)")]
    BadEpsilon(f64),

    #[error("negative density {value:.3e} at grid point {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("density integrates to {total}, expected {expected}")]
    WrongNormalization { total: f64, expected: f64 },
    #[error("velocity field j/rho is not curl free (max curl {curl:.3e})")]
    NotCurlFree { curl: f64 },
    #[error("circulation {winding:.6} along axis {axis} is not a multiple of 2*pi")]
    IncompatibleCirculation { axis: usize, winding: f64 },
    #[error("constraints infeasible: residual {residual:.3e} above tolerance {tol:.3e}")]
    InfeasibleConstraints { residual: f64, tol: f64 },

    #[error("ground pair violates curl-free condition (max curl {curl:.3e})")]
    CurlConditionViolated { curl: f64 },
    #[error("aufbau occupation ambiguous: HOMO-LUMO gap {gap:.3e}")]
    AufbauAmbiguity { gap: f64 },

    #[error("row count {found} does not match grid size {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unknown field family '{0}'")]
    UnknownFamily(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CdftError {
    pub fn name(&self) -> &'static str {
        use CdftError::*;
        match self {
            InvalidGrid(_) => "invalid_grid",
            GridMismatch => "grid_mismatch",
            DimensionUnsupported(_) => "dimension_unsupported",
            InvalidArgument(_) => "invalid_argument",
            NotOrthonormalizable(_) => "not_orthonormalizable",
            BudgetExceeded { .. } => "budget_exceeded",
            NoConvergence { .. } => "no_convergence",
            DegenerateGroundState { .. } => "degenerate_ground_state",
            DensityVanishes { .. } => "density_vanishes",
            NotNormalized { .. } => "not_normalized",
            BadEpsilon(_) => "bad_epsilon",
            NegativeDensity { .. } => "negative_density",
            WrongNormalization { .. } => "wrong_normalization",
            NotCurlFree { .. } => "not_curl_free",
            IncompatibleCirculation { .. } => "incompatible_circulation",
            InfeasibleConstraints { .. } => "infeasible_constraints",
            CurlConditionViolated { .. } => "curl_condition_violated",
            AufbauAmbiguity { .. } => "aufbau_ambiguity",
            ShapeMismatch { .. } => "shape_mismatch",
            ParseError { .. } => "parse_error",
            UnknownFamily(_) => "unknown_family",
            BadParameters(_) => "bad_parameters",
            Io(_) => "io_error",
        }
    }

    /// Module whose contract raised the error.
    pub fn module(&self) -> &'static str {
        use CdftError::*;
        match self {
            InvalidGrid(_) | GridMismatch | DimensionUnsupported(_) => "lattice",
            InvalidArgument(_) => "core",
            NotOrthonormalizable(_)
            | BudgetExceeded { .. }
            | NoConvergence { .. }
            | DegenerateGroundState { .. } => "manybody",
            DensityVanishes { .. } | NotNormalized { .. } | BadEpsilon(_) => "vrep",
            NegativeDensity { .. }
            | WrongNormalization { .. }
            | NotCurlFree { .. }
            | IncompatibleCirculation { .. }
            | InfeasibleConstraints { .. } => "csearch",
            CurlConditionViolated { .. } | AufbauAmbiguity { .. } => "kohnsham",
            ShapeMismatch { .. } | ParseError { .. } | Io(_) => "io",
            UnknownFamily(_) | BadParameters(_) => "families",
        }
    }

    /// Numerical outcomes, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        use CdftError::*;
        matches!(
            self,
            NoConvergence { .. }
                | DegenerateGroundState { .. }
                | DensityVanishes { .. }
                | InfeasibleConstraints { .. }
                | NotOrthonormalizable(_)
                | NotCurlFree { .. }
                | IncompatibleCirculation { .. }
                | CurlConditionViolated { .. }
                | AufbauAmbiguity { .. }
                | NegativeDensity { .. }
                | WrongNormalization { .. }
                | NotNormalized { .. }
                | BudgetExceeded { .. }
        )
    }
}

pub type Result<T, E = CdftError> = std::result::Result<T, E>;
