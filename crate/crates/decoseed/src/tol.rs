//! Shared numerical tolerances.
//!
//! Each constant is a contract: tightening one is safe only if every
//! routine that promises it still delivers, loosening one weakens the
//! guarantees the acceptance suite pins.

/// Hermiticity defect allowed in operator and density constructors.
pub const HERM_TOL: f64 = 1e-12;

/// Trace deviation from 1 allowed for a density operator.
pub const TRACE_TOL: f64 = 1e-12;

/// Most negative eigenvalue a density operator may carry; separates
/// eigensolver noise on rank-deficient states from genuine indefiniteness.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// Projector orthogonality, idempotence, completeness, and recomposition.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Commutator norms for the model assumptions ([H_S,V_S], [H_S,P_m], [H_E,V_E]).
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// Normalization defect tolerated when constructing a spectral measure.
pub const MEASURE_NORM_TOL: f64 = 1e-10;

/// Normalization defect beyond which quadrature of a measure is refused.
pub const MEASURE_NORM_HARD: f64 = 1e-8;

/// Weight-sum defect for mixtures (initial-state and coherent).
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// |chi| excess over 1 tolerated in the commuting closed forms.
pub const CHI_UNITY_TOL: f64 = 1e-12;

/// Samples with |chi| at or below this floor are excluded from decay fits.
pub const CHI_FIT_FLOOR: f64 = 1e-12;

/// Multiplicative slack in the decay-bound verification scan.
pub const BOUND_SLACK: f64 = 1e-6;

/// A curve whose last-quarter sup of |chi| stays at or above this level
/// keeps returning to full coherence; fitting a decay bound to it is
/// ill-posed.
pub const NO_DECAY_LEVEL: f64 = 0.9;

/// Fock-state tail mass above n_max/2 beyond which a truncated
/// expectation value is refused.
pub const FOCK_TAIL_TOL: f64 = 1e-8;

/// Unitarity defect allowed for wave-operator approximants.
pub const UNITARY_TOL: f64 = 1e-10;

/// Default deviation tolerance for oracle cross-checks.
pub const ORACLE_TOL_DEFAULT: f64 = 1e-10;

/// Default absolute eigenvalue clustering tolerance; model eigenvalues
/// are O(1) by construction in all scenarios.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Default grid size for continuous spectral measures.
pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Gaussian grids extend to +-(this many) sigma; the truncated tail mass
/// is ~1e-17, below every tolerance in use.
pub const GAUSSIAN_PAD_SIGMAS: f64 = 8.6;

/// |eps^-1 f|^2 above which a mode function is treated as infrared
/// divergent and pointwise grid evaluation requires an explicit override.
pub const IR_CAP_DEFAULT: f64 = 1e6;

/// Brute-force total-dimension cap (full diagonalization stays ~1 min).
pub const DIM_CAP: usize = 4096;

/// Smallest Fock truncation accepted by the dressing check.
pub const MIN_DRESSING_NMAX: usize = 20;
