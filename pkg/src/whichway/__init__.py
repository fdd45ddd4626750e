"""Monte Carlo study of a two photon remote which-way experiment.

A polarization correlated pair is split between a projective polarization
measurement on one side and a two arm interferometer on the other.  The
package simulates coincidence gated fringe scans under three state
models, locates the visibility step as the measurement order flips, and
turns that step into bounds on the speed of the conditioning influence.
"""

from .fitting import (
    FitFailure,
    KinkCurve,
    KinkFit,
    KinkPoint,
    VisibilityEstimate,
    fit_kink,
    fit_visibility,
    kink_amplitude,
    kink_model,
    visibility_minmax,
)
from .hilbert import (
    Arm,
    ArmDensity,
    JointLabel,
    Pol,
    PureState,
    ZeroProbabilityCollapse,
    inner_product,
    project,
    reduce_to_bob_arm,
    subspace_probability,
)
from .montecarlo import (
    AliceMode,
    BatchCounts,
    CoincidenceSpec,
    ExperimentConfig,
    FringePoint,
    FringeScan,
    GridSpec,
    GridTooCoarse,
    NoiseSpec,
    TrialOrigin,
    TrialOutcome,
    analytic_rates,
    run_batch,
    run_trial,
    scan_fringes,
)
from .optics import (
    AliceDetector,
    BeamSplitterSpec,
    InterferometerSpec,
    InvalidGeometry,
    ModelMismatch,
    SourceSpec,
    SourceType,
    StateModel,
    bob_click_probability,
    conditional_fd_probability,
    fd_probability,
    split_joint_state,
)
from .timing import CollapseSpec, EventTimes, Geometry, decohered_before_bob, kink_center
from .config import ConfigError, ParsedRun, canonical_text, config_hash, load_config, parse_config
from .experiments import (
    AdPosition,
    CoherenceResult,
    CommutationResult,
    DegenerateGeometries,
    KinkExperimentResult,
    QiSpeedResult,
    UnresolvedKink,
    WhichWayResult,
    exp_coherence_test,
    exp_commutation,
    exp_kink,
    exp_qi_speed,
    exp_remote_which_way,
    kink_curve,
)
from .output import IoError, RunManifest

__version__ = "0.1.0"

__all__ = [
    "AdPosition",
    "AliceDetector",
    "AliceMode",
    "Arm",
    "ArmDensity",
    "BatchCounts",
    "BeamSplitterSpec",
    "CoherenceResult",
    "CoincidenceSpec",
    "CollapseSpec",
    "CommutationResult",
    "ConfigError",
    "DegenerateGeometries",
    "EventTimes",
    "ExperimentConfig",
    "FitFailure",
    "FringePoint",
    "FringeScan",
    "Geometry",
    "GridSpec",
    "GridTooCoarse",
    "InterferometerSpec",
    "InvalidGeometry",
    "IoError",
    "JointLabel",
    "KinkCurve",
    "KinkExperimentResult",
    "KinkFit",
    "KinkPoint",
    "ModelMismatch",
    "NoiseSpec",
    "ParsedRun",
    "Pol",
    "PureState",
    "QiSpeedResult",
    "RunManifest",
    "SourceSpec",
    "SourceType",
    "StateModel",
    "TrialOrigin",
    "TrialOutcome",
    "UnresolvedKink",
    "VisibilityEstimate",
    "WhichWayResult",
    "ZeroProbabilityCollapse",
    "analytic_rates",
    "bob_click_probability",
    "canonical_text",
    "conditional_fd_probability",
    "config_hash",
    "decohered_before_bob",
    "exp_coherence_test",
    "exp_commutation",
    "exp_kink",
    "exp_qi_speed",
    "exp_remote_which_way",
    "fd_probability",
    "fit_kink",
    "fit_visibility",
    "inner_product",
    "kink_amplitude",
    "kink_center",
    "kink_curve",
    "kink_model",
    "load_config",
    "parse_config",
    "project",
    "reduce_to_bob_arm",
    "run_batch",
    "run_trial",
    "scan_fringes",
    "split_joint_state",
    "subspace_probability",
    "visibility_minmax",
    "__version__",
]
