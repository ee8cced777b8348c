"""Monte-Carlo single-spin magnetometry: Ramsey fringes, adaptive and
hard-decision phase estimation, AC sensing, and dipole imaging."""

__version__ = "0.1.0"

from .constants import (
    ALPHA0_DEFAULT,
    ALPHA1_DEFAULT,
    GAMMA_E,
    N_GRID_DEFAULT,
    T2_STAR_DEFAULT,
    T_MIN_DEFAULT,
)
from .spinops import (
    DephasingModel,
    DriveParams,
    QubitState,
    apply_dephasing,
    apply_unitary,
    feedback_rotation,
    ground_state,
    phase_evolution,
    plus_state,
    rotation,
)
from .readout import (
    ReadoutModel,
    kappa_for_multiple,
    kappa_threshold,
    measurement_fidelity,
    sample_bit,
)
from .estimation import (
    LikelihoodGrid,
    bayes_update,
    mle,
    phase_variance,
    to_field,
    uniform_prior,
    wrap_angle,
)
from .ramsey import (
    fit_fringe,
    ramsey_dynamic_range,
    ramsey_sensitivity,
    simulate_ramsey_fringe,
)
from .pea import (
    PEAConfig,
    PEAResult,
    control_phase_set,
    measurement_schedule,
    resource_count,
    run_napea,
    run_napea_phase,
    run_qpea,
    run_qpea_phase,
)
from .acmag import ACField, EchoSequence, accumulated_phase, extract_ac_field, run_ac_pea
from .imaging import Dipole, DipoleScene, position_error, resonance_contour
from .config import default_config, load_config, parse_config, serialize_config
from .harness import (
    ExperimentSpec,
    bloch_siegert_bound,
    derive_trial_rng,
    run_experiment,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
