"""Local correction of juntas and partially symmetric functions known up to isomorphism."""

from .boolfn import (
    Isomorphism,
    JuntaCore,
    JuntaFunction,
    PsfCore,
    PsfFunction,
    TableFunction,
    constant,
    dictator,
    distance,
    load_function,
    save_function,
)
from .corrector import (
    ConstantsProfile,
    CorrectionTrace,
    find_asymmetric_sets,
    find_influencing_sets,
    locally_correct_junta,
    locally_correct_psf,
)
from .harness import (
    ExperimentConfig,
    Report,
    TrialReport,
    emit_report,
    parse_report,
    run_junta_experiment,
    run_psf_experiment,
    run_typicality_suite,
)
from .influence import (
    EstimatorParams,
    estimate_influence,
    estimate_symmetric_influence,
    influence_exact,
    symmetric_influence_exact,
)
from .oracle import BatchSession, NoiseSpec, Oracle, PhaseError, make_oracle
from .sampling import Partition, random_partition, sample_balanced, sample_merged, sample_workspace
from .typicality import (
    TypicalityVerdict,
    check_core_far_from_isomorphisms,
    check_core_min_influence,
    check_psf_far_from_core_perms,
    check_psf_pair_syminf,
    make_hard_junta,
)

__version__ = "0.1.0"
