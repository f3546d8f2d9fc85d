"""Time-dependent quantum channels: representations, canonical rates and
divisibility diagnostics."""

from .canon import (
    CanonicalRates,
    DampingForm,
    GeneratorSnapshot,
    canonical_rates,
    damping_form,
    from_dissipators,
    generator_from_trajectory,
    integrate_generator,
    projected_rates,
    rates_qubit_gad,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .curves import ParamCurve, admit_damping_curve
from .errors import *  # noqa: F401,F403
from .representations import (
    ChoiMatrix,
    KrausSet,
    TransferMatrix,
    choi_to_transfer,
    compose,
    intermediate_map,
    kraus_to_choi,
    kraus_to_transfer,
    transfer_to_choi,
)
from .spec_io import ChannelSpec, load_spec, parse_spec
from .witness import (
    WitnessSeries,
    ancilla_p_scan,
    cp_divisibility_scan,
    default_ensemble,
    full_scan,
    hcla_measure,
    onset_detector,
    p_divisibility_scan,
)

__version__ = "0.1.0"
