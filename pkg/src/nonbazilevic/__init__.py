"""Numerical verification of subordination results for non-Bazilevic classes of p-valent functions."""

from .corpus import CorpusEntry, RunConfig, generate_corpus, load_config
from .dominant import (
    DominantSpec,
    dominant_quadrature,
    dominant_report,
    dominant_series,
    dominant_values,
    extrema_of_re,
    lemma1_transform,
)
from .harness import RunReport, emit_traces, run_all
from .operator import (
    ClassParams,
    RhoBound,
    TheoremReport,
    check_theorem_2_1,
    check_theorem_2_2,
    check_theorem_2_3,
    check_theorem_3_1,
    check_theorem_4_1,
    check_theorem_5_1,
    identity_check,
    membership_def1,
    membership_def2,
    nb_operator,
    phi,
)
from .regions import (
    Disk,
    HalfPlane,
    MobiusTarget,
    SubordinationVerdict,
    check_subordination,
    mobius_image,
    region_nested,
    schwarz_witness,
    winding_number,
)
from .series import (
    AnalyticFunction,
    DiskGrid,
    PowerSeries,
    default_grid,
    make_function,
    power_with_continuation,
    principal_power,
)

__version__ = "0.1.0"
