"""Exact-arithmetic differentiation bases of boxes on the infinite torus.

The package constructs, at finite truncation depth, families of
axis-parallel boxes whose averages differentiate L^p exactly above a
prescribed exponent and provably fail below it. Everything set-theoretic
is computed in rational arithmetic: covering measures, atom partitions,
independence identities, maximal-operator ratios, and the exceptional-set
ledger are exact identities, not numerical estimates.

Layers, bottom to top:

- :mod:`torusdiff.geometry` — cylinder boxes, exact measures, dyadic
  decomposition;
- :mod:`torusdiff.lattice` — the fundamental-cell grading and its grids;
- :mod:`torusdiff.configurations` — center-plus-translates configurations,
  their atom cells, the closed-form norm oracle, and witness searches;
- :mod:`torusdiff.covering` — the iterated equal-measure covering of a
  cube by configuration unions, exact per-round ledgers;
- :mod:`torusdiff.schedule` — per-level parameter schedules and the
  symbolic differentiation-range classifier;
- :mod:`torusdiff.basis` — the leveled construction, atom classes,
  axiom verification, independence tables;
- :mod:`torusdiff.maximal` — averages, restricted maximal operators,
  weak-type ratios, the failing-function ledger;
- :mod:`torusdiff.spaces` — companion weighted spaces, gluing, and the
  transfer to interval unions on [0,1];
- :mod:`torusdiff.serialize` / :mod:`torusdiff.cli` — reproducible JSON
  and CSV artifacts behind the ``torusdiff`` command.
"""

from .basis import (
    AtomClass,
    AxiomReport,
    LeveledBasis,
    build_basis,
    counterexample_function,
    independence_table,
    materialize_atoms,
    sample_instances,
    verify_axioms,
)
from .configurations import (
    Configuration,
    configuration_cells,
    corner_configuration,
    make_configuration,
    norm_asymptotics_oracle,
    weak_type_lower_search,
)
from .covering import CoverEngine, CoverParams
from .geometry import FULL, Box, box_set_measure, decompose_into_cubes, translate_box
from .maximal import (
    SimpleFunction,
    average,
    exceptional_lower_bound,
    lp_ledger,
    maximal_value,
    weak_type_ratio,
)
from .schedule import Schedule, classify_diff_range, make_schedule
from .spaces import (
    example_e1,
    example_e4,
    glue,
    transfer_to_interval,
)

__version__ = "0.1.0"

__all__ = [
    "AtomClass",
    "AxiomReport",
    "Box",
    "Configuration",
    "CoverEngine",
    "CoverParams",
    "FULL",
    "LeveledBasis",
    "Schedule",
    "SimpleFunction",
    "average",
    "box_set_measure",
    "build_basis",
    "classify_diff_range",
    "configuration_cells",
    "corner_configuration",
    "counterexample_function",
    "decompose_into_cubes",
    "example_e1",
    "example_e4",
    "exceptional_lower_bound",
    "glue",
    "independence_table",
    "lp_ledger",
    "make_configuration",
    "make_schedule",
    "materialize_atoms",
    "maximal_value",
    "norm_asymptotics_oracle",
    "sample_instances",
    "transfer_to_interval",
    "translate_box",
    "verify_axioms",
    "weak_type_lower_search",
    "weak_type_ratio",
    "__version__",
]
