"""Coupled quasilinear wave systems: structure checks, evolution, diagnostics.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

from nullwave._core import (  # noqa: F401
    CoeffTensor,
    check_null,
    check_null_extended,
    check_symmetry,
    check_tensor_file,
    commutator,
    evaluate_nonlinearity,
    fit_growth,
    iterated_commutators,
    load_tensor,
    preset_names,
    run_config,
    run_preset,
    validate_config,
    __version__,
)
