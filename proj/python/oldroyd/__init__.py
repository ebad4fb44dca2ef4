"""Free-energy-dissipative finite element schemes for the Oldroyd-B model.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations: the symmetric 2x2 matrix calculus, mesh construction,
the lemma verification suite, and the simulation driver.
"""

from ._core import (
    ConfigError,
    DomainError,
    Mesh,
    barycentric_refine,
    build_structured_mesh,
    decompose_gradient,
    entropy_terms,
    pair_inequality_slacks,
    run_simulation,
    simulate,
    spd_exp,
    spd_log,
    verify_lemmas,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Mesh",
    "barycentric_refine",
    "build_structured_mesh",
    "decompose_gradient",
    "entropy_terms",
    "pair_inequality_slacks",
    "run_simulation",
    "simulate",
    "spd_exp",
    "spd_log",
    "verify_lemmas",
]
