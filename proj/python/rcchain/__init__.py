"""Python access to the rcchain library."""

from ._rcchain import (  # noqa: F401
    Error,
    ParseError,
    PreconditionError,
    QuadratureError,
    admittance,
    detect_chains,
    fn_gn,
    reduce,
    roundtrip,
    run_sweep,
    simulate_full,
    weighted_errors,
)
