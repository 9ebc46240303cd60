"""Exhaustive desk-scale memory-model simulator."""

from .machine import (
    DEFAULT_MAX_STATES,
    DEFAULT_UNROLL,
    Event,
    Execution,
    Machine,
    Model,
    Outcome,
    OutcomeSet,
    Progress,
    StateSpaceExceeded,
    check_progress,
    enumerate_outcomes,
    executions,
)
from .program import (
    MAX_HOLDERS,
    Assign,
    Clause,
    CsEnter,
    CsExit,
    Expr,
    Load,
    Location,
    Loop,
    Program,
    ProgramError,
    Rmw,
    Store,
    Thread,
)
from .relations import (
    PreconditionViolated,
    Race,
    Verdict,
    check_drf_sc,
    detect_races,
    happens_before,
    races_in,
    synchronizes_with,
)
