"""Exception hierarchy shared by all modules."""


class SsadmitError(Exception):
    pass


class ModelError(SsadmitError):
    """Malformed model or certificate input (schema, dimensions, kind)."""


class AssumptionError(SsadmitError):
    """rank[E C(i)] != rank E for some mode, so no common restricted form exists."""


class ImpulsiveError(SsadmitError):
    """The fast block A22(i) is singular: the mode is impulsive (or non-causal)."""


class NonRegularPencilError(SsadmitError):
    """det(sE - A) vanishes identically."""


class SolverError(SsadmitError):
    """The feasibility engine broke down; the outcome is unknown."""


class InconsistentInitialState(SsadmitError):
    """x0 does not satisfy the algebraic constraint of the initial mode."""
