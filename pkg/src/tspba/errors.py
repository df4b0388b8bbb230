"""Exception hierarchy for the solver.

Every error the library raises derives from TspbaError so callers can
catch the whole family.  Names correspond to the failure they signal;
none of them carries extra state beyond the message.
"""


class TspbaError(Exception):
    """Base class for all library errors."""


# -- instance construction / lookup ------------------------------------

class TooSmall(TspbaError):
    """Instance has fewer than 3 vertices, so no Hamilton cycle exists."""


class SelfLoop(TspbaError):
    """An edge with both endpoints equal was supplied."""


class MissingEdge(TspbaError):
    """A vertex pair has no weight entry."""


class DuplicateEdge(TspbaError):
    """A vertex pair was given more than one weight entry."""


class UnknownEdge(TspbaError):
    """An edge refers to a vertex outside 1..n (or is a self loop)."""


class SizeMismatch(TspbaError):
    """Two weightings with different vertex counts were combined."""


class NotHamiltonian(TspbaError):
    """A vertex sequence is not a Hamilton cycle of K_n."""


# -- partial Hamilton cycles --------------------------------------------

class DegreeExceeded(TspbaError):
    """An edge set gives some vertex degree three or more."""


class PrematureCycle(TspbaError):
    """An edge set contains a cycle on fewer than n vertices."""


class AlreadyComplete(TspbaError):
    """The partial Hamilton cycle is already a full cycle."""


class NotJoinable(TspbaError):
    """The edge does not join two paths of the partial Hamilton cycle."""


# -- pipeline ------------------------------------------------------------

class PreconditionFailed(TspbaError):
    """A stated precondition of an operation does not hold."""


class IterationCapExceeded(TspbaError):
    """The unbalanced-4-cycle removal ran past its iteration budget."""


class TooFewOutsideVertices(TspbaError):
    """The complement of X is too small to build candidate sets."""


class KernelTooLarge(TspbaError):
    """The kernel X u Y exceeds the configured dynamic-programming cap."""


class ExtensionStalled(TspbaError):
    """Rotation-extension failed although its degree precondition held.

    This always indicates an implementation bug; the caller must treat it
    as a hard abort, never as a partial answer.
    """


class SharedVertex(TspbaError):
    """Two edges passed to a crossing test share a vertex."""


# -- oracle budgets -------------------------------------------------------

class BudgetExceeded(TspbaError):
    """A brute-force oracle was asked to run beyond its configured budget."""
