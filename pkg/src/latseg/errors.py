"""Exception types shared across the package."""


class LatsegError(Exception):
    """Base class for all domain errors."""


# lattice core
class NotAPartialOrder(LatsegError):
    pass


class NotALattice(LatsegError):
    pass


class Unbounded(LatsegError):
    pass


class NotAHomomorphism(LatsegError):
    pass


class AdjointPropertyFailed(LatsegError):
    def __init__(self, clause: int, witness=None):
        self.clause = clause
        self.witness = witness
        super().__init__(f"adjoint property ({clause}) fails at {witness!r}")


class LatticeFormatError(LatsegError):
    pass


# partitions and algebras
class CarrierMismatch(LatsegError):
    pass


class CarrierTooLarge(LatsegError):
    pass


class NotALatticeTable(LatsegError):
    pass


class NoPath(LatsegError):
    pass


# graphs
class EdgeNotFound(LatsegError):
    pass


class BudgetExceeded(LatsegError):
    def __init__(self, projected: int, budget: int):
        self.projected = projected
        self.budget = budget
        super().__init__(f"projected {projected} vertices exceeds budget {budget}")


class NotInjectiveAtStage(LatsegError):
    def __init__(self, a: int, b: int):
        self.pair = (a, b)
        super().__init__(f"lattice elements {a} and {b} induce the same partition")


class ConditionViolated(LatsegError):
    def __init__(self, condition: int, witness=None):
        self.condition = condition
        self.witness = witness
        super().__init__(f"condition ({condition}) violated: {witness!r}")


class NotAChainEdge(LatsegError):
    pass


class NotStable(LatsegError):
    pass


class NotAPath(LatsegError):
    pass


# limits
class StageTooSmall(LatsegError):
    pass


class RecolorCollapse(LatsegError):
    pass


class NotUsl(LatsegError):
    pass


class MalformedTable(LatsegError):
    pass


# interpolation
class NoMeetInterpolants(LatsegError):
    pass


class NoHomogeneityInterpolants(LatsegError):
    pass


class NotFound(LatsegError):
    pass


# trees
class PreconditionFailed(LatsegError):
    def __init__(self, kind, witness=None):
        self.kind = kind
        self.witness = witness
        super().__init__(f"precondition for {kind} fails: {witness!r}")


class NotInDomain(LatsegError):
    pass


class LengthMismatch(LatsegError):
    pass


class BudgetExhausted(LatsegError):
    pass


class EliminationEmpty(LatsegError):
    pass


class NotAnLTree(LatsegError):
    pass


# simulator
class InvariantViolation(LatsegError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__(f"{len(violations)} invariant violation(s); first: {violations[0]!r}")


class IllFormedReception(LatsegError):
    pass
