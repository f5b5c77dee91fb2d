"""Exception hierarchy.

Every error raised on bad input or an unsatisfiable request derives from
``DomainError``. The CLI maps these to exit code 1.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Input is well-formed but violates a mathematical precondition."""


class InvalidParams(DomainError):
    pass


class ZeroPrivacyBudget(DomainError):
    def __init__(self) -> None:
        super().__init__("(epsilon, delta) = (0,0) admits no finite-cost mechanism")


class NegativeProbability(DomainError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(f"probability at index {index} is negative ({value!r})")
        self.index = index
        self.value = value


class NotNormalized(DomainError):
    def __init__(self, total: float) -> None:
        deviation = total - 1.0
        super().__init__(f"probabilities sum to {total!r} (deviation {deviation:+.3e})")
        self.total = total
        self.deviation = deviation


class LambdaOutOfRange(DomainError):
    def __init__(self, lam: float) -> None:
        super().__init__(f"geometric parameter lambda={lam!r} must lie in (0, 1)")
        self.lam = lam


class TableOutOfRange(DomainError):
    def __init__(self, index: int, length: int) -> None:
        super().__init__(f"cost table has {length} entries; |k|={index} is beyond it")
        self.index = index
        self.length = length


class InvalidCost(DomainError):
    pass


class DivergentCost(DomainError):
    pass


class EpsilonZero(DomainError):
    def __init__(self) -> None:
        super().__init__("epsilon must be positive for the discrete Laplacian")


class IntegralityViolated(DomainError):
    """A ratio that must be a positive integer is not.

    ``nearest_delta`` is the closest delta value that would satisfy the
    requirement at the same sensitivity.
    """

    def __init__(self, quantity: str, value: float, nearest_delta: float) -> None:
        super().__init__(
            f"{quantity} = {value!r} is not a positive integer; "
            f"nearest admissible delta is {nearest_delta!r}"
        )
        self.quantity = quantity
        self.value = value
        self.nearest_delta = nearest_delta


class DimensionMismatch(DomainError):
    pass


class SupportTooLarge(DomainError):
    def __init__(self, cells: int, shifts: int, limit: int) -> None:
        super().__init__(
            f"exact check needs {cells} cells and {shifts} shift vectors; limit is {limit} each"
        )
        self.cells = cells
        self.shifts = shifts


class TruncationTooSmall(DomainError):
    def __init__(self, truncation: int, required: int) -> None:
        super().__init__(f"truncation N={truncation} is below the required {required}")
        self.truncation = truncation
        self.required = required


class TruncationTooLarge(DomainError):
    pass


class LpInfeasible(DomainError):
    pass


class LpUnbounded(DomainError):
    pass


class NegativeWeight(DomainError):
    def __init__(self, which: str, value: float) -> None:
        super().__init__(f"constructed dual weight {which} is negative ({value!r})")
        self.which = which
        self.value = value


class NoFeasibleCertificate(DomainError):
    pass


class RegimeMismatch(DomainError):
    pass
