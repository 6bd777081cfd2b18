"""Epidemic process description shared by the operator engine and simulator."""

from __future__ import annotations

from dataclasses import dataclass

from .birth_times import BirthTimeDistribution, Deterministic
from .errors import DomainError

FORWARD = "forward"
BACKWARD = "backward"
INDEPENDENT = "independent"
SHIFTED = "shifted"


@dataclass
class EpidemicSpec:
    """A process (offspring, delay law, infectious window, direction).

    ``incubation`` defaults to zero delay and ``contagious`` to no bound
    (None means +infinity).  Forward processes draw one window per parent;
    backward processes draw an independent window per contact.
    ``ic_dependence`` is either "independent" or "shifted" (window end =
    incubation + an independent nonnegative gap ``ic_gap``).
    """

    offspring: object
    sigma: BirthTimeDistribution
    incubation: BirthTimeDistribution | None = None
    contagious: BirthTimeDistribution | None = None
    ic_dependence: str = INDEPENDENT
    ic_gap: BirthTimeDistribution | None = None
    direction: str = FORWARD

    def __post_init__(self):
        if self.direction not in (FORWARD, BACKWARD):
            raise DomainError(f"unknown direction {self.direction!r}")
        if self.ic_dependence not in (INDEPENDENT, SHIFTED):
            raise DomainError(f"unknown window dependence {self.ic_dependence!r}")
        if self.ic_dependence == SHIFTED and self.ic_gap is None:
            raise DomainError("shifted window dependence needs the gap law")
        if self.ic_dependence == SHIFTED and self.contagious is not None:
            raise DomainError("shifted mode derives the window end from the gap law")

    @property
    def has_incubation(self):
        inc = self.incubation
        if inc is None:
            return False
        return not (isinstance(inc, Deterministic) and inc.c == 0.0)

    @property
    def has_contagious_bound(self):
        if self.ic_dependence == SHIFTED:
            return True
        return self.contagious is not None

    @property
    def is_age_dependent(self):
        return not self.has_incubation and not self.has_contagious_bound


def age_dependent(offspring, sigma):
    return EpidemicSpec(offspring=offspring, sigma=sigma)
