"""Three-valued queries over partially known class memberships.

A consecutive-membership query asks: do two ADJACENT points in an
ordered sequence ever fall in the same class? Membership knowledge is
a set of (point, class) assertions plus optional negative assertions.
Under the open reading a missing assertion means "unknown"; under the
closed reading it means "false".

Domain axioms narrow the unknowns: an axiom states that every member
of a subject class belongs to at least one of up to four alternative
classes. Checking case-splits each applicable axiom into one branch
per alternative and evaluates the query in each branch with Kleene
three-valued logic. The verdict is True when every branch is True,
False when every branch is False, Unknown otherwise. The branch
product is capped; past the cap the check refuses instead of
guessing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional

from ..errors import BadSpecShape, CaseBudgetExceeded

MAX_AXIOM_WIDTH = 4
DEFAULT_CASE_BUDGET = 256

TRUE = "True"
FALSE = "False"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class DomainAxiom:
    """Members of `sub` belong to at least one class in `alternatives`."""
    sub: str
    alternatives: tuple

    def __post_init__(self):
        if not isinstance(self.alternatives, tuple):
            object.__setattr__(self, "alternatives", tuple(self.alternatives))
        if not 1 <= len(self.alternatives) <= MAX_AXIOM_WIDTH:
            raise BadSpecShape(
                f"axiom on {self.sub} has {len(self.alternatives)} alternatives, "
                f"allowed range is 1..{MAX_AXIOM_WIDTH}")


@dataclass(frozen=True)
class ConsecutiveQuery:
    """Do some two adjacent points share one of the candidate classes?"""
    points: tuple
    classes: tuple

    def __post_init__(self):
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))
        if not isinstance(self.classes, tuple):
            object.__setattr__(self, "classes", tuple(self.classes))


@dataclass
class OpenWorldResult:
    value: str  # True | False | Unknown
    cases: int  # branches evaluated
    per_case: list = field(default_factory=list)  # per-branch truth values


def _kleene_and(a: str, b: str) -> str:
    if a == FALSE or b == FALSE:
        return FALSE
    if a == UNKNOWN or b == UNKNOWN:
        return UNKNOWN
    return TRUE


def _kleene_or(a: str, b: str) -> str:
    if a == TRUE or b == TRUE:
        return TRUE
    if a == UNKNOWN or b == UNKNOWN:
        return UNKNOWN
    return FALSE


def check_open_world(query: ConsecutiveQuery,
                     axioms: Iterable[DomainAxiom] = (),
                     known: Iterable[tuple] = (),
                     negatives: Iterable[tuple] = (),
                     mode: str = "open",
                     case_budget: Optional[int] = DEFAULT_CASE_BUDGET) -> OpenWorldResult:
    """Evaluate the query; known/negatives are (point, class) pairs.

    mode 'open' treats unasserted memberships as Unknown, mode
    'closed' treats them as False. Axiom branches override both.
    """
    if mode not in ("open", "closed"):
        raise BadSpecShape(f"unknown world mode {mode!r}")
    known_set = set(known)
    negative_set = set(negatives)
    axioms = list(axioms)

    # Build the branch space: one choice of alternative per applicable
    # (point, axiom) pair, skipping alternatives ruled out negatively.
    choice_sites: list[list[tuple]] = []
    for point in query.points:
        for axiom in axioms:
            if (point, axiom.sub) in known_set:
                options = [(point, alt) for alt in axiom.alternatives
                           if (point, alt) not in negative_set]
                if not options:
                    # The axiom leaves no admissible alternative: the
                    # knowledge is unsatisfiable for this point; treat
                    # the whole query as False in every branch.
                    return OpenWorldResult(FALSE, 0, [])
                choice_sites.append(options)

    total = 1
    for options in choice_sites:
        total *= len(options)
        if case_budget is not None and total > case_budget:
            raise CaseBudgetExceeded(
                f"{total}+ axiom branches exceed the budget of {case_budget}")

    def member(point, cls, case_assertions) -> str:
        if (point, cls) in known_set or (point, cls) in case_assertions:
            return TRUE
        if (point, cls) in negative_set:
            return FALSE
        return FALSE if mode == "closed" else UNKNOWN

    per_case: list[str] = []
    branches = product(*choice_sites) if choice_sites else [()]
    count = 0
    for branch in branches:
        count += 1
        case_assertions = set(branch)
        outcome = FALSE
        for i in range(len(query.points) - 1):
            a, b = query.points[i], query.points[i + 1]
            for cls in query.classes:
                pair = _kleene_and(member(a, cls, case_assertions),
                                   member(b, cls, case_assertions))
                outcome = _kleene_or(outcome, pair)
            if outcome == TRUE:
                break
        per_case.append(outcome)

    if all(v == TRUE for v in per_case) and per_case:
        value = TRUE
    elif all(v == FALSE for v in per_case) and per_case:
        value = FALSE
    else:
        value = UNKNOWN
    if not per_case:
        value = FALSE
    return OpenWorldResult(value, count, per_case)
