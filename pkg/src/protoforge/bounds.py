"""Synchronization probabilities and the retransmission-bound optimization.

For a two-event sequence with bounds (n1, n2) under drop probability d and
reception probability rho = 1 - d, the synchronization probability has the
closed form

    P(n1, n2) = rho*(1 - d^(n1+1))
              + rho^3/(1 - d*rho) * sum_{i=1..n1} d^i * (1 - (d*rho)^M),
    M = min(n1 + 1 - i, n2).

Longer sequences evaluate by structural recursion over delivery phases: the
first message is delivered after i of up to n1 drops; every later non-final
message couples its retries to the previous loop's remaining budget (each of
its drops also burns one timeout of the previous loop); the final message
retries only when the peer's preceding message is re-delivered, giving the
geometric tail rho * sum_{t<=min(a,b)} (d*rho)^t.  The recursion reproduces
the two-event closed form exactly and is pinned against the exhaustive
deduction semantics by tests.

The bound optimization minimizes the total of all retransmission bounds
subject to every sequence of the specification reaching its required
probability.  The solver
exploits that P is nondecreasing in every bound: per-variable lower bounds
come from relaxing all other variables to the cap, candidate vectors are
enumerated in nondecreasing total sum (lexicographic within a sum), and
infeasibility is reported either analytically via the supremum
rho/(1 - d*rho) or as exhaustion of the cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from .errors import NotWellPosed, SequenceTooShort
from .speclang import FullSpec, SpecNode, enumerate_sequences, events_of, well_posed


def _check_delta(drop_prob: float):
    if not 0.0 <= drop_prob <= 1.0:
        raise ValueError(f"drop probability {drop_prob} outside [0, 1]")


def sync_prob_two(n1: int, n2: int, drop_prob: float) -> float:
    """Closed-form synchronization probability of a two-event sequence."""
    if n1 < 0 or n2 < 0:
        raise ValueError("retransmission bounds must be nonnegative")
    _check_delta(drop_prob)
    d = drop_prob
    rho = 1.0 - d
    dr = d * rho
    total = rho * (1.0 - d ** (n1 + 1))
    if n1 >= 1:
        acc = 0.0
        for i in range(1, n1 + 1):
            acc += d ** i * (1.0 - dr ** min(n1 + 1 - i, n2))
        total += rho ** 3 / (1.0 - dr) * acc
    return total


def _retry_tail(a: int, b: int, d: float) -> float:
    # rho * sum_{t=0..min(a,b)} (d*rho)^t: success of the final retry loop
    # once its predecessor message has been delivered.
    rho = 1.0 - d
    acc = 0.0
    term = rho
    for _ in range(min(a, b) + 1):
        acc += term
        term *= d * rho
    return acc


@lru_cache(maxsize=1 << 20)
def _phase(a: int, rest: tuple, d: float) -> float:
    # Success probability of the remaining events once the previous message
    # has been delivered, with `a` timeouts left in the previous loop.
    if len(rest) == 1:
        return _retry_tail(a, rest[0], d)
    n_next = rest[0]
    acc = 0.0
    coeff = 1.0 - d
    for j in range(min(a, n_next) + 1):
        acc += coeff * _phase(n_next - j, rest[1:], d)
        coeff *= d
    return acc


@lru_cache(maxsize=1 << 16)
def _sync_prob(bounds: tuple, d: float) -> float:
    if len(bounds) == 2:
        return sync_prob_two(bounds[0], bounds[1], d)
    acc = 0.0
    coeff = 1.0 - d
    for i in range(bounds[0] + 1):
        acc += coeff * _phase(bounds[0] - i, bounds[1:], d)
        coeff *= d
    return acc


def sync_prob(bounds: Sequence[int], drop_prob: float) -> float:
    """Synchronization probability of a sequence with the given per-event bounds."""
    if len(bounds) < 2:
        raise SequenceTooShort(f"need at least two bounds, got {len(bounds)}")
    if any(n < 0 for n in bounds):
        raise ValueError("retransmission bounds must be nonnegative")
    _check_delta(drop_prob)
    return _sync_prob(tuple(bounds), drop_prob)


def sup_sync_prob_two(drop_prob: float) -> float:
    """Least upper bound of sync_prob over all finite bounds: rho/(1 - d*rho)."""
    _check_delta(drop_prob)
    rho = 1.0 - drop_prob
    return rho / (1.0 - drop_prob * rho)


# ---------------------------------------------------------------------------
# Minimal-bounds optimization


@dataclass(frozen=True)
class Infeasible:
    proven: bool  # True: analytically impossible; False: nothing within the cap
    reason: str

    def __str__(self):
        return self.reason


BoundsResult = Union[dict, Infeasible]


def solve_opt(spec: SpecNode, drop_prob: float, cap: int = 512) -> BoundsResult:
    """Minimal-total retransmission bounds meeting every sequence requirement.

    Returns a mapping from each event (in first-occurrence order) to its
    bound; among minimal-sum solutions the lexicographically smallest in that
    event order.  Infeasible(proven=True) when some requirement exceeds the
    analytic supremum, Infeasible(proven=False) when nothing within the cap
    works.
    """
    report = well_posed(spec)
    if not report.ok:
        raise NotWellPosed(report)
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    _check_delta(drop_prob)

    events = events_of(spec)
    index = {e: i for i, e in enumerate(events)}
    constraints = [
        (tuple(index[e] for e in pseq.events), pseq.p) for pseq in enumerate_sequences(spec)
    ]
    k = len(events)

    if drop_prob == 0.0:
        return {e: 0 for e in events}

    sup = sup_sync_prob_two(drop_prob)
    for idxs, p in constraints:
        unattainable = p > sup or (p == sup and 0.0 < drop_prob < 1.0 and p > 0.0)
        if unattainable:
            names = ".".join(events[i].name for i in idxs)
            return Infeasible(
                proven=True,
                reason=f"sequence '{names}' requires {p} but no bounds can exceed {sup:.6g}",
            )

    def value(vec, idxs):
        return _sync_prob(tuple(vec[i] for i in idxs), drop_prob)

    def feasible(vec):
        return all(value(vec, idxs) >= p for idxs, p in constraints)

    cap_vec = [cap] * k
    if not feasible(cap_vec):
        return Infeasible(proven=False, reason=f"no feasible bounds with every bound <= {cap}")

    # Tightest per-variable lower bound: the least value that keeps every
    # constraint satisfiable with all other variables at the cap.
    lower = [0] * k
    for j in range(k):
        lo, hi = 0, cap
        while lo < hi:
            mid = (lo + hi) // 2
            trial = cap_vec.copy()
            trial[j] = mid
            if feasible(trial):
                hi = mid
            else:
                lo = mid + 1
        lower[j] = lo

    suffix_min = [0] * (k + 1)
    for j in range(k - 1, -1, -1):
        suffix_min[j] = suffix_min[j + 1] + lower[j]

    def search(total):
        vec = [0] * k

        def go(j, remaining):
            if j == k - 1:
                if remaining < lower[j] or remaining > cap:
                    return False
                vec[j] = remaining
                return feasible(vec)
            hi = min(cap, remaining - suffix_min[j + 1])
            for n in range(lower[j], hi + 1):
                vec[j] = n
                # Monotone pruning: unassigned variables at the cap bound each
                # constraint from above.
                trial = vec[:j + 1] + cap_vec[j + 1:]
                if all(value(trial, idxs) >= p for idxs, p in constraints):
                    if go(j + 1, remaining - n):
                        return True
            vec[j] = 0
            return False

        return vec if go(0, total) else None

    total = suffix_min[0]
    while total <= cap * k:
        found = search(total)
        if found is not None:
            return {e: found[i] for i, e in enumerate(events)}
        total += 1
    return Infeasible(proven=False, reason=f"no feasible bounds with every bound <= {cap}")


def realizable(full: FullSpec, cap: int = 512) -> bool:
    """Well-posed, with feasible bounds at the specification's drop bound."""
    if not well_posed(full.protocol).ok:
        return False
    return not isinstance(solve_opt(full.protocol, full.delta, cap=cap), Infeasible)
