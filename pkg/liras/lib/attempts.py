"""Policies bounding how many times a sampled artifact may be requested.

Synthesis draws candidates from an external model until one passes
validation. The loop is written as iteration over a policy::

    for attempt in AttemptPolicy.new(attempts=8, budget=120.0):
        response = transport.complete(prompt, timeout=attempt.time_remaining)
        if accept(response):
            break
    else:
        raise SynthesisError(...)

"""
import time

from typing import Iterator
from typing import NamedTuple
from typing import Optional


class Attempt(NamedTuple):
    """One permitted try.

    ``index`` counts from zero. ``time_remaining`` is the number of seconds
    left in the overall budget, or :py:data:`None` when unbounded.

    """

    index: int
    time_remaining: Optional[float]


class AttemptPolicy:
    """A composable limit on attempts.

    Policies wrap one another, each narrowing what the inner one permits.

    """

    def yield_attempts(self) -> Iterator[Attempt]:
        """Yield one :py:class:`Attempt` per permitted try."""
        raise NotImplementedError

    def __iter__(self) -> Iterator[Attempt]:
        return self.yield_attempts()

    @staticmethod
    def new(
        attempts: Optional[int] = None,
        budget: Optional[float] = None,
        backoff: Optional[float] = None,
    ) -> "AttemptPolicy":
        """Build a policy from the usual knobs.

        :param attempts: Maximum number of tries.
        :param budget: Maximum wall-clock seconds across all tries.
        :param backoff: Base delay in seconds, doubled after every failed try.

        """
        policy: AttemptPolicy = UnboundedAttempts()

        if attempts is not None:
            policy = MaximumAttempts(policy, attempts)

        if budget is not None:
            policy = TimeBudget(policy, budget)

        if backoff is not None:
            policy = ExponentialBackoff(policy, backoff)

        return policy


class UnboundedAttempts(AttemptPolicy):
    """Try forever, immediately."""

    def yield_attempts(self) -> Iterator[Attempt]:
        index = 0
        while True:
            yield Attempt(index, None)
            index += 1


class MaximumAttempts(AttemptPolicy):
    """Stop after a fixed number of tries."""

    def __init__(self, policy: AttemptPolicy, attempts: int):
        assert attempts > 0, "at least one attempt is required"
        self.subpolicy = policy
        self.attempts = attempts

    def yield_attempts(self) -> Iterator[Attempt]:
        for attempt in self.subpolicy:
            if attempt.index >= self.attempts:
                break
            yield attempt


class TimeBudget(AttemptPolicy):
    """Stop once the wall-clock budget is spent; the first try always runs."""

    def __init__(self, policy: AttemptPolicy, budget: float):
        assert budget >= 0, "the time budget must not be negative"
        self.subpolicy = policy
        self.budget = budget

    def yield_attempts(self) -> Iterator[Attempt]:
        start_time = time.time()
        for attempt in self.subpolicy:
            if attempt.index == 0:
                yield Attempt(0, self.budget)
                continue
            remaining = self.budget - (time.time() - start_time)
            if remaining <= 0:
                break
            yield Attempt(attempt.index, remaining)


class ExponentialBackoff(AttemptPolicy):
    """Sleep ``base * 2 ** (n - 1)`` seconds before the n-th retry."""

    def __init__(self, policy: AttemptPolicy, base: float):
        self.subpolicy = policy
        self.base = base

    def yield_attempts(self) -> Iterator[Attempt]:
        for attempt in self.subpolicy:
            remaining = attempt.time_remaining
            if attempt.index > 0:
                delay = self.base * 2.0 ** (attempt.index - 1)
                if remaining is not None:
                    delay = min(delay, remaining)
                    remaining -= delay
                time.sleep(delay)
            yield Attempt(attempt.index, remaining)
