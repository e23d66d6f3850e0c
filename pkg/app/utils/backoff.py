import random
from typing import Optional

from tenacity import RetryCallState

from app.exceptions import TransportError


def is_retryable(error: BaseException) -> bool:
    return isinstance(error, TransportError) and error.retryable


class NondecreasingJitterWait:
    """
    Tenacity wait strategy: exponential backoff with "equal jitter".

    The n-th delay lies in [base * 2^(n-1) / 2, base * 2^(n-1)], capped at `max_delay`, so the
    sequence never decreases. A server-supplied Retry-After lengthens a delay but never
    shortens a later one. Use one instance per retried call.
    """

    def __init__(self, base: float, max_delay: float, rng: Optional[random.Random] = None):
        self.base = base
        self.max_delay = max_delay
        self.rng = rng or random.Random()
        self._previous = 0.0

    def __call__(self, retry_state: RetryCallState) -> float:
        ceiling = min(self.max_delay, self.base * 2 ** (retry_state.attempt_number - 1))
        delay = ceiling / 2 + self.rng.uniform(0, ceiling / 2)

        error = retry_state.outcome.exception() if retry_state.outcome else None
        if isinstance(error, TransportError) and error.retry_after is not None:
            delay = max(delay, min(error.retry_after, self.max_delay))

        delay = max(delay, self._previous)
        self._previous = delay
        return delay
