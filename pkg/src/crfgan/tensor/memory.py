"""Live-byte accounting for every buffer the tensor library allocates.

Peak training memory is defined as the maximum number of payload bytes
concurrently registered here, never OS RSS: the number is reproducible
across machines because the allocation pattern of a seeded run is fixed.
Tensor data buffers, gradient buffers, and kernel scratch all register.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager


class Accountant:
    """Tracks currently-live and peak bytes. Thread-safe."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._live: dict[int, int] = {}
        self._next_token = 0
        self.current_bytes = 0
        self.peak_bytes = 0

    def register(self, nbytes: int) -> int:
        """Record an allocation, returning a token for release()."""
        with self._lock:
            token = self._next_token
            self._next_token += 1
            self._live[token] = nbytes
            self.current_bytes += nbytes
            if self.current_bytes > self.peak_bytes:
                self.peak_bytes = self.current_bytes
            return token

    def release(self, token: int) -> None:
        """Record a free. Idempotent: double release is a no-op."""
        with self._lock:
            nbytes = self._live.pop(token, None)
            if nbytes is not None:
                self.current_bytes -= nbytes

    def reset_peak(self) -> None:
        """Restart the peak watermark at the current live total."""
        with self._lock:
            self.peak_bytes = self.current_bytes

    @contextmanager
    def scratch(self, nbytes: int):
        """Account for a transient working buffer inside a kernel."""
        token = self.register(nbytes)
        try:
            yield
        finally:
            self.release(token)


ACCOUNTANT = Accountant()


def live_bytes() -> int:
    return ACCOUNTANT.current_bytes


def peak_bytes() -> int:
    return ACCOUNTANT.peak_bytes


def reset_peak() -> None:
    ACCOUNTANT.reset_peak()
