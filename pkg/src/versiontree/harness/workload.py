from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..core import KEY_MIN, MAX_REAL_KEY

MODES = ("stress", "lincheck", "stepper", "bench")
OP_NAMES = ("contains", "add", "remove", "range")


class ConfigError(ValueError):
    pass


@dataclass
class WorkloadConfig:
    """Parameters shared by the stress, lincheck, stepper and bench modes.

    ``key_space`` is inclusive.  ``mix`` gives contains/add/remove/range
    percentages.  With ``disjoint`` each thread draws keys from its own slice
    of the key space.  When slices are wide enough, their outer
    ``PAD`` keys on each side are reserved as padding (see
    :meth:`padding_keys`) so that neighbouring slices never meet near the
    leaves.
    """

    PAD = 2

    threads: int = 4
    ops_per_thread: int = 100
    duration: Optional[float] = None  # seconds; overrides ops_per_thread
    key_space: tuple[int, int] = (0, 7)
    mix: tuple[int, int, int, int] = (40, 25, 25, 10)
    range_width: int = 4
    seed: int = 0
    mode: str = "stress"
    disjoint: bool = False
    prefill: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.key_space = tuple(self.key_space)
        self.mix = tuple(self.mix)
        self.prefill = tuple(self.prefill)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.ops_per_thread < 0:
            raise ConfigError("ops_per_thread must be >= 0")
        if len(self.mix) != 4 or any(m < 0 for m in self.mix) or sum(self.mix) != 100:
            raise ConfigError(f"mix must be four non-negative percentages summing to 100, got {self.mix}")
        lo, hi = self.key_space
        if not KEY_MIN <= lo <= hi <= MAX_REAL_KEY:
            raise ConfigError(f"key space {self.key_space} must lie within the real key domain")
        if self.range_width < 0:
            raise ConfigError("range_width must be >= 0")
        if self.disjoint and hi - lo + 1 < self.threads:
            raise ConfigError("disjoint mode needs at least one key per thread")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned value")

    def _slice(self, thread: int) -> tuple[int, int]:
        lo, hi = self.key_space
        width = (hi - lo + 1) // self.threads
        start = lo + thread * width
        return start, start + width - 1

    def _padded(self) -> bool:
        lo, hi = self.key_space
        return (hi - lo + 1) // self.threads > 2 * self.PAD

    def keys_for(self, thread: int) -> tuple[int, int]:
        if not self.disjoint:
            return self.key_space
        start, end = self._slice(thread)
        if self._padded():
            return start + self.PAD, end - self.PAD
        return start, end

    def padding_keys(self) -> list[int]:
        """Keys no thread touches in disjoint mode; prefill them first."""
        if not (self.disjoint and self._padded()):
            return []
        out = []
        for t in range(self.threads):
            start, end = self._slice(t)
            out += list(range(start, start + self.PAD))
            out += list(range(end - self.PAD + 1, end + 1))
        return out

    def thread_rng(self, thread: int) -> random.Random:
        return random.Random(self.seed * 1_000_003 + thread)

    def draw(self, rng: random.Random, thread: int) -> tuple[str, tuple]:
        op = rng.choices(OP_NAMES, weights=self.mix)[0]
        lo, hi = self.keys_for(thread)
        k = rng.randint(lo, hi)
        if op == "range":
            return op, (k, min(k + self.range_width, MAX_REAL_KEY))
        return op, (k,)

    def program(self, thread: int) -> list[tuple[str, tuple]]:
        rng = self.thread_rng(thread)
        return [self.draw(rng, thread) for _ in range(self.ops_per_thread)]

    def with_padding(self) -> WorkloadConfig:
        """A copy whose prefill starts with the padding keys in balanced order."""
        pads = balanced_order(self.padding_keys())
        rest = [k for k in self.prefill if k not in set(pads)]
        d = asdict(self)
        d["prefill"] = tuple(pads + rest)
        return WorkloadConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["key_space"] = list(self.key_space)
        d["mix"] = list(self.mix)
        d["prefill"] = list(self.prefill)
        return d


def balanced_order(keys) -> list[int]:
    """Insertion order (medians first) that builds a balanced tree."""
    keys = sorted(set(keys))
    out = []
    spans = [(0, len(keys))]
    while spans:
        nxt = []
        for a, b in spans:
            if a >= b:
                continue
            m = (a + b) // 2
            out.append(keys[m])
            nxt += [(a, m), (m + 1, b)]
        spans = nxt
    return out
