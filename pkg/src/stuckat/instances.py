"""Reproducible random instances: frozen sets, covers and messages."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Union

import numpy as np

from .blockcodec import MemoryImage
from .errors import ProfileError

__all__ = ["InstanceSpec", "DEFECT_MODELS", "CODECS", "draw_frozen", "generate_instance", "trial_rng"]

DEFECT_MODELS = ("uniform", "clustered", "adversarial-prefix")
CODECS = ("sidechannel", "strong", "binning")
CLUSTER = 32

MsgLen = Union[int, str]


@dataclass(frozen=True)
class InstanceSpec:
    """One experiment cell. ``msg_len`` is an int, ``"max-rate"`` or ``"capacity"``.

    ``"max-rate"`` is the guaranteed floor ``(1 - rho - c/C) N`` (c = 3 with a
    side channel, 5 without), clamped at zero; ``"capacity"`` is the largest
    length the codec accepts on each drawn image.
    """

    N: int
    C: int = 4
    rho: float = 0.0
    defect_model: str = "uniform"
    msg_len: MsgLen = "max-rate"
    trials: int = 100
    rng_seed: int = 0
    codec: str = "sidechannel"

    def __post_init__(self):
        if self.defect_model not in DEFECT_MODELS:
            raise ProfileError(f"unknown defect model {self.defect_model!r}")
        if self.codec not in CODECS:
            raise ProfileError(f"unknown codec {self.codec!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ProfileError("rho must lie in [0, 1]")
        if isinstance(self.msg_len, str) and self.msg_len not in ("max-rate", "capacity"):
            raise ProfileError(f"bad msg_len {self.msg_len!r}")
        if isinstance(self.msg_len, int) and self.msg_len < 0:
            raise ProfileError("msg_len must be non-negative")
        if self.trials < 0:
            raise ProfileError("trials must be non-negative")

    @property
    def n_frozen(self) -> int:
        return int(np.floor(self.rho * self.N + 1e-9))

    @property
    def rate_terms(self) -> int:
        return 5 if self.codec == "strong" else 3

    def max_rate_length(self) -> int:
        value = (1.0 - self.rho - self.rate_terms / self.C) * self.N
        return max(0, int(np.floor(value + 1e-9)))

    def as_dict(self) -> dict:
        return asdict(self)


def trial_rng(spec: InstanceSpec, trial: int) -> np.random.Generator:
    """Independent stream per ``(rng_seed, trial)``."""
    return np.random.default_rng([spec.rng_seed, trial])


def draw_frozen(model: str, N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= count <= N:
        raise ProfileError(f"cannot freeze {count} of {N} cells")
    if model == "uniform":
        return np.sort(rng.choice(N, size=count, replace=False))
    if model == "adversarial-prefix":
        return np.arange(count)
    if model == "clustered":
        segments = rng.permutation(-(-N // CLUSTER))
        cells = (segments[:, None] * CLUSTER + np.arange(CLUSTER)).ravel()
        cells = cells[cells < N]
        return np.sort(cells[:count])
    raise ProfileError(f"unknown defect model {model!r}")


def generate_instance(
    spec: InstanceSpec, trial: int, capacity: Callable[[MemoryImage], int] | None = None
) -> tuple[MemoryImage, np.ndarray]:
    """Image and message for one trial; ``capacity`` resolves ``msg_len="capacity"``."""
    rng = trial_rng(spec, trial)
    frozen = draw_frozen(spec.defect_model, spec.N, spec.n_frozen, rng)
    cover = rng.integers(0, 2, size=spec.N, dtype=np.uint8)
    image = MemoryImage(cover, frozen)
    if spec.msg_len == "max-rate":
        n = spec.max_rate_length()
    elif spec.msg_len == "capacity":
        if capacity is None:
            raise ProfileError('msg_len="capacity" needs a capacity function')
        n = capacity(image)
    else:
        n = int(spec.msg_len)
    msg = rng.integers(0, 2, size=n, dtype=np.uint8)
    return image, msg
