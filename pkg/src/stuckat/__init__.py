"""Strong stuck-at codes over GF(2) and the harness that exercises them."""

from .blockcodec import (
    MemoryImage,
    ParamProfile,
    SideChannelMetadata,
    capacity,
    decode_with_sidechannel,
    deterministic_seed_search,
    encode_with_seed,
    encode_with_sidechannel,
    make_profile,
    plan_blocks,
)
from .errors import *  # noqa: F401,F403
from .strongcodec import StrongProfile, decode, desk_profile, encode, find_partition, find_subblock

__version__ = "0.1.0"
