"""Versioned text formats for images, profiles, stored vectors and messages.

Each file starts with a magic line ``STUCKAT-<KIND> v1``. Bit vectors are
written as hex of the MSB-first packed bytes with the length kept alongside;
messages and side-channel metadata are plain ``0``/``1`` strings so that they
diff nicely.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

from . import blockcodec as bc
from . import strongcodec as sc
from .errors import ProfileError
from .gf2core import as_bits

__all__ = [
    "bits_to_hex",
    "hex_to_bits",
    "dump_image",
    "load_image",
    "dump_profile",
    "load_profile",
    "dump_stored",
    "load_stored",
    "dump_message",
    "load_message",
    "dump_meta",
    "load_meta",
    "sidechannel_profile_dict",
    "sidechannel_profile_from_dict",
    "format_bits",
    "message_text",
]

VERSION = "v1"
PathLike = Union[str, Path]
AnyProfile = Union[bc.ParamProfile, sc.StrongProfile]


def _magic(kind: str) -> str:
    return f"STUCKAT-{kind} {VERSION}"


def _lines(path: PathLike, kind: str) -> list[str]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != _magic(kind):
        raise ValueError(f"{path}: expected first line {_magic(kind)!r}")
    return [ln.strip() for ln in text[1:]]


def _write(path: PathLike, kind: str, body: list[str]) -> None:
    Path(path).write_text("\n".join([_magic(kind), *body]) + "\n")


def bits_to_hex(bits) -> str:
    return np.packbits(as_bits(bits)).tobytes().hex()


def hex_to_bits(text: str, n: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    bits = np.unpackbits(raw)
    if bits.size < n or bits[n:].any():
        raise ValueError("hex payload does not match the declared length")
    return bits[:n].copy()


def _header(lines: list[str], key: str) -> int:
    for ln in lines:
        parts = ln.split()
        if len(parts) == 2 and parts[0] == key:
            return int(parts[1])
    raise ValueError(f"missing {key!r} header")


def dump_image(path: PathLike, image: bc.MemoryImage) -> None:
    body = [f"N {image.N}", f"frozen {image.frozen.size}", bits_to_hex(image.cover)]
    body += [str(int(f)) for f in image.frozen]
    _write(path, "IMAGE", body)


def load_image(path: PathLike) -> bc.MemoryImage:
    lines = _lines(path, "IMAGE")
    N, count = _header(lines[:1], "N"), _header(lines[1:2], "frozen")
    cover = hex_to_bits(lines[2], N)
    frozen = [int(x) for x in lines[3:] if x]
    if len(frozen) != count:
        raise ValueError(f"declared {count} frozen indices, found {len(frozen)}")
    return bc.MemoryImage(cover, np.array(frozen, dtype=np.intp))


def sidechannel_profile_dict(profile: bc.ParamProfile) -> dict[str, int]:
    return {
        "N": profile.N,
        "C": profile.C,
        "B": profile.B,
        "s": profile.s,
        "k": profile.gen.k,
        "mu_exp": profile.gen.mu_exp,
    }


def sidechannel_profile_from_dict(d: dict) -> bc.ParamProfile:
    return bc.make_profile(
        int(d["N"]), int(d["C"]), B=int(d["B"]), s=int(d["s"]), k=int(d["k"]), mu=2.0 ** -int(d["mu_exp"])
    )


def dump_profile(path: PathLike, profile: AnyProfile) -> None:
    if isinstance(profile, sc.StrongProfile):
        fields = {"kind": "strong", **profile.as_dict()}
    else:
        fields = {"kind": "sidechannel", **sidechannel_profile_dict(profile)}
    _write(path, "PROFILE", [f"{k}={v}" for k, v in fields.items()])


def load_profile(path: PathLike) -> AnyProfile:
    fields = {}
    for ln in _lines(path, "PROFILE"):
        if not ln or ln.startswith("#"):
            continue
        key, sep, value = ln.partition("=")
        if not sep:
            raise ValueError(f"bad profile line {ln!r}")
        fields[key.strip()] = value.strip()
    kind = fields.pop("kind", None)
    if kind == "strong":
        return sc.StrongProfile.from_dict(fields)
    if kind == "sidechannel":
        return sidechannel_profile_from_dict(fields)
    raise ProfileError(f"unknown profile kind {kind!r}")


def dump_stored(path: PathLike, bits) -> None:
    bits = as_bits(bits)
    _write(path, "STORED", [f"N {bits.size}", bits_to_hex(bits)])


def load_stored(path: PathLike) -> np.ndarray:
    lines = _lines(path, "STORED")
    return hex_to_bits(lines[1], _header(lines[:1], "N"))


def format_bits(bits) -> str:
    return "".join(map(str, as_bits(bits).tolist()))


def dump_message(path: PathLike, bits) -> None:
    _write(path, "MESSAGE", [format_bits(bits)])


def message_text(bits) -> str:
    return "\n".join([_magic("MESSAGE"), format_bits(bits)]) + "\n"


def load_message(path: PathLike) -> np.ndarray:
    lines = _lines(path, "MESSAGE")
    return as_bits(lines[0] if lines else "")


def dump_meta(path: PathLike, profile: bc.ParamProfile, meta: bc.SideChannelMetadata) -> None:
    _write(path, "META", [format_bits(meta.to_bits(profile))])


def load_meta(path: PathLike, profile: bc.ParamProfile) -> bc.SideChannelMetadata:
    lines = _lines(path, "META")
    return bc.SideChannelMetadata.from_bits(profile, lines[0] if lines else "")
