"""Experiment runners and their JSON-lines reports."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from . import binning as bn
from . import blockcodec as bc
from . import smallbias as sb
from . import strongcodec as sc
from .errors import MessageTooLong, ProfileError, StuckAtError
from .gf2core import batch_eliminate, int_to_bits, pack64
from .instances import InstanceSpec, draw_frozen, generate_instance, trial_rng

__all__ = [
    "TrialRecord",
    "ExperimentReport",
    "report_dir",
    "run_roundtrip",
    "RankReport",
    "run_rank_bound",
    "exact_uniform_deficiency",
    "BiasReport",
    "run_bias_audit",
    "walsh_sums",
    "direct_max_deviation",
    "rate_sweep",
    "write_csv",
    "binning_oracle",
    "MIN_BOUND_TRIALS",
]

REPORT_MAGIC = "STUCKAT-REPORT v1"
MIN_BOUND_TRIALS = 1000
SIGMAS = 3.0


def report_dir() -> Path:
    return Path(os.environ.get("STUCKAT_REPORT_DIR", "reports"))


def _sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0


@dataclass
class TrialRecord:
    trial: int
    success: bool
    cause: Optional[str] = None
    msg_len: int = 0
    attempts: int = 0
    flips: Optional[int] = None
    meta_length: Optional[int] = None
    decode_match: Optional[bool] = None
    consistent: Optional[bool] = None


@dataclass
class ExperimentReport:
    kind: str
    params: dict
    profile: dict
    records: list[TrialRecord] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        recs = self.records
        n = len(recs)
        ok = [r for r in recs if r.success]
        causes: dict[str, int] = {}
        for r in recs:
            if not r.success:
                causes[r.cause or "unknown"] = causes.get(r.cause or "unknown", 0) + 1
        rate = len(ok) / n if n else 0.0
        matches = sum(1 for r in ok if r.decode_match)
        consistent = sum(1 for r in ok if r.consistent)
        flips = [r.flips for r in ok if r.flips is not None]
        return {
            "trials": n,
            "successes": len(ok),
            "failures": causes,
            "success_rate": rate,
            "success_ci": [max(0.0, rate - SIGMAS * _sigma(rate, n)), min(1.0, rate + SIGMAS * _sigma(rate, n))],
            "decode_matches": matches,
            "decode_match_rate": matches / len(ok) if ok else None,
            "consistent": consistent,
            "consistency_rate": consistent / len(ok) if ok else None,
            "mean_attempts": float(np.mean([r.attempts for r in ok])) if ok else None,
            "mean_flips": float(np.mean(flips)) if flips else None,
        }

    def to_lines(self) -> list[str]:
        head = {"kind": self.kind, "params": self.params, "profile": self.profile}
        lines = [REPORT_MAGIC, json.dumps(head, sort_keys=True)]
        lines += [json.dumps(asdict(r), sort_keys=True) for r in self.records]
        lines.append(json.dumps({"summary": self.summary()}, sort_keys=True))
        return lines

    def write(self, path: str | Path | None = None) -> Path:
        if path is None:
            d = report_dir()
            d.mkdir(parents=True, exist_ok=True)
            path = d / f"{self.kind}-{self.params.get('codec', 'x')}-seed{self.params.get('rng_seed', 0)}.jsonl"
        path = Path(path)
        path.write_text("\n".join(self.to_lines()) + "\n")
        return path

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "ExperimentReport":
        lines = [ln for ln in lines if ln.strip()]
        if not lines or lines[0].strip() != REPORT_MAGIC:
            raise ValueError("not a report file")
        head = json.loads(lines[1])
        rep = cls(kind=head["kind"], params=head["params"], profile=head["profile"])
        rep.records = [TrialRecord(**json.loads(ln)) for ln in lines[2:-1]]
        stored = json.loads(lines[-1])["summary"]
        if json.loads(json.dumps(rep.summary())) != stored:
            raise ValueError("embedded summary does not match the trial records")
        return rep

    @classmethod
    def read(cls, path: str | Path) -> "ExperimentReport":
        return cls.from_lines(Path(path).read_text().splitlines())


def _default_profile(spec: InstanceSpec):
    if spec.codec == "sidechannel":
        return bc.make_profile(spec.N, spec.C)
    if spec.codec == "strong":
        return sc.desk_profile(N=spec.N, C=spec.C)
    return bn.build_bin_table(spec.N, 3, spec.rng_seed)


def _profile_echo(profile) -> dict:
    if isinstance(profile, sc.StrongProfile):
        return profile.as_dict()
    if isinstance(profile, bc.ParamProfile):
        return {"N": profile.N, "C": profile.C, "B": profile.B, "M": profile.M, "p": profile.p,
                "q": profile.q, "s": profile.s, "t": profile.t, "k": profile.gen.k,
                "mu_exp": profile.gen.mu_exp, "K": profile.K}
    return {"N": profile.N, "L": profile.L, "rng_seed": profile.rng_seed}


def _seed_rng(spec: InstanceSpec, trial: int) -> np.random.Generator:
    return np.random.default_rng([spec.rng_seed, trial, 1])


def _sidechannel_trial(spec, profile, trial, retries, single_attempt) -> TrialRecord:
    image, msg = generate_instance(spec, trial, lambda img: bc.capacity(profile, img))
    rec = TrialRecord(trial=trial, success=False, msg_len=int(msg.size), meta_length=profile.meta_length)
    seeds = _seed_rng(spec, trial)
    try:
        if single_attempt:
            seed = seeds.integers(0, 2, profile.t, dtype=np.uint8)
            w, meta = bc.encode_with_seed(profile, image, msg, seed)
            attempts = 1
        else:
            w, meta, attempts = bc.encode_with_sidechannel(profile, image, msg, seeds, retries)
    except StuckAtError as exc:
        rec.cause = type(exc).__name__
        return rec
    rec.success, rec.attempts, rec.flips = True, attempts, 0
    rec.consistent = image.consistent(w)
    try:
        rec.decode_match = bool(np.array_equal(bc.decode_with_sidechannel(profile, w, meta), msg))
    except StuckAtError:
        rec.decode_match = False
    return rec


def _strong_trial(spec, profile, trial, retries) -> TrialRecord:
    def cap(img):
        try:
            return sc.strong_capacity(profile, img)
        except StuckAtError:
            return 0

    image, msg = generate_instance(spec, trial, cap)
    rec = TrialRecord(trial=trial, success=False, msg_len=int(msg.size), meta_length=profile.outer.meta_length)
    try:
        res = sc.encode_detailed(profile, image, msg, _seed_rng(spec, trial), retries)
    except StuckAtError as exc:
        rec.cause = type(exc).__name__
        return rec
    if res.flips2 > profile.mod2 or res.flips4 > profile.mod4:
        raise AssertionError("flip budget exceeded")
    rec.success, rec.attempts, rec.flips = True, res.outer_attempts, res.flips2 + res.flips4
    rec.consistent = image.consistent(res.stored)
    try:
        rec.decode_match = bool(np.array_equal(sc.decode(profile, res.stored), msg))
    except StuckAtError:
        rec.decode_match = False
    return rec


def _binning_trial(spec, table: bn.BinTable, trial) -> TrialRecord:
    rng = trial_rng(spec, trial)
    frozen = draw_frozen(spec.defect_model, spec.N, spec.n_frozen, rng)
    image = bc.MemoryImage(rng.integers(0, 2, spec.N, dtype=np.uint8), frozen)
    level = bn.select_level(spec.N, table.L, bn.default_epsilon(table.L), frozen.size)
    if level == 0:
        return TrialRecord(trial=trial, success=False, cause="NoLevel")
    msg = rng.integers(0, 2, table.msg_length(level), dtype=np.uint8)
    rec = TrialRecord(trial=trial, success=False, msg_len=int(msg.size))
    try:
        u = bn.binning_encode(table, image, level, msg)
    except StuckAtError as exc:
        rec.cause = type(exc).__name__
        return rec
    got_level, got = bn.binning_decode(table, u)
    rec.success, rec.attempts, rec.flips = True, 1, 0
    rec.consistent = image.consistent(u)
    rec.decode_match = got_level == level and bool(np.array_equal(got, msg))
    return rec


def run_roundtrip(
    spec: InstanceSpec, profile=None, *, retries: int = 16, single_attempt: bool = False
) -> ExperimentReport:
    """Encode then decode ``spec.trials`` instances; failures are recorded, not raised."""
    profile = _default_profile(spec) if profile is None else profile
    report = ExperimentReport(kind="roundtrip", params=spec.as_dict(), profile=_profile_echo(profile))
    report.params.update(retries=1 if single_attempt else retries)
    for trial in range(spec.trials):
        if spec.codec == "sidechannel":
            rec = _sidechannel_trial(spec, profile, trial, retries, single_attempt)
        elif spec.codec == "strong":
            rec = _strong_trial(spec, profile, trial, retries)
        else:
            rec = _binning_trial(spec, profile, trial)
        report.records.append(rec)
    return report


# --------------------------------------------------------------------- rank


def exact_uniform_deficiency(m: int, n: int) -> float:
    """Probability that a uniform ``m x n`` binary matrix has rank below ``m``."""
    full = 1.0
    for i in range(m):
        full *= 1.0 - 2.0 ** (i - n)
    return 1.0 - full


@dataclass
class RankReport:
    m: int
    n: int
    source: str
    trials: int
    deficient: int
    bound: float
    mu_exp: Optional[int] = None
    exact: Optional[float] = None

    @property
    def rate(self) -> float:
        return self.deficient / self.trials

    @property
    def sigma(self) -> float:
        return _sigma(self.bound, self.trials)

    @property
    def limit(self) -> float:
        return self.bound + SIGMAS * self.sigma

    @property
    def passed(self) -> bool:
        return self.rate <= self.limit

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(rate=self.rate, sigma=self.sigma, limit=self.limit, passed=self.passed)
        return d


def _rank_deficient(mats: np.ndarray) -> np.ndarray:
    """``mats`` has shape ``(count, m, n)`` with ``n < 64``."""
    count, m, n = mats.shape
    rows = pack64(mats.reshape(count * m, n)).reshape(count, m)
    rank, _, _ = batch_eliminate(rows, n)
    return rank < m


def run_rank_bound(
    m: int, n: int, trials: int, *, source: str = "uniform", mu=None, rng_seed: int = 0, chunk: int = 20000
) -> RankReport:
    """Frequency of rank deficiency for ``m x n`` matrices against ``2^(m-n) (+ mu 2^m)``."""
    if not 0 < m < n < 64:
        raise ProfileError("need 0 < m < n < 64")
    if trials < MIN_BOUND_TRIALS:
        raise ProfileError(f"bound comparisons need at least {MIN_BOUND_TRIALS} trials")
    rng = np.random.default_rng(rng_seed)
    deficient = 0
    if source == "uniform":
        bound = 2.0 ** (m - n)
        mu_exp = None
        for start in range(0, trials, chunk):
            c = min(chunk, trials - start)
            deficient += int(_rank_deficient(rng.integers(0, 2, (c, m, n), dtype=np.uint8)).sum())
    elif source == "generator":
        params = sb.derive_params(m * n, n, 2.0 ** -20 if mu is None else mu)
        code = sb.build_dual_distance_matrix(params.r, params.k)
        mu_exp = params.mu_exp
        bound = 2.0 ** (m - n) + float(params.mu) * 2.0 ** m
        for start in range(0, trials, chunk):
            c = min(chunk, trials - start)
            xs = rng.integers(0, 1 << params.half, c, dtype=np.uint64)
            ys = rng.integers(0, 1 << params.half, c, dtype=np.uint64)
            bits = sb.expand_batch(params, code, xs, ys)
            deficient += int(_rank_deficient(bits.reshape(c, m, n)).sum())
    else:
        raise ProfileError(f"unknown matrix source {source!r}")
    exact = exact_uniform_deficiency(m, n) if source == "uniform" else None
    return RankReport(m=m, n=n, source=source, trials=trials, deficient=deficient, bound=bound,
                      mu_exp=mu_exp, exact=exact)


# --------------------------------------------------------------------- bias


def _all_outputs(params: sb.GeneratorParams, code, seeds: Optional[int], rng_seed: int):
    half = params.half
    if seeds is None:
        grid = np.arange(1 << params.t, dtype=np.uint64)
        xs, ys = grid >> np.uint64(half), grid & np.uint64((1 << half) - 1)
    else:
        rng = np.random.default_rng(rng_seed)
        xs = rng.integers(0, 1 << half, seeds, dtype=np.uint64)
        ys = rng.integers(0, 1 << half, seeds, dtype=np.uint64)
    return sb.expand_batch(params, code, xs, ys)


def walsh_sums(X: np.ndarray, k: int) -> dict[int, np.ndarray]:
    """``W[s][i1, .., is] = sum over rows of (-1)^(x_i1 + .. + x_is)`` for ``s <= k <= 3``.

    Exact: every partial sum is an integer below 2^53.
    """
    if k > 3:
        raise ValueError("Walsh sums are implemented up to order 3")
    n, r = X.shape
    if n >= 1 << 52:
        raise ValueError("too many rows for exact float accumulation")
    Y = 1.0 - 2.0 * X.astype(np.float64)
    W = {1: Y.sum(axis=0).round().astype(np.int64)}
    if k >= 2:
        W[2] = (Y.T @ Y).round().astype(np.int64)
    if k >= 3:
        W3 = np.zeros((r, r, r), dtype=np.int64)
        for i in range(r):
            P = Y[:, i : i + 1] * Y[:, i + 1 :]
            W3[i, i + 1 :, :] = (P.T @ Y).round().astype(np.int64)
        W[3] = W3
    return W


def _hadamard(s: int) -> np.ndarray:
    H = np.array([[1]], dtype=np.int64)
    for _ in range(s):
        H = np.block([[H, H], [H, -H]])
    return H


def _order_max(W: dict[int, np.ndarray], r: int, s: int) -> int:
    """``max_S max_a |sum_{T in S, T nonempty} (-1)^(a.T) W_T|`` over ``|S| = s``."""
    sets = np.array(list(combinations(range(r), s)), dtype=np.intp)
    V = np.zeros((sets.shape[0], 1 << s), dtype=np.int64)
    for mask in range(1, 1 << s):
        cols = [b for b in range(s) if mask >> b & 1]
        idx = tuple(sets[:, c] for c in cols)
        V[:, mask] = W[len(cols)][idx]
    return int(np.abs(V @ _hadamard(s)).max())


def direct_max_deviation(X: np.ndarray, sets: Iterable[tuple[int, ...]]) -> Fraction:
    """Largest ``|Pr[X_S = a] - 2^-|S||`` over the given index sets, by counting."""
    n = X.shape[0]
    worst = Fraction(0)
    for S in sets:
        s = len(S)
        code = np.zeros(n, dtype=np.int64)
        for b, i in enumerate(S):
            code |= X[:, i].astype(np.int64) << b
        counts = np.bincount(code, minlength=1 << s)
        dev = max(abs(Fraction(int(c), n) - Fraction(1, 1 << s)) for c in counts)
        worst = max(worst, dev)
    return worst


@dataclass
class BiasReport:
    r: int
    k: int
    mu_exp: int
    t: int
    exhaustive: bool
    seeds: int
    max_dev_by_order: dict[int, Fraction]

    @property
    def mu(self) -> Fraction:
        return Fraction(1, 1 << self.mu_exp)

    @property
    def max_deviation(self) -> Fraction:
        return max(self.max_dev_by_order.values())

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.mu

    @property
    def marginal_bound(self) -> Fraction:
        return self.mu * (1 << (self.k - 1))

    @property
    def marginal_passed(self) -> bool:
        return self.max_dev_by_order[1] <= self.marginal_bound

    def as_dict(self) -> dict:
        return {
            "r": self.r, "k": self.k, "mu_exp": self.mu_exp, "t": self.t,
            "exhaustive": self.exhaustive, "seeds": self.seeds,
            "max_dev_by_order": {str(o): str(v) for o, v in self.max_dev_by_order.items()},
            "max_deviation": str(self.max_deviation), "mu": str(self.mu), "passed": self.passed,
            "marginal_bound": str(self.marginal_bound), "marginal_passed": self.marginal_passed,
        }


def run_bias_audit(r: int, k: int, mu, *, max_exhaustive_t: int = 22, samples: int = 1 << 18,
                   rng_seed: int = 0) -> BiasReport:
    """Worst deviation from uniform over every index set of size ``0..k``.

    Enumerates every seed when ``t <= max_exhaustive_t``; otherwise samples
    ``samples`` seeds and says so in the report.
    """
    params = sb.derive_params(r, k, mu)
    code = sb.build_dual_distance_matrix(params.r, params.k)
    exhaustive = params.t <= max_exhaustive_t
    X = _all_outputs(params, code, None if exhaustive else samples, rng_seed)
    n = X.shape[0]
    by_order: dict[int, Fraction] = {0: Fraction(0)}
    if k <= 3:
        W = walsh_sums(X, k)
        for s in range(1, k + 1):
            by_order[s] = Fraction(_order_max(W, r, s), n << s)
    else:
        for s in range(1, k + 1):
            by_order[s] = direct_max_deviation(X, combinations(range(r), s))
    return BiasReport(r=r, k=k, mu_exp=params.mu_exp, t=params.t, exhaustive=exhaustive, seeds=n,
                      max_dev_by_order=by_order)


# --------------------------------------------------------------------- rate


def _accepts(codec: str, profile, image: bc.MemoryImage, n: int, rng) -> bool:
    msg = rng.integers(0, 2, n, dtype=np.uint8)
    try:
        if codec == "sidechannel":
            bc.plan_blocks(profile, image, n)
        else:
            sc.encode(profile, image, msg, rng)
    except MessageTooLong:
        return False
    except StuckAtError:
        return True  # accepted by the rate check, failed later for another reason
    return True


def rate_sweep(
    N: int, C: int, rhos: Iterable[float], *, codec: str = "sidechannel", trials: int = 5,
    rng_seed: int = 0, profile=None, defect_model: str = "uniform",
) -> list[dict]:
    """Accept/reject table at the guaranteed rate and ``eps N`` beyond it."""
    if codec not in ("sidechannel", "strong"):
        raise ProfileError("rate sweep supports the sidechannel and strong codecs")
    if profile is None:
        profile = bc.make_profile(N, C) if codec == "sidechannel" else sc.desk_profile(N=N, C=C)
    terms = 3 if codec == "sidechannel" else 5
    rows = []
    for rho in rhos:
        spec = InstanceSpec(N=N, C=C, rho=float(rho), defect_model=defect_model, msg_len=0,
                            trials=trials, rng_seed=rng_seed, codec=codec)
        floor_len = spec.max_rate_length()
        beyond = floor_len + math.ceil(terms / C * N)
        caps, acc, rej, rej_cap = [], 0, 0, 0
        for trial in range(trials):
            image, _ = generate_instance(spec, trial)
            rng = _seed_rng(spec, trial)
            try:
                cap = bc.capacity(profile, image) if codec == "sidechannel" else sc.strong_capacity(profile, image)
            except StuckAtError:
                cap = -1
            caps.append(cap)
            acc += _accepts(codec, profile, image, floor_len, rng)
            rej += not _accepts(codec, profile, image, beyond, rng)
            rej_cap += cap >= 0 and not _accepts(codec, profile, image, cap + 1, rng)
        rows.append({
            "codec": codec, "N": N, "C": C, "rho": float(rho), "trials": trials,
            "guaranteed_len": floor_len, "eps_len": beyond,
            "capacity_min": min(caps), "capacity_mean": float(np.mean(caps)),
            "rate_guaranteed": floor_len / N, "rate_capacity": float(np.mean(caps)) / N,
            "accepted_guaranteed": acc, "rejected_eps_beyond": rej, "rejected_capacity_plus_1": rej_cap,
        })
    return rows


def write_csv(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return path


# ------------------------------------------------------------------ binning


def binning_oracle(N: int, L: int, n_frozen: int, rng_seed: int = 0) -> dict:
    """Encode every ``(cover, frozen set, message)`` triple and check the round trip."""
    table = bn.build_bin_table(N, L, rng_seed)
    level = bn.select_level(N, L, bn.default_epsilon(L), n_frozen)
    if level == 0:
        raise ProfileError("no level fits this frozen count")
    nmsg = table.msg_length(level)
    total = fails = matches = consistent = 0
    for F in combinations(range(N), n_frozen):
        frozen = np.array(F, dtype=np.intp)
        for v in range(1 << N):
            cover = int_to_bits(v, N)
            image = bc.MemoryImage(cover, frozen)
            for mv in range(1 << nmsg):
                msg = int_to_bits(mv, nmsg)
                total += 1
                try:
                    u = bn.binning_encode(table, image, level, msg)
                except StuckAtError:
                    fails += 1
                    continue
                got_level, got = bn.binning_decode(table, u)
                matches += got_level == level and bool(np.array_equal(got, msg))
                consistent += image.consistent(u)
    ok = total - fails
    return {
        "N": N, "L": L, "n_frozen": n_frozen, "level": level, "rng_seed": rng_seed,
        "triples": total, "not_encodable": fails, "not_encodable_rate": fails / total,
        "successes": ok, "decode_matches": matches, "consistent": consistent,
    }
