"""Command line entry point: ``python -m stuckat <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import blockcodec as bc
from . import experiments as ex
from . import fileio
from . import strongcodec as sc
from .errors import StuckAtError
from .instances import CODECS, DEFECT_MODELS, InstanceSpec, generate_instance


def _msg_len(text: str):
    return text if text in ("max-rate", "capacity") else int(text)


def _build_profile(codec: str, N: int, C: int, len22: int | None):
    if codec == "strong":
        return sc.desk_profile(N=N, C=C) if len22 is None else sc.desk_profile(N=N, C=C, len22=len22)
    return bc.make_profile(N, C)


def cmd_profile(args) -> int:
    fileio.dump_profile(args.out, _build_profile(args.codec, args.n, args.c, args.len22))
    return 0


def cmd_gen_image(args) -> int:
    spec = InstanceSpec(N=args.n, rho=args.rho, defect_model=args.defect_model,
                        msg_len=args.msg_len, rng_seed=args.seed, C=args.c)
    image, msg = generate_instance(spec, args.trial)
    fileio.dump_image(args.out, image)
    if args.message_out:
        fileio.dump_message(args.message_out, msg)
    return 0


def cmd_encode(args) -> int:
    profile = fileio.load_profile(args.profile)
    image = fileio.load_image(args.image)
    msg = fileio.load_message(args.message)
    rng = np.random.default_rng(args.seed)
    if isinstance(profile, sc.StrongProfile):
        stored = sc.encode(profile, image, msg, rng, retries=args.retries)
    else:
        if args.meta is None:
            raise SystemExit("encode with a side-channel profile needs --meta")
        if args.deterministic:
            plan = bc.plan_blocks(profile, image, msg.size)
            seed = bc.deterministic_seed_search(profile, image, plan, args.deterministic)
            stored, meta = bc.encode_with_seed(profile, image, msg, seed, plan)
        else:
            stored, meta, _ = bc.encode_with_sidechannel(profile, image, msg, rng, args.retries)
        fileio.dump_meta(args.meta, profile, meta)
    fileio.dump_stored(args.out, stored)
    return 0


def cmd_decode(args) -> int:
    # only the profile, the stored bits and (side channel only) the metadata are read
    profile = fileio.load_profile(args.profile)
    stored = fileio.load_stored(args.stored)
    if isinstance(profile, sc.StrongProfile):
        msg = sc.decode(profile, stored)
    else:
        if args.meta is None:
            raise SystemExit("decode with a side-channel profile needs --meta")
        msg = bc.decode_with_sidechannel(profile, stored, fileio.load_meta(args.meta, profile))
    sys.stdout.write(fileio.message_text(msg))
    return 0


def cmd_roundtrip(args) -> int:
    spec = InstanceSpec(N=args.n, C=args.c, rho=args.rho, defect_model=args.defect_model,
                        msg_len=args.msg_len, trials=args.trials, rng_seed=args.seed, codec=args.codec)
    profile = None
    if args.codec == "strong" and args.len22 is not None:
        profile = sc.desk_profile(N=args.n, C=args.c, len22=args.len22)
    report = ex.run_roundtrip(spec, profile, retries=args.retries, single_attempt=args.single_attempt)
    path = report.write(args.out)
    summary = report.summary()
    print(json.dumps({"report": str(path), **summary}, sort_keys=True))
    return 0


def cmd_rank_bound(args) -> int:
    rep = ex.run_rank_bound(args.m, args.n, args.trials, source=args.source,
                            mu=2.0 ** -args.mu_exp, rng_seed=args.seed)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0 if rep.passed else 3


def cmd_bias_audit(args) -> int:
    rep = ex.run_bias_audit(args.r, args.k, 2.0 ** -args.mu_exp, samples=args.samples, rng_seed=args.seed)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0 if rep.passed else 3


def cmd_binning_demo(args) -> int:
    n_frozen = int(np.floor(args.rho * args.n + 1e-9))
    print(json.dumps(ex.binning_oracle(args.n, args.l, n_frozen, args.seed), sort_keys=True))
    return 0


def cmd_rate_sweep(args) -> int:
    rows = ex.rate_sweep(args.n, args.c, args.rhos, codec=args.codec, trials=args.trials, rng_seed=args.seed)
    out = args.out or ex.report_dir() / f"rate-{args.codec}-N{args.n}-C{args.c}.csv"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    ex.write_csv(rows, out)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stuckat", description="Stuck-at memory codes and experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("profile", help="write a profile file")
    s.add_argument("--codec", choices=("sidechannel", "strong"), default="sidechannel")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=int, default=4)
    s.add_argument("--len22", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("gen-image", help="write a random memory image (and message)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=int, default=4)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--defect-model", choices=DEFECT_MODELS, default="uniform")
    s.add_argument("--msg-len", type=_msg_len, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trial", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--message-out")
    s.set_defaults(func=cmd_gen_image)

    s = sub.add_parser("encode", help="encode a message into a memory image")
    s.add_argument("--profile", required=True)
    s.add_argument("--image", required=True)
    s.add_argument("--message", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--meta", help="side-channel metadata output (side-channel profiles)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--retries", type=int, default=16)
    s.add_argument("--deterministic", type=int, metavar="BUDGET",
                   help="lexicographic seed search with this budget instead of random seeds")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", help="decode a stored vector, message to stdout")
    s.add_argument("--profile", required=True)
    s.add_argument("--stored", required=True)
    s.add_argument("--meta")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("roundtrip", help="encode/decode many random instances")
    s.add_argument("--codec", choices=CODECS, default="sidechannel")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=int, default=4)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--defect-model", choices=DEFECT_MODELS, default="uniform")
    s.add_argument("--msg-len", type=_msg_len, default="max-rate")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--retries", type=int, default=16)
    s.add_argument("--single-attempt", action="store_true")
    s.add_argument("--len22", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("rank-bound", help="rank deficiency of random matrices")
    s.add_argument("--m", type=int, default=8)
    s.add_argument("--n", type=int, default=16)
    s.add_argument("--mu-exp", type=int, default=20)
    s.add_argument("--trials", type=int, default=100000)
    s.add_argument("--source", choices=("uniform", "generator"), default="uniform")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_rank_bound)

    s = sub.add_parser("bias-audit", help="exhaustive k-wise deviation of the generator")
    s.add_argument("--r", type=int, default=16)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--mu-exp", type=int, default=4)
    s.add_argument("--samples", type=int, default=1 << 18)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bias_audit)

    s = sub.add_parser("binning-demo", help="exhaustive random-binning oracle")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--l", type=int, default=3)
    s.add_argument("--rho", type=float, default=0.25)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_binning_demo)

    s = sub.add_parser("rate-sweep", help="accept/reject table at the guaranteed rate (CSV)")
    s.add_argument("--codec", choices=("sidechannel", "strong"), default="sidechannel")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c", type=int, default=4)
    s.add_argument("--rhos", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
    s.add_argument("--trials", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_rate_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StuckAtError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
