"""Single-attempt encoder failure rate versus the slack per block.

Runs the side-channel codec with the default slack (s = p) and with
s = ceil(log2 N), reporting both against the 10 / log2 N envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from _common import config_from_args, save_json
from stuckat import blockcodec as bc
from stuckat import experiments as ex
from stuckat.instances import InstanceSpec


@dataclass(frozen=True)
class FailureRateConfig:
    N: int = 4096
    C: int = 4
    rho: float = 0.3
    trials: int = 2000
    seed: int = 0
    out: str = "reports/failure_rate.json"


def main(argv=None) -> None:
    cfg = config_from_args(FailureRateConfig, __doc__, argv)
    spec = InstanceSpec(N=cfg.N, C=cfg.C, rho=cfg.rho, msg_len="capacity", trials=cfg.trials, rng_seed=cfg.seed)
    base = bc.make_profile(cfg.N, cfg.C)
    envelope = 10 / math.log2(cfg.N)
    result = {"envelope": envelope}
    for label, s in (("s=p", base.p), ("s=log2N", math.ceil(math.log2(cfg.N)))):
        profile = bc.make_profile(cfg.N, cfg.C, s=s)
        summary = ex.run_roundtrip(spec, profile, single_attempt=True).summary()
        rate = 1 - summary["success_rate"]
        result[label] = {"s": s, "failure_rate": rate, "ci": [1 - x for x in summary["success_ci"][::-1]],
                         "decode_matches": summary["decode_matches"], "successes": summary["successes"]}
        print(f"{label:8s} s={s:3d}  failure={rate:.4f}  envelope={envelope:.4f}")
    print(f"wrote {save_json(cfg.out, cfg, result)}")


if __name__ == "__main__":
    main()
