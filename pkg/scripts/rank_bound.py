"""Rank deficiency of random and generator-sliced m x n matrices."""

from __future__ import annotations

from dataclasses import dataclass

from _common import config_from_args, save_json
from stuckat import experiments as ex


@dataclass(frozen=True)
class RankBoundConfig:
    m: int = 8
    n: int = 16
    trials: int = 100_000
    mu_exp: int = 20
    seed: int = 0
    out: str = "reports/rank_bound.json"


def main(argv=None) -> None:
    cfg = config_from_args(RankBoundConfig, __doc__, argv)
    result = {}
    for source in ("uniform", "generator"):
        rep = ex.run_rank_bound(cfg.m, cfg.n, cfg.trials, source=source, mu=2.0 ** -cfg.mu_exp, rng_seed=cfg.seed)
        result[source] = rep.as_dict()
        print(f"{source:9s} rate={rep.rate:.5f}  bound={rep.bound:.5f}  limit={rep.limit:.5f}  "
              f"{'ok' if rep.passed else 'EXCEEDED'}")
    print(f"wrote {save_json(cfg.out, cfg, result)}")


if __name__ == "__main__":
    main()
