"""Exhaustive bias audit of the small-bias generator over a grid of (r, k, mu)."""

from __future__ import annotations

from dataclasses import dataclass

from _common import config_from_args, save_json
from stuckat import experiments as ex
from stuckat import smallbias as sb


@dataclass(frozen=True)
class BiasAuditConfig:
    rs: tuple = (16, 32, 64)
    ks: tuple = (2, 3)
    mu_exps: tuple = (3, 4, 5)
    max_t: int = 20
    out: str = "reports/bias_audit.json"


def main(argv=None) -> None:
    cfg = config_from_args(BiasAuditConfig, __doc__, argv)
    rows = []
    for r in cfg.rs:
        for k in cfg.ks:
            for e in cfg.mu_exps:
                if sb.derive_params(r, k, 2.0 ** -e).t > cfg.max_t:
                    continue
                rep = ex.run_bias_audit(r, k, 2.0 ** -e)
                rows.append(rep.as_dict())
                print(f"r={r:3d} k={k} mu=2^-{e} t={rep.t:2d}  max deviation {rep.max_deviation} "
                      f"({float(rep.max_deviation):.5f})  {'ok' if rep.passed else 'EXCEEDED'}")
    print(f"wrote {save_json(cfg.out, cfg, rows)}")


if __name__ == "__main__":
    main()
