import json
import subprocess
import sys

import numpy as np
import pytest

from stuckat import blockcodec as bc
from stuckat import fileio
from stuckat.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def decoded(text):
    lines = text.splitlines()
    assert lines[0] == "STUCKAT-MESSAGE v1"
    return lines[1] if len(lines) > 1 else ""


@pytest.mark.parametrize("codec,n,rho", [("sidechannel", 2048, 0.2), ("strong", 16384, 0.15)])
def test_file_roundtrip(tmp_path, capsys, codec, n, rho):
    p, i, m, s, x = (tmp_path / k for k in "pimsx")
    assert run(capsys, "profile", "--codec", codec, "--n", n, "--out", p)[0] == 0
    assert run(capsys, "gen-image", "--n", n, "--rho", rho, "--msg-len", 300, "--seed", 4,
               "--out", i, "--message-out", m)[0] == 0
    extra = ["--meta", x] if codec == "sidechannel" else []
    assert run(capsys, "encode", "--profile", p, "--image", i, "--message", m, "--out", s, *extra)[0] == 0
    # the decoder never sees the image file
    i.unlink()
    code, out, _ = run(capsys, "decode", "--profile", p, "--stored", s, *extra)
    assert code == 0
    assert decoded(out) == fileio.format_bits(fileio.load_message(m))


def test_deterministic_encode_is_reproducible(tmp_path, capsys):
    p, i, m = tmp_path / "p", tmp_path / "i", tmp_path / "m"
    fileio.dump_profile(p, bc.make_profile(256, 4, k=4, mu=0.5))  # t = 14, full search is cheap
    run(capsys, "gen-image", "--n", 256, "--rho", 0.1, "--msg-len", 60, "--out", i, "--message-out", m)
    outs = []
    for k in range(2):
        s, x = tmp_path / f"s{k}", tmp_path / f"x{k}"
        assert run(capsys, "encode", "--profile", p, "--image", i, "--message", m, "--out", s,
                   "--meta", x, "--deterministic", 1 << 14)[0] == 0
        outs.append((s.read_bytes(), x.read_bytes()))
    assert outs[0] == outs[1]


def test_over_capacity_exits_nonzero(tmp_path, capsys):
    p, i, m, s, x = (tmp_path / k for k in "pimsx")
    run(capsys, "profile", "--n", 1024, "--out", p)
    run(capsys, "gen-image", "--n", 1024, "--rho", 0.5, "--msg-len", 1000, "--out", i, "--message-out", m)
    code, _, err = run(capsys, "encode", "--profile", p, "--image", i, "--message", m, "--out", s, "--meta", x)
    assert code == 1 and "MessageTooLong" in err
    assert not s.exists()


def test_bad_file_exits_two(tmp_path, capsys):
    bogus = tmp_path / "p"
    bogus.write_text("hello\n")
    code, _, err = run(capsys, "decode", "--profile", bogus, "--stored", bogus)
    assert code == 2 and "expected first line" in err


def test_audit_commands(capsys):
    code, out, _ = run(capsys, "rank-bound", "--m", 4, "--n", 8, "--trials", 2000)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "bias-audit", "--r", 16, "--k", 2, "--mu-exp", 4)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "binning-demo", "--n", 8, "--l", 3, "--rho", 0.25)
    rep = json.loads(out)
    assert code == 0 and rep["decode_matches"] == rep["successes"]


def test_roundtrip_and_sweep_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "roundtrip", "--n", 1024, "--rho", 0.1, "--trials", 5, "--out", tmp_path / "r.jsonl")
    assert code == 0 and json.loads(out)["decode_matches"] == 5
    code, out, _ = run(capsys, "rate-sweep", "--n", 1024, "--rhos", 0.1, "--trials", 2, "--out", tmp_path / "r.csv")
    assert code == 0 and (tmp_path / "r.csv").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stuckat", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "rank-bound" in res.stdout
