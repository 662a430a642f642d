import shutil
import subprocess

import numpy as np
import pytest

from ditsmark.cli import main
from ditsmark.core import BitString, write_bits


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def workdir(tmp_path):
    key = tmp_path / "key.txt"
    model = tmp_path / "model.cfg"
    model.write_text("kind=band\nband_low=0.35\nband_high=0.65\nmax_steps=5000\n")
    assert run("keygen", "--lambda", 16, "--out", key, "--seed", 7) == 0
    assert run("embed", "--key", key, "--prompt", "hello chain", "--seed", 1, "--model-config", model, "--out", tmp_path / "p.bits") == 0
    assert run("detect", "--key", key, "--in", tmp_path / "p.bits", "--out", tmp_path / "r.txt") == 0
    return tmp_path


def test_pipeline_clean(workdir, capsys):
    code = run("verify", "--in", workdir / "r.txt", "--payload", workdir / "p.bits", "--prompt", "hello chain")
    out = capsys.readouterr().out
    assert code == 0 and "classification clean-prefix" in out


def test_swapped_prompt(workdir):
    assert run("verify", "--in", workdir / "r.txt", "--payload", workdir / "p.bits", "--prompt", "hello chaim") == 2


def test_attacked_payload_is_tampered(workdir):
    (workdir / "a.cfg").write_text("kind=random_flip\ngamma=200\n")
    assert run("attack", "--in", workdir / "p.bits", "--attack-spec", workdir / "a.cfg", "--seed", 3, "--out", workdir / "x.bits") == 0
    run("detect", "--key", workdir / "key.txt", "--in", workdir / "x.bits", "--out", workdir / "rx.txt")
    assert run("verify", "--in", workdir / "rx.txt", "--payload", workdir / "x.bits", "--prompt", "hello chain") == 2


def test_random_bits_unwatermarked(workdir):
    write_bits(workdir / "rand.bits", BitString(np.random.default_rng(0).integers(0, 2, 4000).tolist()))
    assert run("detect", "--key", workdir / "key.txt", "--in", workdir / "rand.bits", "--out", workdir / "rr.txt") == 3
    assert run("verify", "--in", workdir / "rr.txt", "--payload", workdir / "rand.bits", "--prompt", "hello chain") == 3


def test_wrong_key_is_unwatermarked(workdir):
    run("keygen", "--out", workdir / "k2.txt", "--seed", 8)
    assert run("detect", "--key", workdir / "k2.txt", "--in", workdir / "p.bits", "--out", workdir / "r2.txt") == 3


def test_byte_identical_reruns(workdir):
    run("keygen", "--lambda", 16, "--out", workdir / "key2.txt", "--seed", 7)
    assert (workdir / "key2.txt").read_bytes() == (workdir / "key.txt").read_bytes()
    run("embed", "--key", workdir / "key.txt", "--prompt", "hello chain", "--seed", 1, "--model-config", workdir / "model.cfg", "--out", workdir / "p2.bits")
    assert (workdir / "p2.bits").read_bytes() == (workdir / "p.bits").read_bytes()
    run("detect", "--key", workdir / "key.txt", "--in", workdir / "p2.bits", "--out", workdir / "r2.txt")
    assert (workdir / "r2.txt").read_bytes() == (workdir / "r.txt").read_bytes()


def test_malformed_report(workdir, capsys):
    (workdir / "bad.txt").write_text("lambda 16\npayload_length 10\ndetections 1\n0 x 1 10 1.0 0.1\n")
    assert run("verify", "--in", workdir / "bad.txt", "--payload", workdir / "p.bits", "--prompt", "x") == 1
    assert "line 4" in capsys.readouterr().err


def test_malformed_bits(workdir, capsys):
    (workdir / "bad.bits").write_text("010101x1\n")
    assert run("detect", "--key", workdir / "key.txt", "--in", workdir / "bad.bits", "--out", workdir / "o.txt") == 1
    err = capsys.readouterr().err
    assert "bad.bits" in err and "offset 6" in err


def test_missing_file(tmp_path, capsys):
    assert run("detect", "--key", tmp_path / "nope.txt", "--in", tmp_path / "x", "--out", tmp_path / "o") == 1
    assert "no such file" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_analyze_sweep_and_table(workdir, capsys):
    out = workdir / "sweep.txt"
    assert run("analyze", "sweep", "--key", workdir / "key.txt", "--model-config", workdir / "model.cfg", "--seed", 2, "--trials", 5, "--gammas", "0,1", "--out", out) == 0
    assert len(out.read_text().strip().splitlines()) >= 4
    assert run("analyze", "table", "--in", out) == 0
    assert capsys.readouterr().out.startswith("gamma,epsilon")


def test_analyze_requires_seed(workdir):
    assert run("analyze", "battery", "--key", workdir / "key.txt") == 1


def test_entry_point(tmp_path):
    exe = shutil.which("ditsmark")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "keygen", "--out", str(tmp_path / "k"), "--seed", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "k").exists()
