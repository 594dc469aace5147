"""CLI behavior: exit codes, files, manifests, determinism, server mode."""

import socket
import threading
import time

import pytest

from derand.cli import main
from derand.sampleset import SampleMultiset


def run(*argv):
    return main([str(a) for a in argv])


class TestConstructVerify:
    def test_bias_round_trip(self, tmp_path, capsys):
        out = tmp_path / "bias.txt"
        rc = run("construct", "bias", "--n", 3, "--eps", "0.5", "--out", out)
        assert rc == 0
        assert out.exists()
        manifest = (tmp_path / "bias.txt.manifest").read_text()
        assert "command=construct bias" in manifest
        assert "sha256=" in manifest and "bound=" in manifest
        printed = capsys.readouterr().out
        assert "size=" in printed

        assert run("verify", "bias", out, "--eps", "0.5") == 0
        # stricter epsilon than achieved max deviation can fail; eps=0 must
        rc = run("verify", "bias", out, "--eps", "0")
        assert rc == 1

    def test_usage_error_bad_eps(self, tmp_path):
        out = tmp_path / "x.txt"
        rc = run("construct", "bias", "--n", 3, "--eps", "0.6", "--out", out)
        assert rc == 2
        assert not out.exists()

    def test_kwise_and_trace_dump(self, tmp_path):
        out = tmp_path / "kw.txt"
        tr = tmp_path / "kw.trace"
        rc = run(
            "construct", "kwise", "--n", 4, "--k", 2, "--eps", "0.2",
            "--out", out, "--trace", tr,
        )
        assert rc == 0
        assert tr.read_text().startswith("# trace method=conditional")
        assert run("verify", "kwise", out, "--eps", "0.2", "--k", 2) == 0

    def test_phf_and_code(self, tmp_path):
        phf = tmp_path / "phf.txt"
        assert run("construct", "phf", "--n", 5, "--q", 37, "--k", 2,
                   "--eps", "0.5", "--out", phf) == 0
        assert run("verify", "phf", phf, "--eps", "0.5", "--k", 2,
                   "--collision-bound", "1/8") == 0
        code = tmp_path / "code.txt"
        assert run("construct", "code", "--q", 3, "--k", 2, "--eps", "0.5",
                   "--out", code) == 0
        assert run("verify", "code", code, "--eps", "0.5") == 0

    def test_exact_variant(self, tmp_path):
        out = tmp_path / "exact.txt"
        assert run("construct", "bias", "--n", 2, "--eps", "0.5",
                   "--variant", "exact", "--m", 40, "--out", out) == 0
        ms = SampleMultiset.from_text(out.read_text())
        assert ms.size == 40  # no +1 in exact mode
        assert run("verify", "bias", out, "--eps", "0.5") == 0

    def test_missing_file(self, tmp_path):
        assert run("verify", "bias", tmp_path / "nope.txt", "--eps", "0.5") == 2

    def test_verify_full_cube_any_k(self, tmp_path):
        from itertools import product

        cube = SampleMultiset(
            kind="kwise", alphabet=2, n=4,
            words=tuple(product((0, 1), repeat=4)),
        )
        f = tmp_path / "cube.txt"
        f.write_text(cube.to_text())
        assert run("verify", "kwise", f, "--eps", "0", "--k", 2) == 0
        assert run("verify", "kwise", f, "--eps", "0", "--k", 3) == 0

    def test_verify_constant_pair_fails_with_witness(self, tmp_path, capsys):
        ms = SampleMultiset(
            kind="kwise", alphabet=2, n=3,
            words=((0, 0, 0), (1, 1, 1)),
        )
        f = tmp_path / "const.txt"
        f.write_text(ms.to_text())
        rc = run("verify", "kwise", f, "--eps", "0.2", "--k", 2)
        assert rc == 1
        assert "witness" in capsys.readouterr().out


class TestDeterminism:
    def test_identical_bytes_across_runs(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            assert run("construct", "kwise", "--n", 5, "--k", 2,
                       "--eps", "0.2", "--out", out) == 0
        assert a.read_bytes() == b.read_bytes()


class TestCompose:
    def test_compose_files(self, tmp_path):
        fam = SampleMultiset(kind="phf", alphabet=2, n=2, words=((0, 1),))
        inner = SampleMultiset(
            kind="kwise", alphabet=2, n=2,
            words=((0, 0), (0, 1), (1, 0), (1, 1)),
        )
        f1, f2 = tmp_path / "fam.txt", tmp_path / "inner.txt"
        f1.write_text(fam.to_text())
        f2.write_text(inner.to_text())
        out = tmp_path / "composed.txt"
        assert run("compose", f1, f2, "--out", out) == 0
        composed = SampleMultiset.from_text(out.read_text())
        assert composed.size == fam.size * inner.size
        assert run("verify", "kwise", out, "--eps", "0", "--k", 2) == 0

    def test_dimension_mismatch_is_usage_error(self, tmp_path):
        fam = SampleMultiset(kind="phf", alphabet=3, n=2, words=((0, 2),))
        inner = SampleMultiset(kind="kwise", alphabet=2, n=2, words=((0, 1),))
        f1, f2 = tmp_path / "f.txt", tmp_path / "i.txt"
        f1.write_text(fam.to_text())
        f2.write_text(inner.to_text())
        assert run("compose", f1, f2, "--out", tmp_path / "o.txt") == 2


class TestBounds:
    def test_bounds_prints_table(self, capsys):
        assert run("bounds", "--n", 1024, "--k", 3, "--eps", "0.01") == 0
        out = capsys.readouterr().out
        assert "lower Linf" in out and "unspecified constants" in out


@pytest.fixture(scope="module")
def live_server():
    import uvicorn

    from derand.service import app

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestServerMode:
    def test_remote_matches_local_bytes(self, tmp_path, live_server):
        local = tmp_path / "local.txt"
        remote = tmp_path / "remote.txt"
        assert run("construct", "bias", "--n", 3, "--eps", "0.5",
                   "--out", local) == 0
        assert run("--server", live_server, "construct", "bias", "--n", 3,
                   "--eps", "0.5", "--out", remote) == 0
        assert local.read_bytes() == remote.read_bytes()

    def test_remote_verify_and_errors(self, tmp_path, live_server):
        f = tmp_path / "b.txt"
        assert run("construct", "bias", "--n", 3, "--eps", "0.5", "--out", f) == 0
        assert run("--server", live_server, "verify", "bias", f, "--eps", "0.5") == 0
        rc = run("--server", live_server, "construct", "bias", "--n", 3,
                 "--eps", "0.7", "--out", tmp_path / "x.txt")
        assert rc == 2
