"""Service endpoints and the thin-client CLI, including exit codes and determinism."""

import warnings

import pytest

from fraclab.cli import main

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from fraclab.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


SMALL = """
[problem]
h = 0.03125
[verify]
orders = 0.5
"""


class TestService:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_preset_listing(self, client):
        names = client.get("/presets").json()["presets"]
        assert "paper-desk" in names
        r = client.get("/presets/paper-desk")
        assert "[problem]" in r.json()["config_text"]
        assert client.get("/presets/nope").status_code == 422

    def test_forward_zero_preset(self, client):
        r = client.post("/forward", json={"preset": "zero", "config_text": SMALL})
        assert r.status_code == 200
        body = r.json()
        assert max(abs(v) for v in body["solution"]) == 0.0
        assert body["guard_passed"]

    def test_forward_benchmark_error_reported(self, client):
        r = client.post("/forward", json={"preset": "getoor", "config_text": SMALL})
        assert r.status_code == 200
        assert r.json()["benchmark_rel_l2_error"] < 0.02

    def test_config_error_is_422(self, client):
        r = client.post("/forward", json={"config_text": "[problem]\ns = 0.9\n"})
        assert r.status_code == 422
        assert r.json()["detail"]["code"] == "config"

    def test_verify_corrupted_constant_fails(self, client):
        text = "[problem]\nh = 0.03125\n[verify]\norders = 0.5\ncorrupt_constant = true\n"
        r = client.post("/verify", json={"config_text": text})
        assert r.status_code == 200
        body = r.json()
        assert not body["all_passed"]
        symbol_checks = [c for c in body["checks"] if c["name"].startswith("symbol")]
        assert all(not c["passed"] for c in symbol_checks)

    def test_verify_small(self, client):
        r = client.post("/verify", json={"config_text": SMALL})
        assert r.status_code == 200
        assert r.json()["all_passed"]

    def test_runge_small(self, client):
        text = "[problem]\nh = 0.03125\n[runge]\nbasis_sizes = 4 8\ndemos = regional\n"
        r = client.post("/runge", json={"config_text": text})
        assert r.status_code == 200
        curves = r.json()["curves"]
        assert curves[0]["errors"][1] < curves[0]["errors"][0]

    def test_recover_truth_start_takes_no_steps(self, client):
        text = "[problem]\nh = 0.03125\n[recover]\nstart = truth\n[sources]\ncount = 6\n"
        r = client.post("/recover", json={"config_text": text})
        assert r.status_code == 200
        body = r.json()
        assert body["converged"]
        assert len(body["misfit_history"]) == 1
        assert body["rel_error_b"] == 0.0 and body["rel_error_q"] == 0.0


class TestCli:
    def test_forward_writes_files(self, tmp_path):
        out = tmp_path / "fwd"
        code = main(["forward", "--preset", "zero", "--out", str(out),
                     "--config", _write(tmp_path, SMALL)])
        assert code == 0
        sol = (out / "solution.csv").read_text().splitlines()
        assert sol[0] == "node,value"
        assert all(line.endswith(",0") for line in sol[1:])
        assert (out / "dn.csv").exists()

    def test_config_error_exit_2(self, tmp_path):
        bad = _write(tmp_path, "[problem]\ns = 0.9\n")
        assert main(["forward", "--config", bad, "--out", str(tmp_path / "x")]) == 2

    def test_verify_pass_exit_0(self, tmp_path):
        cfg = _write(tmp_path, SMALL)
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "v")]) == 0

    def test_verify_corrupt_exit_1(self, tmp_path):
        cfg = _write(tmp_path, "[problem]\nh = 0.03125\n")
        code = main(["verify", "--config", cfg, "--out", str(tmp_path / "v"),
                     "--debug-corrupt-constant"])
        assert code == 1

    def test_recover_single_writes_diagnosis(self, tmp_path):
        text = "[problem]\nh = 0.03125\n[recover]\nmax_iter = 10\n"
        cfg = _write(tmp_path, text)
        out = tmp_path / "rec"
        code = main(["recover", "--preset", "recover-single", "--config", cfg,
                     "--out", str(out)])
        assert code == 0
        assert (out / "recovery.csv").exists()
        assert (out / "run_log.txt").exists()
        assert (out / "diagnosis.csv").exists()

    def test_runge_deterministic_bytes(self, tmp_path):
        text = "[problem]\nh = 0.03125\n[runge]\nbasis_sizes = 4 8\ndemos = regional\n"
        cfg = _write(tmp_path, text)
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert main(["runge", "--config", cfg, "--out", str(out)]) == 0
            outs.append((out / "runge_regional.csv").read_bytes())
        assert outs[0] == outs[1]


def _write(tmp_path, text):
    p = tmp_path / f"cfg_{abs(hash(text)) % 99999}.ini"
    p.write_text(text)
    return str(p)


class TestErrorMapping:
    def test_post_maps_divergence_to_exit_3(self):
        from fraclab.cli import _post

        class FakeResponse:
            status_code = 409

            @staticmethod
            def json():
                return {"detail": {"code": "divergence", "message": "boom"}}

        class FakeClient:
            def post(self, path, json):
                return FakeResponse()

        result, code = _post(FakeClient(), "/recover", {})
        assert result is None and code == 3

    def test_post_maps_guard_to_exit_1(self):
        from fraclab.cli import _post

        class FakeResponse:
            status_code = 409

            @staticmethod
            def json():
                return {"detail": {"code": "guard", "message": "singular"}}

        class FakeClient:
            def post(self, path, json):
                return FakeResponse()

        result, code = _post(FakeClient(), "/forward", {})
        assert result is None and code == 1


class TestThreadCap:
    def test_env_var_caps_workers(self, monkeypatch):
        from fraclab.util import worker_count

        monkeypatch.setenv("FRACLAP_THREADS", "2")
        assert worker_count() == 2
        assert worker_count(n_jobs=1) == 1
        monkeypatch.setenv("FRACLAP_THREADS", "junk")
        assert worker_count() == 1

    def test_parallel_map_order(self, monkeypatch):
        from fraclab.util import parallel_map

        monkeypatch.setenv("FRACLAP_THREADS", "4")
        assert parallel_map(lambda x: x * x, range(7)) == [x * x for x in range(7)]
