import json

import numpy as np
import pytest

from youngflow.cli import EXIT_ERROR, EXIT_FINDING, EXIT_OK, THREADS_ENV, main
from youngflow.errors import DomainError, ShapeError
from youngflow.fbm import FbmSpec, generate_ensemble
from youngflow.io import (
    model_from_dict,
    read_paths_csv,
    to_jsonable,
    write_json,
    write_paths_csv,
    write_trajectory_csv,
)
from youngflow.paths import SamplePath

AFFINE = {
    "d": 2,
    "A": [[-1.5, 0.3], [-0.3, -1.5]],
    "C": [[0.01, 0.0], [0.0, 0.02]],
    "nonlinearity": "custom-affine",
    "params": {"W": [[0.1, 0.0], [0.0, 0.1]], "b": [0.2, 0.0]},
}
SIR = {
    "nonlinearity": "sir",
    "params": {"q": 1, "a": 2, "b": 0.1, "c": 0.1, "gamma": 0.05,
               "sigma1": 1e-12, "sigma2": 1e-12, "sigma3": 1e-12},
}


class TestCsv:
    def test_paths_round_trip(self, tmp_path):
        paths = generate_ensemble(FbmSpec(0.7, 2, 48, seed=1), 3)
        write_paths_csv(tmp_path / "p.csv", paths)
        back = read_paths_csv(tmp_path / "p.csv")
        assert len(back) == 3
        for a, b in zip(paths, back):
            assert np.array_equal(a.values, b.values)
            assert a.t0 == b.t0 and a.dt == b.dt

    def test_header(self, tmp_path):
        write_paths_csv(tmp_path / "p.csv", [SamplePath(np.arange(3.0), 0.5)] * 2)
        assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,path_0,path_1"

    def test_trajectory_header(self, tmp_path):
        write_trajectory_csv(tmp_path / "x.csv", SamplePath(np.zeros((3, 2)), 0.5))
        assert (tmp_path / "x.csv").read_text().splitlines()[0] == "t,x_0,x_1"

    def test_rejects_mixed_grids(self, tmp_path):
        with pytest.raises(ShapeError):
            write_paths_csv(tmp_path / "p.csv", [SamplePath(np.zeros(3), 0.5), SamplePath(np.zeros(3), 0.25)])

    def test_rejects_nonuniform(self, tmp_path):
        (tmp_path / "bad.csv").write_text("t,path_0\n0,0\n0.5,1\n0.6,2\n")
        with pytest.raises(ShapeError):
            read_paths_csv(tmp_path / "bad.csv")


class TestJson:
    def test_nonfinite_and_numpy(self, tmp_path):
        payload = {"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("nan"), "d": np.bool_(True)}
        write_json(tmp_path / "r.json", payload)
        back = json.loads((tmp_path / "r.json").read_text())
        assert back == {"a": 1.5, "b": [1, 2], "c": "nan", "d": True}
        assert to_jsonable((np.int64(3),)) == [3]


class TestModels:
    def test_affine(self):
        m = model_from_dict(AFFINE)
        assert m.coeffs.f(0.0) == pytest.approx(0.1)
        assert m.coeffs.F(0.0, np.array([1.0, 1.0])) == pytest.approx([0.3, 0.1])

    def test_overrides(self):
        m = model_from_dict({**AFFINE, "lipschitz": 0.5, "dissipativity": 1.0})
        assert m.coeffs.f(0.0) == 0.5 and m.coeffs.h(0.0) == 1.0

    def test_sir_coordinates(self):
        assert model_from_dict(SIR).coeffs.name == "sir-diagonal"
        assert model_from_dict({**SIR, "coordinates": "original"}).coeffs.name == "sir"

    @pytest.mark.parametrize(
        "spec, err",
        [
            ({"nonlinearity": "quadratic", "d": 1, "A": [[-1]]}, DomainError),
            ({"d": 2, "A": [[-1]]}, ShapeError),
            ({**SIR, "coordinates": "polar"}, DomainError),
        ],
    )
    def test_errors(self, spec, err):
        with pytest.raises(err):
            model_from_dict(spec)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(THREADS_ENV, raising=False)
    (tmp_path / "affine.json").write_text(json.dumps(AFFINE))
    (tmp_path / "sir.json").write_text(json.dumps(SIR))
    assert main(["--seed", "7", "fbm", "--hurst", "0.7", "--horizon", "35", "--steps-per-unit", "16",
                 "--count", "2", "--out-dir", "data"]) == EXIT_OK
    return tmp_path


def manifest(path):
    return json.loads(path.read_text())


class TestCli:
    def test_fbm_manifest_is_deterministic(self, workdir):
        first = manifest(workdir / "data" / "fbm.manifest.json")
        assert main(["fbm", "--seed", "7", "--hurst", "0.7", "--horizon", "35", "--steps-per-unit", "16",
                     "--count", "2", "--out-dir", "again", "--threads", "2"]) == EXIT_OK
        second = manifest(workdir / "again" / "fbm.manifest.json")
        assert first["hash"] == second["hash"]
        assert first["arguments"]["seed"] == 7 and "timestamp" not in json.dumps(first)

    def test_threads_from_environment(self, workdir, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert main(["fbm", "--hurst", "0.7", "--horizon", "1", "--steps-per-unit", "8", "--out-dir", "env"]) == 0
        monkeypatch.setenv(THREADS_ENV, "zero")
        assert main(["fbm", "--hurst", "0.7", "--horizon", "1", "--steps-per-unit", "8", "--out-dir", "env"]) == 1
        # the flag wins over a broken environment value
        assert main(["fbm", "--hurst", "0.7", "--horizon", "1", "--steps-per-unit", "8", "--out-dir", "env",
                     "--threads", "2"]) == 0

    @pytest.mark.parametrize(
        "argv",
        [
            ["fbm", "--hurst", "0.7", "--horizon", "1", "--steps-per-unit", "8", "--count", "0"],
            ["fbm", "--hurst", "1.3", "--horizon", "1", "--steps-per-unit", "8"],
            ["pvar", "--in", "missing.csv", "--p", "1.5"],
            ["nonsense"],
        ],
    )
    def test_validation_errors(self, workdir, argv):
        with pytest.raises(SystemExit) if argv == ["nonsense"] else _no_raise():
            assert main(argv) == EXIT_ERROR

    def test_pvar_and_young(self, workdir):
        assert main(["pvar", "--in", "data/paths.csv", "--p", "1.6", "--from", "0", "--to", "1",
                     "--out-dir", "o"]) == EXIT_OK
        rep = json.loads((workdir / "o" / "pvar.json").read_text())
        assert rep["argmax_indices"][0] < rep["argmax_indices"][-1] and rep["value"] > 0
        assert main(["young", "--omega", "data/paths.csv", "--x", "data/paths.csv", "--from", "0", "--to", "1",
                     "--p", "1.6", "--out-dir", "o"]) == EXIT_OK

    def test_solve_and_stability(self, workdir):
        assert main(["solve", "--model", "affine.json", "--omega", "data/paths.csv", "--x0", "1,0",
                     "--from", "0", "--to", "5", "--out-dir", "o"]) == EXIT_OK
        traj = read_paths_csv(workdir / "o" / "traj.csv")
        assert len(traj) == 2 and traj[0].t_end == 5.0
        code = main(["stability", "--model", "affine.json", "--omega", "data/paths.csv", "--m", "20",
                     "--p", "1.6", "--out-dir", "o"])
        rep = json.loads((workdir / "o" / "report.json").read_text())
        assert code == (EXIT_OK if rep["verdict"] else EXIT_FINDING)
        for key in ("h0", "A_hat", "C_hat", "gamma2", "gamma4", "gamma2p2", "K", "G_hat", "criterion_rhs"):
            assert key in rep

    def test_stability_finding_exit(self, workdir):
        noisy = {**AFFINE, "C": [[3.0, 0.0], [0.0, 3.0]]}
        (workdir / "noisy.json").write_text(json.dumps(noisy))
        assert main(["stability", "--model", "noisy.json", "--omega", "data/paths.csv", "--m", "10",
                     "--p", "1.6", "--out-dir", "o"]) == EXIT_FINDING

    def test_attractor_and_sir(self, workdir):
        assert main(["attractor", "--model", "sir.json", "--omega", "data/paths.csv", "--times", "1,2,5,10",
                     "--x0-grid", "cube:0.5:8", "--hurst", "0.7", "--out-dir", "o"]) == EXIT_OK
        rep = json.loads((workdir / "o" / "attractor.json").read_text())
        assert rep["b_partial"][0] >= 1 and len(rep["pullback_distances"]) == 4
        assert main(["sir", "--out-dir", "o"]) == EXIT_OK

    def test_bad_cube(self, workdir):
        assert main(["attractor", "--model", "sir.json", "--omega", "data/paths.csv", "--times", "1,2",
                     "--x0-grid", "cube:0.5:7", "--hurst", "0.7", "--out-dir", "o"]) == EXIT_ERROR

    def test_suite_subset(self, workdir):
        assert main(["suite", "--only", "8,15", "--out-dir", "s"]) == EXIT_OK
        rep = json.loads((workdir / "s" / "suite.json").read_text())
        assert set(rep) == {"8", "15"} and all(r["passed"] for r in rep.values())


class _no_raise:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False
