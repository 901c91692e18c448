import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import ntkcv

DATA_DIR = Path(os.environ.get("NTKCV_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_linear_model_ntk_is_gram_matrix():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 4))
    k = ntkcv.compute_ntk([4, 1], x, activation="linear", bias=False)
    np.testing.assert_allclose(k, x @ x.T, rtol=0, atol=1e-12)


def test_ntk_methods_agree_and_spectrum_is_consistent():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(10, 3))
    a = ntkcv.compute_ntk([3, 16, 16, 2], x, seed=4, method="jacobian")
    b = ntkcv.compute_ntk([3, 16, 16, 2], x, seed=4, method="factorized")
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)
    s = ntkcv.spectrum(a)
    ev = np.linalg.eigvalsh(a)[::-1]
    np.testing.assert_allclose(s["eigenvalues"], ev, rtol=1e-9, atol=1e-9 * ev[0])
    assert s["trace"] == pytest.approx(np.trace(a), rel=1e-12)
    p = np.clip(ev, 0, None) / ev.clip(0).sum()
    p = p[p > 0]
    assert s["entropy"] == pytest.approx(-(p * np.log(p)).sum(), rel=1e-9)
    assert s["max_eig_ratio"] == pytest.approx(ev[0] / np.trace(a), rel=1e-9)


def test_entropy_of_uniform_spectrum():
    assert ntkcv.von_neumann_entropy([2.0] * 8) == pytest.approx(np.log(8), rel=1e-15)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ntkcv.ValidationError):
        ntkcv.select_random(3, 5)
    with pytest.raises(ntkcv.DimensionError):
        ntkcv.compute_ntk([3, 1], np.zeros((2, 4)))
    with pytest.raises(ntkcv.ValidationError):
        ntkcv.config("no-such-preset")
    assert issubclass(ntkcv.ValidationError, ntkcv.Error)


def test_selection():
    rng = np.random.default_rng(2)
    pool = rng.normal(size=(40, 2))
    r = ntkcv.select_rnd(pool, [2, 16, 4], 10, seed=3)
    assert r["method"] == "rnd"
    assert len(set(r["indices"])) == 10
    assert r == ntkcv.select_rnd(pool, [2, 16, 4], 10, seed=3)
    q = ntkcv.select_random(40, 10, seed=3)
    assert len(set(q["indices"])) == 10


def test_correlation_driver():
    records, corr = ntkcv.run_correlation(
        "linear", {"runs": "6", "epochs": "3", "data_dir": str(DATA_DIR)}
    )
    lines = records.strip().splitlines()
    assert lines[0].startswith("run_id,seed,dataset_name,dataset_size")
    assert len(lines) == 7
    j = json.loads(corr)
    assert j["runs_used"] == 6
    m = np.array(j["matrix"], dtype=float)
    np.testing.assert_allclose(np.diag(m), 1.0)
    np.testing.assert_allclose(m, m.T)


def test_comparison_driver():
    records, table = ntkcv.run_comparison(
        "clusters", {"ensemble": "2", "epochs": "5", "data_dir": str(DATA_DIR)}
    )
    rows = table.strip().splitlines()
    assert rows[0].split(",")[:3] == ["dataset_size", "method", "ensemble_count"]
    assert len(rows) == 1 + 2 * len(ntkcv.config("clusters")["sizes"].split(","))


def test_in_process_cli(tmp_path):
    code, out, err = ntkcv.run_cli(
        ["ntk", "--preset", "fuel", "--subset-size", "16", "--seed", "7",
         "--data-dir", str(DATA_DIR), "--out", str(tmp_path)]
    )
    assert code == 0, err
    j = json.loads(out)
    assert j["samples"] == 16
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    blob = (DATA_DIR / "fuel" / "auto-mpg.csv").read_bytes()
    assert meta["inputs"][0]["git_blob_sha1"] == ntkcv.git_blob_hash(blob)


@pytest.mark.skipif("NTKCV_CLI" not in os.environ, reason="command line binary not provided")
def test_cli_binary(tmp_path):
    p = subprocess.run(
        [os.environ["NTKCV_CLI"], "select", "--preset", "clusters", "--method", "rnd", "--size", "8",
         "--data-dir", str(DATA_DIR), "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert p.returncode == 0, p.stderr
    assert len(json.loads((tmp_path / "selection.json").read_text())["indices"]) == 8
    p = subprocess.run([os.environ["NTKCV_CLI"], "select", "--bogus", "1"], capture_output=True, check=False)
    assert p.returncode != 0
