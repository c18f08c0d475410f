import csv
import os

import numpy as np
import pytest

from dyadica import DyadicCube, RootBox
from dyadica.cli import load_symbol_csv, main, save_symbol_csv
from dyadica.config import ExperimentConfig
from dyadica.funcspace import GridFunction, save_gridfunction
from dyadica.wavelet import CoefficientTree


def test_config_defaults_validate_and_hash():
    cfg = ExperimentConfig.defaults()
    assert cfg.d == 1 and cfg.L == 0 and cfg.J == -8
    assert cfg.probe_splits == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert cfg.probe_exponents[1] == (2.0, np.inf)
    assert len(cfg.config_hash) == 16
    assert cfg.config_hash == ExperimentConfig.defaults().config_hash


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("[root]\nJ = -6\n\n[ensemble]\nseed = 7\n", encoding="utf-8")
    cfg = ExperimentConfig.from_file(path)
    assert cfg.J == -6 and cfg.seed == 7
    assert cfg.config_hash != ExperimentConfig.defaults().config_hash


def test_config_validation_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[probe]\nkappas = 5\n", encoding="utf-8")
    with pytest.raises(ValueError):
        ExperimentConfig.from_file(path)
    path.write_text("[sparse]\nexponents = 4, 4, 4\n", encoding="utf-8")
    with pytest.raises(ValueError):
        ExperimentConfig.from_file(path)


def test_probe_pi_conventions():
    assert ExperimentConfig.probe_pi((1, 0), (4.0, 4.0)) == pytest.approx(4.0)
    assert ExperimentConfig.probe_pi((1, 1), (4.0, 4.0)) == pytest.approx(4.0)
    assert ExperimentConfig.probe_pi((0, 0), (2.0, np.inf)) == pytest.approx(4.0)
    assert ExperimentConfig.holder_r((4.0, 4.0)) == pytest.approx(2.0)


def test_symbol_csv_roundtrip(tmp_path, root8):
    tree = CoefficientTree(root8)
    tree[DyadicCube(-3, (2,))] = 1.5
    tree[DyadicCube(-5, (9,))] = -0.25
    path = tmp_path / "sym.csv"
    save_symbol_csv(path, tree)
    back = load_symbol_csv(path, root8)
    assert back[DyadicCube(-3, (2,))] == pytest.approx(1.5)
    assert back[DyadicCube(-5, (9,))] == pytest.approx(-0.25)


def _write_inputs(tmp_path, root, count, seed=5):
    rng = np.random.default_rng(seed)
    paths = []
    mids = root.midpoints_1d()
    for i in range(count):
        f = GridFunction(root, rng.standard_normal(root.shape)
                         * np.exp(-30 * (mids - 0.5) ** 2))
        p = tmp_path / f"f{i}.gfn"
        save_gridfunction(p, f)
        paths.append(str(p))
    return paths


def test_cli_norms_subcommand(tmp_path, root8):
    paths = _write_inputs(tmp_path, root8, 1)
    out = tmp_path / "out"
    code = main(["norms", "--input", paths[0], "--specs", "0,0,2,2; 1,-1,4,2",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out / "norms.csv")))
    assert rows[0][:4] == ["n", "m", "p", "q"]
    assert len(rows) == 3
    assert float(rows[1][4]) > 0.0


def test_cli_paraproduct_subcommand(tmp_path, root8):
    tree = CoefficientTree(root8)
    tree[DyadicCube(-3, (3,))] = 1.0
    sym = tmp_path / "sym.csv"
    save_symbol_csv(sym, tree)
    paths = _write_inputs(tmp_path, root8, 2)
    out = tmp_path / "out"
    code = main(["paraproduct", "--symbol", str(sym),
                 "--inputs", ",".join(paths), "--exponents", "4,4",
                 "--out", str(out)])
    assert code == 0
    assert (out / "paraproduct_output.gfn").exists()
    rows = list(csv.reader(open(out / "paraproduct_ratio.csv")))
    assert float(rows[1][1]) >= 0.0


def test_cli_sparse_subcommand(tmp_path, root8):
    paths = _write_inputs(tmp_path, root8, 3)
    out = tmp_path / "out"
    code = main(["sparse", "--inputs", ",".join(paths), "--mode", "intest",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out / "sparse_collection.csv")))
    assert rows[0] == ["cube", "generation", "children_packing_ratio"]
    assert rows[1][0].startswith("1:0:")


def test_cli_unknown_suite_usage_error(tmp_path):
    with pytest.raises(ValueError):
        main(["suite", "nonsense", "--out", str(tmp_path)])


def test_cli_suite_reproducible_csv(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("[ensemble]\ncount = 10\n", encoding="utf-8")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["suite", "norms", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["suite", "norms", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()
    text = (out1 / "summary.csv").read_text()
    assert ExperimentConfig.from_file(cfg).config_hash in text
