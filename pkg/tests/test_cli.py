import csv
import io
import shutil
import subprocess
from pathlib import Path

import pytest

from mpnr_lab import __version__
from mpnr_lab.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, WORKERS_ENV, main, resolve_workers
from mpnr_lab.config import ConfigError, load_config, parse_config
from mpnr_lab.experiments import SCHEMAS, format_value

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

HEADLINE_FRONTIER = """\
experiment = "frontier"
squeezing_db = 7.0
n_detectors = 20
kappa = 0.95
k_clicks = 2
eta_grid = [0.6, 0.8, 0.01]
count_rate_hz = 1.0e8
output = "headline.csv"
"""

SMALL_SCAN = """\
experiment = "cat-breed"
squeezing_db = 7.0
n_detectors = [5, 10]
kappa = 0.9
k_clicks = 2
eta_grid = [0.5, 0.8, 0.05]
truncation = 24
output = "scan.csv"
"""


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _run(tmp_path, text, *extra):
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    code = main(["run", str(cfg), "--out", str(out), *extra])
    return code, out


def _read(path):
    raw = Path(path).read_bytes()
    lines = raw.decode("utf-8").split("\n")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    return raw, lines[0], rows[0], rows[1:]


# -- configuration errors --------------------------------------------------------

def test_misspelled_key_exits_2_and_names_key_and_line(tmp_path, capsys):
    text = 'experiment = "cat-breed"\nsqueezing_db = 7.0\nkapa = 0.9\nk_clicks = 2\n'
    code, _ = _run(tmp_path, text)
    err = capsys.readouterr().err
    assert code == EXIT_CONFIG
    assert "'kapa'" in err
    assert "line 3" in err


def test_malformed_toml_reports_line(tmp_path, capsys):
    text = 'experiment = "moments"\nstate = "coherent"\nalpha = \n'
    code, _ = _run(tmp_path, text)
    err = capsys.readouterr().err
    assert code == EXIT_CONFIG
    assert "line 3" in err


@pytest.mark.parametrize(
    "line, key",
    [
        ("kappa = 1.5", "kappa"),
        ("dark_eps = 1.0", "dark_eps"),
        ("squeezing_db = -1.0", "squeezing_db"),
        ("eta = 2.0", "eta"),
        ("k_clicks = 30", "k_clicks"),
        ("scheme = \"sideways\"", "scheme"),
        ("truncation = 1", "truncation"),
    ],
)
def test_range_checks_name_the_key(line, key):
    base = {
        "experiment": 'experiment = "cat-breed"',
        "squeezing_db": "squeezing_db = 7.0",
        "n_detectors": "n_detectors = 20",
        "k_clicks": "k_clicks = 2",
    }
    base[key] = line
    text = "\n".join(base.values()) + "\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key
    assert info.value.line == list(base).index(key) + 1


def test_key_of_other_experiment_rejected():
    with pytest.raises(ConfigError, match="fidelity_floor"):
        parse_config('experiment = "cat-breed"\nsqueezing_db = 7.0\nk_clicks = 2\nfidelity_floor = 0.5\n')


def test_missing_required_key():
    with pytest.raises(ConfigError, match="k_clicks"):
        parse_config('experiment = "frontier"\nsqueezing_db = 7.0\n')


def test_unknown_experiment():
    with pytest.raises(ConfigError, match="experiment"):
        parse_config('experiment = "tomography"\n')


def test_missing_file_exits_2(tmp_path):
    assert main(["run", str(tmp_path / "absent.toml")]) == EXIT_CONFIG


def test_config_hash_tracks_text():
    a = parse_config('experiment = "gps-breed"\nsqueezing_db = 7.0\n')
    b = parse_config('experiment = "gps-breed"\nsqueezing_db = 7.0\n# note\n')
    assert a.params == b.params
    assert a.sha256 != b.sha256


# -- numerical failures --------------------------------------------------------

def test_truncation_overflow_exits_3_and_names_operation(tmp_path, capsys):
    text = 'experiment = "moments"\nstate = "coherent"\nalpha = 3.0\ntruncation = 4\nn_detectors = [1, 2]\n'
    code, out = _run(tmp_path, text)
    err = capsys.readouterr().err
    assert code == EXIT_NUMERICAL
    assert "state preparation" in err
    assert not out.exists()


def test_degenerate_condition_exits_3(tmp_path, capsys):
    # one ideal pixel can never report two clicks
    text = 'experiment = "cat-breed"\nsqueezing_db = 0.0\nk_clicks = 2\neta = 0.5\n'
    code, _ = _run(tmp_path, text)
    err = capsys.readouterr().err
    assert code == EXIT_NUMERICAL
    assert "breeding" in err


# -- output format --------------------------------------------------------------

def test_csv_manifest_schema_and_line_endings(tmp_path):
    code, out = _run(tmp_path, SMALL_SCAN)
    assert code == EXIT_OK
    raw, manifest, header, rows = _read(out / "scan.csv")
    assert b"\r" not in raw and raw.endswith(b"\n")
    cfg = load_config(tmp_path / "cfg.toml")
    assert manifest == f"# mpnr-lab {__version__} experiment=cat-breed config_sha256={cfg.sha256}"
    assert tuple(header) == SCHEMAS["cat-breed"]
    assert len(rows) == 2 * 7
    assert [r[1] for r in rows] == ["5"] * 7 + ["10"] * 7
    assert all(r[-1] == "" for r in rows)  # no count rate configured


def test_twelve_significant_digits():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(2.0 / 3e-7) == "6666666.66667"
    assert format_value(7) == "7"
    assert format_value(None) == ""
    assert format_value("inf") == "inf"


def test_byte_identical_reruns(tmp_path):
    _, out = _run(tmp_path, SMALL_SCAN)
    first = (out / "scan.csv").read_bytes()
    _, out = _run(tmp_path, SMALL_SCAN)
    assert (out / "scan.csv").read_bytes() == first


def test_workers_do_not_change_output(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    _, out = _run(tmp_path, SMALL_SCAN, "--workers", "1")
    serial = (out / "scan.csv").read_bytes()
    _, out = _run(tmp_path, SMALL_SCAN, "--workers", "2")
    assert (out / "scan.csv").read_bytes() == serial


def test_env_overrides_workers(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers(1) == 3
    monkeypatch.setenv(WORKERS_ENV, "0")
    with pytest.raises(ConfigError):
        resolve_workers(1)
    monkeypatch.delenv(WORKERS_ENV)
    assert resolve_workers(None) == 1
    assert resolve_workers(4) == 4


def test_bad_worker_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "many")
    code, _ = _run(tmp_path, SMALL_SCAN)
    assert code == EXIT_CONFIG


# -- experiments ----------------------------------------------------------------

def test_headline_frontier_row(tmp_path):
    code, out = _run(tmp_path, HEADLINE_FRONTIER)
    assert code == EXIT_OK
    _, _, header, rows = _read(out / "headline.csv")
    assert tuple(header) == SCHEMAS["frontier"]
    col = {name: i for i, name in enumerate(header)}
    hits = [
        r for r in rows
        if float(r[col["fidelity"]]) >= 0.87 and float(r[col["p_succ"]]) >= 0.035
    ]
    assert hits
    # rate column is count rate times success probability
    for r in rows:
        assert float(r[col["rate_hz"]]) == pytest.approx(1e8 * float(r[col["p_succ"]]), rel=1e-11)


def test_moments_csv_reproduces_error_decay(tmp_path):
    code = main(["run", str(CONFIG_DIR / "moments_coherent.toml"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    _, _, header, rows = _read(tmp_path / "moments_coherent.csv")
    assert tuple(header) == SCHEMAS["moments"]
    ns = [int(r[0]) for r in rows]
    errs = [float(r[4]) for r in rows]
    assert ns == sorted(ns) and ns[0] == 1 and ns[-1] == 512
    assert all(float(r[3]) == pytest.approx(0.75, abs=1e-9) for r in rows)
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_correlated_and_calib_schemas(tmp_path):
    corr = 'experiment = "correlated"\nsqueezing_db = 7.0\nn_detectors = [8]\ncorr_p = [0.0, 0.02]\n'
    code, out = _run(tmp_path, corr)
    assert code == EXIT_OK
    _, _, header, rows = _read(out / "correlated.csv")
    assert tuple(header) == SCHEMAS["correlated"]
    assert float(rows[0][4]) == 0.0 and float(rows[1][4]) > 0.0

    calib = 'experiment = "squeezed-calib"\nsqueezing_db = 7.0\nn_detectors = 4\n'
    code, out = _run(tmp_path, calib)
    assert code == EXIT_OK
    _, _, header, rows = _read(out / "squeezed-calib.csv")
    assert tuple(header) == SCHEMAS["squeezed-calib"]
    assert sum(float(r[2]) for r in rows) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.experiment in SCHEMAS


def test_verify_subset_prints_lines(capsys):
    assert main(["verify", "--only", "13"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("PASS [13]")


def test_verify_unknown_criterion(capsys):
    assert main(["verify", "--only", "99"]) == EXIT_CONFIG


@pytest.mark.skipif(shutil.which("mpnr-lab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = _write(tmp_path, 'experiment = "cat-breed"\nsqueezing_db = 7.0\nkapa = 0.9\nk_clicks = 2\n')
    proc = subprocess.run(["mpnr-lab", "run", str(cfg)], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    assert "kapa" in proc.stderr
