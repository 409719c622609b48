"""Experiment runners: a parsed configuration in, a CSV table out."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .breeding import BREEDING_DIM, BreedingConfig, breed, default_eta_grid, eta_scan, optimize_eta
from .config import ExperimentConfig
from .detector import DetectorSpec, IdealPNR
from .fock import (
    GENERALIZED,
    SUBTRACTION,
    cat_state,
    coherent_state,
    db_to_r,
    photon_distribution,
    squeezed_vacuum,
)
from .statistics import (
    correlated_bias,
    moment_report,
    odd_photon_error,
    squeezed_click_pipeline,
)

SCHEMAS = {
    "moments": ("n", "h", "estimate", "truth", "rel_error"),
    "squeezed-calib": ("n", "k", "p_k", "p_odd_err"),
    "cat-breed": ("eta", "n", "kappa", "k", "fidelity", "fidelity_phase_opt", "p_succ", "rate_hz"),
    "gps-breed": ("eta", "n", "kappa", "k", "fidelity", "fidelity_phase_opt", "p_succ", "rate_hz"),
    "frontier": ("eta", "n", "kappa", "k", "fidelity", "fidelity_phase_opt", "p_succ", "rate_hz"),
    "correlated": ("p", "n", "biased_moment", "unbiased_moment", "bias"),
}


@dataclass
class Table:
    columns: tuple
    rows: List[tuple]


class Step:
    """Names the operation in flight so numerical failures can be reported against it."""

    current = "setup"

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        Step.current = self.name
        return self

    def __exit__(self, *exc):
        return False


def _list(v) -> list:
    return v if isinstance(v, list) else [v]


def _state(cfg: ExperimentConfig):
    dim = cfg.get("truncation")
    tol = 1e-14
    kind = cfg.get("state")
    if kind == "coherent":
        return coherent_state(cfg.get("alpha"), dim, tail_tol=tol)
    if kind == "cat":
        return cat_state(cfg.get("alpha"), "+", dim, tail_tol=tol)
    return squeezed_vacuum(db_to_r(cfg.get("squeezing_db")), dim, tail_tol=tol)


def run_moments(cfg: ExperimentConfig, map_fn=map) -> Table:
    h = cfg.get("moment_order", 2)
    with Step("state preparation"):
        state = _state(cfg)
    ns = sorted(_list(cfg.get("n_detectors")))
    specs = [DetectorSpec.balanced(n, cfg.get("kappa", 1.0), cfg.get("dark_eps", 0.0)) for n in ns]
    with Step("moment estimation"):
        reports = list(map_fn(moment_report, [state] * len(specs), specs, [h] * len(specs)))
    rows = [(r.n, r.h, r.estimate, r.truth, r.rel_error) for r in reports]
    return Table(SCHEMAS["moments"], rows)


def run_squeezed_calib(cfg: ExperimentConfig, map_fn=map) -> Table:
    r = db_to_r(cfg.get("squeezing_db"))
    ns = sorted(_list(cfg.get("n_detectors")))
    specs = [
        DetectorSpec.balanced(n, cfg.get("kappa", 1.0), cfg.get("dark_eps", 0.0), cfg.get("corr_p", 0.0))
        for n in ns
    ]
    dim = cfg.get("truncation")
    with Step("squeezed click distribution"):
        dists = list(map_fn(squeezed_click_pipeline, [r] * len(specs), specs, [dim] * len(specs)))
    rows = []
    for n, dist in zip(ns, dists):
        p_odd = odd_photon_error(dist)
        rows.extend((n, k, float(p), p_odd) for k, p in enumerate(dist))
    return Table(SCHEMAS["squeezed-calib"], rows)


def run_correlated(cfg: ExperimentConfig, map_fn=map) -> Table:
    h = cfg.get("moment_order", 1)
    with Step("state preparation"):
        dist = photon_distribution(
            squeezed_vacuum(db_to_r(cfg.get("squeezing_db")), cfg.get("truncation"), tail_tol=1e-14)
        )
    cases = list(itertools.product(sorted(_list(cfg.get("n_detectors"))), sorted(_list(cfg.get("corr_p")))))
    with Step("correlated click moments"):
        out = list(map_fn(correlated_bias, [dist] * len(cases), [n for n, _ in cases],
                          [p for _, p in cases], [h] * len(cases)))
    rows = [(b.p, b.n, b.biased_moment, b.unbiased_moment, b.bias) for b in out]
    return Table(SCHEMAS["correlated"], rows)


def _detectors(cfg: ExperimentConfig) -> list:
    out = []
    for n in _list(cfg.get("n_detectors", "inf")):
        for kappa in _list(cfg.get("kappa", 1.0)):
            if n == "inf":
                out.append(IdealPNR(kappa))
            else:
                out.append(DetectorSpec.balanced(n, kappa, cfg.get("dark_eps", 0.0)))
    return out


def _templates(cfg: ExperimentConfig) -> list:
    scheme = GENERALIZED if cfg.experiment == "gps-breed" else cfg.get("scheme", SUBTRACTION)
    k = cfg.get("k_clicks", 2)
    r = db_to_r(cfg.get("squeezing_db"))
    dim = cfg.get("truncation", BREEDING_DIM)
    eta0 = cfg.get("eta", 0.5)
    return [
        BreedingConfig(r, eta0, k, spec, scheme, dim, cfg.get("count_rate_hz"))
        for spec in _detectors(cfg)
    ]


def _grid(cfg: ExperimentConfig) -> Optional[np.ndarray]:
    g = cfg.get("eta_grid")
    return None if g is None else default_eta_grid(*g)


def _breed_row(template: BreedingConfig, eta, fid, fid_opt, p, rate) -> tuple:
    spec = template.spec
    n = "inf" if spec.n is None else spec.n
    kappa = spec.kappa if isinstance(spec, IdealPNR) else spec.kappas[0]
    return (eta, n, kappa, template.k, fid, fid_opt, p, rate)


def run_breed(cfg: ExperimentConfig, map_fn=map) -> Table:
    rows = []
    for template in _templates(cfg):
        if "eta" in cfg.params:
            with Step("breeding"):
                res = breed(template)
            rows.append(_breed_row(template, template.eta, res.fidelity, res.fidelity_phase_opt,
                                   res.p_succ, res.rate_hz))
        elif "eta_grid" in cfg.params:
            with Step("eta scan"):
                scan = eta_scan(template, _grid(cfg), map_fn=map_fn)
            rows.extend(_breed_row(template, p.eta, p.fidelity, p.fidelity_phase_opt, p.p_succ, p.rate_hz)
                        for p in scan.points)
        else:
            with Step("eta optimization"):
                res = optimize_eta(template)
            rows.append(_breed_row(template, res.config.eta, res.fidelity, res.fidelity_phase_opt,
                                   res.p_succ, res.rate_hz))
    return Table(SCHEMAS[cfg.experiment], rows)


def run_frontier(cfg: ExperimentConfig, map_fn=map) -> Table:
    rows = []
    grid = _grid(cfg)
    if grid is None:
        grid = default_eta_grid()
    for template in _templates(cfg):
        with Step("eta scan"):
            scan = eta_scan(template, grid, cfg.get("fidelity_floor"), map_fn=map_fn)
        rows.extend(_breed_row(template, p.eta, p.fidelity, p.fidelity_phase_opt, p.p_succ, p.rate_hz)
                    for p in scan.frontier)
    return Table(SCHEMAS["frontier"], rows)


RUNNERS: dict = {
    "moments": run_moments,
    "squeezed-calib": run_squeezed_calib,
    "cat-breed": run_breed,
    "gps-breed": run_breed,
    "frontier": run_frontier,
    "correlated": run_correlated,
}


def run_experiment(cfg: ExperimentConfig, map_fn: Callable = map) -> Table:
    Step.current = "setup"
    return RUNNERS[cfg.experiment](cfg, map_fn)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12g}"


def render_csv(table: Table, manifest: str) -> str:
    lines = [f"# {manifest}", ",".join(table.columns)]
    lines.extend(",".join(format_value(v) for v in row) for row in table.rows)
    return "\n".join(lines) + "\n"
