"""Dispatch configured experiments and persist their data files."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mongelab.acceptance import _jsonable, verify_all
from mongelab.config import ExperimentConfig
from mongelab.convex import (
    growth_exponent_fit,
    section_extract,
    sublevel_growth_check,
)
from mongelab.errors import MongeLabError
from mongelab.field_core import Domain, determinant_check, evaluate_jet, paraboloid
from mongelab.field_core.jets import DERIVED_QUANTITIES
from mongelab.norms import (
    OrliczGauge,
    decay_fit,
    log_divergence_fit,
    luxemburg_norm,
    orlicz_divergence_test,
)
from mongelab.pogorelov import (
    ExampleSpec,
    PogorelovField,
    build_example,
    default_spec,
    example_power,
    solve_profile_ode,
)
from mongelab.quadrature import AnnulusScheme, dyadic_annulus_profile
from mongelab.singularity import (
    calibrate_dichotomy,
    complex_growth_scan,
    default_scheme,
    dichotomy_corpus,
    sharpness_experiment,
)

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    experiment: str
    passed: bool
    results: dict
    files: list = field(default_factory=list)
    error: str | None = None

    @property
    def exit_code(self) -> int:
        return 0 if self.passed and self.error is None else 1


def _dump(path: Path, obj) -> Path:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _label(x: float) -> str:
    return repr(round(float(x), 6))


def _scheme(cfg: ExperimentConfig) -> AnnulusScheme:
    base = default_scheme(cfg.setting, cfg.budget, cfg.seed)
    r_outer = cfg.r_outer if cfg.r_outer is not None else base.r_outer
    return AnnulusScheme(r_outer, cfg.J, cfg.budget, cfg.seed, cfg.shells)


def _example(cfg: ExperimentConfig):
    spec = default_spec(cfg.setting, cfg.n, cfg.k)
    if cfg.family:
        spec = ExampleSpec(cfg.setting, cfg.n, cfg.k, cfg.family, cfg.f0, cfg.df0,
                           cfg.rho).validate()
    elif spec.family == "ode-exact":
        spec = ExampleSpec(cfg.setting, cfg.n, cfg.k, spec.family, cfg.f0, cfg.df0,
                           cfg.rho).validate()
    u = build_example(spec)
    u.r_min = cfg.r_min
    return spec, u


def _pogorelov_solve(cfg, out):
    prof = solve_profile_ode(cfg.n, cfg.f0, cfg.df0, cfg.rho)
    files = list(prof.export(out / f"profile_n{cfg.n}.grid"))
    u = PogorelovField(prof)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 17]))
    X = u.domain.sample_uniform(rng, 1000)
    r = np.linalg.norm(X[:, :-1], axis=1)
    X = X[r > 0.05]
    chk = determinant_check(u, X, "real", "fd")
    res = {"n": cfg.n, "alpha": prof.alpha, "rho": prof.rho, "residual_max": prof.residual_max,
           "f2_at_0": float(prof.second_derivative(0.0)),
           "fd_det_max_dev": float(np.max(np.abs(chk.det - 1))), "fd_det_tolerance": 1e-6,
           "points": int(len(X))}
    passed = prof.residual_max < 1e-10 and res["fd_det_max_dev"] < 1e-6
    return passed, res, files


def _annulus_profile(cfg, out):
    spec, u = _example(cfg)
    quantity, crit = example_power(spec)
    p = cfg.p if cfg.p is not None else crit
    prof = dyadic_annulus_profile(u, quantity, p, _scheme(cfg), workers=cfg.workers)
    files = [prof.write_csv(out / f"profile_p{_label(p)}.csv")]
    res = {"p": p, "p_crit": crit, "quantity": quantity}
    try:
        lf = log_divergence_fit(prof)
        dec = decay_fit(prof)
        res["fit"] = {"slope": lf.slope, "stderr": lf.stderr, "intercept": lf.intercept,
                      "r2": lf.r2, "verdict": lf.verdict}
        res["decay"] = {"exponent": dec.exponent, "stderr": dec.stderr, "ratio": dec.ratio}
    except MongeLabError as exc:
        res["fit_error"] = str(exc)
    files.append(_dump(out / "fit.json", res))
    return True, res, files


def _growth_fit(cfg, out):
    _, u = _example(cfg)
    if cfg.setting == "real":
        g = growth_exponent_fit(u, (cfg.n - cfg.k, cfg.k), seed=cfg.seed)
    else:
        g = complex_growth_scan(u, seed=cfg.seed)
    lines = ["r,value"] + [f"{r!r},{v!r}" for r, v in zip(g.radii.tolist(), g.values.tolist())]
    path = out / "growth.csv"
    path.write_text("\n".join(lines) + "\n")
    res = {"exponent": g.exponent, "stderr": g.stderr, "bound": g.bound, "passed": g.passed}
    return g.passed, res, [path]


def _dichotomy(cfg, out):
    p = cfg.p if cfg.p is not None else 4.0
    corpus = dichotomy_corpus(cfg.n, cfg.corpus_size, cfg.seed)
    cal = calibrate_dichotomy(corpus, p, cfg.eps, budget=cfg.budget, seed=cfg.seed)
    rows = ["eps,member,annulus_ratio,annulus_stderr,inner_ratio,inner_stderr,branch"]
    for eps, reps in cal.reports.items():
        for i, r in enumerate(reps):
            rows.append(f"{eps!r},{i},{r.annulus_ratio!r},{r.annulus_stderr!r},"
                        f"{r.inner_ratio!r},{r.inner_stderr!r},{r.branch}")
    path = out / "dichotomy_corpus.csv"
    path.write_text("\n".join(rows) + "\n")
    return cal.all_satisfied, cal.summary(), [path]


def _sections(cfg, out):
    if cfg.field == "paraboloid":
        u = paraboloid(cfg.n)
    else:
        _, u = _example(cfg)
    files, rows = [], []
    x0 = np.zeros(u.dim)
    for h in cfg.heights:
        sec = section_extract(u, x0, h, budget=cfg.budget, seed=cfg.seed)
        files += list(sec.export(out / f"section_h{_label(h)}.csv"))
        rows.append({"h": h, "volume": sec.volume, "stderr": sec.stderr,
                     "diameter": sec.diameter, "compact": sec.compact})
    res = {"sections": rows}
    passed = True
    if len(cfg.heights) >= 4:
        g = sublevel_growth_check(u, cfg.heights, budget=cfg.budget, seed=cfg.seed)
        res["sublevel"] = {"exponent": g.exponent, "stderr": g.exponent_stderr,
                           "bound": g.bound, "passed": g.passed}
        passed = g.passed
    return passed, res, files


def _orlicz(cfg, out):
    gauge = OrliczGauge("power-log", cfg.gauge_m, cfg.gauge_s)
    res = {"gauge": {"m": gauge.m, "s": gauge.s, "convex_certified": gauge.convex_certified}}
    if cfg.setting == "real":
        res["divergence"] = orlicz_divergence_test(gauge, cfg.n, cfg.k)
    spec, u = _example(cfg)
    quantity, crit = example_power(spec)
    qf = DERIVED_QUANTITIES[quantity]
    mode = "analytic" if u.analytic else "fd"

    def g(X):
        return qf(evaluate_jet(u, X, mode=mode, check=False), u)

    dom = u.domain
    norms = []
    for cut in (2.0**-2, 2.0**-4, 2.0**-6, 2.0**-8):
        region = Domain.product(dom.split[0], dom.split[1], dom.radius * 0.5, dom.ry, cut)
        norms.append({"cutoff": cut, "norm": luxemburg_norm(g, region, gauge,
                                                            budget=cfg.budget, seed=cfg.seed)})
    res["luxemburg_by_cutoff"] = norms
    return True, res, []


def _sharpness(cfg, out):
    res = sharpness_experiment(cfg.setting, cfg.n, cfg.k, cfg.multipliers, budget=cfg.budget,
                               seed=cfg.seed, scheme=_scheme(cfg))
    files = res.write(out)
    return res.confirmed, res.verdict(), files


def _verify_all(cfg, out):
    summary = verify_all(cfg.tier, cfg.seed, out)
    res = {"tier": cfg.tier, "criteria": [{"number": r.number, "title": r.title,
                                           "passed": r.passed} for r in summary.results]}
    return summary.passed, res, [out / "summary.csv"]


DISPATCH = {
    "pogorelov-solve": _pogorelov_solve,
    "annulus-profile": _annulus_profile,
    "growth-fit": _growth_fit,
    "dichotomy": _dichotomy,
    "sections": _sections,
    "orlicz": _orlicz,
    "sharpness": _sharpness,
    "verify-all": _verify_all,
}


def _summary_text(rep: RunReport) -> str:
    lines = [f"experiment: {rep.experiment}", f"passed: {rep.passed}"]
    if rep.error:
        lines.append(f"error: {rep.error}")
    for k, v in sorted(rep.results.items()):
        if isinstance(v, (str, int, float, bool)):
            lines.append(f"{k}: {v}")
    lines += [f"file: {Path(f).name}" for f in rep.files]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run the configured experiment; writes data files, report.json and summary.txt."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        passed, results, files = DISPATCH[cfg.experiment](cfg, out)
        rep = RunReport(cfg.experiment, bool(passed), results, files)
    except MongeLabError as exc:
        log.error("%s failed: %s", cfg.experiment, exc)
        rep = RunReport(cfg.experiment, False, {}, [], f"{type(exc).__name__}: {exc}")
    config = cfg.resolved()
    config["provenance"] = {k: list(v) for k, v in sorted(cfg.provenance.items())}
    _dump(out / "report.json", {"config": config, "experiment": rep.experiment,
                                "passed": rep.passed, "error": rep.error,
                                "results": rep.results,
                                "files": sorted(Path(f).name for f in rep.files)})
    (out / "summary.txt").write_text(_summary_text(rep))
    return rep
