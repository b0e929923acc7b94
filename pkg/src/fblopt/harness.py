"""Monte Carlo experiment harness.

Defines scenarios (user links, power/length/weight grids, trial counts),
runs seeded trials serially or across processes with per-trial RNG
substreams, dispatches the four schemes, aggregates per-cell statistics, and
emits deterministic CSV plus a run manifest. The same (config, seed) pair
always produces byte-identical CSV regardless of parallelism: every trial's
randomness is a pure function of (master_seed, trial_index) and aggregation
reduces in trial order.
"""

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import UserLink, sample_realization
from .config import SolverConfig
from .error_assignment import SortedQosProfile, optimal_errors
from .joint import OracleGrid, exhaustive_oracle, make_report, solve_joint
from .kernels import EPS_FLOOR
from .power import equal_power, solve_power, sr_infinity, water_filling

logger = logging.getLogger("fblopt")

SCHEMES = ("proposed", "wf_minmax", "proposedpower_minmax", "equalpower_opteps")

CSV_HEADER = (
    "scheme,omega,L,p_max,mean_sum_rate,mean_max_eps,"
    "mean_throughput,std_throughput,n_trials,seed"
)

# fraction of failed trials above which a cell is considered broken
FAILURE_BUDGET = 0.01


@dataclass(frozen=True)
class ScenarioConfig:
    links: tuple
    noise_power: float = 1.0
    p_max_grid: tuple = (6.0,)
    p_max_unit: str = "db"  # "db" or "linear"
    l_grid: tuple = (200,)
    omega_grid: tuple = (0.9,)
    n_trials: int = 1000
    master_seed: int = 12345
    schemes: tuple = SCHEMES
    oracle: OracleGrid | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_jobs: int = 1
    fading: bool = True  # False pins theta = 1, for hand-checkable runs

    def p_max_linear(self, value) -> float:
        if self.p_max_unit == "db":
            return 10.0 ** (value / 10.0)
        return float(value)


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    omega: float
    block_length: int
    p_max: float
    mean_sum_rate: float
    mean_max_eps: float
    mean_throughput: float
    std_throughput: float
    n_trials: int
    seed: int


def default_config(**overrides) -> ScenarioConfig:
    """Four equidistant users with the usual vehicular-grade error caps,
    unit noise, 6 dB budget, 200 channel uses, omega 0.9, 10^3 trials.

    kappa=1, distance=1, exponent=3 give unit mean gains; these propagation
    values are a declared harness default, not a modeled quantity.
    """
    caps = (1e-5, 5e-5, 1e-4, 5e-4)
    links = tuple(
        UserLink(kappa=1.0, distance=1.0, pathloss_exp=3.0, eps_max=c) for c in caps
    )
    cfg = ScenarioConfig(links=links)
    return replace(cfg, **overrides) if overrides else cfg


def scheme_dispatch(scheme, realization, profile, omega, config=None):
    """Solve one realization under the named scheme and report it.

    proposed             joint alternating solver
    wf_minmax            water-filling power, all errors at the strictest cap
    proposedpower_minmax augmented-Lagrangian power, errors at strictest cap
    equalpower_opteps    equal power split, closed-form error assignment
    """
    config = config or SolverConfig()
    if scheme == "proposed":
        return solve_joint(realization, profile, omega, config)

    n = realization.n_users
    sr_inf = sr_infinity(realization.gamma, realization.p_max)
    minmax_eps = np.full(n, profile.eps_max_sorted[0])
    flags = []
    if scheme == "wf_minmax":
        p = water_filling(realization.gamma, realization.p_max)
        eps = minmax_eps
    elif scheme == "proposedpower_minmax":
        result = solve_power(realization, minmax_eps, omega, sr_inf, config)
        p = result.p
        eps = minmax_eps
        if not result.converged:
            flags.append("power_stage_cap")
    elif scheme == "equalpower_opteps":
        p = equal_power(n, realization.p_max)
        if omega == 0.0:
            eps = np.minimum(np.full(n, EPS_FLOOR), profile.caps_original())
        else:
            eps = optimal_errors(realization, p, profile, omega, sr_inf).eps
    else:
        raise ValueError(f"unknown scheme: {scheme!r}")
    return make_report(
        realization, profile, p, eps, omega, sr_inf, iterations=1, flags=flags
    )


def _run_trial(task):
    """One (cell, trial) evaluation; module-level so it pickles for workers.

    The fading draw depends only on (master_seed, trial_index), so the same
    trial index sees the same channel in every cell and scheme comparisons
    are paired.
    """
    (links, noise, p_max_lin, length, omega, scheme, solver, seed, trial, oracle, fading) = task
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    realization = sample_realization(
        links, p_max_lin, length, noise, rng=rng, fading=fading
    )
    profile = SortedQosProfile.from_caps([l.eps_max for l in links])
    try:
        if scheme == "exhaustive":
            alloc, _ = exhaustive_oracle(realization, profile, omega, oracle)
            report = make_report(realization, profile, alloc.p, alloc.eps, omega)
        else:
            report = scheme_dispatch(scheme, realization, profile, omega, solver)
    except Exception:
        logger.exception("trial %d of scheme %s failed", trial, scheme)
        return trial, False, np.nan, np.nan, np.nan
    ok = "not_converged" not in report.flags
    return trial, ok, report.sum_rate, report.max_eps, report.throughput


def run_scenario(config: ScenarioConfig):
    """Run every (scheme, omega, L, p_max) cell of the scenario.

    Failed trials (exceptions or joint-solver non-convergence) are excluded
    from the means and logged; a cell aborts when more than 1% of its trials
    fail. Returns ResultRow objects sorted by (scheme, omega, L, p_max).
    """
    if config.n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not (config.omega_grid and config.l_grid and config.p_max_grid):
        raise ValueError("omega, L and p_max grids must be nonempty")
    if not config.schemes:
        raise ValueError("scheme set must be nonempty")
    unknown = set(config.schemes) - set(SCHEMES)
    if unknown:
        raise ValueError(f"unknown schemes: {sorted(unknown)}")
    schemes = tuple(config.schemes)
    if config.oracle is not None:
        if len(config.links) > 3:
            raise ValueError("exhaustive oracle rows require 3 users or fewer")
        schemes = schemes + ("exhaustive",)

    executor = (
        ProcessPoolExecutor(max_workers=config.n_jobs) if config.n_jobs > 1 else None
    )
    rows = []
    try:
        for omega in config.omega_grid:
            for length in config.l_grid:
                for p_max in config.p_max_grid:
                    p_lin = config.p_max_linear(p_max)
                    for scheme in schemes:
                        tasks = [
                            (
                                config.links,
                                config.noise_power,
                                p_lin,
                                int(length),
                                float(omega),
                                scheme,
                                config.solver,
                                config.master_seed,
                                trial,
                                config.oracle,
                                config.fading,
                            )
                            for trial in range(config.n_trials)
                        ]
                        if executor is not None:
                            chunk = max(1, config.n_trials // (config.n_jobs * 8))
                            results = list(executor.map(_run_trial, tasks, chunksize=chunk))
                        else:
                            results = [_run_trial(t) for t in tasks]
                        rows.append(
                            _aggregate(results, scheme, omega, length, p_max, config)
                        )
    finally:
        if executor is not None:
            executor.shutdown()

    rows.sort(key=lambda r: (r.scheme, r.omega, r.block_length, r.p_max))
    _log_scheme_ordering(rows)
    return rows


def _aggregate(results, scheme, omega, length, p_max, config) -> ResultRow:
    ok = np.array([r[1] for r in results], dtype=bool)
    n_failed = int((~ok).sum())
    if n_failed:
        logger.warning(
            "cell (%s, omega=%s, L=%s, p_max=%s): %d/%d trials failed and were excluded",
            scheme, omega, length, p_max, n_failed, len(results),
        )
    if n_failed > FAILURE_BUDGET * len(results):
        raise RuntimeError(
            f"cell ({scheme}, omega={omega}, L={length}, p_max={p_max}): "
            f"{n_failed}/{len(results)} trials failed"
        )
    sum_rates = np.array([r[2] for r in results])[ok]
    max_eps = np.array([r[3] for r in results])[ok]
    throughput = np.array([r[4] for r in results])[ok]
    return ResultRow(
        scheme=scheme,
        omega=float(omega),
        block_length=int(length),
        p_max=float(p_max),
        mean_sum_rate=float(sum_rates.mean()),
        mean_max_eps=float(max_eps.mean()),
        mean_throughput=float(throughput.mean()),
        std_throughput=float(throughput.std(ddof=1)) if throughput.size > 1 else 0.0,
        n_trials=int(ok.sum()),
        seed=config.master_seed,
    )


def _log_scheme_ordering(rows):
    """Soft check: equal power with optimal errors is expected to beat the
    optimized power with minmax errors; a miss is logged, not fatal."""
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r.omega, r.block_length, r.p_max), {})[r.scheme] = r
    for cell, per_scheme in by_cell.items():
        a = per_scheme.get("equalpower_opteps")
        b = per_scheme.get("proposedpower_minmax")
        if a and b and a.mean_throughput < b.mean_throughput:
            logger.warning(
                "cell %s: equalpower_opteps throughput %.6g below "
                "proposedpower_minmax %.6g",
                cell, a.mean_throughput, b.mean_throughput,
            )


def _fmt(value) -> str:
    return f"{value:.9g}"


def emit_csv(rows, path):
    """Write rows as UTF-8 CSV, 9 significant digits, sorted by
    (scheme, omega, L, p_max)."""
    rows = sorted(rows, key=lambda r: (r.scheme, r.omega, r.block_length, r.p_max))
    if not rows:
        raise ValueError("emit_csv requires at least one row")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in rows:
                fh.write(
                    ",".join(
                        [
                            r.scheme,
                            _fmt(r.omega),
                            str(r.block_length),
                            _fmt(r.p_max),
                            _fmt(r.mean_sum_rate),
                            _fmt(r.mean_max_eps),
                            _fmt(r.mean_throughput),
                            _fmt(r.std_throughput),
                            str(r.n_trials),
                            str(r.seed),
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise OSError(f"failed writing CSV to {path}: {exc}") from exc


def read_rows(path):
    """Parse a CSV produced by emit_csv back into ResultRow objects."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                ResultRow(
                    scheme=rec["scheme"],
                    omega=float(rec["omega"]),
                    block_length=int(rec["L"]),
                    p_max=float(rec["p_max"]),
                    mean_sum_rate=float(rec["mean_sum_rate"]),
                    mean_max_eps=float(rec["mean_max_eps"]),
                    mean_throughput=float(rec["mean_throughput"]),
                    std_throughput=float(rec["std_throughput"]),
                    n_trials=int(rec["n_trials"]),
                    seed=int(rec["seed"]),
                )
            )
    return out


def config_hash(config: ScenarioConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(config: ScenarioConfig, csv_path, manifest_path=None):
    """Record config hash, seed and library versions next to the CSV."""
    import scipy

    from . import __version__

    manifest_path = manifest_path or str(csv_path) + ".manifest.txt"
    import sys

    lines = [
        f"config_hash = {config_hash(config)}",
        f"master_seed = {config.master_seed}",
        f"csv = {csv_path}",
        f"fblopt = {__version__}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
        f"python = {sys.version.split()[0]}",
    ]
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest_path


def seed_from_env(default):
    """FBLOPT_SEED environment variable as a seed fallback."""
    value = os.environ.get("FBLOPT_SEED")
    if value is None:
        return default
    return int(value)


def _parse_list(text, cast):
    return tuple(cast(tok) for tok in text.split())


def load_config_file(path) -> ScenarioConfig:
    """Read a scenario from a flat key = value config file.

    Sections and keys are documented in the README; unknown keys raise.
    """
    import configparser

    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)

    users = parser["users"] if parser.has_section("users") else {}
    count = int(users.get("count", 4))
    caps = _parse_list(users.get("eps_max", "1e-5 5e-5 1e-4 5e-4"), float)
    if len(caps) != count:
        raise ValueError("eps_max must list one cap per user")

    def per_user(key, default):
        raw = users.get(key, default)
        vals = _parse_list(raw, float)
        if len(vals) == 1:
            vals = vals * count
        if len(vals) != count:
            raise ValueError(f"{key} must give one value or one per user")
        return vals

    kappas = per_user("kappa", "1.0")
    dists = per_user("distance", "1.0")
    exps = per_user("pathloss_exp", "3.0")
    links = tuple(
        UserLink(kappa=k, distance=d, pathloss_exp=e, eps_max=c)
        for k, d, e, c in zip(kappas, dists, exps, caps)
    )

    scen = parser["scenario"] if parser.has_section("scenario") else {}
    known = {
        "omega_grid", "l_grid", "p_max_grid", "p_max_unit", "n_trials",
        "master_seed", "schemes", "noise_power", "n_jobs",
    }
    extra = set(scen.keys()) - known if scen else set()
    if extra:
        raise ValueError(f"unknown scenario keys: {sorted(extra)}")

    oracle = None
    if parser.has_section("oracle"):
        osec = parser["oracle"]
        oracle = OracleGrid(
            p_points=int(osec.get("p_points", 200)),
            eps_points=int(osec.get("eps_points", 200)),
        )

    solver = SolverConfig()
    if parser.has_section("solver"):
        fields = {f: type(getattr(solver, f)) for f in solver.__dataclass_fields__}
        overrides = {}
        for key, raw in parser["solver"].items():
            if key not in fields:
                raise ValueError(f"unknown solver key: {key}")
            overrides[key] = fields[key](raw)
        solver = replace(solver, **overrides)

    return ScenarioConfig(
        links=links,
        noise_power=float(scen.get("noise_power", 1.0)),
        p_max_grid=_parse_list(scen.get("p_max_grid", "6"), float),
        p_max_unit=scen.get("p_max_unit", "db"),
        l_grid=_parse_list(scen.get("l_grid", "200"), int),
        omega_grid=_parse_list(scen.get("omega_grid", "0.9"), float),
        n_trials=int(scen.get("n_trials", 1000)),
        master_seed=int(scen.get("master_seed", 12345)),
        schemes=tuple(scen.get("schemes", " ".join(SCHEMES)).split()),
        oracle=oracle,
        solver=solver,
        n_jobs=int(scen.get("n_jobs", 1)),
    )
