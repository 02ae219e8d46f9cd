"""Monte Carlo experiment specification, execution and output files.

An experiment crosses DGP variants, sample sizes, lag rules, maximal
horizons and estimators. Each run with maximal horizon H is scored at h = H.
Work is split into units ``(variant, T, replication)``: a unit simulates one
series and runs every lag rule, horizon and estimator on it, so estimators
are compared on common data.

Seed derivation (all below ``root_seed``):

* data:          ``(0, variant, T, rep)``
* AR(p) draw:    ``(1, variant, rep)``
* bootstrap:     ``(2, variant, T, rep, H)``, then one child per replicate
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, seeding
from ._toml import TOMLDecodeError, load_toml, loads_toml
from .bootstrap import BootPipelineConfig, run_ar_benchmark, run_lp_bootstrap, run_var_ma_bootstrap
from .dgp import DEFAULT_BURN_IN, FIXTURE_DIR, Ar1Spec, draw_arp_coefficients, load_gbf, simulate, true_irf
from .errors import InvalidSpecError, LpBootError
from .localproj import fit_lp
from .metrics import McCell, assemble_table, envelope_rel_length, fmt, mean_abs_bias, median_rel_length
from .metrics import coverage as coverage_share
from .regress import default_p_max, select_lag_sbic
from .resample import BLOCK_RULES, KINDS, WEIGHT_LAWS, ResampleScheme, default_block_length

logger = logging.getLogger(__name__)

ESTIMATORS = ("lp-method1", "lp-method2", "var-ma", "ar-benchmark")
PAPER_SCALE_B = 999
WORKERS_ENV = "LPBOOT_WORKERS"

_TOP_KEYS = {
    "name",
    "description",
    "root_seed",
    "T",
    "horizons",
    "lag_rules",
    "estimators",
    "scheme",
    "block_rule",
    "weight_law",
    "benchmark_scheme",
    "ar_intercept",
    "B",
    "alpha",
    "mc_reps",
    "burn_in",
    "p_max",
    "var_ma_s",
    "length_normalization",
    "dgp",
}
_DGP_KEYS = {
    "ar1": {"family", "phi", "innovation_sd"},
    "arp": {"family", "order", "band", "innovation_sd"},
    "gbf": {"family", "fixture", "q", "components", "innovation_sd", "label"},
}


@dataclass(frozen=True)
class DgpVariant:
    """One DGP configuration of an experiment."""

    label: str
    family: str
    params: dict

    def draw(self, root_seed: int, index: int, rep: int):
        """The DGP spec for one replication; AR(p) coefficients are drawn per replication."""
        if self.family == "ar1":
            return Ar1Spec(self.params["phi"], self.params.get("innovation_sd", 1.0))
        if self.family == "arp":
            stream = seeding.substream(root_seed, 1, index, rep)
            return draw_arp_coefficients(self.params["order"], self.params["band"], stream, self.params.get("innovation_sd", 1.0))
        return load_gbf(self.params["gbf"])

    def true_order(self):
        if self.family == "ar1":
            return 1
        if self.family == "arp":
            return int(self.params["order"])
        return None


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated Monte Carlo design; see :func:`parse_spec` for the file format."""

    name: str
    root_seed: int
    T: tuple
    horizons: tuple
    lag_rules: tuple
    estimators: tuple
    variants: tuple
    B: int = 199
    alpha: float = 0.10
    mc_reps: int = 100
    scheme: str = "bwb"
    block_rule: str = "H"
    weight_law: str = "rademacher"
    benchmark_scheme: str = "iid"
    ar_intercept: bool = True
    burn_in: int = DEFAULT_BURN_IN
    p_max: int | None = None
    var_ma_s: int | None = None
    length_normalization: str = "irf-range"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def with_B(self, B: int) -> "ExperimentSpec":
        raw = dict(self.raw, B=B)
        return parse_spec(raw)

    def lag_label(self, rule) -> str:
        return str(rule)

    def scheme_label(self, estimator: str) -> str:
        if estimator.startswith("lp-"):
            kind = self.scheme
        else:
            kind = self.benchmark_scheme
        label = kind
        if kind in ("bwb", "bb"):
            label += f"(l={self.block_rule})"
        if kind in ("bwb", "wild") and self.weight_law != "rademacher":
            label += f"[{self.weight_law}]"
        return label


def _want_list(errors, name, value, kind):
    if not isinstance(value, list) or not value:
        errors.append(f"field '{name}': expected a non-empty list")
        return []
    bad = [v for v in value if not kind(v)]
    if bad:
        errors.append(f"field '{name}': invalid entries {bad}")
    return value


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _parse_dgp(d, errors) -> tuple:
    if not isinstance(d, dict):
        errors.append("field 'dgp': expected a table")
        return ()
    fam = d.get("family")
    if fam not in _DGP_KEYS:
        errors.append(f"field 'dgp.family': expected one of {sorted(_DGP_KEYS)}, got {fam!r}")
        return ()
    for k in sorted(set(d) - _DGP_KEYS[fam]):
        errors.append(f"field 'dgp.{k}': not recognized for family {fam!r}")
    sd = d.get("innovation_sd", 1.0)
    if not (_is_num(sd) and sd > 0):
        errors.append("field 'dgp.innovation_sd': must be a positive number")
        return ()
    if fam == "ar1":
        phis = _want_list(errors, "dgp.phi", d.get("phi"), lambda v: _is_num(v) and abs(v) <= 1)
        return tuple(DgpVariant(f"ar1(phi={fmt(float(v))})", "ar1", {"phi": float(v), "innovation_sd": sd}) for v in phis)
    if fam == "arp":
        orders = d.get("order")
        if _is_int(orders):
            orders = [orders]
        orders = _want_list(errors, "dgp.order", orders, lambda v: _is_int(v) and v >= 1)
        band = d.get("band")
        if not (isinstance(band, list) and len(band) == 2 and all(_is_num(v) for v in band) and 0 <= band[0] < band[1] < 1):
            errors.append("field 'dgp.band': expected [low, high] with 0 <= low < high < 1")
            return ()
        return tuple(
            DgpVariant(f"arp(P={o},band=[{fmt(band[0])},{fmt(band[1])}])", "arp", {"order": o, "band": tuple(band), "innovation_sd": sd})
            for o in orders
        )
    if "fixture" in d:
        if "q" in d or "components" in d:
            errors.append("field 'dgp': give either 'fixture' or inline 'q'/'components', not both")
            return ()
        source = d["fixture"]
        label = d.get("label", str(source))
    else:
        source = {"q": d.get("q"), "components": d.get("components", []), "innovation_sd": sd}
        label = d.get("label", "inline")
    try:
        g = load_gbf(source)
    except (LpBootError, OSError, TypeError, ValueError, TOMLDecodeError) as exc:
        errors.append(f"field 'dgp': cannot build GBF spec: {exc}")
        return ()
    gbf = {"q": g.q, "components": [dict(a=a, b=b, c=c) for a, b, c in g.components], "innovation_sd": g.innovation_sd}
    return (DgpVariant(f"gbf({label},q={g.q})", "gbf", {"gbf": gbf}),)


def parse_spec(data: dict) -> ExperimentSpec:
    """Validate a decoded experiment file.

    Unknown keys are rejected. All problems are collected and reported
    together as one :class:`InvalidSpecError`, one line per field.
    """
    errors = []
    if not isinstance(data, dict):
        raise InvalidSpecError("experiment spec must be a table")
    for k in sorted(set(data) - _TOP_KEYS):
        errors.append(f"field '{k}': not recognized")
    for k in ("root_seed", "T", "horizons", "dgp"):
        if k not in data:
            errors.append(f"field '{k}': required")
    seed = data.get("root_seed", 0)
    if not (_is_int(seed) and seed >= 0):
        errors.append("field 'root_seed': must be a non-negative integer")
    Ts = _want_list(errors, "T", data.get("T", [0]), lambda v: _is_int(v) and v >= 20)
    Hs = _want_list(errors, "horizons", data.get("horizons", [1]), lambda v: _is_int(v) and v >= 1)
    lags = _want_list(
        errors, "lag_rules", data.get("lag_rules", ["sbic"]), lambda v: v in ("sbic", "true") or (_is_int(v) and v >= 1)
    )
    ests = _want_list(errors, "estimators", data.get("estimators", ["lp-method1"]), lambda v: v in ESTIMATORS)
    if len(set(map(str, lags))) != len(lags) or len(set(ests)) != len(ests):
        errors.append("fields 'lag_rules'/'estimators': duplicate entries")
    checks = {
        "B": (data.get("B", 199), lambda v: _is_int(v) and v >= 19, "an integer >= 19"),
        "alpha": (data.get("alpha", 0.10), lambda v: _is_num(v) and 0 < v < 1, "a number in (0, 1)"),
        "mc_reps": (data.get("mc_reps", 100), lambda v: _is_int(v) and v >= 1, "a positive integer"),
        "burn_in": (data.get("burn_in", DEFAULT_BURN_IN), lambda v: _is_int(v) and v >= 0, "a non-negative integer"),
        "scheme": (data.get("scheme", "bwb"), lambda v: v in KINDS, f"one of {KINDS}"),
        "benchmark_scheme": (data.get("benchmark_scheme", "iid"), lambda v: v in KINDS, f"one of {KINDS}"),
        "block_rule": (data.get("block_rule", "H"), lambda v: v in BLOCK_RULES, f"one of {BLOCK_RULES}"),
        "weight_law": (data.get("weight_law", "rademacher"), lambda v: v in WEIGHT_LAWS, f"one of {WEIGHT_LAWS}"),
        "p_max": (data.get("p_max", 1), lambda v: _is_int(v) and v >= 1, "a positive integer"),
        "var_ma_s": (data.get("var_ma_s", 1), lambda v: _is_int(v) and v >= 1, "a positive integer"),
        "length_normalization": (
            data.get("length_normalization", "irf-range"),
            lambda v: v in ("irf-range", "envelope"),
            "'irf-range' or 'envelope'",
        ),
        "ar_intercept": (data.get("ar_intercept", True), lambda v: isinstance(v, bool), "true or false"),
        "name": (data.get("name", "experiment"), lambda v: isinstance(v, str) and v, "a non-empty string"),
    }
    for k, (v, ok, what) in checks.items():
        if not ok(v):
            errors.append(f"field '{k}': must be {what}, got {v!r}")
    variants = _parse_dgp(data.get("dgp", {}), errors) if "dgp" in data else ()
    if variants and "true" in lags and variants[0].family == "gbf":
        errors.append("field 'lag_rules': 'true' has no meaning for a moving-average DGP")
    if errors:
        raise InvalidSpecError("invalid experiment spec:\n  " + "\n  ".join(errors))
    return ExperimentSpec(
        name=data.get("name", "experiment"),
        root_seed=int(seed),
        T=tuple(Ts),
        horizons=tuple(Hs),
        lag_rules=tuple(lags),
        estimators=tuple(ests),
        variants=variants,
        B=data.get("B", 199),
        alpha=float(data.get("alpha", 0.10)),
        mc_reps=data.get("mc_reps", 100),
        scheme=data.get("scheme", "bwb"),
        block_rule=data.get("block_rule", "H"),
        weight_law=data.get("weight_law", "rademacher"),
        benchmark_scheme=data.get("benchmark_scheme", "iid"),
        ar_intercept=data.get("ar_intercept", True),
        burn_in=data.get("burn_in", DEFAULT_BURN_IN),
        p_max=data.get("p_max"),
        var_ma_s=data.get("var_ma_s"),
        length_normalization=data.get("length_normalization", "irf-range"),
        raw=dict(data),
    )


def resolve_spec_path(source) -> Path:
    """A spec path, or the name of a shipped fixture such as ``smoke``."""
    path = Path(source)
    if path.exists():
        return path
    fixture = FIXTURE_DIR / f"{source}.toml"
    if fixture.exists():
        return fixture
    raise InvalidSpecError(f"no spec file or fixture named {source!r}")


def load_spec(source) -> tuple[ExperimentSpec, bytes]:
    """Read and validate a spec file; returns the spec and the raw bytes."""
    path = resolve_spec_path(source)
    raw = path.read_bytes()
    try:
        data = loads_toml(raw.decode("utf-8"))
    except (TOMLDecodeError, UnicodeDecodeError) as exc:
        raise InvalidSpecError(f"cannot parse {path}: {exc}") from None
    return parse_spec(data), raw


def list_fixtures() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.toml") if not p.stem.startswith("gbf_"))


# --- execution --------------------------------------------------------------------------


def _lag_order(rule, y, spec: ExperimentSpec, variant: DgpVariant) -> int:
    if rule == "sbic":
        return select_lag_sbic(y, spec.p_max or default_p_max(len(y)))
    if rule == "true":
        return variant.true_order()
    return int(rule)


def _boot_config(spec: ExperimentSpec, estimator: str, H: int) -> BootPipelineConfig:
    if estimator.startswith("lp-"):
        kind = spec.scheme
        l = default_block_length(H, spec.block_rule) if kind in ("bwb", "bb") else 1
        method = int(estimator[-1])
    else:
        kind, l, method = spec.benchmark_scheme, default_block_length(H, spec.block_rule), 1
    scheme = ResampleScheme(kind, l if kind in ("bwb", "bb") else 1, spec.weight_law)
    return BootPipelineConfig(
        method=method, B=spec.B, alpha=spec.alpha, scheme=scheme, var_ma_s=spec.var_ma_s, ar_intercept=spec.ar_intercept
    )


def run_unit(spec: ExperimentSpec, v: int, T: int, rep: int) -> list[dict]:
    """All records for one simulated series; pure function of its arguments."""
    variant = spec.variants[v]
    records = []
    base = dict(design=spec.name, dgp=variant.label, T=T, rep=rep)
    try:
        dgp_spec = variant.draw(spec.root_seed, v, rep)
        y = simulate(dgp_spec, T, spec.burn_in, seeding.substream(spec.root_seed, 0, v, T, rep))
        truth = true_irf(dgp_spec, max(spec.horizons)).values
    except LpBootError as exc:
        for rule in spec.lag_rules:
            for H in spec.horizons:
                for est in spec.estimators:
                    records.append(_failed(base, spec, rule, est, H, exc))
        return records
    for rule in spec.lag_rules:
        try:
            p = _lag_order(rule, y, spec, variant)
        except LpBootError as exc:
            for H in spec.horizons:
                for est in spec.estimators:
                    records.append(_failed(base, spec, rule, est, H, exc))
            continue
        for H in spec.horizons:
            boot_seed = seeding.substream(spec.root_seed, 2, v, T, rep, H)
            lp = None
            for est in spec.estimators:
                rec = dict(base, lag_rule=spec.lag_label(rule), method=est, scheme=spec.scheme_label(est), h=H, p=p)
                try:
                    cfg = _boot_config(spec, est, H)
                    if est.startswith("lp-"):
                        if lp is None:
                            lp = fit_lp(y, p, H)
                        res = run_lp_bootstrap(y, p, H, cfg, boot_seed, lp=lp)
                        estimate = lp.b_hats
                    elif est == "var-ma":
                        res = run_var_ma_bootstrap(y, p, H, cfg, boot_seed)
                        estimate = res.point
                    else:
                        res = run_ar_benchmark(y, p, H, cfg, boot_seed)
                        estimate = res.point
                except LpBootError as exc:
                    records.append(_failed(base, spec, rule, est, H, exc, p))
                    continue
                rec.update(
                    point=float(res.point[H]),
                    lo_t=float(res.lo_t[H]),
                    hi_t=float(res.hi_t[H]),
                    lo_efron=float(res.lo_efron[H]),
                    hi_efron=float(res.hi_efron[H]),
                    boot_mean=float(res.boot_mean[H]),
                    truth=float(truth[H]),
                    irf_range=float(np.max(estimate) - np.min(estimate)),
                    n_failures=res.n_failures,
                    fallback=int(res.fallback),
                    n_explosive=res.n_explosive,
                    status="ok",
                    message="",
                )
                records.append(rec)
    return records


REPLICATION_COLUMNS = (
    "design",
    "dgp",
    "T",
    "lag_rule",
    "method",
    "scheme",
    "h",
    "rep",
    "p",
    "point",
    "lo_t",
    "hi_t",
    "lo_efron",
    "hi_efron",
    "boot_mean",
    "truth",
    "irf_range",
    "n_failures",
    "fallback",
    "n_explosive",
    "status",
    "message",
)


def _failed(base, spec, rule, est, H, exc, p=-1):
    rec = dict(base, lag_rule=spec.lag_label(rule), method=est, scheme=spec.scheme_label(est), h=H, p=p)
    for k in ("point", "lo_t", "hi_t", "lo_efron", "hi_efron", "boot_mean", "truth", "irf_range"):
        rec[k] = float("nan")
    rec.update(n_failures=0, fallback=0, n_explosive=0, status="failed", message=f"{type(exc).__name__}: {exc}")
    return rec


def work_units(spec: ExperimentSpec) -> list[tuple]:
    return [(v, T, rep) for v in range(len(spec.variants)) for T in spec.T for rep in range(spec.mc_reps)]


def _unit_task(args):
    spec, v, T, rep = args
    return run_unit(spec, v, T, rep)


def execute(spec: ExperimentSpec, workers: int = 1) -> list[dict]:
    """Run every work unit and return records in unit order."""
    units = work_units(spec)
    tasks = [(spec, v, T, rep) for v, T, rep in units]
    if workers <= 1:
        chunks = [_unit_task(t) for t in tasks]
    else:
        chunksize = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_unit_task, tasks, chunksize=chunksize))
    return [rec for chunk in chunks for rec in chunk]


def aggregate(spec: ExperimentSpec, records: list[dict]):
    """Metrics table plus the list of cells that had failed replications."""
    groups: dict[tuple, list] = {}
    for r in records:
        key = (r["design"], r["dgp"], r["T"], r["lag_rule"], r["method"], r["scheme"], r["h"])
        groups.setdefault(key, []).append(r)
    cells, failures = [], []
    for key, recs in groups.items():
        ok = [r for r in recs if r["status"] == "ok"]
        bad = [r for r in recs if r["status"] != "ok"]
        if bad:
            failures.append({"cell": dict(zip(McCell.__dataclass_fields__, key)), "n_failed": len(bad), "messages": sorted({r["message"] for r in bad})})
        if ok:
            lo = np.array([r["lo_t"] for r in ok])
            hi = np.array([r["hi_t"] for r in ok])
            truth = np.array([r["truth"] for r in ok])
            if spec.length_normalization == "envelope":
                length, n_deg = envelope_rel_length(lo, hi, [r["point"] for r in ok]), 0
            else:
                length, n_deg = median_rel_length(lo, hi, ranges=[r["irf_range"] for r in ok])
            cov = coverage_share(lo, hi, truth)
            bias = mean_abs_bias([r["boot_mean"] for r in ok], truth)
        else:
            cov = length = bias = float("nan")
            n_deg = 0
        cells.append(McCell(*key, coverage=cov, median_rel_length=length, mean_abs_bias=bias, n_reps=len(ok), n_degenerate=n_deg))
    return assemble_table(cells, horizons=spec.horizons), failures


def _records_csv(records) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPLICATION_COLUMNS)
    for r in records:
        w.writerow([fmt(r[k]) if isinstance(r[k], (float, np.floating)) else r[k] for k in REPLICATION_COLUMNS])
    return buf.getvalue()


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunOutcome:
    exit_code: int
    out_dir: Path
    manifest: dict


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise InvalidSpecError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
    return 1


def run_experiment(spec_file, out_dir, workers: int | None = None, paper_scale: bool = False) -> RunOutcome:
    """Run a spec file and write metrics.csv, metrics.json, replications.csv and manifest.json.

    Returns exit code 0 when every replication succeeded and 3 when some
    failed; failures are listed in failures.json. Invalid specs raise
    :class:`InvalidSpecError`.
    """
    started = time.time()
    spec, raw = load_spec(spec_file)
    if paper_scale:
        spec = spec.with_B(PAPER_SCALE_B)
    workers = default_workers() if workers is None else max(1, int(workers))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "lpboot",
        "version": __version__,
        "spec_file": str(spec_file),
        "spec_sha256": _sha256(raw),
        "spec": _jsonable(spec.raw),
        "paper_scale": paper_scale,
        "B": spec.B,
        "workers": workers,
        "status": "running",
        "seeds": _seed_manifest(spec),
        "artifacts": {},
    }
    try:
        records = execute(spec, workers)
    except KeyboardInterrupt:
        manifest.update(status="cancelled", wall_clock_seconds=round(time.time() - started, 3))
        _write_json(out / "manifest.json", manifest)
        raise
    table, failures = aggregate(spec, records)
    files = {
        "metrics.csv": table.to_csv(),
        "metrics.json": table.to_json(),
        "replications.csv": _records_csv(records),
    }
    if failures:
        files["failures.json"] = json.dumps(failures, indent=1) + "\n"
    for name, text in files.items():
        data = text.encode("utf-8")
        (out / name).write_bytes(data)
        manifest["artifacts"][name] = {"path": str(out / name), "sha256": _sha256(data)}
    code = 3 if failures else 0
    manifest.update(status="partial-failure" if failures else "ok", exit_code=code, wall_clock_seconds=round(time.time() - started, 3))
    _write_json(out / "manifest.json", manifest)
    return RunOutcome(code, out, manifest)


def _seed_manifest(spec: ExperimentSpec) -> dict:
    units = []
    for v, T, rep in work_units(spec):
        entry = {
            "dgp": spec.variants[v].label,
            "T": T,
            "rep": rep,
            "data": seeding.describe(seeding.substream(spec.root_seed, 0, v, T, rep)),
            "bootstrap": {str(H): seeding.describe(seeding.substream(spec.root_seed, 2, v, T, rep, H)) for H in spec.horizons},
        }
        if spec.variants[v].family == "arp":
            entry["ar_coefficients"] = seeding.describe(seeding.substream(spec.root_seed, 1, v, rep))
        units.append(entry)
    return {
        "root_seed": spec.root_seed,
        "scheme": "SeedSequence(root_seed, spawn_key=...): data (0, variant, T, rep); "
        "AR(p) coefficients (1, variant, rep); bootstrap (2, variant, T, rep, H) with child b per replicate",
        "units": units,
    }


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")
