"""Scenario loading, validation, execution and report writing."""

import csv
import datetime
import json
import math
import re
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .. import __version__
from ..errors import ShrinkerLabError, ValidationError
from .operations import REGISTRY, RESOLVERS, Context
from .params import bind

RESERVED = {"id", "operation", "surface", "moment", "graph"}
RUN_KEYS = {"tol", "seed", "jobs"}
ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


@dataclass(frozen=True)
class Scenario:
    id: str
    operation: str
    source: object
    params: dict


def parse_value(text):
    """A TOML value, or the bare string when it does not parse as one."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_overrides(items):
    """``[id.]key=value`` strings to {scenario id or None: {key: value}}."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"override {item!r} is not key=value")
        target, _, name = key.strip().rpartition(".")
        out.setdefault(target or None, {})[name] = parse_value(value.strip())
    return out


def load_config(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such config file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def scenarios_from_config(doc, overrides=None, where="config"):
    """Validated scenarios; raises ValidationError before any work is done."""
    unknown = sorted(set(doc) - {"run", "scenario"})
    if unknown:
        raise ValidationError(f"{where}: unknown top-level key(s) {', '.join(unknown)}")
    raw = doc.get("scenario", [])
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{where}: needs at least one [[scenario]] table")
    overrides = overrides or {}
    ids = [s.get("id") for s in raw]
    stray = sorted(set(overrides) - set(ids) - {None})
    if stray:
        raise ValidationError(f"override targets unknown scenario(s) {', '.join(stray)}")
    seen, out = set(), []
    for i, entry in enumerate(raw):
        sid = entry.get("id")
        label = f"{where}: scenario {sid or i + 1}"
        if not isinstance(sid, str) or not ID_PATTERN.match(sid):
            raise ValidationError(f"{label}: id must be a filename-safe string")
        if sid in seen:
            raise ValidationError(f"{label}: duplicate id")
        seen.add(sid)
        op = REGISTRY.get(entry.get("operation"))
        if op is None:
            raise ValidationError(f"{label}: unknown operation {entry.get('operation')!r}; "
                                  f"known: {', '.join(sorted(REGISTRY))}")
        params = {k: v for k, v in entry.items() if k not in RESERVED}
        params.update(overrides.get(None, {}))
        params.update(overrides.get(sid, {}))
        for key in RESERVED - {"id", "operation"}:
            if key in entry and key != op.source:
                raise ValidationError(f"{label}: {op.name} does not take a {key!r}")
        if op.source != "none" and op.source not in entry:
            raise ValidationError(f"{label}: {op.name} needs a {op.source!r}")
        out.append(Scenario(sid, op.name, entry.get(op.source), bind(op.params, params, label)))
    return out


def validate(scenarios, ctx):
    """Resolve every source and run the cheap per-operation precondition checks."""
    for sc in scenarios:
        op = REGISTRY[sc.operation]
        label = f"scenario {sc.id}"
        src = None
        if op.source != "none":
            try:
                src = RESOLVERS[op.source](sc.source, ctx)
            except ShrinkerLabError as exc:
                raise ValidationError(f"{label}: {exc}") from None
            except OSError as exc:
                raise ValidationError(f"{label}: {exc}") from None
        if op.validate is not None:
            try:
                op.validate(src, sc.params)
            except ValidationError as exc:
                raise ValidationError(f"{label}: {exc}") from None


def _plain(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, bool, np.bool_)):
        return value.item() if hasattr(value, "item") else value
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _json_safe(value):
    """NaN and infinities become strings so the JSON stays standard."""
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def execute(sc, ctx):
    """Run one scenario; never raises for library errors."""
    op = REGISTRY[sc.operation]
    result = {"id": sc.id, "operation": op.name, "group": op.group, "anchor": op.anchor,
              "params": _plain(sc.params)}
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            src = RESOLVERS[op.source](sc.source, ctx) if op.source != "none" else None
            outcome = op.run(src, sc.params, ctx)
        except ShrinkerLabError as exc:
            result.update(status="error", error=f"{type(exc).__name__}: {exc}", columns=[],
                          rows=[], checks=[], record={})
        else:
            checks = [_plain(asdict(c)) for c in outcome.checks]
            status = "pass" if all(c["passed"] for c in checks) else "fail"
            result.update(status=status, error=None, columns=list(outcome.columns),
                          rows=[_plain(list(r)) for r in outcome.rows], checks=checks,
                          record=_plain(outcome.record))
    result["notices"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    result["seconds"] = time.perf_counter() - start
    return result


def _execute_packed(args):
    return execute(*args)


def run_all(scenarios, ctx, jobs=1):
    if jobs <= 1 or len(scenarios) <= 1:
        return [execute(sc, ctx) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=min(jobs, len(scenarios))) as pool:
        return list(pool.map(_execute_packed, [(sc, ctx) for sc in scenarios]))


def _stamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _write_csv(path, header_lines, columns, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def write_reports(results, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _stamp()
    for res in results:
        header = [f"generated {stamp} by shrinkerlab {__version__}",
                  f"{res['operation']}: {res['anchor']}"]
        _write_csv(out / f"{res['id']}.csv", header, res["columns"], res["rows"])
        record = {k: v for k, v in res.items() if k not in ("rows", "seconds")}
        (out / f"{res['id']}.json").write_text(
            json.dumps(_json_safe(record), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8")
    summary_rows = []
    for res in results:
        detail = "; ".join(
            f"{c['name']}: {'ok' if c['passed'] else 'FAILED'} ({c['measured']!r} vs {c['limit']!r})"
            for c in res["checks"]) or (res["error"] or "no declared checks")
        summary_rows.append((res["id"], res["operation"], res["anchor"], res["status"],
                             len(res["checks"]), detail))
    _write_csv(out / "summary.csv", [f"generated {stamp} by shrinkerlab {__version__}"],
               ["id", "operation", "anchor", "status", "checks", "detail"], summary_rows)
    summary = {"generated": stamp, "version": __version__,
               "passed": sum(r["status"] == "pass" for r in results), "total": len(results),
               "scenarios": [{"id": r["id"], "status": r["status"], "seconds": r["seconds"],
                              "error": r["error"]} for r in results]}
    (out / "summary.json").write_text(json.dumps(_json_safe(summary), indent=2, sort_keys=True)
                                      + "\n", encoding="utf-8")


def context_for(run_table, base_dir, tol=None, seed=None, fixtures=None):
    unknown = sorted(set(run_table) - RUN_KEYS)
    if unknown:
        raise ValidationError(f"[run]: unknown key(s) {', '.join(unknown)}")
    ctx = Context(base_dir=str(base_dir), fixtures=fixtures)
    if "tol" in run_table:
        ctx = replace(ctx, tol=float(run_table["tol"]))
    if "seed" in run_table:
        ctx = replace(ctx, seed=int(run_table["seed"]))
    if tol is not None:
        ctx = replace(ctx, tol=tol)
    if seed is not None:
        ctx = replace(ctx, seed=seed)
    return ctx
