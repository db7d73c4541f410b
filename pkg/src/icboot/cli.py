"""Command line interface: dataset parsing, run configuration, and the
``icboot`` subcommands (fit / ci / bandwidth / simulate / figures / realdata).

File formats (UTF-8, comma-separated, ``.`` decimal point, LF endings):

- ``current-status``: header ``t,delta``; one examination per row.
- ``intervals``: header ``left,right``; ``right`` empty or ``inf`` means the
  event lies beyond the last examination.
- ``mixed-long``: header ``id,time,delta``; one examination per row, rows of
  a subject contiguous with strictly increasing times, ``delta = 1`` on the
  first examination at or after the event (at most one per subject; all
  zeros = event after the last time).

Run-config files are flat ``key = value`` text (``#`` comments allowed) with
keys among: scenario, n, t0, level, scheme, bandwidth, B, reps, seed,
output_dir.  Command line flags override file values.

Exit status: 0 success, 1 input error, 2 numerical failure.  All numeric CSV
output carries 17 significant digits; every run writes ``config.txt`` with
the fully resolved configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._data import DATASET_SHA256, DATASET_VERSION, load_breast_cancer
from .bootstrap import (
    DegenerateSourceError,
    FromNPMLE,
    FromSMLE,
    basic_ci,
    bmse_curve,
    bootstrap_roots,
    select_bandwidth,
)
from .estimators import (
    CensoringInterval,
    CurrentStatusSample,
    DegenerateDenominatorError,
    MixedCaseSubject,
    NonConvergenceError,
    npmle_current_status,
    npmle_interval_censored,
    reduce_to_interval,
)
from .limits import ChernoffConfig, empirical_quantile, simulate_chernoff
from .simulate import (
    Case2Design,
    CurrentStatusDesign,
    ExperimentConfig,
    Exponential,
    FoldedStandardNormal,
    MixedCaseDesign,
    Scenario,
    coverage_experiment,
    figure1_density_data,
    figure2_quantile_trajectory,
    true_mse_curve,
)

FORMATS = ("current-status", "intervals", "mixed-long")
_DEFAULT_GRID = tuple(i / 20.0 for i in range(1, 21))
_REALDATA_GRID = tuple(float(i) for i in range(1, 21))


class CliInputError(ValueError):
    """Bad command line, config file, or data file."""


class DatasetFormatError(CliInputError):
    """Malformed dataset file; the message carries the offending line."""


class ConfigError(CliInputError):
    """Malformed or unknown run-config content."""


def _g17(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------


def _rows(text: str, header: str) -> list[tuple[int, list[str]]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != header:
        raise DatasetFormatError(f"expected header {header!r} on line 1")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            continue
        out.append((i, [c.strip() for c in line.split(",")]))
    if not out:
        raise DatasetFormatError("no data rows")
    return out


def _field(cells: list[str], k: int, lineno: int, kind: str) -> str:
    if len(cells) <= k:
        raise DatasetFormatError(f"line {lineno}: missing {kind} column")
    return cells[k]


def _as_float(s: str, lineno: int, kind: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise DatasetFormatError(f"line {lineno}: bad {kind} value {s!r}") from None


def _as_delta(s: str, lineno: int) -> int:
    if s not in ("0", "1"):
        raise DatasetFormatError(f"line {lineno}: delta must be 0 or 1, got {s!r}")
    return int(s)


def parse_dataset(text: str, format: str):
    """Parse dataset file content into estimator input.

    Returns a :class:`CurrentStatusSample`, a list of
    :class:`CensoringInterval`, or a list of :class:`MixedCaseSubject`
    depending on ``format``; raises :class:`DatasetFormatError` with the
    offending line number otherwise.
    """
    if format == "current-status":
        ts, ds = [], []
        for lineno, cells in _rows(text, "t,delta"):
            if len(cells) != 2:
                raise DatasetFormatError(f"line {lineno}: expected 2 columns")
            ts.append(_as_float(cells[0], lineno, "t"))
            ds.append(_as_delta(cells[1], lineno))
        try:
            return CurrentStatusSample(ts, ds)
        except ValueError as e:
            raise DatasetFormatError(str(e)) from None
    if format == "intervals":
        out = []
        for lineno, cells in _rows(text, "left,right"):
            if len(cells) != 2:
                raise DatasetFormatError(f"line {lineno}: expected 2 columns")
            left = _as_float(cells[0], lineno, "left")
            rtxt = cells[1]
            right = math.inf if rtxt in ("", "inf") else _as_float(rtxt, lineno, "right")
            try:
                out.append(CensoringInterval(left, right))
            except ValueError as e:
                raise DatasetFormatError(f"line {lineno}: {e}") from None
        return out
    if format == "mixed-long":
        return _parse_mixed_long(text)
    raise CliInputError(f"unknown format {format!r} (choose from {', '.join(FORMATS)})")


def _parse_mixed_long(text: str) -> list[MixedCaseSubject]:
    groups: dict[str, list[tuple[int, float, int]]] = {}
    order: list[str] = []
    for lineno, cells in _rows(text, "id,time,delta"):
        if len(cells) != 3:
            raise DatasetFormatError(f"line {lineno}: expected 3 columns")
        sid = _field(cells, 0, lineno, "id")
        t = _as_float(cells[1], lineno, "time")
        d = _as_delta(cells[2], lineno)
        if sid not in groups:
            groups[sid] = []
            order.append(sid)
        groups[sid].append((lineno, t, d))
    subjects = []
    for sid in order:
        rows = groups[sid]
        times = [t for _, t, _ in rows]
        for (ln, t, _), prev in zip(rows[1:], times):
            if t <= prev:
                raise DatasetFormatError(
                    f"line {ln}: times of id {sid!r} must be strictly increasing"
                )
        flagged = [k for k, (_, _, d) in enumerate(rows) if d == 1]
        if len(flagged) > 1:
            ln = rows[flagged[1]][0]
            raise DatasetFormatError(f"line {ln}: id {sid!r} has multiple delta=1 rows")
        category = flagged[0] + 1 if flagged else len(rows) + 1
        try:
            subjects.append(MixedCaseSubject(tuple(times), category))
        except ValueError as e:
            raise DatasetFormatError(f"line {rows[0][0]}: id {sid!r}: {e}") from None
    return subjects


def serialize_dataset(data, format: str) -> str:
    """Canonical file content for ``data`` (inverse of :func:`parse_dataset`)."""
    if format == "current-status":
        lines = ["t,delta"]
        lines += [f"{_g17(t)},{int(d)}" for t, d in zip(data.times, data.delta)]
    elif format == "intervals":
        lines = ["left,right"]
        lines += [
            f"{_g17(iv.l)},{'inf' if math.isinf(iv.r) else _g17(iv.r)}" for iv in data
        ]
    elif format == "mixed-long":
        lines = ["id,time,delta"]
        for i, s in enumerate(data, start=1):
            for j, t in enumerate(s.times, start=1):
                lines.append(f"{i},{_g17(t)},{1 if j == s.category else 0}")
    else:
        raise CliInputError(f"unknown format {format!r}")
    return "\n".join(lines) + "\n"


def _load_dataset(path: str, format: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliInputError(f"cannot read {path}: {e}") from None
    return parse_dataset(text, format)


def _natural_cli_mode(format: str) -> str:
    return "current-status" if format == "current-status" else "mixed"


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

CONFIG_KEYS = (
    "scenario", "n", "t0", "level", "scheme", "bandwidth", "B", "reps", "seed",
    "output_dir",
)


def read_run_config(path: str) -> dict[str, str]:
    """Parse a flat ``key = value`` config file; unknown keys are rejected."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    out: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{i}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{i}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"{path}:{i}: duplicate key {key!r}")
        out[key] = value
    return out


def _resolve(flag, cfg: dict[str, str], key: str, cast, default):
    if flag is not None:
        return flag
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError:
            raise ConfigError(f"config key {key!r}: bad value {cfg[key]!r}") from None
    return default


def parse_scenario(spec: str) -> Scenario:
    """Scenario grammar ``<design>-<law>[:k=v,...]``.

    Designs: ``cs``, ``case2``, ``mixed``; laws: ``exp``, ``foldednormal``.
    Parameters: ``rate`` (exp), ``b`` (all designs), ``kmax`` (mixed), e.g.
    ``mixed-exp:kmax=4,b=3``.
    """
    head, _, tail = spec.partition(":")
    params: dict[str, float] = {}
    if tail:
        for item in tail.split(","):
            k, eq, v = item.partition("=")
            if not eq:
                raise CliInputError(f"bad scenario parameter {item!r} in {spec!r}")
            try:
                params[k.strip()] = float(v)
            except ValueError:
                raise CliInputError(f"bad scenario parameter {item!r} in {spec!r}") from None
    design_name, sep, law_name = head.partition("-")
    if not sep:
        raise CliInputError(f"scenario {spec!r} is not of the form <design>-<law>")
    if law_name == "exp":
        event = Exponential(rate=params.pop("rate", 1.0))
    elif law_name == "foldednormal":
        event = FoldedStandardNormal()
    else:
        raise CliInputError(f"unknown event law {law_name!r} in scenario {spec!r}")
    b = params.pop("b", 2.0)
    if design_name == "cs":
        design = CurrentStatusDesign(b=b)
    elif design_name == "case2":
        design = Case2Design(b=b)
    elif design_name == "mixed":
        design = MixedCaseDesign(b=b, kmax=int(params.pop("kmax", 3)))
    else:
        raise CliInputError(f"unknown design {design_name!r} in scenario {spec!r}")
    if params:
        raise CliInputError(f"scenario {spec!r}: unused parameters {sorted(params)}")
    return Scenario(event=event, design=design)


def _scheme_from(name: str, bandwidth: float | None, n: int):
    if name == "npmle":
        return FromNPMLE()
    if name == "smle":
        h = bandwidth if bandwidth is not None else n ** -0.2
        return FromSMLE(bandwidth=h)
    raise CliInputError(f"unknown scheme {name!r} (choose npmle or smle)")


def _float_list(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise CliInputError(f"bad {what} list {text!r}") from None


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def _outdir(path: str) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(outdir: Path, name: str, lines: Sequence[str]) -> Path:
    p = outdir / name
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return p


def _write_sidecar(outdir: Path, command: str, resolved: dict) -> Path:
    lines = [f"command = {command}"]
    lines += [f"{k} = {resolved[k]}" for k in sorted(resolved)]
    return _write(outdir, "config.txt", lines)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_fit(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    data = _load_dataset(ns.input, ns.format)
    if ns.format == "current-status":
        dist = npmle_current_status(data)
    elif ns.format == "intervals":
        dist = npmle_interval_censored(data)
    else:
        dist = npmle_interval_censored([reduce_to_interval(s) for s in data])
    rows = ["s,cumulative"]
    rows += [f"{_g17(s)},{_g17(c)}" for s, c in zip(dist.support, dist.cumulative)]
    _write(outdir, "npmle.csv", rows)
    _write_sidecar(outdir, "fit", {
        "input": ns.input, "format": ns.format, "output_dir": str(outdir),
        "version": __version__,
    })
    print(outdir / "npmle.csv")
    return 0


def _ci_pieces(data, mode, t0, scheme_name, bandwidth, grid, level, B, seed):
    """Shared by `ci` and `realdata`: returns (estimate, lo, hi, resolved_h)."""
    n = len(data)
    if bandwidth == "auto":
        if scheme_name != "smle":
            raise CliInputError("--bandwidth auto requires --scheme smle")
        pilot = n ** -0.2
        curve = bmse_curve(data, t0, FromSMLE(pilot), grid, B, seed)
        h: float | None = select_bandwidth(curve)
    else:
        h = bandwidth
    scheme = _scheme_from(scheme_name, h, n)
    res = bootstrap_roots(data, t0, scheme, B, seed, mode=mode)
    lo, hi = basic_ci(res, level)
    resolved_h = scheme.bandwidth if isinstance(scheme, FromSMLE) else None
    return res.estimate, lo, hi, resolved_h


def _cmd_ci(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    data = _load_dataset(ns.input, ns.format)
    t0 = _resolve(ns.at, cfg, "t0", float, None)
    if t0 is None:
        raise CliInputError("ci needs --at (or t0 in the config)")
    level = _resolve(ns.level, cfg, "level", float, 0.9)
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "npmle")
    bandwidth = _resolve(ns.bandwidth, cfg, "bandwidth", str, None)
    if bandwidth not in (None, "auto"):
        bandwidth = float(bandwidth)
    B = _resolve(ns.boot, cfg, "B", int, 500)
    seed = _resolve(ns.seed, cfg, "seed", int, 0)
    mode = ns.mode or _natural_cli_mode(ns.format)
    grid = _float_list(ns.grid, "grid") if ns.grid else list(_DEFAULT_GRID)

    est, lo, hi, resolved_h = _ci_pieces(
        data, mode, t0, scheme_name, bandwidth, grid, level, B, seed
    )
    _write(outdir, "ci.csv", [
        "t0,estimate,lower,upper",
        f"{_g17(t0)},{_g17(est)},{_g17(lo)},{_g17(hi)}",
    ])
    resolved = {
        "input": ns.input, "format": ns.format, "t0": t0, "level": level,
        "scheme": scheme_name, "B": B, "seed": seed, "mode": mode,
        "output_dir": str(outdir), "version": __version__,
    }
    if resolved_h is not None:
        resolved["bandwidth"] = resolved_h
        if bandwidth == "auto":
            resolved["bandwidth_selection"] = "auto"
    _write_sidecar(outdir, "ci", resolved)
    print(f"F({t0:g}) = {est:.2f}, {level:.0%} CI [{lo:.2f}, {hi:.2f}]")
    return 0


def _cmd_bandwidth(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    data = _load_dataset(ns.input, ns.format)
    t0 = _resolve(ns.at, cfg, "t0", float, None)
    if t0 is None:
        raise CliInputError("bandwidth needs --at (or t0 in the config)")
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "smle")
    B = _resolve(ns.boot, cfg, "B", int, 500)
    seed = _resolve(ns.seed, cfg, "seed", int, 0)
    n = len(data)
    pilot = ns.pilot if ns.pilot is not None else n ** -0.2
    grid = _float_list(ns.grid, "grid") if ns.grid else list(_DEFAULT_GRID)

    source = _scheme_from(scheme_name, pilot, n)
    curve = bmse_curve(data, t0, source, grid, B, seed)
    selected = select_bandwidth(curve)
    _write(outdir, "bmse.csv", ["h,bmse"] + [f"{_g17(h)},{_g17(v)}" for h, v in curve])
    _write(outdir, "selected.csv", ["h", _g17(selected)])
    resolved = {
        "input": ns.input, "format": ns.format, "t0": t0, "scheme": scheme_name,
        "B": B, "seed": seed, "grid": ",".join(_g17(h) for h, _ in curve),
        "output_dir": str(outdir), "version": __version__,
    }
    if scheme_name == "smle":
        resolved["pilot"] = pilot
    _write_sidecar(outdir, "bandwidth", resolved)
    print(f"selected h = {selected:g}")
    return 0


def _cmd_simulate_coverage(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    scenario = parse_scenario(_resolve(ns.scenario, cfg, "scenario", str, "cs-exp"))
    n = _resolve(ns.n, cfg, "n", int, 100)
    t0 = _resolve(ns.at, cfg, "t0", float, 1.0)
    level = _resolve(ns.level, cfg, "level", float, 0.9)
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "npmle")
    bandwidth = _resolve(ns.bandwidth, cfg, "bandwidth", float, None)
    B = _resolve(ns.boot, cfg, "B", int, 500)
    reps = _resolve(ns.reps, cfg, "reps", int, 500)
    seed = _resolve(ns.seed, cfg, "seed", int, 0)

    scheme = _scheme_from(scheme_name, bandwidth, n)
    report = coverage_experiment(ExperimentConfig(
        scenario=scenario, n=n, t0=t0, level=level, scheme=scheme,
        B=B, reps=reps, seed=seed,
    ))
    _write(outdir, "coverage.csv", [
        "coverage,mean_length,reps,failures,level,truth,n,t0",
        ",".join([
            _g17(report.coverage), _g17(report.mean_length), str(report.reps),
            str(report.failures), _g17(report.level), _g17(report.truth),
            str(report.n), _g17(report.t0),
        ]),
    ])
    resolved = {
        "scenario": ns.scenario or cfg.get("scenario", "cs-exp"), "n": n, "t0": t0,
        "level": level, "scheme": scheme_name, "B": B, "reps": reps, "seed": seed,
        "output_dir": str(outdir), "version": __version__,
    }
    if isinstance(scheme, FromSMLE):
        resolved["bandwidth"] = scheme.bandwidth
    _write_sidecar(outdir, "simulate coverage", resolved)
    print(f"coverage {report.coverage:.2f}, mean length {report.mean_length:.2f} "
          f"({report.failures} failures / {report.reps} replications)")
    return 0


def _cmd_simulate_chernoff(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    seed = _resolve(ns.seed, cfg, "seed", int, 0)
    config = ChernoffConfig(
        half_width=ns.half_width, step=ns.step, replicates=ns.replicates, seed=seed,
    )
    draws = simulate_chernoff(config)
    ps = [round(0.05 * k, 2) for k in range(1, 20)]
    rows = ["p,q"] + [f"{p:.2f},{_g17(empirical_quantile(draws, p))}" for p in ps]
    _write(outdir, "quantiles.csv", rows)
    _write_sidecar(outdir, "simulate chernoff", {
        "replicates": ns.replicates, "half_width": ns.half_width, "step": ns.step,
        "seed": seed, "output_dir": str(outdir), "version": __version__,
    })
    print(outdir / "quantiles.csv")
    return 0


def _figure_common(ns, cfg):
    scenario_spec = _resolve(ns.scenario, cfg, "scenario", str, "cs-exp")
    return (
        parse_scenario(scenario_spec), scenario_spec,
        _resolve(ns.at, cfg, "t0", float, 1.0),
        _resolve(ns.seed, cfg, "seed", int, 0),
    )


def _cmd_fig1(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    scenario, spec, t0, seed = _figure_common(ns, cfg)
    n = _resolve(ns.n, cfg, "n", int, 500)
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "smle")
    bandwidth = _resolve(ns.bandwidth, cfg, "bandwidth", float, 0.3 if scheme_name == "smle" else None)
    B = _resolve(ns.boot, cfg, "B", int, 10_000)
    reps = _resolve(ns.reps, cfg, "reps", int, 10_000)
    scheme = _scheme_from(scheme_name, bandwidth, n)
    mc, boot = figure1_density_data(ExperimentConfig(
        scenario=scenario, n=n, t0=t0, scheme=scheme, B=B, reps=reps, seed=seed,
    ))
    rows = ["series,value"]
    rows += [f"monte-carlo,{_g17(v)}" for v in mc]
    rows += [f"bootstrap,{_g17(v)}" for v in boot]
    _write(outdir, "fig1.csv", rows)
    resolved = {
        "scenario": spec, "n": n, "t0": t0, "scheme": scheme_name, "B": B,
        "reps": reps, "seed": seed, "output_dir": str(outdir), "version": __version__,
    }
    if isinstance(scheme, FromSMLE):
        resolved["bandwidth"] = scheme.bandwidth
    _write_sidecar(outdir, "figures fig1", resolved)
    print(outdir / "fig1.csv")
    return 0


def _cmd_fig2(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    scenario, spec, t0, seed = _figure_common(ns, cfg)
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "smle")
    bandwidth = _resolve(ns.bandwidth, cfg, "bandwidth", float, 0.3 if scheme_name == "smle" else None)
    B = _resolve(ns.boot, cfg, "B", int, 500)
    n_grid = [int(x) for x in _float_list(ns.n_grid, "n-grid")] if ns.n_grid \
        else list(range(500, 5001, 500))
    scheme = _scheme_from(scheme_name, bandwidth, n_grid[-1])
    traj = figure2_quantile_trajectory(scenario, t0, scheme, n_grid, B, seed)
    rows = ["n,q95,reference"]
    rows += [f"{n},{_g17(q)},{_g17(traj.reference)}" for n, q in traj]
    _write(outdir, "fig2.csv", rows)
    resolved = {
        "scenario": spec, "t0": t0, "scheme": scheme_name, "B": B, "seed": seed,
        "n_grid": ",".join(str(n) for n in n_grid), "output_dir": str(outdir),
        "version": __version__,
    }
    if isinstance(scheme, FromSMLE):
        resolved["bandwidth"] = scheme.bandwidth
    _write_sidecar(outdir, "figures fig2", resolved)
    print(outdir / "fig2.csv")
    return 0


def _cmd_fig3(ns: argparse.Namespace) -> int:
    from .bootstrap import child_seed, stream
    from .simulate import _NS_DATASET, sample_scenario

    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    scenario, spec, t0, seed = _figure_common(ns, cfg)
    n = _resolve(ns.n, cfg, "n", int, 1000)
    B = _resolve(ns.boot, cfg, "B", int, 500)
    reps = _resolve(ns.reps, cfg, "reps", int, 500)
    grid = _float_list(ns.grid, "grid") if ns.grid else list(_DEFAULT_GRID)
    pilots = _float_list(ns.pilots, "pilots") if ns.pilots else [0.3, 0.4, 0.5, 0.6, 0.7]

    rows = ["source,h,value"]
    for h, v in true_mse_curve(scenario, n, t0, grid, reps, seed):
        rows.append(f"true-mse,{_g17(h)},{_g17(v)}")
    data = sample_scenario(scenario, n, stream(seed, _NS_DATASET, 0))
    bseed = child_seed(seed, _NS_DATASET, 0)
    for h, v in bmse_curve(data, t0, FromNPMLE(), grid, B, bseed):
        rows.append(f"npmle,{_g17(h)},{_g17(v)}")
    for pilot in pilots:
        for h, v in bmse_curve(data, t0, FromSMLE(pilot), grid, B, bseed):
            rows.append(f"smle-{pilot:g},{_g17(h)},{_g17(v)}")
    _write(outdir, "fig3.csv", rows)
    _write_sidecar(outdir, "figures fig3", {
        "scenario": spec, "n": n, "t0": t0, "B": B, "reps": reps, "seed": seed,
        "grid": ",".join(_g17(h) for h in grid),
        "pilots": ",".join(_g17(p) for p in pilots),
        "output_dir": str(outdir), "version": __version__,
    })
    print(outdir / "fig3.csv")
    return 0


def _cmd_realdata(ns: argparse.Namespace) -> int:
    cfg = read_run_config(ns.config) if ns.config else {}
    outdir = _outdir(_resolve(ns.output, cfg, "output_dir", str, "."))
    ats = ns.at if ns.at else [20.0, 30.0]
    levels = ns.level if ns.level else [0.9, 0.95]
    bandwidth = _resolve(ns.bandwidth, cfg, "bandwidth", float, 10.0)
    B = _resolve(ns.boot, cfg, "B", int, 500)
    seed = _resolve(ns.seed, cfg, "seed", int, 0)
    scheme_name = _resolve(ns.scheme, cfg, "scheme", str, "both")
    methods = ("smle", "npmle") if scheme_name == "both" else (scheme_name,)

    rad, chemo = load_breast_cancer()
    rows = ["group,method,t0,estimate,level,lower,upper"]
    display = []
    for gname, gdata in (("T=1", chemo), ("T=0", rad)):
        for method in methods:
            scheme = _scheme_from(method, bandwidth, len(gdata))
            for t0 in ats:
                res = bootstrap_roots(gdata, t0, scheme, B, seed, mode="mixed")
                for level in levels:
                    lo, hi = basic_ci(res, level)
                    rows.append(
                        f"{gname},{method},{_g17(t0)},{_g17(res.estimate)},"
                        f"{_g17(level)},{_g17(lo)},{_g17(hi)}"
                    )
                    display.append((gname, method, t0, res.estimate, level, lo, hi))
    _write(outdir, "realdata.csv", rows)
    _write_sidecar(outdir, "realdata", {
        "t0": ",".join(_g17(t) for t in ats),
        "level": ",".join(_g17(v) for v in levels),
        "scheme": scheme_name, "bandwidth": bandwidth, "B": B, "seed": seed,
        "dataset_version": DATASET_VERSION, "dataset_sha256": DATASET_SHA256,
        "output_dir": str(outdir), "version": __version__,
    })
    for gname, method, t0, est, level, lo, hi in display:
        print(f"{gname} {method:5s} t={t0:g}: F={est:.2f} "
              f"{level:.0%} CI [{lo:.2f}, {hi:.2f}]")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports input errors as exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliInputError(f"{self.prog}: {message}")


def _add_io(p, with_data=True):
    if with_data:
        p.add_argument("--input", required=True, help="dataset file")
        p.add_argument("--format", required=True, choices=FORMATS)
    p.add_argument("--output", "-o", default=None, help="output directory (default .)")
    p.add_argument("--config", default=None, help="run-config file (key = value)")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icboot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"icboot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="NPMLE step function of a dataset")
    _add_io(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("ci", help="bootstrap confidence interval at t0")
    _add_io(p)
    p.add_argument("--at", type=float, default=None, help="evaluation time t0")
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--scheme", choices=("npmle", "smle"), default=None)
    p.add_argument("--bandwidth", default=None,
                   help="SMLE bandwidth, or 'auto' (default n^-1/5)")
    p.add_argument("--boot", type=int, default=None, help="bootstrap replicates")
    p.add_argument("--grid", default=None, help="comma list of bandwidths for auto")
    p.add_argument("--mode", choices=("current-status", "mixed", "case2"), default=None)
    p.set_defaults(handler=_cmd_ci)

    p = sub.add_parser("bandwidth", help="bootstrap-MSE bandwidth selection")
    _add_io(p)
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--scheme", choices=("npmle", "smle"), default=None,
                   help="resampling source (default smle)")
    p.add_argument("--pilot", type=float, default=None,
                   help="pilot bandwidth of an smle source (default n^-1/5)")
    p.add_argument("--grid", default=None, help="comma list of candidate bandwidths")
    p.add_argument("--boot", type=int, default=None)
    p.set_defaults(handler=_cmd_bandwidth)

    sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    simsub = sim.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    p = simsub.add_parser("coverage", help="CI coverage over fresh datasets")
    _add_io(p, with_data=False)
    p.add_argument("--scenario", default=None,
                   help="e.g. cs-exp, cs-foldednormal, case2-exp, mixed-exp:kmax=3,b=2")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--scheme", choices=("npmle", "smle"), default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--boot", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.set_defaults(handler=_cmd_simulate_coverage)

    p = simsub.add_parser("chernoff", help="argmin limit-law quantiles")
    _add_io(p, with_data=False)
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--half-width", type=float, default=4.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(handler=_cmd_simulate_chernoff)

    figs = sub.add_parser("figures", help="plot-ready CSV data")
    figsub = figs.add_subparsers(dest="figure", required=True, parser_class=_Parser)

    p = figsub.add_parser("fig1", help="Monte Carlo vs bootstrap root samples")
    _add_io(p, with_data=False)
    p.add_argument("--scenario", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--scheme", choices=("npmle", "smle"), default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--boot", type=int, default=None)
    p.add_argument("--reps", type=int, default=None)
    p.set_defaults(handler=_cmd_fig1)

    p = figsub.add_parser("fig2", help="bootstrap q95 along growing samples")
    _add_io(p, with_data=False)
    p.add_argument("--scenario", default=None)
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--scheme", choices=("npmle", "smle"), default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--boot", type=int, default=None)
    p.add_argument("--n-grid", default=None, help="comma list of sample sizes")
    p.set_defaults(handler=_cmd_fig2)

    p = figsub.add_parser("fig3", help="true MSE vs bootstrap MSE curves")
    _add_io(p, with_data=False)
    p.add_argument("--scenario", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--at", type=float, default=None)
    p.add_argument("--grid", default=None, help="comma list of bandwidths")
    p.add_argument("--pilots", default=None, help="comma list of source bandwidths")
    p.add_argument("--boot", type=int, default=None)
    p.add_argument("--reps", type=int, default=None, help="true-MSE samples")
    p.set_defaults(handler=_cmd_fig3)

    p = sub.add_parser("realdata", help="breast-retraction study table")
    _add_io(p, with_data=False)
    p.add_argument("--at", type=float, action="append", default=None)
    p.add_argument("--level", type=float, action="append", default=None)
    p.add_argument("--scheme", choices=("npmle", "smle", "both"), default=None)
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--boot", type=int, default=None)
    p.set_defaults(handler=_cmd_realdata)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.handler(ns)
    except CliInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (NonConvergenceError, DegenerateSourceError, DegenerateDenominatorError,
            RuntimeError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
