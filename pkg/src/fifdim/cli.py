"""Command-line driver: ``fifdim <command> --config FILE [options]``.

Every command writes its artifacts into ``--out`` and prints a short JSON
summary on stdout.  Library errors become a JSON object on stderr and a
nonzero exit status equal to the error's ``code``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .core import FifGrid, evaluate_grid, normalize, validate
from .dimension import (DimensionReport, VerdictOptions, box_count, boxcount_csv,
                        default_grid_level, dimension_verdict, empirical_dimension,
                        oscillation_profile)
from .errors import DegenerateFit, FifError, Inconclusive, MalformedInput
from .spectral import (RhoBracket, build_extrema_table, dense_csv, entries_csv, fmt,
                       lower_matrix, rho_bracket, upper_matrix)

COMMANDS = ("validate", "sample", "matrices", "rho", "dim", "boxcount", "report")
DENSE_MAX_LEVEL = 3


def thread_cap() -> int:
    """Worker cap from ``FIFDIM_THREADS``.

    The library is single-threaded and vectorized, so the cap is always met;
    the value is validated and recorded in the artifacts.
    """
    raw = os.environ.get("FIFDIM_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise MalformedInput(f"FIFDIM_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise MalformedInput(f"FIFDIM_THREADS must be a positive integer, got {raw!r}")
    return value


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Run:
    """Lazily computed pipeline stages shared between commands."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._report = None
        self._system = None
        self._grid = None
        self._sample = None
        self._history = None
        self._dim = None

    @property
    def report(self):
        if self._report is None:
            self._report = validate(self.cfg.problem)
        return self._report

    @property
    def system(self):
        if self._system is None:
            self._system = normalize(self.cfg.problem, self.report)
        return self._system

    @property
    def grid_level(self) -> int:
        return self.cfg.grid_level or default_grid_level(self.system.n)

    @property
    def grid(self) -> FifGrid:
        if self._grid is None:
            self._grid = evaluate_grid(self.system, self.grid_level, self.cfg.tol_grid)
        return self._grid

    @property
    def sample_grid(self) -> FifGrid:
        if self._sample is None:
            if self._grid is not None and self._grid.level == self.cfg.sample_level:
                self._sample = self._grid
            else:
                self._sample = evaluate_grid(self.system, self.cfg.sample_level,
                                             self.cfg.tol_grid)
        return self._sample

    @property
    def history(self) -> list[RhoBracket]:
        if self._history is None:
            hist = []
            for k in range(1, self.cfg.k_max + 1):
                b = rho_bracket(self.system, k, self.cfg.tol_spectral)
                hist.append(b)
                if b.width <= self.cfg.bracket_width:
                    break
            self._history = hist
        return self._history

    @property
    def dimension(self) -> DimensionReport:
        if self._dim is None:
            c = self.cfg
            opts = VerdictOptions(k_max=c.k_max, tol_spectral=c.tol_spectral,
                                  bracket_width=c.bracket_width, grid_level=self.grid_level,
                                  grid_tol=c.tol_grid, slope_window=c.slope_window,
                                  margin=c.margin)
            self._dim = dimension_verdict(self.system, opts, grid=self.grid)
        return self._dim


# ----------------------------------------------------------------------
# per-command artifact builders: each returns (json_payload, {name: text})
# ----------------------------------------------------------------------

def do_validate(run: Run):
    d = run.report.to_dict()
    return d, {}


def _sample_columns(run: Run):
    g = run.sample_grid
    knots, values = run.cfg.problem.knots, run.cfg.problem.values
    x0, xn = float(knots[0]), float(knots[-1])
    y0, yn = float(values[0]), float(values[-1])
    t = g.x
    x = x0 + (xn - x0) * t
    f = g.values + (y0 + (yn - y0) * t)
    return x, f, g.error_bound


def do_sample(run: Run):
    x, f, err = _sample_columns(run)
    payload = {"level": run.cfg.sample_level, "error_bound": err,
               "x": x.tolist(), "f": f.tolist()}
    text = _csv(["x", "f", "error_bound"], ([fmt(a), fmt(b), fmt(err)] for a, b in zip(x, f)))
    return payload, {"sample.csv": text}


def _history_csv(history) -> str:
    rows = []
    for b in history:
        rows.append([b.level, "" if b.lower is None else fmt(b.lower), fmt(b.upper),
                     "" if b.lower is None else fmt(b.width),
                     "" if b.width_bound is None else fmt(b.width_bound)])
    return _csv(["k", "rho_lower", "rho_upper", "width", "width_bound"], rows)


def do_matrices(run: Run):
    mats, tables, files = [], [], {}
    for k in range(1, run.cfg.k_max + 1):
        t = build_extrema_table(run.system, k)
        up, lo = upper_matrix(t), lower_matrix(t)
        mats += [up, lo]
        tables.append({"level": k, "upper": t.upper.tolist(), "lower": t.lower.tolist(),
                       "certified_gap": t.certified_gap, "max_gap": t.max_gap})
        if k <= DENSE_MAX_LEVEL:
            files[f"dense_upper_k{k}.csv"] = dense_csv(up)
            files[f"dense_lower_k{k}.csv"] = dense_csv(lo)
    files["entries.csv"] = entries_csv(mats)
    files["rho_history.csv"] = _history_csv(run.history)
    payload = {"tables": tables, "rho_history": [b.to_dict() for b in run.history]}
    return payload, files


def do_rho(run: Run):
    hist = run.history
    final = hist[-1]
    payload = {"rho_S": final.midpoint, "bracket": final.to_dict(),
               "converged": final.width <= run.cfg.bracket_width,
               "target_width": run.cfg.bracket_width,
               "history": [b.to_dict() for b in hist]}
    return payload, {"rho_history.csv": _history_csv(hist)}


def do_dim(run: Run):
    rep = run.dimension
    files = {"boxcount.csv": boxcount_csv(rep.oscillation, rep.box_counts),
             "rho_history.csv": _history_csv(rep.rho_history)}
    return rep.to_dict(), files


def _boxcount_rows(profiles, counts):
    text = boxcount_csv(profiles, counts)
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        out.append({k: (None if v == "" else (int(v) if k.startswith("count") or k == "k"
                                              else float(v))) for k, v in r.items()})
    return text, out


def do_boxcount(run: Run):
    g, c = run.grid, run.cfg
    top = g.level - c.margin
    lo, hi = c.slope_window or (3, top)
    hi = min(hi, top)
    levels = range(1, top + 1)
    profiles = [oscillation_profile(g, k) for k in levels]
    counts = [box_count(g, k, c.margin) for k in levels]
    text, rows = _boxcount_rows(profiles, counts)
    try:
        fit = empirical_dimension(counts, (lo, hi)).to_dict()
    except DegenerateFit as exc:
        fit = {"error": str(exc)}
    payload = {"grid_level": g.level, "error_bound": g.error_bound,
               "cell_bound": g.cell_bound, "rows": rows, "fit": fit}
    return payload, {"boxcount.csv": text}


def _summary(run: Run, dim: dict) -> str:
    lines = [f"fifdim {__version__} summary: {run.cfg.name}", ""]
    rep = run.report
    lines.append(f"N = {rep.n}; conditions: " +
                 ", ".join(f"{k}={'yes' if v else 'no'}"
                           for k, v in rep.to_dict()["conditions"].items()))
    lines += ["", "  k   rho(M_k)   rho(M'_k)    width"]
    for b in run.history:
        lo = "      -" if b.lower is None else f"{b.lower:9.4f}"
        wd = "      -" if b.lower is None else f"{b.width:9.2e}"
        lines.append(f"{b.level:3d} {b.upper:9.4f} {lo}  {wd}")
    lines.append("")
    lines.append(f"verdict: {dim['verdict']}" +
                 (f" ({dim['branch']})" if dim["branch"] else ""))
    if dim["dimension"] is not None:
        lo, hi = dim["dimension_bounds"]
        lines.append(f"box dimension: {dim['dimension']:.4f}  in [{lo:.4f}, {hi:.4f}]")
    lines.append(f"reason: {dim['reason']}")
    emp = dim["empirical"]
    if emp is not None:
        lines.append(f"empirical slope over k = {emp['levels'][0]}..{emp['levels'][-1]}: "
                     f"{emp['slope']:.4f}")
    lines += ["", "  k      O_k    count"]
    counts = {c["k"]: c["count"] for c in dim["diagnostics"]["box_counts"]}
    for o in dim["diagnostics"]["oscillation"]:
        cnt = counts.get(o["k"])
        lines.append(f"{o['k']:3d} {o['O_k']:9.4f} " + ("" if cnt is None else f"{cnt:8d}"))
    return "\n".join(lines) + "\n"


def do_report(run: Run):
    parts, files = {}, {}
    for name, fn in (("validate", do_validate), ("sample", do_sample),
                     ("matrices", do_matrices), ("rho", do_rho), ("dim", do_dim),
                     ("boxcount", do_boxcount)):
        payload, f = fn(run)
        parts[name] = payload
        files.update(f)
    files["summary.txt"] = _summary(run, parts["dim"])
    return parts, files


HANDLERS = {"validate": do_validate, "sample": do_sample, "matrices": do_matrices,
            "rho": do_rho, "dim": do_dim, "boxcount": do_boxcount, "report": do_report}
JSON_NAMES = {"validate": "validation.json", "dim": "dimension_report.json",
              "report": "report.json"}
ALWAYS_JSON = ("validate", "dim", "report")


def run(cfg: RunConfig, command: str, out_dir: str | Path, fmt_: str = "both",
        strict: bool = False) -> tuple[int, dict]:
    """Execute ``command`` and write its artifacts; returns (exit status, stdout summary)."""
    if command not in HANDLERS:
        raise MalformedInput(f"unknown command {command!r}")
    threads = thread_cap()
    r = Run(cfg)
    payload, files = HANDLERS[command](r)
    doc = {"fifdim_version": __version__, "command": command, "config": cfg.name,
           "threads": threads, "result": payload}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt_ in ("json", "both") or command in ALWAYS_JSON:
        name = JSON_NAMES.get(command, f"{command}.json")
        (out / name).write_text(_json(doc), newline="\n")
        written.append(name)
    for name, text in sorted(files.items()):
        if name.endswith(".csv") and fmt_ == "json":
            continue
        (out / name).write_text(text, newline="\n")
        written.append(name)
    summary = {"command": command, "out": str(out), "artifacts": written}
    verdict = None
    if command in ("dim", "report"):
        d = payload if command == "dim" else payload["dim"]
        verdict = d["verdict"]
        summary.update(verdict=verdict, dimension=d["dimension"])
    elif command == "rho":
        summary.update(rho_S=payload["rho_S"], converged=payload["converged"])
    elif command == "validate":
        summary.update(conditions=payload["conditions"])
    if strict and verdict == "inconclusive":
        raise Inconclusive("no certified dimension verdict (strict mode)")
    return 0, summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fifdim",
        description="Box dimension of generalized affine fractal interpolation functions.")
    p.add_argument("--version", action="version", version=f"fifdim {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True,
                   help="JSON config path, or a bundled name: example5_1, collinear, constant_s")
    p.add_argument("--out", help="output directory (default: config output.dir)")
    p.add_argument("--k-max", type=int, help="largest matrix level")
    p.add_argument("--grid-level", type=int, help="level of the dimension grid")
    p.add_argument("--tol-spectral", type=float, help="power-iteration tolerance")
    p.add_argument("--bracket-width", type=float, help="target width of the rho bracket")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero when the dimension verdict is inconclusive")
    p.add_argument("--format", choices=("json", "csv", "both"), help="artifact formats")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(
            k_max=args.k_max, grid_level=args.grid_level, tol_spectral=args.tol_spectral,
            bracket_width=args.bracket_width, format=args.format)
        status, summary = run(cfg, args.command, args.out or cfg.out_dir, cfg.format,
                              args.strict)
    except FifError as exc:
        err = {"error": exc.kind, "code": exc.code, "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return exc.code
    sys.stdout.write(json.dumps(summary) + "\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
