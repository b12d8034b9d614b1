"""Command-line front end.

Subcommands cover the exponent calculator, a phase-diagram sweep, graph
sampling, the cover-expansion and backbone checks, mark-ceiling slope
counts, and the Monte Carlo experiment campaigns.  Every value can come
from a JSON config file (--config); explicit flags override file values,
file values override built-in defaults.  The fully resolved configuration
is echoed into the output directory as `config.resolved`, and no
subcommand writes outside its --out-dir.

Exit status: 0 on success, 2 for invalid configuration or arguments,
1 for a failure while running.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import experiments
from .backbone import backbone_constants, construct_backbone
from .cover import check_certificates, cover
from .exponents import exponent_report
from .model import ModelParams
from .profile import profile_count_slopes
from .sampler import sample_graph

__all__ = ["main", "run"]


class ConfigError(Exception):
    """Raised while resolving configuration; maps to exit status 2."""


_MODEL_KEYS = ("d", "tau", "alpha", "sigma", "beta", "p", "kernel", "profile", "vertex_set")


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{round(v, 12):.12g}"
    return str(v)


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("model")
    g.add_argument("--d", type=int, help="spatial dimension")
    g.add_argument("--tau", type=float, help="mark tail exponent (inf for unit marks)")
    g.add_argument("--alpha", type=float, help="long-range decay exponent (inf for threshold)")
    g.add_argument("--sigma", type=float, help="kernel mark-interpolation exponent")
    g.add_argument("--beta", type=float, help="edge-density parameter")
    g.add_argument("--p", type=float, help="edge retention probability")
    g.add_argument("--kernel", choices=("interpolation", "sum"), help="kernel family")
    g.add_argument("--profile", choices=("polynomial", "threshold"), help="connection profile")
    g.add_argument("--vertex-set", dest="vertex_set", choices=("poisson", "lattice"),
                   help="vertex process")


_MODEL_DEFAULTS = {
    "d": 1, "tau": 2.2, "alpha": 3.0, "sigma": 1.0, "beta": 1.0, "p": 1.0,
    "kernel": "interpolation", "profile": "polynomial", "vertex_set": "poisson",
}


def _resolve(ns: argparse.Namespace, defaults: dict) -> dict:
    """Merge flags over config-file values over defaults."""
    file_cfg = {}
    cfg_path = getattr(ns, "config", None)
    if cfg_path is not None:
        path = Path(cfg_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    merged = {}
    for key, default in defaults.items():
        flag = getattr(ns, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_cfg:
            merged[key] = file_cfg[key]
        else:
            merged[key] = default
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return merged


def _model_from(merged: dict) -> ModelParams:
    kwargs = {k: merged[k] for k in _MODEL_KEYS if k in merged}
    try:
        return ModelParams(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}")


def _parse_grid(text, name: str) -> list:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(tok) for tok in str(text).split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"{name} must be a comma-separated list of numbers")
    if not vals:
        raise ConfigError(f"{name} must be nonempty")
    return vals


def _out_dir(merged: dict) -> Path:
    if not merged.get("out_dir"):
        raise ConfigError("--out-dir is required")
    out = Path(merged["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out: Path, command: str, merged: dict) -> None:
    payload = {"command": command}
    payload.update(merged)
    (out / "config.resolved").write_text(json.dumps(payload, indent=2, default=str) + "\n")


def _write_svg(path: Path, xs, ys, fit, x_label: str, y_label: str) -> None:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    # Fixed hash salt and stripped date keep the bytes reproducible.
    plt.rcParams["svg.hashsalt"] = "ksrg"
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.scatter(xs[keep], ys[keep], s=18, color="tab:blue")
    if fit is not None and keep.any():
        span = np.array([xs[keep].min(), xs[keep].max()])
        ax.plot(span, fit.slope * span + fit.intercept, color="tab:red",
                label=f"slope {fit.slope:.3f}, R2 {fit.r_squared:.3f}")
        ax.legend(fontsize=8)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --- subcommand handlers ----------------------------------------------

def _cmd_exponents(ns: argparse.Namespace) -> int:
    merged = _resolve(ns, dict(_MODEL_DEFAULTS))
    params = _model_from(merged)
    rep = exponent_report(params)
    for f in dataclass_fields(rep):
        value = getattr(rep, f.name)
        if f.name == "dominant_types":
            value = "|".join(sorted(value))
        print(f"{f.name} = {_fmt(value)}")
    return 0


def _cmd_phase_diagram(ns: argparse.Namespace) -> int:
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({
        "tau_min": 2.05, "tau_max": 3.5, "tau_steps": 16,
        "alpha_min": 1.1, "alpha_max": 5.0, "alpha_steps": 16,
        "out_dir": None,
    })
    merged = _resolve(ns, defaults)
    if merged["tau_steps"] < 1 or merged["alpha_steps"] < 1:
        raise ConfigError("grid steps must be >= 1")
    out = _out_dir(merged)
    _echo_config(out, "phase-diagram", merged)
    taus = np.linspace(merged["tau_min"], merged["tau_max"], int(merged["tau_steps"]))
    alphas = np.linspace(merged["alpha_min"], merged["alpha_max"], int(merged["alpha_steps"]))
    report_fields = [f.name for f in dataclass_fields(exponent_report(_model_from(merged)))]
    lines = ["tau,alpha," + ",".join(report_fields)]
    for tau in taus:
        for alpha in alphas:
            params = _model_from({**merged, "tau": float(tau), "alpha": float(alpha)})
            rep = exponent_report(params)
            cells = [f"{tau!r}", f"{alpha!r}"]
            for name in report_fields:
                value = getattr(rep, name)
                if name == "dominant_types":
                    cells.append("|".join(sorted(value)))
                else:
                    cells.append(repr(float(value)) if isinstance(value, float) else str(value))
            lines.append(",".join(cells))
    (out / "phase_diagram.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'phase_diagram.csv'} ({len(taus) * len(alphas)} points)")
    return 0


def _cmd_sample(ns: argparse.Namespace) -> int:
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({"n": 1024.0, "seed": 0, "method": "auto",
                     "cell_list_mode": "auto", "palm": False, "out_dir": None})
    merged = _resolve(ns, defaults)
    params = _model_from(merged)
    out = _out_dir(merged)
    _echo_config(out, "sample", merged)
    graph = sample_graph(params, float(merged["n"]), int(merged["seed"]),
                         method=merged["method"], palm=bool(merged["palm"]),
                         cell_list_mode=merged["cell_list_mode"])
    coord_cols = ",".join(f"x{i}" for i in range(params.d))
    lines = [f"id,{coord_cols},mark"]
    for i in range(graph.num_vertices):
        coords = ",".join(repr(float(c)) for c in graph.positions[i])
        lines.append(f"{i},{coords},{graph.marks[i]!r}")
    (out / "vertices.csv").write_text("\n".join(lines) + "\n")
    lines = ["u,v"] + [f"{int(u)},{int(v)}" for u, v in graph.edges]
    (out / "edges.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "n": graph.volume_n,
        "num_vertices": graph.num_vertices,
        "num_edges": graph.num_edges,
        "seed": int(merged["seed"]),
        "palm_origin": graph.palm_origin,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"sampled {graph.num_vertices} vertices, {graph.num_edges} edges -> {out}")
    return 0


def _cmd_cover(ns: argparse.Namespace) -> int:
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({"n": 1024.0, "w_bar": None, "points_csv": None,
                     "sample_count": None, "seed": 0, "out_dir": None})
    merged = _resolve(ns, defaults)
    params = _model_from(merged)
    if merged["w_bar"] is None:
        raise ConfigError("--w-bar is required")
    out = _out_dir(merged)
    _echo_config(out, "cover", merged)
    n = float(merged["n"])
    if merged["points_csv"] is not None:
        path = Path(merged["points_csv"])
        if not path.is_file():
            raise ConfigError(f"points file not found: {path}")
        points = np.loadtxt(path, delimiter=",", ndmin=2)
    else:
        count = merged["sample_count"]
        if count is None:
            raise ConfigError("provide --points-csv or --sample-count")
        rng = np.random.default_rng(int(merged["seed"]))
        side = n ** (1.0 / params.d)
        points = rng.uniform(-side / 2.0, side / 2.0, size=(int(count), params.d))
    result = cover(points, n, float(merged["w_bar"]), params)
    certs = check_certificates(result, points)
    lines = ["box," + ",".join(f"lo{i}" for i in range(params.d))
             + "," + ",".join(f"hi{i}" for i in range(params.d)) + ",volume"]
    for j, box in enumerate(result.boxes):
        lo = ",".join(repr(float(v)) for v in np.atleast_2d(box)[0])
        hi = ",".join(repr(float(v)) for v in np.atleast_2d(box)[1])
        lines.append(f"{j},{lo},{hi},{result.volumes[j]!r}")
    (out / "boxes.csv").write_text("\n".join(lines) + "\n")
    summary = {
        "kind": result.kind,
        "rounds": result.rounds,
        "num_boxes": len(result.volumes),
        "covered_region_volume": result.covered_region_volume,
        "input_size": result.input_size,
        "certificates": {k: bool(v) for k, v in certs.items()},
    }
    (out / "cover_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"cover kind={result.kind} rounds={result.rounds} boxes={len(result.volumes)} -> {out}")
    return 0


def _cmd_backbone(ns: argparse.Namespace) -> int:
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({"n": 2.0**18, "k": 2.0**16, "seed": 0, "out_dir": None})
    merged = _resolve(ns, defaults)
    params = _model_from(merged)
    out = _out_dir(merged)
    _echo_config(out, "backbone", merged)
    constants = backbone_constants(params, float(merged["k"]), n=float(merged["n"]))
    graph = sample_graph(params, float(merged["n"]), int(merged["seed"]))
    result = construct_backbone(graph, float(merged["k"]))
    counts = result.per_box_counts
    summary = {
        "holds_A_bb": bool(result.holds_A_bb),
        "s_k": constants.s_k,
        "s_k_count": constants.s_k_count,
        "w_hh": constants.w_hh,
        "r_k_conn": constants.r_k_conn,
        "k1": constants.k1,
        "meets_connection_threshold": constants.meets_connection_threshold,
        "num_subboxes": int(len(counts)),
        "min_box_count": int(counts.min()) if len(counts) else 0,
        "backbone_size": int(len(result.backbone_component)),
    }
    (out / "backbone_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"A_bb={'holds' if result.holds_A_bb else 'fails'} "
          f"s_k={constants.s_k:.3f} boxes={len(counts)} -> {out}")
    return 0


def _cmd_profile_slopes(ns: argparse.Namespace) -> int:
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({"gamma": None, "k_grid": "16,64,256,1024", "reps": 20,
                     "seed": 0, "rho": 0.1, "pair_samples": 4000, "out_dir": None})
    merged = _resolve(ns, defaults)
    params = _model_from(merged)
    if merged["gamma"] is None:
        raise ConfigError("--gamma is required")
    out = _out_dir(merged)
    _echo_config(out, "profile-slopes", merged)
    k_grid = _parse_grid(merged["k_grid"], "k_grid")
    rows = profile_count_slopes(params, k_grid, float(merged["gamma"]),
                                int(merged["reps"]), int(merged["seed"]),
                                rho=float(merged["rho"]),
                                pair_samples=int(merged["pair_samples"]))
    lines = ["k,rep,count_above,edges_below_cross"]
    for row in rows:
        lines.append(f"{row.k!r},{row.rep},{row.count_above},{row.edges_below_cross!r}")
    (out / "rows.csv").write_text("\n".join(lines) + "\n")
    table = []
    for k in k_grid:
        mine = [r for r in rows if r.k == k]
        table.append({
            "k": k,
            "mean_above": float(np.mean([r.count_above for r in mine])),
            "mean_edges": float(np.mean([r.edges_below_cross for r in mine])),
            "reps": len(mine),
        })
    lines = ["k,mean_above,mean_edges,reps"]
    for row in table:
        lines.append(f"{row['k']!r},{row['mean_above']!r},{row['mean_edges']!r},{row['reps']}")
    (out / "table.csv").write_text("\n".join(lines) + "\n")
    fits = {}
    for column in ("mean_above", "mean_edges"):
        try:
            fit = experiments.fit_slope(table, "log:k", f"log:{column}", drop_fraction=0.0)
            fits[column] = {"slope": fit.slope, "intercept": fit.intercept,
                            "r_squared": fit.r_squared}
        except ValueError as exc:
            fits[column] = {"error": str(exc)}
    (out / "fit.json").write_text(json.dumps(fits, indent=2) + "\n")
    ks = [row["k"] for row in table]
    above = [row["mean_above"] for row in table]
    with np.errstate(divide="ignore"):
        fit_obj = None
        if "slope" in fits["mean_above"]:
            fit_obj = experiments.SlopeFit(
                fits["mean_above"]["slope"], fits["mean_above"]["intercept"],
                fits["mean_above"]["r_squared"], "log:k", "log:mean_above")
        _write_svg(out / "plot.svg", np.log(ks), np.log(above), fit_obj,
                   "log k", "log mean count above ceiling")
    print(f"profile slopes over {len(k_grid)} k values -> {out}")
    return 0


_EXPERIMENT_FITS = {
    "decay": ("log:k", "logneglog:phat", "log k", "log(-log phat)"),
    "second": ("loglog:n", "log:median_second", "log log n", "log median second"),
    "boundary": ("log:k", "log:mean_count", "log k", "log mean count"),
}


def _cmd_experiment(ns: argparse.Namespace) -> int:
    which = ns.experiment
    defaults = dict(_MODEL_DEFAULTS)
    defaults.update({"reps": 20, "seed": 0, "out_dir": None})
    if which == "decay":
        defaults.update({"n": 1024.0, "k_grid": "1,2,4,8,16"})
    elif which in ("second", "giant"):
        defaults.update({"n_grid": "4096,16384,65536"})
    else:
        defaults.update({"k_grid": "256,1024,4096,16384", "method": "auto",
                         "box_factor": 4.0, "epsilon": 1e-3})
    merged = _resolve(ns, defaults)
    params = _model_from(merged)
    out = _out_dir(merged)
    _echo_config(out, f"experiment {which}", merged)
    reps = int(merged["reps"])
    seed = int(merged["seed"])
    if which == "decay":
        result = experiments.estimate_cluster_decay(
            params, float(merged["n"]), _parse_grid(merged["k_grid"], "k_grid"),
            reps, seed)
    elif which == "second":
        result = experiments.estimate_second_largest(
            params, _parse_grid(merged["n_grid"], "n_grid"), reps, seed)
    elif which == "giant":
        result = experiments.estimate_giant_fraction(
            params, _parse_grid(merged["n_grid"], "n_grid"), reps, seed)
    else:
        result = experiments.estimate_downward_boundary(
            params, _parse_grid(merged["k_grid"], "k_grid"), reps, seed,
            method=merged["method"], box_factor=float(merged["box_factor"]),
            epsilon=float(merged["epsilon"]))
    (out / "table.csv").write_text(result.table_csv())
    (out / "rows.csv").write_text(result.rows_csv())
    fit = None
    if which in _EXPERIMENT_FITS:
        x_t, y_t, x_label, y_label = _EXPERIMENT_FITS[which]
        try:
            fit = experiments.fit_slope(result.table, x_t, y_t)
            payload = {"slope": fit.slope, "intercept": fit.intercept,
                       "r_squared": fit.r_squared,
                       "x_transform": x_t, "y_transform": y_t}
        except ValueError as exc:
            payload = {"error": str(exc), "x_transform": x_t, "y_transform": y_t}
        (out / "fit.json").write_text(json.dumps(payload, indent=2) + "\n")
        x_col = x_t.split(":")[1]
        y_col = y_t.split(":")[1]
        fn_x = experiments._TRANSFORM_FNS[x_t.split(":")[0]]
        fn_y = experiments._TRANSFORM_FNS[y_t.split(":")[0]]
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = [float(fn_x(np.array(row[x_col], dtype=float))) for row in result.table]
            ys = [float(fn_y(np.array(row[y_col], dtype=float))) for row in result.table]
        _write_svg(out / "plot.svg", xs, ys, fit, x_label, y_label)
    else:
        xs = [math.log(row["n"]) for row in result.table]
        ys = [row["mean_giant_fraction"] for row in result.table]
        _write_svg(out / "plot.svg", xs, ys, None, "log n", "mean giant fraction")
    print(f"experiment {which}: {len(result.table)} grid points, "
          f"{len(result.rows)} rows -> {out}")
    return 0


# --- parser ------------------------------------------------------------

_DECAY_COLS = """\
table.csv columns:
  k            cluster-size threshold (k=0 estimates the off-giant probability)
  phat         fraction of replicates with origin cluster > k and off the giant
  wilson_lo    Wilson 95% lower bound for phat
  wilson_hi    Wilson 95% upper bound for phat
  reps         replicate count
  excluded     1 when phat = 0 (row excluded from slope fits)
rows.csv columns:
  experiment,n,k,rep,seed   replicate identity (seed replays the row)
  origin_cluster            origin component size
  largest                   largest component size
  origin_off_giant          1 when the origin is not in a largest component"""

_SECOND_COLS = """\
table.csv columns:
  n               box volume
  median_second   median second-largest component size
  q25_second      lower quartile
  q75_second      upper quartile
  reps            replicate count
rows.csv columns:
  experiment,n,k,rep,seed   replicate identity
  largest,second            component sizes
  giant_fraction            largest / n"""

_GIANT_COLS = """\
table.csv columns:
  n                    box volume
  mean_giant_fraction  mean of largest component size / n
  std_giant_fraction   sample stddev of the same
  reps                 replicate count
rows.csv columns: as for `second`."""

_BOUNDARY_COLS = """\
table.csv columns:
  k           inner box volume
  mean_count  mean number of inner vertices with a downward edge out of the box
  std_count   sample stddev of that count
  reps        replicate count
  method      conditional | direct
rows.csv columns:
  experiment,n,k,rep,seed   replicate identity
  boundary_count            per-replicate count (conditional: expected count)
  method                    estimator used"""

_EXPERIMENT_COLS = {
    "decay": _DECAY_COLS,
    "second": _SECOND_COLS,
    "giant": _GIANT_COLS,
    "boundary": _BOUNDARY_COLS,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksrg",
        description="Spatial random graph sampling, exponents, covers, and experiments.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("exponents", help="print the exponent report for one parameter tuple")
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.set_defaults(handler=_cmd_exponents)

    sp = subs.add_parser(
        "phase-diagram",
        help="sweep (tau, alpha) and write every exponent to CSV",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="phase_diagram.csv columns: tau, alpha, then every exponent-report "
               "field; dominant_types is |-joined.",
    )
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--tau-min", dest="tau_min", type=float)
    sp.add_argument("--tau-max", dest="tau_max", type=float)
    sp.add_argument("--tau-steps", dest="tau_steps", type=int)
    sp.add_argument("--alpha-min", dest="alpha_min", type=float)
    sp.add_argument("--alpha-max", dest="alpha_max", type=float)
    sp.add_argument("--alpha-steps", dest="alpha_steps", type=int)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(handler=_cmd_phase_diagram)

    sp = subs.add_parser(
        "sample",
        help="sample one graph and write vertices/edges CSV",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="vertices.csv columns: id, x0..x{d-1}, mark.\n"
               "edges.csv columns: u, v (vertex row indices).",
    )
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--n", type=float, help="box volume")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--method", choices=("auto", "exact", "cell_list"))
    sp.add_argument("--cell-list-mode", dest="cell_list_mode",
                    choices=("auto", "pair_keyed", "streamed"))
    sp.add_argument("--palm", action=argparse.BooleanOptionalAction)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(handler=_cmd_sample)

    sp = subs.add_parser(
        "cover",
        help="run cover expansion over a point set",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="boxes.csv columns: box index, lo0..lo{d-1}, hi0..hi{d-1}, volume.\n"
               "cover_summary.json: kind, rounds, num_boxes, covered_region_volume, "
               "input_size, certificates.",
    )
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--n", type=float, help="ambient box volume")
    sp.add_argument("--w-bar", dest="w_bar", type=float, help="worst-case mark for Prop 4.2 boxes")
    sp.add_argument("--points-csv", dest="points_csv", help="CSV of point coordinates")
    sp.add_argument("--sample-count", dest="sample_count", type=int,
                    help="draw this many uniform points instead of reading a file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(handler=_cmd_cover)

    sp = subs.add_parser(
        "backbone",
        help="sample a graph and check the high-mark backbone event",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="backbone_summary.json: holds_A_bb, s_k, s_k_count, w_hh, r_k_conn, k1, "
               "meets_connection_threshold, num_subboxes, min_box_count, backbone_size.",
    )
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--n", type=float, help="box volume")
    sp.add_argument("--k", type=float, help="subbox volume")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(handler=_cmd_backbone)

    sp = subs.add_parser(
        "profile-slopes",
        help="count vertices above the suppressed mark ceiling across k",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="rows.csv columns: k, rep, count_above, edges_below_cross.\n"
               "table.csv columns: k, mean_above, mean_edges, reps.\n"
               "fit.json: log-log slope of each mean against k.",
    )
    _add_model_flags(sp)
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--gamma", type=float, help="ceiling curvature exponent")
    sp.add_argument("--k-grid", dest="k_grid", help="comma-separated k values")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--pair-samples", dest="pair_samples", type=int)
    sp.add_argument("--out-dir", dest="out_dir")
    sp.set_defaults(handler=_cmd_profile_slopes)

    sp = subs.add_parser(
        "experiment",
        help="run a Monte Carlo campaign and write CSV/SVG",
    )
    esubs = sp.add_subparsers(dest="experiment", required=True)
    for which in ("decay", "second", "giant", "boundary"):
        ep = esubs.add_parser(
            which,
            help=f"{which} campaign",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=_EXPERIMENT_COLS[which],
        )
        _add_model_flags(ep)
        ep.add_argument("--config", help="JSON config file")
        ep.add_argument("--reps", type=int)
        ep.add_argument("--seed", type=int)
        ep.add_argument("--out-dir", dest="out_dir")
        if which == "decay":
            ep.add_argument("--n", type=float)
            ep.add_argument("--k-grid", dest="k_grid")
        elif which in ("second", "giant"):
            ep.add_argument("--n-grid", dest="n_grid")
        else:
            ep.add_argument("--k-grid", dest="k_grid")
            ep.add_argument("--method", choices=("auto", "conditional", "direct"))
            ep.add_argument("--box-factor", dest="box_factor", type=float)
            ep.add_argument("--epsilon", type=float)
        ep.set_defaults(handler=_cmd_experiment)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return ns.handler(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic contract
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
