"""Command-line front end: tensor and kernel exports, state transport, checks.

Configs are JSON documents validated against the schema shipped next to this
module (config_schema.json); unknown keys are rejected. All table outputs go
through one float formatter (shortest round-trip decimal, negative zero
folded to zero) so identical configs produce byte-identical files.

Exit codes: 0 success, 1 check or cross-check failure, 2 config or state
violation, 3 complete-positivity gate, 4 kernel export requested for a model
without phase symmetry. CVMAPS_THREADS controls worker count in the kernel
samplers; CVMAPS_FAULT injects a named defect into the verify battery (test
hook).
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft7Validator

from .fock import DensityOperator, FockDim, coherent_state, fock_state, thermal_state
from .wigner import QuadratureGrid, wigner_of
from .tensors import (DEFAULT_CP_TOL, ProcessTensor, apply_tensor, cp_defect,
                      success_probability)
from .kernels import apply_kernel, kernel_from_tensor, radial_form
from . import elements as el
from . import models as md

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_CP = 3
EXIT_PHASE = 4

_SCHEMA_PATH = Path(__file__).with_name("config_schema.json")
_PROFILE_SUMS = (2.0, 20.0)
_PROFILE_HALF_RANGE = 3.0
_PROFILE_POINTS = 121
_CROSS_CHECK_TOL = 1e-6


def format_float(v: float) -> str:
    """Shortest decimal that round-trips; -0.0 is folded to 0.0."""
    v = float(v)
    if v == 0.0:
        v = 0.0
    return repr(v)


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            format_float(c) if isinstance(c, float) else str(c) for c in row))
    return "\n".join(lines) + "\n"


def render_json_table(header, rows) -> str:
    records = [dict(zip(header, row)) for row in rows]
    return json.dumps(records, indent=2, sort_keys=True) + "\n"


def _diagonal_rows(t: ProcessTensor):
    d = t.dim.size
    rows = []
    for m in range(d):
        for k in range(d):
            rows.append((m, k, float(np.real(t.elements[k, k, m, m]))))
    return rows


def render_tensor_csv(t: ProcessTensor) -> str:
    return render_csv(("m", "k", "value"), _diagonal_rows(t))


_TENSOR_PLOT = """\
import csv

import matplotlib.pyplot as plt
import numpy as np

rows = list(csv.DictReader(open("tensor_diagonal.csv")))
m = np.array([int(r["m"]) for r in rows])
k = np.array([int(r["k"]) for r in rows])
v = np.array([float(r["value"]) for r in rows])
side = m.max() + 1
grid = np.zeros((side, side))
grid[k, m] = v
fig, ax = plt.subplots(figsize=(5, 4))
im = ax.imshow(grid, origin="lower", aspect="equal", cmap="viridis")
ax.set_xlabel("input photon number m")
ax.set_ylabel("output photon number k")
fig.colorbar(im, ax=ax, label="diagonal element")
fig.tight_layout()
fig.savefig("tensor_diagonal.png", dpi=160)
"""

_KERNEL_PLOT = """\
import csv
import glob

import matplotlib.pyplot as plt
import numpy as np

for name in sorted(glob.glob("kernel_theta_*.csv")):
    rows = list(csv.DictReader(open(name)))
    rp = np.array([float(r["r_prime"]) for r in rows])
    rr = np.array([float(r["r"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    nrp = len(np.unique(rp))
    nr = len(np.unique(rr))
    grid = v.reshape(nrp, nr)
    fig, ax = plt.subplots(figsize=(5, 4))
    lim = np.abs(grid).max()
    im = ax.pcolormesh(np.unique(rr), np.unique(rp), grid, cmap="RdBu_r",
                       vmin=-lim, vmax=lim)
    ax.set_xlabel("input radius r")
    ax.set_ylabel("output radius r'")
    fig.colorbar(im, ax=ax, label="kernel value")
    fig.tight_layout()
    fig.savefig(name.replace(".csv", ".png"), dpi=160)
for name in sorted(glob.glob("profile_sum*.csv")):
    rows = list(csv.DictReader(open(name)))
    u = np.array([float(r["r_prime_minus_r"]) for r in rows])
    v = np.array([float(r["value"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(u, v)
    ax.set_xlabel("r' - r")
    ax.set_ylabel("kernel value")
    fig.tight_layout()
    fig.savefig(name.replace(".csv", ".png"), dpi=160)
"""


def load_config(path: str):
    """Parse and schema-validate a config; raises ValueError on any problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from exc
    with open(_SCHEMA_PATH, "r", encoding="utf-8") as fh:
        schema = json.load(fh)
    errors = sorted(Draft7Validator(schema).iter_errors(data),
                    key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.path) or "<root>"
        raise ValueError(f"config violates schema at {where}: {first.message}")
    return data


def build_model(cfg) -> ProcessTensor:
    """Single-mode process tensor for a validated config."""
    name = cfg["model"]
    dim = FockDim(cfg.get("n_max", 15))
    if name == "amplifier":
        kwargs = {"dim": dim, "mu": cfg.get("mu", 1.0),
                  "delta": cfg.get("delta", 2.0),
                  "eta_m": cfg.get("eta_m", 1.0),
                  "detector": cfg.get("detector", "photon_counter"),
                  "include_faulty": cfg.get("include_faulty", True)}
        if "R" in cfg:
            kwargs["reflectivity"] = cfg["R"]
        else:
            kwargs["gain"] = cfg.get("g", 2.0)
        return md.amplifier_model(md.AmplifierConfig(**kwargs))
    if name == "addition":
        acfg = md.AdditionConfig(
            dim=dim, chi=cfg.get("chi", 0.105), gamma=cfg.get("gamma", 0.0),
            mu=cfg.get("mu", 1.0),
            detector=cfg.get("detector", "photon_counter"),
            include_faulty=cfg.get("include_faulty", True))
        return md.addition_model(acfg)
    if name == "ideal_amplifier":
        return md.ideal_truncated_amplifier(cfg.get("g", 2.0), dim)
    if name == "ideal_addition":
        return md.ideal_photon_addition(dim)
    if name == "identity":
        return el.identity(dim).tensor()
    if name == "phase_rotation":
        return el.phase_rotation(cfg.get("theta", 0.0), dim).tensor()
    if name == "displacement":
        alpha = complex(cfg.get("alpha_re", 0.0), cfg.get("alpha_im", 0.0))
        return el.displacement(alpha, dim).tensor()
    if name == "squeezing":
        return el.squeezing(cfg.get("r", 0.0), dim).tensor()
    if name == "attenuation":
        return el.attenuation(cfg.get("eta", 0.5), dim).tensor()
    if name == "parametric_amplification":
        return el.parametric_amplification(cfg.get("g", 1.2), dim).tensor()
    raise ValueError(f"unhandled model {name}")


def build_input_state(cfg, dim: FockDim) -> DensityOperator:
    spec = cfg.get("input_state")
    if spec is None:
        raise ValueError("apply needs an input_state block in the config")
    kind = spec["kind"]
    if kind == "coherent":
        alpha = complex(spec.get("alpha_re", 0.0), spec.get("alpha_im", 0.0))
        if abs(alpha) ** 2 > dim.n_max / 4:
            raise ValueError(
                f"coherent amplitude {abs(alpha):.3f} too large for "
                f"n_max={dim.n_max}")
        return coherent_state(alpha, dim)
    if kind == "fock":
        n = spec.get("n", 0)
        if n > dim.n_max:
            raise ValueError(f"fock level {n} exceeds n_max={dim.n_max}")
        return fock_state(n, dim)
    if kind == "thermal":
        return thermal_state(spec.get("mean_n", 0.0), dim)
    raise ValueError(f"unhandled input_state kind {kind}")


def _parse_grid(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError('grid must be "min,max,n"')
    lo, hi = float(parts[0]), float(parts[1])
    n = int(parts[2])
    if not (hi > lo and n >= 2):
        raise ValueError("grid needs max > min and n >= 2")
    return lo, hi, n


def _parse_theta(text: str):
    vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    if not vals:
        raise ValueError("theta list is empty")
    return vals


def _theta_tag(theta: float) -> str:
    return format_float(theta).replace("-", "m").replace(".", "p")


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return target


def _gate_cp(t: ProcessTensor) -> float:
    defect = cp_defect(t)
    if defect > DEFAULT_CP_TOL:
        raise ArithmeticError(f"map is not completely positive "
                              f"(Choi defect {defect:.3e})")
    return defect


def cmd_tensor(args) -> int:
    cfg = load_config(args.config)
    t = build_model(cfg)
    _gate_cp(t)
    out = Path(args.out)
    rows = _diagonal_rows(t)
    if args.format == "json":
        _write(out, "tensor_diagonal.json",
               render_json_table(("m", "k", "value"), rows))
    else:
        _write(out, "tensor_diagonal.csv",
               render_csv(("m", "k", "value"), rows))
        _write(out, "plot_tensor.py", _TENSOR_PLOT)
    print(f"tensor: wrote diagonal slice for {cfg['model']} "
          f"(n_max={t.dim.n_max}) to {out}")
    return EXIT_OK


def cmd_kernel(args) -> int:
    cfg = load_config(args.config)
    t = build_model(cfg)
    _gate_cp(t)
    lo, hi, n = _parse_grid(args.grid) if args.grid else (0.0, 5.0, 101)
    r_axis = np.linspace(max(lo, 0.0), hi, n)
    thetas = _parse_theta(args.theta) if args.theta else [0.0]
    try:
        rk = radial_form(t, r_axis, r_axis, np.asarray(thetas, float))
    except ValueError as exc:
        raise PhaseSymmetryError(str(exc)) from exc
    out = Path(args.out)
    header = ("r_prime", "r", "theta", "value")
    for i, theta in enumerate(thetas):
        rows = []
        for a, rp in enumerate(r_axis):
            for b, r in enumerate(r_axis):
                rows.append((float(rp), float(r), float(theta),
                             float(rk.values[a, b, i])))
        name = f"kernel_theta_{_theta_tag(theta)}"
        if args.format == "json":
            _write(out, name + ".json", render_json_table(header, rows))
        else:
            _write(out, name + ".csv", render_csv(header, rows))
    for total in _PROFILE_SUMS:
        u = np.linspace(-_PROFILE_HALF_RANGE, _PROFILE_HALF_RANGE,
                        _PROFILE_POINTS)
        u = u[np.abs(u) <= total]  # radii must stay non-negative
        rp = (total + u) / 2.0
        r = (total - u) / 2.0
        prof = radial_form(t, rp, r, np.zeros(1))
        vals = np.diagonal(prof.values[:, :, 0])
        rows = [(float(ui), float(total), float(v))
                for ui, v in zip(u, vals)]
        header_p = ("r_prime_minus_r", "r_sum", "value")
        name = f"profile_sum{int(total)}"
        if args.format == "json":
            _write(out, name + ".json", render_json_table(header_p, rows))
        else:
            _write(out, name + ".csv", render_csv(header_p, rows))
    if args.format != "json":
        _write(out, "plot_kernel.py", _KERNEL_PLOT)
    print(f"kernel: wrote {len(thetas)} radial slice(s) and "
          f"{len(_PROFILE_SUMS)} profiles for {cfg['model']} to {out}")
    return EXIT_OK


class PhaseSymmetryError(RuntimeError):
    pass


def cmd_apply(args) -> int:
    cfg = load_config(args.config)
    t = build_model(cfg)
    _gate_cp(t)
    rho_in = build_input_state(cfg, t.dim)
    path = cfg.get("path", "both")
    lo, hi, n = _parse_grid(args.grid) if args.grid else (-5.0, 5.0, 81)
    grid = QuadratureGrid(lo, hi, lo, hi, n, n)

    raw = apply_tensor(t, rho_in)
    prob = success_probability(t, rho_in)
    if prob <= 0.0:
        print("apply: success probability vanished; nothing to normalize",
              file=sys.stderr)
        return EXIT_CHECK
    rho_out = DensityOperator(t.dim, raw.matrix / prob)

    cross = None
    if path in ("kernel", "both"):
        fk = kernel_from_tensor(t, grid, grid)
        w_kernel = apply_kernel(fk, wigner_of(rho_in, grid))
        w_tensor = wigner_of(raw, grid)
        cross = float(np.abs(w_kernel.values - w_tensor.values).max())
        if cross > _CROSS_CHECK_TOL:
            print(f"apply: tensor and kernel paths disagree "
                  f"(max |diff| {cross:.3e} > {_CROSS_CHECK_TOL})",
                  file=sys.stderr)
            return EXIT_CHECK
        w_out = w_kernel.values / prob
    if path in ("tensor",):
        w_out = wigner_of(rho_out, grid).values

    out = Path(args.out)
    state = {
        "model": cfg["model"],
        "n_max": t.dim.n_max,
        "path": path,
        "success_probability": prob,
        "rho_re": [[float(v) for v in row] for row in np.real(rho_out.matrix)],
        "rho_im": [[float(v) for v in row] for row in np.imag(rho_out.matrix)],
    }
    if cross is not None:
        state["cross_check_max_diff"] = cross
    _write(out, "output_state.json",
           json.dumps(state, indent=2, sort_keys=True) + "\n")
    rows = []
    for i, x in enumerate(grid.xs):
        for j, p in enumerate(grid.ps):
            rows.append((float(x), float(p), float(w_out[i, j])))
    _write(out, "output_wigner.csv", render_csv(("x", "p", "value"), rows))
    print(f"apply: P = {prob:.6g}, output written to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    fault = os.environ.get("CVMAPS_FAULT") or None
    summary = run_checks(fault)
    out = Path(args.out)
    _write(out, "verify_summary.json",
           json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for check in summary["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}: measured {check['measured']:.3e} "
              f"vs tolerance {check['tolerance']:.3e}")
    n_fail = sum(not c["passed"] for c in summary["checks"])
    print(f"verify: {len(summary['checks']) - n_fail}/"
          f"{len(summary['checks'])} checks passed "
          f"in {summary['runtime_seconds']}s")
    return EXIT_OK if summary["all_passed"] else EXIT_CHECK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvmaps",
        description="Heralded-process tensors and Wigner transfer kernels.",
        epilog="Environment: CVMAPS_THREADS sets the sampler worker count.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="path to a JSON model config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="table format for exported slices")

    p_tensor = sub.add_parser("tensor",
                              help="export the diagonal tensor slice")
    common(p_tensor)
    p_tensor.set_defaults(func=cmd_tensor)

    p_kernel = sub.add_parser("kernel", help="export radial kernel slices")
    common(p_kernel)
    p_kernel.add_argument("--theta", default=None,
                          help="comma-separated relative angles (radians)")
    p_kernel.add_argument("--grid", default=None,
                          help='radial axis as "min,max,n" (default 0,5,101)')
    p_kernel.set_defaults(func=cmd_kernel)

    p_apply = sub.add_parser("apply", help="run a state through the model")
    common(p_apply)
    p_apply.add_argument("--grid", default=None,
                         help='quadrature box as "min,max,n" '
                              "(default -5,5,81)")
    p_apply.set_defaults(func=cmd_apply)

    p_verify = sub.add_parser("verify", help="run the self-check battery")
    common(p_verify, needs_config=False)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhaseSymmetryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHASE
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CP


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
