"""Command-line front end.

    gqd <subcommand> [options]

Every subcommand writes one table (CSV or JSON) to stdout or ``--output``.
``--config FILE`` reads ``key = value`` lines whose keys are option names;
explicit flags override the file.  Exit status: 0 success, 1 failed
verification, 2 configuration or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import GQDError
from .numerics import HBARC_MEV_FM, ComplexEnergy

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SUITES = ("gde-residual", "optical", "mu-invariance", "rg", "unitarity-evolution", "renorm-limit")
PRESETS = ("lo-unit", "nlo-default")


class ConfigError(Exception):
    pass


# -- units -------------------------------------------------------------------

class Units:
    """Conversion at the boundary.  ``physical``: momenta, masses, energies in
    MeV and lengths in fm; internally everything is in MeV powers."""

    def __init__(self, system: str):
        self.physical = system == "physical"

    def length_in(self, x):
        return x / HBARC_MEV_FM if self.physical else x

    def inverse_length_out(self, x):
        return x / HBARC_MEV_FM if self.physical else x

    def area_out(self, x):
        """[mass]^-2 quantities such as T and C0 -> fm^2."""
        return x * HBARC_MEV_FM ** 2 if self.physical else x

    def area_in(self, x):
        return x / HBARC_MEV_FM ** 2 if self.physical else x

    def label(self, kind: str) -> str:
        if kind in ("angle", "none"):
            return {"angle": "rad", "none": "1"}[kind]
        if not self.physical:
            return "natural"
        return {"momentum": "MeV", "energy": "MeV", "mass": "MeV", "inverse_length": "1/fm",
                "length": "fm", "area": "fm^2", "angle": "rad", "time": "1/MeV", "none": "1"}[kind]


# -- output ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def emit(columns, rows, fmt: str, out) -> None:
    if fmt == "json":
        data = {"columns": list(columns),
                "rows": [[v if isinstance(v, str) else (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                          for v in row] for row in rows]}
        out.write(json.dumps(data, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    out.write(buf.getvalue())


def _col(name: str, units: Units, kind: str) -> str:
    return f"{name} [{units.label(kind)}]"


# -- subcommands ---------------------------------------------------------------

def _grid(args):
    if args.p:
        return np.asarray(args.p, dtype=float)
    return np.linspace(args.p_min, args.p_max, args.n)


def cmd_phase_shifts(args, units, out):
    from .expansion import EreParams, pcotdelta
    a = units.length_in(args.a)
    # r_n carries length^(2n+1)
    shapes = tuple(r * units.length_in(1.0) ** (2 * i + 1) for i, r in enumerate(args.shape))
    ere = EreParams(a, shapes)
    p_in = _grid(args)
    rows = []
    for p in p_in:
        pc = pcotdelta(ere, float(p))
        rows.append([p, math.atan2(p, pc), units.inverse_length_out(pc)])
    emit([_col("p", units, "momentum"), _col("delta", units, "angle"),
          _col("pcotdelta", units, "inverse_length")], rows, args.format, out)
    return EXIT_OK


def _lo_c0(args, units):
    if args.C0 is not None:
        return units.area_in(args.C0)
    return 4.0 * math.pi * units.length_in(args.a) / args.m


def _evaluator(args, units):
    from . import effective, pionless, separable
    if args.model == "lo":
        return pionless.lo_evaluator(args.m, _lo_c0(args, units))
    if args.model == "pionless":
        op = effective.default_operator(args.m, units.area_in(args.C0), args.c2, args.J1)
        return effective.evaluator(op, args.variant)
    if args.model == "separable":
        model = separable.SeparableModel(args.alpha, args.m, args.a_ref, args.g_a,
                                         separable.power_law_form_factor(args.alpha, args.beta))
        return separable.evaluator(model)
    raise ConfigError(f"unknown model {args.model!r}")


def cmd_tmatrix(args, units, out):
    T = _evaluator(args, units)
    z = complex(args.z_re, args.z_im)
    grid = _grid(args)
    rows = []
    for p2 in grid:
        for p1 in grid:
            t = complex(np.asarray(T(ComplexEnergy(z) if z.imag == 0 else z, float(p2), float(p1))))
            rows.append([p2, p1, units.area_out(t.real), units.area_out(t.imag)])
    emit([_col("p2", units, "momentum"), _col("p1", units, "momentum"),
          _col("re_T", units, "area"), _col("im_T", units, "area")], rows, args.format, out)
    return EXIT_OK


def _preset(name: str):
    from .effective import default_operator
    if name == "lo-unit":
        return {"m": 1.0, "C0": 4.0 * math.pi, "op": None}
    if name == "nlo-default":
        return {"m": 1.0, "C0": -8.0 * math.pi, "op": default_operator(1.0, -8.0 * math.pi, 0.05, 0.02)}
    raise ConfigError(f"unknown preset {name!r}")


def _suite_checks(suite: str, pre):
    """Yield (check, value, threshold) with pass meaning value < threshold."""
    from . import effective, evolution, expansion, pionless, renorm
    m, C0, op = pre["m"], pre["C0"], pre["op"]
    if op is None:
        T = pionless.lo_evaluator(m, C0)

        def amp(p):
            return -pionless.lo_t(ComplexEnergy.on_shell(p, m), m, C0)
    else:
        T = effective.evaluator(op, "full")

        def amp(p):
            return effective.effective_amplitude(op, p, "full")
    if suite == "gde-residual":
        for z in (-0.4 + 0.0j, 0.3 + 0.4j, 1.1 - 0.2j):
            yield f"z={z}", pionless.gde_residual(T, z, 0.3, 0.6, m=m), 1e-8
    elif suite == "optical":
        for p in (0.05, 0.2, 0.5):
            inv = 4.0 * math.pi / m / complex(amp(p))
            yield f"p={p}", abs(inv.imag + p) / p, 1e-10
    elif suite in ("mu-invariance", "rg"):
        # a long series makes the subtraction-point shift exact to roundoff
        n_terms = 3 if suite == "rg" else 40
        cs = expansion.CouplingSet((C0,) if op is None else tuple(
            expansion.c2n_from_formfactor(op.params, n_terms).C), 0.0, m)
        if suite == "mu-invariance":
            for mu in (0.1, 0.5, 2.0):
                shifted = expansion.shift_couplings(cs, mu)
                for p in (0.1, 0.3):
                    ref = expansion.ksw_amplitude(cs, p)
                    yield f"mu={mu},p={p}", abs(expansion.ksw_amplitude(shifted, p) - ref) / abs(ref), 1e-12
        else:
            for n in range(len(cs.C)):
                yield f"n={n}", expansion.rg_residual(cs, n, 0.7), 1e-6
    elif suite == "unitarity-evolution":
        c0 = C0 if op is None else 4.0 * math.pi / m
        sep = evolution.lo_separable(m, c0)
        psi = evolution.gaussian_packet(0.0, 1.0, m)
        for t in (1.0, 4.0):
            yield f"t={t}", evolution.unitarity_defect(sep, psi, t), 1e-4
    elif suite == "renorm-limit":
        c_r = C0 if op is None else 4.0 * math.pi / m
        for reg in renorm.REGULATORS:
            errs = renorm.cutoff_scan(m, c_r, -0.3 + 0.2j, [50.0, 100.0, 200.0, 400.0], reg)
            worst = float(np.max(errs[1:] / errs[:-1]))
            yield f"{reg}:error_ratio", worst, 0.55
    else:
        raise ConfigError(f"unknown suite {suite!r}")


def cmd_verify(args, units, out):
    pre = _preset(args.preset)
    suites = SUITES if args.suite == "all" else (args.suite,)
    rows = []
    ok = True
    for suite in suites:
        for check, value, thr in _suite_checks(suite, pre):
            passed = bool(value < thr)
            ok &= passed
            rows.append([suite, check, value, thr, passed])
    emit(["suite [1]", "check [1]", "value [1]", "threshold [1]", "pass [1]"], rows, args.format, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_probe(args, units, out):
    from .effective import default_operator
    from .probe import amplitude_external, gaussian_potential, make_kinematics
    op = default_operator(args.m, units.area_in(args.C0), args.c2, args.J1)
    pot = gaussian_potential(args.strength, args.width)
    rows = []
    for p1 in _grid(args):
        for th in args.theta:
            kin = make_kinematics(args.m, [0.0, 0.0, 0.0], [0.0, 0.0, float(p1)], [args.Q, 0.0, 0.0],
                                  [math.sin(th), 0.0, math.cos(th)])
            parts = amplitude_external(kin, pot, op)
            tot = parts.total_regular
            rows.append([p1, th, parts.a00_coeff, parts.a01.real, parts.a01.imag, parts.a10.real,
                         parts.a10.imag, parts.a11.real, parts.a11.imag, tot.real, tot.imag])
    cols = [_col("p1", units, "momentum"), _col("theta", units, "angle")] + [
        _col(n, units, "area") for n in ("a00_coeff", "re_a01", "im_a01", "re_a10", "im_a10",
                                         "re_a11", "im_a11", "re_total", "im_total")]
    emit(cols, rows, args.format, out)
    return EXIT_OK


def _read_phase_csv(path: str, m: float):
    from .fitting import PhaseShiftData
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.split("[")[0].strip() for h in next(reader)]
            idx = {k: header.index(k) for k in ("p", "delta", "sigma")}
            rows = [[float(r[idx[k]]) for k in ("p", "delta", "sigma")] for r in reader if r]
    except (OSError, StopIteration, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read phase-shift CSV {path!r}: {exc}") from exc
    arr = np.array(rows, dtype=float)
    return PhaseShiftData(arr[:, 0], arr[:, 1], arr[:, 2], m)


def cmd_fit(args, units, out):
    from . import fitting
    from .pionless import EftParams, FormFactor
    if not args.input:
        raise ConfigError("fit needs --input")
    data = _read_phase_csv(args.input, args.m)
    rows = []
    if args.kind == "ere":
        res = fitting.fit_ere(data, args.n_shapes)
        names = ["a"] + [f"r{i}" for i in range(args.n_shapes)]
        values = [res.params.a] + list(res.params.shapes)
        for i, (n, v) in enumerate(zip(names, values)):
            rows.append([n, v, math.sqrt(max(res.covariance[i, i], 0.0))])
        rows.append(["chi2", res.chi2, 0.0])
    else:
        init = EftParams(args.m, args.C0, FormFactor((1.0, args.c2), lam=args.lam), (args.J1,))
        res = fitting.fit_eft(data, init)
        vals = [res.params.C0, complex(res.params.form.coeffs[1]).real, res.params.calJ[0]]
        for i, (n, v) in enumerate(zip(res.names, vals)):
            var = res.covariance[i, i]
            rows.append([n, v, math.sqrt(var) if np.isfinite(var) else math.inf])
        rows.append(["condition_number", res.condition_number, 0.0])
    emit(["parameter [1]", "value [natural]", "std [natural]"], rows, args.format, out)
    return EXIT_OK


def cmd_evolve(args, units, out):
    from . import evolution
    c0 = _lo_c0(args, units)
    sep = evolution.lo_separable(args.m, c0)
    psi = evolution.gaussian_packet(args.k0, args.width, args.m)
    times = np.linspace(0.0, args.t_max, args.n_t)
    y0 = min(evolution.packet_energy_width(psi), 4.0 / args.t_max)
    contour = evolution.ContourSpec(y0, max(args.window, float(psi.energies.max()) + 10 * y0))
    s = evolution.survival_amplitude(sep, psi, times, contour)
    rows = [[t, v.real, v.imag, abs(v)] for t, v in zip(times, s)]
    emit([_col("t", units, "time"), "re_S [1]", "im_S [1]", "abs_S [1]"], rows, args.format, out)
    return EXIT_OK


def cmd_model(args, units, out):
    from . import separable
    phi = separable.power_law_form_factor(args.alpha, args.beta)
    model = separable.SeparableModel(args.alpha, args.m, args.a_ref, args.g_a, phi)
    co = separable.asymptotic_coeffs(model)
    rows = [["dynamics", model.dynamics.value if hasattr(model.dynamics, "value") else str(model.dynamics)],
            ["fitted_tail_exponent", separable.fitted_tail_exponent(phi)],
            ["b1", co.b1], ["m_tilde_a", co.m_tilde_a]]
    if co.b2 is not None:
        rows.append(["b2", co.b2])
    if co.lambda_coupling is not None:
        rows.append(["lambda", co.lambda_coupling])
    for z in args.z:
        t = complex(separable.general_solution(model, ComplexEnergy(complex(z, 0.0)), 0.0, 0.0))
        rows.append([f"T(z={z},0,0).re", t.real])
        rows.append([f"T(z={z},0,0).im", t.imag])
    emit(["quantity [1]", "value [natural]"], [[str(k), v if isinstance(v, str) else float(v)] for k, v in rows],
         args.format, out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--units", choices=("natural", "physical"), default="natural")
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--output", default=None, help="write here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=float, default=1.0, help="nucleon mass")


def _grid_opts(p, default_max=1.0):
    p.add_argument("--p", type=float, nargs="+", default=None, help="explicit momenta")
    p.add_argument("--p-min", type=float, default=0.05)
    p.add_argument("--p-max", type=float, default=default_max)
    p.add_argument("--n", type=int, default=10)


def _eft_opts(p):
    p.add_argument("--C0", type=float, default=None)
    p.add_argument("--c2", type=float, default=0.05)
    p.add_argument("--J1", type=float, default=0.02)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gqd", description="Two-nucleon scattering from the generalized dynamical equation.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    p = sub.add_parser("phase-shifts", help="delta(p) and p cot delta from effective-range parameters")
    _common(p)
    _grid_opts(p)
    p.add_argument("--a", type=float, required=False, default=None)
    p.add_argument("--shape", type=float, nargs="*", default=[], help="r0, r1, ... in length units")
    p.set_defaults(func=cmd_phase_shifts, required_opts=("a",))

    p = sub.add_parser("tmatrix", help="off-shell T(z; p2, p1) on a momentum grid")
    _common(p)
    _grid_opts(p)
    _eft_opts(p)
    p.add_argument("--model", choices=("lo", "pionless", "separable"), default="lo")
    p.add_argument("--variant", choices=("full", "truncated"), default="full")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--z-re", type=float, default=-0.5)
    p.add_argument("--z-im", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--g-a", type=float, default=-1.0)
    p.add_argument("--a-ref", type=float, default=-1.0)
    p.set_defaults(func=cmd_tmatrix, required_opts=())

    p = sub.add_parser("verify", help="run invariant suites; exit 1 on failure")
    _common(p)
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--preset", choices=PRESETS, default="lo-unit")
    p.set_defaults(func=cmd_verify, required_opts=())

    p = sub.add_parser("probe", help="external-probe amplitude parts over a kinematics grid")
    _common(p)
    _grid_opts(p, default_max=0.5)
    _eft_opts(p)
    p.add_argument("--theta", type=float, nargs="+", default=[0.7, 1.5])
    p.add_argument("--Q", type=float, default=0.2, help="final pair momentum along x")
    p.add_argument("--strength", type=float, default=1.0)
    p.add_argument("--width", type=float, default=1.0)
    p.set_defaults(func=cmd_probe, required_opts=("C0",))

    p = sub.add_parser("fit", help="fit ERE or EFT parameters to phase shifts in a CSV file")
    _common(p)
    _eft_opts(p)
    p.add_argument("--input", default=None, help="CSV with columns p, delta, sigma")
    p.add_argument("--kind", choices=("ere", "eft"), default="ere")
    p.add_argument("--n-shapes", type=int, default=1)
    p.add_argument("--lam", type=float, default=4.0, help="form-factor scale for the EFT fit")
    p.set_defaults(func=cmd_fit, required_opts=())

    p = sub.add_parser("evolve", help="survival amplitude <psi|U(t)|psi> for LO dynamics")
    _common(p)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--C0", type=float, default=None)
    p.add_argument("--k0", type=float, default=0.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--n-t", type=int, default=101)
    p.add_argument("--window", type=float, default=200.0)
    p.set_defaults(func=cmd_evolve, required_opts=())

    p = sub.add_parser("model", help="separable-model diagnostics")
    _common(p)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--g-a", type=float, default=-1.0)
    p.add_argument("--a-ref", type=float, default=-1.0)
    p.add_argument("--z", type=float, nargs="*", default=[-0.5, 0.5])
    p.set_defaults(func=cmd_model, required_opts=())
    return parser


def load_config(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, val = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return out


def _apply_config(subparser: argparse.ArgumentParser, config: dict) -> None:
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, val in config.items():
        if key not in actions or key in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        act = actions[key]
        conv = act.type or str
        try:
            if act.nargs in ("+", "*"):
                defaults[key] = [conv(v) for v in val.replace(",", " ").split()]
            else:
                defaults[key] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {val!r}") from exc
        if act.choices is not None and defaults[key] not in act.choices:
            raise ConfigError(f"{key!r} must be one of {sorted(act.choices)}")
    subparser.set_defaults(**defaults)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(sub, load_config(args.config))
            args = parser.parse_args(argv)
        for opt in args.required_opts:
            if getattr(args, opt) is None:
                raise ConfigError(f"--{opt} is required for {args.command}")
        units = Units(args.units)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                return args.func(args, units, fh)
        return args.func(args, units, sys.stdout)
    except (ConfigError, GQDError, ValueError) as exc:
        print(f"gqd: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())
