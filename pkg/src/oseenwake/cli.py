"""Command line front end: ``oseenwake {field,asymptote,verify,picard}``.

Exit codes: 0 success, 1 verification failure, 2 invalid configuration or
unknown check, 3 numerical failure, 4 non-contracting fixed point map.
"""

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import asymptotics as asy
from . import verify
from .fields import (BodySpec, BoundaryTraces, ConfigurationError, DomainError, Scene, SourceBump,
                     SourceTerm, manufactured_traces, net_force, oseen_velocity, oseen_vorticity)
from .geometry import wake_exponent
from .kernels import SingularityError
from .quadrature import QuadratureError

CSV_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NONCONTRACTION = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    """Invalid scene configuration; ``line`` points into the JSON source when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


# ------------------------------------------------------------ scene config

DEFAULTS = {
    "perturbation": {"nu": 0.0, "epsilon": 0.25, "profile": "envelope"},
    "grid": {"R0": 1.0, "R_max": 80.0, "n_r": 128, "n_theta": 64},
    "tolerances": {"quad": 1e-10, "picard": 1e-8, "max_iter": 50},
    "fit": {"r_min": 20.0, "r_max": 60.0, "exponent": 1.0},
    "boundary_amplitude": {"kind": "zero"},
}


@dataclass
class SceneConfig:
    force: list = field(default_factory=list)
    body: dict = None
    exponents: object = "from_force"
    perturbation: dict = field(default_factory=lambda: dict(DEFAULTS["perturbation"]))
    grid: dict = field(default_factory=lambda: dict(DEFAULTS["grid"]))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULTS["tolerances"]))
    fit: dict = field(default_factory=lambda: dict(DEFAULTS["fit"]))
    boundary_amplitude: dict = field(default_factory=lambda: dict(DEFAULTS["boundary_amplitude"]))
    base_dir: str = "."

    # -- parsing
    @classmethod
    def parse(cls, data, text=None, base_dir="."):
        def fail(msg, key=None):
            raise ConfigError(msg, _line_of(text, key))

        if not isinstance(data, dict):
            fail("scene must be a JSON object")
        known = {"version", "force", "body", "exponents", "perturbation", "grid", "tolerances", "fit",
                 "boundary_amplitude"}
        for k in data:
            if k not in known:
                fail(f"unknown key {k!r}", k)
        if data.get("version", 1) != 1:
            fail("unsupported scene version", "version")
        cfg = cls(base_dir=base_dir)
        force = data.get("force", [])
        if not isinstance(force, list):
            fail("'force' must be a list of bumps", "force")
        for i, b in enumerate(force):
            try:
                c = [float(v) for v in b["center"]]
                a = [float(v) for v in b["amplitude"]]
                rho = float(b["radius"])
            except (KeyError, TypeError, ValueError):
                fail(f"force[{i}] needs center[2], radius and amplitude[2]", "force")
            if len(c) != 2 or len(a) != 2 or not rho > 0:
                fail(f"force[{i}]: center/amplitude must have 2 entries and radius must be positive", "force")
            cfg.force.append({"center": c, "radius": rho, "amplitude": a})
        body = data.get("body")
        if body is not None:
            try:
                R = float(body["radius"])
                tr = body["traces"]
                kind = tr["kind"]
            except (KeyError, TypeError, ValueError):
                fail("body needs radius and traces.kind", "body")
            if not R > 0:
                fail("body radius must be positive", "radius")
            if kind == "manufactured":
                try:
                    xc = [float(v) for v in tr["x_c"]]
                    F0 = [float(v) for v in tr["F0"]]
                except (KeyError, TypeError, ValueError):
                    fail("manufactured traces need x_c[2] and F0[2]", "traces")
                if math.hypot(*xc) >= R:
                    fail("x_c must lie strictly inside the body", "x_c")
                n = int(tr.get("n_nodes", 256))
                if n < 8:
                    fail("n_nodes must be at least 8", "n_nodes")
                cfg.body = {"radius": R, "traces": {"kind": kind, "x_c": xc, "F0": F0, "n_nodes": n}}
            elif kind == "file":
                if not isinstance(tr.get("path"), str):
                    fail("file traces need a path", "traces")
                cfg.body = {"radius": R, "traces": {"kind": "file", "path": tr["path"]}}
            else:
                fail(f"unknown trace kind {kind!r}", "kind")
        ex = data.get("exponents", "from_force")
        if ex == "from_force":
            cfg.exponents = "from_force"
        elif isinstance(ex, dict) and set(ex) <= {"A", "B"}:
            try:
                cfg.exponents = {"A": float(ex.get("A", 0.0)), "B": float(ex.get("B", 0.0))}
            except (TypeError, ValueError):
                fail("exponents A and B must be numbers", "exponents")
        else:
            fail("exponents must be \"from_force\" or {\"A\": .., \"B\": ..}", "exponents")
        for sect in ("perturbation", "grid", "tolerances", "fit", "boundary_amplitude"):
            given = data.get(sect, {})
            if not isinstance(given, dict):
                fail(f"'{sect}' must be an object", sect)
            for k in given:
                if k not in DEFAULTS[sect]:
                    fail(f"unknown key {sect}.{k}", k)
            merged = dict(DEFAULTS[sect])
            merged.update(given)
            setattr(cfg, sect, merged)
        try:
            cfg._normalize()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cfg

    def _normalize(self):
        p = self.perturbation
        p["nu"], p["epsilon"], p["profile"] = float(p["nu"]), float(p["epsilon"]), str(p["profile"])
        asy.PerturbationModel(p["nu"], p["epsilon"], p["profile"])
        g = self.grid
        g["R0"], g["R_max"], g["n_r"], g["n_theta"] = float(g["R0"]), float(g["R_max"]), int(g["n_r"]), int(g["n_theta"])
        asy.PolarGrid(**g)
        t = self.tolerances
        t["quad"], t["picard"], t["max_iter"] = float(t["quad"]), float(t["picard"]), int(t["max_iter"])
        if not (t["quad"] > 0 and t["picard"] > 0 and t["max_iter"] > 0):
            raise ValueError("tolerances must be positive")
        f = self.fit
        f["r_min"], f["r_max"], f["exponent"] = float(f["r_min"]), float(f["r_max"]), float(f["exponent"])
        if not (0 < f["r_min"] < f["r_max"]) or not f["exponent"] > 0:
            raise ValueError("fit window needs 0 < r_min < r_max and a positive exponent")
        kind = self.boundary_amplitude["kind"]
        if kind not in ("zero", "from_traces"):
            raise ValueError("boundary_amplitude.kind must be 'zero' or 'from_traces'")
        if kind == "from_traces" and (self.body is None or self.body["traces"]["kind"] != "manufactured"):
            raise ValueError("boundary_amplitude 'from_traces' needs a body with manufactured traces")
        if self.body is not None and abs(self.body["radius"] - g["R0"]) > 1e-12:
            raise ValueError("grid.R0 must equal the body radius")

    # -- emitting
    def emit(self):
        return {
            "version": 1,
            "force": [dict(b) for b in self.force],
            "body": None if self.body is None else json.loads(json.dumps(self.body)),
            "exponents": self.exponents if isinstance(self.exponents, str) else dict(self.exponents),
            "perturbation": dict(self.perturbation),
            "grid": dict(self.grid),
            "tolerances": dict(self.tolerances),
            "fit": dict(self.fit),
            "boundary_amplitude": dict(self.boundary_amplitude),
        }

    # -- model objects
    def source(self):
        return SourceTerm(tuple(SourceBump(tuple(b["center"]), b["radius"], tuple(b["amplitude"]))
                                for b in self.force))

    def scene(self):
        body = None
        if self.body is not None:
            tr = self.body["traces"]
            spec = BodySpec(self.body["radius"])
            if tr["kind"] == "manufactured":
                body = manufactured_traces(tuple(tr["x_c"]), tuple(tr["F0"]), spec, tr["n_nodes"])
            else:
                body = BodySpec(spec.radius, read_traces(os.path.join(self.base_dir, tr["path"])))
        scene = Scene(self.source(), body)
        for b in self.force:
            if body is not None and math.hypot(*b["center"]) - b["radius"] < body.radius:
                raise ConfigError("force bumps must lie outside the body")
        return scene

    def decay_exponents(self, scene=None):
        if isinstance(self.exponents, dict):
            return asy.DecayExponents(self.exponents["A"], self.exponents["B"])
        return asy.decay_exponents(net_force(scene or self.scene()).F)

    def perturbation_model(self):
        p = self.perturbation
        return asy.PerturbationModel(p["nu"], p["epsilon"], p["profile"])

    def polar_grid(self):
        return asy.PolarGrid(**self.grid)


def _line_of(text, key):
    if text is None or key is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def load_scene(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scene file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    return SceneConfig.parse(data, text, os.path.dirname(os.path.abspath(path)))


TRACE_COLUMNS = ["theta", "u1", "u2", "p", "du1_dx1", "du1_dx2", "du2_dx1", "du2_dx2"]


def read_traces(path):
    """Boundary traces from a CSV with columns theta,u1,u2,p,du1_dx1,du1_dx2,du2_dx1,du2_dx2."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        arr = np.array([[float(r[c]) for c in TRACE_COLUMNS] for r in rows])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read traces {path}: {exc}") from None
    n = len(arr)
    if n < 8 or not np.allclose(arr[:, 0], 2 * np.pi * np.arange(n) / n, atol=1e-9):
        raise ConfigError("trace file must sample theta_k = 2 pi k / n uniformly")
    return BoundaryTraces(arr[:, 1:3], arr[:, 3], arr[:, 4:8].reshape(n, 2, 2))


# --------------------------------------------------------------- output

def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


# ------------------------------------------------------------- sampling

_RAY = re.compile(r"^([+-]?)(\d*\.?\d*(?:[eE][+-]?\d+)?)\*?(pi)?(?:/(\d+(?:\.\d*)?))?$")


def parse_ray(tok):
    """An angle such as 0, 1.2, pi, -pi/2 or 3pi/4."""
    m = _RAY.match(tok.strip().replace(" ", ""))
    if not m or not (m.group(2) or m.group(3)):
        raise ConfigError(f"cannot parse ray {tok!r}")
    sign = -1.0 if m.group(1) == "-" else 1.0
    coef = float(m.group(2)) if m.group(2) else 1.0
    val = coef * (math.pi if m.group(3) else 1.0)
    if m.group(4):
        val /= float(m.group(4))
    return sign * val


def parse_rays(spec):
    if spec is None:
        return list(verify.DEFAULT_RAYS)
    return [parse_ray(tok) for tok in spec.split(",")]


def parse_radii(spec, default=(20.0, 80.0, 9)):
    lo, hi, n = default
    if spec is not None:
        try:
            a, b, c = spec.split(":")
            lo, hi, n = float(a), float(b), int(c)
        except ValueError:
            raise ConfigError("radii must be given as min:max:count") from None
    if not (0 < lo < hi) or n < 1:
        raise ConfigError("radii need 0 < min < max and count >= 1")
    return np.geomspace(lo, hi, n)


# ------------------------------------------------------------- commands

def cmd_field(cfg, quantity, rays, radii, tol):
    scene = cfg.scene()
    exps = cfg.decay_exponents(scene) if quantity == "a" else None
    rows = []
    for t in rays:
        for r in radii:
            x = np.array([r * math.cos(t), r * math.sin(t)])
            try:
                if quantity == "u":
                    u = oseen_velocity(x, scene, tol)[0]
                    rows.append([CSV_VERSION, x[0], x[1], r, t, u[0], u[1], u[0], u[1], 0.0])
                else:
                    w = oseen_vorticity(x, scene, tol)
                    target = 0.0 - wake_exponent(r, t)
                    mant = float(np.squeeze(w.rescaled(target)))
                    if quantity == "omega":
                        rows.append([CSV_VERSION, x[0], x[1], r, t, mant * math.exp(target), mant, target])
                    else:
                        rows.append([CSV_VERSION, x[0], x[1], r, t,
                                     float(np.squeeze(asy.omega_to_a(w, r, t, exps)))])
            except (QuadratureError, SingularityError, DomainError, FloatingPointError) as exc:
                raise NumericalFailure(f"evaluation failed at x=({x[0]:.6g}, {x[1]:.6g}): {exc}") from None
    header = {"u": ["version", "x1", "x2", "r", "theta", "u1", "u2", "mantissa1", "mantissa2", "log_scale"],
              "omega": ["version", "x1", "x2", "r", "theta", "omega", "mantissa", "log_scale"],
              "a": ["version", "x1", "x2", "r", "theta", "a"]}[quantity]
    return csv_text(header, rows)


ASYMPTOTE_HEADER = ["version", "kind", "theta", "r", "log_scale", "omega", "classical", "improved",
                    "classical_error", "improved_error"]


def cmd_asymptote(cfg, rays, radii, tol, fit=False):
    scene = cfg.scene()
    try:
        rows = verify.compare_asymptotes(scene, rays, radii, tol)
    except (QuadratureError, SingularityError, DomainError) as exc:
        raise NumericalFailure(str(exc)) from None
    out = [[CSV_VERSION, "sample", r["theta"], r["r"], r["log_scale"], r["omega"], r["classical"],
            r["improved"], r["classical_error"], r["improved_error"]] for r in rows]
    if fit:
        cl = verify.asymptote_slopes(rows, "classical_error")
        im = verify.asymptote_slopes(rows, "improved_error")
        for t in rays:
            out.append([CSV_VERSION, "slope", float(t), None, None, None, None, None,
                        None if cl[float(t)] is None else cl[float(t)].slope,
                        None if im[float(t)] is None else im[float(t)].slope])
    return csv_text(ASYMPTOTE_HEADER, out)


def cmd_verify(check_id, seed):
    reports = verify.run_checks(check_id, seed)
    return verify.reports_to_json(reports), all(r.passed for r in reports)


def boundary_amplitude(cfg, scene, exps):
    if cfg.boundary_amplitude["kind"] == "zero":
        return None
    return asy.boundary_from_manufactured(scene.body, exps, scene.body.traces.n)


def cmd_picard(cfg, tol=None):
    scene = cfg.scene()
    exps = cfg.decay_exponents(scene)
    coeffs = asy.transformed_coefficients(exps, cfg.perturbation_model(), scene.source)
    grid = cfg.polar_grid()
    t = cfg.tolerances
    result = asy.picard_solve(coeffs, grid, boundary_amplitude(cfg, scene, exps), max_iter=t["max_iter"],
                              tol=tol if tol is not None else t["picard"], quad_tol=t["quad"])
    f = cfg.fit
    r = grid.r
    lo, hi = max(f["r_min"], r[0]), min(f["r_max"], r[-1])
    fit = asy.fit_mu(result.field, (lo, hi), f["exponent"])
    field_csv = csv_text(["version", "r", "theta", "a", "da_dr", "da_dtheta"],
                         [[CSV_VERSION, *row] for row in result.field.rows()])
    mu_csv = csv_text(["version", "theta", "mu", "stability"],
                      [[CSV_VERSION, th, m, s] for th, m, s in zip(fit.theta, fit.mu, fit.stability)])
    log = {"version": CSV_VERSION, "converged": result.converged, "iterations": result.iterations,
           "monotone": result.monotone, "exponents": {"A": exps.A, "B": exps.B},
           "nu": coeffs.pert.nu, "epsilon": coeffs.pert.epsilon, "log": result.log(),
           "bounds": result.field.bounds(coeffs.pert.epsilon), "fit_window": list(fit.window)}
    return field_csv, mu_csv, json.dumps(verify._jsonable(log), indent=2, sort_keys=True) + "\n"


class NumericalFailure(RuntimeError):
    pass


# ----------------------------------------------------------------- main

def build_parser():
    p = argparse.ArgumentParser(prog="oseenwake", description="Oseen wake asymptotics toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scene=True):
        if scene:
            sp.add_argument("--scene", required=True, help="scene JSON file")
        sp.add_argument("--out", default=None, help="output path (stdout when omitted)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None)

    f = sub.add_parser("field", help="sample u, omega or a along rays")
    common(f)
    f.add_argument("--quantity", choices=["u", "omega", "a"], default="omega")
    f.add_argument("--rays", default=None, help="comma separated angles, e.g. 0,pi/2")
    f.add_argument("--radii", default=None, help="min:max:count, geometric")
    a = sub.add_parser("asymptote", help="compare the vorticity with its asymptotes")
    common(a)
    a.add_argument("--rays", default=None)
    a.add_argument("--radii", default=None)
    a.add_argument("--fit", action="store_true", help="append fitted error slopes per ray")
    v = sub.add_parser("verify", help="run numerical checks")
    common(v, scene=False)
    v.add_argument("check", nargs="?", default="all", help="check id or 'all'")
    pc = sub.add_parser("picard", help="solve the amplitude fixed point and fit mu")
    common(pc)
    pc.add_argument("--fit", action="store_true", help="accepted for symmetry; the fit always runs")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            if args.check != "all" and args.check not in verify.CHECKS:
                print(f"unknown check id {args.check!r}; known: {', '.join(verify.CHECKS)}", file=sys.stderr)
                return EXIT_CONFIG
            text, ok = cmd_verify(args.check, args.seed)
            _emit(text, args.out)
            return EXIT_OK if ok else EXIT_FAIL
        cfg = load_scene(args.scene)
        if args.command == "field":
            tol = args.tol or cfg.tolerances["quad"]
            _emit(cmd_field(cfg, args.quantity, parse_rays(args.rays), parse_radii(args.radii, (2.0, 80.0, 20)), tol),
                  args.out)
        elif args.command == "asymptote":
            tol = args.tol or cfg.tolerances["quad"]
            _emit(cmd_asymptote(cfg, parse_rays(args.rays), parse_radii(args.radii), tol, args.fit), args.out)
        elif args.command == "picard":
            field_csv, mu_csv, log = cmd_picard(cfg, args.tol)
            prefix = args.out or "picard"
            atomic_write(prefix + "_field.csv", field_csv)
            atomic_write(prefix + "_mu.csv", mu_csv)
            atomic_write(prefix + "_log.json", log)
        return EXIT_OK
    except (ConfigError, ConfigurationError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except asy.NonContractionError as exc:
        print(f"non-contraction: nu={exc.nu}, observed ratio {exc.ratio:.4g}", file=sys.stderr)
        return EXIT_NONCONTRACTION
    except (NumericalFailure, asy.ConvergenceError, asy.FitError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
