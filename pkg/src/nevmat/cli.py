"""``nevmat`` command-line front end.

Every subcommand writes JSON or CSV to ``--out`` (default stdout).  Errors are
reported as ``ErrorName: message`` on stderr with exit code 2 (configuration),
3 (numeric instability) or 4 (domain error).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import growth, jacobi, omega, regvar, transfer
from .core import FamilySpec, HamburgerHamiltonian
from .errors import ConfigParseError, DomainError, NevmatError

TASKS = ("monodromy", "scan", "fit", "certificate", "zeros", "classify", "curves", "roundtrip")


# ------------------------------------------------------------------- loading

def load_json(value):
    """Parse inline JSON, ``@path`` or a path to a JSON file."""
    if isinstance(value, (dict, list)):
        return value
    text = str(value).strip()
    if not text.startswith(("{", "[")):
        path = Path(text[1:] if text.startswith("@") else text)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc}") from None


def source_from(kind: str, value):
    d = load_json(value)
    try:
        if kind == "hamiltonian":
            return HamburgerHamiltonian.from_dict(d)
        if kind == "family":
            return FamilySpec.from_dict(d)
        if kind == "jacobi":
            return jacobi.JacobiParameters.from_dict(d)
        if kind == "power":
            return jacobi.PowerSpec.from_dict(d)
    except (TypeError, AttributeError) as exc:
        raise ConfigParseError(f"malformed {kind} description: {exc}") from None
    raise ConfigParseError(f"unknown source kind {kind!r}")


def hamiltonian_of(src, N: Optional[int]) -> HamburgerHamiltonian:
    s = growth.as_source(src)
    if N is None:
        if s.max_intervals is None:
            raise ConfigParseError("--N is required for family and power sources")
        N = s.max_intervals
    return s.hamiltonian(int(N))


def parse_complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigParseError(f"cannot parse {text!r} as a complex number") from None


def parse_K(value) -> Optional[float]:
    if value is None or str(value) == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise ConfigParseError(f"truncation K must be a number or 'auto', got {value!r}") from None


# --------------------------------------------------------------------- tasks

def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _cplx(v: complex) -> list:
    return [float(v.real), float(v.imag)]


def task_classify(spec: jacobi.PowerSpec) -> str:
    return _json(jacobi.classify(spec).to_dict())


def task_monodromy(src, z: complex, N=None) -> str:
    H = hamiltonian_of(src, N)
    W = transfer.monodromy(H, z)
    ne = transfer.nevanlinna_entries(W)
    return _json({
        "z": _cplx(z), "N": H.N,
        "entries": [[_cplx(v) for v in row] for row in W.entries],
        "logScale": W.log_scale,
        "det": _cplx(W.det()),
        "logNorm": transfer.log_norm(W),
        "nevanlinna": {k: _cplx(getattr(ne, k)) for k in "ABCD"},
    })


def task_scan(src, radii, K=None, c=1.0) -> str:
    s = growth.scan(src, radii, growth.TruncationRule(K=K), c=c)
    buf = io.StringIO()
    growth.write_scan_csv(s, buf)
    return buf.getvalue()


def task_fit(scan_path, window=None) -> str:
    s = growth.read_scan_csv(scan_path)
    return _json(growth.fit_order(s, window=window).to_dict())


def _auto_N(s, r: float, N, K=None):
    if N is None and s.max_intervals is None:
        rule = growth.TruncationRule(K=K)
        cal = growth.calibrate(s, r, rule)
        N = rule.intervals(cal.K, s.h(r), None)
    return N


def task_certificate(src, r: float, c=1.0, N=None) -> str:
    H = hamiltonian_of(src, _auto_N(growth.as_source(src), r, N))
    return _json(omega.certificate(H, r, c).to_dict())


def task_zeros(src, entry: str, r_max: float, density=4.0, N=None, K=None) -> str:
    H = hamiltonian_of(src, _auto_N(growth.as_source(src), r_max, N, K))
    z = growth.count_zeros(H, entry, r_max, density)
    out = {"entry": z.entry, "N": H.N, "density": z.density, "zeros": z.zeros.tolist(),
           "radii": z.radii.tolist(), "counts": z.counts.tolist()}
    try:
        out["exponent"] = growth.convergence_exponent(z.radii, z.counts)
    except DomainError:
        out["exponent"] = None
    return _json(out)


def task_curves(spec: FamilySpec, radii) -> str:
    cur = regvar.envelopes(spec.length_law, spec.increment_law)
    lines = ["r,k,h,m"]
    for r in radii:
        lines.append(f"{float(r)!r},{float(cur.k(r))!r},{float(cur.h(r))!r},{float(cur.m(r))!r}")
    return "\n".join(lines) + "\n"


def task_roundtrip(src, N=None) -> str:
    if isinstance(src, jacobi.PowerSpec):
        src = jacobi.generate_power(src, (N or 500) - 1)
    if isinstance(src, jacobi.JacobiParameters):
        n = min(len(src), (N or len(src) + 1) - 1)
        P = jacobi.JacobiParameters(src.a[:n], src.b[:n], src.n0)
        H = jacobi.jacobi_to_hamiltonian(P, n + 1)
        back = jacobi.hamiltonian_to_jacobi(H)
        err_a = float(np.max(np.abs(back.a - P.a) / np.maximum(np.abs(P.a), 1e-300)))
        err_b = float(np.max(np.abs(back.b - P.b) / P.b))
        return _json({"direction": "jacobi->hamiltonian->jacobi", "N": n + 1,
                      "maxRelErrA": err_a, "maxRelErrB": err_b})
    H = hamiltonian_of(src, N)
    P = jacobi.hamiltonian_to_jacobi(H)
    H2 = jacobi.jacobi_to_hamiltonian(P, H.N)
    err_l = float(np.max(np.abs(H2.lengths - H.lengths) / H.lengths))
    err_phi = float(np.max(np.abs(np.sin(H2.angles - H.angles))))
    return _json({"direction": "hamiltonian->jacobi->hamiltonian", "N": H.N,
                  "maxRelErrLength": err_l, "maxAngleErrModPi": err_phi})


def task_selftest() -> tuple:
    """Short internal consistency checks; returns ``(report, ok)``."""
    checks = {}
    T = transfer.interval_matrix(2.0, 0.0, 3.0)
    checks["interval factor"] = bool(np.allclose(T, [[1, 6], [0, 1]]))
    rng = np.random.default_rng(0)
    H = HamburgerHamiltonian(rng.uniform(0.1, 1, 200), np.cumsum(rng.uniform(0.2, 2, 200)))
    W = transfer.monodromy(H, 50j)
    checks["determinant one"] = abs(W.det() - 1) < 1e-9
    Wr = transfer.monodromy(H, 50j, order="reverse")
    checks["order reversal"] = bool(np.max(np.abs(W.entries - Wr.entries)) < 1e-10
                                    and abs(W.log_scale - Wr.log_scale) < 1e-10)
    P = omega.OmegaPrefix.from_hamiltonian(H)
    checks["det omega oracle"] = abs(omega.det_omega(P, 3, 60)
                                     - omega.det_omega_bruteforce(H, 3, 60)) < 1e-10 * \
        omega.det_omega_bruteforce(H, 3, 60)
    params = jacobi.JacobiParameters(rng.uniform(-5, 5, 99), rng.uniform(0.5, 5, 99))
    back = jacobi.hamiltonian_to_jacobi(jacobi.jacobi_to_hamiltonian(params, 100))
    checks["jacobi round trip"] = bool(np.allclose(back.b, params.b, rtol=1e-9)
                                       and np.allclose(back.a, params.a, rtol=1e-9))
    cls = jacobi.classify(jacobi.PowerSpec(1.75, 1.75, 1, -2, 2, 0))
    checks["classification"] = cls.case == "SimplyCritical" and abs(
        cls.predicted_order - 2 / 3) < 1e-12
    ok = all(checks.values())
    return _json({"checks": checks, "ok": ok}), ok


# ---------------------------------------------------------------- config run

@dataclass
class ExperimentConfig:
    source_kind: Optional[str]
    source: object
    task: str
    r_min: float = 10.0
    r_max: float = 300.0
    points_per_decade: float = 20.0
    points: Optional[int] = None
    K: Optional[float] = None
    output: Optional[str] = None
    params: dict = field(default_factory=dict)

    def radii(self) -> np.ndarray:
        return growth.geometric_grid(self.r_min, self.r_max, self.points,
                                     self.points_per_decade)

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigParseError("config must be a JSON object")
        task = d.get("task")
        if task not in TASKS:
            raise ConfigParseError(f"task must be one of {', '.join(TASKS)}; got {task!r}")
        src = d.get("source") or {}
        kind = None
        value = None
        if task != "fit":
            kinds = [k for k in ("hamiltonian", "family", "jacobi", "power") if k in src]
            if len(kinds) != 1:
                raise ConfigParseError("source must name exactly one of "
                                       "hamiltonian, family, jacobi, power")
            kind = kinds[0]
            value = src[kind]
            if isinstance(value, str) and not value.strip().startswith("{"):
                value = str(base / value)
            value = source_from(kind, value)
        grid = d.get("grid", {})
        cfg = cls(kind, value, task,
                  r_min=float(grid.get("rMin", 10.0)), r_max=float(grid.get("rMax", 300.0)),
                  points_per_decade=float(grid.get("pointsPerDecade", 20.0)),
                  points=grid.get("points"),
                  K=parse_K(d.get("truncation", {}).get("K", "auto")),
                  output=(d.get("output") or {}).get("path"),
                  params=dict(d.get("params", {})))
        if not cfg.r_min < cfg.r_max:
            raise ConfigParseError("grid.rMin must be below grid.rMax")
        if cfg.points_per_decade < 5:
            raise ConfigParseError("grid.pointsPerDecade must be at least 5")
        if cfg.output is not None and not Path(cfg.output).is_absolute():
            cfg.output = str(base / cfg.output)
        return cfg


def run(config: ExperimentConfig) -> str:
    """Execute one configured task and return its serialised output."""
    p = config.params
    src = config.source
    t = config.task
    if t == "classify":
        if not isinstance(src, jacobi.PowerSpec):
            raise ConfigParseError("classify needs a power source")
        return task_classify(src)
    if t == "monodromy":
        return task_monodromy(src, parse_complex(p.get("z", "1j")), p.get("N"))
    if t == "scan":
        return task_scan(src, config.radii(), config.K, float(p.get("c", 1.0)))
    if t == "fit":
        window = p.get("window")
        return task_fit(p["scan"], tuple(window) if window else None)
    if t == "certificate":
        return task_certificate(src, float(p.get("r", config.r_max)), float(p.get("c", 1.0)),
                                p.get("N"))
    if t == "zeros":
        return task_zeros(src, p.get("entry", "B"), float(p.get("rMax", config.r_max)),
                          float(p.get("density", 4.0)), p.get("N"), config.K)
    if t == "curves":
        if not isinstance(src, FamilySpec):
            raise ConfigParseError("curves needs a family source")
        return task_curves(src, config.radii())
    if t == "roundtrip":
        return task_roundtrip(src, p.get("N"))
    raise ConfigParseError(f"unknown task {t!r}")


# ---------------------------------------------------------------------- argv

def _add_source(p: argparse.ArgumentParser, required=True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--hamiltonian", metavar="JSON", help="explicit Hamiltonian")
    g.add_argument("--family", metavar="JSON", help="family specification")
    g.add_argument("--jacobi", metavar="JSON", help="Jacobi parameters")
    g.add_argument("--power", metavar="JSON", help="power-asymptotic Jacobi spec")


def _source(args):
    for kind in ("hamiltonian", "family", "jacobi", "power"):
        v = getattr(args, kind, None)
        if v is not None:
            return source_from(kind, v)
    raise ConfigParseError("no source given")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rmin", type=float, default=10.0)
    p.add_argument("--rmax", type=float, default=300.0)
    p.add_argument("--points", type=int, default=None, help="number of radii")
    p.add_argument("--per-decade", type=float, default=20.0)


def _grid(args) -> np.ndarray:
    if not args.rmin < args.rmax:
        raise ConfigParseError("--rmin must be below --rmax")
    if args.points is None and args.per_decade < 5:
        raise ConfigParseError("--per-decade must be at least 5")
    return growth.geometric_grid(args.rmin, args.rmax, args.points, args.per_decade)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nevmat", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        return p

    p = cmd("classify", "classify a power-asymptotic Jacobi matrix")
    p.add_argument("--power", required=True, metavar="JSON")

    p = cmd("from-jacobi", "Jacobi parameters to Hamburger Hamiltonian")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--jacobi", metavar="JSON")
    g.add_argument("--power", metavar="JSON")
    p.add_argument("--N", type=int, default=None, help="number of intervals")

    p = cmd("to-jacobi", "Hamburger Hamiltonian to Jacobi parameters")
    p.add_argument("--hamiltonian", required=True, metavar="JSON")

    p = cmd("monodromy", "monodromy matrix at one point")
    _add_source(p)
    p.add_argument("--z", required=True)
    p.add_argument("--N", type=int, default=None)

    p = cmd("scan", "growth scan along the imaginary axis (CSV)")
    _add_source(p)
    _add_grid(p)
    p.add_argument("--K", default="auto", help="truncation constant or 'auto'")
    p.add_argument("--c", type=float, default=1.0, help="certificate constant")

    p = cmd("fit", "order fit of a scan CSV")
    p.add_argument("--scan", required=True)
    p.add_argument("--rmin", type=float, default=None)
    p.add_argument("--rmax", type=float, default=None)

    p = cmd("certificate", "greedy lower-bound certificate")
    _add_source(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--N", type=int, default=None)

    p = cmd("zeros", "real zeros of a Nevanlinna entry")
    _add_source(p)
    p.add_argument("--entry", default="B", choices=list("ABCD"))
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--density", type=float, default=4.0)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--K", default="auto")

    p = cmd("curves", "envelope curves k, h, m of a family (CSV)")
    p.add_argument("--family", required=True, metavar="JSON")
    _add_grid(p)

    p = cmd("roundtrip", "dictionary round trip errors")
    _add_source(p)
    p.add_argument("--N", type=int, default=None)

    cmd("selftest", "quick internal consistency checks")

    p = cmd("run", "run an experiment config")
    p.add_argument("config")
    return ap


def _dispatch(args) -> tuple:
    c = args.command
    if c == "classify":
        return task_classify(source_from("power", args.power)), 0
    if c == "from-jacobi":
        src = _source(args)
        if isinstance(src, jacobi.PowerSpec):
            if args.N is None:
                raise ConfigParseError("--N is required with --power")
            src = jacobi.generate_power(src, args.N - 1)
        N = args.N or len(src) + 1
        return _json(jacobi.jacobi_to_hamiltonian(src, N).to_dict()), 0
    if c == "to-jacobi":
        H = source_from("hamiltonian", args.hamiltonian)
        return _json(jacobi.hamiltonian_to_jacobi(H).to_dict()), 0
    if c == "monodromy":
        return task_monodromy(_source(args), parse_complex(args.z), args.N), 0
    if c == "scan":
        return task_scan(_source(args), _grid(args), parse_K(args.K), args.c), 0
    if c == "fit":
        window = None
        if args.rmin is not None or args.rmax is not None:
            window = (args.rmin or 0.0, args.rmax or math.inf)
        return task_fit(args.scan, window), 0
    if c == "certificate":
        return task_certificate(_source(args), args.r, args.c, args.N), 0
    if c == "zeros":
        return task_zeros(_source(args), args.entry, args.rmax, args.density, args.N,
                          parse_K(args.K)), 0
    if c == "curves":
        return task_curves(source_from("family", args.family), _grid(args)), 0
    if c == "roundtrip":
        return task_roundtrip(_source(args), args.N), 0
    if c == "selftest":
        text, ok = task_selftest()
        return text, 0 if ok else 3
    if c == "run":
        path = Path(args.config)
        cfg = ExperimentConfig.from_dict(load_json(str(path)), path.parent)
        if args.out is None and cfg.output is not None:
            args.out = cfg.output
        return run(cfg), 0
    raise ConfigParseError(f"unknown command {c!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text, code = _dispatch(args)
    except NevmatError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return DomainError.exit_code
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
