"""Command line front end: classify, reduce, transform, catalog, ode and pde.

Numbers in JSON input are read as exact rationals, so `0.5` stays 1/2 and the
exact code paths are used whenever every input is rational. Pass --inexact to
force floating point. Output floats carry 17 significant digits; results that
are exact non-integer rationals are additionally listed under "exact_values"
as "p/q" strings keyed by their JSON path.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import limit_ode, nlkg_sim
from .classifier import classify
from .cubic_system import (
    ALL_MODELS,
    GROUPS,
    NAMED_MODELS,
    Coefficients,
    GL2Transform,
    ModelSystemId,
    model_catalog,
    resolve_system,
    transform_by_substitution,
)
from .errors import BlowUpError, InsufficientSamplesError, InvalidInputError, NlkgError
from .matrix_rep import StructureMatrix, coeffs_to_matrix, conjugate, matrix_to_coeffs
from .reducer import reduce


# --- JSON output ----------------------------------------------------------------

def _plain(obj, path, exact):
    """Convert to JSON-ready values, collecting exact non-integer rationals."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, ModelSystemId):
        return str(obj)
    if isinstance(obj, (Fraction, int)) or (isinstance(obj, np.integer)):
        f = Fraction(int(obj)) if not isinstance(obj, Fraction) else obj
        if f.denominator == 1:
            return int(f)
        exact[path] = f"{f.numerator}/{f.denominator}"
        return float(f)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): _plain(v, f"{path}/{k}", exact) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v, f"{path}/{i}", exact) for i, v in enumerate(obj)]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            return "null"
        text = format(v, ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(x)}" for k, x in v.items()) + "}"
    if isinstance(v, list):
        return "[" + ", ".join(_encode(x) for x in v) + "]"
    return json.dumps(v)


def dumps(payload, annotate=True):
    """Serialize with 17 significant digits; adds "exact_values" when any were found."""
    exact = {}
    out = _plain(payload, "", exact)
    if annotate and exact and isinstance(out, dict):
        out["exact_values"] = exact
    return _encode(out)


# --- input ------------------------------------------------------------------------

def _read_source(text):
    """Inline JSON, @path for a file, or - for stdin."""
    if text == "-":
        return sys.stdin.read()
    if text.startswith("@"):
        try:
            return Path(text[1:]).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {text[1:]}: {exc}") from exc
    return text


def _load_json(text, inexact=False):
    try:
        obj = json.loads(text, parse_float=Fraction, parse_int=Fraction)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"bad JSON: {exc}") from exc
    return _to_float(obj) if inexact else obj


def _to_float(obj):
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, list):
        return [_to_float(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _to_float(v) for k, v in obj.items()}
    return obj


def _system_from_args(args) -> Coefficients:
    given = [x for x in (args.lam, args.matrix, getattr(args, "system", None)) if x is not None]
    if len(given) != 1:
        raise InvalidInputError("give exactly one of --lambda, --matrix, --system")
    if args.lam is not None:
        return Coefficients.from_json(_load_json(_read_source(args.lam), args.inexact))
    if args.matrix is not None:
        return matrix_to_coeffs(StructureMatrix.from_json(_load_json(_read_source(args.matrix), args.inexact)))
    text = args.system.strip()
    if text[:1] in "[{@-":
        return resolve_system(_load_json(_read_source(text), args.inexact))
    return resolve_system(text)


# --- subcommands ------------------------------------------------------------------

def cmd_classify(args):
    c = _system_from_args(args)
    label = classify(c)
    out = label.to_json()
    out["lambda"] = list(c.lam)
    out["details"] = label.details
    return dumps(out)


def _reduction_json(res):
    return {
        "family": res.family,
        "model_id": str(res.model),
        "model_coefficients": list(res.model_coeffs.lam),
        "chain": [[list(r) for r in m.rows] for m in res.chain],
        "total": [list(r) for r in res.total.rows],
        "residual": res.residual,
        "exact": res.exact,
        "params": res.params,
    }


def cmd_reduce(args):
    c = _system_from_args(args)
    out = _reduction_json(reduce(c))
    out["lambda"] = list(c.lam)
    return dumps(out)


def cmd_transform(args):
    c = _system_from_args(args)
    m = GL2Transform.from_json(_load_json(_read_source(args.m), args.inexact))
    by_sub = transform_by_substitution(c, m)
    by_matrix = matrix_to_coeffs(conjugate(coeffs_to_matrix(c), m))
    return dumps({
        "lambda": list(by_sub.lam),
        "lambda_by_matrix": list(by_matrix.lam),
        "A": [list(r) for r in coeffs_to_matrix(by_sub).rows],
        "det": m.det,
    })


def cmd_catalog(args):
    models = ALL_MODELS if args.signed else NAMED_MODELS
    out = []
    for mid in models:
        label = classify(model_catalog(mid))
        out.append({"model_id": str(mid), "kind": mid.kind, "family": label.family,
                    "roster_index": label.roster_index, "group": GROUPS[mid.kind],
                    "lambda": list(model_catalog(mid).lam)})
    return dumps({"models": out})


def _alpha0(values):
    if len(values) != 4:
        raise InvalidInputError("--alpha0 needs four numbers: Re a1, Im a1, Re a2, Im a2")
    return np.array([complex(values[0], values[1]), complex(values[2], values[3])])


def _ode_table(c, s, alpha, experimental, system_kind):
    quantities = limit_ode.conserved_quantities(c)
    header = ["s", "re_alpha1", "im_alpha1", "re_alpha2", "im_alpha2"]
    header += [q.label() for q in quantities]
    cols = [s, alpha[:, 0].real, alpha[:, 0].imag, alpha[:, 1].real, alpha[:, 1].imag]
    cols += [q.value_at(np.moveaxis(alpha, 1, 0)) for q in quantities]
    if experimental and system_kind in ("New2", "New3"):
        b1, b2 = limit_ode.pairing_invariants(np.moveaxis(alpha, 1, 0), system_kind)
        header += ["beta1", "beta2"]
        cols += [b1, b2]
    return header, np.column_stack(cols)


def _write_table(header, rows, fmt, stream):
    if fmt == "json":
        stream.write(dumps({"columns": header, "rows": rows.tolist()}) + "\n")
        return
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format(float(x), ".17g") for x in r])


def cmd_ode(args):
    c = _system_from_args(args)
    y0 = _alpha0(args.alpha0)
    kind = None
    if args.system and args.system[:1] not in "[{@-":
        kind = ModelSystemId.parse(args.system).kind
    buf = io.StringIO()
    try:
        if args.nonresonant:
            tau0 = args.tau0
            tau_end = tau0 * math.exp(args.s_end * math.cosh(args.kappa * args.z) ** 2)
            tau, alpha = limit_ode.integrate_nonresonant(c, y0, tau0, tau_end, args.dt, args.z, args.kappa)
            s = limit_ode.s_of_tau(tau, args.z, tau0, args.kappa)
            header, rows = _ode_table(c, s, alpha, args.experimental, kind)
            header.insert(1, "tau")
            rows = np.column_stack([rows[:, :1], tau, rows[:, 1:]])
        else:
            tr = limit_ode.integrate(c, y0, args.s_end, args.dt)
            header, rows = _ode_table(c, tr.s, tr.alpha, args.experimental, kind)
    except BlowUpError as exc:
        if exc.partial is not None:
            s, alpha = exc.partial
            header, rows = _ode_table(c, s, alpha, args.experimental, kind)
            _write_table(header, rows, args.format, sys.stdout)
        raise
    _write_table(header, rows, args.format, buf)
    return buf.getvalue().rstrip("\n")


def _write_pde_outputs(out_dir, cfg, result, diags, fit, fit_error):
    out_dir.mkdir(parents=True, exist_ok=True)
    state = result.final
    x = cfg.grid()
    with open(out_dir / "final_state.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["x", "u1", "v1", "u2", "v2"])
        for row in zip(x, state.u1, state.v1, state.u2, state.v2):
            w.writerow([format(float(v), ".17g") for v in row])
    np.savez_compressed(out_dir / "snapshots.npz", t=result.times,
                        x=result.snapshots[0].x if result.snapshots else np.array([]),
                        u=np.array([s.u for s in result.snapshots]),
                        v=np.array([s.v for s in result.snapshots]),
                        sup_norms=result.sup_norms, energies=result.energies)
    with open(out_dir / "diagnostics.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["tau", "z", "re_alpha1", "im_alpha1", "re_alpha2", "im_alpha2", "off_support"])
        for d in diags:
            off = set(d.off_support.tolist())
            for zz, a1, a2 in zip(d.z, d.alpha1, d.alpha2):
                w.writerow([format(v, ".17g") for v in (d.tau, zz, a1.real, a1.imag, a2.real, a2.imag)]
                           + [int(zz in off)])
    report = {"fit": None if fit is None else fit.to_json(), "fit_error": fit_error}
    (out_dir / "fit.json").write_text(dumps(report) + "\n")


def cmd_pde(args):
    try:
        obj = json.loads(_read_source(args.config))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"bad JSON: {exc}") from exc
    cfg = nlkg_sim.SimConfig.from_json(obj)
    result = nlkg_sim.run(cfg)
    diags, fit, fit_error = [], None, None
    if result.error is None and cfg.taus:
        diags = nlkg_sim.extract_profiles(result, cfg)
        try:
            fit = nlkg_sim.fit_log_growth(diags, cfg.z[0])
        except InsufficientSamplesError as exc:
            fit_error = str(exc)
    if args.out_dir:
        _write_pde_outputs(Path(args.out_dir), cfg, result, diags, fit, fit_error)
    summary = {
        "steps": result.steps,
        "t_final": result.final.t,
        "support_ratio": result.support_ratio,
        "energy_drift_per_1000": nlkg_sim.energy_drift_per_1000(result) if len(result.energies) else None,
        "fit": None if fit is None else fit.to_json(),
        "fit_error": fit_error,
    }
    if result.error is not None:
        sys.stdout.write(dumps(summary) + "\n")
        raise result.error
    return dumps(summary)


# --- parser -----------------------------------------------------------------------

def _add_system(p, with_system=False):
    p.add_argument("--lambda", dest="lam", help="coefficients as JSON list or {\"lambda\": [...]}, @file or -")
    p.add_argument("--matrix", help="structure matrix as {\"A\": [[...],[...],[...]]}, @file or -")
    if with_system:
        p.add_argument("--system", help="model id such as NewA(1), or coefficient JSON")
    p.add_argument("--inexact", action="store_true", help="read numbers as floats")


def build_parser():
    parser = argparse.ArgumentParser(prog="nlkg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="family and model system of a cubic system")
    _add_system(p, with_system=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reduce", help="explicit change of unknowns to the model system")
    _add_system(p, with_system=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("transform", help="coefficients after v = M u")
    _add_system(p, with_system=True)
    p.add_argument("--m", required=True, help="transform as {\"m\": [[a,b],[c,d]]}")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("catalog", help="list the model systems")
    p.add_argument("--signed", action="store_true", help="list all 14 signed representatives")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("ode", help="integrate the limit ODE of the profiles")
    _add_system(p, with_system=True)
    p.add_argument("--alpha0", type=float, nargs=4, required=True, metavar="X")
    p.add_argument("--s-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--nonresonant", action="store_true",
                   help="integrate in tau with the oscillating terms kept")
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=limit_ode.DEFAULT_KAPPA)
    p.add_argument("--tau0", type=float, default=1.0)
    p.add_argument("--experimental", action="store_true",
                   help="append pairing invariants for the New2 and New3 systems")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("pde", help="run the Klein-Gordon simulation from a JSON config")
    p.add_argument("--config", required=True, help="SimConfig JSON, @file or -")
    p.add_argument("--out-dir", help="write final_state.csv, snapshots.npz, diagnostics.csv, fit.json")
    p.set_defaults(func=cmd_pde)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except NlkgError as exc:
        sys.stdout.flush()
        sys.stderr.write(dumps(exc.payload(), annotate=False) + "\n")
        return exc.exit_code
    except (ZeroDivisionError, OverflowError) as exc:
        sys.stderr.write(dumps({"error": "numerical_failure", "message": str(exc), "exit_code": 4}) + "\n")
        return 4
    sys.stdout.write(out + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
