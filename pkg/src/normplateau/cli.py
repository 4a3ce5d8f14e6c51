"""Batch front end: one scenario file in, a JSON report and CSV tables out.

Exit status is 0 on success, 2 when a certificate or verification fails,
and 1 on invalid input (schema errors cite the offending field path).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .chains import PolyhedralChain, hausdorff_mass, slice_integral
from .contractors import (
    ContractorError,
    DensityContractor,
    burago_ivanov,
    busemann_projector,
    hahn_projector,
    min_lipschitz_projector,
    orthogonal_contractor,
    verify_contractor,
)
from .geometry import GeometryError, Subspace
from .gross import ContractorField, RectifiableTestSet, default_provider, gross_estimate, zeta_chain
from .norms import Norm, NormError, QuadratureError, busemann_b, psi, section_volume_estimate
from .plateau import (
    DISCRETIZATION_NOTE,
    InfeasibleBoundary,
    PlateauError,
    SimplicialComplex,
    build_program,
    linf_graph_mass,
    lsc_harness,
    random_admissible_pl,
    simplicial_flat_norm,
    solve,
    support_reduction,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {"exact": 1e-12, "float": 1e-7, "quadrature": 1e-5}
EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class InputError(ValueError):
    pass


@dataclass
class Outcome:
    result: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    failed: bool = False
    extra_files: dict = field(default_factory=dict)  # name -> JSON object


@dataclass
class Context:
    scenario: dict
    seed: int
    tol: dict
    threads: int = 1
    debug_overlap: bool = False

    @property
    def inputs(self) -> dict:
        return self.scenario["inputs"]

    @property
    def norm(self) -> Norm:
        if "norm" not in self.scenario:
            raise InputError("norm: required for this command")
        return Norm.from_json(self.scenario["norm"])


# ---------------------------------------------------------------------------
# scenario loading


def load_schema() -> dict:
    text = resources.files("normplateau").joinpath("schemas/scenario.schema.json").read_text()
    return json.loads(text)


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def validate_scenario(obj) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = list(validator.iter_errors(obj))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise InputError(f"scenario invalid at {_field_path(err)}: {err.message}")


def scenario_hash(obj: dict) -> str:
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _subspace(spec: dict, n: int, path: str) -> Subspace:
    try:
        if "full" in spec:
            if spec["full"] != n:
                raise InputError(f"{path}/full: dimension {spec['full']} does not match the norm (n = {n})")
            return Subspace.full(n)
        if "normal" in spec:
            vec = spec["normal"]
            if len(vec) != n:
                raise InputError(f"{path}/normal: expected {n} coordinates")
            return Subspace.hyperplane(vec)
        rows = spec["basis"]
        if any(len(r) != n for r in rows):
            raise InputError(f"{path}/basis: every vector needs {n} coordinates")
        return Subspace.span(*rows)
    except GeometryError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, Subspace):
        return x.basis.T.tolist()
    return x


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_psi(ctx: Context) -> Outcome:
    norm = ctx.norm
    W = _subspace(ctx.inputs["subspace"], norm.n, "/inputs/subspace")
    est = section_volume_estimate(norm, W, budget=ctx.tol["quadrature"])
    return Outcome({"value": psi(norm, W), "sectionVolume": est.value, "errorEstimate": est.error, "exact": est.exact, "method": est.method})


def cmd_section(ctx: Context) -> Outcome:
    norm = ctx.norm
    W = _subspace(ctx.inputs["subspace"], norm.n, "/inputs/subspace")
    est = section_volume_estimate(norm, W, budget=ctx.tol["quadrature"])
    return Outcome({"volume": est.value, "errorEstimate": est.error, "exact": est.exact, "method": est.method})


def cmd_busemann_b(ctx: Context) -> Outcome:
    norm = ctx.norm
    rows = []
    for k, u in enumerate(ctx.inputs["vectors"]):
        if len(u) != norm.n:
            raise InputError(f"/inputs/vectors/{k}: expected {norm.n} coordinates")
        u = [float(Fraction(c)) if isinstance(c, str) else float(c) for c in u]
        rows.append([k, *u, busemann_b(norm, u)])
    header = ["index", *[f"x{i}" for i in range(norm.n)], "b"]
    return Outcome({"values": [r[-1] for r in rows]}, {"busemann_b": (header, rows)})


def _build_contractor(norm: Norm, W: Subspace, how: str, seed: int) -> DensityContractor:
    if how == "auto":
        return default_provider(norm)(W)
    if how == "orthogonal":
        return orthogonal_contractor(W)
    if how == "hahn":
        if W.dim != 1:
            raise InputError("/inputs/construction: hahn needs a line")
        w = W.basis[:, 0]
        return hahn_projector(norm, w / norm(w))
    if how == "busemann":
        return busemann_projector(norm, W, seed=seed)
    return burago_ivanov(norm, W)


def _tail_table(cert) -> dict:
    if not cert.tail_bounds:
        return {}
    rows = [[r.n, r.mass, r.mass_bound, r.integral, r.integral_bound] for r in cert.tail_bounds]
    return {"tail_bounds": (["n", "mass", "mass_bound", "integral", "integral_bound"], rows)}


def cmd_contractor_build(ctx: Context) -> Outcome:
    norm = ctx.norm
    W = _subspace(ctx.inputs["subspace"], norm.n, "/inputs/subspace")
    mu = _build_contractor(norm, W, ctx.inputs.get("construction", "auto"), ctx.seed)
    cert = verify_contractor(mu, norm, samples=ctx.inputs.get("samples", 1000), seed=ctx.seed, tol=ctx.tol["float"])
    out = Outcome(
        {"kind": mu.kind, "atoms": len(mu), "totalWeight": mu.total_weight, "certificate": cert.to_json()},
        _tail_table(cert),
        failed=not cert.passed,
        extra_files={"contractor": mu.to_json()},
    )
    return out


def cmd_contractor_verify(ctx: Context) -> Outcome:
    norm = ctx.norm
    try:
        mu = DensityContractor.from_json(ctx.inputs["contractor"])
    except (ContractorError, ValueError, GeometryError) as exc:
        raise InputError(f"/inputs/contractor: {exc}") from exc
    if mu.target.ambient != norm.n:
        raise InputError("/inputs/contractor/target: dimension does not match the norm")
    cert = verify_contractor(mu, norm, samples=ctx.inputs.get("samples", 1000), seed=ctx.seed, tol=ctx.tol["float"])
    return Outcome({"certificate": cert.to_json()}, _tail_table(cert), failed=not cert.passed)


def cmd_min_lip(ctx: Context) -> Outcome:
    norm = ctx.norm
    W = _subspace(ctx.inputs["subspace"], norm.n, "/inputs/subspace")
    value, M = min_lipschitz_projector(norm, W, starts=ctx.inputs.get("starts", 32), seed=ctx.seed)
    return Outcome({"value": value, "matrix": M})


def _chain(obj: dict, n: int | None, path: str) -> PolyhedralChain:
    try:
        P = PolyhedralChain.from_json(obj)
    except (ValueError, GeometryError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if n is not None and P.ambient not in (None, n):
        raise InputError(f"{path}: vertices have {P.ambient} coordinates, the norm has n = {n}")
    return P


def cmd_mass(ctx: Context) -> Outcome:
    norm = ctx.norm
    P = _chain(ctx.inputs["chain"], norm.n, "/inputs/chain")
    return Outcome({"mass": hausdorff_mass(P, norm, debug_overlap=ctx.debug_overlap), "terms": len(P)})


def cmd_slice_integral(ctx: Context) -> Outcome:
    norm = ctx.norm
    P = _chain(ctx.inputs["chain"], norm.n, "/inputs/chain")
    M = np.asarray(ctx.inputs["map"], dtype=float)
    if M.shape != (norm.n, norm.n):
        raise InputError(f"/inputs/map: expected a {norm.n}x{norm.n} matrix")
    return Outcome({"value": slice_integral(P, M, norm), "mass": hausdorff_mass(P, norm)})


def cmd_zeta(ctx: Context) -> Outcome:
    norm = ctx.norm
    P = _chain(ctx.inputs["chain"], norm.n, "/inputs/chain")
    fld = ContractorField(norm, tol=ctx.tol["float"], threads=ctx.threads)
    res = zeta_chain(P, fld, norm, w_samples=ctx.inputs.get("wSamples", 8), seed=ctx.seed)
    mass = hausdorff_mass(P, norm)
    rows = [[k, v] for k, v in enumerate(res.values)]
    return Outcome(
        {
            "zeta": res.value,
            "mass": mass,
            "gap": mass - res.value,
            "argmax": res.argmax,
            "candidates": res.candidates,
            "lowerBound": True,
        },
        {"zeta_candidates": (["candidate", "value"], rows)},
    )


def cmd_gross(ctx: Context) -> Outcome:
    norm = ctx.norm
    simplices = [np.asarray(s, dtype=float) for s in ctx.inputs["simplices"]]
    dims = {len(s) - 1 for s in simplices}
    if len(dims) != 1 or any(s.shape[1] != norm.n for s in simplices):
        raise InputError("/inputs/simplices: simplices must share one dimension and match the norm")
    A = RectifiableTestSet.from_simplices(simplices)
    fld = ContractorField(norm, tol=ctx.tol["float"], threads=ctx.threads)
    H = A.hausdorff(norm)
    rows = []
    for d in ctx.inputs["deltas"]:
        est = gross_estimate(A, fld, norm, float(d), w_samples=ctx.inputs.get("wSamples", 16), seed=ctx.seed)
        rows.append([float(d), est, (est - H) / H if H else 0.0])
    return Outcome(
        {"hausdorff": H, "estimates": [r[1] for r in rows], "lowerBound": True},
        {"gross": (["delta", "estimate", "relative_error"], rows)},
    )


def _complex(obj: dict) -> SimplicialComplex:
    try:
        return SimplicialComplex.from_json(obj)
    except (PlateauError, ValueError, IndexError) as exc:
        raise InputError(f"/inputs/complex: {exc}") from exc


def cmd_plateau_solve(ctx: Context) -> Outcome:
    from .chains import CoefficientGroup

    norm = ctx.norm
    cx = _complex(ctx.inputs["complex"])
    group = CoefficientGroup.from_json(ctx.inputs["group"])
    B = ctx.inputs["boundary"]
    B = _chain(B, norm.n, "/inputs/boundary") if isinstance(B, dict) else [Fraction(v) for v in B]
    try:
        prog = build_program(cx, norm, group, B, ctx.inputs.get("m"))
    except PlateauError as exc:
        raise InputError(f"/inputs/boundary: {exc}") from exc
    try:
        sol = solve(prog, exact=ctx.inputs.get("exact"), time_limit=ctx.inputs.get("timeLimit", 60.0))
    except InfeasibleBoundary as exc:
        return Outcome({"status": "infeasible", "message": str(exc), "witness": exc.witness, "note": DISCRETIZATION_NOTE}, failed=True)
    rows = [[i, list(cx.cells[prog.m][i]), g] for i, g in enumerate(sol.coefficients) if g != 0]
    return Outcome(sol.to_json(), {"support": (["cell", "vertices", "coefficient"], rows)})


def cmd_flat_norm(ctx: Context) -> Outcome:
    norm = ctx.norm
    cx = _complex(ctx.inputs["complex"])
    P = ctx.inputs["chain"]
    P = _chain(P, norm.n, "/inputs/chain") if isinstance(P, dict) else [Fraction(v) for v in P]
    try:
        value = simplicial_flat_norm(cx, norm, P, ctx.inputs.get("m"))
    except PlateauError as exc:
        raise InputError(f"/inputs/chain: {exc}") from exc
    return Outcome({"flatNorm": value, "note": DISCRETIZATION_NOTE})


def cmd_lsc_harness(ctx: Context) -> Outcome:
    norm = ctx.norm if "norm" in ctx.scenario else None
    rep = lsc_harness(norm, ctx.inputs["cycle"], ctx.inputs["jList"], tol=ctx.tol["exact"] * 1e3)
    rows = [[r.j, r.card, r.mass, r.flat_bound, r.drop, r.predicted_drop] for r in rep["rows"]]
    result = {k: v for k, v in rep.items() if k != "rows"}
    return Outcome(
        result,
        {"lsc": (["j", "card", "mass", "flat_bound", "drop", "predicted_drop"], rows)},
        failed=not rep["verdict"],
    )


def cmd_linf_graph(ctx: Context) -> Outcome:
    N = ctx.inputs["N"]
    if "values" in ctx.inputs:
        batches = [np.asarray(ctx.inputs["values"], dtype=float)]
    else:
        batches = [random_admissible_pl(N, ctx.seed + k) for k in range(ctx.inputs.get("count", 1))]
    rows = []
    for k, f in enumerate(batches):
        try:
            mass = linf_graph_mass(f, N)
        except PlateauError as exc:
            raise InputError(f"/inputs/values: {exc}") from exc
        rows.append([k, mass, mass - math.pi])
    worst = max(abs(r[2]) for r in rows)
    return Outcome(
        {"masses": [r[1] for r in rows], "maxDeviation": worst, "oracle": math.pi},
        {"linf_graph": (["instance", "mass", "deviation"], rows)},
        failed=worst > ctx.tol["float"],
    )


def cmd_support_reduce(ctx: Context) -> Outcome:
    norm = ctx.norm
    T = _chain(ctx.inputs["chain"], norm.n, "/inputs/chain")
    hs = []
    for k, h in enumerate(ctx.inputs["halfspaces"]):
        if len(h["a"]) != norm.n:
            raise InputError(f"/inputs/halfspaces/{k}/a: expected {norm.n} coordinates")
        hs.append(([float(Fraction(c)) if isinstance(c, str) else float(c) for c in h["a"]], float(h["b"])))
    try:
        out = support_reduction(T, hs, norm)
    except PlateauError as exc:
        if "boundary of T" in str(exc):
            raise InputError(f"/inputs/chain: {exc}") from exc
        return Outcome({"error": str(exc)}, failed=True)
    m0, m1 = hausdorff_mass(T, norm), hausdorff_mass(out, norm)
    return Outcome({"massBefore": m0, "massAfter": m1, "terms": len(out)}, extra_files={"reduced_chain": out.to_json()})


COMMANDS = {
    "psi": cmd_psi,
    "section": cmd_section,
    "busemann-b": cmd_busemann_b,
    "contractor-build": cmd_contractor_build,
    "contractor-verify": cmd_contractor_verify,
    "min-lip-projector": cmd_min_lip,
    "mass": cmd_mass,
    "slice-integral": cmd_slice_integral,
    "zeta": cmd_zeta,
    "gross": cmd_gross,
    "plateau-solve": cmd_plateau_solve,
    "flat-norm": cmd_flat_norm,
    "lsc-harness": cmd_lsc_harness,
    "linf-graph": cmd_linf_graph,
    "support-reduce": cmd_support_reduce,
}


# ---------------------------------------------------------------------------
# output


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def run(scenario_file, out_dir, seed: int | None = None, threads: int = 1, debug_overlap: bool = False) -> int:
    """Execute one scenario; returns the process exit status."""
    out = Path(out_dir)
    try:
        try:
            scenario = json.loads(Path(scenario_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read scenario: {exc}") from exc
        if seed is not None:
            if not isinstance(scenario, dict):
                raise InputError("scenario invalid at /: expected an object")
            scenario = {**scenario, "seed": seed}
        validate_scenario(scenario)
        tol = {**DEFAULT_TOLERANCES, **scenario.get("tolerances", {})}
        ctx = Context(scenario, int(scenario.get("seed", 0)), tol, max(1, threads), debug_overlap)
        outcome = COMMANDS[scenario["command"]](ctx)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NormError, GeometryError, PlateauError, ContractorError, QuadratureError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    report = {
        "command": scenario["command"],
        "scenarioHash": scenario_hash(scenario),
        "seed": ctx.seed,
        "tolerances": tol,
        "version": __version__,
        "status": "fail" if outcome.failed else "ok",
        "result": outcome.result,
        "tables": sorted(f"{name}.csv" for name in outcome.tables),
    }
    for name, obj in sorted(outcome.extra_files.items()):
        write_atomic(out / f"{name}.json", _dump(obj))
    for name, (header, rows) in sorted(outcome.tables.items()):
        write_atomic(out / f"{name}.csv", _csv_text(header, rows))
    write_atomic(out / "report.json", _dump(report))
    if outcome.failed:
        print(f"verification failed; see {out / 'report.json'}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normplateau", description="Run a normplateau scenario file.")
    ap.add_argument("--scenario", required=True, help="scenario JSON file")
    ap.add_argument("--out", required=True, help="output directory for report.json and CSV tables")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for contractor evaluation")
    ap.add_argument("--debug-overlap", action="store_true", help="reject chains whose pieces overlap")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return run(args.scenario, args.out, args.seed, args.threads, args.debug_overlap)


if __name__ == "__main__":
    sys.exit(main())
