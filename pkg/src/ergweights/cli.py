"""Command-line experiment runner.

    ergweights run CONFIG [--out DIR] [--threads N] [--horizon-override N]
    ergweights list

``run`` writes one CSV per trace plus ``summary.json``.  Exit codes: 0 on
success, 2 for an invalid config, 3 when a mathematical hypothesis is
rejected (e.g. an operator that is not power bounded), 1 on internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import averages as av
from . import config as cf
from . import dynsys as ds
from . import linops as lo
from . import seqcore as sc
from . import shiftcex as sx
from .errors import HypothesisError, InputError

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_HYPOTHESIS = 0, 1, 2, 3

TRACE_COLUMNS = ["N", "re", "im", "l2norm", "bound"]
DECOMPOSE_COLUMNS = ["n", "a_re", "a_im", "b_re", "b_im", "c_re", "c_im"]
CEX_COLUMNS = ["N", "cesaro_re", "cesaro_im", "running_min", "running_max",
               "bound_lhs", "bound_rhs"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


class Writer:
    """Collects output files in one directory; each file has a single writer."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows):
        with open(self.out / name, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)

    def summary(self, doc: dict):
        doc = dict(doc, files=sorted(self.files))
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False)
        with open(self.out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    return v


def _trace_rows(trace: sc.AverageTrace):
    return list(trace.rows())


def _bound_violations(trace: sc.AverageTrace) -> int:
    if trace.bounds is None:
        return 0
    return sum(abs(v) > b * (1 + 1e-12) + 1e-300 for v, b in zip(trace.values, trace.bounds))


def _trace_summary(trace: sc.AverageTrace) -> dict:
    return {
        "label": trace.label,
        "verdict": trace.verdict.as_dict(),
        "final_N": trace.checkpoints[-1],
        "final_value": trace.values[-1],
        "final_bound": None if trace.bounds is None else trace.bounds[-1],
        "bound_violations": _bound_violations(trace),
    }


# ---------------------------------------------------------------------------
# experiment kinds
# ---------------------------------------------------------------------------

def run_decompose(doc, w: Writer, rng, threads) -> dict:
    T = cf.build_operator(doc["operator"])
    pair = lo.VectorPair(lo.vector_from_json(doc["x"]), lo.vector_from_json(doc["xprime"]))
    trig, resid = lo.structure_split(T, pair)
    terms = doc.get("terms", 64)
    n = np.arange(1, terms + 1, dtype=np.int64)
    a = lo.linear_sequence(T, pair).take(n)
    b = np.atleast_1d(trig(n)) if len(trig) else np.zeros(terms, dtype=np.complex128)
    c = resid.take(n)
    w.csv("decompose.csv", DECOMPOSE_COLUMNS,
          ([int(k), x.real, x.imag, y.real, y.imag, z.real, z.imag]
           for k, x, y, z in zip(n, a, b, c)))
    N = doc.get("horizon", 10_000)
    _, mean_abs = sc.cesaro_null_check(resid, N, 1.0)
    bound = lo.residual_mean_bound(T, pair, N)
    return {
        "dim": T.dim,
        "C": T.C,
        "r": T.r,
        "power_bound": T.power_bound,
        "eigenvalues": [complex(lam) for lam in T.eigenvalues],
        "almost_periodic": [{"coef": c0, "turns": t}
                            for c0, t in zip(trig.coefficients, trig.turns)],
        "reconstruction_max": float(np.max(np.abs(a - b - c))),
        "residual_horizon": N,
        "residual_mean": mean_abs,
        "residual_bound": bound,
        "residual_bound_holds": bool(mean_abs <= bound),
    }


def run_average(doc, w: Writer, rng, threads) -> dict:
    weights = cf.build_weight(doc["weight"], rng)
    f = cf.build_factor({k: doc[k] for k in ("system", "observable", "point")})
    hs = doc.get("horizons") or sc.dyadic_horizons(av.POINTWISE_HORIZON)
    tr = av.weighted_average(weights, f.system, f.observable, f.point, hs,
                             tol=doc.get("tol", sc.DEFAULT_TOL), threads=threads)
    w.csv("trace.csv", TRACE_COLUMNS, _trace_rows(tr))
    return _trace_summary(tr)


def run_rtt(doc, w: Writer, rng, threads) -> dict:
    weights = cf.build_weight(doc["weight"], rng)
    towers = [cf.build_factor(f) for f in doc["towers"]]
    hs = doc.get("horizons") or sc.dyadic_horizons(av.POINTWISE_HORIZON)
    tr = av.multiple_rtt_average(av.RttConfig(weights, towers, hs),
                                 tol=doc.get("tol", sc.DEFAULT_TOL), threads=threads)
    w.csv("trace.csv", TRACE_COLUMNS, _trace_rows(tr))
    return _trace_summary(tr)


def run_poly(doc, w: Writer, rng, threads) -> dict:
    weights = cf.build_weight(doc["weight"], rng)
    S = cf.build_system(doc["system"])
    pairs = [(cf.build_observable(p["observable"], S), ds.IntPolynomial(p["polynomial"]))
             for p in doc["pairs"]]
    hs = doc.get("horizons") or sc.dyadic_horizons(av.L2_HORIZON)
    res = av.weighted_poly_average_l2(av.PolyAvgConfig(weights, S, pairs, hs),
                                      tol=doc.get("tol", sc.DEFAULT_TOL), threads=threads)
    w.csv("trace.csv", TRACE_COLUMNS, _trace_rows(res.trace))
    d = res.frequencies.shape[1]
    w.csv("limit.csv", [f"k{i + 1}" for i in range(d)] + ["re", "im"],
          (list(k) + [c.real, c.imag] for k, c in zip(res.frequencies, res.coefficients[-1])))
    out = _trace_summary(res.trace)
    out["final_l2norm"] = res.trace.l2norms[-1]
    out["cauchy"] = res.cauchy
    return out


def _cex_checkpoints(xp: sx.BoundedFunctional, horizon: int) -> list[int]:
    cps = set(sc.dyadic_horizons(horizon, first=0))
    if xp.block_edges is not None:
        cps.update(c for c in sx.block_boundaries(xp, horizon) if c >= 1)
    return sorted(cps)


def run_cex(doc, w: Writer, rng, threads) -> dict:
    x = sx.L1Vector(lo.vector_from_json(doc["x"]))
    xp = cf.build_functional(doc["functional"])
    lam = doc.get("lambda", 0)
    lam = lam if isinstance(lam, str) else Fraction(lam)        # turns, never a complex value
    horizon = doc.get("horizon", 1 << 20)
    cps = _cex_checkpoints(xp, horizon)
    seq = sx.shift_sequence(x, xp)
    ces = sc.cesaro_trace(seq, cps, tol=doc.get("tol", sc.DEFAULT_TOL), threads=threads)
    checks = sx.cex_bound_trace(x, xp, lam, cps, doc.get("tail_eps", 0.0), threads)
    total = x.total()
    direction = np.conj(total) / abs(total) if abs(total) > 0 else 1.0
    rows, lo_run, hi_run = [], np.inf, -np.inf
    for N, v, chk in zip(cps, ces.values, checks):
        p = float((v * direction).real)
        lo_run, hi_run = min(lo_run, p), max(hi_run, p)
        rows.append([N, v.real, v.imag, lo_run, hi_run, chk.lhs, chk.rhs])
    w.csv("cex.csv", CEX_COLUMNS, rows)
    out = {
        "total": total,
        "one_norm": x.one_norm,
        "functional": xp.label,
        "verdict": ces.verdict.as_dict(),
        "bound_checks": len(checks),
        "bound_failures": sum(not c.holds for c in checks),
    }
    if xp.block_edges is not None:
        wit = sx.divergence_witness(x, xp, horizon, threads=threads) \
            if horizon >= 1 << 16 and horizon & (horizon - 1) == 0 else None
        if wit is not None:
            out["witness"] = {"liminf_est": wit.liminf_est, "limsup_est": wit.limsup_est,
                              "gap": wit.gap}
    return out


def run_kvn(doc, w: Writer, rng, threads) -> dict:
    seq = cf.build_weight(doc["weight"], rng)
    N = doc["horizon"]
    J = sc.kvn_extract(seq, N, doc["levels"])
    mags = np.abs(seq.values(1, N + 1))
    level_rows, violations = [], 0
    for k, nk in enumerate(J.cutoffs):
        end = J.cutoffs[k + 1] if k + 1 < len(J.cutoffs) else N
        seg = slice(nk, end)
        bad = int(np.count_nonzero(J.mask[seg] & (mags[seg] > J.levels[k])))
        violations += bad
        level_rows.append([k + 1, J.levels[k], nk, end,
                           int(np.count_nonzero(J.mask[seg])), bad])
    w.csv("kvn_levels.csv", ["level", "epsilon", "cutoff", "end", "members", "violations"],
          level_rows)
    cps = sc.dyadic_horizons(N, first=0)
    w.csv("kvn_density.csv", ["N", "members", "density"],
          ([n, J.count(n), J.observed_density(n)] for n in cps))
    return {
        "status": J.status,
        "certified_levels": J.certified_levels,
        "cutoffs": J.cutoffs,
        "final_density": J.observed_density(N),
        "violations": violations,
    }


def run_universal(doc, w: Writer, rng, threads) -> dict:
    weights = [cf.build_weight(s, rng) for s in doc["weights"]]
    towers = [[cf.build_factor(f) for f in t] for t in doc["towers"]]
    hs = doc.get("horizons") or sc.dyadic_horizons(av.POINTWISE_HORIZON)
    rep = av.universal_family_report(weights, towers, hs,
                                     tol=doc.get("tol", sc.DEFAULT_TOL), threads=threads)
    rows = []
    for i, (vrow, trow) in enumerate(zip(rep.verdicts, rep.traces)):
        for j, (v, tr) in enumerate(zip(vrow, trow)):
            lim = v.limit
            rows.append([i, j, weights[i].label, v.kind, None if lim is None else lim.real,
                         None if lim is None else lim.imag, v.radius, v.gap])
            w.csv(f"trace_w{i}_t{j}.csv", TRACE_COLUMNS, _trace_rows(tr))
    w.csv("universal.csv", ["weight", "tower", "label", "verdict", "limit_re", "limit_im",
                            "radius", "gap"], rows)
    return rep.summary()


RUNNERS = {
    "decompose": run_decompose,
    "average": run_average,
    "rtt": run_rtt,
    "poly": run_poly,
    "cex": run_cex,
    "kvn": run_kvn,
    "universal-report": run_universal,
}


def run(config_path, out=None, threads: int = 1, horizon_override: int | None = None,
        stderr=None) -> int:
    """Run one experiment; returns the exit code."""
    stderr = stderr or sys.stderr
    try:
        doc = cf.load(config_path)
        if horizon_override is not None:
            doc = cf.override_horizon(doc, horizon_override)
        if threads < 1:
            raise InputError("--threads must be >= 1")
        target = Path(out or doc.get("out") or "out")
        rng = np.random.default_rng(doc.get("seed", 0))
        w = Writer(target)
        results = RUNNERS[doc["kind"]](doc, w, rng, threads)
        w.summary({"kind": doc["kind"], "config": doc, "results": results})
    except HypothesisError as exc:
        extra = f" (witness: {exc.witness})" if exc.witness is not None else ""
        print(f"rejected: violated hypothesis '{exc.hypothesis}': {exc}{extra}", file=stderr)
        return EXIT_HYPOTHESIS
    except (InputError, OverflowError) as exc:
        print(f"invalid: {exc}", file=stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        print(f"internal error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_INTERNAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def example_configs() -> list[str]:
    root = resources.files("ergweights") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def catalog() -> dict:
    return {
        "systems": [
            ("circle_rotation", "y -> y + alpha on the circle"),
            ("torus_rotation", "y -> y + alpha on T^d, d <= 3"),
            ("skew_product", "(x, y) -> (x + alpha, y + x) on T^2"),
            ("cyclic_permutation", "j -> j + step on Z/m"),
        ],
        "observables": [
            ("fourier", "finite Fourier sum on a torus"),
            ("table", "tabulated function on Z/m"),
        ],
        "weights": [
            ("constant", "a_n = c"),
            ("character", "a_n = exp(2 pi i n beta)"),
            ("trig", "finite trigonometric polynomial"),
            ("polyphase", "a_n = exp(2 pi i p(n)), real p of degree <= 4"),
            ("geometric", "a_n = z**n, |z| <= 1"),
            ("squares", "indicator of the perfect squares"),
            ("linear", "<T^n x, x'> or its almost-periodic / residual part"),
            ("random_linear", "linear sequence of a seeded random operator"),
            ("shift", "<T^n x, x'> for the right shift on l^1"),
            ("correlation", "integral of prod_j g_j o S^{p_j(n)}"),
        ],
        "functionals": [
            ("block_sign", "block-sign functional: +-delta on blocks [g^k, g^(k+1))"),
            ("constant", "s_j = c"),
        ],
        "experiments": [(k, f"config kind '{k}'") for k in cf.KINDS],
        "example configs": [(name, "") for name in example_configs()],
    }


def list_builtins(stream=None) -> int:
    """Print the catalog; return the number of entries."""
    stream = stream or sys.stdout
    count = 0
    for section, items in catalog().items():
        print(f"{section}:", file=stream)
        for name, desc in items:
            print(f"  {name}" + (f"  {desc}" if desc else ""), file=stream)
            count += 1
    return count


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ergweights",
                                     description="Weighted ergodic average experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--horizon-override", type=int, default=None, dest="horizon_override")
    sub.add_parser("list", help="list built-in systems, weights and example configs")
    args = parser.parse_args(argv)
    if args.command == "list":
        list_builtins()
        return EXIT_OK
    return run(args.config, args.out, args.threads, args.horizon_override)


if __name__ == "__main__":
    sys.exit(main())
