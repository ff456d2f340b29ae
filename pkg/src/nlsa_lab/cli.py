"""Operator-facing command line for the toolkit.

Each command reads a schema-checked JSON config, writes its artifacts into
the --out directory (CSV for bulk numbers, JSON for reports), and finishes
with a run manifest.  Exit codes: 0 success, 1 bad config or usage, 2
solver non-contraction, 3 numerical verification failure (decay ceiling
exceeded, quadrature non-convergence, or refinement instability).
Identical configs and seeds produce byte-identical reports; the manifest's
wall-clock duration is the one intentionally non-reproducible field.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .estimates import (
    check_chain_rules,
    check_commutator,
    check_leibniz_band,
    check_leibniz_two_sided,
    check_smoothing,
    check_sup_embedding,
)
from .oscillatory import (
    PhiProfile,
    QuadratureConvergenceError,
    RegionLabel,
    admissible_parameters,
    arc_exponent_check,
    build_probe_grid,
    decay_bound_check,
    run_probe,
)
from .picard import (
    NonContractionError,
    PicardConfig,
    persistence_report,
    picard_iterate,
    reduction_preset,
    soliton_oracle,
)
from .spectral import EquationParams, Grid, GridFunction

__all__ = ["ConfigError", "RunManifest", "main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NON_CONTRACTION = 2
EXIT_UNSTABLE = 3


class ConfigError(ValueError):
    """A config file or invocation the tool refuses to run."""


# ---------------------------------------------------------------------------
# Config schemas.
# ---------------------------------------------------------------------------

_NUMBER = {"type": "number"}


def _num(**bounds) -> dict:
    return {"type": "number", **bounds}


_EQUATION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "a": _NUMBER,
        "b": _NUMBER,
        "c": _NUMBER,
        "d": _NUMBER,
        "e": _NUMBER,
    },
}

SOLVE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["equation", "grid", "time", "initial_data"],
    "properties": {
        "seed": {"type": "integer"},
        "equation": _EQUATION_SCHEMA,
        "m": _num(minimum=0),
        "s": _NUMBER,
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["num_points", "length"],
            "properties": {
                "num_points": {"type": "integer", "minimum": 2},
                "length": _num(exclusiveMinimum=0),
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "required": ["horizon", "nodes"],
            "properties": {
                "horizon": _num(exclusiveMinimum=0),
                "nodes": {"type": "integer", "minimum": 1},
            },
        },
        "picard": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "tolerance": _num(exclusiveMinimum=0),
                "substeps": {"type": "integer", "minimum": 1},
                "dealias": {"type": "boolean"},
                "full_derivative_mode": {"type": "boolean"},
            },
        },
        "initial_data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["zero", "gaussian", "soliton"]},
                "amplitude": _num(exclusiveMinimum=0),
                "width": _num(exclusiveMinimum=0),
                "center": _NUMBER,
                "name": {"type": "string"},
                "x_shift": _NUMBER,
            },
        },
    },
}

_PROBE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["a", "b", "t", "omega", "m", "xi"],
    "properties": {key: _NUMBER for key in ("a", "b", "t", "omega", "m", "xi")},
}

OSCILLATORY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "probes": {"type": "array", "items": _PROBE_SCHEMA, "minItems": 1},
        "omegas": {"type": "array", "items": _num(exclusiveMinimum=1), "minItems": 1},
        "ab_pairs": {
            "type": "array",
            "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
            "minItems": 1,
        },
        "m_values": {"type": "array", "items": _num(minimum=0), "minItems": 1},
        "t_request": _num(exclusiveMinimum=0),
        "near_fracs": {"type": "array", "items": _num(exclusiveMinimum=0, maximum=1)},
        "far_fracs": {"type": "array", "items": _num(exclusiveMinimum=1)},
        "intermediate_fracs": {
            "type": "array",
            "items": _num(exclusiveMinimum=0.01, exclusiveMaximum=100),
        },
        "ceiling": _num(exclusiveMinimum=0),
        "arc_samples": {"type": "integer", "minimum": 0},
    },
}

ESTIMATES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "estimates": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "samples": {"type": "integer", "minimum": 1},
        "alpha": _num(exclusiveMinimum=0, maximum=1),
        "equation": _EQUATION_SCHEMA,
    },
}

_SCHEMAS = {
    "solve": SOLVE_SCHEMA,
    "verify-oscillatory": OSCILLATORY_SCHEMA,
    "verify-estimates": ESTIMATES_SCHEMA,
}


# ---------------------------------------------------------------------------
# Artifact plumbing.
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    """What was run: enough to reproduce everything but the duration."""

    command: str
    config: str
    output_dir: str
    seed: int
    version: str
    duration_seconds: float

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "version": self.version,
            "duration_seconds": self.duration_seconds,
        }


def _json_ready(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    return value


def write_json(path: Path, payload) -> None:
    """Sorted keys and two-space indent; non-finite floats become null."""
    path.write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def load_config(path, schema) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        loc = "".join(
            f"[{part}]" if isinstance(part, int) else f".{part}"
            for part in error.absolute_path
        )
        raise ConfigError(f"{path}: config{loc}: {error.message}")
    return data


def _resolve_threads(flag) -> int:
    if flag is not None:
        if flag < 1:
            raise ConfigError("--threads must be at least 1")
        return flag
    env = os.environ.get("NLSA_LAB_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"NLSA_LAB_THREADS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError("NLSA_LAB_THREADS must be at least 1")
        return value
    return 1


def _equation_from(config: dict, default: dict | None = None) -> EquationParams:
    equation = config.get("equation", default)
    if equation is None:
        raise ConfigError("config.equation: missing")
    if "preset" in equation:
        extras = sorted(set(equation) - {"preset"})
        if extras:
            raise ConfigError(
                f"config.equation: give a preset or coefficients, not both "
                f"(unexpected: {', '.join(extras)})"
            )
        try:
            params = reduction_preset(equation["preset"])
        except ValueError as exc:
            raise ConfigError(f"config.equation.preset: {exc}") from exc
    else:
        for key in ("a", "b"):
            if key not in equation:
                raise ConfigError(
                    f"config.equation: coefficient '{key}' is required without a preset"
                )
        params = EquationParams(
            a=equation["a"],
            b=equation["b"],
            c=equation.get("c", 0.0),
            d=equation.get("d", 0.0),
            e=equation.get("e", 0.0),
        )
    overrides = {key: config[key] for key in ("m", "s") if key in config}
    if overrides:
        params = replace(params, **overrides)
    return params


def _initial_field(spec: dict, grid: Grid) -> GridFunction:
    kind = spec["kind"]
    if kind == "zero":
        return GridFunction(grid, np.zeros(grid.num_points, dtype=np.complex128))
    if kind == "gaussian":
        amplitude = spec.get("amplitude", 1.0)
        width = spec.get("width", 1.0)
        center = spec.get("center", 0.0)
        values = amplitude * np.exp(-(((grid.x - center) / width) ** 2)) + 0j
        return GridFunction(grid, values)
    if "name" not in spec:
        raise ConfigError("config.initial_data: soliton data needs a 'name'")
    try:
        soliton = soliton_oracle(
            spec["name"], spec.get("amplitude", 1.0), spec.get("x_shift", 0.0)
        )
    except ValueError as exc:
        raise ConfigError(f"config.initial_data: {exc}") from exc
    return GridFunction(grid, soliton(grid.x, 0.0))


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------

def cmd_solve(config: dict, out: Path, seed: int, threads: int) -> int:
    del seed, threads  # the solve path is deterministic and single-threaded
    params = _equation_from(config)
    grid = Grid(config["grid"]["num_points"], config["grid"]["length"])
    u0 = _initial_field(config["initial_data"], grid)
    picard = config.get("picard", {})
    try:
        solver_config = PicardConfig(
            horizon=config["time"]["horizon"],
            time_nodes=config["time"]["nodes"],
            max_iterations=picard.get("max_iterations", 30),
            xt_tolerance=picard.get("tolerance", 1e-10),
            substeps=picard.get("substeps", 2),
            dealias=picard.get("dealias", True),
            full_derivative_mode=picard.get("full_derivative_mode", False),
        )
    except ValueError as exc:
        raise ConfigError(f"config.picard: {exc}") from exc

    try:
        u, contraction = picard_iterate(u0, params, solver_config)
    except NonContractionError as exc:
        print(f"non-contraction: {exc}", file=sys.stderr)
        return EXIT_NON_CONTRACTION
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    norms = persistence_report(u, params)
    rows = [
        (_fmt(x), _fmt(value.real), _fmt(value.imag))
        for x, value in zip(grid.x, u.frames[-1])
    ]
    write_csv(out / "solution.csv", ("x", "re_u", "im_u"), rows)
    write_json(out / "norms.json", norms.to_dict())
    write_json(out / "contraction.json", contraction.to_dict())

    if not contraction.converged:
        print(
            f"did not reach tolerance within {solver_config.max_iterations} iterations",
            file=sys.stderr,
        )
        return EXIT_NON_CONTRACTION
    print(
        f"converged in {contraction.iterations} iterations; "
        f"contraction ratio {contraction.ratio:.4f}"
    )
    print(
        f"space-time norm {norms.x_norm:.6g}, weighted sup {norms.weighted_sup:.6g}"
    )
    return EXIT_OK


def _probe_tuples(config: dict) -> list:
    if "probes" in config and "omegas" in config:
        raise ConfigError("config: give explicit probes or a sweep grid, not both")
    if "probes" in config:
        tuples = []
        for i, probe in enumerate(config["probes"]):
            try:
                admissible = admissible_parameters(
                    probe["a"], probe["b"], probe["t"], probe["omega"]
                )
            except ValueError as exc:
                raise ConfigError(f"config.probes[{i}]: {exc}") from exc
            if not admissible:
                raise ConfigError(
                    f"config.probes[{i}]: omega/(|b| t) must be at least "
                    f"max(1, 1e4 (a/(2b))^2)"
                )
            tuples.append(
                (probe["a"], probe["b"], probe["t"], probe["omega"], probe["m"], probe["xi"])
            )
        return tuples
    for key in ("omegas", "ab_pairs", "m_values"):
        if key not in config:
            raise ConfigError(f"config: sweep needs '{key}' (or give explicit probes)")
    for i, (_, b) in enumerate(config["ab_pairs"]):
        if b == 0:
            raise ConfigError(f"config.ab_pairs[{i}]: b must be nonzero")
    return build_probe_grid(
        config["omegas"],
        [tuple(pair) for pair in config["ab_pairs"]],
        config["m_values"],
        t_request=config.get("t_request", 0.5),
        near_fracs=tuple(config.get("near_fracs", (0.35, 0.8))),
        far_fracs=tuple(config.get("far_fracs", (1.5,))),
        intermediate_fracs=tuple(config.get("intermediate_fracs", ())),
    )


def cmd_verify_oscillatory(config: dict, out: Path, seed: int, threads: int) -> int:
    del seed  # probes are deterministic; the seed is only manifest metadata
    tuples = _probe_tuples(config)
    for m in sorted({tp[4] for tp in tuples}):
        PhiProfile.cached(m)  # build serially before the parallel map
    try:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            probes = list(pool.map(lambda tp: run_probe(*tp), tuples))
    except QuadratureConvergenceError as exc:
        print(f"quadrature failed to converge: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE

    rows = []
    for p in probes:
        contour_re = _fmt(p.value_contour.real) if p.value_contour is not None else ""
        contour_im = _fmt(p.value_contour.imag) if p.value_contour is not None else ""
        rows.append(
            (
                _fmt(p.a), _fmt(p.b), _fmt(p.t), _fmt(p.omega), _fmt(p.m), _fmt(p.xi),
                p.label.name.lower(),
                _fmt(p.value_direct.real), _fmt(p.value_direct.imag),
                contour_re, contour_im,
                _fmt(p.bound_ratio),
                "true" if p.converged else "false",
            )
        )
    write_csv(
        out / "probes.csv",
        ("a", "b", "t", "omega", "m", "xi", "label", "re_direct", "im_direct",
         "re_contour", "im_contour", "ratio", "converged"),
        rows,
    )

    failures = []
    ceiling = config.get("ceiling")
    not_converged = sum(1 for p in probes if not p.converged)
    if not_converged:
        failures.append(f"{not_converged} probes did not converge under step halving")
    compared = [p for p in probes if p.agrees is not None]
    disagreeing = sum(1 for p in compared if not p.agrees)
    if disagreeing:
        failures.append(
            f"{disagreeing} probes disagree between contour and direct quadrature"
        )
    regions = decay_bound_check(probes, ceiling)
    for label, summary in regions.items():
        if summary.ceiling_ok is False:
            failures.append(
                f"{label.name.lower()} max decay ratio {summary.max_ratio:.6g} "
                f"exceeds ceiling {ceiling:.6g}"
            )

    arc_samples = config.get("arc_samples", 1000)
    arc_payload = None
    if arc_samples:
        unique = list(dict.fromkeys(
            (p.a, p.b, p.t, p.omega, p.xi)
            for p in probes
            if p.label is not RegionLabel.INTERMEDIATE
        ))
        arc_payload = {}
        for name in ("near", "far"):
            arc_payload[name] = {
                "count": 0, "all_hold": True,
                "min_margin": math.inf, "max_identity_error": 0.0,
            }
        for a, b, t, omega, xi in unique:
            report = arc_exponent_check(a, b, t, omega, xi, n_theta=arc_samples)
            entry = arc_payload[report.label.name.lower()]
            entry["count"] += 1
            entry["all_hold"] = entry["all_hold"] and report.holds
            entry["min_margin"] = min(entry["min_margin"], report.min_margin)
            entry["max_identity_error"] = max(
                entry["max_identity_error"], report.identity_error
            )
        arc_payload = {k: v for k, v in arc_payload.items() if v["count"]}
        for name, entry in arc_payload.items():
            if not entry["all_hold"]:
                failures.append(f"{name} arc-exponent inequality failed at some probe")

    summary_payload = {
        "probe_count": len(probes),
        "all_converged": not_converged == 0,
        "agreement": {
            "compared": len(compared),
            "all_agree": disagreeing == 0,
            "max_gap": max((p.agreement_gap for p in compared), default=0.0),
        },
        "regions": {
            label.name.lower(): {
                "count": summary.count,
                "max_ratio": summary.max_ratio,
                "fitted_constant": summary.fitted_constant,
                "ceiling_ok": summary.ceiling_ok,
            }
            for label, summary in regions.items()
        },
        "arc": arc_payload,
        "ceiling": ceiling,
        "failures": failures,
    }
    write_json(out / "oscillatory_summary.json", summary_payload)

    for label in sorted(regions, key=lambda lab: lab.name):
        summary = regions[label]
        print(
            f"{label.name.lower()}: {summary.count} probes, "
            f"max ratio {summary.max_ratio:.6g}, fitted constant "
            f"{summary.fitted_constant:.6g}"
        )
    if failures:
        for failure in failures:
            print(failure, file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


_ESTIMATE_NAMES = (
    "smoothing",
    "sup-embedding",
    "commutator",
    "leibniz-band",
    "chain-rule",
    "leibniz-two-sided",
)


def _run_estimate(name: str, params: EquationParams, alpha: float, samples, seed: int):
    keywords = {"seed": seed}
    if samples is not None:
        keywords["samples"] = samples
    if name == "smoothing":
        return check_smoothing(params, **keywords)
    if name == "sup-embedding":
        return check_sup_embedding(**keywords)
    if name == "commutator":
        return check_commutator(alpha=alpha, **keywords)
    if name == "leibniz-band":
        return check_leibniz_band(alpha=alpha, **keywords)
    if name == "chain-rule":
        return check_chain_rules(alpha=alpha, **keywords)
    return check_leibniz_two_sided(
        alpha=alpha, alpha_first=alpha / 2.0, alpha_second=alpha / 2.0, **keywords
    )


def cmd_verify_estimates(config: dict, out: Path, seed: int, threads: int) -> int:
    names = list(dict.fromkeys(config.get("estimates", _ESTIMATE_NAMES)))
    unknown = [name for name in names if name not in _ESTIMATE_NAMES]
    if unknown:
        raise ConfigError(
            f"config.estimates: unknown estimate '{unknown[0]}' "
            f"(choose from {', '.join(_ESTIMATE_NAMES)})"
        )
    params = _equation_from(config, default={"a": 0.0, "b": 1.0})
    alpha = config.get("alpha", 0.25)
    samples = config.get("samples")
    try:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda name: _run_estimate(name, params, alpha, samples, seed), names
            ))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rows = []
    for result in results:
        for i, (lhs, rhs, ratio) in enumerate(zip(result.lhs, result.rhs, result.ratios)):
            rows.append(
                (result.name, str(result.seed), str(i), _fmt(lhs), _fmt(rhs), _fmt(ratio))
            )
    write_csv(
        out / "estimates.csv",
        ("estimate", "seed", "sample_id", "lhs", "rhs", "ratio"),
        rows,
    )
    summary = {
        result.name: {
            "seed": result.seed,
            "sample_count": result.sample_count,
            "discarded": result.discarded,
            "max_ratio": result.max_ratio,
            "max_ratio_refined": result.max_ratio_refined,
            "drift": result.drift,
            "refinement_stable": result.refinement_stable,
            "exponent_fit": result.exponent_fit,
        }
        for result in results
    }
    write_json(out / "estimates_summary.json", summary)

    for result in results:
        print(
            f"{result.name}: {result.sample_count} samples, "
            f"max ratio {result.max_ratio:.4f}, drift {result.drift:.4f}, "
            f"stable {result.refinement_stable}"
        )
    unstable = [result.name for result in results if not result.refinement_stable]
    if unstable:
        print(f"refinement instability in: {', '.join(unstable)}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def cmd_report(out: Path) -> int:
    if not out.is_dir():
        raise ConfigError(f"{out} is not a directory")
    runs = []
    for path in sorted(out.rglob("manifest.json")):
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: unreadable manifest: {exc}") from exc
        runs.append(data)
        print(
            f"{data.get('command', '?')}: config {data.get('config', '?')}, "
            f"seed {data.get('seed', '?')}, "
            f"{data.get('duration_seconds', 0.0):.2f} s"
        )
    # durations vary run to run; the aggregate stays byte-reproducible
    stripped = [
        {key: value for key, value in run.items() if key != "duration_seconds"}
        for run in runs
    ]
    write_json(out / "report.json", {"run_count": len(runs), "runs": stripped})
    print(f"aggregated {len(runs)} manifests into {out / 'report.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point.
# ---------------------------------------------------------------------------

_COMMANDS = {
    "solve": cmd_solve,
    "verify-oscillatory": cmd_verify_oscillatory,
    "verify-estimates": cmd_verify_estimates,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlsa-lab",
        description=(
            "Solver runs, oscillatory-integral verification, and inequality "
            "sweeps from JSON configs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", required=True, help="path to the JSON config")
    run_flags.add_argument("--out", required=True, help="output directory (created if missing)")
    run_flags.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_flags.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: NLSA_LAB_THREADS or 1)",
    )
    sub.add_parser("solve", parents=[run_flags], help="run the fixed-point solver")
    sub.add_parser(
        "verify-oscillatory", parents=[run_flags],
        help="contour-vs-direct probes and decay-bound ratios",
    )
    sub.add_parser(
        "verify-estimates", parents=[run_flags],
        help="inequality ratio sweeps with refinement stability",
    )
    report = sub.add_parser("report", help="aggregate run manifests under a directory")
    report.add_argument("--out", required=True, help="directory to scan for manifests")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    try:
        if args.command == "report":
            return cmd_report(Path(args.out))
        config = load_config(args.config, _SCHEMAS[args.command])
        seed = args.seed if args.seed is not None else int(config.get("seed", 0))
        threads = _resolve_threads(args.threads)
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
        start = time.perf_counter()
        code = _COMMANDS[args.command](config, out, seed, threads)
        manifest = RunManifest(
            command=args.command,
            config=str(args.config),
            output_dir=str(out),
            seed=seed,
            version=__version__,
            duration_seconds=time.perf_counter() - start,
        )
        write_json(out / "manifest.json", manifest.to_dict())
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
