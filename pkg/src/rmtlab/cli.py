"""Command-line front end: manifest-driven evaluation, simulation, and checks.

Subcommands
-----------
eval         evaluate one moment formula (finite, beta2, ginibre, local, limit)
mc           Monte Carlo power-sum estimates for a scheduled product chain,
             with formula references and sigma verdicts where computable
verify       built-in cross-checks (quadrature vs exact oracle vs simulation);
             exits nonzero if any check fails
limit-shape  table of limit-shape moments over k
edge         rescaled trajectories log(y_i / N^(T+1)) of a Gaussian product
             chain against the interpolating time T / N, as plot-ready rows

Configuration is a flat ``key = value`` file ('#' starts a comment).  Keys:
``theta`` (exact fraction, e.g. ``2/3``), ``N``, schedule entries
``step.<j>.alpha`` / ``step.<j>.M`` for j = 1..T, ``samples``, ``seed``,
``threads``, ``tolerance``, and per-command keys documented in the README
(``mode``, ``k.<j>``, ``t.<j>``, ``gamma.<j>``, ``k_max``, ``t_max``,
``trajectories``, ``beta``).  Command-line flags override config values;
the environment variable ``RMTLAB_SEED`` is the seed fallback when neither
gives one.  Every output embeds the manifest (including the seed), and a
rerun of the same manifest is byte-identical.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import formulas, mcstats, samplers
from .contour import ContourInfeasibleError, QuadratureError
from .oracle import exact_joint_moment
from .process import ProcessSchedule

__all__ = ["Manifest", "ConfigError", "parse_config", "run_manifest", "main"]

_COMMANDS = ("eval", "mc", "verify", "limit-shape", "edge")
_EVAL_MODES = ("finite", "beta2", "ginibre", "local", "limit")


class ConfigError(ValueError):
    """Malformed configuration, with file/line/key context in the message."""


@dataclass(frozen=True)
class Manifest:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    tolerance: float | None = None


# ---------------------------------------------------------------------------
# configuration parsing


def parse_config(path: str) -> dict:
    """Read a flat ``key = value`` file into a string->string mapping."""
    with open(path, "r") as fh:
        text = fh.read()
    params: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{path} line {lineno}: empty key or value in {raw!r}")
        if key in params:
            raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
        params[key] = value
    return params


def _fraction(params, key, default=None) -> Fraction:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = str(params[key])
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(
            f"key {key!r}: expected an exact fraction like '2/3', got {raw!r}"
        ) from None


def _number(params, key, default=None) -> float:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = str(params[key])
    try:
        return float(Fraction(raw))
    except (ValueError, ZeroDivisionError):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from None


def _int(params, key, default=None) -> int:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    raw = str(params[key])
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from None


def _indexed(params, prefix, *, required=False):
    """Collect ``prefix.1``, ``prefix.2``, ... as a contiguous tuple."""
    found = {}
    for key in params:
        if key.startswith(prefix + "."):
            tail = key[len(prefix) + 1 :]
            try:
                idx = int(tail)
            except ValueError:
                raise ConfigError(f"key {key!r}: index {tail!r} is not an integer") from None
            found[idx] = params[key]
    if not found:
        if required:
            raise ConfigError(f"missing required keys {prefix}.1, {prefix}.2, ...")
        return ()
    expected = set(range(1, len(found) + 1))
    if set(found) != expected:
        raise ConfigError(f"keys {prefix}.* must be numbered 1..{len(found)} contiguously")
    return tuple(found[i] for i in sorted(found))


def _schedule_from_params(params) -> ProcessSchedule:
    num_particles = _int(params, "N")
    # the schedule lives under step.<j>.alpha / step.<j>.M
    steps = {}
    for key in params:
        if not key.startswith("step."):
            continue
        parts = key.split(".")
        if len(parts) != 3 or parts[2] not in ("alpha", "M"):
            raise ConfigError(f"key {key!r}: expected step.<j>.alpha or step.<j>.M")
        try:
            idx = int(parts[1])
        except ValueError:
            raise ConfigError(f"key {key!r}: step index {parts[1]!r} is not an integer") from None
        steps.setdefault(idx, {})[parts[2]] = params[key]
    if not steps:
        raise ConfigError("missing schedule keys step.1.alpha / step.1.M")
    if set(steps) != set(range(1, len(steps) + 1)):
        raise ConfigError(f"step indices must be numbered 1..{len(steps)} contiguously")
    pairs = []
    for j in sorted(steps):
        entry = steps[j]
        if "alpha" not in entry or "M" not in entry:
            raise ConfigError(f"step {j} needs both step.{j}.alpha and step.{j}.M")
        pairs.append(
            (_fraction({"x": entry["alpha"]}, "x"), _fraction({"x": entry["M"]}, "x"))
        )
    return ProcessSchedule(num_particles, tuple(pairs))


def _observables(params, default_time, *, integer_k=False):
    """Zip k.<j> with t.<j> (times default to ``default_time``)."""
    ks_raw = _indexed(params, "k", required=True)
    ts_raw = _indexed(params, "t", required=False)
    if integer_k:
        ks = tuple(_int({"x": raw}, "x") for raw in ks_raw)
    else:
        ks = tuple(_number({"x": raw}, "x") for raw in ks_raw)
    if ts_raw:
        if len(ts_raw) != len(ks_raw):
            raise ConfigError("k.* and t.* must have the same count")
        ts = tuple(_int({"x": raw}, "x") for raw in ts_raw)
    else:
        ts = (default_time,) * len(ks)
    return ks, ts


# ---------------------------------------------------------------------------
# output


def _manifest_lines(manifest: Manifest):
    lines = [
        ("command", manifest.command),
        ("seed", manifest.seed),
        ("format", manifest.format),
        ("threads", manifest.threads),
    ]
    if manifest.tolerance is not None:
        lines.append(("tolerance", repr(manifest.tolerance)))
    for key in sorted(manifest.params):
        lines.append((key, manifest.params[key]))
    return lines


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_output(manifest: Manifest, header, rows) -> None:
    if manifest.format == "json":
        payload = {
            "manifest": {str(k): str(v) for k, v in _manifest_lines(manifest)},
            "results": [dict(zip(header, row)) for row in rows],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        for key, value in _manifest_lines(manifest):
            buf.write(f"# {key} = {value}\n")
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(_format_cell(cell) for cell in row) + "\n")
        text = buf.getvalue()
    if manifest.out is None:
        sys.stdout.write(text)
    else:
        with open(manifest.out, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _run_eval(manifest: Manifest):
    params = manifest.params
    mode = params.get("mode", "finite")
    if mode not in _EVAL_MODES:
        raise ConfigError(f"key 'mode': expected one of {_EVAL_MODES}, got {mode!r}")
    tol = manifest.tolerance if manifest.tolerance is not None else 3e-8
    if mode == "finite":
        schedule = _schedule_from_params(params)
        theta = _fraction(params, "theta")
        ks, ts = _observables(params, len(schedule), integer_k=True)
        value = formulas.finite_moments_general_beta(ks, ts, schedule, theta, tol=tol)
    elif mode == "beta2":
        schedule = _schedule_from_params(params)
        ks, ts = _observables(params, len(schedule))
        value = formulas.finite_moments_beta2(ks, ts, schedule, tol=tol)
    elif mode == "ginibre":
        n = _int(params, "N")
        ks, ts = _observables(params, _int(params, "t_max", 1))
        value = formulas.ginibre_moments_beta2(ks, ts, n, tol=tol)
    elif mode == "local":
        theta = _fraction(params, "theta")
        ks_raw = _indexed(params, "k", required=True)
        ks = tuple(_int({"x": raw}, "x") for raw in ks_raw)
        gammas_raw = _indexed(params, "gamma", required=True)
        gammas = tuple(_number({"x": raw}, "x") for raw in gammas_raw)
        if len(gammas) != len(ks):
            raise ConfigError("k.* and gamma.* must have the same count")
        value = formulas.local_moment_general_beta(ks, gammas, theta)
    else:  # limit
        alpha_hats, m_hats = _hat_schedule(params)
        ks, ts = _observables(params, len(alpha_hats), integer_k=True)
        if len(ks) != 1:
            raise ConfigError("limit mode evaluates a single observable; give one k.1")
        value = formulas.limit_shape_moment(ks[0], ts[0], alpha_hats, m_hats)
    label = "*".join(f"P{k:g}@T{t}" for k, t in zip(ks, ts)) if mode != "local" else (
        "*".join(f"P{k}@gamma{g:g}" for k, g in zip(ks, gammas))
    )
    rows = [(mode, label, float(value))]
    _write_output(manifest, ("mode", "observable", "value"), rows)
    return 0


def _hat_schedule(params):
    """Limit-shape step parameters, reusing the step.<j>.alpha/M keys."""
    schedule_keys = [k for k in params if k.startswith("step.")]
    if not schedule_keys:
        raise ConfigError("missing schedule keys step.1.alpha / step.1.M")
    probe = _schedule_from_params({**params, "N": params.get("N", "1")})
    alpha_hats = tuple(float(a) for a, _ in probe.steps)
    m_hats = tuple(float(m) for _, m in probe.steps)
    return alpha_hats, m_hats


def _mc_beta(theta: Fraction) -> int:
    mapping = {Fraction(1, 2): 1, Fraction(1): 2, Fraction(2): 4}
    if theta not in mapping:
        raise ConfigError(
            "simulation requires theta in {1/2, 1, 2} (beta in {1, 2, 4}); "
            f"got theta = {theta}"
        )
    return mapping[theta]


def _run_mc(manifest: Manifest):
    params = manifest.params
    schedule = _schedule_from_params(params)
    theta = _fraction(params, "theta")
    beta = _mc_beta(theta)
    samples = _int(params, "samples", 10_000)
    ks, ts = _observables(params, len(schedule), integer_k=True)
    keep = sorted(set(ts))

    def draw(rng):
        spectra = samplers.product_squared_singular_values(
            schedule, beta, max(keep), rng, keep=set(keep)
        )
        return {spec.time_index: spec for spec in spectra}

    stats = {}
    for k, t in zip(ks, ts):
        stats[f"P{k:g}@T{t}"] = (lambda by_time, k=k, t=t: by_time[t].power_sum(k))
    if len(stats) != len(ks):
        raise ConfigError("duplicate observable: each (k, t) pair may appear once")
    estimates = mcstats.run_mc(
        draw, stats, samples, manifest.seed, threads=manifest.threads
    )
    rows = []
    for (k, t), est in zip(zip(ks, ts), estimates):
        try:
            reference = formulas.finite_moments_general_beta((k,), (t,), schedule, theta)
        except (ContourInfeasibleError, QuadratureError, ValueError):
            reference = None
        if reference is None:
            rows.append(
                (est.stat_id, est.mean, est.stderr, est.count, est.seed, None, None, "n/a")
            )
        else:
            v = mcstats.compare_report(est, reference)
            rows.append(
                (
                    v.stat_id,
                    v.mean,
                    v.stderr,
                    v.count,
                    v.seed,
                    v.z_score,
                    v.reference,
                    "pass" if v.passed else "fail",
                )
            )
    header = ("stat_id", "mean", "stderr", "count", "seed", "z_score", "reference", "verdict")
    _write_output(manifest, header, rows)
    return 0


def _run_limit_shape(manifest: Manifest):
    params = manifest.params
    alpha_hats, m_hats = _hat_schedule(params)
    k_max = _int(params, "k_max", 8)
    if k_max < 1:
        raise ConfigError("key 'k_max': must be >= 1")
    t = _int(params, "t_max", len(alpha_hats))
    rows = [
        (k, t, float(formulas.limit_shape_moment(k, t, alpha_hats, m_hats)))
        for k in range(1, k_max + 1)
    ]
    _write_output(manifest, ("k", "t", "moment"), rows)
    return 0


def _run_edge(manifest: Manifest):
    params = manifest.params
    n = _int(params, "N")
    t_max = _int(params, "t_max")
    trajectories = _int(params, "trajectories", 1)
    beta = _int(params, "beta", 2)
    if beta not in (1, 2):
        raise ConfigError("key 'beta': edge trajectories support beta 1 or 2")
    if n < 1 or t_max < 1 or trajectories < 1:
        raise ConfigError("N, t_max and trajectories must all be >= 1")
    log_n = math.log(n)
    rows = []
    for r in range(trajectories):
        rng = np.random.default_rng(np.random.SeedSequence(manifest.seed, spawn_key=(r,)))
        state = samplers.MatrixProductState(n)
        for t in range(1, t_max + 1):
            state.multiply(samplers.sample_ginibre(beta, n, n, rng))
            logs = state.log_squared_singular_values()
            t_hat = t / n
            for i, log_val in enumerate(logs, start=1):
                rows.append((r, t, t_hat, i, float(log_val - (t + 1) * log_n)))
    header = ("trajectory", "time", "t_hat", "i", "log_rescaled")
    _write_output(manifest, header, rows)
    return 0


def _run_verify(manifest: Manifest):
    params = manifest.params
    tol = manifest.tolerance if manifest.tolerance is not None else 1e-7
    samples = _int(params, "samples", 20_000)
    rows = []
    failures = 0

    def check(check_id, route_a, route_b, value_a, value_b, discrepancy, gate):
        nonlocal failures
        ok = discrepancy <= gate
        if not ok:
            failures += 1
        rows.append(
            (check_id, route_a, route_b, float(value_a), float(value_b),
             float(discrepancy), float(gate), "pass" if ok else "fail")
        )

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-300)

    # quadrature vs the exact symmetric-function oracle
    oracle_cases = [
        (1, Fraction(1, 2), ProcessSchedule.constant(1, 1, 2, 2), (2,), (2,)),
        (2, Fraction(1), ProcessSchedule.constant(2, 1, 2, 1), (1, 1), (1, 1)),
        (2, Fraction(2), ProcessSchedule(2, ((1, 2), (2, 1))), (2,), (2,)),
        (2, Fraction(2, 3), ProcessSchedule.constant(2, Fraction(3, 2), 2, 2), (1,), (2,)),
    ]
    for n, theta, schedule, ks, ts in oracle_cases:
        got = formulas.finite_moments_general_beta(ks, ts, schedule, theta)
        want = float(exact_joint_moment(ks, ts, schedule, theta))
        label = "P" + "+".join(str(k) for k in ks)
        check(
            f"quadrature-vs-oracle:N{n}:theta{theta}:{label}",
            "finite_moments_general_beta",
            "exact_joint_moment",
            got,
            want,
            rel(got, want),
            tol,
        )

    # closed forms for one particle
    schedule_b2 = ProcessSchedule.constant(1, 1, 1, 2)
    for c in (0.3, 1.0, 2.5):
        got = formulas.finite_moments_beta2((c,), (2,), schedule_b2)
        want = formulas.beta2_single_particle_closed_form(c, 2, schedule_b2)
        check(
            f"beta2-closed-form:c{c:g}",
            "finite_moments_beta2",
            "beta_product_moments",
            got,
            want,
            rel(got, want),
            tol,
        )
        got = formulas.ginibre_moments_beta2((c,), (2,), 1)
        want = formulas.ginibre_single_particle_closed_form(c, 2)
        check(
            f"ginibre-closed-form:c{c:g}",
            "ginibre_moments_beta2",
            "gamma_power",
            got,
            want,
            rel(got, want),
            tol,
        )

    # normalization of the local observable
    for theta, gamma in ((Fraction(1, 2), 0.7), (Fraction(1), 1.3)):
        got = formulas.local_moment_general_beta((1,), (gamma,), theta)
        check(
            f"local-normalization:theta{theta}:gamma{gamma:g}",
            "local_moment_general_beta",
            "exact_unit",
            got,
            1.0,
            abs(got - 1.0),
            tol,
        )

    # limit shape reference value
    got = formulas.limit_shape_moment(1, 1, (1.0,), (1.0,))
    check(
        "limit-shape:P1",
        "limit_shape_moment",
        "exact_two_thirds",
        got,
        2.0 / 3.0,
        abs(got - 2.0 / 3.0),
        tol,
    )

    # simulation vs quadrature
    schedule_mc = ProcessSchedule.constant(1, 1, 1, 1)

    def draw(rng):
        (spec,) = samplers.product_squared_singular_values(schedule_mc, 2, 1, rng, keep={1})
        return spec.power_sum(1)

    (est,) = mcstats.run_mc(
        draw, {"P1@T1": lambda v: v}, samples, manifest.seed, threads=manifest.threads
    )
    reference = formulas.finite_moments_general_beta((1,), (1,), schedule_mc, 1)
    verdict = mcstats.compare_report(est, reference)
    check(
        "mc-vs-quadrature:P1@T1",
        "run_mc",
        "finite_moments_general_beta",
        est.mean,
        reference,
        abs(verdict.z_score),
        4.0,
    )

    header = (
        "check_id", "route_a", "route_b", "value_a", "value_b",
        "discrepancy", "gate", "verdict",
    )
    _write_output(manifest, header, rows)
    return 0 if failures == 0 else 1


_RUNNERS = {
    "eval": _run_eval,
    "mc": _run_mc,
    "verify": _run_verify,
    "limit-shape": _run_limit_shape,
    "edge": _run_edge,
}


def run_manifest(manifest: Manifest) -> int:
    """Execute one manifest; returns the process exit status."""
    if manifest.command not in _RUNNERS:
        raise ConfigError(f"unknown command {manifest.command!r}")
    if manifest.format not in ("csv", "json"):
        raise ConfigError(f"unknown format {manifest.format!r}")
    if manifest.threads < 1:
        raise ConfigError("threads must be >= 1")
    return _RUNNERS[manifest.command](manifest)


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmtlab",
        description="random-matrix product laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("eval", "evaluate one moment formula"),
        ("mc", "Monte Carlo power-sum estimates with formula references"),
        ("verify", "built-in cross-route checks; nonzero exit on failure"),
        ("limit-shape", "limit-shape moment table over k"),
        ("edge", "rescaled edge trajectories of a Gaussian product chain"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--seed", type=int, help="64-bit seed (overrides config)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("--tolerance", type=float, help="check / quadrature tolerance")
    return parser


_MANIFEST_KEYS = ("seed", "threads", "tolerance", "format")


def _resolve_manifest(args) -> Manifest:
    params = parse_config(args.config) if args.config else {}
    params = dict(params)

    seed = args.seed
    if seed is None and "seed" in params:
        seed = _int(params, "seed")
    if seed is None and os.environ.get("RMTLAB_SEED"):
        try:
            seed = int(os.environ["RMTLAB_SEED"])
        except ValueError:
            raise ConfigError(
                f"RMTLAB_SEED: expected an integer, got {os.environ['RMTLAB_SEED']!r}"
            ) from None
    if seed is None:
        seed = 0
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 bits")

    threads = args.threads if args.threads is not None else _int(params, "threads", 1)
    tolerance = args.tolerance
    if tolerance is None and "tolerance" in params:
        tolerance = _number(params, "tolerance")
    fmt = args.format if args.format else params.get("format", "csv")
    for key in _MANIFEST_KEYS:
        params.pop(key, None)
    return Manifest(
        command=args.command,
        params=params,
        seed=seed,
        out=args.out,
        format=fmt,
        threads=threads,
        tolerance=tolerance,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        manifest = _resolve_manifest(args)
        return run_manifest(manifest)
    except ConfigError as exc:
        print(f"rmtlab: config error: {exc}", file=sys.stderr)
        return 2
    except (ContourInfeasibleError, QuadratureError, ValueError, samplers.StabilityError) as exc:
        print(f"rmtlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
