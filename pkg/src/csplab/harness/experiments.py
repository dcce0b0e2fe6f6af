"""Experiment runners.

Every runner consumes an ExperimentConfig and produces a ResultRecord
whose rows and aggregates are pure functions of (config, seed): each
replication derives its own random stream from the master seed and its
index, so results do not depend on worker count or completion order.
Wall-clock fields are informational only and excluded from the record
digest.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from scipy import optimize

from .. import analytic, csp, qaoa_sim
from ..csp import (
    WeightDistribution,
    dist_cut,
    dist_ksat,
    dist_kxor,
    gen_scopes_bounded,
    gen_scopes_circulant,
    gen_scopes_clique,
    gen_scopes_no_overlap,
    has_gf2_independent_neighborhoods,
    instance_from_dict,
    sample_instance,
    sample_weighted_xor,
)
from ..greedy import run_greedy
from ..qaoa_sim import (
    CostOperator,
    brute_force_optimum,
    build_cost,
    expectation_of_cost,
    per_constraint_expectation,
    qaoa_state,
    sample,
)
from .models import ExperimentConfig, InstanceRequest, ResultRecord, ToleranceCheck


class ConfigError(ValueError):
    """Configuration is structurally valid but unusable for the requested kind."""


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based replication stream: independent of sibling streams."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def _map_indexed(fn: Callable[[int], dict], count: int, workers: int) -> list[dict]:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _digest(rows: list[dict], aggregate: dict) -> str:
    trimmed = [{k: v for k, v in row.items() if k != "wall_ms"} for row in rows]
    payload = json.dumps({"rows": trimmed, "aggregate": aggregate}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


class _Checks:
    """Accumulates named tolerance comparisons, honoring config overrides."""

    def __init__(self, overrides: dict[str, float]):
        self.overrides = overrides
        self.items: dict[str, ToleranceCheck] = {}

    def at_most(self, name: str, value: float, limit: float):
        limit = float(self.overrides.get(name, limit))
        self.items[name] = ToleranceCheck(
            value=float(value), limit=limit, comparison="<=", ok=bool(value <= limit)
        )

    def at_least(self, name: str, value: float, limit: float):
        limit = float(self.overrides.get(name, limit))
        self.items[name] = ToleranceCheck(
            value=float(value), limit=limit, comparison=">=", ok=bool(value >= limit)
        )


def _beta(cfg: ExperimentConfig, default: float) -> float:
    return float(cfg.beta) if cfg.beta is not None else default


def _gamma(cfg: ExperimentConfig, excess_degree: int) -> float:
    if cfg.gamma is not None:
        return float(cfg.gamma)
    return cfg.g / math.sqrt(excess_degree)


def _predicate_distribution(family: str, k: int):
    if family == "kxor":
        return dist_kxor(k)
    if family == "ksat":
        return dist_ksat(k)
    if family == "cut":
        if k != 2:
            raise ConfigError("the cut family is binary; set k = 2")
        return dist_cut()
    raise ConfigError(f"family {family!r} has no predicate distribution")


def _weight_distribution(spec) -> WeightDistribution:
    if spec is None:
        return WeightDistribution.gaussian(1.0)
    return WeightDistribution(spec.kind, spec.scale)


# ---------------------------------------------------------------------------
# validate: closed form vs state vector, exact baseline, phase-shift invariance
# ---------------------------------------------------------------------------


def _exact_formula_instance(cfg, n, m, k, cap, index):
    if cfg.instance is not None:
        inst = instance_from_dict(cfg.instance)
        if not inst.check_no_overlap():
            raise ConfigError("provided instance has overlapping constraints")
        return inst
    for attempt in range(200):
        scopes = gen_scopes_no_overlap(n, m, k, cap, derived_rng(cfg.seed, index, attempt, 0))
        if not has_gf2_independent_neighborhoods(scopes):
            continue
        if cfg.family == "weighted-xor":
            return sample_weighted_xor(
                scopes,
                _weight_distribution(cfg.weights),
                derived_rng(cfg.seed, index, attempt, 1),
                n=n,
                max_degree=cap,
            )
        return sample_instance(
            scopes, dist_kxor(k), derived_rng(cfg.seed, index, attempt, 1), n=n, max_degree=cap
        )
    raise ConfigError("could not draw independence-filtered scopes; lower m or the degree cap")


def _run_validate(cfg: ExperimentConfig, checks: _Checks):
    if cfg.family not in ("kxor", "weighted-xor"):
        raise ConfigError("validate needs scope-covering monomial predicates (kxor/weighted-xor)")
    n = cfg.n or 18
    m = cfg.m or 12
    k = cfg.k
    excess = cfg.excess_degree or 2
    cap = excess + 1
    beta = _beta(cfg, math.pi / 8)
    gamma = _gamma(cfg, excess)
    count = 1 if cfg.instance is not None else (cfg.replications or 20)
    if n > qaoa_sim.DEFAULT_QUBIT_CAP:
        raise ConfigError(f"n={n} exceeds the simulator cap")

    def one(index: int) -> dict:
        t0 = time.perf_counter()
        inst = _exact_formula_instance(cfg, n, m, k, cap, index)
        op = build_cost(inst, "truncated")
        state = qaoa_state(op, beta, gamma)
        per = per_constraint_expectation(state, inst)
        oracle = 0.0
        for u in range(inst.m):
            want = analytic.no_overlap_term_expectation(inst, u, beta, gamma)
            got = per[u] - inst.constraints[u].predicate.mean()
            oracle = max(oracle, abs(got - want))
        state0 = qaoa_state(op, 0.0, 0.0)
        baseline = abs(expectation_of_cost(state0, build_cost(inst, "full")) - inst.mu() * inst.m)
        shifted = CostOperator(
            inst.n, list(zip(op.masks, op.weights)), op.constant_offset + 1.0
        )
        state_shift = qaoa_state(shifted, beta, gamma)
        shift = float(np.max(np.abs(state.probabilities() - state_shift.probabilities())))
        return {
            "index": index,
            "seed_key": [cfg.seed, index],
            "n": inst.n,
            "m": inst.m,
            "oracle_discrepancy": float(oracle),
            "baseline_error": float(baseline),
            "shift_error": shift,
            "wall_ms": (time.perf_counter() - t0) * 1e3,
        }

    rows = _map_indexed(one, count, cfg.workers)
    aggregate = {
        "instances": count,
        "max_oracle_discrepancy": max(r["oracle_discrepancy"] for r in rows),
        "max_baseline_error": max(r["baseline_error"] for r in rows),
        "max_shift_error": max(r["shift_error"] for r in rows),
    }
    checks.at_most("oracle_discrepancy", aggregate["max_oracle_discrepancy"], 1e-10)
    checks.at_most("baseline_mu_error", aggregate["max_baseline_error"], 1e-12)
    checks.at_most("phase_shift_error", aggregate["max_shift_error"], 1e-12)
    return rows, aggregate


# ---------------------------------------------------------------------------
# sign-resampled ensembles (pair and triple families)
# ---------------------------------------------------------------------------


def _ensemble_rows(cfg, scopes, k, n, beta, gamma, reps):
    dist = _predicate_distribution(cfg.family, k)
    base_inst = sample_instance(scopes, dist, derived_rng(cfg.seed, 0), n=n)
    base_op = build_cost(base_inst, "full")
    mu_m = base_inst.mu() * base_inst.m

    def one(rep: int) -> dict:
        t0 = time.perf_counter()
        inst = sample_instance(scopes, dist, derived_rng(cfg.seed, rep), n=n)
        op = base_op.with_weights(build_cost(inst, "full").weights)
        state = qaoa_state(op, beta, gamma)
        exp = expectation_of_cost(state, op)
        row = {
            "rep": rep,
            "seed_key": [cfg.seed, rep],
            "expectation": float(exp),
            "advantage": float(exp - mu_m),
            "wall_ms": (time.perf_counter() - t0) * 1e3,
        }
        if cfg.shots:
            draws = sample(state, cfg.shots, derived_rng(cfg.seed, rep, 1))
            row["best_sample"] = float(np.max(op.value_at(draws)))
        return row

    return _map_indexed(one, reps, cfg.workers), mu_m


def _ensemble_aggregate(rows, analytic_mean, m, k, excess):
    adv = np.array([r["advantage"] for r in rows])
    exp = np.array([r["expectation"] for r in rows])
    se = float(adv.std(ddof=1) / math.sqrt(adv.size))
    variance = float(exp.var(ddof=1))
    light_cone = k * (k - 1) * excess + k
    return {
        "replications": len(rows),
        "mean_advantage": float(adv.mean()),
        "standard_error": se,
        "empirical_variance": variance,
        "analytic_mean": analytic_mean,
        "variance_bound": float(m * light_cone * (excess + 1)),
        "failure_fraction_nonpositive": float(np.mean(adv <= 0.0)),
    }


def _run_ensemble_2xor(cfg: ExperimentConfig, checks: _Checks):
    n = cfg.n or 14
    excess = cfg.excess_degree or 4
    beta = _beta(cfg, math.pi / 8)
    gamma = _gamma(cfg, excess)
    reps = cfg.replications or 500
    if cfg.family not in ("kxor",):
        raise ConfigError("ensemble-2xor resamples signs of pair parity constraints")
    if n > qaoa_sim.DEFAULT_QUBIT_CAP:
        raise ConfigError(f"n={n} exceeds the simulator cap")
    scopes = gen_scopes_circulant(n, excess + 1)
    m = len(scopes)
    degrees = np.zeros(n, dtype=int)
    for a, b in scopes:
        degrees[a] += 1
        degrees[b] += 1
    edge_excess = [(int(degrees[a] - 1), int(degrees[b] - 1)) for a, b in scopes]
    analytic_mean = analytic.avg_advantage_2xor(edge_excess, beta, gamma)

    rows, _ = _ensemble_rows(cfg, scopes, 2, n, beta, gamma, reps)
    aggregate = _ensemble_aggregate(rows, analytic_mean, m, 2, excess)
    sigma_distance = (
        abs(aggregate["mean_advantage"] - analytic_mean) / aggregate["standard_error"]
        if aggregate["standard_error"] > 0
        else 0.0
    )
    aggregate["sigma_distance"] = float(sigma_distance)
    checks.at_most("ensemble_mean_sigma", sigma_distance, 3.0)
    checks.at_most("count_variance", aggregate["empirical_variance"], aggregate["variance_bound"])
    return rows, aggregate


def _run_variance_study(cfg: ExperimentConfig, checks: _Checks):
    n = cfg.n or 15
    excess = cfg.excess_degree or 4
    cap = excess + 1
    k = cfg.k
    m = cfg.m or int(0.9 * n * cap / k)
    beta = _beta(cfg, math.pi / 8)
    gamma = _gamma(cfg, excess)
    reps = cfg.replications or 500
    if n > qaoa_sim.DEFAULT_QUBIT_CAP:
        raise ConfigError(f"n={n} exceeds the simulator cap")
    scopes = gen_scopes_bounded(n, m, k, cap, derived_rng(cfg.seed, 0, 0))

    rows, _ = _ensemble_rows(cfg, scopes, k, n, beta, gamma, reps)
    aggregate = _ensemble_aggregate(rows, None, m, k, excess)
    # high-probability scaling diagnostic, reported but not asserted
    aggregate["d_cubed_over_m"] = float(excess**3 / m)
    checks.at_most("count_variance", aggregate["empirical_variance"], aggregate["variance_bound"])
    return rows, aggregate


# ---------------------------------------------------------------------------
# grid scans
# ---------------------------------------------------------------------------


def _pair_scaled_advantage(excess: int, beta: float, g: float) -> float:
    """Per-constraint ensemble advantage times sqrt(D) on a D-regular pair graph."""
    gamma = g / math.sqrt(excess)
    return analytic.avg_advantage_2xor([(excess, excess)], beta, gamma) * math.sqrt(excess)


def _run_scan_d(cfg: ExperimentConfig, checks: _Checks):
    beta = _beta(cfg, math.pi / 8)
    if cfg.family == "cut":
        d_grid = cfg.d_grid or [3, 5, 7]
        rows = []
        for d in d_grid:
            t0 = time.perf_counter()
            q = d + 1
            if q > qaoa_sim.DEFAULT_QUBIT_CAP:
                raise ConfigError(f"clique size {q} exceeds the simulator cap")
            inst = sample_instance(gen_scopes_clique(q), dist_cut(), seed=0, n=q)
            op = build_cost(inst, "full")
            state = qaoa_state(op, beta, _gamma(cfg, d))
            adv = expectation_of_cost(state, op) - inst.mu() * inst.m
            rows.append(
                {
                    "D": d,
                    "n": q,
                    "m": inst.m,
                    "scaled_advantage": float(adv / inst.m * math.sqrt(d)),
                    "wall_ms": (time.perf_counter() - t0) * 1e3,
                }
            )
        values = [r["scaled_advantage"] for r in rows]
        aggregate = {"d_grid": list(d_grid), "scaled_advantage": values}
        worst_step = max(b - a for a, b in zip(values, values[1:]))
        checks.at_most("clique_scaled_advantage_decreasing", worst_step, -1e-9)
        return rows, aggregate

    if cfg.family != "kxor":
        raise ConfigError("scan-d supports the pair parity family (kxor) or cut cliques")
    d_grid = cfg.d_grid or [4, 9, 16]
    rows = []
    for d in d_grid:
        t0 = time.perf_counter()
        rows.append(
            {
                "D": d,
                "scaled_advantage": float(_pair_scaled_advantage(d, beta, cfg.g)),
                "wall_ms": (time.perf_counter() - t0) * 1e3,
            }
        )
    target = 1 / (2 * math.sqrt(math.e))
    top = rows[-1]["scaled_advantage"]
    aggregate = {
        "d_grid": list(d_grid),
        "scaled_advantage": [r["scaled_advantage"] for r in rows],
        "prefactor_target": target,
        "relative_error_at_largest_d": abs(top - target) / target,
    }
    checks.at_most(
        "prefactor_relative_error", aggregate["relative_error_at_largest_d"], 0.25
    )
    return rows, aggregate


def _run_scan_g(cfg: ExperimentConfig, checks: _Checks):
    if cfg.family != "kxor":
        raise ConfigError("scan-g sweeps the pair parity family; set family=kxor")
    beta = _beta(cfg, math.pi / 8)
    excess = cfg.excess_degree or 16
    g_grid = cfg.g_grid or [round(0.2 + 0.05 * i, 2) for i in range(37)]
    rows = []
    for g in g_grid:
        t0 = time.perf_counter()
        rows.append(
            {
                "g": float(g),
                "scaled_advantage": float(_pair_scaled_advantage(excess, beta, g)),
                "wall_ms": (time.perf_counter() - t0) * 1e3,
            }
        )
    best = max(range(len(rows)), key=lambda i: rows[i]["scaled_advantage"])
    lo = g_grid[max(best - 1, 0)]
    hi = g_grid[min(best + 1, len(g_grid) - 1)]
    res = optimize.minimize_scalar(
        lambda g: -_pair_scaled_advantage(excess, beta, g),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-8},
    )
    aggregate = {
        "excess_degree": excess,
        "argmax_g": float(res.x),
        "max_scaled_advantage": float(-res.fun),
    }
    checks.at_most("argmax_g_upper", aggregate["argmax_g"], 1.2)
    checks.at_least("argmax_g_lower", aggregate["argmax_g"], 0.8)
    return rows, aggregate


# ---------------------------------------------------------------------------
# greedy ensemble study
# ---------------------------------------------------------------------------


def _run_greedy_study(cfg: ExperimentConfig, checks: _Checks):
    d_grid = cfg.d_grid or [4, 9, 16]
    n_grid = cfg.n_grid or [6 * (d + 1) for d in d_grid]
    if len(n_grid) != len(d_grid):
        raise ConfigError("n_grid must match d_grid")
    k = cfg.k
    reps = cfg.replications or 2000
    if cfg.family not in ("kxor", "ksat"):
        raise ConfigError("greedy-study needs a typical family (kxor or ksat)")
    dist = _predicate_distribution(cfg.family, k)

    rows = []
    per_point = []
    for d_idx, (d, n) in enumerate(zip(d_grid, n_grid)):
        cap = d + 1
        m = int(0.8 * n * cap / k)
        scopes = gen_scopes_no_overlap(n, m, k, cap, derived_rng(cfg.seed, d_idx, 0))

        def one(rep: int) -> dict:
            t0 = time.perf_counter()
            inst = sample_instance(
                scopes, dist, derived_rng(cfg.seed, d_idx, rep, 1), n=n, max_degree=cap
            )
            _, value = run_greedy(inst, derived_rng(cfg.seed, d_idx, rep, 2))
            return {
                "D": d,
                "rep": rep,
                "seed_key": [cfg.seed, d_idx, rep],
                "value": float(value),
                "advantage": float(value - inst.mu() * inst.m),
                "wall_ms": (time.perf_counter() - t0) * 1e3,
            }

        point_rows = _map_indexed(one, reps, cfg.workers)
        rows.extend(point_rows)
        adv = np.array([r["advantage"] for r in point_rows])
        se = float(adv.std(ddof=1) / math.sqrt(adv.size))
        per_point.append(
            {
                "D": d,
                "n": n,
                "m": m,
                "mean_advantage": float(adv.mean()),
                "standard_error": se,
                "sigma": float(adv.mean() / se) if se > 0 else math.inf,
                "scaled_advantage": float(adv.mean() / m * math.sqrt(d)),
            }
        )

    scaled = [p["scaled_advantage"] for p in per_point]
    ratios = [b / a for a, b in zip(scaled, scaled[1:])]
    aggregate = {"points": per_point, "scaled_ratios": ratios}
    checks.at_least("positivity_sigma", min(p["sigma"] for p in per_point), 5.0)
    if ratios:
        checks.at_least("scaled_ratio_min", min(ratios), 0.6)
        checks.at_most("scaled_ratio_max", max(ratios), 1.6)
    return rows, aggregate


# ---------------------------------------------------------------------------
# minimum-energy study on zero-mean weighted instances
# ---------------------------------------------------------------------------


def _run_lambda_min(cfg: ExperimentConfig, checks: _Checks):
    n = cfg.n or 18
    excess = cfg.excess_degree or 9
    cap = excess + 1
    k = cfg.k
    m = cfg.m or int(0.9 * n * cap / k)
    wdist = _weight_distribution(cfg.weights)
    if wdist.variance() <= 0:
        raise ConfigError("lambda-min needs a nondegenerate weight distribution")
    beta = _beta(cfg, analytic.optimize_beta(k, cfg.g, wdist.variance()))
    gamma = _gamma(cfg, excess)
    shots = cfg.shots or 1000
    count = cfg.replications or 20
    if n > qaoa_sim.DEFAULT_QUBIT_CAP:
        raise ConfigError(f"n={n} exceeds the simulator cap")

    def one(index: int) -> dict:
        t0 = time.perf_counter()
        scopes = gen_scopes_bounded(n, m, k, cap, derived_rng(cfg.seed, index, 0))
        inst = sample_weighted_xor(
            scopes, wdist, derived_rng(cfg.seed, index, 1), n=n, max_degree=cap
        )
        op = build_cost(inst, "truncated")
        # minimize the energy: drive the phase with the negated weights
        state = qaoa_state(op.with_weights(-op.weights), beta, gamma)
        draws = sample(state, shots, derived_rng(cfg.seed, index, 2))
        best = float(np.min(op.value_at(draws)))
        _, brute_min = brute_force_optimum(op, minimize=True)
        return {
            "index": index,
            "seed_key": [cfg.seed, index],
            "m": m,
            "expectation_energy": float(expectation_of_cost(state, op)),
            "best_sampled_energy": best,
            "brute_force_minimum": float(brute_min),
            "wall_ms": (time.perf_counter() - t0) * 1e3,
        }

    rows = _map_indexed(one, count, cfg.workers)
    threshold = -0.1 * m / math.sqrt(excess)
    aggregate = {
        "instances": count,
        "beta": beta,
        "energy_threshold": threshold,
        "worst_best_sampled": max(r["best_sampled_energy"] for r in rows),
        "min_gap_above_brute": min(
            r["best_sampled_energy"] - r["brute_force_minimum"] for r in rows
        ),
    }
    checks.at_most("sampled_energy", aggregate["worst_best_sampled"], threshold)
    checks.at_least("sampled_above_brute_minimum", aggregate["min_gap_above_brute"], -1e-9)
    return rows, aggregate


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_RUNNERS = {
    "validate": _run_validate,
    "ensemble-2xor": _run_ensemble_2xor,
    "variance-study": _run_variance_study,
    "scan-d": _run_scan_d,
    "scan-g": _run_scan_g,
    "greedy-study": _run_greedy_study,
    "lambda-min": _run_lambda_min,
}


def run_experiment(cfg: ExperimentConfig) -> ResultRecord:
    """Run one experiment and assemble its reproducible record."""
    t0 = time.perf_counter()
    checks = _Checks(cfg.tolerances)
    runner = _RUNNERS[cfg.kind]
    rows, aggregate = runner(cfg, checks)
    return ResultRecord(
        config=cfg,
        rows=rows,
        aggregate=aggregate,
        checks=checks.items,
        passed=all(c.ok for c in checks.items.values()),
        digest=_digest(rows, aggregate),
        wall_seconds=time.perf_counter() - t0,
    )


def generate_instance(req: InstanceRequest) -> dict:
    """Build one instance per the request and return its file payload."""
    if req.scopes == "clique":
        scopes = gen_scopes_clique(req.q or (req.max_degree + 1))
        n = max(v for s in scopes for v in s) + 1
    elif req.scopes == "circulant":
        scopes = gen_scopes_circulant(req.n, req.max_degree)
        n = req.n
    else:
        if req.m is None:
            raise ConfigError("m is required for sampled scope sets")
        gen = gen_scopes_no_overlap if req.scopes == "no-overlap" else gen_scopes_bounded
        scopes = gen(req.n, req.m, req.k, req.max_degree, derived_rng(req.seed, 0))
        n = req.n
    if req.family == "weighted-xor":
        inst = sample_weighted_xor(
            scopes,
            _weight_distribution(req.weights),
            derived_rng(req.seed, 1),
            mu=req.mu,
            n=n,
            max_degree=req.max_degree,
        )
    else:
        k = len(scopes[0])
        dist = _predicate_distribution(req.family, k)
        inst = sample_instance(scopes, dist, derived_rng(req.seed, 1), n=n, max_degree=req.max_degree)
    return csp.instance_to_dict(inst)
