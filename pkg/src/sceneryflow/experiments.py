"""Named, seeded experiment pipelines with CSV/JSON emission.

Each experiment is a pure function of (params, seed) returning result rows
with a fixed column order plus summary extras for the run manifest. Reruns
with the same config and seed are byte-identical: randomness comes only
from a seeded generator (numpy PCG64 via default_rng) and floats are
written with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .cp import cp_scenery, interior_window_fraction
from .distribution import EmpiricalDistribution, cube_mass_function, dirac, integrate
from .dyadic import Word, word_from_index
from .flow import center, tangent_distribution_probe
from .measure import DyadicMeasure, ProductMeasure, bernoulli, cube_center, lebesgue
from .metric import distribution_distance, measure_distance
from .splice import (
    SpliceSchedule,
    cut_window_counts,
    mixture_defect_bound,
    periodic_splice_QN,
    usm_splice,
)

LOG2 = math.log(2.0)
RNG_ALGORITHM = "numpy default_rng (PCG64)"


def fmt(value) -> str:
    """Fixed 17-significant-digit rendering for byte-stable tables."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


# -- fixtures shared by the splice experiments -------------------------------------


def alternating_product(law_a, law_b, period: int, depth: int) -> ProductMeasure:
    """Product measure whose digit law alternates between two laws in
    blocks of ``period`` levels."""
    rows = []
    block = [law_a] * period + [law_b] * period
    while len(rows) < depth:
        rows.extend(block)
    return ProductMeasure(1, np.array(rows[:depth], dtype=float))


def phase_mixture(comp: ProductMeasure, cycle: int, p: int) -> EmpiricalDistribution:
    """The distribution a periodic product law generates: uniform over the
    cyclic shifts of its digit laws, at resolution p."""
    atoms = []
    for phase in range(cycle):
        laws = np.vstack([comp.digit_laws[phase:], comp.digit_laws[:phase]])[:p]
        atoms.append((1.0 / cycle, DyadicMeasure(1, ProductMeasure(1, laws).level_masses(p))))
    return EmpiricalDistribution(atoms, p).merge()


# -- experiments --------------------------------------------------------------------


def run_lebesgue_smoke(params: dict, seed: int):
    """Distances between uniform fixtures along every pipeline: all zero."""
    p = int(params.get("p", 3))
    depth = int(params.get("depth", 10))
    rng = np.random.default_rng(seed)
    mu = lebesgue(1, depth)
    rows = []

    d_meas = measure_distance(mu, bernoulli(1, [0.5, 0.5], depth), p)
    rows.append({"check": "uniform-vs-fair-product", "p": p, "value": d_meas})

    q = tangent_distribution_probe(mu, [0.05], [2 * LOG2, 4 * LOG2], 4, p)
    rows.append({"check": "probe-successive", "p": p, "value": distribution_distance(q[0], q[1], p)})

    word = Word(mu.sample_word(rng, depth), 1)
    sc = cp_scenery(mu, word, 3, p)
    res = center(sc, 2, 32, rng, p)
    rows.append(
        {
            "check": "center-vs-dirac",
            "p": p,
            "value": distribution_distance(res.distribution, dirac(lebesgue(1, p), p), p),
        }
    )
    extras = {"all_zero": all(abs(r["value"]) <= 1e-12 for r in rows)}
    return rows, extras


def run_splice_convergence(params: dict, seed: int):
    """Periodic splices of a uniform and a product component versus their
    mixture, with the flush-cut defect bound and Monte Carlo slack."""
    p = int(params.get("p", 2))
    law = list(params.get("component_law", [0.3, 0.7]))
    periods = [int(v) for v in params.get("periods", [8, 16, 32, 64])]
    samples = int(params.get("samples", 10_000))
    t = [int(v) for v in params.get("t", [1, 1])]
    q_den = int(params.get("q", 2))
    comp_depth = max(periods) + p + 4
    r1 = dirac(ProductMeasure.lebesgue(1, comp_depth), p)
    r2 = dirac(ProductMeasure.bernoulli(1, law, comp_depth), p)
    targets = 0.5 * (lebesgue(1, p).masses + bernoulli(1, law, p).masses)
    rng = np.random.default_rng(seed)
    rows = []
    for period in periods:
        qn = periodic_splice_QN([r1, r2], t, q_den, period, samples, rng, p)
        bound = mixture_defect_bound(t, q_den, period, p)
        counts = cut_window_counts(t, q_den, period, p)
        for i in range(1 << p):
            f = cube_mass_function(word_from_index(i, p, 1))
            got = integrate(qn, f)
            vals = np.array([f(a.mu) for _, a in qn.atoms])
            w = qn.weights
            mean = float(vals @ w)
            mc = 3.0 * math.sqrt(max(0.0, float(((vals - mean) ** 2) @ w)) / samples)
            rows.append(
                {
                    "N": period,
                    "cube": i,
                    "integral": got,
                    "target": float(targets[i]),
                    "defect_bound": bound,
                    "mc_slack": mc,
                    "flush_cuts": counts[0],
                    "within_bound": abs(got - float(targets[i])) <= bound + mc,
                }
            )
    extras = {
        "bounds_decreasing": all(
            a < b
            for a, b in zip(
                [mixture_defect_bound(t, q_den, n, p) for n in periods[1:]],
                [mixture_defect_bound(t, q_den, n, p) for n in periods[:-1]],
            )
        ),
        "all_within_bound": all(r["within_bound"] for r in rows),
    }
    return rows, extras


def run_usm_convergence(params: dict, seed: int):
    """Splice components with growing alternation periods and check the
    orbit-average distance to the limiting mixture at the block checkpoints
    against the assembled bookkeeping bound."""
    p = int(params.get("p", 3))
    depth = int(params.get("depth", 24))
    law_a = list(params.get("law_a", [0.7, 0.3]))
    law_b = list(params.get("law_b", [0.3, 0.7]))
    periods = [int(v) for v in params.get("component_periods", [2, 4, 8])]
    thresholds = tuple(int(v) for v in params.get("m", [1, 1, 1, 1]))
    growth = float(params.get("growth_factor", 4.0))
    eps = float(params.get("eps", 0.1))
    schedule = SpliceSchedule.usm(thresholds, growth_factor=growth, eps=eps, max_depth=depth)
    sums = schedule.partial_sums
    comp_depth = max(schedule.n) + p + 2
    comps = [
        alternating_product(law_a, law_b, periods[i % len(periods)], comp_depth)
        for i in range(len(schedule.n))
    ]
    mu = usm_splice(comps, schedule, depth)
    rng = np.random.default_rng(seed)
    z = Word(mu.sample_word(rng, depth), 1)
    target = EmpiricalDistribution(
        [(0.5, bernoulli(1, law_a, p)), (0.5, bernoulli(1, law_b, p))], p
    ).merge()
    rows = []
    for i in range(1, len(schedule.n) + 1):
        checkpoint = sums[i]
        if checkpoint + p > depth:
            break
        marg = cp_scenery(mu, z, checkpoint, p).measure_marginal()
        measured = distribution_distance(marg, target, p)
        eps_i = schedule.eps_i(i)
        own_limit = phase_mixture(comps[i - 1], 2 * periods[(i - 1) % len(periods)], p)
        gap_i = distribution_distance(own_limit, target, p)
        per_step = math.sqrt(1.0) * 2.0**-p
        edge = 2.0 * (sums[i - 1] + p) / checkpoint
        bound = per_step + eps_i + gap_i + edge
        # component-quality audit: orbit averages of the component itself
        # against its own limit, over every admissible horizon
        audit_cap = min(schedule.n[i - 1], 32 - p, comp_depth - p)
        zz = Word(comps[i - 1].sample_word(np.random.default_rng(seed + i), audit_cap), 1)
        comp_sup = max(
            distribution_distance(
                cp_scenery(comps[i - 1], zz, nn, p).measure_marginal(), own_limit, p
            )
            for nn in range(1, audit_cap + 1)
        )
        rows.append(
            {
                "i": i,
                "checkpoint": checkpoint,
                "measured": measured,
                "per_step_term": per_step,
                "eps_term": eps_i,
                "component_gap": gap_i,
                "edge_term": edge,
                "bound": bound,
                "component_sup": comp_sup,
                "component_within_eps": comp_sup <= eps_i,
                "within_bound": measured <= bound,
            }
        )
    extras = {
        "schedule_n": list(schedule.n),
        "monotone_decreasing": all(
            a["measured"] > b["measured"] for a, b in zip(rows, rows[1:])
        ),
        "all_within_bound": all(r["within_bound"] for r in rows),
    }
    return rows, extras


def run_flow_bridge(params: dict, seed: int):
    """Tangent probe versus centered orbit distribution for a product law
    at a seeded typical point, with the assembled slack reported per term."""
    p = int(params.get("p", 4))
    depth = int(params.get("depth", 22))
    law = list(params.get("law", [0.3, 0.7]))
    band_counts = [int(v) for v in params.get("bands", [8, 16])]
    steps_per_band = int(params.get("steps_per_band", 8))
    t_samples = int(params.get("t_samples", 256))
    window_level = int(params.get("window_level", 3))
    mu = bernoulli(1, law, depth)
    rng = np.random.default_rng(seed)
    z = Word(mu.sample_word(rng, depth), 1)
    x = cube_center(z)
    rows = []
    for bands in band_counts:
        probe = tangent_distribution_probe(mu, x, [bands * LOG2], steps_per_band, p)[0]
        orbit = cp_scenery(mu, z, bands, p)
        res = center(orbit, window_level, t_samples, np.random.default_rng(seed + bands), p)
        dist = distribution_distance(probe, res.distribution, p)
        r = res.rejection_rate
        projection = 2.0 * math.sqrt(1.0) * 2.0**-p
        band_term = 4.0 * window_level / bands
        rejection = 2.0 * r / (1.0 - r) if r < 1.0 else 2.0
        word_term = 2.0 ** (1 - (depth - (bands - 1) - window_level))
        mc = 6.0 / math.sqrt(t_samples)
        slack = projection + band_term + rejection + word_term + mc
        rows.append(
            {
                "bands": bands,
                "total_time": bands * LOG2,
                "distance": dist,
                "projection_term": projection,
                "band_term": band_term,
                "rejection_term": rejection,
                "word_term": word_term,
                "mc_term": mc,
                "slack_total": slack,
                "rejected": res.rejected,
                "emitted": res.emitted,
                "expected_uniform_rejection": 1.0 - interior_window_fraction(1, window_level),
                "within_slack": dist <= slack,
            }
        )
    extras = {
        "distance_decreasing": all(
            a["distance"] > b["distance"] for a, b in zip(rows, rows[1:])
        ),
        "all_within_slack": all(r["within_slack"] for r in rows),
    }
    return rows, extras


EXPERIMENTS = {
    "lebesgue-smoke": (run_lebesgue_smoke, ["check", "p", "value"]),
    "splice-convergence": (
        run_splice_convergence,
        ["N", "cube", "integral", "target", "defect_bound", "mc_slack", "flush_cuts", "within_bound"],
    ),
    "usm-convergence": (
        run_usm_convergence,
        [
            "i",
            "checkpoint",
            "measured",
            "per_step_term",
            "eps_term",
            "component_gap",
            "edge_term",
            "bound",
            "component_sup",
            "component_within_eps",
            "within_bound",
        ],
    ),
    "flow-bridge": (
        run_flow_bridge,
        [
            "bands",
            "total_time",
            "distance",
            "projection_term",
            "band_term",
            "rejection_term",
            "word_term",
            "mc_term",
            "slack_total",
            "rejected",
            "emitted",
            "expected_uniform_rejection",
            "within_slack",
        ],
    ),
}


def validate_config(config: dict) -> tuple[str, int, dict]:
    if not isinstance(config, dict):
        raise ValueError("config must be a JSON object")
    if config.get("schema_version") != 1:
        raise ValueError("config schema_version must be 1")
    name = config.get("experiment")
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    seed = config.get("seed")
    if not isinstance(seed, int):
        raise ValueError("config needs an integer seed")
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise ValueError("params must be an object")
    return name, seed, params


def run_experiment(config: dict, out_dir) -> dict:
    """Execute a validated config; write results.csv and manifest.json."""
    name, seed, params = validate_config(config)
    fn, columns = EXPERIMENTS[name]
    rows, extras = fn(params, seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    with open(results_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])
    manifest = {
        "schema_version": 1,
        "experiment": name,
        "seed": seed,
        "params": params,
        "rng": {"algorithm": RNG_ALGORITHM, "seed": seed},
        "library_version": __version__,
        "results": "results.csv",
        "summary": extras,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
