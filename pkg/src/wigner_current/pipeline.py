"""Scenario runner: snapshots, reconstruction, decomposition, topology, report.

Stages and the files they write below the output directory::

    simulate     snapshots/w_KKK.tsv, snapshots.json
    reconstruct  currents/<mode>/j_exp_KKK.tsv, reconstruction.json
    analyze      currents/model/{j_sys,j_damp,j_diff,j_env}_KKK.tsv,
                 currents/<mode>/j_env_extracted_KKK.tsv, topology.json
    report       levels.tsv, summary.json

``KKK`` is the snapshot index; pair ``k`` joins snapshots ``k`` and ``k + 1``
and its currents are evaluated on snapshot ``k``.  A stage pulls in the stages
it depends on.  ``manifest.json`` lists every file written with its sha256.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .config import RunConfig, load_config, resolve_config_path
from .currents import j_damp, j_diff, j_env, j_sys
from .evolution import Snapshot, snapshot_sequence
from .fieldfile import atomic_write, export_field
from .gaussian import degraded_db_levels, purity_of_field
from .reconstruction import InitMode, ReconstructionResult, reconstruct_pair
from .simplex import SimplexError
from .topology import TopologyError, find_stagnation_points, origin_charge

STAGES = ("simulate", "reconstruct", "analyze", "report")
_REQUIRES = {
    "simulate": (),
    "reconstruct": ("simulate",),
    "analyze": ("simulate", "reconstruct"),
    "report": ("simulate",),
}
# manifest entries that change from run to run
VOLATILE_KEYS = ("created", "wall_time_s")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, pair_index: int | None = None):
        where = stage if pair_index is None else f"{stage}, pair {pair_index}"
        super().__init__(f"[{where}] {message}")
        self.stage = stage
        self.pair_index = pair_index


@dataclass
class RunState:
    config: RunConfig
    out_dir: Path
    snapshots: list[Snapshot] = field(default_factory=list)
    results: dict[InitMode, list[ReconstructionResult]] = field(default_factory=dict)
    topology: dict | None = None
    files: dict[str, str] = field(default_factory=dict)

    def write(self, rel: str, data: bytes) -> None:
        self.files[rel] = atomic_write(self.out_dir / rel, data)

    def export(self, rel: str, fld, kind: str, provenance: str) -> None:
        self.files[rel] = export_field(fld, kind, self.out_dir / rel, provenance).sha256


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def expand_stages(stages: Iterable[str]) -> list[str]:
    wanted = set()
    for s in stages:
        if s not in _REQUIRES:
            raise ValueError(f"unknown stage {s!r}; choose from {', '.join(STAGES)}")
        wanted.add(s)
        wanted.update(_REQUIRES[s])
    return [s for s in STAGES if s in wanted]


def _simulate(st: RunState) -> None:
    st.snapshots = snapshot_sequence(st.config.scenario)
    rows = []
    for k, snap in enumerate(st.snapshots):
        st.export(f"snapshots/w_{k:03d}.tsv", snap.field, "w", f"snapshot {k} tau={snap.tau!r}")
        rows.append({
            "index": k,
            "tau": snap.tau,
            "power_mw": st.config.scenario.schedule.powers[k],
            "weights": list(snap.state.weights),
            "r_eff": snap.state.components[0].squeezing_parameter(),
            "purity_exact": snap.state.purity,
        })
    st.write("snapshots.json", _json_bytes(rows))


def _solve(args) -> ReconstructionResult:
    w0, w1, d_tau, mode, theta, method = args
    return reconstruct_pair(w0, w1, d_tau, mode, theta=theta, method=method)


def _reconstruct(st: RunState, workers: int) -> None:
    cfg = st.config
    snaps = st.snapshots
    pairs = list(zip(snaps, snaps[1:]))
    for mode in cfg.init_modes:
        jobs = [(a.field, b.field, b.tau - a.tau, mode, cfg.scenario.theta, cfg.method) for a, b in pairs]
        results: list[ReconstructionResult] = []
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_solve, job) for job in jobs]
                for k, fut in enumerate(futures):
                    try:
                        results.append(fut.result())
                    except (SimplexError, ValueError, ArithmeticError) as exc:
                        raise PipelineError("reconstruct", f"{mode.value}: {exc}", k) from exc
        else:
            for k, job in enumerate(jobs):
                try:
                    results.append(_solve(job))
                except (SimplexError, ValueError, ArithmeticError) as exc:
                    raise PipelineError("reconstruct", f"{mode.value}: {exc}", k) from exc
        st.results[mode] = results
        for k, res in enumerate(results):
            st.export(f"currents/{mode.value}/j_exp_{k:03d}.tsv", res.j_exp, "j_exp", f"{mode.value} pair {k}")
    diag = {
        mode.value: [
            {
                "pair": k,
                "objective": r.objective_value,
                "residual_inf": r.residual_inf,
                "min_reduced_cost": r.min_reduced_cost,
                "iterations": r.iterations,
            }
            for k, r in enumerate(res)
        ]
        for mode, res in st.results.items()
    }
    st.write("reconstruction.json", _json_bytes(diag))


def _charge(fn, *args) -> tuple[int | None, str | None]:
    try:
        return fn(*args), None
    except TopologyError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _analyze(st: RunState) -> None:
    cfg = st.config
    sc = cfg.scenario
    topo = cfg.topology
    report: dict = {
        "origin_radius": topo.origin_radius,
        "samples": topo.samples,
        "floor_frac": topo.floor_frac,
        "model": [],
        "modes": {m.value: [] for m in st.results},
    }
    for k in range(len(st.snapshots) - 1):
        w = st.snapshots[k].field
        js = j_sys(w, sc.system)
        jd, jf = j_damp(w, sc.env), j_diff(w, sc.env)
        je = j_env(w, sc.env)
        for name, fld in (("j_sys", js), ("j_damp", jd), ("j_diff", jf), ("j_env", je)):
            st.export(f"currents/model/{name}_{k:03d}.tsv", fld, name, f"model pair {k}")
        q_sys, e_sys = _charge(origin_charge, js, topo.origin_radius, topo.samples)
        report["model"].append({"pair": k, "j_sys_origin_charge": q_sys, "error": e_sys})
        for mode, results in st.results.items():
            res = results[k]
            extracted = res.j_exp - js
            st.export(
                f"currents/{mode.value}/j_env_extracted_{k:03d}.tsv",
                extracted,
                "j_env_extracted",
                f"{mode.value} pair {k}: j_exp - j_sys",
            )
            q, err = _charge(origin_charge, res.j_exp, topo.origin_radius, topo.samples)
            stag = find_stagnation_points(res.j_exp, topo.floor_frac, topo.samples)
            report["modes"][mode.value].append({
                "pair": k,
                "tau": st.snapshots[k].tau,
                "tau_next": st.snapshots[k + 1].tau,
                "origin_charge": q,
                "error": err,
                "stagnation_points": [{"x": s.x, "p": s.p, "charge": s.charge} for s in stag.points],
                "unresolved_candidates": [list(u) for u in stag.unresolved],
            })
    st.topology = report
    st.write("topology.json", _json_bytes(report))


def levels_table(st: RunState) -> list[dict]:
    """dB and purity per snapshot: ideal level, degraded (squeeze, anti-squeeze), purities."""
    rows = []
    for k, snap in enumerate(st.snapshots):
        r = snap.tau * st.config.scenario.system.xi
        sq, anti = degraded_db_levels(r, st.config.noise)
        rows.append({
            "index": k,
            "power_mw": st.config.scenario.schedule.powers[k],
            "tau": snap.tau,
            "ideal_db": 20 * r / math.log(10),
            "squeezing_db": sq,
            "antisqueezing_db": anti,
            "purity_grid": purity_of_field(snap.field),
            "purity_exact": snap.state.purity,
        })
    return rows


def _report(st: RunState) -> None:
    rows = levels_table(st)
    cols = list(rows[0])
    lines = ["\t".join(cols)]
    for row in rows:
        lines.append("\t".join(str(row[c]) if isinstance(row[c], int) else "%.8e" % row[c] for c in cols))
    st.write("levels.tsv", ("\n".join(lines) + "\n").encode("ascii"))
    summary: dict = {"snapshots": len(st.snapshots)}
    if st.topology is not None:
        for mode, entries in st.topology["modes"].items():
            charges = [e["origin_charge"] for e in entries]
            summary[f"{mode}_origin_charges"] = charges
            summary[f"{mode}_all_minus_one"] = all(q == -1 for q in charges)
    st.write("summary.json", _json_bytes(summary))


def run_scenario(
    config_path: str | Path,
    out_dir: str | Path,
    stages: Sequence[str] = STAGES,
    init_modes: Sequence[InitMode] | None = None,
    workers: int = 1,
) -> dict:
    """Run the requested stages (plus prerequisites) and return the manifest."""
    if workers < 1:
        raise ValueError("workers must be at least 1")
    plan = expand_stages(stages)
    try:
        path = resolve_config_path(config_path)
        raw = path.read_bytes()
        cfg = load_config(path)
    except (OSError, ValueError) as exc:
        raise PipelineError("config", str(exc)) from exc
    if init_modes is not None:
        cfg = RunConfig(cfg.scenario, cfg.noise, tuple(init_modes), cfg.method, cfg.topology)
    out = Path(out_dir)
    st = RunState(cfg, out)
    timings = []
    for stage in plan:
        t0 = time.perf_counter()
        try:
            if stage == "simulate":
                _simulate(st)
            elif stage == "reconstruct":
                _reconstruct(st, workers)
            elif stage == "analyze":
                _analyze(st)
            else:
                _report(st)
        except PipelineError:
            raise
        except (OSError, ValueError, ArithmeticError, SimplexError) as exc:
            raise PipelineError(stage, str(exc)) from exc
        timings.append({"name": stage, "wall_time_s": time.perf_counter() - t0})
    manifest = {
        "toolkit_version": __version__,
        "config_path": str(path),
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "output_dir": str(out),
        "init_modes": [m.value for m in cfg.init_modes],
        "stages": timings,
        "files": dict(sorted(st.files.items())),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    st.write("manifest.json", _json_bytes(manifest))
    return manifest


def stable_manifest(manifest: dict) -> dict:
    """Copy of ``manifest`` without timestamps and wall times."""
    out = {k: v for k, v in manifest.items() if k not in VOLATILE_KEYS}
    out["stages"] = [{k: v for k, v in s.items() if k not in VOLATILE_KEYS} for s in manifest["stages"]]
    return out
