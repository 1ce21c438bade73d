"""Experiment engine: Monte Carlo sweeps, CSV emission, dataset export,
and the beam-assignment scoring service.

Every cell of an experiment sees the same realization stream (paired
comparisons). Results are plain CSV / JSON-lines for external plotting.
"""

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .config import NetworkConfig, config_from_dict
from .errors import ConfigConflict, DataError, InvalidAssignment
from .rfadapt import RfPolicy, apply_policy
from .scenario import (DUMP_HEADER, draw_realization, dft_codebook,
                       read_channel_dump, realization_from_dump, search_seed,
                       write_channel_dump)
from .search import (BeamAssignment, SearchSettings, beam_conflicts,
                     effective_beams, evaluate_assignment, run_search,
                     settings_from_name)

RESULTS_HEADER = ["run_index", "cell", "sum_rate", "evaluation_count",
                  "fallback_count", "wall_time_s", "chain_saving",
                  "sum_rate_loss"]
SUMMARY_HEADER = ["cell", "runs", "mean_sum_rate", "ci95_half_width",
                  "mean_evaluation_count", "mean_fallback_count",
                  "mean_chain_saving", "mean_sum_rate_loss"]

WORKERS_ENV = "CFBEAM_WORKERS"


@dataclass
class CellSpec:
    name: str
    settings: SearchSettings
    rf: RfPolicy = None


@dataclass
class ExperimentSpec:
    config: NetworkConfig
    cells: list
    mc_runs: int = 500

    def __post_init__(self):
        if self.mc_runs < 1:
            raise ConfigConflict("mc_runs must be >= 1")
        names = [c.name for c in self.cells]
        if len(set(names)) != len(names):
            raise ConfigConflict("cell names must be unique")
        # surface config conflicts before any run starts
        for c in self.cells:
            if c.settings.bcc_mode != "off":
                self.config.require_bcc_feasible()


def _cell_from_dict(d):
    d = dict(d)
    name = d.pop("name")
    label = d.pop("label", name)
    rf = d.pop("rf", None)
    overrides = {}
    for key, dest in (("bcc", "bcc_mode"), ("n_init", "n_init"),
                      ("n_iter", "n_iter"), ("precoder", "precoder"),
                      ("oracle_budget", "oracle_budget")):
        if key in d:
            overrides[dest] = d.pop(key)
    if d:
        raise ConfigConflict(f"unknown cell keys: {sorted(d)}")
    settings = settings_from_name(name, **overrides)
    policy = RfPolicy(**rf) if rf else None
    return CellSpec(name=label, settings=settings, rf=policy)


def load_experiment(path):
    with open(path) as f:
        raw = yaml.safe_load(f)
    config = config_from_dict(raw.get("network", {}))
    cells = [_cell_from_dict(c) for c in raw.get("cells", [])]
    if not cells:
        raise ConfigConflict("experiment defines no cells")
    return ExperimentSpec(config=config, cells=cells,
                          mc_runs=int(raw.get("mc_runs", 500)))


def realization_hash(realization):
    """Stable digest of a realization, for paired-stream verification."""
    m = hashlib.sha256()
    for arr in (realization.beta, realization.theta_rad, realization.alpha_dB):
        m.update(np.ascontiguousarray(arr).tobytes())
    return m.hexdigest()


def _run_cells(spec, run_index):
    """All cells on the shared realization of one run; returns CSV rows."""
    realization = draw_realization(spec.config, run_index)
    codebook = dft_codebook(spec.config.M, spec.config.B)
    seed = search_seed(spec.config, run_index)
    rows = []
    for cell in spec.cells:
        saving = loss = ""
        if cell.rf is not None and cell.rf.mode != "full":
            res = apply_policy(realization, codebook, cell.rf, cell.settings,
                               seed=seed)
            result = res.reduced
            saving = "%.17g" % res.power_saving_fraction
            loss = "%.17g" % res.sum_rate_loss_fraction
        else:
            result = run_search(realization, codebook, cell.settings, seed=seed)
        rows.append([run_index, cell.name,
                     "%.17g" % result.report.sum_rate,
                     result.report.evaluation_count,
                     result.report.fallback_count,
                     "%.6g" % result.report.wall_time_s, saving, loss])
    return rows


def run_experiment(spec, results_path=None, summary_path=None, workers=None):
    """Run all cells over mc_runs shared realizations.

    Returns the per-cell summary as a list of dicts; optionally writes the
    per-run and summary CSVs.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    run_indices = list(range(spec.mc_runs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_rows = list(pool.map(_run_cells, [spec] * len(run_indices),
                                     run_indices, chunksize=8))
    else:
        all_rows = [_run_cells(spec, r) for r in run_indices]

    flat = [row for rows in all_rows for row in rows]
    if results_path:
        with open(results_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(RESULTS_HEADER)
            w.writerows(flat)

    summaries = []
    for cell in spec.cells:
        rows = [r for r in flat if r[1] == cell.name]
        sr = np.array([float(r[2]) for r in rows])
        ev = np.array([float(r[3]) for r in rows])
        fb = np.array([float(r[4]) for r in rows])
        sav = np.array([float(r[6]) for r in rows if r[6] != ""])
        los = np.array([float(r[7]) for r in rows if r[7] != ""])
        half = 1.96 * sr.std(ddof=1) / np.sqrt(len(sr)) if len(sr) > 1 else 0.0
        summaries.append({
            "cell": cell.name, "runs": len(rows),
            "mean_sum_rate": float(sr.mean()),
            "ci95_half_width": float(half),
            "mean_evaluation_count": float(ev.mean()),
            "mean_fallback_count": float(fb.mean()),
            "mean_chain_saving": float(sav.mean()) if sav.size else "",
            "mean_sum_rate_loss": float(los.mean()) if los.size else "",
        })
    if summary_path:
        with open(summary_path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=SUMMARY_HEADER)
            w.writeheader()
            w.writerows(summaries)
    return summaries


# ---------------------------------------------------------------------------
# ML dataset export
# ---------------------------------------------------------------------------

def dataset_header(L, K, include_gains):
    cols = ["run_index"]
    cols += [f"pl_l{l}_k{k}" for l in range(L) for k in range(K)]
    cols += [f"aod_l{l}_k{k}" for l in range(L) for k in range(K)]
    if include_gains:
        cols += [f"gain_l{l}_k{k}" for l in range(L) for k in range(K)]
    cols += [f"label_l{l}_k{k}" for l in range(L) for k in range(K)]
    cols.append("teacher_sum_rate")
    return cols


def export_dataset(config, teacher_settings, n_rows, dataset_path,
                   dump_path=None, start_index=0, include_gains=None):
    """Teacher-labelled dataset: per run, 2LK features (path loss and AoD,
    l-major then k; optionally strongest-path |beta|) and LK beam labels."""
    if include_gains is None:
        include_gains = config.P > 1
    codebook = dft_codebook(config.M, config.B)
    L, K = config.L, config.K
    dump_fh = open(dump_path, "w") if dump_path else None
    try:
        if dump_fh:
            dump_fh.write(DUMP_HEADER + "\n")
        with open(dataset_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(dataset_header(L, K, include_gains))
            for i in range(n_rows):
                run = start_index + i
                realization = draw_realization(config, run)
                try:
                    result = run_search(realization, codebook, teacher_settings,
                                        seed=search_seed(config, run))
                except Exception as exc:
                    raise DataError(f"teacher failed on row {run}: {exc}") from exc
                pl, aod, gain = realization.link_features()   # each (K, L)
                row = [run]
                row += ["%.17g" % pl[k, l] for l in range(L) for k in range(K)]
                row += ["%.17g" % aod[k, l] for l in range(L) for k in range(K)]
                if include_gains:
                    row += ["%.17g" % gain[k, l]
                            for l in range(L) for k in range(K)]
                row += [int(result.assignment.idx[l, k])
                        for l in range(L) for k in range(K)]
                row.append("%.17g" % result.report.sum_rate)
                w.writerow(row)
                if dump_fh:
                    write_channel_dump(dump_fh, realization)
    finally:
        if dump_fh:
            dump_fh.close()


# ---------------------------------------------------------------------------
# Scoring service
# ---------------------------------------------------------------------------

def read_assignments(path, L, K, B):
    """Assignment file: one line per run, run_index then L*K indices (l-major)."""
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 1 + L * K:
                raise InvalidAssignment(
                    f"expected run_index plus {L * K} labels, got: {line!r}")
            run = int(parts[0])
            vals = np.array([int(p) for p in parts[1:]]).reshape(L, K)
            if vals.min() < 0 or vals.max() >= B:
                raise InvalidAssignment(
                    f"beam index outside [0, {B}) in run {run}")
            out[run] = vals
    return out


def score_assignment(realization, codebook, idx, precoder="zf"):
    """Metrics for an externally supplied assignment.

    BCC violations are reported as a warning, not an error; rank-deficient
    ZF falls back to MMSE (ML outputs may conflict).
    """
    idx = np.asarray(idx, dtype=int)
    if idx.shape != (realization.L, realization.K):
        raise InvalidAssignment(
            f"assignment shape {idx.shape} != ({realization.L}, {realization.K})")
    if idx.min() < 0 or idx.max() >= codebook.B:
        raise InvalidAssignment("beam index outside [0, B)")
    conflict = bool(beam_conflicts(idx[None], codebook.B)[0])
    G = effective_beams(realization, codebook)
    active = np.ones((realization.L, realization.K), dtype=bool)
    q = realization.config.p_T_W / realization.K
    report = evaluate_assignment(G, codebook.gram, idx, active, q,
                                 realization.noise_power_W, precoder,
                                 allow_fallback=True)
    return report, conflict


def score_assignments(config, dump_path, assign_path, precoder="zf"):
    """Score a whole assignment file against a channel dump.

    Returns a list of JSON-serializable records sorted by run_index.
    """
    runs = read_channel_dump(dump_path, config)
    assigns = read_assignments(assign_path, config.L, config.K, config.B)
    missing = sorted(set(assigns) - set(runs))
    if missing:
        raise DataError(f"assignments reference runs absent from dump: {missing[:5]}")
    codebook = dft_codebook(config.M, config.B)
    records = []
    for run in sorted(assigns):
        beta, theta, alpha = runs[run]
        realization = realization_from_dump(run, beta, theta, alpha, config)
        report, conflict = score_assignment(realization, codebook,
                                            assigns[run], precoder)
        records.append({
            "run_index": run,
            "sum_rate": report.sum_rate,
            "rates": [float(r) for r in report.rates],
            "conflict_warning": conflict,
            "fallback_count": report.fallback_count,
        })
    return records


def write_score_records(records, fh):
    for rec in records:
        fh.write(json.dumps(rec) + "\n")
