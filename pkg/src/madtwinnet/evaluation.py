"""SDR/SIR from orthogonal projections, and dataset-level median aggregation.

Projections are time-invariant (no distortion filters), so scores are not
comparable to numbers produced with the filtered BSS Eval toolbox.
"""
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .audio import read_wav
from .exceptions import DatasetLayoutError, InvalidArgumentError, UndefinedMetricError

DB_CAP = 100.0
COMPARABILITY_NOTE = (
    "note: SDR/SIR use time-invariant projections without distortion filters; "
    "values are not comparable to SiSEC/BSS Eval v3-v4 leaderboards"
)


@dataclass
class Decomposition:
    s_target: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray


@dataclass
class EvalScores:
    per_track: list = field(default_factory=list)
    median_sdr: float = float("nan")
    median_sir: float = float("nan")


def bss_decompose(estimate, target_ref, interferer_refs=()):
    """Split an estimate into target, interference and artifact components.

    ``s_target`` is the projection onto the target reference;
    ``e_interf`` is the extra part explained by the span of all references.
    """
    est = np.asarray(estimate, dtype=np.float64)
    target = np.asarray(target_ref, dtype=np.float64)
    refs = [np.asarray(r, dtype=np.float64) for r in interferer_refs]
    if any(r.shape != est.shape for r in [target] + refs):
        raise InvalidArgumentError("estimate and references must have equal lengths")
    energy = float(target @ target)
    if energy == 0.0:
        raise UndefinedMetricError("target reference has zero energy")
    s_target = (est @ target) / energy * target
    if refs:
        basis = np.stack([target] + refs, axis=1)
        coef, *_ = np.linalg.lstsq(basis, est, rcond=None)
        e_interf = basis @ coef - s_target
    else:
        e_interf = np.zeros_like(est)
    e_artif = est - s_target - e_interf
    return Decomposition(s_target, e_interf, e_artif)


def _ratio_db(num, den):
    if den == 0.0:
        return DB_CAP
    return float(min(DB_CAP, 10.0 * np.log10(num / den)))


def sdr_sir(decomposition):
    """``(SDR, SIR)`` in dB, capped at +100 dB."""
    d = decomposition
    target_energy = float(d.s_target @ d.s_target)
    if target_energy == 0.0:
        raise UndefinedMetricError("estimate has no component along the target")
    distortion = d.e_interf + d.e_artif
    sdr = _ratio_db(target_energy, float(distortion @ distortion))
    sir = _ratio_db(target_energy, float(d.e_interf @ d.e_interf))
    return sdr, sir


def score(estimate, voice, accompaniment):
    return sdr_sir(bss_decompose(estimate, voice, [accompaniment]))


def _fit_length(x, n):
    if x.size >= n:
        return x[:n]
    return np.concatenate([x, np.zeros(n - x.size)])


def _track_scores(est_dir, ref_dir, name):
    voice, _ = read_wav(os.path.join(ref_dir, name, "vocals.wav"))
    acc, _ = read_wav(os.path.join(ref_dir, name, "accompaniment.wav"))
    est, _ = read_wav(os.path.join(est_dir, name, "vocals.wav"))
    sdr, sir = score(_fit_length(est, voice.size), voice, acc)
    return name, sdr, sir


def evaluate_tracks(estimates_dir, references_dir, out_csv=None, workers=None):
    """Score ``<estimates>/<track>/vocals.wav`` against ``<references>/<track>/``.

    References must hold ``vocals.wav`` and ``accompaniment.wav``. Estimates
    are cut or zero-padded to the reference length.
    """
    for d in (estimates_dir, references_dir):
        if not os.path.isdir(d):
            raise DatasetLayoutError(f"{d} is not a directory")
    refs = sorted(n for n in os.listdir(references_dir) if os.path.isdir(os.path.join(references_dir, n)))
    ests = sorted(n for n in os.listdir(estimates_dir) if os.path.isdir(os.path.join(estimates_dir, n)))
    if not refs:
        raise DatasetLayoutError(f"no tracks in {references_dir}")
    if refs != ests:
        missing = sorted(set(refs) ^ set(ests))
        raise DatasetLayoutError(f"track folders differ between estimates and references: {missing}")
    for name in refs:
        for path in (os.path.join(estimates_dir, name, "vocals.wav"),
                     os.path.join(references_dir, name, "vocals.wav"),
                     os.path.join(references_dir, name, "accompaniment.wav")):
            if not os.path.isfile(path):
                raise DatasetLayoutError(f"missing {path}")
    workers = workers or int(os.environ.get("MADT_THREADS", "1"))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        per_track = list(pool.map(lambda n: _track_scores(estimates_dir, references_dir, n), refs))
    scores = aggregate(per_track)
    if out_csv is not None:
        write_scores_csv(out_csv, scores)
    return scores


def aggregate(per_track):
    """Medians over the finite per-track values."""
    sdrs = np.array([s for _, s, _ in per_track], dtype=np.float64)
    sirs = np.array([s for _, _, s in per_track], dtype=np.float64)
    med_sdr = float(np.median(sdrs[np.isfinite(sdrs)])) if np.isfinite(sdrs).any() else float("nan")
    med_sir = float(np.median(sirs[np.isfinite(sirs)])) if np.isfinite(sirs).any() else float("nan")
    return EvalScores(list(per_track), med_sdr, med_sir)


def write_scores_csv(path, scores):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["track", "sdr_db", "sir_db"])
        for name, sdr, sir in scores.per_track:
            writer.writerow([name, f"{sdr:.6f}", f"{sir:.6f}"])
        writer.writerow(["MEDIAN", f"{scores.median_sdr:.6f}", f"{scores.median_sir:.6f}"])
