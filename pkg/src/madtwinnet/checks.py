"""Self-check suite behind ``madtwinnet check``."""
import time
from dataclasses import dataclass

import numpy as np

from .data import ideal_ratio_mask
from .denoiser import denoiser_gradient_check
from .divergence import generalized_kl
from .evaluation import bss_decompose, sdr_sir
from .objective import ObjectiveConfig
from .signal import StftConfig, griffin_lim, istft, stft
from .training import gradient_check_full

GRAD_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(name, fn):
    start = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def _grad(seed, obj, fault):
    def run():
        report = gradient_check_full(seed, obj=obj, fault=fault)
        return report.passed(GRAD_TOL), f"max rel err {report.max_rel_error:.2e} ({report.worst_parameter})"
    return run


def _denoiser(seed):
    def run():
        err = denoiser_gradient_check(seed)
        return err <= GRAD_TOL, f"max rel err {err:.2e}"
    return run


def _roundtrip(seed):
    def run():
        rng = np.random.default_rng(seed)
        cfg = StftConfig()
        worst = 0.0
        for _ in range(3):
            x = rng.uniform(-1, 1, int(rng.integers(3 * cfg.frame_length, 4 * cfg.sample_rate // 10)))
            y = istft(stft(x, cfg), cfg, length=x.size)
            inner = slice(cfg.frame_length, x.size - cfg.frame_length)
            worst = max(worst, np.sqrt(np.mean((y[inner] - x[inner]) ** 2) / np.mean(x[inner] ** 2)))
        return worst <= 1e-6, f"max interior rel RMS {worst:.2e}"
    return run


def _griffin_lim(seed):
    def run():
        rng = np.random.default_rng(seed)
        cfg = StftConfig(frame_length=511, fft_length=512, hop=128)
        mag = np.abs(rng.standard_normal((30, cfg.retained_bins)))
        phase = rng.uniform(-np.pi, np.pi, mag.shape)
        _, history = griffin_lim(mag, phase, 10, cfg, return_history=True)
        worst = float(np.max(np.diff(history)))
        return worst <= 1e-9, f"largest increase {worst:.2e}"
    return run


def _masks_and_kl(seed):
    def run():
        rng = np.random.default_rng(seed)
        mags = [rng.uniform(0, 1, (5, 7)) for _ in range(3)]
        total = sum(ideal_ratio_mask(mags, j) for j in range(3))
        ok = np.allclose(total, 1.0, atol=1e-6)
        ok &= abs(generalized_kl([[2.0]], [[1.0]]) - (2 * np.log(2) - 1)) <= 1e-12
        ok &= generalized_kl(mags[0], mags[0]) == 0.0
        return ok, "IRM partition of unity, KL(a,a)=0, KL(2,1)=2ln2-1"
    return run


def _bss(seed):
    def run():
        rng = np.random.default_rng(seed)
        t = rng.standard_normal(4000)
        i = rng.standard_normal(4000)
        i -= (i @ t) / (t @ t) * t
        a, b = rng.uniform(0.5, 2.0, 2)
        _, sir = sdr_sir(bss_decompose(a * t + b * i, t, [i]))
        expected = 10 * np.log10(a * a * (t @ t) / (b * b * (i @ i)))
        return abs(sir - expected) <= 1e-6, f"SIR error {abs(sir - expected):.1e} dB"
    return run


def run_checks(seed=0, fault=None):
    """Run every check and return a list of :class:`CheckResult`."""
    plan = [
        ("gradient: full objective, twin stop-gradient", _grad(seed, ObjectiveConfig(), fault)),
        ("gradient: full objective, twin full backprop",
         _grad(seed, ObjectiveConfig(twin_loss_backprop="full"), fault)),
        ("gradient: full objective, twin disabled",
         _grad(seed, ObjectiveConfig(twin_enabled=False), None if fault and fault.startswith("twin.") else fault)),
        ("gradient: denoiser", _denoiser(seed)),
        ("stft/istft round trip", _roundtrip(seed)),
        ("griffin-lim monotone inconsistency", _griffin_lim(seed)),
        ("mask and KL invariants", _masks_and_kl(seed)),
        ("bss projection oracle", _bss(seed)),
    ]
    return [_timed(name, fn) for name, fn in plan]


def format_report(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  result  detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL'}    {r.detail}")
    return "\n".join(lines)
