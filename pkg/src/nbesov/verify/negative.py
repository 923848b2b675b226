"""Negative controls: deliberately broken inputs that the harness must
reject.  Each experiment here is expected to end with a fail verdict; a
pass from any of them means the checks upstream have gone soft."""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from ..littlewood_paley import PartitionOfUnity, make_partition, partition_sum
from ..reports import FAIL, PASS, EstimateReport
from .common import ExperimentSpec, besov_table, coeff_batch, interval_basis
from .multipliers import exp_low_freq_decay

__all__ = [
    "neg_broken_partition",
    "neg_fake_eigenvalue",
    "neg_reversed_inequality",
]


def _broken_pou(scale: float = 0.9) -> PartitionOfUnity:
    base = make_partition("standard")
    return PartitionOfUnity(
        variant="broken",
        chi=lambda lam: scale * base.chi(lam),
        plateau=base.plateau,
        support_end=base.support_end,
    )


def neg_broken_partition(spec: ExperimentSpec) -> EstimateReport:
    """Cutoff rescaled by 0.9: the dyadic sum telescopes to 0.9, so both
    the partition identity and block resynthesis must come out broken."""
    t0 = time.perf_counter()
    pou = _broken_pou()
    lam = np.geomspace(1e-4, 1e4, 4001)
    defect = float(np.max(np.abs(partition_sum(pou, lam) - 1.0)))

    basis = interval_basis(math.pi, 64, 512)
    rng = np.random.default_rng(spec.seed)
    C = coeff_batch(rng, basis.K, 20, decay=0.05)
    F = basis.functions.T @ C
    lam_b = basis.eigenvalues
    sq = np.sqrt(np.maximum(lam_b, 0.0))
    rec = basis.functions.T @ (pou.psi(lam_b)[:, None] * C)
    for j in range(1, 7):
        rec += basis.functions.T @ (pou.phi(j, sq)[:, None] * C)
    w = basis.grid.weights
    resid = float(np.max(np.sqrt(w @ (F - rec) ** 2) / np.sqrt(w @ F**2)))

    ok = defect < 1e-12 and resid < 1e-8
    rep = EstimateReport(
        id="neg_broken_partition",
        params={"chi_scale": 0.9},
        points=[{"partition_defect": defect, "max_residual": resid}],
        fit={"partition_defect": defect, "max_residual": resid},
        verdict=PASS if ok else FAIL,
        seed=spec.seed,
        notes=["control: a fail verdict here is the expected outcome"],
    )
    rep.runtime = time.perf_counter() - t0
    return rep


def neg_fake_eigenvalue(spec: ExperimentSpec) -> EstimateReport:
    """Second eigenvalue faked down to 2^-12: the low-frequency decay fit
    must refuse the sub-dyadic blocks it suddenly fills."""
    doctored = spec.with_params(fake_lambda2=2.0**-12, domains=("interval_pi",))
    rep = exp_low_freq_decay(replace(doctored, id="low_freq_decay"))
    return replace(
        rep,
        id="neg_fake_eigenvalue",
        notes=list(rep.notes) + ["control: a fail verdict here is the expected outcome"],
    )


def neg_reversed_inequality(spec: ExperimentSpec) -> EstimateReport:
    """Asserts the smoothness comparison the wrong way round, on samples
    pushed to the top of the band where the gap is widest."""
    t0 = time.perf_counter()
    pou = make_partition(spec.pou_variant)
    basis = interval_basis(math.pi, 64, 512)
    rng = np.random.default_rng(spec.seed)
    C = np.zeros((basis.K, 50))
    C[32:] = rng.standard_normal((basis.K - 32, 50))
    rough = besov_table(C, 0.0, 2.0, 2.0, pou, basis, 6)
    smooth = besov_table(C, 0.5, 2.0, 2.0, pou, basis, 6)
    ratio = float(np.max(smooth / rough))
    ok = ratio <= 3.0
    rep = EstimateReport(
        id="neg_reversed_inequality",
        params={"claim": "B(s=1/2) <= 3 B(s=0)", "modes": "32..63"},
        points=[{"max_ratio": ratio}],
        fit={"max_ratio": ratio},
        verdict=PASS if ok else FAIL,
        seed=spec.seed,
        notes=["control: a fail verdict here is the expected outcome"],
    )
    rep.runtime = time.perf_counter() - t0
    return rep
