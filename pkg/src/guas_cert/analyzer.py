"""The verdict pipeline: certificate, counterexample, or inconclusive.

The pipeline certifies GUAS only through proved implications:

* trivial common kernel K = {0};
* C_lam injective for every lambda;
* dim K <= 2 with (C_lam, A_lam) observable for all lambda;
* G discrete with (C_lam, A_lam) observable for all lambda.

A constant-input observability failure at some lambda* refutes GUAS of the
convexified system, which is equivalent to the binary one.  Everything else
is reported inconclusive, with adversarial simulation evidence attached;
in particular the open conjecture (observability for every constant input
would suffice) is never used as a decision rule.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bad_locus import kpetit_classify, locus_geometry, scan_G
from .decomposition import (
    RANK_MARGIN_FLOOR,
    block_form,
    common_kernel,
)
from .errors import InternalInconsistency, NoCommonWeakLyapunov, NotHurwitz
from .matrix_core import (
    MatrixPair,
    NormalizedPair,
    check_weak_lyapunov,
    is_hurwitz,
    normalize,
)
from .observability import sweep_lambda
from .simulator import estimate_omega_limit, worst_case_switching

CONCLUSIONS = (
    "GUAS_trivial_kernel",
    "GUAS_dimK_le2",
    "GUAS_G_discrete",
    "GUAS_C_injective",
    "NOT_GUAS_constant_input",
    "INCONCLUSIVE",
)


@dataclass
class AnalyzerOptions:
    tol: float = 1e-9
    n_grid: int = 257
    scan_resolution: int = 64
    evidence_runs: int = 32
    evidence_T: float = 100.0
    evidence_dt: float = 1e-3
    seed: int = 0
    with_evidence: Optional[bool] = None  # None: only for INCONCLUSIVE


@dataclass
class EvidenceSummary:
    """Adversarial-simulation summary; evidence, never a certificate."""

    n_runs: int
    T: float
    dt: float
    max_final_ratio: float
    final_ratios: list
    plateaued: list
    non_decaying_runs: int

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "T": self.T,
            "dt": self.dt,
            "max_final_ratio": self.max_final_ratio,
            "non_decaying_runs": self.non_decaying_runs,
        }


@dataclass
class Verdict:
    """The analyzer's conclusion with its certificate or witness attached."""

    conclusion: str
    branch: str  # statement of the result backing the conclusion
    certificate: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    evidence: Optional[EvidenceSummary] = None
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    notes: str = ""

    @property
    def guas(self) -> Optional[bool]:
        if self.conclusion.startswith("GUAS"):
            return True
        if self.conclusion.startswith("NOT_GUAS"):
            return False
        return None

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, float) and not np.isfinite(v):
                return repr(v)
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        out = {
            "conclusion": self.conclusion,
            "branch": self.branch,
            "certificate": clean(self.certificate),
            "margins": clean(self.margins),
            "tolerances": clean(self.tolerances),
            "grid": clean(self.grid),
        }
        if self.notes:
            out["notes"] = self.notes
        if self.evidence is not None:
            out["evidence"] = self.evidence.to_dict()
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def thread_budget() -> int:
    """Data-parallel width cap, from the GUAS_CERT_THREADS env variable."""
    try:
        return max(1, int(os.environ.get("GUAS_CERT_THREADS", "1")))
    except ValueError:
        return 1


def empirical_evidence(
    npair: NormalizedPair,
    n_random: int = 32,
    T: float = 100.0,
    dt: float = 1e-3,
    seed: int = 0,
    K_basis: Optional[np.ndarray] = None,
) -> EvidenceSummary:
    """Greedy-adversary runs from random unit starts plus the K directions."""
    rng = np.random.default_rng(seed)
    d = npair.d
    starts = rng.standard_normal((n_random, d))
    starts /= np.linalg.norm(starts, axis=1, keepdims=True)
    if K_basis is not None and K_basis.size:
        starts = np.vstack([starts, K_basis.T])

    def run(x0):
        traj = worst_case_switching(npair, x0, T, dt)
        r, plateaued = estimate_omega_limit(traj, window=T / 4.0)
        ratio = traj.final_ratio()
        non_decaying = plateaued and r > 1e-6 * traj.norms[0]
        return ratio, plateaued, non_decaying

    width = min(thread_budget(), len(starts))
    if width > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]
    ratios = [r for r, _, _ in results]
    return EvidenceSummary(
        n_runs=len(starts),
        T=T,
        dt=dt,
        max_final_ratio=float(max(ratios)),
        final_ratios=ratios,
        plateaued=[p for _, p, _ in results],
        non_decaying_runs=int(sum(nd for _, _, nd in results)),
    )


def analyze(pair: MatrixPair, P=None, options: Optional[AnalyzerOptions] = None) -> Verdict:
    """Run the full decision pipeline on a matrix pair.

    Raises NotHurwitz / NoCommonWeakLyapunov when the standing hypotheses
    fail; otherwise always returns a Verdict.
    """
    opt = options or AnalyzerOptions()
    tol = opt.tol

    for name, B in (("B0", pair.B0), ("B1", pair.B1)):
        hz = is_hurwitz(B, tol)
        if not hz.hurwitz:
            kind = "marginal" if hz.marginal else "unstable"
            raise NotHurwitz(
                f"{name} is not Hurwitz ({kind}, abscissa {hz.abscissa:.3e})"
            )

    v0, v1 = check_weak_lyapunov(pair, P)
    if not (v0.holds and v1.holds):
        raise NoCommonWeakLyapunov(
            "P is not a common weak quadratic Lyapunov matrix "
            f"(max eigenvalues {v0.max_eigenvalue:.3e}, {v1.max_eigenvalue:.3e})"
        )

    npair = normalize(pair, P)
    decomp = common_kernel(npair, tol)
    tolerances = {"tol": tol, "kernel_threshold": decomp.threshold}
    grid_info = {"n_grid": opt.n_grid, "scan_resolution": opt.scan_resolution}

    def finish(verdict: Verdict) -> Verdict:
        want = opt.with_evidence
        if want is None:
            want = verdict.conclusion == "INCONCLUSIVE"
        if want:
            verdict.evidence = empirical_evidence(
                npair, opt.evidence_runs, opt.evidence_T, opt.evidence_dt,
                opt.seed, decomp.K_basis,
            )
            if verdict.guas and verdict.evidence.non_decaying_runs:
                raise InternalInconsistency(
                    "a theorem-backed GUAS certificate coexists with a "
                    "non-decaying adversarial run; tolerance settings are "
                    "inconsistent"
                )
        return verdict

    if not decomp.certifiable_rank:
        return finish(Verdict(
            "INCONCLUSIVE",
            "kernel rank ambiguous",
            margins={"rank_margin": decomp.rank_margin},
            tolerances=tolerances,
            grid=grid_info,
            notes=(
                f"singular values of [S0; S1] straddle the threshold "
                f"(margin {decomp.rank_margin:.2e} < {RANK_MARGIN_FLOOR:.0e}); "
                "no rank decision is certified"
            ),
        ))

    if decomp.k == 0:
        return finish(Verdict(
            "GUAS_trivial_kernel",
            "common kernel K = {0} forces decay for every switching law",
            certificate={"k": 0, "rank_margin": decomp.rank_margin},
            margins={"rank_margin": decomp.rank_margin},
            tolerances=tolerances,
            grid=grid_info,
        ))

    blocks = block_form(npair, decomp, tol)
    sweep = sweep_lambda(blocks, opt.n_grid, tol)
    margins = {
        "observability_margin": sweep.margin,
        "rank_margin": decomp.rank_margin,
    }

    if sweep.verdict == "fails_at":
        x_star = sweep.witness[:, 0]
        x_star = x_star / np.linalg.norm(x_star)
        return finish(Verdict(
            "NOT_GUAS_constant_input",
            "constant input lambda* makes (C,A) unobservable; the "
            "convexified system (equivalent to the binary one) is not GUAS",
            certificate={
                "lambda_star": sweep.lambda_star,
                "witness": x_star,
                "sigma_min": sweep.margin,
            },
            margins=margins,
            tolerances=tolerances,
            grid=grid_info,
        ))

    # injectivity of C_lam over the sweep grid (cheap certificate)
    if blocks.k_prime >= blocks.k and sweep.verdict == "observable_for_all_lambda":
        sigma_c = min(
            np.linalg.svd(blocks.C(l), compute_uv=False)[blocks.k - 1]
            for l in sweep.grid
        )
        margins["C_injectivity_margin"] = float(sigma_c)
        if sigma_c > sweep.cert_threshold:
            return finish(Verdict(
                "GUAS_C_injective",
                "ker C_lambda = {0} for all lambda: no output can vanish",
                certificate={"min_sigma_C": float(sigma_c)},
                margins=margins,
                tolerances=tolerances,
                grid=grid_info,
            ))

    if blocks.k <= 2 and sweep.verdict == "observable_for_all_lambda":
        kp = kpetit_classify(blocks, sweep, tol)
        return finish(Verdict(
            "GUAS_dimK_le2",
            "dim K <= 2 and (C_lambda, A_lambda) observable for every lambda",
            certificate={"k": blocks.k, "case": kp.case},
            margins=margins,
            tolerances=tolerances,
            grid=grid_info,
        ))

    scan = None
    if sweep.verdict == "observable_for_all_lambda":
        geometry = locus_geometry(blocks, tol)
        scan = scan_G(geometry, opt.scan_resolution, tol)
        margins["scan_hits"] = scan.n_hits
        if scan.verdict == "discrete":
            return finish(Verdict(
                "GUAS_G_discrete",
                "tangency set G is discrete and (C_lambda, A_lambda) is "
                "observable for every lambda",
                certificate={
                    "n_samples": scan.n_samples,
                    "n_hits": scan.n_hits,
                    "spacing": scan.spacing,
                },
                margins=margins,
                tolerances=tolerances,
                grid=grid_info,
            ))

    notes = ""
    if sweep.verdict == "observable_for_all_lambda":
        notes = (
            "observable for every constant input, but no proved sufficient "
            "condition applies; only the open conjecture would upgrade this "
            "to GUAS, and it is never used as a decision rule"
        )
        if scan is not None and scan.note:
            notes += "; " + scan.note
    return finish(Verdict(
        "INCONCLUSIVE",
        "no theorem branch certifies or refutes GUAS",
        certificate={
            "sweep_verdict": sweep.verdict,
            "scan_verdict": scan.verdict if scan is not None else "not_run",
            "k": blocks.k,
        },
        margins=margins,
        tolerances=tolerances,
        grid=grid_info,
        notes=notes,
    ))
