"""Service layer running the verifications.

The service resolves weights, calls the numerical core and converts
unexpected failures into toolkit errors. It owns no numerical logic itself.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any, Callable, List, Literal, Optional, Tuple, TypeVar

from ..config import current_settings
from ..core import cascade, hyper, induction, kkt, spectral
from ..core.weights import resolve_pair, resolve_weight
from ..exceptions import LsiForgeError, NumericalError
from ..models import (
    CascadeReport,
    EntropySplitReport,
    HypTimeEstimate,
    InductionReport,
    KKTSearchReport,
    LsiSamplingReport,
    PairReport,
    Weight,
    Witness,
)
from ..utils.logger import get_logger, kv

log = get_logger(__name__)

R = TypeVar("R")


class VerificationService:
    """Entry points used by the command layer.

    Every method:
    - resolves weight names (builtin or JSON path)
    - runs one verification with the active settings
    - re-raises toolkit errors unchanged and wraps anything else
    """

    def _guard(self, op: str, fn: Callable[[], R], **context: Any) -> R:
        try:
            return fn()
        except LsiForgeError:
            raise
        except Exception as exc:
            log.error("service.%s.error %s", op, kv(error=str(exc), **context))
            raise NumericalError(
                f"{op} failed: {exc}",
                details={"operation": op, "error": str(exc), **{k: str(v) for k, v in context.items()}},
            ) from exc

    def weight(self, spec: str, n: Optional[int] = None) -> Weight:
        resolved = resolve_weight(spec, n)
        if n is not None and resolved.n != n:
            log.warning("service.weight_order_mismatch %s", kv(weight=spec, flag_n=n, weight_n=resolved.n))
        return resolved

    def pair(self, spec: str, n: Optional[int] = None) -> Tuple[Weight, Weight]:
        return resolve_pair(spec, n)

    # ------------------------------------------------------------------
    # LSI on one group
    # ------------------------------------------------------------------

    def verify_lsi(self, weight: Weight, samples: int, starts: int, seed: int) -> LsiSamplingReport:
        """Sampled minimum of f plus projected-gradient minimization on the positive sphere."""
        log.info("service.verify_lsi %s", kv(weight=weight.label, samples=samples, starts=starts, seed=seed))

        def run() -> LsiSamplingReport:
            form = spectral.build_form(weight)
            sampled, argmin = spectral.verify_lsi_sampling(form, samples, seed)
            sphere = kkt.minimize_on_sphere(form, starts, seed)
            slack = current_settings().tolerances.slack
            worst = min(sampled, sphere.value)
            witness = None
            if worst < -slack:
                point = argmin.tolist() if sampled <= sphere.value else list(sphere.lam)
                witness = Witness(kind="lsi_objective", value=worst, inputs={"weight": weight.label, "lambda": point})
            return LsiSamplingReport(
                label=weight.label,
                n=weight.n,
                samples=samples,
                seed=seed,
                sampled_min=sampled,
                sampled_argmin=tuple(argmin.tolist()),
                sphere=sphere,
                verdict=witness is None,
                witness=witness,
            )

        return self._guard("verify_lsi", run, weight=weight.label)

    def kkt_search(self, weight: Weight, starts: int, seed: int) -> KKTSearchReport:
        log.info("service.kkt_search %s", kv(weight=weight.label, starts=starts, seed=seed))
        return self._guard(
            "kkt_search",
            lambda: kkt.kkt_search(spectral.build_form(weight), starts, seed),
            weight=weight.label,
        )

    # ------------------------------------------------------------------
    # Auxiliary chains
    # ------------------------------------------------------------------

    def cascade(self, case: Literal["Z6", "Z4", "both"], x_max: float, samples: int) -> List[CascadeReport]:
        cases = ("Z6", "Z4") if case == "both" else (case,)
        log.info("service.cascade %s", kv(cases=list(cases), x_max=x_max, samples=samples))
        runners = {"Z6": cascade.cascade_chain_z6, "Z4": cascade.cascade_chain_z4}
        return [self._guard("cascade", lambda c=c: runners[c](x_max, samples), case=c) for c in cases]

    def cascade_table(self, case: Literal["Z6", "Z4"], x_max: float, points: int = 200) -> List[dict]:
        chain = cascade.auxiliary_chain(case)
        upper = min(x_max, 0.99 * chain.domain_end())
        xs = [1.0 + (upper - 1.0) * (k + 1) / points for k in range(points)]
        return [{"case": case, **row} for row in cascade.cascade_table(case, xs)]

    # ------------------------------------------------------------------
    # Induction n -> 2n
    # ------------------------------------------------------------------

    def pair_check(self, pair: Tuple[Weight, Weight], resolution: int) -> PairReport:
        log.info("service.pair_check %s", kv(lower=pair[0].label, upper=pair[1].label, resolution=resolution))
        return self._guard("pair_check", lambda: induction.pair_check(pair, resolution), pair=pair[0].label)

    def tower(self, limit: int, resolution: int) -> List[PairReport]:
        return self._guard("tower", lambda: induction.tower_report(limit, resolution), limit=limit)

    def induction(self, pair: Tuple[Weight, Weight], samples: int, seed: int) -> InductionReport:
        log.info("service.induction %s", kv(lower=pair[0].label, upper=pair[1].label, samples=samples, seed=seed))
        return self._guard("induction", lambda: induction.induction_step(pair, samples, seed), pair=pair[0].label)

    def entropy_split(self, n: int, samples: int, seed: int) -> EntropySplitReport:
        return self._guard("entropy_split", lambda: induction.entropy_split_check(n, samples, seed), n=n)

    # ------------------------------------------------------------------
    # Hypercontractivity
    # ------------------------------------------------------------------

    def hyper_time(
        self,
        weight: Weight,
        p: float,
        q: float,
        starts: int,
        seed: int,
        signed: bool = False,
    ) -> HypTimeEstimate:
        log.info("service.hyper_time %s", kv(weight=weight.label, p=p, q=q, starts=starts, signed=signed))
        return self._guard(
            "hyper_time",
            lambda: hyper.estimate_optimal_time(weight, p, q, starts=starts, seed=seed, signed=signed),
            weight=weight.label,
        )


@lru_cache()
def get_verification_service() -> VerificationService:
    """Get cached service instance."""
    return VerificationService()
