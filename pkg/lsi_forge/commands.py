"""Command registry: one validated, timed function per subcommand.

Each command resolves its inputs through the verification service and returns
a ``RunReport``; the CLI only parses flags and writes files.
"""

from __future__ import annotations

from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Tuple

from pydantic import Field, validate_call

from .config import current_settings
from .exceptions import ConfigurationError, PreconditionError
from .models import CommandName, RunConfig, RunReport, Weight, Witness
from .services import get_verification_service
from .utils.logger import get_logger, kv
from .utils.timing import timed

log = get_logger(__name__)

service = get_verification_service()

# Result each command checks; reports carry it so runs can be grouped by claim.
ANCHORS: Dict[CommandName, str] = {
    CommandName.VERIFY_LSI: "lsi.constant-two",
    CommandName.KKT_SEARCH: "lsi.absorbed-stationary-system",
    CommandName.CASCADE: "lsi.two-coordinate-chains",
    CommandName.PAIR_CHECK: "induction.pair-condition",
    CommandName.INDUCTION: "induction.doubling-chain",
    CommandName.ENTROPY_SPLIT: "induction.entropy-split",
    CommandName.HYPER_TIME: "hypercontractivity.optimal-time",
}


def _report(
    command: CommandName,
    claim: str,
    verdict: bool,
    details: List[Any],
    witnesses: Optional[List[Optional[Witness]]] = None,
    table: Optional[List[Dict[str, Any]]] = None,
) -> RunReport:
    return RunReport(
        command=command,
        anchor=ANCHORS[command],
        claim=claim,
        verdict=verdict,
        exit_code=0 if verdict else 1,
        config={},
        settings=current_settings().provenance(),
        details=[d if isinstance(d, dict) else d.model_dump(mode="json", by_alias=True) for d in details],
        witnesses=[w for w in (witnesses or []) if w is not None],
        table=table or [],
    )


# ==============================================================================
# COMMANDS - LSI on a single group
# ==============================================================================


@validate_call
@timed("command.verify_lsi", level="info")
def verify_lsi(
    weight: Annotated[str, Field(description="Builtin weight name or JSON path", min_length=1)],
    n: Annotated[Optional[int], Field(description="Group order for bare family names", ge=1)] = None,
    samples: Annotated[Optional[int], Field(description="Monte-Carlo points on the positive sphere", ge=1)] = None,
    starts: Annotated[Optional[int], Field(description="Projected-gradient starts", ge=1)] = None,
    seed: Annotated[Optional[int], Field(description="Root seed", ge=0)] = None,
) -> RunReport:
    """Check f(lam) = 2<lam, Gamma lam> - H_n[lam] >= 0 on the positive sphere.

    Examples:
        verify_lsi("phi6") -> sampled and minimized values of f, verdict True
    """
    cfg = current_settings()
    w = service.weight(weight, n)
    result = service.verify_lsi(
        w,
        samples or cfg.samples,
        starts or cfg.sphere_starts,
        cfg.seed if seed is None else seed,
    )
    log.info("command.verify_lsi.done %s", kv(weight=w.label, verdict=result.verdict))
    return _report(
        CommandName.VERIFY_LSI,
        f"log-Sobolev inequality with constant 2 for {w.label} on Z_{w.n}: "
        f"H_n[lam] <= 2<lam, Gamma lam> for all lam >= 0",
        result.verdict,
        [result],
        [result.witness],
        [{"weight": w.label, "n": w.n, "sampled_min": result.sampled_min, "sphere_min": result.sphere.value}],
    )


@validate_call
@timed("command.kkt_search", level="info")
def kkt_search(
    weight: Annotated[str, Field(description="Builtin weight name or JSON path", min_length=1)],
    n: Annotated[Optional[int], Field(description="Group order for bare family names", ge=1)] = None,
    starts: Annotated[Optional[int], Field(description="Least-squares starts", ge=1)] = None,
    seed: Annotated[Optional[int], Field(description="Root seed", ge=0)] = None,
) -> RunReport:
    """Search for solutions of the absorbed stationary system; none found supports the LSI."""
    cfg = current_settings()
    w = service.weight(weight, n)
    result = service.kkt_search(w, starts or cfg.kkt_starts, cfg.seed if seed is None else seed)
    witnesses = [
        Witness(kind="kkt_solution", value=s.residual_norm, inputs={"weight": w.label, "lambda": list(s.lam)})
        for s in result.solutions
    ]
    return _report(
        CommandName.KKT_SEARCH,
        f"the absorbed stationary system for {w.label} has no solution with 0 < ||lam||^2 < {w.n} "
        f"(numerical evidence only)",
        result.verdict,
        [result],
        witnesses,
        [{"weight": w.label, "bucket": k, "count": v} for k, v in result.residual_histogram.items()],
    )


# ==============================================================================
# COMMANDS - Auxiliary chains
# ==============================================================================


@validate_call
@timed("command.cascade", level="info")
def cascade(
    case: Annotated[Literal["Z6", "Z4", "both"], Field(description="Which chain to verify")] = "both",
    x_max: Annotated[Optional[float], Field(description="Right end of the grid", gt=1)] = None,
    samples: Annotated[Optional[int], Field(description="Grid points", ge=100)] = None,
) -> RunReport:
    """Values at 1, derivative relations and positivity of h, h1..h8."""
    cfg = current_settings()
    x_max = x_max or cfg.cascade_x_max
    reports = service.cascade(case, x_max, samples or cfg.cascade_samples)
    witnesses = [
        Witness(
            kind="cascade_relation",
            value=check.max_rel_error,
            inputs={"case": r.case_id, "relation": check.relation, "x": check.worst_x},
        )
        for r in reports
        for check in r.relation_checks
        if not check.holds
    ]
    table = [row for r in reports for row in service.cascade_table(r.case_id, x_max)]
    return _report(
        CommandName.CASCADE,
        "the auxiliary chains h, h1..h8 satisfy their derivative relations and stay positive for x > 1, "
        "so the two-coordinate stationary equations have no solution with unequal opposite entries",
        all(r.verdict for r in reports),
        reports,
        witnesses,
        table,
    )


# ==============================================================================
# COMMANDS - Induction n -> 2n
# ==============================================================================


@validate_call
@timed("command.pair_check", level="info")
def pair_check(
    pair: Annotated[Optional[str], Field(description="'lower:upper' weight names")] = None,
    n: Annotated[Optional[int], Field(description="Lower order for bare names, tower limit with tower", ge=1)] = None,
    resolution: Annotated[Optional[int], Field(description="Grid points per r-axis", ge=50)] = None,
    tower: Annotated[bool, Field(description="Check every dyadic tower pair")] = False,
) -> RunReport:
    """Pair condition clauses and the quadratic inequality."""
    if pair is None and not tower:
        raise ConfigurationError("pair-check needs --pair or --tower")
    cfg = current_settings()
    resolution = resolution or cfg.resolution

    reports = []
    if pair is not None:
        reports.append(service.pair_check(service.pair(pair, n), resolution))
    if tower:
        reports.extend(service.tower(n or 128, resolution))

    witnesses: List[Optional[Witness]] = []
    for r in reports:
        if not r.condition_holds:
            witnesses.append(
                Witness(kind="pair_condition", value=-1.0, inputs={"pair": [r.lower, r.upper], **r.clause_details})
            )
        if r.quadratic is not None:
            witnesses.append(r.quadratic.witness)

    names = ", ".join(f"({r.lower}, {r.upper})" for r in reports[:4]) + (" ..." if len(reports) > 4 else "")
    return _report(
        CommandName.PAIR_CHECK,
        f"pair condition and quadratic inequality for {names}",
        all(r.holds for r in reports),
        reports,
        witnesses,
        [
            {
                "lower": r.lower,
                "upper": r.upper,
                "condition_holds": r.condition_holds,
                "min_value": r.quadratic.min_value if r.quadratic else None,
                "unbounded": r.quadratic.unbounded if r.quadratic else None,
                "verdict": r.holds,
            }
            for r in reports
        ],
    )


@validate_call
@timed("command.induction", level="info")
def induction(
    pair: Annotated[str, Field(description="'lower:upper' weight names", min_length=3)],
    n: Annotated[Optional[int], Field(description="Lower order for bare names", ge=1)] = None,
    samples: Annotated[Optional[int], Field(description="Sampled lam in R_+^2n", ge=1)] = None,
    seed: Annotated[Optional[int], Field(description="Root seed", ge=0)] = None,
) -> RunReport:
    """Monte-Carlo check of the entropy split and Dirichlet comparison chain.

    A pair that fails its preconditions yields a failing report whose witness
    names the clause, instead of an error.
    """
    cfg = current_settings()
    weights = service.pair(pair, n)
    lower, upper = weights
    claim = (
        f"H_2n[lam] <= <a, G_n a> + <b, G_n b> + (||a|| - ||b||)^2 / 2n <= 2<lam, G_2n lam> "
        f"for ({lower.label}, {upper.label}), lifting the LSI from Z_{lower.n} to Z_{2 * lower.n}"
    )
    try:
        result = service.induction(weights, samples or cfg.samples, cfg.seed if seed is None else seed)
    except PreconditionError as exc:
        log.info("command.induction.precondition %s", kv(pair=pair, clause=exc.details.get("clause")))
        return _report(CommandName.INDUCTION, claim, False, [exc.to_dict()], [_precondition_witness(exc, weights)])
    return _report(
        CommandName.INDUCTION,
        claim,
        result.verdict,
        [result],
        result.witnesses,
        [{
            "lower": result.lower,
            "upper": result.upper,
            "entropy_slack_min": result.entropy_slack_min,
            "comparison_slack_min": result.comparison_slack_min,
        }],
    )


def _precondition_witness(exc: PreconditionError, weights: Tuple[Weight, Weight]) -> Witness:
    """The failing point of the quadratic scan, or the failing clause with its first bad index."""
    clause = exc.details.get("clause", "precondition")
    scan_witness = exc.details.get("witness")
    if scan_witness:
        return Witness(kind=f"precondition:{clause}", value=scan_witness["value"], inputs=scan_witness["inputs"])
    return Witness(
        kind=f"precondition:{clause}",
        value=-1.0,
        inputs={
            "pair": [weights[0].label, weights[1].label],
            "n": weights[0].n,
            **exc.details.get("clause_details", {}),
        },
    )


@validate_call
@timed("command.entropy_split", level="info")
def entropy_split(
    n: Annotated[int, Field(description="Half length of lam", ge=1)],
    samples: Annotated[Optional[int], Field(description="Sampled lam", ge=1)] = None,
    seed: Annotated[Optional[int], Field(description="Root seed", ge=0)] = None,
) -> RunReport:
    """Entropy of an interleaved vector against its inner and block pieces."""
    cfg = current_settings()
    result = service.entropy_split(n, samples or cfg.samples, cfg.seed if seed is None else seed)
    return _report(
        CommandName.ENTROPY_SPLIT,
        f"H_{2 * n}[interleave(a, b)] = H_{n}[a]/2 + H_{n}[b]/2 + H_2[(||a||, ||b||)]/{n}",
        result.verdict,
        [result],
        table=[{"n": n, "max_abs_error": result.max_abs_error, "max_outer_error": result.max_outer_error}],
    )


# ==============================================================================
# COMMANDS - Hypercontractivity
# ==============================================================================


@validate_call
@timed("command.hyper_time", level="info")
def hyper_time(
    n: Annotated[Optional[int], Field(description="Group order", ge=2)] = None,
    weight: Annotated[Optional[str], Field(description="Weight; word length psi_n by default")] = None,
    p: Annotated[float, Field(description="Source exponent", gt=1)] = 2.0,
    q: Annotated[float, Field(description="Target exponent", gt=1)] = 4.0,
    starts: Annotated[Optional[int], Field(description="Inner starts per bisection time", ge=1)] = None,
    seed: Annotated[Optional[int], Field(description="Root seed", ge=0)] = None,
    signed: Annotated[bool, Field(description="Maximize over signed f")] = False,
) -> RunReport:
    """Estimate the optimal hypercontractive time and compare with (1/2) log((q-1)/(p-1))."""
    if weight is None and n is None:
        raise ConfigurationError("hyper-time needs --n or --weight")
    cfg = current_settings()
    w = service.weight(weight or "psi", n)
    estimate = service.hyper_time(w, p, q, starts or cfg.hyper_starts, cfg.seed if seed is None else seed, signed)
    window = 10 * cfg.tolerances.bisection_width
    verdict = abs(estimate.t_star - estimate.lower_bound) <= window
    witness = None
    if not verdict:
        witness = Witness(
            kind="optimal_time",
            value=estimate.t_star - estimate.lower_bound,
            inputs={"weight": w.label, "p": p, "q": q, "bracket": list(estimate.bracket)},
        )
    return _report(
        CommandName.HYPER_TIME,
        f"||P_t f||_{q} <= ||f||_{p} on Z_{w.n} ({w.label}) exactly when t >= (1/2) log((q-1)/(p-1))",
        verdict,
        [estimate],
        [witness],
        [{
            "n": w.n,
            "p": p,
            "q": q,
            "t_lo": estimate.bracket[0],
            "t_hi": estimate.bracket[1],
            "t_star": estimate.t_star,
            "lower_bound": estimate.lower_bound,
        }],
    )


# ==============================================================================
# Dispatch
# ==============================================================================

COMMANDS: Dict[CommandName, Callable[[RunConfig], RunReport]] = {
    CommandName.VERIFY_LSI: lambda c: verify_lsi(_need(c.weight, "--weight"), c.n, c.samples, c.starts, c.seed),
    CommandName.KKT_SEARCH: lambda c: kkt_search(_need(c.weight, "--weight"), c.n, c.starts, c.seed),
    CommandName.CASCADE: lambda c: cascade(c.case, c.x_max, c.samples),
    CommandName.PAIR_CHECK: lambda c: pair_check(c.pair, c.n, c.resolution, c.tower),
    CommandName.INDUCTION: lambda c: induction(_need(c.pair, "--pair"), c.n, c.samples, c.seed),
    CommandName.HYPER_TIME: lambda c: hyper_time(c.n, c.weight, c.p, c.q, c.starts, c.seed, c.signed),
    CommandName.ENTROPY_SPLIT: lambda c: entropy_split(_need(c.n, "--n"), c.samples, c.seed),
}


def _need(value: Any, flag: str) -> Any:
    if value is None:
        raise ConfigurationError(f"missing required flag {flag}", details={"flag": flag})
    return value


def dispatch(config: RunConfig) -> RunReport:
    report = COMMANDS[config.command](config)
    return report.model_copy(update={"config": config.model_dump(mode="json")})
