"""Weight (length) functions on Z_n and the pair condition between scales.

All builders return exact rationals; floats appear only when a spectral form
is built.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..exceptions import ConfigurationError, InvalidInputError, WeightNotFoundError
from ..models import PairReport, Rational, Weight
from ..utils.logger import get_logger, kv

log = get_logger(__name__)

CLAUSES = (
    "zero_at_origin",
    "lower_symmetric",
    "upper_symmetric",
    "upper_dominates",
    "gap_condition",
)


def word_length(n: int) -> Weight:
    """psi_n(k) = min(k, n - k)."""
    if n < 2:
        raise InvalidInputError(f"word length needs n >= 2, got {n}", field="n")
    return Weight(n=n, values=[min(k, n - k) for k in range(n)], label=f"psi{n}")


def phi4() -> Weight:
    return Weight(n=4, values=[0, 1, Fraction(8, 5), 1], label="phi4")


def phi6() -> Weight:
    return Weight(n=6, values=[0, 1, 2, 1, 2, 1], label="phi6")


def _with_middle(n: int, middle: Fraction, label: str) -> Weight:
    values = [Fraction(min(k, n - k)) for k in range(n)]
    values[n // 2] = middle
    return Weight(n=n, values=values, label=label)


def gamma_odd_base(n: int) -> Weight:
    """Word length with the middle value lowered to 1."""
    if n % 2 or n < 4:
        raise InvalidInputError(f"gamma_odd_base needs even n >= 4, got {n}", field="n")
    return _with_middle(n, Fraction(1), f"gamma_odd{n}")


def gamma_even_tower(n: int) -> Weight:
    """Word length with the middle value lowered to n/2 - 1."""
    if n % 2 or n < 6:
        raise InvalidInputError(f"gamma_even_tower needs even n >= 6, got {n}", field="n")
    return _with_middle(n, Fraction(n // 2 - 1), f"gamma_tower{n}")


def weight_from_values(values: Sequence[Rational], label: str = "custom") -> Weight:
    return Weight(n=len(values), values=list(values), label=label)


def check_pair_condition(gn: Weight, g2n: Weight) -> PairReport:
    """Evaluate the five clauses linking a weight on Z_n to one on Z_2n."""
    n = gn.n
    if g2n.n != 2 * n:
        raise InvalidInputError(
            f"upper weight must live on Z_{2 * n}, got Z_{g2n.n}",
            details={"lower_n": n, "upper_n": g2n.n},
        )

    details: Dict[str, str] = {}
    half = (n - 1) // 2

    zero = gn[0] == 0 and g2n[0] == 0
    if not zero:
        details["zero_at_origin"] = f"gamma_n(0)={gn[0]}, gamma_2n(0)={g2n[0]}"

    def first_asymmetry(w: Weight) -> Optional[int]:
        return next((k for k in range(1, w.n) if w[k] != w[w.n - k]), None)

    lower_asym = first_asymmetry(gn)
    upper_asym = first_asymmetry(g2n)
    if lower_asym is not None:
        details["lower_symmetric"] = f"k={lower_asym}"
    if upper_asym is not None:
        details["upper_symmetric"] = f"k={upper_asym}"

    dominance_bad = next((k for k in range(1, half + 1) if g2n[k] < gn[k]), None)
    if dominance_bad is not None:
        details["upper_dominates"] = f"k={dominance_bad}"

    gap_bad = next((k for k in range(0, half + 1) if g2n[n - k] - g2n[k] - 1 < 0), None)
    if gap_bad is not None:
        details["gap_condition"] = f"k={gap_bad}"

    clauses = {
        "zero_at_origin": zero,
        "lower_symmetric": lower_asym is None,
        "upper_symmetric": upper_asym is None,
        "upper_dominates": dominance_bad is None,
        "gap_condition": gap_bad is None,
    }
    report = PairReport(
        n=n,
        lower=gn.label,
        upper=g2n.label,
        clauses=clauses,
        clause_details=details,
        condition_holds=all(clauses.values()),
    )
    log.debug("weights.pair_condition %s", kv(lower=gn.label, upper=g2n.label, failing=report.failing_clauses))
    return report


def tower_pairs(limit: int = 128, odd_bases: Sequence[int] = (3, 5)) -> List[Tuple[Weight, Weight]]:
    """Even-tower pairs (gamma_n, gamma_2n) for n = 6*2^m and 8*2^m up to ``limit``,
    then for each n0 in ``odd_bases`` the base link (psi_n0, gamma_odd_base(2 n0)) followed by
    the odd-base pairs (gamma_odd_base(n), gamma_odd_base(2n)) for n = 2*n0*2^m.
    """
    pairs: List[Tuple[Weight, Weight]] = []
    for base in (6, 8):
        n = base
        while n <= limit:
            pairs.append((gamma_even_tower(n), gamma_even_tower(2 * n)))
            n *= 2
    for n0 in odd_bases:
        if n0 < 3 or n0 % 2 == 0:
            raise InvalidInputError(f"odd base must be odd and >= 3, got {n0}", field="odd_bases")
        if n0 <= limit:
            pairs.append((word_length(n0), gamma_odd_base(2 * n0)))
        n = 2 * n0
        while n <= limit:
            pairs.append((gamma_odd_base(n), gamma_odd_base(2 * n)))
            n *= 2
    return pairs


# ==============================================================================
# Name and file resolution
# ==============================================================================

_NAMED = re.compile(r"^(psi|gamma_odd|gamma_tower)(\d*)$")


def resolve_weight(spec: str, n: Optional[int] = None) -> Weight:
    """Builtin name (``psi8``, ``phi4``, ``gamma_tower12``; bare family names use ``n``)
    or a path to a JSON weight file."""
    spec = spec.strip()
    if spec.endswith(".json"):
        return load_weight_json(spec)
    if spec == "phi4":
        return phi4()
    if spec == "phi6":
        return phi6()
    match = _NAMED.match(spec)
    if not match:
        raise WeightNotFoundError(spec)
    family, digits = match.groups()
    size = int(digits) if digits else n
    if size is None:
        raise ConfigurationError(f"weight '{spec}' needs a group order (--n)", details={"weight": spec})
    builder = {"psi": word_length, "gamma_odd": gamma_odd_base, "gamma_tower": gamma_even_tower}[family]
    return builder(size)


def resolve_pair(spec: str, n: Optional[int] = None) -> Tuple[Weight, Weight]:
    """``lower:upper``; a bare family name on the upper side takes order 2n."""
    parts = spec.split(":")
    if len(parts) != 2:
        raise ConfigurationError(f"pair must look like 'lower:upper', got '{spec}'", details={"pair": spec})
    lower = resolve_weight(parts[0], n)
    upper = resolve_weight(parts[1], 2 * lower.n)
    return lower, upper


def load_weight_json(path: str) -> Weight:
    """Read ``{"n": int, "label": str, "values": [num | "p/q", ...]}``."""
    file = Path(path)
    try:
        payload = json.loads(file.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigurationError(f"weight file not found: {path}", details={"path": path}) from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed weight JSON: {exc}", details={"path": path}) from exc
    if not isinstance(payload, dict) or "values" not in payload:
        raise ConfigurationError("weight JSON needs an object with 'values'", details={"path": path})
    try:
        return Weight(
            n=payload.get("n", len(payload["values"])),
            values=payload["values"],
            label=payload.get("label", file.stem),
        )
    except ValueError as exc:
        raise ConfigurationError(f"invalid weight in {path}: {exc}", details={"path": path}) from exc


def dump_weight_json(weight: Weight, path: str) -> None:
    Path(path).write_text(weight.model_dump_json(indent=2), encoding="utf-8")
