"""Small shared helpers."""

from __future__ import annotations

import os

from .errors import BudgetError

DEFAULT_BUDGET = 1 << 24


def get_budget() -> int:
    """Enumeration/constraint budget; override with DERAND_BUDGET."""
    raw = os.environ.get("DERAND_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        val = int(raw)
    except ValueError as exc:
        raise BudgetError(f"DERAND_BUDGET must be an integer, got {raw!r}") from exc
    if val < 1:
        raise BudgetError(f"DERAND_BUDGET must be positive, got {val}")
    return val


def check_budget(amount: int, what: str, budget: int | None = None) -> None:
    limit = get_budget() if budget is None else budget
    if amount > limit:
        raise BudgetError(
            f"{what} needs {amount} > budget {limit} objects; "
            "raise DERAND_BUDGET to allow this"
        )
