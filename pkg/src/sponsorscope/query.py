"""Filtered user-query description shared by the HTTP API, CSV export, and store.

Validation is strict: unknown fields, unknown enum values, and out-of-range
paging are rejected with the offending field named, never silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import AccountType, PronounCategory, QualityFlag, Role

SORT_KEYS = ("sponsor_count", "sponsoring_count", "estimated_earnings", "login", "last_fetched_at")
SORT_DIRS = ("asc", "desc")
MAX_PAGE_SIZE = 500
DEFAULT_PAGE_SIZE = 50

FILTER_ROLES = (Role.SPONSORED, Role.SPONSORING, Role.BOTH)


class QueryValidationError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass(frozen=True, slots=True)
class UserQuery:
    country: str | None = None
    account_type: AccountType | None = None
    role: Role | None = None
    pronoun_category: PronounCategory | None = None
    quality_flag: QualityFlag | None = None
    min_sponsors: int | None = None
    sort_by: str = "sponsor_count"
    sort_dir: str = "desc"
    page: int = 1
    page_size: int = DEFAULT_PAGE_SIZE


_KNOWN_PARAMS = {
    "country", "account_type", "role", "pronoun_category", "quality_flag",
    "min_sponsors", "sort_by", "sort_dir", "page", "page_size",
}


def _parse_enum(enum_cls, value: str, field_name: str):
    for member in enum_cls:
        if member.value == value:
            return member
    valid = ", ".join(m.value for m in enum_cls)
    raise QueryValidationError(field_name, f"unknown value {value!r}; expected one of: {valid}")


def _parse_int(value: str, field_name: str, minimum: int, maximum: int | None = None) -> int:
    try:
        parsed = int(value)
    except (TypeError, ValueError):
        raise QueryValidationError(field_name, f"not an integer: {value!r}") from None
    if parsed < minimum:
        raise QueryValidationError(field_name, f"must be >= {minimum}")
    if maximum is not None and parsed > maximum:
        raise QueryValidationError(field_name, f"must be <= {maximum}")
    return parsed


def parse_user_query(params: dict[str, str],
                     extra_allowed: set[str] = frozenset()) -> UserQuery:
    """Build a UserQuery from raw query-string params, rejecting anything odd."""
    for name in params:
        if name not in _KNOWN_PARAMS and name not in extra_allowed:
            raise QueryValidationError(name, "unknown filter")

    kwargs: dict = {}
    if "country" in params:
        kwargs["country"] = params["country"]
    if "account_type" in params:
        kwargs["account_type"] = _parse_enum(AccountType, params["account_type"], "account_type")
    if "role" in params:
        role = next((r for r in FILTER_ROLES if r.value == params["role"]), None)
        if role is None:
            valid = ", ".join(r.value for r in FILTER_ROLES)
            raise QueryValidationError(
                "role", f"unknown value {params['role']!r}; expected one of: {valid}")
        kwargs["role"] = role
    if "pronoun_category" in params:
        kwargs["pronoun_category"] = _parse_enum(
            PronounCategory, params["pronoun_category"], "pronoun_category")
    if "quality_flag" in params:
        kwargs["quality_flag"] = _parse_enum(QualityFlag, params["quality_flag"], "quality_flag")
    if "min_sponsors" in params:
        kwargs["min_sponsors"] = _parse_int(params["min_sponsors"], "min_sponsors", 0)
    if "sort_by" in params:
        if params["sort_by"] not in SORT_KEYS:
            raise QueryValidationError(
                "sort_by", f"unknown sort key; expected one of: {', '.join(SORT_KEYS)}")
        kwargs["sort_by"] = params["sort_by"]
    if "sort_dir" in params:
        if params["sort_dir"] not in SORT_DIRS:
            raise QueryValidationError("sort_dir", "expected asc or desc")
        kwargs["sort_dir"] = params["sort_dir"]
    if "page" in params:
        kwargs["page"] = _parse_int(params["page"], "page", 1)
    if "page_size" in params:
        kwargs["page_size"] = _parse_int(params["page_size"], "page_size", 1, MAX_PAGE_SIZE)
    return UserQuery(**kwargs)
