"""Value types that can fill a lambda variable, plus their JSON codec.

Values are small frozen dataclasses so that bindings compare by value and
serialize deterministically.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import KBError, RestrictionError

PRIMITIVE_KINDS = ("collection", "count", "number", "string", "time")


@dataclass(frozen=True, order=True)
class CountInterval:
    """Closed integer interval ``[lower, upper]``; ``upper=None`` is unbounded."""

    lower: int = 0
    upper: Optional[int] = None

    def __post_init__(self):
        if self.lower < 0:
            raise ValueError(f"negative lower bound {self.lower}")
        if self.upper is not None and self.upper < self.lower:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def exact(self) -> Optional[int]:
        return self.lower if self.upper == self.lower else None

    def within(self, other: "CountInterval") -> bool:
        """True if every count admitted here is admitted by ``other``."""
        if self.lower < other.lower:
            return False
        if other.upper is None:
            return True
        return self.upper is not None and self.upper <= other.upper

    def remove(self, k: int) -> "CountInterval":
        """Interval after ``k`` members leave; lower clamps at zero."""
        if k < 0:
            raise ValueError("removal count must be non-negative")
        upper = None
        if self.upper is not None:
            upper = self.upper - k
            if upper < 0:
                raise RestrictionError(
                    f"cannot remove {k} from a collection of at most {self.upper}")
        return CountInterval(max(0, self.lower - k), upper)

    def clamps(self, k: int) -> bool:
        return k > self.lower

    def to_json(self):
        return [self.lower, self.upper]

    def __str__(self):
        return f"[{self.lower},{'inf' if self.upper is None else self.upper}]"


_COUNT_RE = re.compile(r"^\s*(>=|<=|>|<|=)?\s*(\d+)\s*$")


def parse_count(spec) -> CountInterval:
    """Parse a KB count: ``[lo, hi]``, an int, or ``">3"``-style surface syntax.

    Strict bounds are normalized to closed ones (``> n`` becomes lower ``n+1``).
    """
    if isinstance(spec, CountInterval):
        return spec
    if spec is None:
        return CountInterval()
    if isinstance(spec, bool):
        raise KBError(f"bad count {spec!r}")
    if isinstance(spec, int):
        return CountInterval(spec, spec)
    if isinstance(spec, (list, tuple)) and len(spec) == 2:
        lo, hi = spec
        try:
            return CountInterval(int(lo), None if hi is None else int(hi))
        except (TypeError, ValueError) as exc:
            raise KBError(f"bad count {spec!r}: {exc}") from None
    if isinstance(spec, str):
        m = _COUNT_RE.match(spec)
        if m:
            op, n = m.group(1) or "=", int(m.group(2))
            if op == "=":
                return CountInterval(n, n)
            if op == ">":
                return CountInterval(n + 1, None)
            if op == ">=":
                return CountInterval(n, None)
            if op == "<":
                if n == 0:
                    raise KBError("count < 0 is empty")
                return CountInterval(0, n - 1)
            return CountInterval(0, n)
    raise KBError(f"bad count {spec!r}")


@dataclass(frozen=True)
class Restriction:
    """What a variable may be bound to.

    ``value_category`` is a lattice category or one of PRIMITIVE_KINDS. A
    ``collection`` restriction also constrains the element category and size.
    """

    value_category: str
    element_category: Optional[str] = None
    count: Optional[CountInterval] = None

    @property
    def is_collection(self) -> bool:
        return self.value_category == "collection"

    def to_json(self):
        if self.is_collection:
            return {"collection": {"type": self.element_category,
                                   "count": self.count.to_json()}}
        return self.value_category

    @classmethod
    def from_json(cls, data) -> "Restriction":
        if isinstance(data, Restriction):
            return data
        if isinstance(data, str):
            if data == "collection":
                return cls("collection", "entity", CountInterval())
            return cls(data)
        if isinstance(data, dict) and "collection" in data:
            spec = data["collection"] or {}
            return cls("collection", spec.get("type") or "entity",
                       parse_count(spec.get("count")))
        raise KBError(f"bad restriction {data!r}")

    def __str__(self):
        if self.is_collection:
            return f"collection({self.element_category},{self.count})"
        return self.value_category


@dataclass(frozen=True)
class Ref:
    """Reference to an individual in the situation (or passive store)."""
    id: str


@dataclass(frozen=True)
class Const:
    """A named ontology individual such as ``black`` or ``ground``."""
    name: str


@dataclass(frozen=True)
class Collection:
    """Inline collection value; ``type=None`` means the element type is not yet known."""
    type: Optional[str]
    count: CountInterval = field(default_factory=CountInterval)
    members: tuple = ()


@dataclass(frozen=True)
class Number:
    value: Union[int, float]


@dataclass(frozen=True)
class Text:
    text: str
    kind: str = "string"


@dataclass(frozen=True)
class Unknown:
    """A value known to exist but not yet identified; carries its restriction."""
    restriction: Restriction


Value = Union[Ref, Const, Collection, Number, Text, Unknown]


def value_to_json(value):
    if isinstance(value, Ref):
        return {"ref": value.id}
    if isinstance(value, Const):
        return {"const": value.name}
    if isinstance(value, Collection):
        out = {"type": value.type, "count": value.count.to_json()}
        if value.members:
            out["members"] = list(value.members)
        return {"collection": out}
    if isinstance(value, Number):
        return {"number": value.value}
    if isinstance(value, Text):
        return {value.kind: value.text}
    if isinstance(value, Unknown):
        return {"unknown": value.restriction.to_json()}
    raise TypeError(f"not a value: {value!r}")


def value_from_json(data):
    if not isinstance(data, dict) or len(data) != 1:
        raise KBError(f"bad value {data!r}")
    (key, body), = data.items()
    if key == "ref":
        return Ref(body)
    if key == "const":
        return Const(body)
    if key == "collection":
        return Collection(body.get("type"), parse_count(body.get("count")),
                          tuple(body.get("members", ())))
    if key == "number":
        return Number(body)
    if key in ("string", "time"):
        return Text(str(body), key)
    if key == "unknown":
        return Unknown(Restriction.from_json(body))
    raise KBError(f"bad value {data!r}")


def value_str(value) -> str:
    if isinstance(value, Ref):
        return value.id
    if isinstance(value, Const):
        return value.name
    if isinstance(value, Collection):
        return f"collection(count={value.count}, type={value.type or '?'})"
    if isinstance(value, Number):
        return str(value.value)
    if isinstance(value, Text):
        return value.text
    if isinstance(value, Unknown):
        return f"?({value.restriction})"
    return repr(value)
