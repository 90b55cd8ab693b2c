"""Category lattice with uniquely-identified lambda variables.

Every variable is declared exactly once, on the highest category it applies
to, and gets the id ``<category>.<name>``. Subcategories and composites may
narrow a variable's restriction or give it a default, but never mint a new
id. Composite categories pre-compute their full variable table so that an
individual can address all of its latent variables without walking the
lattice.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import KBError, RestrictionConflict
from .values import (PRIMITIVE_KINDS, Collection, Const, CountInterval, Number,
                     Ref, Restriction, Text, Unknown)


@dataclass(frozen=True)
class LambdaVariable:
    variable_id: str
    name: str
    defining_category: str
    base_restriction: Restriction
    default: object = None


@dataclass
class Category:
    name: str
    parents: Tuple[str, ...] = ()
    declared: Tuple[str, ...] = ()
    restrictions: Dict[str, Restriction] = field(default_factory=dict)
    defaults: Dict[str, object] = field(default_factory=dict)
    expressible: bool = False
    composite: bool = False


@dataclass(frozen=True)
class TableEntry:
    restriction: Restriction
    default: object = None


@dataclass
class CompositeCategory:
    name: str
    members: Tuple[str, ...]
    variable_table: Dict[str, TableEntry]


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    code: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.code}: {self.subject}: {self.message}"


class Ontology:
    """Mutable while loading; treat as read-only once a KB has been built."""

    def __init__(self):
        self.categories: Dict[str, Category] = {}
        self.variables: Dict[str, LambdaVariable] = {}
        self.composites: Dict[str, CompositeCategory] = {}
        self.constants: Dict[str, str] = {}
        self._ancestors: Dict[str, frozenset] = {}
        self._minimal: Dict[str, Tuple[dict, dict]] = {}
        self._tables: Dict[str, Dict[str, TableEntry]] = {}

    # -- lattice queries --------------------------------------------------

    def __contains__(self, name):
        return name in self.categories

    def ancestors(self, name: str) -> frozenset:
        """All nodes above ``name`` in the lattice, including itself."""
        try:
            return self._ancestors[name]
        except KeyError:
            pass
        cat = self._node(name)
        acc = {name}
        for p in cat.parents:
            acc |= self.ancestors(p)
        result = frozenset(acc)
        self._ancestors[name] = result
        return result

    def is_a(self, specific: str, general: str) -> bool:
        """Descendant-or-equal test; primitive kinds only match themselves."""
        if specific == general:
            return True
        if specific not in self.categories or general not in self.categories:
            return False
        return general in self.ancestors(specific)

    def narrows(self, narrower: Restriction, wider: Restriction) -> bool:
        if narrower.value_category in PRIMITIVE_KINDS or wider.value_category in PRIMITIVE_KINDS:
            if narrower.value_category != wider.value_category:
                return False
            if narrower.is_collection:
                return (self.is_a(narrower.element_category, wider.element_category)
                        and narrower.count.within(wider.count))
            return True
        return self.is_a(narrower.value_category, wider.value_category)

    def reachable_variables(self, name: str) -> List[str]:
        out = []
        for anc in sorted(self.ancestors(name)):
            out.extend(self.categories[anc].declared)
        return sorted(out)

    def topological_order(self) -> List[str]:
        from graphlib import TopologicalSorter
        ts = TopologicalSorter({n: c.parents for n, c in self.categories.items()})
        return list(ts.static_order())

    def _node(self, name: str) -> Category:
        try:
            return self.categories[name]
        except KeyError:
            raise KBError(f"unknown category {name!r}") from None

    # -- declarations -----------------------------------------------------

    def define_category(self, name: str, parents: Iterable[str] = (),
                        variables: Iterable[Mapping] = (),
                        restrictions: Optional[Mapping] = None,
                        defaults: Optional[Mapping] = None,
                        expressible: bool = False) -> Category:
        """Register a category; its declared variables get fresh ids.

        ``variables`` items are mappings with ``name``, ``restriction`` and an
        optional ``default``.
        """
        return self._define(name, tuple(parents), variables, restrictions or {},
                            defaults or {}, expressible, composite=False)

    def compose(self, name: str, members: Iterable[str],
                restrictions: Optional[Mapping] = None,
                defaults: Optional[Mapping] = None) -> CompositeCategory:
        """Build a composite category and pre-cache its variable table."""
        members = tuple(members)
        if not members:
            raise KBError(f"composite {name!r} has no members")
        self._define(name, members, (), restrictions or {}, defaults or {},
                     False, composite=True)
        table = self.variable_table(name)
        comp = CompositeCategory(name, members, table)
        self.composites[name] = comp
        return comp

    def define_constant(self, name: str, category: str):
        if name in self.constants:
            raise KBError(f"duplicate constant {name!r}")
        self._node(category)
        self.constants[name] = category

    def _define(self, name, parents, variables, restrictions, defaults,
                expressible, composite):
        if name in self.categories:
            raise KBError(f"duplicate category {name!r}")
        if name in PRIMITIVE_KINDS:
            raise KBError(f"{name!r} is reserved for a primitive kind")
        for p in parents:
            if p not in self.categories:
                kind = "member" if composite else "parent"
                raise KBError(f"{name!r}: unknown {kind} {p!r}")
        if len(set(parents)) != len(parents):
            raise KBError(f"{name!r}: repeated parent")
        declared = []
        new_vars = []
        for decl in variables:
            vname = decl["name"]
            vid = f"{name}.{vname}"
            if vid in self.variables or vid in declared:
                raise KBError(f"duplicate variable {vid!r}")
            restriction = Restriction.from_json(decl["restriction"])
            self._check_restriction_names(restriction, vid, own=name)
            new_vars.append(LambdaVariable(vid, vname, name, restriction,
                                           decl.get("default")))
            declared.append(vid)

        inherited = set()
        for p in parents:
            inherited.update(self.reachable_variables(p))
        own = {}
        for vid, spec in restrictions.items():
            if vid not in inherited:
                raise KBError(f"{name!r} restricts unreachable variable {vid!r}")
            r = Restriction.from_json(spec)
            self._check_restriction_names(r, vid)
            own[vid] = r
        own_defaults = {}
        for vid, val in defaults.items():
            if vid not in inherited and vid not in declared:
                raise KBError(f"{name!r} sets a default for unreachable variable {vid!r}")
            own_defaults[vid] = val

        cat = Category(name, parents, tuple(declared), own, own_defaults,
                       expressible, composite)
        self.categories[name] = cat
        for var in new_vars:
            self.variables[var.variable_id] = var
        try:
            for vid, r in own.items():
                for p in parents:
                    for wider in self._occurrences(p, vid):
                        if not self.narrows(r, wider):
                            raise RestrictionConflict(
                                f"{name!r}: restriction {r} on {vid} does not narrow {wider}")
            self.variable_table(name)
        except Exception:
            del self.categories[name]
            for var in new_vars:
                del self.variables[var.variable_id]
            self._ancestors.pop(name, None)
            self._minimal.pop(name, None)
            raise
        return cat

    def _check_restriction_names(self, r: Restriction, where: str, own=None):
        known = set(self.categories) | {own}
        if r.value_category not in PRIMITIVE_KINDS and r.value_category not in known:
            raise KBError(f"{where}: restriction names unknown category {r.value_category!r}")
        if r.is_collection and r.element_category not in known:
            raise KBError(f"{where}: collection of unknown category {r.element_category!r}")

    def restrict_variable(self, category: str, variable_id: str,
                          narrower) -> Category:
        """Narrow ``variable_id`` on an existing category.

        Only legal on a category with no subcategories yet, since existing
        descendants would otherwise have been checked against the old table.
        """
        cat = self._node(category)
        if variable_id not in self.variables:
            raise KBError(f"unknown variable {variable_id!r}")
        if variable_id not in self.reachable_variables(category):
            raise KBError(f"{variable_id!r} is not reachable from {category!r}")
        if any(category in c.parents for c in self.categories.values()):
            raise KBError(f"{category!r} already has subcategories")
        r = Restriction.from_json(narrower)
        self._check_restriction_names(r, variable_id)
        current = self.variable_table(category)[variable_id].restriction
        if not self.narrows(r, current):
            raise KBError(f"widening {variable_id} from {current} to {r}")
        cat.restrictions[variable_id] = r
        self._minimal.pop(category, None)
        self._tables.pop(category, None)
        self.variable_table(category)
        if cat.composite and category in self.composites:
            self.composites[category].variable_table = self.variable_table(category)
        return cat

    def _occurrences(self, name, vid):
        """Restrictions on ``vid`` visible at ``name`` (minimal ones suffice)."""
        rmin, _ = self._minimal_table(name)
        return rmin.get(vid, ())

    # -- pre-cached tables --------------------------------------------------

    def _reduce(self, restrictions):
        """Keep only restrictions not strictly narrowed by another one."""
        uniq = list(dict.fromkeys(restrictions))
        return tuple(r for r in uniq
                     if not any(o != r and self.narrows(o, r) for o in uniq))

    def _reduce_defaults(self, decls):
        uniq = list(dict.fromkeys(decls))
        return tuple(d for d in uniq
                     if not any(o[0] != d[0] and self.is_a(o[0], d[0]) for o in uniq))

    def _minimal_table(self, name):
        """Per-node memo: variable -> minimal restrictions and minimal default sources."""
        try:
            return self._minimal[name]
        except KeyError:
            pass
        cat = self._node(name)
        rmin: Dict[str, tuple] = {}
        dmin: Dict[str, tuple] = {}
        for p in cat.parents:
            prm, pdm = self._minimal_table(p)
            for vid, rs in prm.items():
                rmin[vid] = rmin.get(vid, ()) + rs
            for vid, ds in pdm.items():
                dmin[vid] = dmin.get(vid, ()) + ds
        for vid in cat.declared:
            var = self.variables[vid]
            rmin[vid] = (var.base_restriction,)
            if var.default is not None:
                dmin[vid] = ((name, var.default),)
        for vid, r in cat.restrictions.items():
            rmin[vid] = rmin.get(vid, ()) + (r,)
        for vid, val in cat.defaults.items():
            dmin[vid] = dmin.get(vid, ()) + ((name, val),)
        rmin = {vid: self._reduce(rs) for vid, rs in rmin.items()}
        dmin = {vid: self._reduce_defaults(ds) for vid, ds in dmin.items()}
        self._minimal[name] = (rmin, dmin)
        return rmin, dmin

    def instantiable(self, name: str) -> bool:
        return name in self.categories

    def table_for(self, name: str) -> Dict[str, TableEntry]:
        """Variable table of a composite, or of a plain category used directly."""
        comp = self.composites.get(name)
        if comp is not None:
            return comp.variable_table
        if name not in self._tables:
            self._tables[name] = self.variable_table(name)
        return self._tables[name]

    def variable_table(self, name: str) -> Dict[str, TableEntry]:
        """Effective restriction and default for every variable of ``name``."""
        rmin, dmin = self._minimal_table(name)
        table = {}
        for vid in sorted(rmin):
            rs = rmin[vid]
            if len(rs) != 1:
                raise RestrictionConflict(
                    f"{name!r}: incomparable restrictions on {vid}: "
                    + ", ".join(sorted(str(r) for r in rs)))
            default = None
            ds = dmin.get(vid, ())
            values = list(dict.fromkeys(_freeze(v) for _, v in ds))
            if len(values) > 1:
                raise RestrictionConflict(f"{name!r}: conflicting defaults for {vid}")
            if values:
                default = ds[0][1]
                if not self.satisfies(default, rs[0]):
                    raise KBError(f"{name!r}: default {default!r} for {vid} violates {rs[0]}")
            table[vid] = TableEntry(rs[0], default)
        return table

    # -- values -----------------------------------------------------------

    def satisfies(self, value, restriction: Restriction,
                  type_of: Optional[Callable[[str], Optional[str]]] = None) -> bool:
        """Does ``value`` meet ``restriction``?

        ``type_of`` maps an individual id to its composite; without it,
        references are accepted only if they are unknown to the caller.
        """
        vc = restriction.value_category
        if isinstance(value, Unknown):
            return self.narrows(value.restriction, restriction)
        if isinstance(value, Const):
            cat = self.constants.get(value.name)
            return cat is not None and vc not in PRIMITIVE_KINDS and self.is_a(cat, vc)
        if isinstance(value, Ref):
            if vc in PRIMITIVE_KINDS:
                return False
            comp = type_of(value.id) if type_of else None
            return comp is not None and self.is_a(comp, vc)
        if isinstance(value, Collection):
            if not restriction.is_collection:
                return False
            type_ok = value.type is None or self.is_a(value.type, restriction.element_category)
            return type_ok and value.count.within(restriction.count)
        if isinstance(value, Number):
            return vc in ("number", "count")
        if isinstance(value, Text):
            return vc == value.kind
        return False

    def value_category(self, value, type_of=None) -> Optional[str]:
        if isinstance(value, Const):
            return self.constants.get(value.name)
        if isinstance(value, Ref) and type_of:
            return type_of(value.id)
        if isinstance(value, Unknown):
            return value.restriction.value_category
        return None


def _freeze(value):
    from .values import value_to_json
    import json
    try:
        return json.dumps(value_to_json(value), sort_keys=True)
    except TypeError:
        return repr(value)


def effective_restrictions_oracle(onto: Ontology, members: Iterable[str],
                                  restrictions: Optional[Mapping] = None,
                                  defaults: Optional[Mapping] = None
                                  ) -> Dict[str, TableEntry]:
    """Variable table by exhaustive ancestor traversal, without any caching.

    Kept independent of ``Ontology.compose`` so the two can be compared.
    """
    members = list(members)
    for m in members:
        if m not in onto.categories:
            raise KBError(f"unknown member {m!r}")
    nodes = set()
    queue = deque(members)
    while queue:
        n = queue.popleft()
        if n in nodes:
            continue
        nodes.add(n)
        queue.extend(onto.categories[n].parents)

    def above(x, y):
        # y reachable from x by following parent links (or equal)
        seen, stack = set(), [x]
        while stack:
            n = stack.pop()
            if n == y:
                return True
            if n in seen or n not in onto.categories:
                continue
            seen.add(n)
            stack.extend(onto.categories[n].parents)
        return False

    def narrower(a: Restriction, b: Restriction):
        prim = set(PRIMITIVE_KINDS)
        if a.value_category in prim or b.value_category in prim:
            if a.value_category != b.value_category:
                return False
            if a.value_category == "collection":
                if not above(a.element_category, b.element_category):
                    return False
                lo_ok = a.count.lower >= b.count.lower
                hi_ok = b.count.upper is None or (a.count.upper is not None
                                                  and a.count.upper <= b.count.upper)
                return lo_ok and hi_ok
            return True
        return above(a.value_category, b.value_category)

    occ: Dict[str, list] = {}
    decl: Dict[str, list] = {}
    own = "<self>"
    for n in sorted(nodes):
        cat = onto.categories[n]
        for vid in cat.declared:
            var = onto.variables[vid]
            occ.setdefault(vid, []).append(var.base_restriction)
            if var.default is not None:
                decl.setdefault(vid, []).append((n, var.default))
        for vid, r in cat.restrictions.items():
            occ.setdefault(vid, []).append(r)
        for vid, v in cat.defaults.items():
            decl.setdefault(vid, []).append((n, v))
    for vid, spec in (restrictions or {}).items():
        if vid not in occ:
            raise KBError(f"restriction on unreachable variable {vid!r}")
        r = Restriction.from_json(spec)
        if not all(narrower(r, o) for o in occ[vid]):
            raise RestrictionConflict(f"restriction on {vid} widens an inherited one")
        occ[vid].append(r)
    for vid, v in (defaults or {}).items():
        decl.setdefault(vid, []).append((own, v))

    table = {}
    for vid in sorted(occ):
        rs = occ[vid]
        winners = [r for r in rs if all(narrower(r, o) for o in rs)]
        if not winners:
            raise RestrictionConflict(f"incomparable restrictions on {vid}")
        best = winners[0]
        ds = decl.get(vid, [])
        if any(src == own for src, _ in ds):
            ds = [(s, v) for s, v in ds if s == own]
        minimal = [(s, v) for s, v in ds
                   if not any(o != s and above(o, s) for o, _ in ds)]
        vals = {_freeze(v) for _, v in minimal}
        if len(vals) > 1:
            raise RestrictionConflict(f"conflicting defaults for {vid}")
        default = minimal[0][1] if minimal else None
        table[vid] = TableEntry(best, default)
    return table


def lint_ontology(kb) -> List[Diagnostic]:
    """Report unrealized, vacuous and dangling declarations. Never raises."""
    onto = kb.ontology
    out: List[Diagnostic] = []
    realized = {}
    try:
        for name in onto.categories:
            realized[name] = kb.lexicon.realizations_of(name)
    except Exception as exc:  # lint reports, it does not throw
        out.append(Diagnostic("error", "lexicon", "-", str(exc)))
    referenced = set(kb.referenced_categories())
    for name in sorted(onto.categories):
        cat = onto.categories[name]
        if cat.expressible and not realized.get(name):
            out.append(Diagnostic("error", "unrealized-category", name,
                                  "expressible category has no word or phrase"))
        if cat.composite:
            continue
        contributes = (cat.declared or cat.restrictions or cat.defaults
                       or realized.get(name) or name in referenced)
        if not contributes:
            out.append(Diagnostic("warning", "vacuous-category", name,
                                  "adds no variables, restrictions, defaults, "
                                  "procedures or realizations"))
    for where, vid in kb.variable_references():
        if vid not in onto.variables:
            out.append(Diagnostic("error", "dangling-variable", where,
                                  f"unknown variable {vid!r}"))
    return out
