"""Typed feature structures over a bounded type hierarchy.

Nodes are typed, may carry a leaf payload (an integer constant, a string,
or a set of integers for join-capable constants), and may be shared:
reentrancy is token identity of node objects, not structural equality.
Unification is non-destructive; both inputs remain usable afterwards.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Union

Payload = Union[int, str, frozenset, None]

_FAIL = object()


class HierarchyError(Exception):
    """Raised when a type hierarchy declaration is inconsistent."""


class TypeHierarchy:
    """A finite partial order of types with appropriateness conditions.

    The hierarchy must have a single most general type and must be
    bounded complete: every pair of types with a common subtype has a
    unique greatest lower bound.  Violations are compile-time errors,
    not unification-time surprises.
    """

    def __init__(self, parents: Mapping[str, Iterable[str]],
                 approp: Optional[Mapping[str, Mapping[str, str]]] = None):
        self.parents = {t: tuple(ps) for t, ps in parents.items()}
        for t, ps in self.parents.items():
            for p in ps:
                if p not in self.parents:
                    raise HierarchyError(f"type {t!r} has undeclared parent {p!r}")
        roots = [t for t, ps in self.parents.items() if not ps]
        if len(roots) != 1:
            raise HierarchyError(f"hierarchy needs exactly one top type, found {roots}")
        self.top = roots[0]
        self._order = self._toposort()
        self._down = self._downsets()
        self._glb = self._compile_glb()
        self._approp = self._compile_approp(approp or {})

    # -- compilation -------------------------------------------------

    def _toposort(self):
        order, state = [], {}
        def visit(t, stack):
            if state.get(t) == 2:
                return
            if state.get(t) == 1:
                cycle = stack[stack.index(t):] + [t]
                raise HierarchyError(f"cycle detected: {' > '.join(cycle)}")
            state[t] = 1
            stack.append(t)
            for p in self.parents[t]:
                visit(p, stack)
            stack.pop()
            state[t] = 2
            order.append(t)
        for t in self.parents:
            visit(t, [])
        return order

    def _downsets(self):
        # fixpoint propagation child -> parent; fine at lingware scale
        down = {t: {t} for t in self.parents}
        changed = True
        while changed:
            changed = False
            for t, ps in self.parents.items():
                for p in ps:
                    if not down[t] <= down[p]:
                        down[p] |= down[t]
                        changed = True
        return down

    def _compile_glb(self):
        types = list(self.parents)
        table = {}
        for i, a in enumerate(types):
            for b in types[i:]:
                common = self._down[a] & self._down[b]
                if not common:
                    table[(a, b)] = table[(b, a)] = None
                    continue
                maxima = [t for t in common
                          if not any(t in self._down[u] and t != u for u in common)]
                if len(maxima) != 1:
                    raise HierarchyError(
                        f"no unique greatest lower bound for {a!r} and {b!r}: "
                        f"candidates {sorted(maxima)}")
                table[(a, b)] = table[(b, a)] = maxima[0]
        return table

    def _compile_approp(self, declared):
        # each type inherits features from all ancestors; a redeclared
        # feature must narrow (or repeat) the inherited constraint
        closed = {}
        for t in self._order:  # parents precede children
            feats = {}
            for p in self.parents[t]:
                for f, c in closed[p].items():
                    if f in feats and feats[f] != c:
                        g = self.glb(feats[f], c)
                        if g is None:
                            raise HierarchyError(
                                f"feature {f!r} inherited into {t!r} with "
                                f"incompatible constraints {feats[f]!r}/{c!r}")
                        feats[f] = g
                    else:
                        feats[f] = c
            for f, c in declared.get(t, {}).items():
                if c not in self.parents:
                    raise HierarchyError(f"feature {f!r} on {t!r} has unknown value type {c!r}")
                if f in feats:
                    g = self.glb(feats[f], c)
                    if g != c:
                        raise HierarchyError(
                            f"feature {f!r} on {t!r} must narrow inherited "
                            f"constraint {feats[f]!r}, got {c!r}")
                feats[f] = c
            closed[t] = feats
        return closed

    # -- queries -----------------------------------------------------

    def __contains__(self, t):
        return t in self.parents

    def glb(self, a: str, b: str) -> Optional[str]:
        """Greatest lower bound of two types, or None for bottom."""
        try:
            return self._glb[(a, b)]
        except KeyError:
            missing = a if a not in self.parents else b
            raise HierarchyError(f"unknown type {missing!r}") from None

    def subsumes_type(self, general: str, specific: str) -> bool:
        return specific in self._down[general]

    def approp(self, t: str) -> Mapping[str, str]:
        return self._approp[t]

    def constraint(self, t: str, feat: str) -> Optional[str]:
        return self._approp[t].get(feat)


class FS:
    """One node of a feature structure DAG.

    Treat as immutable once it leaves the module that built it; shared
    nodes are reentrant by identity.  `payload` is only meaningful on
    leaf types (`index` carries constants, `string` carries text).
    """

    __slots__ = ("type", "feats", "payload")

    def __init__(self, type: str, feats: Optional[dict] = None, payload: Payload = None):
        self.type = type
        self.feats = feats or {}
        self.payload = payload

    def get(self, *path):
        node = self
        for f in path:
            node = node.feats.get(f)
            if node is None:
                return None
        return node

    def __repr__(self):
        return f"FS({self.type}{'' if self.payload is None else f'={self.payload!r}'}, {sorted(self.feats)})"


def make(h: TypeHierarchy, type: str, feats: Optional[dict] = None,
         payload: Payload = None) -> FS:
    """Build a node, enforcing appropriateness against the hierarchy."""
    if type not in h:
        raise HierarchyError(f"unknown type {type!r}")
    feats = feats or {}
    allowed = h.approp(type)
    for f, v in feats.items():
        c = allowed.get(f)
        if c is None:
            raise HierarchyError(f"feature {f!r} not appropriate for type {type!r}")
        g = h.glb(v.type, c)
        if g is None:
            raise HierarchyError(
                f"value of {f!r} on {type!r} has type {v.type!r}, "
                f"incompatible with constraint {c!r}")
        v.type = g
    return FS(type, feats, payload)


def copy_fs(fs: FS, memo: Optional[dict] = None) -> FS:
    """Deep copy preserving internal node sharing.

    Pass one memo across several copies to preserve sharing between them.
    """
    if memo is None:
        memo = {}
    got = memo.get(id(fs))
    if got is not None:
        return got
    out = FS(fs.type, {}, fs.payload)
    memo[id(fs)] = out
    for f, v in fs.feats.items():
        out.feats[f] = copy_fs(v, memo)
    return out


# -- unification -----------------------------------------------------

class _M:
    __slots__ = ("type", "feats", "payload", "fwd")

    def __init__(self, type, payload):
        self.type = type
        self.feats = {}
        self.payload = payload
        self.fwd = None


def _merge_payload(p, q):
    if p is None:
        return q
    if q is None:
        return p
    if isinstance(p, frozenset) or isinstance(q, frozenset):
        # join-capable constants unify with any member and survive the
        # merge, so one join can serve several argument bindings
        if isinstance(p, frozenset) and isinstance(q, frozenset):
            return p | q if p & q else _FAIL
        join, c = (p, q) if isinstance(p, frozenset) else (q, p)
        return join if c in join else _FAIL
    return p if p == q else _FAIL


class _Cyclic(Exception):
    pass


def _copy_in(fs, memo):
    got = memo.get(id(fs))
    if got is not None:
        return got
    m = _M(fs.type, fs.payload)
    memo[id(fs)] = m
    for f, v in fs.feats.items():
        m.feats[f] = _copy_in(v, memo)
    return m


def _deref(n):
    while n.fwd is not None:
        n = n.fwd
    return n


def _unify1(h, a, b):
    a, b = _deref(a), _deref(b)
    if a is b:
        return True
    t = h.glb(a.type, b.type)
    if t is None:
        return False
    p = _merge_payload(a.payload, b.payload)
    if p is _FAIL:
        return False
    a.type, a.payload = t, p
    b.fwd = a
    pending = b.feats
    b.feats = {}
    for f, v in pending.items():
        if f in a.feats:
            if not _unify1(h, a.feats[f], v):
                return False
        else:
            a.feats[f] = v
    a = _deref(a)
    allowed = h.approp(a.type)
    for f, v in list(a.feats.items()):
        c = allowed.get(f)
        if c is None:
            return False
        v = _deref(v)
        g = h.glb(v.type, c)
        if g is None:
            return False
        v.type = g
    return True


def _rebuild(n, memo, onstack):
    n = _deref(n)
    got = memo.get(id(n))
    if got is not None:
        return got
    if id(n) in onstack:
        raise _Cyclic()
    onstack.add(id(n))
    out = FS(n.type, {}, n.payload)
    for f, v in n.feats.items():
        out.feats[f] = _rebuild(v, memo, onstack)
    onstack.discard(id(n))
    memo[id(n)] = out
    return out


def unify(h: TypeHierarchy, a: FS, b: FS, want_map: bool = False):
    """Unify two structures; returns the result or None on failure.

    Inputs are never modified.  With want_map=True returns
    (result, nodemap) where nodemap maps id() of every input node to
    its node in the result (or (None, None) on failure).
    """
    ma, mb = {}, {}
    ca = _copy_in(a, ma)
    cb = _copy_in(b, mb)
    if not _unify1(h, ca, cb):
        return (None, None) if want_map else None
    memo = {}
    try:
        out = _rebuild(ca, memo, set())
    except _Cyclic:
        return (None, None) if want_map else None
    if not want_map:
        return out
    nodemap = {}
    for src, mid in list(ma.items()) + list(mb.items()):
        mid = _deref(mid)
        got = memo.get(id(mid))
        if got is not None:
            nodemap[src] = got
    return out, nodemap


# -- subsumption and canonical forms ----------------------------------

def _payload_subsumes(p, q):
    if p is None:
        return True
    if p == q:
        return True
    if isinstance(p, frozenset):
        if isinstance(q, frozenset):
            return q <= p
        return q in p
    return False


def subsumes(h: TypeHierarchy, a: FS, b: FS) -> bool:
    """True when `a` is at least as general as `b` (b refines a).

    Checks types, payloads, feature coverage and that every reentrancy
    in `a` is also present in `b`.
    """
    mapping = {}

    def walk(x, y):
        prior = mapping.get(id(x))
        if prior is not None:
            return prior is y
        mapping[id(x)] = y
        if not h.subsumes_type(x.type, y.type):
            return False
        if not _payload_subsumes(x.payload, y.payload):
            return False
        for f, v in x.feats.items():
            w = y.feats.get(f)
            if w is None or not walk(v, w):
                return False
        return True

    return walk(a, b)


def canonical(fs: FS):
    """Hashable form: equal iff structures are isomorphic (incl. sharing)."""
    ids = {}

    def walk(n):
        got = ids.get(id(n))
        if got is not None:
            return ("@", got)
        ids[id(n)] = len(ids)
        return (n.type, n.payload,
                tuple((f, walk(v)) for f, v in sorted(n.feats.items())))

    return walk(fs)


def iso(a: FS, b: FS) -> bool:
    return canonical(a) == canonical(b)


# -- rendering --------------------------------------------------------

def _payload_text(p):
    if isinstance(p, int):
        return f"#{p}"
    if isinstance(p, frozenset):
        return "#" + "|".join(str(c) for c in sorted(p))
    return f'"{p}"'


def render(fs: FS, shrink: Iterable[tuple] = ()) -> str:
    """Deterministic text for a structure.

    Substructures at `shrink` paths print as a boxed type name; nodes
    reached more than once print a numbered tag at every occurrence and
    their content only the first time.
    """
    shrink = set(tuple(p) for p in shrink)
    counts = {}

    def count(n, path):
        if tuple(path) in shrink:
            return
        counts[id(n)] = counts.get(id(n), 0) + 1
        if counts[id(n)] == 1:
            for f, v in sorted(n.feats.items()):
                count(v, path + [f])

    count(fs, [])
    tags, emitted = {}, set()

    def tag_for(n):
        if counts.get(id(n), 0) > 1:
            if id(n) not in tags:
                tags[id(n)] = len(tags) + 1
            return tags[id(n)]
        return None

    def emit(n, path, indent):
        if tuple(path) in shrink:
            return f"<{n.type}>"
        t = tag_for(n)
        prefix = f"[{t}] " if t is not None else ""
        if t is not None and id(n) in emitted:
            return f"[{t}]"
        emitted.add(id(n))
        head = n.type if n.payload is None else f"{n.type} {_payload_text(n.payload)}"
        if not n.feats:
            return f"{prefix}({head})"
        pad = " " * (indent + 2)
        lines = [f"{prefix}({head}"]
        for f, v in sorted(n.feats.items()):
            lines.append(f"{pad}{f}: {emit(v, path + [f], indent + 2)}")
        lines[-1] += ")"
        return "\n".join(lines)

    return emit(fs, [], 0)


# -- small helpers used by sign building -------------------------------

def fs_set(h: TypeHierarchy, fs: FS, path: tuple, value: FS):
    """Destructively set a path, creating intermediate nodes as needed.

    Only for structures privately owned by the caller (freshly copied);
    published structures stay immutable.
    """
    node = fs
    for f in path[:-1]:
        nxt = node.feats.get(f)
        if nxt is None:
            c = h.constraint(node.type, f)
            if c is None:
                raise HierarchyError(f"feature {f!r} not appropriate for {node.type!r}")
            nxt = FS(c)
            node.feats[f] = nxt
        node = nxt
    f = path[-1]
    c = h.constraint(node.type, f)
    if c is None:
        raise HierarchyError(f"feature {f!r} not appropriate for {node.type!r}")
    g = h.glb(value.type, c)
    if g is None:
        raise HierarchyError(f"{value.type!r} violates constraint {c!r} at {'.'.join(path)}")
    value.type = g
    node.feats[f] = value


def subst_nodes(fs: FS, mapping: dict, memo: Optional[dict] = None) -> FS:
    """Copy replacing nodes by id() per `mapping`; preserves sharing."""
    if memo is None:
        memo = {}
    target = mapping.get(id(fs))
    if target is not None:
        return target
    got = memo.get(id(fs))
    if got is not None:
        return got
    out = FS(fs.type, {}, fs.payload)
    memo[id(fs)] = out
    for f, v in fs.feats.items():
        out.feats[f] = subst_nodes(v, mapping, memo)
    return out
