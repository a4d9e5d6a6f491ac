"""Bilingual lexicon, bilingual lexical rules and cover-based transfer.

An entry equates a list of source sign patterns with a list of target
sign patterns, optionally constrained by context signs on either side.
All four lists live in one feature structure so that matching a source
side instantiates the target side through shared argument nodes.
Bilingual rules map an entry to a derived entry by running monolingual
lexical rules over its sides and splicing in additional signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Optional

from .tfs import FS, TypeHierarchy, canonical, copy_fs, subst_nodes, unify
from .signs import (Lexicon, LingwareError, MonoRule, Sign, SignInst,
                    apply_mono_rule, format_sem, sem_arg_nodes, sem_preds)
from .chart import TransferRep

_SIDES = ("SL", "TL", "SLC", "TLC")


def _slist(items):
    return FS(f"slist{len(items)}",
              {f"S{i + 1}": fs for i, fs in enumerate(items)})


def _slist_items(node):
    out = []
    i = 1
    while f"S{i}" in node.feats:
        out.append(node.feats[f"S{i}"])
        i += 1
    return out


@dataclass(eq=False)
class BilexEntry:
    """Translationally equated sign pattern lists, plus contexts."""
    name: str
    origin: object                    # "static" or (rule name, parent name)
    fs: FS                            # umbrella with SL/TL/SLC/TLC
    sl: list
    tl: list
    slc: list = field(default_factory=list)
    tlc: list = field(default_factory=list)
    var_map: dict = field(default_factory=dict)
    joins: list = field(default_factory=list)   # (join var, member vars)

    @property
    def derived(self):
        return self.origin != "static"

    def side_fs(self, side, i):
        return self.fs.feats[side].feats[f"S{i + 1}"]

    def copy(self):
        memo: dict = {}
        fs = copy_fs(self.fs, memo)
        vm = {n: memo.get(id(v), v) for n, v in self.var_map.items()}
        return BilexEntry(self.name, self.origin, fs,
                          list(self.sl), list(self.tl),
                          list(self.slc), list(self.tlc), vm, list(self.joins))

    def flipped(self):
        fs = FS("bilex", {"SL": self.fs.feats["TL"], "TL": self.fs.feats["SL"],
                          "SLC": self.fs.feats["TLC"], "TLC": self.fs.feats["SLC"]})
        return BilexEntry(self.name, self.origin, fs,
                          list(self.tl), list(self.sl),
                          list(self.tlc), list(self.slc), dict(self.var_map),
                          list(self.joins))

    def summary(self):
        def side(signs, node):
            items = _slist_items(node)
            return " ".join(format_sem(fs) for fs in items) or "-"
        sl = side(self.sl, self.fs.feats["SL"])
        slc = side(self.slc, self.fs.feats["SLC"])
        tl = side(self.tl, self.fs.feats["TL"])
        tlc = side(self.tlc, self.fs.feats["TLC"])
        ctx = lambda s: f" ({s})" if s != "-" else ""
        return f"{sl}{ctx(slc)} <-> {tl}{ctx(tlc)}"


def build_entry(name, origin, sl, tl, slc=(), tlc=(), var_map=None):
    """Assemble an entry from (Sign, FS) pairs per side."""
    fs = FS("bilex", {"SL": _slist([f for _, f in sl]),
                      "TL": _slist([f for _, f in tl]),
                      "SLC": _slist([f for _, f in slc]),
                      "TLC": _slist([f for _, f in tlc])})
    return BilexEntry(name, origin, fs,
                      [s for s, _ in sl], [s for s, _ in tl],
                      [s for s, _ in slc], [s for s, _ in tlc],
                      var_map or {})


# -- bilingual lexical rules --------------------------------------------

@dataclass
class MatchItem:
    var: str
    argnames: tuple
    pins: tuple = ()


@dataclass
class OutItem:
    kind: str                 # "add" | "xform"
    ref: str                  # lemma for add, matched var for xform
    mono: Optional[str] = None
    argnames: tuple = ()
    pins: tuple = ()
    ctx: bool = False
    bare: bool = False


@dataclass(eq=False)
class BiLexicalRule:
    """Maps a matching entry to a derived entry."""
    name: str
    match_sl: list
    match_tl: list
    out_sl: list
    out_tl: list

    def flipped(self):
        return BiLexicalRule(self.name, self.match_tl, self.match_sl,
                             self.out_tl, self.out_sl)


def _apply_pin(h, fs, path, value, registry):
    """Pin a path on a privately owned sign structure.

    Variable pins bind the rule variable to the node at the path (or
    substitute an already-bound node in).  Returns a replacement fs when
    substitution rebuilt it, else the same fs; None on clash.
    """
    if isinstance(value, tuple) and value[0] == "var":
        name = value[1]
        node = fs
        for f in path[:-1]:
            nxt = node.feats.get(f)
            if nxt is None:
                c = h.constraint(node.type, f)
                nxt = FS(c if c else "top")
                node.feats[f] = nxt
            node = nxt
        at = node.feats.get(path[-1])
        if name in registry:
            if at is None:
                node.feats[path[-1]] = registry[name]
                return fs
            if at is registry[name]:
                return fs
            return subst_nodes(fs, {id(at): registry[name]})
        if at is None:
            at = FS("index")
            node.feats[path[-1]] = at
        registry[name] = at
        return fs
    if isinstance(value, tuple) and value[0] == "str":
        from .signs import constrain
        if not constrain(h, fs, path, "string"):
            return None
        node = fs
        for f in path:
            node = node.feats[f]
        node.payload = value[1]
        return fs
    from .signs import constrain
    return fs if constrain(h, fs, path, value) else None


def _bind_args(fs, argnames, registry):
    """Positionally link a sign's semantic arguments to rule variables."""
    nodes = sem_arg_nodes(fs)
    if len(nodes) != len(argnames):
        return None
    sub = {}
    for name, node in zip(argnames, nodes):
        if name in registry:
            if registry[name] is not node:
                sub[id(node)] = registry[name]
        else:
            registry[name] = node
    return subst_nodes(fs, sub) if sub else fs


def _match_pattern(h, items, registry):
    """Sign patterns for one side of a rule's input entry."""
    from .signs import build_sem
    out = []
    for item in items:
        fs = FS("sign")
        args = [registry.setdefault(a, FS("index")) for a in item.argnames]
        sem = build_sem(h, [("*", args)])
        sem.feats["P1"].feats.pop("NAME")
        fs.feats["SEM"] = sem
        for path, value in item.pins:
            fs = _apply_pin(h, fs, path, value, registry)
            if fs is None:
                raise LingwareError(f"impossible pin in rule match: {path}")
        out.append(fs)
    return out


def apply_birule(h: TypeHierarchy, rule: BiLexicalRule, entry: BilexEntry,
                 lexicons: dict, monorules: dict,
                 sl_lang: str, tl_lang: str) -> list:
    """Derived entries from one rule application (empty if inapplicable)."""
    if entry.slc or entry.tlc:
        return []
    if len(entry.sl) != len(rule.match_sl) or len(entry.tl) != len(rule.match_tl):
        return []

    ecopy = entry.copy()
    matchreg: dict = {}
    pat = FS("bilex", {"SL": _slist(_match_pattern(h, rule.match_sl, matchreg)),
                       "TL": _slist(_match_pattern(h, rule.match_tl, matchreg))})
    merged = unify(h, ecopy.fs, pat)
    if merged is None:
        return []

    matched = {}
    for side, items, signs in (("SL", rule.match_sl, ecopy.sl),
                               ("TL", rule.match_tl, ecopy.tl)):
        for i, item in enumerate(items):
            matched[item.var] = (signs[i], merged.feats[side].feats[f"S{i + 1}"])

    registry: dict = {}
    lang_of_side = {"sl": sl_lang, "tl": tl_lang}

    def build_item(item: OutItem, side: str):
        lang = lang_of_side[side]
        if item.kind == "add":
            sign = lexicons[lang].find(item.ref)
            fs = copy_fs(sign.fs)
        else:
            base_sign, base_fs = matched[item.ref]
            wrapped = Sign(base_sign.lemma, base_sign.stype, base_sign.lang,
                           base_fs, base_sign.morph, base_sign.derived_by)
            outs = apply_mono_rule(h, monorules[item.mono], wrapped)
            if not outs:
                return None
            sign, fs = outs[0], outs[0].fs
        fs2 = _bind_args(fs, item.argnames, registry)
        if fs2 is None:
            raise LingwareError(
                f"rule {rule.name}: arity mismatch binding {item.ref!r}")
        fs = fs2
        for path, value in item.pins:
            fs = _apply_pin(h, fs, path, value, registry)
            if fs is None:
                return None
        if item.bare:
            syn = fs.feats.get("SYN")
            cat = syn.feats.get("CAT") if syn is not None else None
            fs.feats["SYN"] = FS("syn", {"CAT": cat} if cat is not None else {})
        return (sign, fs)

    sides = {"sl": ([], []), "tl": ([], [])}
    for side, items in (("sl", rule.out_sl), ("tl", rule.out_tl)):
        for item in items:
            built = build_item(item, side)
            if built is None:
                return []
            sides[side][1 if item.ctx else 0].append(built)

    name = f"{rule.name}({entry.name})"
    derived = build_entry(name, (rule.name, entry.name),
                          sides["sl"][0], sides["tl"][0],
                          sides["sl"][1], sides["tl"][1], registry)
    return [derived]


def derive_entries(rep: Optional[TransferRep], entries, rules, depth: int,
                   h: TypeHierarchy, lexicons: dict, monorules: dict,
                   sl_lang: str, tl_lang: str, trace: Optional[list] = None):
    """Expand the bilexicon by rule application up to `depth`.

    With a transfer representation given, only derived entries whose
    source-side (and source-context) patterns each unify with some sign
    of the representation are kept.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    seen = {canonical(e.fs) for e in entries}
    pool = list(entries)
    derived = []
    for _ in range(depth):
        frontier = []
        for rule in rules:
            for e in pool:
                for out in apply_birule(h, rule, e, lexicons, monorules,
                                        sl_lang, tl_lang):
                    sig = canonical(out.fs)
                    if sig in seen:
                        continue
                    seen.add(sig)
                    if rep is not None and not _relevant(h, out, rep):
                        continue
                    if trace is not None:
                        trace.append(f"{e.name}: {e.summary()}")
                        trace.append(f"  ={rule.name}=> {out.name}: {out.summary()}")
                    frontier.append(out)
        if not frontier:
            break
        derived.extend(frontier)
        pool = pool + frontier
    return derived


def _relevant(h, entry, rep):
    for side in ("SL", "SLC"):
        for pat in _slist_items(entry.fs.feats[side]):
            if not any(unify(h, pat, s.fs) is not None for s in rep.signs):
                return False
    return True


# -- matching and covers -------------------------------------------------

def project_inflection(fs: FS) -> FS:
    """Copy with inflectional form features removed from the syntax.

    Context signs constrain category, semantics and argument variables
    only, so a pinned infinitive still licenses a gerund in the bag.
    """
    out = copy_fs(fs)
    syn = out.feats.get("SYN")
    if syn is not None:
        for f in ("VFORM", "TENSE", "AGR"):
            syn.feats.pop(f, None)
    return out


@dataclass(eq=False)
class Match:
    """One way an entry consumes a set of source positions."""
    entry: BilexEntry            # instantiated copy
    positions: tuple             # rep position per sl slot ((),) for ctx-only
    bindings: dict

    @property
    def posset(self):
        return frozenset(self.positions)


def match_entry(h: TypeHierarchy, entry: BilexEntry, rep: TransferRep,
                positions) -> list:
    """All instantiations of the entry against the given positions."""
    positions = tuple(positions)
    if len(positions) != len(entry.sl):
        return []
    out, seen = [], set()
    names = [_pred_name(entry.side_fs("SL", i)) for i in range(len(entry.sl))]
    for perm in permutations(positions):
        ok = True
        for i, p in enumerate(perm):
            rname = _pred_name(rep.signs[p].fs)
            if names[i] is not None and rname is not None and names[i] != rname:
                ok = False
                break
        if not ok:
            continue
        ecopy = entry.copy()
        probe = FS("bilex", {"SL": _slist([rep.signs[p].fs for p in perm])})
        res, nodemap = unify(h, ecopy.fs, probe, want_map=True)
        if res is None:
            continue
        sig = canonical(res)
        if sig in seen:
            continue
        seen.add(sig)
        vm = {n: nodemap.get(id(v), v) for n, v in ecopy.var_map.items()}
        bindings = {n: v.payload for n, v in vm.items()
                    if v.type == "index" and v.payload is not None}
        inst = BilexEntry(entry.name, entry.origin, res,
                          list(entry.sl), list(entry.tl),
                          list(entry.slc), list(entry.tlc), vm,
                          list(entry.joins))
        out.append(Match(inst, perm, bindings))
    return out


def _pred_name(fs):
    preds = sem_preds(fs)
    return preds[0][0] if preds else None


@dataclass(eq=False)
class Cover:
    """An exact partition of the source positions among entry matches."""
    matches: list
    ctx_positions: dict = field(default_factory=dict)

    @property
    def entries(self):
        return [m.entry for m in self.matches]

    def assignment(self):
        out = {}
        for i, m in enumerate(self.matches):
            for p in m.positions:
                out[p] = i
        return out

    def order_key(self):
        return (len(self.matches),
                sum(1 for m in self.matches if m.entry.derived),
                tuple(sorted(m.entry.name for m in self.matches)),
                tuple(sorted((m.entry.name, m.positions) for m in self.matches)))

    def summary(self):
        parts = []
        for m in self.matches:
            pos = ",".join(str(p) for p in m.positions) or "ctx"
            parts.append(f"{m.entry.name}[{pos}]")
        return " + ".join(sorted(parts))


def cover(rep: TransferRep, entries, h: TypeHierarchy):
    """All exact covers of the representation, fewest entries first.

    Context obligations are resolved during assembly: a source context
    sign must unify with a position consumed by a different entry of the
    same cover.  Returns (covers, diagnostic).
    """
    if not rep.skolemized:
        raise ValueError("cover requires a skolemized representation")
    n = len(rep.signs)
    positional, ctx_only = [], []
    for e in entries:
        (ctx_only if not e.sl else positional).append(e)

    candidates = []
    for e in positional:
        k = len(e.sl)
        for combo in combinations(range(n), k):
            candidates.extend(match_entry(h, e, rep, combo))
    by_pos: dict = {p: [] for p in range(n)}
    for m in candidates:
        for p in m.positions:
            by_pos[p].append(m)

    uncovered = sorted(p for p in range(n) if not by_pos[p])
    if uncovered:
        lemmas = ", ".join(f"{p}:{rep.signs[p].lemma}" for p in uncovered)
        return [], f"no cover: no entry matches positions {lemmas}"

    bases: list = []

    def dfs(covered, chosen):
        if len(covered) == n:
            bases.append(list(chosen))
            return
        p = min(q for q in range(n) if q not in covered)
        for m in by_pos[p]:
            if covered & m.posset:
                continue
            chosen.append(m)
            dfs(covered | m.posset, chosen)
            chosen.pop()

    dfs(frozenset(), [])
    if not bases:
        return [], "no exact cover over the matched entries"

    # matches for context-only entries (entries consuming no positions)
    ctx_matches = []
    for e in ctx_only:
        if len(e.slc) != 1:
            continue
        for p in range(n):
            ecopy = e.copy()
            probe = FS("bilex",
                       {"SLC": _slist([project_inflection(rep.signs[p].fs)])})
            res, nodemap = unify(h, ecopy.fs, probe, want_map=True)
            if res is None:
                continue
            vm = {nm: nodemap.get(id(v), v) for nm, v in ecopy.var_map.items()}
            inst = BilexEntry(e.name, e.origin, res, [], list(e.tl),
                              list(e.slc), list(e.tlc), vm, list(e.joins))
            ctx_matches.append((e, p, Match(inst, (), {})))

    covers = []
    for base in bases:
        variants = [Cover(list(base))]
        # optional context-only additions, each entry at most once
        groups: dict = {}
        for e, p, m in ctx_matches:
            groups.setdefault(id(e), []).append((p, m))
        for group in groups.values():
            extended = []
            for cv in variants:
                extended.append(cv)
                for p, m in group:
                    extended.append(Cover(cv.matches + [m],
                                          dict(cv.ctx_positions,
                                               **{len(cv.matches): {0: p}})))
            variants = extended
        covers.extend(v for v in variants if _contexts_ok(v, rep, h))

    covers.sort(key=Cover.order_key)
    if not covers:
        return [], "no cover satisfies its context constraints"
    return covers, None


def _contexts_ok(cv: Cover, rep, h) -> bool:
    """Refine matches so each source context sign binds to a position
    consumed by another entry; reject otherwise.

    Matches are replaced, never mutated: base matches are shared across
    cover variants.
    """
    for i, m in enumerate(cv.matches):
        need = len(m.entry.slc)
        if need == 0:
            continue
        others = set()
        for j, o in enumerate(cv.matches):
            if j != i:
                others |= o.posset
        pre = cv.ctx_positions.get(i, {})
        entry = m.entry
        for slot in range(need):
            if slot in pre:
                if pre[slot] not in others:
                    return False
                continue  # already instantiated against that position
            choice = None
            for p in sorted(others):
                trial = _refine_ctx(entry, slot, rep.signs[p].fs, h)
                if trial is not None:
                    entry = trial
                    choice = p
                    break
            if choice is None:
                return False
            cv.ctx_positions.setdefault(i, {})[slot] = choice
        if entry is not m.entry:
            cv.matches[i] = Match(entry, m.positions, m.bindings)
    return True


def _refine_ctx(entry, slot, sign_fs, h):
    items = [entry.side_fs("SLC", s) for s in range(len(entry.slc))]
    probe_items = list(items)
    probe_items[slot] = project_inflection(sign_fs)
    probe = FS("bilex", {"SLC": _slist(probe_items)})
    res, nodemap = unify(h, entry.fs, probe, want_map=True)
    if res is None:
        return None
    vm = {nm: nodemap.get(id(v), v) for nm, v in entry.var_map.items()}
    return BilexEntry(entry.name, entry.origin, res, list(entry.sl),
                      list(entry.tl), list(entry.slc), list(entry.tlc), vm,
                      list(entry.joins))


# -- target bag construction ---------------------------------------------

def build_tl_bag(cv: Cover, rep: TransferRep, h: TypeHierarchy):
    """Union of the instantiated target sides of a cover's entries.

    Unbound target-only variables receive fresh constants; the tense of
    a source head verb transfers to target verbs that lack one, and noun
    number passes through likewise.  Target context signs must unify
    with bag members contributed by other entries or the cover is
    rejected; returns (bag, diagnostic).
    """
    used = set()
    for s in rep.signs:
        for node in sem_arg_nodes(s.fs):
            if isinstance(node.payload, int):
                used.add(node.payload)
            elif isinstance(node.payload, frozenset):
                used |= node.payload
    next_const = max(used, default=0) + 1

    # matches are shared between covers; mutate private copies only
    insts = [m.entry.copy() for m in cv.matches]
    bag = []
    contributors = []
    for i, e in enumerate(insts):
        for jname, parts in e.joins:
            node = e.var_map.get(jname)
            members = {e.var_map[p].payload for p in parts
                       if p in e.var_map and isinstance(e.var_map[p].payload, int)}
            if node is not None and node.payload is None and members:
                node.payload = frozenset(members)
        tl_fs = [e.side_fs("TL", k) for k in range(len(e.tl))]

        fresh = []
        seen_nodes = set()
        for fs in tl_fs:
            for node in sem_arg_nodes(fs) + _syn_index_nodes(fs):
                if node.payload is None and id(node) not in seen_nodes:
                    seen_nodes.add(id(node))
                    fresh.append(node)
        for node in fresh:
            node.payload = next_const
            next_const += 1

        tense = _first_verb_tense(e)
        num = _first_noun_number(e)
        from .signs import constrain
        for k, fs in enumerate(tl_fs):
            syn = fs.feats.get("SYN", FS("syn"))
            cat = syn.feats.get("CAT")
            if tense is not None and cat is not None and cat.type == "v" \
                    and "TENSE" not in syn.feats:
                constrain(h, fs, ("SYN", "TENSE"), tense)
            if num is not None and cat is not None and cat.type == "n" \
                    and syn.feats.get("AGR", FS("agr")).type == "agr":
                constrain(h, fs, ("SYN", "AGR"), num)
            bag.append(SignInst(e.tl[k], fs))
            contributors.append(i)

    for i, e in enumerate(insts):
        for k in range(len(e.tlc)):
            ctx_fs = e.side_fs("TLC", k)
            ok = any(contributors[b] != i and
                     unify(h, ctx_fs, project_inflection(bag[b].fs)) is not None
                     for b in range(len(bag)))
            if not ok:
                return None, (f"cover rejected: target context "
                              f"{format_sem(ctx_fs)} of {e.name} unsatisfied")
    return bag, None


def _syn_index_nodes(fs):
    out = []
    syn = fs.feats.get("SYN")
    if syn is None:
        return out
    node = syn.feats.get("INDEX")
    if node is not None and node.type == "index":
        out.append(node)
    for slot in ("SUBJ", "COMP"):
        sub = syn.feats.get(slot)
        if sub is not None:
            nd = sub.feats.get("INDEX")
            if nd is not None and nd.type == "index":
                out.append(nd)
    return out


def _first_verb_tense(e: BilexEntry):
    for side, signs in (("SL", e.sl), ("SLC", e.slc)):
        for i in range(len(signs)):
            fs = e.side_fs(side, i)
            syn = fs.feats.get("SYN")
            if syn is None:
                continue
            cat = syn.feats.get("CAT")
            tense = syn.feats.get("TENSE")
            if cat is not None and cat.type == "v" and tense is not None \
                    and tense.type in ("pres", "past"):
                return tense.type
    return None


def _first_noun_number(e: BilexEntry):
    for i in range(len(e.sl)):
        fs = e.side_fs("SL", i)
        syn = fs.feats.get("SYN")
        if syn is None:
            continue
        cat = syn.feats.get("CAT")
        agr = syn.feats.get("AGR")
        if cat is not None and cat.type == "n" and agr is not None \
                and agr.type in ("agr3sg", "agr3pl"):
            return agr.type
    return None
