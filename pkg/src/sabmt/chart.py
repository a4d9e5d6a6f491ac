"""Chart parsing of token strings into lists of instantiated signs.

The same rule-application core drives three consumers: text analysis,
the ordered-parse half of the generation oracle, and (via masks instead
of spans) bag generation.  An edge's structure holds the constituent
category under CAT and every lexical leaf under L1..Ln, all in one DAG,
so unification results propagate into the leaves without mutation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .tfs import FS, TypeHierarchy, canonical, unify
from .signs import Lexicon, Sign, SignInst, sem_arg_nodes, format_sem
from .tfs import subst_nodes


@dataclass
class GrammarRule:
    """One (binarized) phrase structure rule with feature sharing."""
    name: str
    mother: FS
    daughters: list

    def __post_init__(self):
        if not 1 <= len(self.daughters) <= 2:
            raise ValueError(f"rule {self.name}: only unary or binary rules allowed")
        feats = {"M": FS("edge", {"CAT": self.mother})}
        for i, d in enumerate(self.daughters):
            feats[f"D{i + 1}"] = FS("edge", {"CAT": d})
        self.comb = FS("comb", feats)

    @property
    def arity(self):
        return len(self.daughters)


class Grammar:
    def __init__(self, lang: str, h: TypeHierarchy, rules, root: str = "s"):
        self.lang = lang
        self.h = h
        self.rules = list(rules)
        self.root = root
        self.root_pattern = FS("edge", {"CAT": FS("syn", {"CAT": FS(root)})})


def edge_fs_for(inst_fs: FS) -> FS:
    """Lexical edge: category reentrant with the leaf's SYN."""
    syn = inst_fs.feats.get("SYN")
    if syn is None:
        syn = FS("syn")
        inst_fs.feats["SYN"] = syn
    return FS("edge", {"CAT": syn, "L1": inst_fs})


def _leaf_count(fs: FS) -> int:
    n = 0
    while f"L{n + 1}" in fs.feats:
        n += 1
    return n


def _assemble(res: FS) -> FS:
    """Mother edge from a unified comb structure; leaves renumbered."""
    feats = {"CAT": res.feats["M"].feats["CAT"]}
    k = 0
    for d in ("D1", "D2"):
        dn = res.feats.get(d)
        if dn is None:
            continue
        for i in range(1, _leaf_count(dn) + 1):
            k += 1
            feats[f"L{k}"] = dn.feats[f"L{i}"]
    return FS("edge", feats)


class Combiner:
    """Rule application with memoization keyed by edge structure.

    Safe because results depend only on the daughters' structures, which
    are immutable once built; the generation oracle re-parses the same
    handful of signs thousands of times and lives on this cache.
    """

    def __init__(self, grammar: Grammar):
        self.g = grammar
        self._ids: dict = {}
        self._by_id: list = []
        self._memo: dict = {}

    def intern(self, fs: FS):
        key = canonical(fs)
        got = self._ids.get(key)
        if got is None:
            got = (len(self._ids), fs)
            self._ids[key] = got
            self._by_id.append(got)
        return got

    def by_id(self, i: int):
        return self._by_id[i]

    def apply(self, rule_idx: int, *edges):
        key = (rule_idx, tuple(e[0] for e in edges))
        if key in self._memo:
            return self._memo[key]
        rule = self.g.rules[rule_idx]
        probe = FS("comb", {f"D{i + 1}": e[1] for i, e in enumerate(edges)})
        res = unify(self.g.h, rule.comb, probe)
        out = None if res is None else self.intern(_assemble(res))
        self._memo[key] = out
        return out


@dataclass
class Edge:
    start: int
    end: int
    interned: tuple          # (id, fs) from the combiner
    signs: tuple             # lexicon Sign per leaf, in order

    @property
    def fs(self):
        return self.interned[1]


def span_chart(n: int, seeds, comb: Combiner):
    """Exhaustive bottom-up chart over spans; returns cells dict.

    `seeds` are Edge objects (possibly multi-token).  Unary closure runs
    in every cell; packing is deliberately absent so that every analysis
    stays enumerable.
    """
    g = comb.g
    cells: dict = {}
    seen = set()

    def add(edge):
        key = (edge.start, edge.end, edge.interned[0], edge.signs)
        if key in seen:
            return None
        seen.add(key)
        cells.setdefault((edge.start, edge.end), []).append(edge)
        return edge

    unary = [i for i, r in enumerate(g.rules) if r.arity == 1]
    binary = [i for i, r in enumerate(g.rules) if r.arity == 2]

    def close_unary(edge):
        todo = [edge]
        out = []
        while todo:
            e = todo.pop()
            for ri in unary:
                res = comb.apply(ri, e.interned)
                if res is not None:
                    ne = add(Edge(e.start, e.end, res, e.signs))
                    if ne is not None:
                        out.append(ne)
                        todo.append(ne)
        return out

    for s in seeds:
        e = add(s)
        if e is not None:
            close_unary(e)

    for width in range(2, n + 1):
        for start in range(0, n - width + 1):
            end = start + width
            made = []
            for mid in range(start + 1, end):
                for e1 in cells.get((start, mid), []):
                    for e2 in cells.get((mid, end), []):
                        for ri in binary:
                            res = comb.apply(ri, e1.interned, e2.interned)
                            if res is not None:
                                ne = add(Edge(start, end, res, e1.signs + e2.signs))
                                if ne is not None:
                                    made.append(ne)
            for e in list(made):
                made.extend(close_unary(e))
    return cells


# -- tokenization ------------------------------------------------------

_PUNCT = ".,;:!?¿¡"


def tokenize(text: str) -> list:
    """Whitespace split with punctuation peeled into its own tokens."""
    out = []
    for raw in text.split():
        m = re.match(rf"^([{_PUNCT}]*)(.*?)([{_PUNCT}]*)$", raw)
        lead, core, trail = m.groups()
        out.extend(lead)
        if core:
            out.append(core)
        out.extend(trail)
    return out


# -- analysis ----------------------------------------------------------

@dataclass
class TransferRep:
    """Ordered list of instantiated signs; constants appear after
    skolemization and are shared exactly where variables were."""
    signs: list
    skolemized: bool = False

    def summary(self):
        return "  ".join(format_sem(s.fs) for s in self.signs)


class ParseFailure(Exception):
    def __init__(self, message, diagnostic=""):
        super().__init__(message)
        self.diagnostic = diagnostic


def parse(tokens, grammar: Grammar, lexicon: Lexicon):
    """All complete analyses of the token list.

    Returns (analyses, diagnostic); an empty list comes with the
    longest-span diagnostic or the unknown words.
    """
    comb = Combiner(grammar)
    n = len(tokens)
    if n == 0:
        return [], "empty input"
    seeds = []
    covered = [False] * n
    maxlen = lexicon.max_form_len()
    for i in range(n):
        for L in range(1, min(maxlen, n - i) + 1):
            window = tuple(tokens[i:i + L])
            for inst in lexicon.lookup(window):
                seeds.append(Edge(i, i + L, comb.intern(edge_fs_for(inst.fs)),
                                  (inst.sign,)))
                for k in range(i, i + L):
                    covered[k] = True
    unknown = [tokens[i] for i in range(n) if not covered[i]]
    if unknown:
        return [], f"unknown {lexicon.lang} words: {', '.join(sorted(set(unknown)))}"

    cells = span_chart(n, seeds, comb)
    analyses, seen = [], set()
    for edge in cells.get((0, n), []):
        refined = unify(grammar.h, grammar.root_pattern, edge.fs)
        if refined is None:
            continue
        key = canonical(refined)
        if key in seen:
            continue
        seen.add(key)
        insts = [SignInst(edge.signs[k], refined.feats[f"L{k + 1}"])
                 for k in range(len(edge.signs))]
        analyses.append(TransferRep(insts, skolemized=False))
    if analyses:
        return analyses, None
    best = max(cells, key=lambda ij: (ij[1] - ij[0], -ij[0]), default=None)
    if best is None:
        return [], "no edges built"
    cats = sorted({e.fs.feats["CAT"].feats.get("CAT", FS("top")).type
                   for e in cells[best]})
    return [], (f"no parse spanning 0..{n}; longest span {best[0]}..{best[1]} "
                f"with categories {', '.join(cats)}")


# -- skolemization -----------------------------------------------------

def skolemize(rep: TransferRep) -> TransferRep:
    """Replace variable nodes by integers in first-occurrence order.

    Token-shared variables get the same integer; distinct variables get
    distinct integers; counting is left to right through the sign list,
    semantics first, then the syntactic index slots.
    """
    if rep.skolemized:
        raise ValueError("representation already skolemized")
    mapping: dict = {}

    def visit(node):
        if node is not None and node.type == "index" and node.payload is None:
            if id(node) not in mapping:
                mapping[id(node)] = FS("index", payload=len(mapping) + 1)

    for inst in rep.signs:
        for node in sem_arg_nodes(inst.fs):
            visit(node)
        syn = inst.fs.feats.get("SYN")
        if syn is not None:
            visit(syn.feats.get("INDEX"))
            for slot in ("SUBJ", "COMP"):
                sub = syn.feats.get(slot)
                if sub is not None:
                    visit(sub.feats.get("INDEX"))

    memo: dict = {}
    out = [SignInst(inst.sign, subst_nodes(inst.fs, mapping, memo))
           for inst in rep.signs]
    return TransferRep(out, skolemized=True)
