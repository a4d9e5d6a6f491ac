"""Lexical signs, lexicons, paradigm-table morphology and lexical rules.

A sign couples a lemma with one feature structure holding orthography,
syntax, lexical semantics (qualia) and a flat predicate list whose
argument nodes double as the variables shared with the syntax (subject,
complement and own index slots).  Morphology is an explicit paradigm
table per lemma; nothing here ever invents a surface string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .tfs import FS, TypeHierarchy, copy_fs, fs_set, render, unify


class LingwareError(Exception):
    """Bad lexicon source or an impossible lexical operation."""


class MorphError(LingwareError):
    """A paradigm cell needed for synthesis is missing."""


# Inflection cells and the feature bundles they encode.  Cells not
# listed here (e.g. "adj", "tree_sg") are derivational: lexical rules
# consult them, lookup and synthesis ignore them.
CELLS = {
    "base": (),
    "sg": ((("SYN", "AGR"), "agr3sg"),),
    "pl": ((("SYN", "AGR"), "agr3pl"),),
    "msg": ((("SYN", "AGR"), "agr3sg"), (("SYN", "AGR", "GEN"), "m")),
    "fsg": ((("SYN", "AGR"), "agr3sg"), (("SYN", "AGR", "GEN"), "f")),
    "mpl": ((("SYN", "AGR"), "agr3pl"), (("SYN", "AGR", "GEN"), "m")),
    "fpl": ((("SYN", "AGR"), "agr3pl"), (("SYN", "AGR", "GEN"), "f")),
    "pres3sg": ((("SYN", "VFORM"), "fin"), (("SYN", "TENSE"), "pres"),
                (("SYN", "AGR"), "agr3sg")),
    "pres3pl": ((("SYN", "VFORM"), "fin"), (("SYN", "TENSE"), "pres"),
                (("SYN", "AGR"), "agr3pl")),
    "past3sg": ((("SYN", "VFORM"), "fin"), (("SYN", "TENSE"), "past"),
                (("SYN", "AGR"), "agr3sg")),
    "past3pl": ((("SYN", "VFORM"), "fin"), (("SYN", "TENSE"), "past"),
                (("SYN", "AGR"), "agr3pl")),
    "inf": ((("SYN", "VFORM"), "inf"),),
    "ger": ((("SYN", "VFORM"), "ger"),),
}


@dataclass(eq=False)
class Sign:
    """A lexicon entry: lemma, typed structure and paradigm table."""
    lemma: str
    stype: str
    lang: str
    fs: FS
    morph: dict = field(default_factory=dict)
    derived_by: Optional[str] = None

    def instance(self, h: TypeHierarchy, cell: Optional[str] = None) -> Optional["SignInst"]:
        """Fresh copy, optionally constrained by an inflection cell.

        Returns None when the cell's features clash with the sign.
        """
        fs = copy_fs(self.fs)
        if cell is not None:
            for path, tname in CELLS[cell]:
                if not constrain(h, fs, path, tname):
                    return None
        return SignInst(self, fs)


@dataclass(eq=False)
class SignInst:
    """One use of a sign, with its own variable/constant nodes."""
    sign: Sign
    fs: FS

    @property
    def lemma(self):
        return self.sign.lemma

    @property
    def lang(self):
        return self.sign.lang

    def preds(self):
        return sem_preds(self.fs)


def constrain(h: TypeHierarchy, fs: FS, path, tname: str) -> bool:
    """Narrow the node at `path` to glb with `tname`; False on clash.

    Destructive: only for privately owned copies.
    """
    node = fs
    for f in path[:-1]:
        nxt = node.feats.get(f)
        if nxt is None:
            c = h.constraint(node.type, f)
            if c is None:
                return False
            nxt = FS(c)
            node.feats[f] = nxt
        node = nxt
    leaf = node.feats.get(path[-1])
    if leaf is None:
        c = h.constraint(node.type, path[-1])
        if c is None:
            return False
        g = h.glb(c, tname)
        if g is None:
            return False
        node.feats[path[-1]] = FS(g)
        return True
    g = h.glb(leaf.type, tname)
    if g is None:
        return False
    leaf.type = g
    return True


def build_sem(h: TypeHierarchy, preds) -> FS:
    """SEM subtree for a list of (predicate-name, [argument nodes])."""
    n = len(preds)
    if n == 0 or n > 2:
        raise LingwareError(f"unsupported semantics length {n}")
    feats = {}
    for i, (name, args) in enumerate(preds):
        pfeats = {"NAME": FS("string", payload=name)}
        afeats = {f"A{j + 1}": node for j, node in enumerate(args)}
        pfeats["ARGS"] = FS(f"args{len(args)}", afeats)
        feats[f"P{i + 1}"] = FS("pred", pfeats)
    return FS(f"sems{n}", feats)


def sem_preds(fs: FS):
    """[(name, [arg nodes])] read back from a sign structure."""
    sem = fs.feats.get("SEM")
    if sem is None:
        return []
    out = []
    for i in (1, 2):
        p = sem.feats.get(f"P{i}")
        if p is None:
            break
        name = p.feats["NAME"].payload
        args = p.feats.get("ARGS", FS("args0"))
        nodes = [args.feats[f"A{j}"] for j in range(1, 9) if f"A{j}" in args.feats]
        out.append((name, nodes))
    return out


def sem_arg_nodes(fs: FS):
    nodes = []
    for _, args in sem_preds(fs):
        nodes.extend(args)
    return nodes


def format_sem(fs: FS, names: Optional[dict] = None):
    """Compact functional rendering: love1(#2,#1,#3)."""
    bits = []
    for name, args in sem_preds(fs):
        rendered = []
        for a in args:
            if a.payload is None:
                if names is not None:
                    rendered.append(names.setdefault(id(a), f"x{len(names) + 1}"))
                else:
                    rendered.append("_")
            elif isinstance(a.payload, frozenset):
                rendered.append("|".join(str(c) for c in sorted(a.payload)))
            else:
                rendered.append(str(a.payload))
        bits.append(f"{name}({','.join(rendered)})")
    return " & ".join(bits) if bits else "(no semantics)"


def render_sign(inst: SignInst, shrink=((("QUALIA",),))) -> str:
    names: dict = {}
    head = f"{inst.lemma}/{inst.lang}: {format_sem(inst.fs, names)}"
    return head + "\n" + render(inst.fs, shrink=shrink)


# -- morphology --------------------------------------------------------

def synthesize(sign: Sign, cell: str) -> str:
    """Surface form for a paradigm cell; underscores become spaces."""
    form = sign.morph.get(cell)
    if form is None:
        raise MorphError(f"sign {sign.lemma!r} ({sign.lang}) has no form for cell {cell!r}")
    return form.replace("_", " ")


def cell_for(h: TypeHierarchy, fs: FS) -> str:
    """Pick the paradigm cell an instantiated sign must realize."""
    syn = fs.feats.get("SYN", FS("syn"))
    cat = syn.feats.get("CAT")
    cat = cat.type if cat is not None else None
    agr = syn.feats.get("AGR")
    num = None
    if agr is not None and agr.type in ("agr3sg", "agr3pl"):
        num = "sg" if agr.type == "agr3sg" else "pl"
    if cat == "v":
        vform = syn.feats.get("VFORM")
        vform = vform.type if vform is not None else None
        if vform == "ger":
            return "ger"
        if vform == "inf":
            return "inf"
        tense = syn.feats.get("TENSE")
        if tense is None or tense.type not in ("pres", "past"):
            raise MorphError(f"verb has uninstantiated tense: {format_sem(fs)}")
        if num is None:
            raise MorphError(f"verb has uninstantiated agreement: {format_sem(fs)}")
        return f"{tense.type}3{num}"
    if cat == "det":
        gen = agr.feats.get("GEN") if agr is not None else None
        if num is not None and gen is not None and gen.type in ("m", "f"):
            return f"{gen.type}{num}"
        return "base"
    if cat in ("n", "nmod") and num is not None:
        return num
    return "base"


# -- lexicons ----------------------------------------------------------

class Lexicon:
    """All signs of one language plus a surface-form index."""

    def __init__(self, lang: str, h: TypeHierarchy):
        self.lang = lang
        self.h = h
        self.signs: list[Sign] = []
        self.by_lemma: dict[str, list[Sign]] = {}
        self.forms: dict[tuple, list] = {}

    def add(self, sign: Sign):
        self.signs.append(sign)
        self.by_lemma.setdefault(sign.lemma, []).append(sign)
        for cell, form in sign.morph.items():
            if cell not in CELLS:
                continue  # derivational cell
            key = tuple(form.split("_"))
            self.forms.setdefault(key, []).append((sign, cell))

    def expand(self, rule: "MonoRule"):
        """Apply a lexical rule across the lexicon, adding its outputs."""
        derived = []
        for sign in list(self.signs):
            derived.extend(apply_mono_rule(self.h, rule, sign))
        for d in derived:
            self.add(d)
        return derived

    def find(self, lemma: str) -> Sign:
        signs = self.by_lemma.get(lemma)
        if not signs:
            raise LingwareError(f"no sign {lemma!r} in {self.lang} lexicon")
        return signs[0]

    def lookup(self, words) -> list:
        """Sign instances whose surface form equals the word sequence.

        Accepts one word or a tuple; tries an exact then a lowercased
        match.  Empty result means the form is unknown.
        """
        if isinstance(words, str):
            words = (words,)
        words = tuple(words)
        hits = self.forms.get(words)
        if hits is None:
            hits = self.forms.get(tuple(w.lower() for w in words), [])
        out = []
        for sign, cell in hits:
            inst = sign.instance(self.h, cell)
            if inst is not None:
                out.append(inst)
        return out

    def max_form_len(self):
        return max((len(k) for k in self.forms), default=1)


def lookup(word, lexicon: Lexicon):
    """Module-level convenience wrapper with a diagnostic on misses."""
    found = lexicon.lookup(word)
    if not found:
        return [], f"unknown {lexicon.lang} word: {word!r}"
    return found, None


# -- monolingual lexical rules ------------------------------------------

@dataclass
class MonoRule:
    """A lexical rule: input constraints plus rewrites of the output.

    `match_paths` are (path, typename-or-string) constraints; `sem_match`
    fixes the input arity; `sem_out`, when present, replaces the
    semantics (predicate "NEW" means the derived lemma's predicate);
    `sets` write types, strings or (shared) variable nodes into the
    output; `newlemma` draws a derived lemma from the paradigm table.
    """
    name: str
    match_paths: tuple = ()
    sem_match: Optional[tuple] = None     # (predvar, [argnames])
    sem_out: Optional[tuple] = None       # (predref, [argnames])
    sets: tuple = ()                      # (path, value) value: type|("var",n)|("str",s)
    newlemma: Optional[tuple] = None      # ("cell", name) | ("cells", prefix)
    newtype: Optional[str] = None         # replacement root sign type

    def pattern(self, h: TypeHierarchy) -> FS:
        fs = FS("sign")
        for path, val in self.match_paths:
            node = FS("string", payload=val[1]) if isinstance(val, tuple) else FS(val)
            fs_set(h, fs, path, node)
        if self.sem_match is not None:
            _, argnames = self.sem_match
            args = [FS("index") for _ in argnames]
            fs.feats["SEM"] = build_sem(h, [("*", args)])
            fs.feats["SEM"].feats["P1"].feats.pop("NAME")  # wildcard predicate
        return fs


def apply_mono_rule(h: TypeHierarchy, rule: MonoRule, sign: Sign) -> list[Sign]:
    """Derive signs from `sign`; empty when the rule does not apply.

    The output carries fresh variable nodes throughout; callers that
    need to link them (bilingual rules) read them back positionally
    from the output's semantics and syntax slots.
    """
    if unify(h, rule.pattern(h), sign.fs) is None:
        return []

    lemma, morph = sign.lemma, sign.morph
    if rule.newlemma is not None:
        kind, arg = rule.newlemma
        if kind == "cell":
            form = sign.morph.get(arg)
            if form is None:
                return []
            lemma, morph = form, {"base": form}
        else:
            cells = {k[len(arg):]: v for k, v in sign.morph.items() if k.startswith(arg)}
            if not cells:
                return []
            lemma = cells.get("sg") or cells.get("base") or sorted(cells.values())[0]
            morph = cells

    out = copy_fs(sign.fs)
    out.feats["ORTH"] = FS("string", payload=lemma)
    stype = sign.stype
    if rule.newtype is not None:
        out.type = rule.newtype
        stype = rule.newtype
    env: dict = {}

    if rule.sem_out is not None:
        predref, argnames = rule.sem_out
        if predref == "NEW":
            pname = lemma + "1"
        elif rule.sem_match is not None and predref == rule.sem_match[0]:
            pname = sem_preds(sign.fs)[0][0]
        else:
            pname = predref
        args = [env.setdefault(a, FS("index")) for a in argnames]
        out.feats["SEM"] = build_sem(h, [(pname, args)])

    # `set` rewrites: the written node replaces whatever was there
    for path, val in rule.sets:
        target = out
        for f in path[:-1]:
            nxt = target.feats.get(f)
            if nxt is None:
                c = h.constraint(target.type, f)
                nxt = FS(c if c is not None else "top")
                target.feats[f] = nxt
            target = nxt
        if isinstance(val, tuple) and val[0] == "var":
            target.feats[path[-1]] = env.setdefault(val[1], FS("index"))
        elif isinstance(val, tuple) and val[0] == "str":
            target.feats[path[-1]] = FS("string", payload=val[1])
        else:
            c = h.constraint(target.type, path[-1])
            g = h.glb(c, val) if c is not None else None
            if g is None:
                return []
            target.feats[path[-1]] = FS(g)

    return [Sign(lemma, stype, sign.lang, out, morph, derived_by=rule.name)]
