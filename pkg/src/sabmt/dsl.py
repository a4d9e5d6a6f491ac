"""The lingware description language and its loader.

One line-oriented format covers every section kind: `type` lines build
the hierarchy, `sign` blocks the lexicons, `monorule` blocks the
monolingual lexical rules, `rule`/`root` the grammars, `bilex` lines the
bilingual lexicon and `birule` blocks the bilingual lexical rules.
Comments start with `#`; files are UTF-8 with accented characters
written literally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .tfs import FS, HierarchyError, TypeHierarchy, copy_fs, subst_nodes
from .signs import (CELLS, Lexicon, LingwareError, MonoRule, Sign, SignInst,
                    build_sem, constrain, sem_arg_nodes)
from .chart import Grammar, GrammarRule
from .transfer import BilexEntry, BiLexicalRule, MatchItem, OutItem, build_entry

_REF_RE = re.compile(r"^(\+?)([\w'áéíóúüñÁÉÍÓÚÜÑ-]+)"
                     r"(?:>([\w-]+))?"
                     r"(?:\(([^)]*)\))?"
                     r"(?:\[([^\]]*)\])?"
                     r"(/bare)?$")

# structural types every lingware hierarchy gets for free
_PLUMBING_PARENTS = {
    "string": ["top"], "index": ["top"],
    "sems": ["top"], "sems1": ["sems"], "sems2": ["sems"],
    "pred": ["top"],
    "args": ["top"], **{f"args{i}": ["args"] for i in range(7)},
    "bilex": ["top"],
    "slist": ["top"], **{f"slist{i}": ["slist"] for i in range(5)},
    "edge": ["top"], "comb": ["top"],
}


def _plumbing_approp():
    approp = {
        "sems1": {"P1": "pred"},
        "sems2": {"P1": "pred", "P2": "pred"},
        "pred": {"NAME": "string", "ARGS": "args"},
        "bilex": {"SL": "slist", "TL": "slist", "SLC": "slist", "TLC": "slist"},
        "edge": {"CAT": "syn", **{f"L{i}": "sign" for i in range(1, 17)}},
        "comb": {"M": "edge", "D1": "edge", "D2": "edge"},
    }
    for i in range(7):
        approp[f"args{i}"] = {f"A{j}": "index" for j in range(1, i + 1)}
    for i in range(5):
        approp[f"slist{i}"] = {f"S{j}": "sign" for j in range(1, i + 1)}
    return approp


class DslError(LingwareError):
    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")


def _strip_comment(line):
    out, quote = [], False
    for ch in line:
        if ch == '"':
            quote = not quote
        if ch == "#" and not quote:
            break
        out.append(ch)
    return "".join(out).rstrip()


@dataclass
class _Line:
    where: str
    words: list
    text: str


def _lines(text, name):
    for i, raw in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(raw)
        if not stripped.strip():
            continue
        yield _Line(f"{name}:{i}", stripped.split(), stripped.strip())


# -- hierarchy ----------------------------------------------------------

def parse_type_lines(lines):
    """`type NAME [< PARENTS] [feat:vtype ...]` declarations."""
    parents, approp = {}, {}
    for ln in lines:
        words = ln.words
        if words[0] != "type":
            continue
        if len(words) < 2:
            raise DslError(ln.where, "type line needs a name")
        name = words[1]
        ps, feats, rest = [], {}, words[2:]
        if rest and rest[0] == "<":
            rest = rest[1:]
            while rest and ":" not in rest[0]:
                ps.append(rest[0])
                rest = rest[1:]
        for item in rest:
            if ":" not in item:
                raise DslError(ln.where, f"expected feat:type, got {item!r}")
            f, v = item.split(":", 1)
            feats[f.upper()] = v
        if name in parents:
            raise DslError(ln.where, f"type {name!r} declared twice")
        parents[name] = ps
        if feats:
            approp[name] = feats
    return parents, approp


def compile_hierarchy(text: str, name: str = "<hierarchy>",
                      plumbing: bool = False) -> TypeHierarchy:
    """Compile a textual hierarchy declaration.

    Raises HierarchyError (cycles, non-unique greatest lower bounds,
    appropriateness conflicts) with the offending types named.
    """
    parents, approp = parse_type_lines(list(_lines(text, name)))
    if plumbing:
        for t, ps in _PLUMBING_PARENTS.items():
            parents.setdefault(t, ps)
        for t, feats in _plumbing_approp().items():
            merged = dict(feats)
            merged.update(approp.get(t, {}))
            approp[t] = merged
    return TypeHierarchy(parents, approp)


# -- small shared parsing helpers ----------------------------------------

def _path_of(dotted):
    return tuple(p.upper() for p in dotted.split("."))


def _constraint_at(h, root_type, path):
    t = root_type
    for f in path:
        t = h.constraint(t, f)
        if t is None:
            return None
    return t


def _resolve_value(h, where, root_type, path, tok):
    if tok.startswith('"') and tok.endswith('"'):
        return ("str", tok[1:-1])
    if tok in h:
        return tok
    c = _constraint_at(h, root_type, path)
    if c == "index":
        return ("var", tok)
    raise DslError(where, f"unknown type {tok!r} at {'.'.join(path).lower()} "
                          f"(variables are only allowed at index positions)")


def _parse_assigns(h, where, root_type, text):
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        if "=" not in chunk:
            raise DslError(where, f"expected path=value in {chunk!r}")
        p, v = (x.strip() for x in chunk.split("=", 1))
        path = _path_of(p)
        out.append((path, _resolve_value(h, where, root_type, path, v)))
    return out


def _apply_assign(h, where, fs, path, value, registry):
    if isinstance(value, tuple) and value[0] == "var":
        node = registry.get(value[1])
        target = fs
        for f in path[:-1]:
            nxt = target.feats.get(f)
            if nxt is None:
                c = h.constraint(target.type, f)
                if c is None:
                    raise DslError(where, f"feature {f} not appropriate "
                                          f"for {target.type!r}")
                nxt = FS(c)
                target.feats[f] = nxt
            target = nxt
        at = target.feats.get(path[-1])
        if node is None:
            registry[value[1]] = at if at is not None else FS("index")
            node = registry[value[1]]
        target.feats[path[-1]] = node
        return
    if isinstance(value, tuple) and value[0] == "str":
        if not constrain(h, fs, path, "string"):
            raise DslError(where, f"cannot place a string at {path}")
        node = fs
        for f in path:
            node = node.feats[f]
        node.payload = value[1]
        return
    if not constrain(h, fs, path, value):
        raise DslError(where, f"type {value!r} clashes at {'.'.join(path).lower()}")


def _parse_sem_expr(h, where, text, registry):
    preds = []
    for part in (p.strip() for p in text.split("&")):
        m = re.match(r"^([\w'-]+)\(([^)]*)\)$", part)
        if not m:
            raise DslError(where, f"bad semantics {part!r}")
        name, argtext = m.groups()
        args = []
        for a in filter(None, (x.strip() for x in argtext.split(","))):
            args.append(registry.setdefault(a, FS("index")))
        preds.append((name, args))
    return build_sem(h, preds)


def _parse_ref(where, text):
    m = _REF_RE.match(text)
    if not m:
        raise DslError(where, f"bad sign reference {text!r}")
    plus, name, mono, args, pins, bare = m.groups()
    args = [a.strip() for a in args.split(",") if a.strip()] if args else []
    return plus == "+", name, mono, args, pins or "", bare is not None


# -- lingware documents ---------------------------------------------------

@dataclass
class PairLingware:
    sl: str
    tl: str
    entries: list = field(default_factory=list)
    rules: list = field(default_factory=list)


@dataclass
class Lingware:
    h: TypeHierarchy
    lexicons: dict
    grammars: dict
    monorules: dict
    pairs: dict

    def oriented(self, source: str, target: str):
        """(entries, rules) viewed with `source` on the source side."""
        if (source, target) in self.pairs:
            p = self.pairs[(source, target)]
            return list(p.entries), list(p.rules)
        if (target, source) in self.pairs:
            p = self.pairs[(target, source)]
            return ([e.flipped() for e in p.entries],
                    [r.flipped() for r in p.rules])
        raise LingwareError(f"no bilexicon for {source} -> {target}")


class _Loader:
    def __init__(self):
        self.h = None
        self.lexicons: dict = {}
        self.grammars: dict = {}
        self.roots: dict = {}
        self.rules_by_lang: dict = {}
        self.monorules: dict = {}
        self.pairs: dict = {}
        self.expands: list = []

    # blocks -------------------------------------------------------

    def sign_block(self, lang, header, body):
        if len(header.words) != 3:
            raise DslError(header.where, "usage: sign LEMMA TYPE")
        _, lemma, stype = header.words
        if stype not in self.h:
            raise DslError(header.where, f"unknown sign type {stype!r}")
        fs = FS(stype)
        fs.feats["ORTH"] = FS("string", payload=lemma)
        fs.feats["LANG"] = FS(lang)
        registry: dict = {}
        morph: dict = {}
        sem_line = None
        for ln in body:
            if ln.words[0] == "form":
                m = re.match(r'^form\s+(\S+)\s+"([^"]*)"$', ln.text)
                if not m:
                    raise DslError(ln.where, 'usage: form CELL "SURFACE"')
                morph[m.group(1)] = m.group(2)
            elif ln.words[0] == "sem":
                sem_line = ln
            elif "=" in ln.text:
                p, v = (x.strip() for x in ln.text.split("=", 1))
                path = _path_of(p)
                val = _resolve_value(self.h, ln.where, stype, path, v)
                _apply_assign(self.h, ln.where, fs, path, val, registry)
            else:
                raise DslError(ln.where, f"unexpected line in sign block: {ln.text!r}")
        if sem_line is not None:
            text = sem_line.text.split("=", 1)[1].strip()
            fs.feats["SEM"] = _parse_sem_expr(self.h, sem_line.where, text, registry)
        lex = self.lexicons.setdefault(lang, Lexicon(lang, self.h))
        lex.add(Sign(lemma, stype, lang, fs, morph))

    def monorule_block(self, header, body):
        name = header.words[1]
        match_paths, sets = [], []
        sem_match = sem_out = newlemma = newtype = None
        for ln in body:
            w = ln.words
            if w[0] == "match" and w[1] == "sem":
                text = ln.text.split("=", 1)[1].strip()
                m = re.match(r"^([\w'-]+)\(([^)]*)\)$", text)
                if not m:
                    raise DslError(ln.where, f"bad sem match {text!r}")
                sem_match = (m.group(1),
                             [a.strip() for a in m.group(2).split(",") if a.strip()])
            elif w[0] == "match":
                p, v = (x.strip() for x in ln.text[len("match"):].split("=", 1))
                path = _path_of(p)
                val = _resolve_value(self.h, ln.where, "sign", path, v)
                if isinstance(val, tuple) and val[0] == "var":
                    raise DslError(ln.where, "variables are not allowed in match paths")
                match_paths.append((path, val))
            elif w[0] == "set":
                p, v = (x.strip() for x in ln.text[len("set"):].split("=", 1))
                path = _path_of(p)
                sets.append((path, _resolve_value(self.h, ln.where, "sign", path, v)))
            elif w[0] == "sem":
                text = ln.text.split("=", 1)[1].strip()
                m = re.match(r"^([\w'-]+|NEW)\(([^)]*)\)$", text)
                if not m:
                    raise DslError(ln.where, f"bad sem rewrite {text!r}")
                sem_out = (m.group(1),
                           [a.strip() for a in m.group(2).split(",") if a.strip()])
            elif w[0] == "newlemma":
                if w[1] == "cell":
                    newlemma = ("cell", w[2])
                elif w[1] == "cells":
                    newlemma = ("cells", w[2])
                else:
                    raise DslError(ln.where, "usage: newlemma cell NAME | cells PREFIX")
            elif w[0] == "newtype":
                if len(w) != 2 or w[1] not in self.h:
                    raise DslError(ln.where, "usage: newtype SIGNTYPE")
                newtype = w[1]
            else:
                raise DslError(ln.where, f"unexpected line in monorule: {ln.text!r}")
        self.monorules[name] = MonoRule(name, tuple(match_paths), sem_match,
                                        sem_out, tuple(sets), newlemma, newtype)

    def rule_line(self, lang, ln):
        text = ln.text[len("rule"):].strip()
        if "->" not in text:
            raise DslError(ln.where, "usage: rule MOTHER -> D1 [D2]")
        mtext, dtext = (x.strip() for x in text.split("->", 1))
        registry: dict = {}

        def item(t):
            m = re.match(r"^([\w-]+)(?:\[([^\]]*)\])?$", t.strip())
            if not m:
                raise DslError(ln.where, f"bad rule item {t!r}")
            cat, assigns = m.groups()
            if cat not in self.h:
                raise DslError(ln.where, f"unknown category {cat!r}")
            fs = FS("syn", {"CAT": FS(cat)})
            for path, val in _parse_assigns(self.h, ln.where, "syn", assigns or ""):
                _apply_assign(self.h, ln.where, fs, path, val, registry)
            return fs

        daughters = [item(t) for t in re.findall(r"[\w-]+(?:\[[^\]]*\])?", dtext)]
        rule = GrammarRule(f"{lang}:{mtext.split('[')[0]}", item(mtext), daughters)
        self.rules_by_lang.setdefault(lang, []).append(rule)

    def bilex_line(self, pair, ln):
        text = ln.text[len("bilex"):].strip()
        if ":" not in text:
            raise DslError(ln.where, "usage: bilex NAME: REFS [| CTX] <-> REFS [| CTX]")
        name, rest = (x.strip() for x in text.split(":", 1))
        if "<->" not in rest:
            raise DslError(ln.where, "bilex line needs <->")
        sl_text, tl_text = (x.strip() for x in rest.split("<->", 1))
        registry: dict = {}
        joins: list = []

        def side(txt, lang):
            main, ctx = (txt.split("|", 1) + [""])[:2] if "|" in txt else (txt, "")
            built = [[], []]
            for k, part in enumerate((main, ctx)):
                for rtext in part.split():
                    plus, lemma, mono, args, pins, bare = _parse_ref(ln.where, rtext)
                    if mono or plus or bare:
                        raise DslError(ln.where, f"bad entry reference {rtext!r}")
                    built[k].append(self._ref_sign(ln.where, lang, lemma, args,
                                                   pins, registry, joins))
            return built

        sl, slc = side(sl_text, pair.sl)
        tl, tlc = side(tl_text, pair.tl)
        entry = build_entry(name, "static", sl, tl, slc, tlc, registry)
        entry.joins = joins
        pair.entries.append(entry)

    def _ref_sign(self, where, lang, lemma, args, pins, registry, joins):
        lex = self.lexicons.get(lang)
        if lex is None:
            raise DslError(where, f"no {lang} lexicon loaded yet")
        sign = lex.find(lemma)
        fs = copy_fs(sign.fs)
        nodes = sem_arg_nodes(fs)
        if len(nodes) != len(args):
            raise DslError(where, f"{lemma!r} takes {len(nodes)} argument(s), "
                                  f"reference has {len(args)}")
        sub = {}
        for tok, node in zip(args, nodes):
            if re.fullmatch(r"\d+", tok):
                node.payload = int(tok)
            elif "+" in tok:
                parts = [p.strip() for p in tok.split("+")]
                joins.append((tok, parts))
                registry[tok] = node
                for p in parts:
                    registry.setdefault(p, FS("index"))
            elif tok in registry:
                if registry[tok] is not node:
                    sub[id(node)] = registry[tok]
            else:
                registry[tok] = node
        if sub:
            fs = subst_nodes(fs, sub)
        for path, val in _parse_assigns(self.h, where, sign.stype, pins):
            _apply_assign(self.h, where, fs, path, val, registry)
        return (sign, fs)

    def birule_block(self, pair, header, body):
        name = header.words[1]
        match = {"sl": [], "tl": []}
        out = {"sl": [], "tl": []}
        for ln in body:
            w = ln.words
            if w[0] == "match" and len(w) >= 3 and w[1] in ("sl", "tl"):
                rest = ln.text.split(None, 2)[2]
                plus, var, mono, args, pins, bare = _parse_ref(ln.where,
                                                               rest.replace(" ", ""))
                if plus or mono or bare:
                    raise DslError(ln.where, f"bad match item {rest!r}")
                pins = _parse_assigns(self.h, ln.where, "sign", pins)
                match[w[1]].append(MatchItem(var, tuple(args), tuple(pins)))
            elif w[0] in ("out", "ctx") and len(w) >= 3 and w[1] in ("sl", "tl"):
                rest = ln.text.split(None, 2)[2]
                plus, ref, mono, args, pins, bare = _parse_ref(ln.where,
                                                               rest.replace(" ", ""))
                pins = _parse_assigns(self.h, ln.where, "sign", pins)
                if plus and mono:
                    raise DslError(ln.where, f"bad output item {rest!r}")
                item = OutItem("add" if plus else "xform", ref,
                               mono, tuple(args), tuple(pins),
                               ctx=(w[0] == "ctx"), bare=bare)
                if item.kind == "xform" and item.mono is None:
                    raise DslError(ln.where, "transform items need VAR>RULE(...)")
                out[w[1]].append(item)
            else:
                raise DslError(ln.where, f"unexpected line in birule: {ln.text!r}")
        pair.rules.append(BiLexicalRule(name, match["sl"], match["tl"],
                                        out["sl"], out["tl"]))


_BLOCK_HEADS = {"sign", "monorule", "birule"}
_TOP = {"type", "language", "pair", "root", "rule", "expand", "bilex"} | _BLOCK_HEADS


def load_lingware(directory) -> Lingware:
    """Load every *.lw file of a lingware directory."""
    directory = Path(directory)
    files = sorted(directory.glob("*.lw"))
    if not files:
        raise LingwareError(f"no lingware (*.lw) files in {directory}")
    parsed = [(f.name, list(_lines(f.read_text(encoding="utf-8"), f.name)))
              for f in files]

    all_lines = [ln for _, lns in parsed for ln in lns]
    loader = _Loader()
    parents, approp = parse_type_lines(all_lines)
    for t, ps in _PLUMBING_PARENTS.items():
        parents.setdefault(t, ps)
    for t, feats in _plumbing_approp().items():
        merged = dict(feats)
        merged.update(approp.get(t, {}))
        approp[t] = merged
    for needed in ("sign", "syn"):
        if needed not in parents:
            raise LingwareError(f"lingware hierarchy must declare type {needed!r}")
    loader.h = TypeHierarchy(parents, approp)

    for fname, lns in parsed:
        language = None
        pair = None
        i = 0
        while i < len(lns):
            ln = lns[i]
            head = ln.words[0]
            if head == "type":
                i += 1
                continue
            if head == "language":
                language = ln.words[1]
                loader.lexicons.setdefault(language, Lexicon(language, loader.h))
                i += 1
                continue
            if head == "pair":
                key = (ln.words[1], ln.words[2])
                pair = loader.pairs.setdefault(key, PairLingware(*key))
                i += 1
                continue
            if head == "root":
                if language is None:
                    raise DslError(ln.where, "root requires a language directive")
                loader.roots[language] = ln.words[1]
                i += 1
                continue
            if head == "rule":
                if language is None:
                    raise DslError(ln.where, "rule requires a language directive")
                loader.rule_line(language, ln)
                i += 1
                continue
            if head == "expand":
                if language is None:
                    raise DslError(ln.where, "expand requires a language directive")
                loader.expands.append((language, ln.words[1], ln.where))
                i += 1
                continue
            if head == "bilex":
                if pair is None:
                    raise DslError(ln.where, "bilex requires a pair directive")
                loader.bilex_line(pair, ln)
                i += 1
                continue
            if head in _BLOCK_HEADS:
                body = []
                j = i + 1
                while j < len(lns) and lns[j].words[0] not in _TOP:
                    body.append(lns[j])
                    j += 1
                if head == "sign":
                    if language is None:
                        raise DslError(ln.where, "sign requires a language directive")
                    loader.sign_block(language, ln, body)
                elif head == "monorule":
                    loader.monorule_block(ln, body)
                else:
                    if pair is None:
                        raise DslError(ln.where, "birule requires a pair directive")
                    loader.birule_block(pair, ln, body)
                i = j
                continue
            raise DslError(ln.where, f"unrecognized line: {ln.text!r}")

    for lang, rulename, where in loader.expands:
        rule = loader.monorules.get(rulename)
        if rule is None:
            raise DslError(where, f"expand names unknown rule {rulename!r}")
        loader.lexicons[lang].expand(rule)

    grammars = {}
    for lang, rules in loader.rules_by_lang.items():
        grammars[lang] = Grammar(lang, loader.h, rules,
                                 root=loader.roots.get(lang, "s"))
    return Lingware(loader.h, loader.lexicons, grammars,
                    loader.monorules, loader.pairs)


# -- bag files -------------------------------------------------------------

def parse_bag(text: str, lexicon: Lexicon, h: TypeHierarchy, name="<bag>"):
    """A bag file: one sign reference per line, constants as integers."""
    out = []
    for ln in _lines(text, name):
        plus, lemma, mono, args, pins, bare = _parse_ref(ln.where,
                                                         ln.text.replace(" ", ""))
        if plus or mono or bare:
            raise DslError(ln.where, f"bad bag line {ln.text!r}")
        sign = lexicon.find(lemma)
        fs = copy_fs(sign.fs)
        nodes = sem_arg_nodes(fs)
        if len(nodes) != len(args):
            raise DslError(ln.where, f"{lemma!r} takes {len(nodes)} argument(s)")
        for tok, node in zip(args, nodes):
            if not re.fullmatch(r"\d+", tok):
                raise DslError(ln.where, "bag arguments must be integer constants")
            node.payload = int(tok)
        registry: dict = {}
        for path, val in _parse_assigns(h, ln.where, sign.stype, pins):
            _apply_assign(h, ln.where, fs, path, val, registry)
        out.append(SignInst(sign, fs))
    return out
