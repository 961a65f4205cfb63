"""Instance documents: a versioned JSON format with named, cross-referenced sections.

Floats are written as ``repr`` strings so every double reads back unchanged.
Point ids may be strings, integers or (nested) pairs, the latter written as
JSON arrays.  Readers collect every problem with a ``$.section.name.field``
locator instead of stopping at the first one.

Sections::

    spaces          {name: {point_ids, metric, coords?, metric_kind?} | {product: [a, b]}}
    sequences       {name: {space, entries, limit}}
    kernels         {name: {kind: "param", s1, s2, param_space, table: [{param, mass}]}
                     | {kind: "family", s1, s2, joints, limit}
                     | {kind: "hat", kernel, measures, limit, s4_sequence?}}
    families        {name: {kernel, sequence}}
    test_functions  {name: {space, values}}
    test_sets       {name: {space, members, role, boundary?}}
    base_families   {name: {space, bases: [{limit, sets}]}}
    config          {epsilon?, window?, conditions?, k_max?, base_family?}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .analysis import BaseFamily
from .kernels import (JointMeasure, KernelFamily, ParamKernel, Provenance, family_from_param,
                      hat_family)
from .kr import RealFunction
from .measures import Measure, same_space
from .space import (ConvergentSequence, FiniteMetricSpace, TestSet,
                    product_space, validate_space)

FORMAT_VERSION = "1"
SECTIONS = ("spaces", "sequences", "kernels", "families", "test_functions", "test_sets",
            "base_families", "config")


class DocumentParseError(ValueError):
    """Not a readable document (exit code 2)."""


class DocumentInvalid(ValueError):
    """A readable document that breaks references or invariants (exit code 1)."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(diagnostics))


def encode_float(x: float) -> str:
    return repr(float(x))


def encode_array(a) -> Any:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return encode_float(a)
    return [encode_array(r) for r in a]


def decode_array(v) -> np.ndarray:
    def conv(x):
        if isinstance(x, list):
            return [conv(y) for y in x]
        if isinstance(x, bool):
            raise ValueError("boolean where a number was expected")
        return float(x)
    return np.array(conv(v), dtype=float)


def encode_id(pid):
    if isinstance(pid, tuple):
        return [encode_id(p) for p in pid]
    if isinstance(pid, (str, int)) and not isinstance(pid, bool):
        return pid
    raise TypeError(f"point id {pid!r} is not a string, integer or pair")


def decode_id(v):
    if isinstance(v, list):
        return tuple(decode_id(x) for x in v)
    return v


# --- reading -----------------------------------------------------------------

@dataclass
class InstanceDocument:
    spaces: dict = field(default_factory=dict)
    sequences: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    test_functions: dict = field(default_factory=dict)
    test_sets: dict = field(default_factory=dict)
    base_families: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def targets(self) -> list[tuple[str, KernelFamily]]:
        """Every analysable family: explicit and mixed kernels, then named families."""
        out = [(k, v) for k, v in self.kernels.items() if isinstance(v, KernelFamily)]
        return out + list(self.families.items())

    def witnesses_for(self, F: KernelFamily):
        funcs = [f for f in self.test_functions.values() if same_space(f.space, F.s1_space)]
        sets = [O for O in self.test_sets.values() if same_space(O.space, F.s1_space)]
        base = None
        wanted = self.config.get("base_family")
        for name, B in self.base_families.items():
            if same_space(B.s1_space, F.s1_space) and (wanted is None or wanted == name):
                base = B
                break
        return funcs, sets, base


class _Reader:
    def __init__(self, raw: dict):
        self.raw = raw
        self.errors: list[str] = []
        self.doc = InstanceDocument()

    def err(self, loc: str, msg: str):
        self.errors.append(f"{loc}: {msg}")

    def section(self, name: str) -> dict:
        sec = self.raw.get(name, {})
        if not isinstance(sec, dict):
            self.err(f"$.{name}", "section must be an object")
            return {}
        return sec

    def ref(self, table: dict, name, loc: str, what: str):
        if not isinstance(name, str) or name not in table:
            self.err(loc, f"unresolved reference {name!r} to a {what}")
            return None
        return table[name]

    def guard(self, loc: str, fn, *args):
        try:
            return fn(*args)
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            self.err(loc, str(msg))
            return None

    # spaces
    def spaces(self):
        sec = self.section("spaces")
        pending = dict(sec)
        for _ in range(len(sec) + 1):
            for name, desc in list(pending.items()):
                loc = f"$.spaces.{name}"
                if not isinstance(desc, dict):
                    self.err(loc, "entry must be an object")
                    pending.pop(name)
                    continue
                if "product" in desc:
                    parts = desc["product"]
                    if not (isinstance(parts, list) and len(parts) == 2):
                        self.err(f"{loc}.product", "expected two space names")
                        pending.pop(name)
                        continue
                    if all(p in self.doc.spaces for p in parts):
                        a, b = (self.doc.spaces[p] for p in parts)
                        self.doc.spaces[name] = product_space(a, b)
                        pending.pop(name)
                    continue
                pending.pop(name)
                self.guard(loc, self._plain_space, name, desc, loc)
        for name, desc in pending.items():
            for p in desc["product"]:
                if p not in self.doc.spaces:
                    self.err(f"$.spaces.{name}.product", f"unresolved reference {p!r} to a space")

    def _plain_space(self, name, desc, loc):
        ids = [decode_id(p) for p in desc["point_ids"]]
        metric = decode_array(desc["metric"])
        coords = desc.get("coords")
        coords = None if coords is None else decode_array(coords)
        kind = desc.get("metric_kind", "explicit")
        space = FiniteMetricSpace(tuple(ids), metric, coords=coords, metric_kind=kind, check=False)
        problems = validate_space(space)
        for v in problems:
            self.err(f"{loc}.metric", v)
        if not problems:
            self.doc.spaces[name] = space

    def sequences(self):
        for name, desc in self.section("sequences").items():
            loc = f"$.sequences.{name}"
            space = self.ref(self.doc.spaces, desc.get("space"), f"{loc}.space", "space")
            if space is None:
                continue
            seq = self.guard(loc, lambda: ConvergentSequence(
                space, [decode_id(e) for e in desc["entries"]], decode_id(desc["limit"])))
            if seq is not None:
                self.doc.sequences[name] = seq

    def kernels(self):
        sec = self.section("kernels")
        order = sorted(sec, key=lambda k: sec[k].get("kind") == "hat" if isinstance(sec[k], dict) else 0)
        for name in order:
            desc = sec[name]
            loc = f"$.kernels.{name}"
            kind = desc.get("kind") if isinstance(desc, dict) else None
            if kind == "param":
                self._param_kernel(name, desc, loc)
            elif kind == "family":
                self._explicit_family(name, desc, loc)
            elif kind == "hat":
                self._hat(name, desc, loc)
            else:
                self.err(f"{loc}.kind", f"unknown kernel kind {kind!r}")

    def _spaces12(self, desc, loc):
        s1 = self.ref(self.doc.spaces, desc.get("s1"), f"{loc}.s1", "space")
        s2 = self.ref(self.doc.spaces, desc.get("s2"), f"{loc}.s2", "space")
        return s1, s2

    def _param_kernel(self, name, desc, loc):
        s1, s2 = self._spaces12(desc, loc)
        par = self.ref(self.doc.spaces, desc.get("param_space"), f"{loc}.param_space", "space")
        if s1 is None or s2 is None or par is None:
            return
        table = {}
        for k, row in enumerate(desc.get("table", [])):
            P = self.guard(f"{loc}.table[{k}]", lambda: JointMeasure(s1, s2, decode_array(row["mass"])))
            if P is not None:
                table[decode_id(row.get("param"))] = P
        K = self.guard(f"{loc}.table", ParamKernel, s1, s2, par, table)
        if K is not None:
            self.doc.kernels[name] = K

    def _explicit_family(self, name, desc, loc):
        s1, s2 = self._spaces12(desc, loc)
        if s1 is None or s2 is None:
            return
        joints = []
        for k, m in enumerate(desc.get("joints", [])):
            P = self.guard(f"{loc}.joints[{k}]", lambda: JointMeasure(s1, s2, decode_array(m)))
            joints.append(P)
        limit = self.guard(f"{loc}.limit", lambda: JointMeasure(s1, s2, decode_array(desc["limit"])))
        if limit is not None and all(P is not None for P in joints):
            self.doc.kernels[name] = KernelFamily(joints, limit, Provenance("explicit"))

    def _hat(self, name, desc, loc):
        K = self.ref(self.doc.kernels, desc.get("kernel"), f"{loc}.kernel", "kernel")
        if K is None:
            return
        if not isinstance(K, ParamKernel):
            self.err(f"{loc}.kernel", "mixing needs a parameterised kernel")
            return
        s3 = K.param_space.factors[0] if K.is_product else K.param_space
        mus = [self.guard(f"{loc}.measures[{k}]", lambda: Measure(s3, decode_array(w)))
               for k, w in enumerate(desc.get("measures", []))]
        lim = self.guard(f"{loc}.limit", lambda: Measure(s3, decode_array(desc["limit"])))
        s4 = None
        if desc.get("s4_sequence") is not None:
            s4 = self.ref(self.doc.sequences, desc["s4_sequence"], f"{loc}.s4_sequence", "sequence")
            if s4 is None:
                return
        if lim is None or any(m is None for m in mus):
            return
        F = self.guard(loc, hat_family, K, mus, lim, s4)
        if F is not None:
            self.doc.kernels[name] = F

    def families(self):
        for name, desc in self.section("families").items():
            loc = f"$.families.{name}"
            K = self.ref(self.doc.kernels, desc.get("kernel"), f"{loc}.kernel", "kernel")
            seq = self.ref(self.doc.sequences, desc.get("sequence"), f"{loc}.sequence", "sequence")
            if K is None or seq is None:
                continue
            if not isinstance(K, ParamKernel):
                self.err(f"{loc}.kernel", "families need a parameterised kernel")
                continue
            F = self.guard(loc, family_from_param, K, seq)
            if F is not None:
                self.doc.families[name] = F

    def witnesses(self):
        for name, desc in self.section("test_functions").items():
            loc = f"$.test_functions.{name}"
            space = self.ref(self.doc.spaces, desc.get("space"), f"{loc}.space", "space")
            if space is not None:
                f = self.guard(loc, lambda: RealFunction(space, decode_array(desc["values"]), name=name))
                if f is not None:
                    self.doc.test_functions[name] = f
        for name, desc in self.section("test_sets").items():
            loc = f"$.test_sets.{name}"
            space = self.ref(self.doc.spaces, desc.get("space"), f"{loc}.space", "space")
            if space is None:
                continue
            bd = desc.get("boundary")
            O = self.guard(loc, lambda: TestSet(
                space, [decode_id(p) for p in desc.get("members", [])], desc.get("role", "open"),
                None if bd is None else [decode_id(p) for p in bd], name=name))
            if O is not None:
                self.doc.test_sets[name] = O
        for name, desc in self.section("base_families").items():
            loc = f"$.base_families.{name}"
            space = self.ref(self.doc.spaces, desc.get("space"), f"{loc}.space", "space")
            if space is None:
                continue
            bases, ok = {}, True
            for k, entry in enumerate(desc.get("bases", [])):
                sets = []
                for j, sname in enumerate(entry.get("sets", [])):
                    O = self.ref(self.doc.test_sets, sname, f"{loc}.bases[{k}].sets[{j}]", "test set")
                    ok &= O is not None
                    sets.append(O)
                bases[decode_id(entry.get("limit"))] = sets
            if ok:
                B = self.guard(loc, BaseFamily, space, bases)
                if B is not None:
                    self.doc.base_families[name] = B

    def config(self):
        cfg = dict(self.section("config"))
        if "epsilon" in cfg:
            cfg["epsilon"] = self.guard("$.config.epsilon", float, cfg["epsilon"])
        if "window" in cfg:
            cfg["window"] = self.guard("$.config.window", int, cfg["window"])
        self.doc.config = cfg


def parse_document(raw) -> InstanceDocument:
    """Build every object of a decoded document or raise with all diagnostics."""
    if not isinstance(raw, dict):
        raise DocumentParseError("document root must be an object")
    if raw.get("format_version") != FORMAT_VERSION:
        raise DocumentParseError(f"unsupported format_version {raw.get('format_version')!r}")
    unknown = [k for k in raw if k not in SECTIONS and k != "format_version"]
    r = _Reader(raw)
    for k in unknown:
        r.err(f"$.{k}", "unknown section")
    r.spaces()
    r.sequences()
    r.kernels()
    r.families()
    r.witnesses()
    r.config()
    if r.errors:
        raise DocumentInvalid(r.errors)
    return r.doc


def read_document(path) -> InstanceDocument:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentParseError(f"{path}: {exc}") from None
    return parse_document(raw)


# --- writing -----------------------------------------------------------------

class DocumentBuilder:
    """Collects objects under names and emits a document dictionary.

    Spaces, sequences and kernels are registered by identity, so a space shared
    by several objects is written once.
    """

    def __init__(self):
        self.raw = {"format_version": FORMAT_VERSION, **{s: {} for s in SECTIONS}}
        self._names: dict[int, str] = {}

    def _fresh(self, section: str, stem: str) -> str:
        k, name = 0, stem
        while name in self.raw[section]:
            k += 1
            name = f"{stem}{k}"
        return name

    def space(self, space: FiniteMetricSpace, name: Optional[str] = None) -> str:
        if id(space) in self._names:
            return self._names[id(space)]
        if space.factors is not None:
            parts = [self.space(f) for f in space.factors]
            desc = {"product": parts}
        else:
            desc = {"point_ids": [encode_id(p) for p in space.point_ids],
                    "metric": encode_array(space.metric),
                    "coords": None if space.coords is None else encode_array(space.coords),
                    "metric_kind": space.metric_kind}
        name = self._fresh("spaces", name or f"S{len(self.raw['spaces'])}")
        self.raw["spaces"][name] = desc
        self._names[id(space)] = name
        return name

    def sequence(self, seq: ConvergentSequence, name: Optional[str] = None) -> str:
        if id(seq) in self._names:
            return self._names[id(seq)]
        name = self._fresh("sequences", name or "seq")
        self.raw["sequences"][name] = {"space": self.space(seq.space),
                                       "entries": [encode_id(e) for e in seq.entries],
                                       "limit": encode_id(seq.limit)}
        self._names[id(seq)] = name
        return name

    def param_kernel(self, K: ParamKernel, name: Optional[str] = None) -> str:
        if id(K) in self._names:
            return self._names[id(K)]
        desc = {"kind": "param", "s1": self.space(K.s1_space), "s2": self.space(K.s2_space),
                "param_space": self.space(K.param_space),
                "table": [{"param": encode_id(p), "mass": encode_array(K[p].mass)}
                          for p in K.param_space.point_ids]}
        name = self._fresh("kernels", name or "K")
        self.raw["kernels"][name] = desc
        self._names[id(K)] = name
        return name

    def family(self, F: KernelFamily, name: str = "F") -> str:
        """A family along a parameter sequence is stored as kernel + sequence."""
        prov = F.provenance
        if prov is not None and prov.kind == "param":
            name = self._fresh("families", name)
            self.raw["families"][name] = {"kernel": self.param_kernel(prov.kernel),
                                          "sequence": self.sequence(prov.sequence)}
            return name
        name = self._fresh("kernels", name)
        self.raw["kernels"][name] = {"kind": "family", "s1": self.space(F.s1_space),
                                     "s2": self.space(F.s2_space),
                                     "joints": [encode_array(P.mass) for P in F.joints],
                                     "limit": encode_array(F.limit.mass)}
        return name

    def hat(self, Xi: ParamKernel, mus, mu_limit, s4_seq=None, name: str = "hat") -> str:
        name = self._fresh("kernels", name)
        self.raw["kernels"][name] = {
            "kind": "hat", "kernel": self.param_kernel(Xi),
            "measures": [encode_array(m.weights) for m in mus], "limit": encode_array(mu_limit.weights),
            "s4_sequence": None if s4_seq is None else self.sequence(s4_seq)}
        return name

    def function(self, f: RealFunction) -> str:
        name = self._fresh("test_functions", f.name or "f")
        self.raw["test_functions"][name] = {"space": self.space(f.space), "values": encode_array(f.values)}
        return name

    def test_set(self, O: TestSet) -> str:
        key = ("set", id(O))
        if key in self._names:
            return self._names[key]
        name = self._fresh("test_sets", O.name or "O")
        order = O.space.index
        self.raw["test_sets"][name] = {
            "space": self.space(O.space), "role": O.role,
            "members": [encode_id(p) for p in sorted(O.members, key=order)],
            "boundary": None if O.boundary is None else [encode_id(p) for p in sorted(O.boundary, key=order)]}
        self._names[key] = name
        return name

    def base_family(self, B: BaseFamily, name: str = "base") -> str:
        name = self._fresh("base_families", name)
        self.raw["base_families"][name] = {
            "space": self.space(B.s1_space),
            "bases": [{"limit": encode_id(p), "sets": [self.test_set(O) for O in sets]}
                      for p, sets in B.bases.items()]}
        return name

    def set_config(self, **cfg):
        for k, v in cfg.items():
            self.raw["config"][k] = encode_float(v) if isinstance(v, float) else v

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.raw, fh, indent=1)
            fh.write("\n")
