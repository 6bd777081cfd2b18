"""Config-document parsing: tagged records -> distribution and process objects.

The run configuration is a single JSON-compatible document; every
distribution is a tagged record such as {"kind": "steep_gamma", "gamma": 0.5}.
Unknown keys are rejected with a field-path diagnostic so that a typo never
silently changes a run.
"""

from __future__ import annotations

from . import birth_times as bt
from . import offspring as osp
from . import singular
from .errors import ConfigError
from .model import EpidemicSpec

_DELAY_KINDS = {
    "exponential": (bt.Exponential, {"rate": float}),
    "uniform": (bt.Uniform, {"b": float}),
    "deterministic": (bt.Deterministic, {"c": float}),
    "power_at_origin": (bt.PowerAtOrigin, {"beta": float}),
    "steep_gamma": (bt.SteepGamma, {"gamma": float}),
    "nu_beta": (singular.NuBeta, {"beta": float}),
    "cantor": (singular.Cantor, {}),
    "mu_c": (singular.DyadicAtoms, {}),
    "omega": (singular.OmegaBlend, {"beta": float, "gamma": float}),
}

_OFFSPRING_KINDS = {
    "power_law": (osp.PowerLawGen, {"alpha": float}, {"x0": float}),
    "pareto_tail": (osp.ParetoTail, {"alpha": float}, {"c": float}),
    "log_tail": (osp.LogTail, {}, {"c": float}),
    "constant": (osp.Constant, {"k": int}, {}),
    "tail_sandwich": (osp.TailSandwich, {"alpha_low": float, "alpha_high": float}, {"x0": float}),
}


def _require_mapping(doc, path):
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    return doc


def _check_keys(doc, allowed, path):
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)}")


def parse_delay(doc, path="sigma"):
    """Build a delay (birth-time) law from a tagged record."""
    doc = _require_mapping(doc, path)
    kind = doc.get("kind")
    if kind in _DELAY_KINDS:
        cls, fields = _DELAY_KINDS[kind]
        _check_keys(doc, {"kind", *fields}, path)
        try:
            return cls(**{k: conv(doc[k]) for k, conv in fields.items()})
        except KeyError as exc:
            raise ConfigError(path, f"missing field {exc}") from None
    if kind == "table":
        _check_keys(doc, {"kind", "ts", "fs"}, path)
        return bt.TabulatedCdf(doc.get("ts", []), doc.get("fs", []))
    if kind in ("scaled", "thinned"):
        _check_keys(doc, {"kind", "c", "p", "child"}, path)
        child = parse_delay(doc.get("child"), f"{path}.child")
        if kind == "scaled":
            return bt.Scaled(child, float(doc.get("c", 0.0)))
        return bt.Thinned(child, float(doc.get("p", 0.0)))
    if kind in ("max", "min", "sum"):
        _check_keys(doc, {"kind", "children", "t_max", "n"}, path)
        kids = doc.get("children")
        if not isinstance(kids, list) or len(kids) != 2:
            raise ConfigError(f"{path}.children", "expected exactly two children")
        d1 = parse_delay(kids[0], f"{path}.children[0]")
        d2 = parse_delay(kids[1], f"{path}.children[1]")
        return bt.combine(
            kind, d1, d2,
            t_max=float(doc.get("t_max", 8.0)), n=int(doc.get("n", 4096)),
        )
    if kind == "backward_thinned":
        _check_keys(doc, {"kind", "sigma", "incubation"}, path)
        return bt.backward_thinned(
            parse_delay(doc.get("sigma"), f"{path}.sigma"),
            parse_delay(doc.get("incubation"), f"{path}.incubation"),
        )
    raise ConfigError(path, f"unknown delay kind {kind!r}")


def parse_offspring(doc, path="offspring"):
    """Build an offspring law from a tagged record."""
    doc = _require_mapping(doc, path)
    kind = doc.get("kind")
    if kind in _OFFSPRING_KINDS:
        cls, req, opt = _OFFSPRING_KINDS[kind]
        _check_keys(doc, {"kind", *req, *opt}, path)
        kwargs = {}
        for k, conv in req.items():
            if k not in doc:
                raise ConfigError(path, f"missing field '{k}'")
            kwargs[k] = conv(doc[k])
        for k, conv in opt.items():
            if k in doc:
                kwargs[k] = conv(doc[k])
        return cls(**kwargs)
    if kind == "finite_table":
        _check_keys(doc, {"kind", "pmf"}, path)
        pmf = doc.get("pmf")
        if not isinstance(pmf, dict) or not pmf:
            raise ConfigError(f"{path}.pmf", "expected a nonempty value->probability map")
        try:
            return osp.FiniteTable({int(k): float(v) for k, v in pmf.items()})
        except ValueError as exc:
            raise ConfigError(f"{path}.pmf", str(exc)) from None
    raise ConfigError(path, f"unknown offspring kind {kind!r}")


def parse_spec(doc, path="spec"):
    """Build a full process description from a config document."""
    doc = _require_mapping(doc, path)
    _check_keys(
        doc,
        {"offspring", "sigma", "incubation", "contagious", "ic_dependence", "ic_gap", "direction"},
        path,
    )
    if "offspring" not in doc or "sigma" not in doc:
        raise ConfigError(path, "a process needs 'offspring' and 'sigma'")
    kwargs = {
        "offspring": parse_offspring(doc["offspring"], f"{path}.offspring"),
        "sigma": parse_delay(doc["sigma"], f"{path}.sigma"),
    }
    if doc.get("incubation") is not None:
        kwargs["incubation"] = parse_delay(doc["incubation"], f"{path}.incubation")
    if doc.get("contagious") is not None:
        kwargs["contagious"] = parse_delay(doc["contagious"], f"{path}.contagious")
    if doc.get("ic_gap") is not None:
        kwargs["ic_gap"] = parse_delay(doc["ic_gap"], f"{path}.ic_gap")
    if "ic_dependence" in doc:
        kwargs["ic_dependence"] = str(doc["ic_dependence"])
    if "direction" in doc:
        kwargs["direction"] = str(doc["direction"])
    try:
        return EpidemicSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def set_by_path(doc, dotted, value):
    """Assign into a nested config document by a dotted path (for sweeps)."""
    parts = dotted.split(".")
    node = doc
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(dotted, "path does not exist in the config")
        node = node[p]
    if not isinstance(node, dict):
        raise ConfigError(dotted, "path does not terminate in an object field")
    node[parts[-1]] = value
