"""Experiment configuration files.

The native format is INI (``key = value`` under ``[section]`` headers, with
``[design.<kind>]`` sections for each design). A JSON document with the same
nesting (``{"model": {...}, "design": {"standard_imd": {...}}}``) is accepted
as a mirror. Errors name the offending field as ``section.key``.
"""

import configparser
import json
from importlib import resources
from pathlib import Path

from .design import DESIGN_KINDS
from .errors import ConfigurationError
from .model import ESTIMAND_KINDS, MODEL_KINDS, parse_parametric
from .simulation import VARIANCE_SOURCES, DesignEntry, SimulationConfig

PRESETS = ("table1", "fig23")

_ALLOWED = {
    "model": {"kind", "horizon", "impulse_response", "error"},
    "arms": {"a", "b", "baseline"},
    "estimand": {"kinds", "k", "alpha"},
    "simulation": {"replicates", "seed", "models", "band", "variance_source", "plugin", "bins"},
}
_DESIGN_KEYS = {"washout", "period"}


def preset_path(name):
    """Filesystem path of a packaged preset (``"table1"`` or ``"fig23"``)."""
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}", "config")
    return Path(str(resources.files("nof1") / "presets" / f"{stem}.cfg"))


def _ini_sections(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}", "config") from None
    return {name: dict(parser[name]) for name in parser.sections()}


def _json_sections(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON config: {exc}", "config") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("top level must be an object", "config")
    out = {}
    for name, body in doc.items():
        if name == "design":
            if not isinstance(body, dict):
                raise ConfigurationError("must map design kinds to settings", "design")
            for kind, settings in body.items():
                out[f"design.{kind}"] = {k.lower(): v for k, v in (settings or {}).items()}
        else:
            if not isinstance(body, dict):
                raise ConfigurationError("section must be an object", name)
            out[name] = {k.lower(): v for k, v in body.items()}
    return out


def _list(value, field):
    if isinstance(value, (list, tuple)):
        return [v for v in value]
    text = str(value).strip()
    if text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            raise ConfigurationError(f"malformed list {text!r}", field) from None
    return [part.strip() for part in text.split(",") if part.strip()]


def _int(value, field):
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected an integer, got {value!r}", field) from None
    if f != int(f):
        raise ConfigurationError(f"expected an integer, got {value!r}", field)
    return int(f)


def _float(value, field):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a number, got {value!r}", field) from None


def _bool(value, field):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {value!r}", field)


def _choice(value, allowed, field):
    if value not in allowed:
        raise ConfigurationError(f"{value!r} is not one of {', '.join(allowed)}", field)
    return value


def _signal_spec(value, field):
    if isinstance(value, (list, tuple)):
        return tuple(_float(v, field) for v in value)
    text = str(value).strip()
    if text.startswith("["):
        return tuple(_float(v, field) for v in _list(text, field))
    if text.lower() != "zero":
        try:
            parse_parametric(text)
        except ValueError as exc:
            raise ConfigurationError(str(exc), field) from None
    return text


def config_from_sections(sections):
    """Build a :class:`SimulationConfig` from parsed sections."""
    designs = []
    for name, body in sections.items():
        if name.startswith("design."):
            kind = name.split(".", 1)[1]
            _choice(kind, DESIGN_KINDS, name)
            for key in body:
                if key not in _DESIGN_KEYS:
                    raise ConfigurationError("unknown key", f"{name}.{key}")
            designs.append(
                DesignEntry(
                    kind,
                    _int(body.get("washout", 0), f"{name}.washout"),
                    _int(body.get("period", 1), f"{name}.period"),
                )
            )
        elif name in _ALLOWED:
            for key in body:
                if key not in _ALLOWED[name]:
                    raise ConfigurationError("unknown key", f"{name}.{key}")
        else:
            raise ConfigurationError("unknown section", name)
    model = sections.get("model", {})
    est = sections.get("estimand", {})
    sim = sections.get("simulation", {})
    arms = sections.get("arms")
    kw = {}
    if "kind" in model:
        kw["model_kind"] = _choice(str(model["kind"]).strip(), MODEL_KINDS, "model.kind")
    if "horizon" in model:
        kw["horizons"] = tuple(_int(v, "model.horizon") for v in _list(model["horizon"], "model.horizon"))
    if "impulse_response" in model:
        kw["impulse_response"] = _signal_spec(model["impulse_response"], "model.impulse_response")
    if "error" in model:
        kw["error"] = _signal_spec(model["error"], "model.error")
    if "kinds" in est:
        kw["estimands"] = tuple(_choice(str(v), ESTIMAND_KINDS, "estimand.kinds") for v in _list(est["kinds"], "estimand.kinds"))
    if "k" in est and str(est["k"]).strip().lower() != "auto":
        kw["K"] = _int(est["k"], "estimand.K")
    if "alpha" in est:
        kw["alpha"] = _float(est["alpha"], "estimand.alpha")
    if "replicates" in sim:
        kw["replicates"] = _int(sim["replicates"], "simulation.replicates")
    if "seed" in sim:
        kw["seed"] = _int(sim["seed"], "simulation.seed")
    if "models" in sim:
        kw["models"] = tuple(_choice(str(v), MODEL_KINDS, "simulation.models") for v in _list(sim["models"], "simulation.models"))
    if "band" in sim:
        kw["band"] = _float(sim["band"], "simulation.band")
    if "variance_source" in sim:
        kw["variance_source"] = _choice(str(sim["variance_source"]), VARIANCE_SOURCES, "simulation.variance_source")
    if "plugin" in sim:
        kw["plugin"] = _bool(sim["plugin"], "simulation.plugin")
    if "bins" in sim:
        kw["bins"] = _int(sim["bins"], "simulation.bins")
    if arms is not None:
        if "a" not in arms or "b" not in arms:
            raise ConfigurationError("both A and B are required", "arms")
        kw["arms"] = (_float(arms["a"], "arms.A"), _float(arms["b"], "arms.B"))
        if "baseline" in arms:
            kw["baseline"] = _choice(str(arms["baseline"]), ("path", "impulse"), "arms.baseline")
    if designs:
        kw["designs"] = tuple(designs)
    return SimulationConfig(**kw)


def parse_config(text, fmt=None):
    """Parse INI (default) or JSON (``fmt="json"`` or text starting with ``{``)."""
    if fmt == "json" or (fmt is None and text.lstrip().startswith("{")):
        return config_from_sections(_json_sections(text))
    return config_from_sections(_ini_sections(text))


def load_config(path):
    """Load a config file; a bare preset name such as ``table1.cfg`` resolves to the packaged preset."""
    p = Path(path)
    if not p.exists():
        try:
            p = preset_path(p.name)
        except ConfigurationError:
            raise ConfigurationError(f"config file not found: {path}", "config") from None
    return parse_config(p.read_text(), "json" if p.suffix.lower() == ".json" else None)
