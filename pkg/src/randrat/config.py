"""Run configuration and the plain-text system specification format.

Config files are INI-style sections of key = value pairs; command-line
flags override file values.  System files list support entries between
begin-entry / end-entry markers, with polynomials as "re,im" coefficient
pairs in ascending powers.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field

from . import rds
from .ratmap import RationalMap, poly_from_text, poly_to_text, power_map


class ConfigError(ValueError):
    """Invalid run configuration."""


DEFAULTS = {
    "system": {"path": ""},
    "net": {"size": "10000"},
    "run": {"seed": "42", "horizon": "8", "g_horizon": "8", "tree_depth": "12",
            "start": "0.5,0.25"},
    "pressure": {"n_ladder": "4 6 8", "eps_ladder": "0.2 0.1 0.05 0.02",
                 "samples": "20"},
    "render": {"width": "512", "height": "512", "x_min": "-2.0", "x_max": "2.0",
               "y_min": "-2.0", "y_max": "2.0", "escape_threshold": "1000.0",
               "max_iter": "30", "inf_chart": "false"},
    "verify": {"scale": "1.0", "seed": "0"},
    "output": {"directory": "out", "figures": "true"},
}


@dataclass
class RunConfig:
    """Resolved configuration: sections of string key-value pairs."""

    sections: dict
    system_text: str = ""
    config_dir: str = "."

    @classmethod
    def load(cls, path=None, overrides=None):
        cp = configparser.ConfigParser()
        cp.read_dict(DEFAULTS)
        config_dir = "."
        if path:
            if not os.path.exists(path):
                raise ConfigError(f"config file {path} does not exist")
            cp.read(path)
            config_dir = os.path.dirname(os.path.abspath(path))
        sections = {s: dict(cp[s]) for s in cp.sections()}
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            section, name = key.split(".", 1)
            sections.setdefault(section, {})[name] = str(value)
        cfg = cls(sections, config_dir=config_dir)
        sys_path = cfg.get("system", "path")
        if sys_path:
            full = sys_path if os.path.isabs(sys_path) else os.path.join(config_dir, sys_path)
            if not os.path.exists(full):
                raise ConfigError(f"system file {full} does not exist")
            with open(full, "r", encoding="utf-8") as fh:
                cfg.system_text = fh.read()
        cfg.validate()
        return cfg

    def get(self, section, key):
        return self.sections.get(section, {}).get(key, DEFAULTS.get(section, {}).get(key))

    def get_int(self, section, key):
        return int(self.get(section, key))

    def get_float(self, section, key):
        return float(self.get(section, key))

    def get_bool(self, section, key):
        return str(self.get(section, key)).strip().lower() in ("1", "true", "yes", "on")

    def get_floats(self, section, key):
        return [float(tok) for tok in str(self.get(section, key)).replace(",", " ").split()]

    def get_ints(self, section, key):
        return [int(tok) for tok in str(self.get(section, key)).replace(",", " ").split()]

    def validate(self):
        n_ladder = self.get_ints("pressure", "n_ladder")
        eps_ladder = self.get_floats("pressure", "eps_ladder")
        if any(n <= 1 for n in n_ladder) or sorted(n_ladder) != n_ladder:
            raise ConfigError("pressure n_ladder must be positive and ascending")
        if any(e <= 0 for e in eps_ladder) or sorted(eps_ladder, reverse=True) != eps_ladder:
            raise ConfigError("pressure eps_ladder must be positive and descending")
        if self.get_int("net", "size") < 100:
            raise ConfigError("net size must be at least 100")

    def canonical_text(self):
        """Stable serialization of everything that affects output *content*.

        Output location and figure toggles are excluded: they decide where
        files go and which exist, not what any file contains.  The system
        file participates through its text, not its path.
        """
        buf = io.StringIO()
        for section in sorted(self.sections):
            if section == "output":
                continue
            for key in sorted(self.sections[section]):
                if section == "system" and key == "path":
                    continue
                buf.write(f"[{section}] {key} = {self.sections[section][key]}\n")
        buf.write("-- system --\n")
        buf.write(self.system_text)
        return buf.getvalue()

    def content_hash(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:8]

    def build_system(self, net=None):
        """The base system from the system file (default: deterministic z^2)."""
        if not self.system_text.strip():
            sys = rds.constant_system(power_map(2))
            return rds.BaseSystem(sys.support, seed=self.get_int("run", "seed"),
                                  mode="explicit")
        return parse_system(self.system_text, net=net,
                            default_seed=self.get_int("run", "seed"))


def parse_system(text, *, net=None, default_seed=0):
    """Parse the plain-text system specification."""
    seed = default_seed
    mode = "iid"
    entries = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0].lower()
        if head == "seed":
            seed = int(tokens[1])
        elif head == "mode":
            mode = tokens[1]
        elif head == "begin-entry":
            current = {}
        elif head == "end-entry":
            if current is None:
                raise ConfigError(f"line {lineno}: end-entry without begin-entry")
            entries.append(_finish_entry(current, net, lineno))
            current = None
        elif current is not None:
            current[head] = line.split(None, 1)[1] if len(tokens) > 1 else ""
        else:
            raise ConfigError(f"line {lineno}: directive {head!r} outside an entry")
    if current is not None:
        raise ConfigError("unterminated begin-entry block")
    if not entries:
        raise ConfigError("system file declares no entries")
    if mode == "explicit":
        support = [(t, phi, 1.0) for t, phi, _ in entries]
        return rds.BaseSystem(support, seed=seed, mode="explicit")
    return rds.BaseSystem(entries, seed=seed, mode="iid")


def _finish_entry(fields, net, lineno):
    try:
        num = poly_from_text(fields["numerator"])
        den = poly_from_text(fields["denominator"])
    except KeyError as missing:
        raise ConfigError(f"entry ending at line {lineno} lacks {missing}")
    t = RationalMap(num, den)
    weight = float(fields.get("weight", "1.0"))
    phi = _parse_potential(fields.get("potential", "constant 0.0"), t, net)
    return (t, phi, weight)


def _parse_potential(text, t, net):
    tokens = text.split()
    kind = tokens[0].lower()
    if kind == "constant":
        return rds.ConstantPotential(float(tokens[1]) if len(tokens) > 1 else 0.0)
    if kind == "logmod":
        return rds.LogModulusPotential(float(tokens[1]), t)
    if kind == "coordinate":
        # tabulated smooth coordinate form: coordinate <axis> <scale>
        axis = int(tokens[1])
        scale = float(tokens[2]) if len(tokens) > 2 else 1.0
        if net is None:
            from .sphere import standard_net

            net = standard_net(4000)
        return rds.TabulatedPotential.from_function(rds.coordinate_bump(axis), net,
                                                    scale=scale)
    raise ConfigError(f"unknown potential descriptor {text!r}")


def system_to_text(sys):
    """Serialize a base system back to the plain-text format."""
    lines = [f"seed {sys.seed}", f"mode {sys.mode}"]
    for t, phi, w in sys.support:
        lines.append("begin-entry")
        lines.append(f"weight {w!r}")
        lines.append(f"potential {phi.describe()}")
        lines.append(f"numerator {poly_to_text(t.num)}")
        lines.append(f"denominator {poly_to_text(t.den)}")
        lines.append("end-entry")
    return "\n".join(lines) + "\n"
