"""Line-oriented experiment configuration.

Sections: [problem], [coefficients.nu], [coefficients.sigma], [data.f],
[algorithm].  Values are "key = value" lines; coefficient spectra are given
inline as "mode k_1 ... k_d re im" lines or through "file = path".  The
dimension d and the reference window radius are mandatory.

A [problem] section may instead name a builtin fixture ("fixture = name");
remaining keys of the section are passed through as fixture parameters.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .algorithms import AlgorithmConfig, Problem
from .core import HMINUS1, SpectralVector
from .operators import CoefficientSpectrum, make_operator
from . import lab

_SECTIONS = ("problem", "coefficients.nu", "coefficients.sigma", "data.f",
             "algorithm")


class ConfigError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class _Section:
    pairs: dict = field(default_factory=dict)
    modes: list = field(default_factory=list)     # (line_no, tokens)


def _coerce(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_sections(text: str) -> dict[str, _Section]:
    sections: dict[str, _Section] = {}
    current: _Section | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(line_no, f"malformed section header {raw!r}")
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(line_no, f"unknown section [{name}]")
            current = sections.setdefault(name, _Section())
            continue
        if current is None:
            raise ConfigError(line_no, "content before any section header")
        if line.startswith("mode "):
            current.modes.append((line_no, line.split()[1:]))
            continue
        if "=" not in line:
            raise ConfigError(line_no, f"expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        current.pairs[key.strip()] = (line_no, value.strip())
    return sections


def _entries_from_modes(section: _Section, d: int) -> dict:
    entries = {}
    for line_no, toks in section.modes:
        if len(toks) != d + 2:
            raise ConfigError(line_no,
                              f"mode line needs {d + 2} fields for d={d}")
        try:
            k = tuple(int(t) for t in toks[:d])
            entries[k] = complex(float(toks[d]), float(toks[d + 1]))
        except ValueError as exc:
            raise ConfigError(line_no, f"bad number in mode line: {exc}")
    return entries


def _load_spectrum(section: _Section, d: int, base_dir: str,
                   tail_key: str = "tail_sup") -> tuple[dict, float]:
    tail = 0.0
    if tail_key in section.pairs:
        line_no, value = section.pairs[tail_key]
        try:
            tail = float(value)
        except ValueError:
            raise ConfigError(line_no, f"{tail_key} must be a number")
    if "file" in section.pairs:
        line_no, path = section.pairs["file"]
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        if not os.path.exists(full):
            raise ConfigError(line_no, f"spectrum file not found: {full}")
        vec = SpectralVector.load(full)
        return dict(vec.entries), tail
    return _entries_from_modes(section, d), tail


def load_config(path: str) -> tuple[Problem, AlgorithmConfig]:
    with open(path) as fh:
        text = fh.read()
    base_dir = os.path.dirname(os.path.abspath(path))
    sections = _parse_sections(text)
    if "problem" not in sections:
        raise ConfigError(0, "missing [problem] section")
    prob_sec = sections["problem"]

    def need(key: str):
        if key not in prob_sec.pairs:
            raise ConfigError(0, f"[problem] requires '{key}'")
        return prob_sec.pairs[key]

    line_d, d_text = need("d")
    try:
        d = int(d_text)
    except ValueError:
        raise ConfigError(line_d, "d must be an integer")
    line_w, w_text = need("window")
    try:
        window = int(w_text)
    except ValueError:
        raise ConfigError(line_w, "window must be an integer")

    if "fixture" in prob_sec.pairs:
        _, fixture_name = prob_sec.pairs["fixture"]
        params = {k: _coerce(v) for k, (_, v) in prob_sec.pairs.items()
                  if k not in ("d", "window", "fixture")}
        try:
            result = lab.fixture(fixture_name, **params)
        except lab.UnknownFixtureError as exc:
            raise ConfigError(0, str(exc))
        except (TypeError, ValueError) as exc:
            raise ConfigError(0, f"fixture {fixture_name!r}: {exc}")
        problem = result.objects.get("problem")
        if problem is None:
            raise ConfigError(0,
                              f"fixture {fixture_name!r} does not define a "
                              "solvable problem")
        if problem.ref_radius is None and problem.exact is None:
            problem.ref_radius = window
    else:
        for name in ("coefficients.nu", "coefficients.sigma", "data.f"):
            if name not in sections:
                raise ConfigError(0, f"missing [{name}] section")
        nu_e, nu_tail = _load_spectrum(sections["coefficients.nu"], d, base_dir)
        sg_e, sg_tail = _load_spectrum(sections["coefficients.sigma"], d, base_dir)
        f_e, f_tail = _load_spectrum(sections["data.f"], d, base_dir,
                                     tail_key="tail")
        try:
            op = make_operator(CoefficientSpectrum(nu_e, d, tail_sup=nu_tail),
                               CoefficientSpectrum(sg_e, d, tail_sup=sg_tail))
        except ValueError as exc:
            raise ConfigError(0, f"operator: {exc}")
        f = SpectralVector(f_e, d, HMINUS1)
        problem = Problem(op, f, f_tail=f_tail, ref_radius=window,
                          label=os.path.basename(path))

    algo = {}
    if "algorithm" in sections:
        for key, (line_no, value) in sections["algorithm"].pairs.items():
            key = {"algorithm": "variant", "j": "enrichment_radius",
                   "max_iter": "max_outer"}.get(key, key)
            algo[key] = _coerce(value)
    try:
        config = AlgorithmConfig(**algo)
    except (TypeError, ValueError) as exc:
        raise ConfigError(0, f"[algorithm]: {exc}")
    return problem, config
