"""Synthetic workload profiles and the three workload-shift compositions.

A profile is a repeating cycle: a quiet plateau (Normal) followed by a leak
episode in which memory grows linearly (Aging), after which a fraction of the
accumulated growth is released. A seasonal sine and Gaussian noise sit on top.
Ground-truth labels are 1 exactly on the growth samples.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import IndexOutOfRange, InvalidSpec, SourceExhausted
from .ingest import MemorySeries
from .labeling import LabeledSeries, Provenance

SAMPLING_INTERVAL = 5.0
SHIFT_KINDS = ("sudden", "gradual", "recurring")


@dataclass(frozen=True)
class ProfileSpec:
    """Parameters of one synthetic workload profile.

    ``quiet_length`` is the Normal plateau before each episode; ``None``
    means the same length as the episode. ``phase_offset`` is how far into
    the quiet+episode cycle the profile starts.
    """

    name: str
    base_memory: float = 4000.0
    leak_rate: float = 0.2
    episode_length: int = 1200
    release_fraction: float = 1.0
    seasonal_amplitude: float = 5.0
    seasonal_period: int = 720
    noise_std: float = 1.0
    total_samples: int = 20000
    rng_seed: int = 0
    quiet_length: int | None = None
    phase_offset: int = 0

    def __post_init__(self):
        if self.total_samples < 2 * self.seasonal_period:
            raise InvalidSpec(f"total_samples {self.total_samples} < 2 * seasonal_period")
        if self.seasonal_period < 1:
            raise InvalidSpec("seasonal_period must be >= 1")
        if self.noise_std < 0:
            raise InvalidSpec("noise_std must be >= 0")
        if not 0.0 <= self.release_fraction <= 1.0:
            raise InvalidSpec("release_fraction must be in [0, 1]")
        if self.episode_length < 1:
            raise InvalidSpec("episode_length must be >= 1")
        if self.quiet_length is not None and self.quiet_length < 0:
            raise InvalidSpec("quiet_length must be >= 0")
        if self.leak_rate < 0:
            raise InvalidSpec("leak_rate must be >= 0")
        if not 0 <= self.phase_offset < self.quiet + self.episode_length:
            raise InvalidSpec("phase_offset must lie inside one cycle")

    @property
    def quiet(self) -> int:
        return self.episode_length if self.quiet_length is None else self.quiet_length

    def to_dict(self) -> dict:
        return asdict(self)


# Shapes chosen so heavier load leaks faster, in shorter episodes, under a
# faster request cycle.
PRESETS = {
    "Low": ProfileSpec("Low", leak_rate=0.2, episode_length=1200, seasonal_period=720,
                       quiet_length=720, phase_offset=760),
    "Medium": ProfileSpec("Medium", base_memory=4400.0, leak_rate=0.7, episode_length=900,
                          seasonal_period=120, quiet_length=450, phase_offset=600),
    "High": ProfileSpec("High", base_memory=4450.0, leak_rate=1.5, episode_length=600,
                        seasonal_period=48, quiet_length=400, phase_offset=200),
}


def preset(name: str, **overrides) -> ProfileSpec:
    """A copy of a named preset with fields replaced."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise InvalidSpec(f"unknown profile preset {name!r}") from None
    return replace(base, **overrides)


def _leak_curve(n: int, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray]:
    quiet, ep = spec.quiet, spec.episode_length
    cycle = quiet + ep
    k, pos = np.divmod(np.arange(n) + spec.phase_offset, cycle)
    # without a leak there is no growth, so nothing counts as aging
    rising = (pos >= quiet) & (spec.leak_rate > 0)
    carried = k * (1.0 - spec.release_fraction) * spec.leak_rate * ep
    growth = np.where(rising, (pos - quiet + 1) * spec.leak_rate, 0.0)
    return carried + growth, rising


def generate_profile(spec: ProfileSpec) -> LabeledSeries:
    """Synthesize one profile; labels are the ground truth by construction."""
    n = spec.total_samples
    leak, rising = _leak_curve(n, spec)
    t = np.arange(n, dtype=np.float64)
    memory = spec.base_memory + leak
    if spec.seasonal_amplitude:
        memory = memory + spec.seasonal_amplitude * np.sin(2.0 * np.pi * t / spec.seasonal_period)
    if spec.noise_std:
        rng = np.random.default_rng(spec.rng_seed)
        memory = memory + rng.normal(0.0, spec.noise_std, n)
    series = MemorySeries.regular(memory, SAMPLING_INTERVAL, profile=spec.name)
    labels = rising.astype(np.int8)
    return LabeledSeries(series, labels, (Provenance.CONSTRUCTION,) * n, (spec.name,) * n)


def _sources(s: LabeledSeries) -> np.ndarray:
    src = s.source if s.source is not None else (s.series.profile,) * len(s)
    return np.asarray(src, dtype=object)


def _assemble(memory, labels, sources, interval, name) -> LabeledSeries:
    n = memory.size
    series = MemorySeries.regular(memory, interval, profile=name)
    return LabeledSeries(series, labels, (Provenance.CONSTRUCTION,) * n, tuple(sources))


def _interval(a: LabeledSeries, b: LabeledSeries) -> float:
    ia, ib = a.series.sampling_interval_seconds, b.series.sampling_interval_seconds
    if not np.isclose(ia, ib):
        raise InvalidSpec(f"sampling intervals differ: {ia} vs {ib}")
    return ia


def _seam_offset(a: LabeledSeries, b: LabeledSeries, index: int) -> float:
    """Constant added to ``b`` so the stream does not jump at ``index``."""
    if index == 0:
        return 0.0
    return float(a.memory[index - 1] - b.memory[index - 1])


def compose_sudden(a: LabeledSeries, b: LabeledSeries, switch_index: int,
                   name: str = "sudden") -> LabeledSeries:
    """``a[:switch] ++ b[switch:]`` with ``b`` shifted to meet ``a`` at the seam."""
    interval = _interval(a, b)
    if not 0 <= switch_index <= min(len(a), len(b)):
        raise IndexOutOfRange(f"switch_index {switch_index} outside [0, {min(len(a), len(b))}]")
    off = _seam_offset(a, b, switch_index)
    memory = np.concatenate([a.memory[:switch_index], b.memory[switch_index:] + off])
    labels = np.concatenate([a.labels[:switch_index], b.labels[switch_index:]])
    src = np.concatenate([_sources(a)[:switch_index], _sources(b)[switch_index:]])
    return _assemble(memory, labels, src, interval, name)


def gradual_mask(start: int, transition_length: int, n: int, rng_seed: int) -> np.ndarray:
    """True where sample ``i`` is taken from the second profile.

    Inside the transition, sample ``start + k`` comes from ``b`` with
    probability ``(k + 1) / transition_length``, so a length of 1 is a sudden
    switch at ``start``.
    """
    if transition_length < 1:
        raise InvalidSpec("transition_length must be >= 1")
    rng = np.random.default_rng(rng_seed)
    mask = np.zeros(n, dtype=bool)
    stop = min(start + transition_length, n)
    k = np.arange(stop - start)
    mask[start:stop] = rng.random(k.size) < (k + 1) / transition_length
    mask[stop:] = True
    return mask


def compose_gradual(a: LabeledSeries, b: LabeledSeries, start: int, transition_length: int,
                    rng_seed: int = 0, name: str = "gradual") -> LabeledSeries:
    """Probabilistic mixing from ``a`` to ``b`` over ``transition_length`` samples.

    Each output sample ``i`` is ``a[i]`` or ``b[i]``, so both sources keep their
    own running index; ``b`` is offset to meet ``a`` at ``start``.
    """
    interval = _interval(a, b)
    n = min(len(a), len(b))
    if not 0 <= start <= n:
        raise IndexOutOfRange(f"start {start} outside [0, {n}]")
    if start + transition_length > n:
        raise IndexOutOfRange(f"transition ends at {start + transition_length} > {n}")
    mask = gradual_mask(start, transition_length, n, rng_seed)
    off = _seam_offset(a, b, start)
    memory = np.where(mask, b.memory[:n] + off, a.memory[:n])
    labels = np.where(mask, b.labels[:n], a.labels[:n])
    src = np.where(mask, _sources(b)[:n], _sources(a)[:n])
    return _assemble(memory, labels, src, interval, name)


def recurring_plan(len_a: int, len_b: int, block_length: int, cycles: int) -> list:
    """``(which, start, stop)`` slices for the A,B,A,B,... blocks.

    Each source is read sequentially. When a source runs out the stream is
    truncated at that point.
    """
    if block_length < 1:
        raise InvalidSpec("block_length must be >= 1")
    if cycles < 1:
        raise InvalidSpec("cycles must be >= 1")
    short = [n for n, ln in (("a", len_a), ("b", len_b)) if ln < block_length]
    if short:
        raise SourceExhausted(f"source {short[0]} is shorter than one block ({block_length})")
    cursor = {"a": 0, "b": 0}
    size = {"a": len_a, "b": len_b}
    plan = []
    for _ in range(cycles):
        for which in ("a", "b"):
            lo = cursor[which]
            hi = min(lo + block_length, size[which])
            if hi <= lo:
                return plan
            plan.append((which, lo, hi))
            cursor[which] = hi
            if hi - lo < block_length:
                return plan
    return plan


def compose_recurring(a: LabeledSeries, b: LabeledSeries, block_length: int, cycles: int,
                      name: str = "recurring") -> LabeledSeries:
    """Alternate blocks of ``a`` and ``b``, ``cycles`` times each.

    Every block after the first is shifted so memory continues from the
    previous block with the block's own first increment, as at a sudden seam.
    """
    interval = _interval(a, b)
    plan = recurring_plan(len(a), len(b), block_length, cycles)
    src_of = {"a": a, "b": b}
    mem, lab, src = [], [], []
    for which, lo, hi in plan:
        s = src_of[which]
        piece = s.memory[lo:hi]
        if mem:
            anchor = s.memory[lo - 1] if lo > 0 else s.memory[lo]
            piece = piece + (mem[-1][-1] - anchor)
        mem.append(piece)
        lab.append(s.labels[lo:hi])
        src.append(_sources(s)[lo:hi])
    return _assemble(np.concatenate(mem), np.concatenate(lab), np.concatenate(src),
                     interval, name)


@dataclass(frozen=True)
class ShiftSpec:
    """One shift scenario over two named profiles."""

    name: str
    kind: str
    a: str
    b: str
    total_samples: int = 20000
    switch_index: int | None = None
    start: int | None = None
    transition_length: int | None = None
    block_length: int | None = None
    cycles: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise InvalidSpec(f"kind must be one of {SHIFT_KINDS}, got {self.kind!r}")
        n = self.total_samples
        if self.kind == "sudden":
            if self.switch_index is None or not 0 <= self.switch_index <= n:
                raise InvalidSpec("sudden shift needs 0 <= switch_index <= total_samples")
        elif self.kind == "gradual":
            if self.start is None or self.transition_length is None:
                raise InvalidSpec("gradual shift needs start and transition_length")
            if self.transition_length < 1:
                raise InvalidSpec("transition_length must be >= 1")
            if self.start < 0 or self.start + self.transition_length > n:
                raise InvalidSpec("gradual transition must lie inside the stream")
        else:
            if self.block_length is None or self.cycles is None:
                raise InvalidSpec("recurring shift needs block_length and cycles")
            if self.block_length < 1 or self.cycles < 2:
                raise InvalidSpec("recurring shift needs block_length >= 1 and cycles >= 2")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _profile_seed(shift: ShiftSpec, slot: int) -> int:
    return shift.rng_seed * 1000 + 101 + slot


def build_scenario(shift: ShiftSpec, profiles: dict | None = None) -> LabeledSeries:
    """Generate both component profiles and compose them.

    ``profiles`` maps names to :class:`ProfileSpec`; missing names fall back to
    the presets. Component seeds are derived from the scenario seed.
    """
    profiles = profiles or {}
    n = shift.total_samples
    length = n
    if shift.kind == "recurring":
        length = max(n, shift.block_length * shift.cycles)

    def make(name, slot):
        spec = profiles.get(name) or preset(name)
        return generate_profile(replace(spec, total_samples=length,
                                        rng_seed=_profile_seed(shift, slot)))

    a, b = make(shift.a, 0), make(shift.b, 1)
    if shift.kind == "sudden":
        out = compose_sudden(a, b, shift.switch_index, shift.name)
    elif shift.kind == "gradual":
        out = compose_gradual(a, b, shift.start, shift.transition_length,
                              shift.rng_seed, shift.name)
    else:
        out = compose_recurring(a, b, shift.block_length, shift.cycles, shift.name)
    if len(out) > n:
        out = LabeledSeries(out.series.slice(0, n), out.labels[:n], out.provenance[:n],
                            out.source[:n])
    return out


def default_scenarios(total_samples: int = 20000, rng_seed: int = 0) -> list:
    """The four evaluation scenarios: two sudden, one gradual, one recurring."""
    n = total_samples
    q = n // 4
    return [
        ShiftSpec("sudden_low_medium", "sudden", "Low", "Medium", n, switch_index=q,
                  rng_seed=rng_seed),
        ShiftSpec("sudden_low_high", "sudden", "Low", "High", n, switch_index=q,
                  rng_seed=rng_seed + 1),
        ShiftSpec("gradual_low_high", "gradual", "Low", "High", n, start=q,
                  transition_length=q, rng_seed=rng_seed + 2),
        ShiftSpec("recurring_medium_high", "recurring", "Medium", "High", n,
                  block_length=n // 8, cycles=4, rng_seed=rng_seed + 3),
    ]


def training_profile(total_samples: int = 20000, rng_seed: int = 0) -> LabeledSeries:
    """The Low profile the initial model is fitted on, seeded apart from the scenarios."""
    return generate_profile(preset("Low", total_samples=total_samples, rng_seed=rng_seed + 7919))


_INT_KEYS = ("total_samples", "switch_index", "start", "transition_length", "block_length",
             "cycles", "rng_seed")
_PROFILE_FLOATS = ("base_memory", "leak_rate", "release_fraction", "seasonal_amplitude",
                   "noise_std")
_PROFILE_INTS = ("episode_length", "seasonal_period", "total_samples", "rng_seed", "quiet_length",
                 "phase_offset")


def parse_scenario_config(text: str) -> tuple[ShiftSpec, dict]:
    """Read a scenario file.

    The format is INI. A ``[scenario]`` section holds the :class:`ShiftSpec`
    fields; optional ``[profile NAME]`` sections override preset fields::

        [scenario]
        name = sudden_low_high
        kind = sudden
        a = Low
        b = High
        switch_index = 5000

        [profile High]
        leak_rate = 1.2
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidSpec(f"unreadable scenario file: {exc}") from None
    if not cp.has_section("scenario"):
        raise InvalidSpec("missing [scenario] section")
    sec = dict(cp["scenario"])
    try:
        fields = {k: int(v) if k in _INT_KEYS else v for k, v in sec.items()}
        fields.setdefault("name", fields.get("kind", "scenario"))
        shift = ShiftSpec(**fields)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad [scenario] section: {exc}") from None
    profiles = {}
    for section in cp.sections():
        if not section.startswith("profile "):
            continue
        pname = section.split(None, 1)[1].strip()
        over = {}
        try:
            for k, v in cp[section].items():
                if k in _PROFILE_FLOATS:
                    over[k] = float(v)
                elif k in _PROFILE_INTS:
                    over[k] = int(v)
                else:
                    raise InvalidSpec(f"unknown profile key {k!r}")
            base = PRESETS.get(pname) or ProfileSpec(pname)
            profiles[pname] = replace(base, **over)
        except ValueError as exc:
            raise InvalidSpec(f"bad [{section}] section: {exc}") from None
    return shift, profiles
