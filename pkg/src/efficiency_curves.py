"""
Sampled VR efficiency curves
Piecewise-linear in output current and output voltage, nearest match in input voltage,
exact match in VR power state.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from errors import EmptyCurve, NoMatchingPowerState
from pdn_core import PackagePowerState, VrPowerState

logger = logging.getLogger("pdnspot.curves")


@dataclass(frozen=True)
class CurveSample:
    v_in: float
    v_out: float
    i_out: float
    power_state: VrPowerState
    eta: float


@dataclass(frozen=True)
class CurveLine:
    """All samples sharing (v_in, v_out, power_state), sorted by current"""
    v_out: float
    i_out: Tuple[float, ...]
    eta: Tuple[float, ...]

    def at(self, i_out: float) -> Tuple[float, bool]:
        extrapolated = i_out < self.i_out[0] or i_out > self.i_out[-1]
        return float(np.interp(i_out, self.i_out, self.eta)), extrapolated


@dataclass(frozen=True)
class CurveLookup:
    eta: float
    extrapolated: bool = False


@dataclass(frozen=True)
class EfficiencyCurve:
    name: str
    lines: Mapping[Tuple[float, VrPowerState], Tuple[CurveLine, ...]] = field(default_factory=dict)

    @classmethod
    def from_samples(cls, name: str, samples: Iterable[CurveSample]) -> "EfficiencyCurve":
        grid: Dict[Tuple[float, VrPowerState, float], Dict[float, float]] = defaultdict(dict)
        for s in samples:
            if not 0.0 < s.eta <= 1.0:
                raise ValueError(f"curve {name}: eta {s.eta} outside (0, 1]")
            if s.i_out < 0 or s.v_out <= 0 or s.v_in <= 0:
                raise ValueError(f"curve {name}: non-physical sample {s}")
            key = (s.v_in, VrPowerState(s.power_state), s.v_out)
            if s.i_out in grid[key]:
                raise ValueError(f"curve {name}: duplicate sample at {key} i_out={s.i_out}")
            grid[key][s.i_out] = s.eta

        lines: Dict[Tuple[float, VrPowerState], List[CurveLine]] = defaultdict(list)
        for (v_in, ps, v_out), points in grid.items():
            if len(points) < 2:
                raise ValueError(f"curve {name}: grid line v_in={v_in} v_out={v_out} {ps.value} "
                                 f"needs at least 2 distinct i_out samples")
            currents = sorted(points)
            lines[(v_in, ps)].append(CurveLine(v_out, tuple(currents), tuple(points[i] for i in currents)))
        return cls(name, {k: tuple(sorted(v, key=lambda line: line.v_out)) for k, v in lines.items()})

    @classmethod
    def uniform(cls, name: str, eta: float, v_in: float = 1.0) -> "EfficiencyCurve":
        """A curve returning the same efficiency everywhere, for every power state"""
        samples = [CurveSample(v_in, v_out, i_out, ps, eta)
                   for ps in VrPowerState
                   for v_out in (0.1, 5.0)
                   for i_out in (0.0, 1000.0)]
        return cls.from_samples(name, samples)

    @property
    def power_states(self) -> List[VrPowerState]:
        return sorted({ps for _, ps in self.lines}, key=lambda ps: ps.level)

    def covers(self, v_in: float, i_out: float, ps: VrPowerState) -> bool:
        """Whether the sampled current range for ps holds i_out"""
        candidates = sorted(v for v, state in self.lines if state == ps)
        if not candidates:
            return False
        lines = self.lines[(min(candidates, key=lambda v: (abs(v - v_in), v)), ps)]
        return min(line.i_out[0] for line in lines) <= i_out <= max(line.i_out[-1] for line in lines)

    def lookup(self, v_in: float, v_out: float, i_out: float, ps: VrPowerState) -> CurveLookup:
        if not self.lines:
            raise EmptyCurve(f"curve {self.name} has no samples")
        ps = VrPowerState(ps)
        candidates = sorted(v for v, state in self.lines if state == ps)
        if not candidates:
            raise NoMatchingPowerState(f"curve {self.name} has no {ps.value} samples",
                                       {"curve": self.name, "power_state": ps.value})
        nearest_v_in = min(candidates, key=lambda v: (abs(v - v_in), v))
        lines = self.lines[(nearest_v_in, ps)]

        v_outs = [line.v_out for line in lines]
        clamped = v_out < v_outs[0] or v_out > v_outs[-1]
        hi = int(np.searchsorted(v_outs, v_out, side="left"))
        if hi == 0:
            lo = hi = 0
        elif hi >= len(lines):
            lo = hi = len(lines) - 1
        elif v_outs[hi] == v_out:
            lo = hi
        else:
            lo = hi - 1

        eta_lo, ext_lo = lines[lo].at(i_out)
        if lo == hi:
            eta, ext_hi = eta_lo, ext_lo
        else:
            eta_hi, ext_hi = lines[hi].at(i_out)
            weight = (v_out - v_outs[lo]) / (v_outs[hi] - v_outs[lo])
            eta = eta_lo + weight * (eta_hi - eta_lo)

        extrapolated = clamped or ext_lo or ext_hi
        if extrapolated:
            logger.debug("curve %s clamped at v_out=%.4f i_out=%.4f %s", self.name, v_out, i_out, ps.value)
        return CurveLookup(eta, extrapolated)


def curve_lookup(c: EfficiencyCurve, v_in: float, v_out: float, i_out: float,
                 ps: VrPowerState) -> CurveLookup:
    return c.lookup(v_in, v_out, i_out, ps)


def curve_efficiency(c: EfficiencyCurve, v_in: float, v_out: float, i_out: float,
                     ps: VrPowerState) -> float:
    """Efficiency at an operating point; out-of-range currents clamp to the curve edge"""
    return c.lookup(v_in, v_out, i_out, ps).eta


def select_vr_power_state(c: EfficiencyCurve, package_state: PackagePowerState,
                          v_in: float, v_out: float, i_out: float) -> VrPowerState:
    """Map a package power state to the VR power state the controller would run.

    Active states keep whichever of PS0/PS1 is more efficient at the present current. Only
    states whose sampled range holds that current compete. C2/C3 run PS1; deeper states drop
    to the lowest state the curve provides.
    """
    states = c.power_states
    if not states:
        raise EmptyCurve(f"curve {c.name} has no samples")
    package_state = PackagePowerState(package_state)
    if package_state in (PackagePowerState.C0, PackagePowerState.C0_MIN):
        active = [ps for ps in (VrPowerState.PS0, VrPowerState.PS1) if ps in states]
        if not active:
            return states[0]
        covering = [ps for ps in active if c.covers(v_in, i_out, ps)] or active
        return max(covering, key=lambda ps: (c.lookup(v_in, v_out, i_out, ps).eta, -ps.level))
    if package_state in (PackagePowerState.C2, PackagePowerState.C3):
        return VrPowerState.PS1 if VrPowerState.PS1 in states else states[-1]
    return states[-1]


CurvePack = Mapping[str, EfficiencyCurve]


def require_curve(pack: CurvePack, name: Optional[str]) -> EfficiencyCurve:
    if name is None or name not in pack:
        raise EmptyCurve(f"curve {name!r} is not in the curve pack", {"curve": name})
    return pack[name]
