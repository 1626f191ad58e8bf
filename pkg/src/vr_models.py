"""
VR power-conversion primitives
Guardband scaling, power-gate drop, load-line positioning and LDO efficiency.
All functions are pure.
"""

from dataclasses import dataclass
from typing import NamedTuple

from errors import DropoutViolation, NegativeGuardband, ZeroAr, ZeroPower
from pdn_core import DEFAULT_DELTA, DEFAULT_LEAKAGE_FRACTION, DomainLoad


@dataclass(frozen=True)
class GuardbandResult:
    """Power and voltage after a guardband, with the leakage split needed to scale it again"""
    p_gb: float
    v_eff: float
    f_leak: float = DEFAULT_LEAKAGE_FRACTION
    delta: float = DEFAULT_DELTA


class LoadLinePoint(NamedTuple):
    v_ll: float
    p_ll: float


def efficiency(p_out: float, p_loss: float) -> float:
    if p_out < 0 or p_loss < 0:
        raise ValueError(f"powers must be >= 0, got p_out={p_out} p_loss={p_loss}")
    total = p_out + p_loss
    if total == 0:
        raise ZeroPower("efficiency is undefined when no power flows")
    return p_out / total


def _scale_power(p: float, v: float, v_gb: float, f_leak: float, delta: float) -> float:
    ratio = (v + v_gb) / v
    return p * (f_leak * ratio ** delta + (1.0 - f_leak) * ratio ** 2)


def guardband_power(load: DomainLoad, v_gb: float) -> GuardbandResult:
    """Raise a domain's nominal point by a voltage guardband.

    Leakage power scales with the voltage ratio to the power delta, dynamic power with its square.
    """
    if v_gb < 0:
        raise NegativeGuardband(f"{load.domain}: guardband {v_gb} V is negative")
    return GuardbandResult(
        p_gb=_scale_power(load.p_nom, load.v_nom, v_gb, load.f_leak, load.delta),
        v_eff=load.v_nom + v_gb,
        f_leak=load.f_leak,
        delta=load.delta,
    )


def power_gate_drop(gb: GuardbandResult, r_pg: float) -> GuardbandResult:
    """Apply the extra voltage a power gate drops at the guardbanded current"""
    if r_pg < 0:
        raise ValueError(f"r_pg must be >= 0, got {r_pg}")
    if r_pg == 0:
        return gb
    v_pg = r_pg * gb.p_gb / gb.v_eff
    return GuardbandResult(
        p_gb=_scale_power(gb.p_gb, gb.v_eff, v_pg, gb.f_leak, gb.delta),
        v_eff=gb.v_eff + v_pg,
        f_leak=gb.f_leak,
        delta=gb.delta,
    )


def peak_power(p_d: float, ar: float) -> float:
    if ar <= 0:
        raise ZeroAr(f"application ratio must be > 0, got {ar}")
    return p_d / ar


def load_line_position(p_d: float, v_d: float, ar: float, r_ll: float) -> LoadLinePoint:
    """Raise the rail voltage so the peak current still meets v_d across the load-line"""
    p_peak = peak_power(p_d, ar)
    if v_d <= 0:
        raise ValueError(f"rail voltage must be > 0, got {v_d}")
    if r_ll < 0 or p_d < 0:
        raise ValueError(f"r_ll and p_d must be >= 0, got r_ll={r_ll} p_d={p_d}")
    v_ll = v_d + (p_peak / v_d) * r_ll
    return LoadLinePoint(v_ll=v_ll, p_ll=v_ll * (p_d / v_d))


def ldo_efficiency(v_out: float, v_in: float, i_effi: float) -> float:
    if v_out <= 0:
        raise ValueError(f"LDO output voltage must be > 0, got {v_out}")
    if v_out > v_in:
        raise DropoutViolation(f"LDO cannot regulate {v_out} V up from {v_in} V",
                               {"v_out": v_out, "v_in": v_in})
    return (v_out / v_in) * i_effi
