"""Generator configuration: distribution families fitted per property group.

Porosity and log10-permeability are jointly Gaussian (positively
correlated), viscosities log-Gaussian, and everything else Uniform over
closed ranges. Defaults are desk-scale values chosen from standard
reservoir-engineering ranges; the Monte-Carlo statistics tests check the
generator against these numbers. Ranges keep rock compressibility above
fluid compressibilities so the reference-volume storage term stays
positive, and pressures comfortably above saturation pressure so the
unit stays undersaturated.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..core.errors import ConfigError


def _pair(lo: float, hi: float) -> tuple:
    return (float(lo), float(hi))


@dataclass(frozen=True)
class GeneratorConfig:
    # joint Gaussian over (porosity, log10 permeability [mD])
    poro_mean: float = 0.2
    poro_sd: float = 0.04
    logperm_mean: float = 2.0
    logperm_sd: float = 0.5
    poro_logperm_corr: float = 0.7

    # log-Gaussian viscosities [cP]: (mean, sd) of ln(mu)
    mu_o_log: tuple = (1.1, 0.45)
    mu_w_log: tuple = (-0.7, 0.2)

    # Uniform ranges
    rho_o: tuple = (700.0, 900.0)  # kg/m3
    rho_w: tuple = (1000.0, 1100.0)
    c_r: tuple = (1.5e-4, 3.0e-4)  # 1/bar
    c_o: tuple = (5.0e-5, 1.1e-4)
    c_w: tuple = (3.0e-5, 4.5e-5)
    c_g: tuple = (1.0e-3, 5.0e-3)
    b_o: tuple = (1.05, 1.3)  # rm3/sm3
    b_w: tuple = (1.0, 1.05)
    b_g: tuple = (0.004, 0.02)
    gamma: tuple = (20.0, 120.0)  # sm3/sm3
    depth_top: tuple = (1500.0, 2500.0)  # m
    size_x: tuple = (300.0, 600.0)  # m
    size_y: tuple = (450.0, 900.0)
    size_z: tuple = (8.0, 24.0)
    woc_frac: tuple = (0.5, 1.5)  # WOC depth = top + frac * size_z
    p_grad: tuple = (0.095, 0.115)  # bar/m; p_init = grad * depth_top
    p_sat: tuple = (30.0, 80.0)  # bar
    p_sat_margin: float = 10.0  # required p - p_sat clearance, bar

    # Corey relative permeability
    s_wc: tuple = (0.1, 0.25)
    s_or: tuple = (0.1, 0.25)
    n_w: tuple = (1.5, 3.0)
    n_o: tuple = (1.5, 3.0)
    k_rw_max: tuple = (0.3, 0.6)
    k_ro_max: tuple = (0.7, 1.0)

    # perforation geometry (cell counts; fractions of the axis length)
    vert_perf_min_frac: float = 0.5  # of nz
    horiz_perf_frac: tuple = (0.25, 0.5)  # of nx

    # controls
    bhp_frac: tuple = (0.4, 0.8)  # of p_init
    inj_rate: tuple = (10.0, 50.0)  # m3/day at reference conditions
    exp_tau: tuple = (3.0, 40.0)  # steps
    sharp_changes: tuple = (1, 5)  # change-point count (inclusive)
    form_weights: tuple = (1 / 3, 1 / 3, 1 / 3)  # constant, exponential, sharp

    max_redraws: int = 100

    def __post_init__(self):
        cov = self.poro_logperm_cov()
        if np.any(np.linalg.eigvalsh(cov) < 0):
            raise ConfigError("porosity/log-perm covariance not PSD")
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if (
                isinstance(v, tuple)
                and len(v) == 2
                and f_.name not in ("mu_o_log", "mu_w_log")
            ):
                if not v[0] < v[1] and f_.name != "sharp_changes":
                    raise ConfigError(f"degenerate range for {f_.name}: {v}")
        if self.sharp_changes[0] > self.sharp_changes[1]:
            raise ConfigError("sharp_changes range inverted")
        w = np.asarray(self.form_weights, dtype=np.float64)
        if w.size != 3 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ConfigError("form_weights must be 3 nonnegative values summing to 1")

    def poro_logperm_cov(self) -> np.ndarray:
        c = self.poro_logperm_corr * self.poro_sd * self.logperm_sd
        return np.array(
            [[self.poro_sd**2, c], [c, self.logperm_sd**2]], dtype=np.float64
        )

    def with_overrides(self, raw: dict) -> "GeneratorConfig":
        """Apply raw string overrides from the [generator] config section."""
        updates = {}
        valid = {f_.name: getattr(self, f_.name) for f_ in fields(self)}
        for key, value in raw.items():
            if key not in valid:
                raise ConfigError(f"unknown generator key {key!r}")
            cur = valid[key]
            if isinstance(cur, tuple):
                parts = [x.strip() for x in str(value).split(",") if x.strip()]
                if len(parts) != len(cur):
                    raise ConfigError(
                        f"generator key {key} expects {len(cur)} values"
                    )
                kind = type(cur[0])
                updates[key] = tuple(kind(x) for x in parts)
            elif isinstance(cur, int) and not isinstance(cur, bool):
                updates[key] = int(value)
            else:
                updates[key] = float(value)
        return replace(self, **updates)
