"""Random sampling of development units and control schedules."""
from __future__ import annotations

import numpy as np

from ..core.errors import GenerationError
from ..core.types import Control, GridSpec, Scenario, ScenarioTags
from ..basesim.props import CoreyParams
from .config import GeneratorConfig
from .layout import (
    ORIENTATIONS,
    SCHEMES,
    RawUnitRecord,
    fit_metadata_compressors,
    vectorize,
    wells_from_record,
)

FORMS = ("constant", "exponential", "sharp")


def _uniform(rng: np.random.Generator, rng_pair) -> float:
    return float(rng.uniform(rng_pair[0], rng_pair[1]))


def sample_unit(cfg: GeneratorConfig, grid: GridSpec, rng: np.random.Generator):
    """Draw one development unit; returns (record, wells, scheme tag)."""
    scheme = SCHEMES[int(rng.integers(3))]
    orientation = ORIENTATIONS[int(rng.integers(2))]

    # Porosity (scalar, truncated to physical values) and per-layer
    # log10-permeability via the conditional of the joint Gaussian.
    for attempt in range(cfg.max_redraws + 1):
        phi = float(rng.normal(cfg.poro_mean, cfg.poro_sd))
        if 0.01 < phi < 0.6:
            break
    else:
        raise GenerationError("porosity redraws exhausted (0.01 < phi < 0.6)")
    if cfg.poro_sd > 0:
        cond_mean = cfg.logperm_mean + (
            cfg.poro_logperm_corr * cfg.logperm_sd / cfg.poro_sd
        ) * (phi - cfg.poro_mean)
        cond_sd = cfg.logperm_sd * np.sqrt(
            max(0.0, 1.0 - cfg.poro_logperm_corr**2)
        )
    else:
        cond_mean, cond_sd = cfg.logperm_mean, cfg.logperm_sd
    logperm = rng.normal(cond_mean, cond_sd, size=grid.nz)
    perm_layers = 10.0**logperm

    corey = CoreyParams(
        s_wc=_uniform(rng, cfg.s_wc),
        s_or=_uniform(rng, cfg.s_or),
        n_w=_uniform(rng, cfg.n_w),
        n_o=_uniform(rng, cfg.n_o),
        k_rw_max=_uniform(rng, cfg.k_rw_max),
        k_ro_max=_uniform(rng, cfg.k_ro_max),
    )

    c_r = _uniform(rng, cfg.c_r)
    c_o = _uniform(rng, cfg.c_o)
    c_w = _uniform(rng, cfg.c_w)
    for attempt in range(cfg.max_redraws + 1):
        if c_r > max(c_o, c_w):
            break
        c_r = _uniform(rng, cfg.c_r)
        c_o = _uniform(rng, cfg.c_o)
        c_w = _uniform(rng, cfg.c_w)
    else:
        raise GenerationError(
            "compressibility redraws exhausted (need c_r > max(c_o, c_w))"
        )

    depth_top = _uniform(rng, cfg.depth_top)
    size_z = _uniform(rng, cfg.size_z)
    p_sat = _uniform(rng, cfg.p_sat)
    p_init = _uniform(rng, cfg.p_grad) * depth_top
    for attempt in range(cfg.max_redraws + 1):
        if p_init > p_sat + cfg.p_sat_margin:
            break
        p_sat = _uniform(rng, cfg.p_sat)
        p_init = _uniform(rng, cfg.p_grad) * depth_top
    else:
        raise GenerationError(
            "pressure redraws exhausted (need p_init > p_sat + margin)"
        )

    nz, nx = grid.nz, grid.nx
    if orientation == "vertical":
        l_min = max(1, int(np.ceil(nz * cfg.vert_perf_min_frac)))
        prod_len = int(rng.integers(l_min, nz + 1))
        prod_start = int(rng.integers(0, nz - prod_len + 1))
        inj_len = int(rng.integers(l_min, nz + 1))
        inj_start = int(rng.integers(0, nz - inj_len + 1))
    else:
        lo = max(1, int(np.floor(nx * cfg.horiz_perf_frac[0])))
        hi = max(lo, int(np.floor(nx * cfg.horiz_perf_frac[1])))
        prod_len = int(rng.integers(lo, hi + 1))
        prod_start = 0
        inj_len = int(rng.integers(lo, hi + 1))
        inj_start = nx - inj_len
    if scheme == "no_injection":
        inj_start = inj_len = 0

    record = RawUnitRecord(
        c_r=c_r,
        c_o=c_o,
        c_w=c_w,
        c_g=_uniform(rng, cfg.c_g),
        rho_o=_uniform(rng, cfg.rho_o),
        rho_w=_uniform(rng, cfg.rho_w),
        mu_o=float(np.exp(rng.normal(cfg.mu_o_log[0], cfg.mu_o_log[1]))),
        mu_w=float(np.exp(rng.normal(cfg.mu_w_log[0], cfg.mu_w_log[1]))),
        b_o=_uniform(rng, cfg.b_o),
        b_w=_uniform(rng, cfg.b_w),
        b_g=_uniform(rng, cfg.b_g),
        gamma=_uniform(rng, cfg.gamma),
        phi_ref=phi,
        p_init=p_init,
        p_sat=p_sat,
        depth_top=depth_top,
        woc_depth=depth_top + _uniform(rng, cfg.woc_frac) * size_z,
        size_x=_uniform(rng, cfg.size_x),
        size_y=_uniform(rng, cfg.size_y),
        size_z=size_z,
        perm_layers=perm_layers,
        corey=corey,
        scheme=scheme,
        orientation=orientation,
        prod_perf_start=prod_start,
        prod_perf_len=prod_len,
        inj_perf_start=inj_start,
        inj_perf_len=inj_len,
    )
    return record, wells_from_record(record, grid), scheme


def _form_levels(rng, lo, hi, inj_range, with_injection):
    bhp = float(rng.uniform(lo, hi))
    inj = float(rng.uniform(*inj_range)) if with_injection else 0.0
    return bhp, inj


def sample_controls(
    cfg: GeneratorConfig,
    horizon: int,
    rng: np.random.Generator,
    bhp_lo: float,
    bhp_hi: float,
    with_injection: bool,
):
    """Draw one control schedule; returns (controls, form tag)."""
    if horizon < 1:
        raise GenerationError("horizon must be >= 1")
    form = FORMS[int(rng.choice(3, p=np.asarray(cfg.form_weights)))]
    t = np.arange(horizon, dtype=np.float64)
    if form == "constant":
        bhp0, inj0 = _form_levels(rng, bhp_lo, bhp_hi, cfg.inj_rate, with_injection)
        bhp = np.full(horizon, bhp0)
        inj = np.full(horizon, inj0)
    elif form == "exponential":
        bhp0, inj0 = _form_levels(rng, bhp_lo, bhp_hi, cfg.inj_rate, with_injection)
        bhp1, inj1 = _form_levels(rng, bhp_lo, bhp_hi, cfg.inj_rate, with_injection)
        tau = _uniform(rng, cfg.exp_tau)
        decay = np.exp(-t / tau)
        bhp = bhp1 + (bhp0 - bhp1) * decay
        inj = inj1 + (inj0 - inj1) * decay
    else:  # sharp
        n_cp = int(
            rng.integers(cfg.sharp_changes[0], cfg.sharp_changes[1] + 1)
        )
        n_cp = min(n_cp, horizon - 1) if horizon > 1 else 0
        times = (
            np.sort(rng.choice(np.arange(1, horizon), size=n_cp, replace=False))
            if n_cp
            else np.array([], dtype=int)
        )
        bounds = np.concatenate([[0], times, [horizon]]).astype(int)
        bhp = np.empty(horizon)
        inj = np.empty(horizon)
        for a, b in zip(bounds[:-1], bounds[1:]):
            lvl_bhp, lvl_inj = _form_levels(
                rng, bhp_lo, bhp_hi, cfg.inj_rate, with_injection
            )
            bhp[a:b] = lvl_bhp
            inj[a:b] = lvl_inj
    controls = [Control(float(b), float(i)) for b, i in zip(bhp, inj)]
    return controls, form


def generate_scenarios(
    cfg: GeneratorConfig,
    grid: GridSpec,
    n: int,
    horizon: int,
    dt_days: float,
    seed,
    k_perm: int,
    k_tab: int,
):
    """Sample n scenarios plus the fitted metadata codec (deterministic)."""
    if n < max(k_perm, k_tab) + 1:
        raise GenerationError(
            f"need at least {max(k_perm, k_tab) + 1} scenarios to fit compressors"
        )
    seqs = np.random.SeedSequence(seed).spawn(n)
    records, all_controls, forms = [], [], []
    for child in seqs:
        rng = np.random.Generator(np.random.PCG64(child))
        record, _wells, scheme = sample_unit(cfg, grid, rng)
        bhp_lo = max(cfg.bhp_frac[0] * record.p_init, record.p_sat + cfg.p_sat_margin)
        bhp_hi = cfg.bhp_frac[1] * record.p_init
        if bhp_hi <= bhp_lo:
            bhp_hi = bhp_lo * 1.05
        controls, form = sample_controls(
            cfg,
            horizon,
            rng,
            bhp_lo,
            bhp_hi,
            with_injection=scheme != "no_injection",
        )
        records.append(record)
        all_controls.append(controls)
        forms.append(form)
    codec = fit_metadata_compressors(records, grid.nz, k_perm, k_tab)
    scenarios = []
    for record, controls, form in zip(records, all_controls, forms):
        meta = vectorize(record, codec, grid, cfg)
        tags = ScenarioTags(
            scheme=record.scheme, control_form=form, orientation=record.orientation
        )
        scenarios.append(
            Scenario(metadata=meta, controls=tuple(controls), dt_days=dt_days, tags=tags)
        )
    return scenarios, codec
