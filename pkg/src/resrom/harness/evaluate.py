"""Validation metrics, grouped error analysis and report output."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core.dataset import Dataset
from ..core.errors import DivergenceError, ResromError
from .bundle import MetamodelBundle
from .forecast import forecast

FIELDS = ("pressure", "s_oil", "s_wat")
FLUIDS = ("oil", "water", "gas")
GROUP_KINDS = ("scheme", "control_form", "orientation")

# Reference row from the source experiment (different base model and
# scale; printed for context, never used as a target).
REFERENCE_ROW = (
    "reference (GRU+VAE, d_z=150, field-scale base model): "
    "p 8.0+-5.1%  s_oil 11.4+-6.2%  s_wat 6.7+-3.2%"
)


def field_relative_errors(pred: np.ndarray, true: np.ndarray) -> np.ndarray:
    """Per-field error 100 * sum_t ||pred-true||_2 / sum_t ||true||_2.

    pred/true: (T+1, 3, nx, ny, nz).
    """
    if pred.shape != true.shape:
        raise ResromError(f"shape mismatch {pred.shape} vs {true.shape}")
    diff = (pred - true).reshape(pred.shape[0], 3, -1).astype(np.float64)
    ref = true.reshape(true.shape[0], 3, -1).astype(np.float64)
    num = np.sqrt((diff**2).sum(axis=2)).sum(axis=0)  # (3,)
    den = np.sqrt((ref**2).sum(axis=2)).sum(axis=0)
    den = np.where(den > 0, den, 1.0)
    return 100.0 * num / den


def field_sq_errors(pred: np.ndarray, true: np.ndarray) -> tuple[np.ndarray, int]:
    diff = (pred - true).reshape(pred.shape[0], 3, -1).astype(np.float64)
    return (diff**2).sum(axis=(0, 2)), diff.shape[0] * diff.shape[2]


def rate_relative_errors(pred: np.ndarray, true: np.ndarray) -> list:
    """Per-fluid error (same ratio form); None when the truth is ~zero."""
    out = []
    for j in range(3):
        den = float(np.abs(true[:, j]).sum())
        if den < 1e-6 * max(1, true.shape[0]):
            out.append(None)
            continue
        out.append(100.0 * float(np.abs(pred[:, j] - true[:, j]).sum()) / den)
    return out


@dataclass
class EvalReport:
    n_scenarios: int
    n_failed: int
    field_err_mean: dict
    field_err_std: dict
    field_rmse: dict
    rate_err_mean: dict
    rate_groups: dict  # kind -> value -> fluid -> (mean, std, count)
    per_scenario: list
    wall_seconds: float = 0.0

    def to_text(self) -> str:
        lines = ["resrom evaluation report v1", ""]
        lines.append(
            f"scenarios = {self.n_scenarios} (diverged rollouts: {self.n_failed})"
        )
        lines.append(f"wall_seconds = {self.wall_seconds:.2f}")
        lines.append("")
        lines.append("state-field errors (mean +- std over scenarios, %):")
        for f in FIELDS:
            unit = "bar" if f == "pressure" else "-"
            lines.append(
                f"  {f:9s}: {self.field_err_mean[f]:7.2f} +- "
                f"{self.field_err_std[f]:6.2f} %   RMSE = "
                f"{self.field_rmse[f]:.4f} {unit}"
            )
        lines.append("")
        lines.append("production-rate errors (mean over scenarios, %):")
        for fl in FLUIDS:
            v = self.rate_err_mean.get(fl)
            lines.append(
                f"  {fl:6s}: " + (f"{v:7.2f} %" if v is not None else "   n/a")
            )
        lines.append("")
        lines.append("grouped rate errors (oil, %):")
        for kind in GROUP_KINDS:
            for value in sorted(self.rate_groups.get(kind, {})):
                cell = self.rate_groups[kind][value].get("oil")
                if cell is None:
                    continue
                mean, std, count = cell
                lines.append(
                    f"  {kind}={value:12s}: {mean:7.2f} +- {std:6.2f} %  (n={count})"
                )
        lines.append("")
        lines.append(REFERENCE_ROW)
        return "\n".join(lines) + "\n"

    def write_csv(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "per_scenario_errors.csv")
        cols = (
            ["index", "scheme", "control_form", "orientation", "status"]
            + [f"err_{f}" for f in FIELDS]
            + [f"rate_err_{fl}" for fl in FLUIDS]
        )
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(cols)
            for row in self.per_scenario:
                w.writerow([row.get(c, "") for c in cols])


def evaluate(
    bundle: MetamodelBundle,
    dataset: Dataset,
    verbose: bool = False,
    timeseries_dir: Optional[str] = None,
) -> EvalReport:
    """Forecast every validation scenario and aggregate the error metrics."""
    import sys
    import time

    t_start = time.perf_counter()
    per_scenario = []
    field_errs = {f: [] for f in FIELDS}
    sq_sum = np.zeros(3)
    sq_count = 0
    rate_errs = {fl: [] for fl in FLUIDS}
    groups = {
        kind: {} for kind in GROUP_KINDS
    }  # kind -> value -> fluid -> list
    n_failed = 0
    for i, scenario in enumerate(dataset.scenarios):
        if scenario.states is None or scenario.horizon < 1:
            continue
        true = scenario.states_tensor(np.float64)
        true_rates = scenario.rates_matrix()
        row = {
            "index": i,
            "scheme": scenario.tags.scheme,
            "control_form": scenario.tags.control_form,
            "orientation": scenario.tags.orientation,
        }
        try:
            states, rates = forecast(
                bundle, scenario.metadata, scenario.controls[: scenario.horizon]
            )
        except DivergenceError as e:
            n_failed += 1
            row["status"] = f"diverged@{e.step_index}"
            per_scenario.append(row)
            continue
        pred = np.stack([s.as_tensor(np.float64) for s in states])
        errs = field_relative_errors(pred, true)
        sq, cnt = field_sq_errors(pred, true)
        sq_sum += sq
        sq_count += cnt
        pred_rates = np.stack([r.as_vector() for r in rates])
        rerrs = rate_relative_errors(pred_rates, true_rates)
        row["status"] = "ok"
        for f, e in zip(FIELDS, errs):
            row[f"err_{f}"] = float(e)
            field_errs[f].append(float(e))
        for fl, e in zip(FLUIDS, rerrs):
            row[f"rate_err_{fl}"] = "" if e is None else float(e)
            if e is not None:
                rate_errs[fl].append(e)
                for kind in GROUP_KINDS:
                    value = row[kind]
                    groups[kind].setdefault(value, {}).setdefault(fl, []).append(e)
        per_scenario.append(row)
        if timeseries_dir is not None:
            _write_timeseries(timeseries_dir, i, true, pred, true_rates, pred_rates)
        if verbose:
            print(
                f"scenario {i}: p={errs[0]:.2f}% so={errs[1]:.2f}% sw={errs[2]:.2f}%",
                file=sys.stderr,
            )
    if not any(field_errs.values()):
        raise ResromError("no evaluable scenarios (empty validation set?)")
    rmse = np.sqrt(sq_sum / max(sq_count, 1))
    rate_groups = {}
    for kind, by_value in groups.items():
        rate_groups[kind] = {}
        for value, by_fluid in by_value.items():
            rate_groups[kind][value] = {}
            for fl, vals in by_fluid.items():
                arr = np.asarray(vals)
                rate_groups[kind][value][fl] = (
                    float(arr.mean()),
                    float(arr.std()),
                    int(arr.size),
                )
    return EvalReport(
        n_scenarios=len(per_scenario),
        n_failed=n_failed,
        field_err_mean={f: float(np.mean(v)) for f, v in field_errs.items()},
        field_err_std={f: float(np.std(v)) for f, v in field_errs.items()},
        field_rmse={f: float(r) for f, r in zip(FIELDS, rmse)},
        rate_err_mean={
            fl: (float(np.mean(v)) if v else None) for fl, v in rate_errs.items()
        },
        rate_groups=rate_groups,
        per_scenario=per_scenario,
        wall_seconds=time.perf_counter() - t_start,
    )


def _write_timeseries(out_dir, index, true, pred, true_rates, pred_rates):
    """Per-scenario CSV: field means over cells plus rates, per timestep,
    and a mid-layer slice of every field at the final timestep."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"timeseries_{index:05d}.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["t"]
            + [f"true_mean_{x}" for x in FIELDS]
            + [f"pred_mean_{x}" for x in FIELDS]
            + [f"true_rate_{x}" for x in FLUIDS]
            + [f"pred_rate_{x}" for x in FLUIDS]
        )
        T = true.shape[0]
        for t in range(T):
            row = [t]
            row += [float(true[t, c].mean()) for c in range(3)]
            row += [float(pred[t, c].mean()) for c in range(3)]
            if t < T - 1:
                row += [float(x) for x in true_rates[t]]
                row += [float(x) for x in pred_rates[t]]
            else:
                row += [""] * 6
            w.writerow(row)
    k_mid = true.shape[4] // 2
    slice_path = os.path.join(out_dir, f"slice_{index:05d}.csv")
    with open(slice_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["field", "kind", "row", "values..."])
        for c, name in enumerate(FIELDS):
            for kind, tens in (("true", true), ("pred", pred)):
                grid2d = tens[-1, c, :, :, k_mid]
                for r in range(grid2d.shape[0]):
                    w.writerow(
                        [name, kind, r] + [f"{v:.6g}" for v in grid2d[r]]
                    )
