"""Deterministic file outputs: CSV tables, run manifests, solution archives.

All CSV is UTF-8 with LF line endings, a header row, and floats printed with
17 significant digits so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .paths import TimeGrid
from .solver import DiscreteSolution


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def write_manifest(path: str, subcommand: str, config_echo: str,
                   seed: int, extra: Optional[Dict[str, object]] = None) -> None:
    import numpy
    from . import __version__
    lines = [
        "[run]",
        f"subcommand = {subcommand}",
        f"seed = {seed}",
        f"package_version = {__version__}",
        f"numpy_version = {numpy.__version__}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("# resolved configuration")
    lines.append(config_echo)
    write_text(path, "\n".join(lines))


def write_path_dump(path: str, bundle) -> None:
    """Per-(path, node) dump: path_id, node_index, t, B, L, H_1..H_m, A."""
    m = bundle.m
    header = ["path_id", "node_index", "t", "B", "L"] + \
        [f"H_{j}" for j in range(1, m + 1)] + ["A"]
    nodes = bundle.grid.nodes

    def rows():
        for p in range(bundle.n_paths):
            pid = int(bundle.path_ids[p])
            for i, t in enumerate(nodes):
                yield ([pid, i, t, bundle.B[p, i], bundle.L[p, i]]
                       + [bundle.H[p, i, j] for j in range(m)]
                       + [bundle.A[p, i]])
    write_csv(path, header, rows())


def write_reflected_dump(path: str, refl, path_ids) -> None:
    header = ["path_id", "node_index", "t", "X", "eta", "abs_eta", "on_boundary"]
    nodes = refl.grid.nodes

    def rows():
        for p in range(refl.X.shape[0]):
            for i, t in enumerate(nodes):
                yield [int(path_ids[p]), i, t, refl.X[p, i], refl.eta[p, i],
                       refl.abs_eta[p, i], bool(refl.on_boundary[p, i])]
    write_csv(path, header, rows())


def write_solver_report(path: str, solution: DiscreteSolution) -> None:
    """Node summary: (node, t, mean Y, sd Y, mean K, Skorokhod residual)."""
    nodes = solution.grid.nodes
    dK = solution.dK
    gap = solution.Y[:, :-1] - solution.obstacle_values[:, :-1]
    per_node_res = np.mean(gap * dK, axis=0)

    def rows():
        for i, t in enumerate(nodes):
            res = per_node_res[i] if i < len(per_node_res) else 0.0
            yield [i, t,
                   float(np.mean(solution.Y[:, i])),
                   float(np.std(solution.Y[:, i])),
                   float(np.mean(solution.K[:, i])),
                   float(res)]
    write_csv(path, ["node", "t", "mean_Y", "sd_Y", "mean_K", "skorokhod_residual"],
              rows())


def write_surface(path: str, surface) -> None:
    def rows():
        for ti, t in enumerate(surface.t_values):
            for xi, x in enumerate(surface.x_values):
                yield [t, x, surface.u[ti, xi], surface.stderr[ti, xi],
                       surface.obstacle_gap[ti, xi], surface.neumann_residual[ti, xi]]
    write_csv(path, ["t", "x", "u", "stderr", "u_minus_h", "neumann_residual"], rows())


def save_solution(path: str, solution: DiscreteSolution) -> None:
    np.savez(path, Y=solution.Y, Z=solution.Z, K=solution.K, state=solution.state,
             obstacle_values=solution.obstacle_values, nodes=solution.grid.nodes,
             meta=json.dumps({k: v for k, v in solution.meta.items()
                              if isinstance(v, (int, float, str, bool, list))}))


def load_solution(path: str) -> DiscreteSolution:
    data = np.load(path, allow_pickle=False)
    nodes = data["nodes"]
    grid = TimeGrid(float(nodes[0]), float(nodes[-1]), len(nodes) - 1)
    meta = json.loads(str(data["meta"])) if "meta" in data else {}
    return DiscreteSolution(grid=grid, Y=data["Y"], Z=data["Z"], K=data["K"],
                            state=data["state"], obstacle_values=data["obstacle_values"],
                            meta=meta)


def write_property_report(path: str, report) -> None:
    write_text(path, json.dumps(report.to_dict(), indent=2, sort_keys=True))


def ensure_dir(directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    return directory
