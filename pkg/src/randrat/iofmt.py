"""Delimited outputs, PPM images, and run manifests.

All writers are deterministic: floats use repr round-tripping, rows keep a
fixed order, and no timestamps are recorded.
"""

from __future__ import annotations

import os

import numpy as np

from . import __version__


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def measure_rows(mu):
    for v, i, w in zip(mu.values, mu.inf, mu.weights):
        yield (0.0 if i else v.real, 0.0 if i else v.imag, bool(i), w)


def write_measure_csv(path, mu):
    write_csv(path, ["re", "im", "is_inf", "weight"], measure_rows(mu))


def write_grid_csv(path, grid):
    rows = []
    for idx, (v, i, val) in enumerate(zip(grid.net.values, grid.net.inf, grid.values)):
        rows.append((idx, 0.0 if i else v.real, 0.0 if i else v.imag, bool(i),
                     float(np.real(val))))
    write_csv(path, ["index", "re", "im", "is_infinity", "value"], rows)


def write_net_csv(path, net, cell_index=None):
    rows = []
    for idx, (v, i) in enumerate(zip(net.values, net.inf)):
        row = [idx, 0.0 if i else v.real, 0.0 if i else v.imag, bool(i)]
        if cell_index is not None:
            row.append(int(cell_index[idx]))
        rows.append(tuple(row))
    header = ["index", "re", "im", "is_infinity"]
    if cell_index is not None:
        header.append("cell_index")
    write_csv(path, header, rows)


def write_trajectory_csv(path, traj):
    rows = []
    for n, (p, d) in enumerate(zip(traj.points, traj.derivatives)):
        rows.append((n, 0.0 if p.is_infinity else p.value.real,
                     0.0 if p.is_infinity else p.value.imag,
                     p.is_infinity, d))
    write_csv(path, ["n", "re", "im", "is_inf", "cum_deriv"], rows)


def write_branch_tree_csv(path, trees):
    """Branch trees as edge lists: depth, parent index, center point, weight."""
    rows = []
    for i, tr in enumerate(trees):
        index_of = {}
        for j in sorted(tr, reverse=True):
            for b in tr[j]:
                index_of[id(b)] = len(index_of)
        for j in sorted(tr, reverse=True):
            for b in tr[j]:
                p = b.base_value
                parent = index_of.get(id(b.parent), -1) if b.parent is not None else -1
                rows.append((i, j, index_of[id(b)], parent,
                             0.0 if p.is_infinity else p.value.real,
                             0.0 if p.is_infinity else p.value.imag,
                             p.is_infinity))
    write_csv(path, ["disk", "level", "index", "parent", "re", "im", "is_inf"], rows)


def write_ppm(path, rgb):
    """Binary P6 image from a (h, w, 3) uint8 array."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(rgb.tobytes())


def write_manifest(path, config, extra):
    """Run manifest: versions, seeds, resolutions, residuals.

    Only the canonical (content-affecting) configuration is echoed, so the
    manifest itself is reproducible across output locations.
    """
    lines = [f"randrat-version {__version__}",
             f"config-hash {config.content_hash()}"]
    lines += [f"config {line}" for line in config.canonical_text().splitlines()]
    for key in sorted(extra):
        lines.append(f"result {key} {_fmt(extra[key])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def output_path(outdir, stem, suffix, config):
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, f"{stem}_{config.content_hash()}.{suffix}")
