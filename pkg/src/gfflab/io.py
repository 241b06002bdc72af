"""Readers and writers for the on-disk formats.

* ``GFFG 1`` graphs and ``GFFT 1`` triangulations: line-oriented UTF-8 text.
* ``FLD1`` fields: little-endian binary with a ``.meta`` text sidecar.
* CSV tables (Green's matrices, exploration traces, profiles, moments).
* 8-bit binary PGM (``P5``) heatmaps with min-max scaling.

Floats in text formats are printed with 17 significant digits so a write /
read round trip is exact.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .lattice import Triangulation, WeightedGraph
from .sampler import METHODS as FIELD_METHODS

FLOAT_FMT = "{:.17g}"
FLD_MAGIC = b"FLD1"
FLD_VERSION = 1


def _f(x: float) -> str:
    return FLOAT_FMT.format(float(x))


# ---------------------------------------------------------------- graphs


def format_graph(g: WeightedGraph) -> str:
    out = [f"GFFG 1 {g.n_vertices} {g.n_edges} {int(g.zero_mean_mode)}"]
    if g.grid_shape is not None:
        out.append("# grid_shape " + " ".join(str(s) for s in g.grid_shape))
    for v in range(g.n_vertices):
        if g.positions is None:
            out.append(f"V {v}")
        else:
            out.append(f"V {v} " + " ".join(_f(x) for x in g.positions[v]))
    out.extend(f"B {b}" for b in g.boundary)
    out.extend(f"E {u} {v} {_f(w)}" for (u, v), w in zip(g.edges.tolist(), g.weights))
    return "\n".join(out) + "\n"


def write_graph(g: WeightedGraph, path) -> None:
    Path(path).write_text(format_graph(g), encoding="utf-8")


def parse_graph(text: str, check_definite: bool = True) -> WeightedGraph:
    lines = [ln.strip() for ln in text.splitlines()]
    header = lines[0].split() if lines else []
    if len(header) != 5 or header[:2] != ["GFFG", "1"]:
        raise InvalidInputError("not a GFFG 1 file")
    n, m, zero_mean = int(header[2]), int(header[3]), header[4] == "1"
    positions: dict[int, list[float]] = {}
    boundary, edges, weights = [], [], []
    grid_shape = None
    for ln in lines[1:]:
        if not ln:
            continue
        if ln.startswith("#"):
            parts = ln[1:].split()
            if parts and parts[0] == "grid_shape":
                grid_shape = tuple(int(p) for p in parts[1:])
            continue
        tag, *rest = ln.split()
        if tag == "V":
            positions[int(rest[0])] = [float(x) for x in rest[1:]]
        elif tag == "B":
            boundary.append(int(rest[0]))
        elif tag == "E":
            edges.append((int(rest[0]), int(rest[1])))
            weights.append(float(rest[2]))
        else:
            raise InvalidInputError(f"unknown GFFG record {tag!r}")
    if len(edges) != m:
        raise InvalidInputError(f"header announces {m} edges, found {len(edges)}")
    pos = None
    if positions and all(positions.get(v) for v in range(n)):
        pos = np.array([positions[v] for v in range(n)])
    return WeightedGraph(
        n, np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(weights), boundary,
        positions=pos, zero_mean_mode=zero_mean, grid_shape=grid_shape, check_definite=check_definite,
    )


def read_graph(path, check_definite: bool = True) -> WeightedGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"), check_definite)


def format_triangulation(tri: Triangulation) -> str:
    out = [f"GFFT 1 {tri.n_vertices} {len(tri.triangles)}"]
    out.extend(f"V {v} {_f(x)} {_f(y)}" for v, (x, y) in enumerate(tri.vertices))
    out.extend(f"B {b}" for b in tri.boundary)
    out.extend(f"T {i} {j} {k}" for i, j, k in tri.triangles.tolist())
    return "\n".join(out) + "\n"


def write_triangulation(tri: Triangulation, path) -> None:
    Path(path).write_text(format_triangulation(tri), encoding="utf-8")


def parse_triangulation(text: str) -> Triangulation:
    lines = [ln.strip() for ln in text.splitlines()]
    header = lines[0].split() if lines else []
    if len(header) != 4 or header[:2] != ["GFFT", "1"]:
        raise InvalidInputError("not a GFFT 1 file")
    n, t = int(header[2]), int(header[3])
    verts = np.zeros((n, 2))
    boundary, tris = [], []
    for ln in lines[1:]:
        if not ln or ln.startswith("#"):
            continue
        tag, *rest = ln.split()
        if tag == "V":
            verts[int(rest[0])] = [float(rest[1]), float(rest[2])]
        elif tag == "B":
            boundary.append(int(rest[0]))
        elif tag == "T":
            tris.append([int(r) for r in rest[:3]])
        else:
            raise InvalidInputError(f"unknown GFFT record {tag!r}")
    if len(tris) != t:
        raise InvalidInputError(f"header announces {t} triangles, found {len(tris)}")
    return Triangulation(verts, np.array(tris, dtype=np.int64).reshape(-1, 3), boundary)


def read_triangulation(path) -> Triangulation:
    return parse_triangulation(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- fields


def encode_field(values, seed: int, method: str) -> bytes:
    values = np.asarray(values, dtype="<f8")
    if values.ndim != 1:
        raise InvalidInputError("FLD1 stores a single field")
    head = FLD_MAGIC + struct.pack("<IQQB", FLD_VERSION, len(values), int(seed), FIELD_METHODS.index(method))
    return head + values.tobytes()


def decode_field(data: bytes) -> tuple[np.ndarray, int, str]:
    if data[:4] != FLD_MAGIC:
        raise InvalidInputError("not an FLD1 file")
    version, n, seed, tag = struct.unpack_from("<IQQB", data, 4)
    if version != FLD_VERSION:
        raise InvalidInputError(f"unsupported FLD version {version}")
    offset = 4 + struct.calcsize("<IQQB")
    values = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(float)
    return values, seed, FIELD_METHODS[tag]


def write_field(sample, path, meta: dict | None = None) -> Path:
    """Write ``sample`` as FLD1 plus a ``.meta`` sidecar; returns the sidecar path."""
    path = Path(path)
    path.write_bytes(encode_field(sample.values, sample.seed, sample.method))
    info = {"method": sample.method, "n_vertices": sample.graph.n_vertices, "seed": sample.seed}
    info.update({k: v for k, v in sorted(sample.params.items())})
    info.update(meta or {})
    sidecar = path.with_name(path.name + ".meta")
    write_meta(info, sidecar)
    return sidecar


def read_field(path) -> tuple[np.ndarray, int, str]:
    return decode_field(Path(path).read_bytes())


def write_meta(info: dict, path) -> None:
    lines = [f"{k}: {v}" for k, v in info.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_meta(path) -> dict:
    out = {}
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        if ":" in ln:
            k, v = ln.split(":", 1)
            out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------- CSV


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return _f(x)
    return x


def write_csv(path, header, rows) -> None:
    Path(path).write_text(_csv_text([header] + [[_cell(c) for c in r] for r in rows]), encoding="utf-8")


def read_csv(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def write_green_csv(G, path) -> None:
    """Header row ``vertex, id_1, ..., id_n``; one row per vertex id."""
    ids = [int(v) for v in G.vertices]
    rows = [[ids[i]] + [_f(x) for x in G.matrix[i]] for i in range(len(ids))]
    write_csv(path, ["vertex"] + ids, rows)


def write_trace_csv(trace, path) -> None:
    values = np.asarray(trace.values)
    if values.ndim != 1:
        raise InvalidInputError("trace CSV stores a single exploration")
    write_csv(path, ["k", "t_k", "W_k"], [[k, _f(t), _f(w)] for k, (t, w) in enumerate(zip(trace.times, values))])


def write_profile_csv(profile, path) -> None:
    write_csv(path, ["t", "B", "A"], [[_f(t), _f(b), _f(a)] for t, b, a in zip(profile.t, profile.circle_means, profile.disc_means)])


# ---------------------------------------------------------------- PGM


def to_gray(image: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Linear min-max scaling to ``uint8``; returns the image and the range used."""
    img = np.asarray(image, dtype=float)
    lo, hi = float(np.nanmin(img)), float(np.nanmax(img))
    if hi > lo:
        scaled = np.round((np.nan_to_num(img, nan=lo) - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros(img.shape)
    return scaled.astype(np.uint8), lo, hi


def write_pgm(image: np.ndarray, path, meta: dict | None = None) -> Path:
    """Write a P5 heatmap and a ``.meta`` sidecar recording the scaling range."""
    gray, lo, hi = to_gray(image)
    if gray.ndim != 2:
        raise InvalidInputError("PGM needs a 2D image")
    rows, cols = gray.shape
    path = Path(path)
    path.write_bytes(f"P5\n{cols} {rows}\n255\n".encode("ascii") + gray.tobytes())
    info = {"scaling": "linear min-max", "min": _f(lo), "max": _f(hi)}
    info.update(meta or {})
    sidecar = path.with_name(path.name + ".meta")
    write_meta(info, sidecar)
    return sidecar


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise InvalidInputError("not a binary PGM")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise InvalidInputError("only 8-bit PGM supported")
    pixels = np.frombuffer(data[-rows * cols :], dtype=np.uint8)
    return pixels.reshape(rows, cols)
