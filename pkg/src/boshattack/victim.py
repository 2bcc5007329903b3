"""Hard-label victim models.

Every model exposes ``label(x)``, a pure uncounted evaluation. Attack code must
go through :func:`predict`, which charges one query to a :class:`QueryLedger`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class ModelFormatError(ValueError):
    """A model file is malformed or internally inconsistent."""


class LandscapeGenerationError(RuntimeError):
    pass


@dataclass
class QueryLedger:
    """Monotone counter of hard-label queries."""

    count: int = 0

    def charge(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("ledger can only grow")
        self.count += n


def _as_input(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != d:
        raise ValueError(f"input has shape {x.shape}, model expects ({d},)")
    return x


@dataclass(frozen=True)
class MlpModel:
    """Feed-forward rectifier network with argmax output."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ModelFormatError("mlp needs at least one layer with matching weights and biases")
        prev = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2:
                raise ModelFormatError(f"layers[{i}].w must be a matrix")
            if b.shape != (w.shape[0],):
                raise ModelFormatError(f"layers[{i}].b has length {b.shape[0]}, expected {w.shape[0]}")
            if prev is not None and w.shape[1] != prev:
                raise ModelFormatError(
                    f"layers[{i}].w rows have length {w.shape[1]}, previous layer width is {prev}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ModelFormatError(f"layers[{i}] has non-finite parameters")
            prev = w.shape[0]

    @property
    def dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]

    def logits(self, x) -> np.ndarray:
        h = _as_input(x, self.dim)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = w @ h + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def label(self, x) -> int:
        return int(np.argmax(self.logits(x)))

    def to_dict(self) -> dict:
        return {
            "type": "mlp",
            "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in zip(self.weights, self.biases)],
        }


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; node 0 is the root.

    Internal nodes are ``(feature, threshold, left, right)`` and route
    ``x[feature] <= threshold`` to the left child. Leaves hold a score.
    """

    nodes: tuple[Union[tuple[int, float, int, int], float], ...]
    cls: int = 0

    def score(self, x: np.ndarray) -> float:
        node = self.nodes[0]
        while isinstance(node, tuple):
            feat, thr, left, right = node
            node = self.nodes[left if x[feat] <= thr else right]
        return node


@dataclass(frozen=True)
class GbdtModel:
    trees: tuple[Tree, ...]
    num_classes: int
    dim: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ModelFormatError("num_classes must be at least 2")
        for t_idx, tree in enumerate(self.trees):
            if not 0 <= tree.cls < self.num_classes:
                raise ModelFormatError(f"trees[{t_idx}].class={tree.cls} out of range")
            _check_tree(tree, t_idx, self.dim)

    def scores(self, x) -> np.ndarray:
        x = _as_input(x, self.dim)
        out = np.zeros(self.num_classes)
        for tree in self.trees:
            out[tree.cls] += tree.score(x)
        return out

    def label(self, x) -> int:
        s = self.scores(x)
        if self.num_classes == 2:
            # binary ensembles carry a single margin
            return int(s.sum() > 0)
        return int(np.argmax(s))

    def to_dict(self) -> dict:
        trees = []
        for tree in self.trees:
            nodes = []
            for node in tree.nodes:
                if isinstance(node, tuple):
                    f, t, l, r = node
                    nodes.append({"feat": f, "thr": t, "left": l, "right": r})
                else:
                    nodes.append({"leaf": node})
            trees.append({"class": tree.cls, "nodes": nodes})
        return {"type": "gbdt", "num_classes": self.num_classes, "dim": self.dim, "trees": trees}


def _check_tree(tree: Tree, t_idx: int, dim: int) -> None:
    n = len(tree.nodes)
    if n == 0:
        raise ModelFormatError(f"trees[{t_idx}] has no nodes")
    seen = set()
    stack = [0]
    while stack:
        i = stack.pop()
        if i in seen:
            raise ModelFormatError(f"trees[{t_idx}] node {i} is reachable twice")
        seen.add(i)
        node = tree.nodes[i]
        if isinstance(node, tuple):
            feat, _, left, right = node
            if not 0 <= feat < dim:
                raise ModelFormatError(f"trees[{t_idx}].nodes[{i}].feat={feat} not below d={dim}")
            for child in (left, right):
                if not 0 < child < n:
                    raise ModelFormatError(f"trees[{t_idx}].nodes[{i}] child {child} out of range")
                stack.append(child)


@dataclass(frozen=True)
class Basin:
    center: np.ndarray
    radius: float
    label: int


@dataclass(frozen=True)
class SyntheticLandscape:
    """Union of balls with flipped labels over a constant base label.

    Points on or inside a ball take the label of the first ball containing
    them. ``ground_truth`` is the exact minimum adversarial distance from
    ``x0`` when both are known.
    """

    d: int
    base_label: int
    basins: tuple[Basin, ...]
    x0: np.ndarray | None = None
    ground_truth: float | None = None

    def __post_init__(self):
        for i, b in enumerate(self.basins):
            if b.center.shape != (self.d,):
                raise ModelFormatError(f"basins[{i}].center has length {b.center.shape[0]}, expected d={self.d}")
            if not b.radius > 0:
                raise ModelFormatError(f"basins[{i}].radius must be positive")
        if self.x0 is not None and self.x0.shape != (self.d,):
            raise ModelFormatError(f"x0 has length {self.x0.shape[0]}, expected d={self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def num_classes(self) -> int:
        return max([self.base_label] + [b.label for b in self.basins]) + 1

    def label(self, x) -> int:
        x = _as_input(x, self.d)
        for b in self.basins:
            diff = x - b.center
            if diff @ diff <= b.radius * b.radius:
                return b.label
        return self.base_label

    def ray_distance(self, x0, u) -> float | None:
        """Closed-form distance along ``u`` from ``x0`` to the first ball surface.

        Returns None if the ray misses every ball. Only meaningful when ``x0``
        is outside all balls.
        """
        x0 = np.asarray(x0, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        u = u / np.linalg.norm(u)
        best = None
        for b in self.basins:
            oc = b.center - x0
            proj = u @ oc
            disc = proj * proj - (oc @ oc - b.radius * b.radius)
            if proj <= 0 or disc < 0:
                continue
            root = proj - np.sqrt(disc)
            if best is None or root < best:
                best = root
        return best

    def min_distance(self, x0) -> float:
        x0 = np.asarray(x0, dtype=np.float64)
        return max(0.0, min(float(np.linalg.norm(b.center - x0)) - b.radius for b in self.basins))

    def to_dict(self) -> dict:
        out = {
            "type": "landscape",
            "d": self.d,
            "base_label": self.base_label,
            "basins": [
                {"center": b.center.tolist(), "radius": b.radius, "label": b.label} for b in self.basins
            ],
        }
        if self.ground_truth is not None:
            out["ground_truth"] = self.ground_truth
        if self.x0 is not None:
            out["x0"] = self.x0.tolist()
        return out


VictimModel = Union[MlpModel, GbdtModel, SyntheticLandscape]


def predict(model: VictimModel, x, ledger: QueryLedger) -> int:
    """Hard label of ``x``; charges exactly one query."""
    y = model.label(x)
    ledger.charge()
    return y


def _field(doc: dict, key: str, where: str):
    if key not in doc:
        raise ModelFormatError(f"{where}: missing field '{key}'")
    return doc[key]


def _array(value, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{where}: not a numeric array") from exc
    if arr.ndim != ndim:
        raise ModelFormatError(f"{where}: expected {ndim}-d array, got shape {arr.shape}")
    return arr


def model_from_dict(doc: dict) -> VictimModel:
    kind = _field(doc, "type", "model")
    if kind == "mlp":
        layers = _field(doc, "layers", "mlp")
        ws, bs = [], []
        for i, layer in enumerate(layers):
            ws.append(_array(_field(layer, "w", f"layers[{i}]"), f"layers[{i}].w", 2))
            bs.append(_array(_field(layer, "b", f"layers[{i}]"), f"layers[{i}].b", 1))
        return MlpModel(tuple(ws), tuple(bs))
    if kind == "gbdt":
        num_classes = int(_field(doc, "num_classes", "gbdt"))
        trees = []
        max_feat = -1
        for t_idx, t in enumerate(_field(doc, "trees", "gbdt")):
            nodes = []
            for n_idx, n in enumerate(_field(t, "nodes", f"trees[{t_idx}]")):
                where = f"trees[{t_idx}].nodes[{n_idx}]"
                if "leaf" in n:
                    nodes.append(float(n["leaf"]))
                else:
                    feat = int(_field(n, "feat", where))
                    nodes.append(
                        (feat, float(_field(n, "thr", where)), int(_field(n, "left", where)), int(_field(n, "right", where)))
                    )
                    max_feat = max(max_feat, feat)
            trees.append(Tree(tuple(nodes), int(t.get("class", 0))))
        dim = int(doc["dim"]) if "dim" in doc else max_feat + 1
        return GbdtModel(tuple(trees), num_classes, dim)
    if kind == "landscape":
        d = int(_field(doc, "d", "landscape"))
        basins = []
        for i, b in enumerate(_field(doc, "basins", "landscape")):
            where = f"basins[{i}]"
            basins.append(
                Basin(
                    _array(_field(b, "center", where), f"{where}.center", 1),
                    float(_field(b, "radius", where)),
                    int(_field(b, "label", where)),
                )
            )
        x0 = _array(doc["x0"], "x0", 1) if "x0" in doc else None
        gt = float(doc["ground_truth"]) if doc.get("ground_truth") is not None else None
        return SyntheticLandscape(d, int(_field(doc, "base_label", "landscape")), tuple(basins), x0, gt)
    raise ModelFormatError(f"model: unknown type {kind!r}")


def load_model(path) -> VictimModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    return model_from_dict(doc)


def save_model(model: VictimModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1))


def _random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def gen_landscape(
    seed: int,
    d: int,
    num_basins: int,
    dist_range: tuple[float, float],
    radius_range: tuple[float, float],
    x0: Sequence[float] | None = None,
    base_label: int = 0,
    flip_label: int = 1,
    max_retries: int = 1000,
) -> tuple[SyntheticLandscape, float]:
    """Random landscape with ``num_basins`` balls around ``x0``.

    Each ball's center lies at a distance drawn from ``dist_range`` along a
    uniform random direction and its radius is drawn from ``radius_range``.
    Draws that would put ``x0`` inside a ball are redrawn.
    """
    lo_d, hi_d = dist_range
    lo_r, hi_r = radius_range
    if not (0 < lo_d < hi_d and 0 < lo_r < hi_r):
        raise ValueError("ranges must be positive with min < max")
    if num_basins < 1:
        raise ValueError("need at least one basin")
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64)
    rng = np.random.default_rng(seed)
    basins = []
    for _ in range(num_basins):
        for _ in range(max_retries):
            dist = rng.uniform(lo_d, hi_d)
            radius = rng.uniform(lo_r, hi_r)
            center = x0 + dist * _random_unit(rng, d)
            if radius < dist:
                break
        else:
            raise LandscapeGenerationError(
                f"could not place a ball excluding x0 after {max_retries} draws"
            )
        basins.append(Basin(center, float(radius), flip_label))
    land = SyntheticLandscape(d, base_label, tuple(basins), x0)
    gt = land.min_distance(x0)
    land = SyntheticLandscape(d, base_label, tuple(basins), x0, gt)
    return land, gt
