"""Model files: a small JSON document a fitted model round-trips through.

Two model kinds exist: "tree" (an expression tree plus its linear-scaling
pair) and "it" (a weighted sum of transformed monomials, self-contained).
A run that produced no model writes kind "none".  The document keeps enough
structure that a loaded model supports prediction, interval images and
derivatives, so audits can be re-run later.
"""

from __future__ import annotations

import json
from typing import Optional

from .exprtree import TreeModel, parse_text, to_text
from .fitness import ScaledModel
from .itea import ITExpression

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model"]


def model_to_dict(model) -> dict:
    if model is None:
        return {"kind": "none"}
    if isinstance(model, ScaledModel):
        if not isinstance(model.inner, TreeModel):
            raise TypeError(f"cannot serialize scaled {type(model.inner).__name__}")
        return {
            "kind": "tree",
            "expression": to_text(model.inner.expr),
            "offset": float(model.offset),
            "scale": float(model.scale),
        }
    if isinstance(model, TreeModel):
        return {
            "kind": "tree",
            "expression": to_text(model.expr),
            "offset": 0.0,
            "scale": 1.0,
        }
    if isinstance(model, ITExpression):
        return {"kind": "it", **model.to_dict()}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "none":
        return None
    if kind == "tree":
        inner = TreeModel(parse_text(doc["expression"]))
        return ScaledModel(inner, float(doc["offset"]), float(doc["scale"]))
    if kind == "it":
        return ITExpression.from_dict(doc)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str, **metadata) -> None:
    """Write the model document; extra keyword fields (problem, seed, ...)
    are stored under "meta"."""
    doc = model_to_dict(model)
    if metadata:
        doc["meta"] = metadata
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> tuple[Optional[object], dict]:
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_dict(doc), doc.get("meta", {})
