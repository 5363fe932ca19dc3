"""Procedural forward models: theta -> per-pixel material maps."""

from .base import (DIELECTRIC_F0, MaterialMaps, Model, RandomInputs,
                   SpecularLobe)
from .flakes import FlakesModel
from .opaque import BrushedMetalModel, BumpModel, LeatherModel, PlasterModel
from .translucent import TranslucentDemoModel
from .wood import WoodModel

MODELS = {m.name: m for m in (
    BumpModel(), LeatherModel(), PlasterModel(),
    BrushedMetalModel(), FlakesModel(), WoodModel(),
    TranslucentDemoModel(),
)}


def get_model(name: str) -> Model:
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown material model {name!r}; "
                       f"available: {', '.join(sorted(MODELS))}") from None


__all__ = [
    "DIELECTRIC_F0", "MODELS", "MaterialMaps", "Model", "RandomInputs",
    "SpecularLobe", "get_model",
    "BumpModel", "LeatherModel", "PlasterModel", "BrushedMetalModel",
    "FlakesModel", "WoodModel", "TranslucentDemoModel",
]
