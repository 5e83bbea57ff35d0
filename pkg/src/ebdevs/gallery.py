"""Named model configurations used by the harness and the command line."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable

from .models.boids import BOIDS_COLUMNS, BoidsParams, boids_observe, build_boids
from .models.mito import MITO_COLUMNS, MitoParams, build_mito, mito_observe
from .models.sir import SIR_COLUMNS, SirParams, build_sir, sir_observe


class ConfigError(ValueError):
    """Unknown model, unknown parameter key or invalid parameter value."""


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    description: str
    params_cls: type
    defaults: dict
    builder: Callable[..., Any]
    observe: Callable[[Any], tuple]
    columns: tuple
    sample_dt: float
    size_field: str

    def params(self, overrides: dict | None = None, size: int | None = None):
        values = dict(self.defaults)
        known = {f.name for f in dataclasses.fields(self.params_cls)}
        for key, value in (overrides or {}).items():
            if key not in known:
                raise ConfigError(f"model {self.name!r} has no parameter {key!r}")
            values[key] = value
        if size is not None:
            values.update(_size_values(self, size))
        try:
            return self.params_cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad parameters for {self.name!r}: {exc}") from exc

    def build(self, params, seed: int, stream: int = 0):
        return self.builder(params, seed, stream)


def _size_values(entry: GalleryEntry, size: int) -> dict:
    if size < 1:
        raise ConfigError("size must be >= 1")
    if entry.size_field == "total_mass":
        # A pool of `size` agents holds at most size * m_min of mass.
        return {"total_mass": size * MitoParams.m_min, "pool_size": size}
    return {entry.size_field: size}


GALLERY: dict[str, GalleryEntry] = {
    e.name: e
    for e in (
        GalleryEntry("sir-cm", "agent-based SIR on a configuration-model network",
                     SirParams, {}, build_sir, sir_observe, SIR_COLUMNS, 1.0, "n"),
        GalleryEntry("sir-cm-v", "SIR with growth-triggered vaccination",
                     SirParams, {"vaccination": True}, build_sir, sir_observe, SIR_COLUMNS,
                     1.0, "n"),
        GalleryEntry("boids", "flocking birds on a torus",
                     BoidsParams, {}, build_boids, boids_observe, BOIDS_COLUMNS, 1.0, "n_birds"),
        GalleryEntry("boids-fa", "flocking with anti-cohesion when few clusters remain",
                     BoidsParams, {"variant": "fa"}, build_boids, boids_observe, BOIDS_COLUMNS,
                     1.0, "n_birds"),
        GalleryEntry("boids-ba", "flocking with bounded anti-cohesion and super-cohesion",
                     BoidsParams, {"variant": "ba"}, build_boids, boids_observe, BOIDS_COLUMNS,
                     1.0, "n_birds"),
        GalleryEntry("mito", "mitochondrial fusion and fission in a cell",
                     MitoParams, {}, build_mito, mito_observe, MITO_COLUMNS, 300.0, "total_mass"),
    )
}


def get_model(name: str) -> GalleryEntry:
    try:
        return GALLERY[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {', '.join(GALLERY)}") from None
