"""Domain -> mesh -> extrapolated spectrum, with an in-process cache."""

from __future__ import annotations

import json
from functools import lru_cache

from .domain import Domain, DomainSpec, generate_domain, invariants
from .eigen import SpectrumSummary, extrapolate, solve_lowest
from .fem import assemble
from .mesh import refine, triangulate


def _spec(obj) -> DomainSpec:
    if isinstance(obj, Domain):
        return obj.spec
    if isinstance(obj, DomainSpec):
        return obj
    return DomainSpec.from_dict(obj)


@lru_cache(maxsize=64)
def _mesh_pair(key: str, h: float):
    dom = generate_domain(DomainSpec.from_dict(json.loads(key)))
    coarse = triangulate(dom, h)
    return coarse, refine(coarse)


@lru_cache(maxsize=128)
def _spectrum(key: str, bc: str, h: float, k_max: int, richardson: bool, seed: int):
    coarse, fine = _mesh_pair(key, h)
    sf = solve_lowest(assemble(fine, bc), k_max, seed=seed)
    if not richardson:
        return sf
    sc = solve_lowest(assemble(coarse, bc), k_max, seed=seed)
    return extrapolate(sc, sf)


def fem_spectrum(domain, bc: str, h: float, k_max: int, richardson: bool = True,
                 seed: int = 0) -> SpectrumSummary:
    """Spectrum on the mesh of size ``h`` refined once.

    With ``richardson`` the coarse mesh is solved too and the result carries
    extrapolated values and error estimates; its raw values are the refined
    (h/2) ones.  Results are cached per (domain, bc, h, k_max).
    """
    return _spectrum(_spec(domain).key(), bc, float(h), int(k_max), bool(richardson), int(seed))


def fem_mesh(domain, h: float):
    """The refined mesh used by :func:`fem_spectrum`."""
    return _mesh_pair(_spec(domain).key(), float(h))[1]


@lru_cache(maxsize=128)
def _invariants(key: str, resolution: float):
    return invariants(generate_domain(DomainSpec.from_dict(json.loads(key))), resolution)


def domain_invariants(domain, resolution: float = 0.01):
    return _invariants(_spec(domain).key(), float(resolution))
