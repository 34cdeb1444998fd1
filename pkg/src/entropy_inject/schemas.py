"""Validate CLI payloads against the JSON schemas shipped in data/schemas."""

from __future__ import annotations

import json
from functools import lru_cache

import jsonschema
from referencing import Registry, Resource

from ._data import data_path

SCHEMA_NAMES = (
    "entropy_report",
    "rng_reports",
    "aslr_profiles",
    "aslr_estimate",
    "aslr_curve",
    "aslr_simulation",
    "mtd_result",
    "mtd_sweep",
    "mtd_comparison",
    "mtd_preset",
    "dga_report",
    "scan_finding",
    "snapshot_delta",
    "scenario",
)


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    with open(data_path(f"schemas/{name}.schema.json")) as fh:
        return json.load(fh)


@lru_cache(maxsize=1)
def _registry() -> Registry:
    resources = [(f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in SCHEMA_NAMES]
    return Registry().with_resources(resources)


def validate(doc, name: str) -> None:
    """Raise jsonschema.ValidationError if ``doc`` does not match schema ``name``."""
    jsonschema.Draft7Validator(load_schema(name), registry=_registry()).validate(doc)
