"""Analytic pre-implementation performance model for DNN accelerators.

Estimate energy, latency and throughput of a convolutional layer on a
tiled spatial architecture from three ingredients: the layer shape, a
hardware description (PE array, buffer capacities, bandwidths, unit
costs) and a mapping, written either as a four-level tiled loop nest
with per-tensor refresh points or in the small `.dflow` text language.

A brute-force counting simulator independently reproduces the access
counts the closed forms predict, and an explorer searches tilings, loop
orders and refresh styles for the cheapest legal mapping.
"""

from .dsl import DslDocument, fmt, lower, parse, render, render_document
from .errors import (
    ConfigError,
    CountOverflowError,
    DslError,
    InstanceTooLargeError,
    MappingError,
    PredictorError,
    Violation,
)
from .explore import (
    SearchEntry,
    SearchResult,
    SearchSpace,
    enumerate_mappings,
    explore,
    space_size,
)
from .loopnest import (
    LoopLevel,
    LoopNest,
    RefreshLocations,
    RefreshPlan,
    build_nest,
    canonical_refresh,
    refresh_plan,
    validate_nest,
    validate_structure,
)
from .model import (
    DataKind,
    HardwareConfig,
    LayerShape,
    MemLevel,
    Options,
    Precision,
    UnitCosts,
    mac_count,
    tensor_footprint,
    tile_volume,
    validate_hardware,
)
from .oracle import AccessCounters, DiffReport, check, diff_counts, simulate
from .predictor import (
    EnergyReport,
    LatencyReport,
    NetworkReport,
    PredictionReport,
    access_counts,
    energy,
    latency,
    predict_layer,
    predict_network,
)
from .presets import (
    hardware_preset,
    layer_preset,
    list_presets,
    mapping_preset,
    network_preset,
    row_stationary_mapping,
)
from .serialize import (
    canonical_json,
    counts_csv,
    hardware_from_json,
    hardware_to_json,
    layer_from_json,
    layer_to_json,
    load_hardware,
    load_layer,
    load_mapping,
    mapping_from_json,
    mapping_to_json,
    report_csv,
)
from .cli import main

__version__ = "0.1.0"

__all__ = [
    "AccessCounters",
    "ConfigError",
    "CountOverflowError",
    "DataKind",
    "DiffReport",
    "DslDocument",
    "DslError",
    "EnergyReport",
    "HardwareConfig",
    "InstanceTooLargeError",
    "LatencyReport",
    "LayerShape",
    "LoopLevel",
    "LoopNest",
    "MappingError",
    "MemLevel",
    "NetworkReport",
    "Options",
    "Precision",
    "PredictionReport",
    "PredictorError",
    "RefreshLocations",
    "RefreshPlan",
    "SearchEntry",
    "SearchResult",
    "SearchSpace",
    "UnitCosts",
    "Violation",
    "access_counts",
    "build_nest",
    "canonical_json",
    "canonical_refresh",
    "check",
    "counts_csv",
    "diff_counts",
    "energy",
    "enumerate_mappings",
    "explore",
    "fmt",
    "hardware_from_json",
    "hardware_preset",
    "hardware_to_json",
    "latency",
    "layer_from_json",
    "layer_preset",
    "layer_to_json",
    "list_presets",
    "load_hardware",
    "load_layer",
    "load_mapping",
    "lower",
    "main",
    "mac_count",
    "mapping_from_json",
    "mapping_preset",
    "mapping_to_json",
    "network_preset",
    "parse",
    "predict_layer",
    "predict_network",
    "refresh_plan",
    "report_csv",
    "render",
    "render_document",
    "row_stationary_mapping",
    "simulate",
    "space_size",
    "tensor_footprint",
    "tile_volume",
    "validate_hardware",
    "validate_nest",
    "validate_structure",
]
