"""Masked nitrogen implantation into diamond and NV placement statistics."""

from ._core import (
    NvmaskError,
    RangeRow,
    build_range_table,
    count_emitters,
    count_odmr_dips,
    dipolar_coupling,
    effective_dose,
    expected_ion_count,
    fit_g2,
    fit_hahn_echo,
    fwhm,
    g2_model,
    kde2d,
    nearest_neighbor_distances,
    open_area_ratio,
    run_implant,
    scatter_angle,
    schema_version,
    strongly_coupled,
    transmits,
)

__all__ = [
    "NvmaskError",
    "RangeRow",
    "build_range_table",
    "count_emitters",
    "count_odmr_dips",
    "dipolar_coupling",
    "effective_dose",
    "expected_ion_count",
    "fit_g2",
    "fit_hahn_echo",
    "fwhm",
    "g2_model",
    "kde2d",
    "nearest_neighbor_distances",
    "open_area_ratio",
    "run_implant",
    "scatter_angle",
    "schema_version",
    "strongly_coupled",
    "transmits",
]
