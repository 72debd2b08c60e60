# pylint: disable=missing-module-docstring
from .core import (RunManifest, ingest_sites, ingest_households, default_site_predictors, density_file_name,
                   write_sites, write_summary, write_pooling, write_densities, write_sensitivity, write_manifest,
                   write_diagnostics)
