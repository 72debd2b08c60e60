"""
Read the CSV inputs of the fit commands and write every result file.

Line numbers in validation errors count the header as line 1.
"""

from dataclasses import asdict, dataclass, field
import json
import logging
import math
import os
import re

import numpy as np
import pandas as pd

from hierpool.data import models
from hierpool.diagnostics.summary import histogram
from hierpool.errors import DataError, ValidationError
from hierpool.models.core import MODES, HouseholdRecord, SiteSummary, build_design

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6g'


def _line(row_position):
    return row_position + 2


def _read_csv(path, required):
    """Read a CSV file as strings and check that the required columns are present"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding='utf-8')
    except FileNotFoundError as exc:
        raise ValidationError(f"{path}: file not found") from exc
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ValidationError(f"{path}: unreadable CSV ({exc})", line=1) from exc

    frame.columns = [c.strip() for c in frame.columns]
    for column in required:
        if column not in frame.columns:
            raise ValidationError(f"{path}: missing column '{column}' (header is {','.join(frame.columns)})",
                                  line=1, column=column)
    return frame


def _number(frame, row_position, column, path, integer=False):
    raw = frame[column].iloc[row_position].strip()
    try:
        value = int(raw) if integer else float(raw)
    except ValueError as exc:
        kind = "an integer" if integer else "a number"
        raise ValidationError(f"{path}: column '{column}' must be {kind}, got '{raw}'",
                              line=_line(row_position), column=column) from exc
    if not integer and not math.isfinite(value):
        raise ValidationError(f"{path}: column '{column}' must be finite, got '{raw}'",
                              line=_line(row_position), column=column)
    return value


def ingest_sites(path):
    """Read site estimates from a CSV file with header site,tau_hat,sigma_hat

    Args:
        path (str): CSV file, UTF-8, comma delimited

    Raises:
        ValidationError: missing column, unparsable or non-positive value, duplicated site, no rows

    Returns:
        list: SiteSummary records in file order
    """
    frame = _read_csv(path, models.SITE_COLUMNS)
    if frame.empty:
        raise ValidationError(f"{path}: no site rows", line=2)

    sites, seen = [], set()
    for position in range(len(frame)):
        name = frame['site'].iloc[position].strip()
        if not name:
            raise ValidationError(f"{path}: empty site name", line=_line(position), column='site')
        if name in seen:
            raise ValidationError(f"{path}: duplicate site '{name}'", line=_line(position), column='site')
        tau_hat = _number(frame, position, 'tau_hat', path)
        sigma_hat = _number(frame, position, 'sigma_hat', path)
        if sigma_hat <= 0:
            raise ValidationError(f"{path}: site '{name}' has non-positive sigma_hat {sigma_hat}",
                                  line=_line(position), column='sigma_hat')
        seen.add(name)
        sites.append(SiteSummary(name, tau_hat, sigma_hat))

    logger.info("Read %d sites from %s", len(sites), path)
    return sites


def _read_site_predictors(path):
    """Site-level predictors ordered by site_index, which must run 1..S"""
    frame = _read_csv(path, [models.SITE_INDEX_COLUMN])
    columns = [c for c in frame.columns if c != models.SITE_INDEX_COLUMN]
    indices = [_number(frame, p, models.SITE_INDEX_COLUMN, path, integer=True) for p in range(len(frame))]
    if sorted(indices) != list(range(1, len(indices) + 1)):
        raise ValidationError(f"{path}: site_index must run 1..{len(indices)} without gaps or duplicates",
                              column=models.SITE_INDEX_COLUMN)
    values = np.array([[_number(frame, p, c, path) for c in columns] for p in range(len(frame))], dtype=float)
    order = np.argsort(indices)
    return values.reshape(len(indices), len(columns))[order], columns


def default_site_predictors():
    """Health component indicator and asset transfer value of the six reference sites"""
    columns = list(models.DEFAULT_SITE_PREDICTORS)
    return np.column_stack([models.DEFAULT_SITE_PREDICTORS[c] for c in columns]).astype(float), columns


def ingest_households(path, sitepred_path=None, mode='model2'):
    """Read households and site predictors, and assemble the design matrices

    Args:
        path (str): households CSV with header site_index,y,treatment[,y_baseline]
        sitepred_path (str, optional): site predictors CSV with header site_index,<predictors...>.
            Defaults to the predictors of the six reference sites.
        mode (str, optional): 'model2' or 'model2bis' (adds the baseline outcome). Defaults to 'model2'.

    Raises:
        ValidationError: any malformed or inconsistent input, with its line when known

    Returns:
        HouseholdData: records and design matrices
    """
    if mode not in MODES:
        raise ValidationError(f"unknown mode '{mode}', expected one of {MODES}")
    required = models.HOUSEHOLD_COLUMNS + ([models.BASELINE_COLUMN] if mode == 'model2bis' else [])
    frame = _read_csv(path, required)
    if frame.empty:
        raise ValidationError(f"{path}: no household rows", line=2)

    if sitepred_path is None:
        predictors, _ = default_site_predictors()
    else:
        predictors, _ = _read_site_predictors(sitepred_path)
    n_sites = predictors.shape[0]

    if mode == 'model2bis':
        empty = [_line(p) for p in range(len(frame)) if not frame[models.BASELINE_COLUMN].iloc[p].strip()]
        if empty:
            raise ValidationError(f"{path}: empty {models.BASELINE_COLUMN} on lines {empty}",
                                  column=models.BASELINE_COLUMN)

    records = []
    for position in range(len(frame)):
        site_index = _number(frame, position, 'site_index', path, integer=True)
        if not 1 <= site_index <= n_sites:
            raise ValidationError(f"{path}: site_index {site_index} outside 1..{n_sites}", line=_line(position),
                                  column='site_index')
        treatment = _number(frame, position, 'treatment', path, integer=True)
        if treatment not in (0, 1):
            raise ValidationError(f"{path}: treatment must be 0 or 1, got {treatment}", line=_line(position),
                                  column='treatment')
        baseline = _number(frame, position, models.BASELINE_COLUMN, path) if mode == 'model2bis' else None
        records.append(HouseholdRecord(site_index=site_index, y=_number(frame, position, 'y', path),
                                       treatment=treatment, baseline=baseline))

    missing = sorted(set(range(1, n_sites + 1)) - {r.site_index for r in records})
    if missing:
        raise ValidationError(f"{path}: no households for sites {missing}", column='site_index')

    try:
        data = build_design(records, predictors, mode=mode)
    except DataError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    logger.info("Read %d households over %d sites from %s (%s)", len(records), n_sites, path, mode)
    return data


@dataclass
class RunManifest:
    """Everything needed to re-run a command, echoed into its output directory"""

    command: str
    inputs: dict
    sampler: dict
    priors: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output: str = '.'
    format_version: int = models.FORMAT_VERSION

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2) + '\n'

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def density_file_name(parameter):
    return f"density_{re.sub(r'[^A-Za-z0-9_.-]+', '_', parameter).strip('_')}.csv"


def write_sites(sites, path):
    frame = pd.DataFrame([[s.site_name, s.tau_hat, s.sigma_hat] for s in sites], columns=models.SITE_COLUMNS)
    frame.to_csv(path, index=False)


def write_summary(summary, path):
    summary.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_pooling(report, path):
    """Per-site pooling factors, then sigma_tilde under sigma_hat and omega_bar under omega_s"""
    frame = report.to_frame()
    trailer = pd.DataFrame([['sigma_tilde', report.sigma_tilde, np.nan], ['omega_bar', np.nan, report.omega_bar]],
                           columns=models.POOLING_COLUMNS)
    pd.concat([frame, trailer], ignore_index=True).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_densities(fit, directory):
    """One histogram file per parameter"""
    for name in fit.parameter_names:
        edges, counts = histogram(fit.parameter(name))
        frame = pd.DataFrame({'bin_left': edges[:-1], 'bin_right': edges[1:], 'count': counts},
                             columns=models.DENSITY_COLUMNS)
        frame.to_csv(os.path.join(directory, density_file_name(name)), index=False, float_format=FLOAT_FORMAT)


def write_sensitivity(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_manifest(manifest: RunManifest, path):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(manifest.to_json())


def diagnostics_lines(fit, summary):
    """Sampler statistics of a fit, one fact per line"""
    per_chain = ' '.join(str(int(n)) for n in fit.divergences_per_chain())
    flagged = [row.name for row in summary if row.rhat > models.RHAT_THRESHOLD]
    return [
        f"method: {fit.method}",
        f"chains: {fit.n_chains}",
        f"draws per chain: {fit.n_draws}",
        f"divergent transitions per chain: {per_chain}",
        f"divergent transitions total: {fit.total_divergences}",
        f"warmup divergent transitions per chain: {' '.join(str(int(n)) for n in fit.warmup_divergences)}",
        f"step size per chain: {' '.join(f'{s:.6g}' for s in fit.step_size)}",
        f"acceptance rate: {fit.acceptance_rate:.6g}",
        f"max rhat: {summary.max_rhat:.6g}",
        f"rhat above {models.RHAT_THRESHOLD}: {', '.join(flagged) if flagged else 'none'}",
    ]


def write_diagnostics(path, fit, summary, sections=()):
    """diagnostics.txt: sampler statistics followed by titled extra sections

    Args:
        sections (Sequence[tuple]): (title, lines) pairs appended after the sampler statistics
    """
    lines = ["[sampler]"] + diagnostics_lines(fit, summary)
    for title, body in sections:
        lines += ["", f"[{title}]"] + list(body)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
