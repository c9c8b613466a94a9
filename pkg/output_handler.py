"""
Output module for exporting sampled paths, law tables and test reports.
"""

import json

import numpy as np
import pandas as pd

from config import (
    DURATION_COLUMN,
    LAW_COLUMNS,
    PATH_COLUMN_PREFIX,
    PMF_COLUMNS,
    REPORT_COLUMNS,
)
from laws import tabulate


def reports_to_frame(reports, experiment=None):
    """
    Prepare a report table.

    Args:
        reports (list): TestReport objects
        experiment (str): Optional experiment name added as a column

    Returns:
        pd.DataFrame: Schema columns plus notes and the experimental flag
    """
    rows = []
    for report in reports:
        row = report.to_dict()
        row['experimental'] = bool(report.experimental)
        if experiment is not None:
            row['experiment'] = experiment
        rows.append(row)

    columns = REPORT_COLUMNS + ['notes', 'experimental'] + (['experiment'] if experiment else [])
    return pd.DataFrame(rows, columns=columns)


def save_reports_json(reports, output_path, verbose=True):
    """
    Save reports as a JSON array with sorted keys.

    Args:
        reports (list): TestReport objects
        output_path (str): Output file path
        verbose (bool): Print the saved path
    """
    payload = [report.to_dict() for report in reports]
    with open(output_path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write('\n')

    if verbose:
        print(f"Output saved to: {output_path}")


def save_to_csv(df, output_path, verbose=True):
    """
    Save dataframe to CSV file.

    Floats are written with 17 significant digits and '\\n' line endings so
    identical inputs give identical bytes.

    Args:
        df (pd.DataFrame): Dataframe to save
        output_path (str): Output file path
        verbose (bool): Print the saved path
    """
    df.to_csv(output_path, index=False, float_format='%.17g', lineterminator='\n')
    if verbose:
        print(f"Output saved to: {output_path}")


def save_to_excel(df, output_path, include_summary=True, verbose=True):
    """
    Save a report table to an Excel workbook.

    Args:
        df (pd.DataFrame): Report table from reports_to_frame
        output_path (str): Output file path
        include_summary (bool): Whether to include summary sheet
        verbose (bool): Print the saved path
    """
    with pd.ExcelWriter(output_path, engine='openpyxl') as writer:
        df.to_excel(writer, sheet_name='Reports', index=False)

        if include_summary:
            summary = create_summary_statistics(df)
            summary.to_excel(writer, sheet_name='Summary', index=False)

    if verbose:
        print(f"Output saved to: {output_path}")


def create_summary_statistics(df):
    """
    Create summary statistics for a report table.

    Args:
        df (pd.DataFrame): Report table

    Returns:
        pd.DataFrame: Metric/Count rows, overall and per experiment
    """
    experimental = df['experimental'].astype(bool) if 'experimental' in df.columns else pd.Series(False, index=df.index)
    passed = df['pass'].astype(bool)

    metrics = [
        'Total Checks',
        'Passed',
        'Failed',
        'Failed (gating)',
        'Experimental',
    ]

    counts = [
        len(df),
        int(passed.sum()),
        int((~passed).sum()),
        int((~passed & ~experimental).sum()),
        int(experimental.sum()),
    ]

    if 'experiment' in df.columns:
        for name, group in df.groupby('experiment', sort=True):
            metrics.append(f'{name}: passed')
            counts.append(int(group['pass'].astype(bool).sum()))
            metrics.append(f'{name}: failed')
            counts.append(int((~group['pass'].astype(bool)).sum()))

    summary_data = {
        'Metric': metrics,
        'Count': counts
    }

    return pd.DataFrame(summary_data)


def paths_to_frame(samples):
    """
    One row per path: t_0..t_N, duration and any latent columns.

    Args:
        samples (list): DecompSample or GridPath objects on a common grid

    Returns:
        pd.DataFrame: Path table
    """
    rows = []
    for sample in samples:
        path = getattr(sample, 'path', sample)
        row = {f'{PATH_COLUMN_PREFIX}{i}': value for i, value in enumerate(path.values)}
        row[DURATION_COLUMN] = path.duration
        if hasattr(sample, 'row'):
            row.update(sample.row())
        rows.append(row)
    return pd.DataFrame(rows)


def pmf_to_frame(pmf):
    """Exact pmf as (l, numerator, denominator) rows."""
    return pd.DataFrame(pmf.rows(), columns=PMF_COLUMNS)


def law_table(law, points):
    """
    Tabulate a law's pdf and cdf.

    Args:
        law (ClosedFormLaw): Law to tabulate
        points (int): Number of grid points

    Returns:
        pd.DataFrame: Columns t, pdf, cdf
    """
    grid, pdf, cdf = tabulate(law, points)
    return pd.DataFrame(
        {LAW_COLUMNS[0]: grid, LAW_COLUMNS[1]: np.asarray(pdf), LAW_COLUMNS[2]: np.asarray(cdf)}
    )
