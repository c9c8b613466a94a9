import json

import pandas as pd
import pytest
from scipy.integrate import trapezoid

from laws import fz
from lattice import z_pmf
from output_handler import (
    create_summary_statistics,
    law_table,
    paths_to_frame,
    pmf_to_frame,
    reports_to_frame,
    save_reports_json,
    save_to_csv,
    save_to_excel,
)
from sampler import GridPath
from stat_tests import TestReport


def _reports():
    return [
        TestReport('a', 10, 0.1, 0.5, passed=True, seed=1),
        TestReport('b', 10, 3.0, 1e-6, passed=False, seed=1),
        TestReport('c', 10, 2.0, None, None, False, 1, experimental=True),
    ]


def test_report_frame_columns():
    df = reports_to_frame(_reports(), 'hull-mc')
    assert list(df.columns) == [
        'name', 'n', 'statistic', 'p_value', 'threshold', 'pass', 'seed', 'notes', 'experimental', 'experiment',
    ]
    assert list(df['pass']) == [True, False, False]


def test_summary_counts():
    summary = create_summary_statistics(reports_to_frame(_reports(), 'hull-mc'))
    counts = dict(zip(summary['Metric'], summary['Count']))
    assert counts['Total Checks'] == 3
    assert counts['Passed'] == 1
    assert counts['Failed'] == 2
    assert counts['Failed (gating)'] == 1
    assert counts['Experimental'] == 1
    assert counts['hull-mc: failed'] == 2


def test_reports_json_sorted_keys(tmp_path):
    out = tmp_path / 'reports.json'
    save_reports_json(_reports(), str(out), verbose=False)
    text = out.read_text(encoding='utf-8')
    data = json.loads(text)
    assert [r['name'] for r in data] == ['a', 'b', 'c']
    assert list(data[0]) == sorted(data[0])
    assert text.endswith('\n')


def test_csv_is_byte_deterministic(tmp_path):
    df = paths_to_frame([GridPath(1.0, [0.0, 0.1, 1.0 / 3.0])])
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    save_to_csv(df, str(first), verbose=False)
    save_to_csv(df.copy(), str(second), verbose=False)
    assert first.read_bytes() == second.read_bytes()
    assert b'\r\n' not in first.read_bytes()
    assert pd.read_csv(first)['t_2'][0] == 1.0 / 3.0


def test_excel_sheets(tmp_path):
    out = tmp_path / 'reports.xlsx'
    save_to_excel(reports_to_frame(_reports()), str(out), verbose=False)
    sheets = pd.read_excel(out, sheet_name=None, engine='openpyxl')
    assert set(sheets) == {'Reports', 'Summary'}
    assert len(sheets['Reports']) == 3


def test_pmf_frame_is_exact():
    df = pmf_to_frame(z_pmf(4, -2))
    assert list(df.columns) == ['l', 'numerator', 'denominator']
    assert sum(n / d for n, d in zip(df['numerator'], df['denominator'])) == pytest.approx(1.0)


def test_law_table():
    df = law_table(fz(-1.0), 512)
    assert list(df.columns) == ['t', 'pdf', 'cdf']
    assert len(df) == 512
    assert trapezoid(df['pdf'], df['t']) == pytest.approx(1.0, abs=1e-3)
