"""End-to-end checks of the ``finsler`` command line driver.

Each test writes a flat key = value config into a temp directory, invokes
``artifact.cli.main`` in process (one test also goes through the installed
console script to cover the entry point), and inspects the files it leaves
behind.  Output files are the contract here: trajectory CSV layout, the
structured-text summaries, ``<out>.failure`` records, sweep manifests, and
the exit codes 0 / 2 / 3.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from artifact.cli import ConfigError, main, parse_config


def write_cfg(path, text):
    path.write_text('\n'.join(line.strip() for line in
                              text.strip().splitlines()) + '\n')
    return str(path)


def read_summary(path):
    pairs = {}
    for line in path.read_text().splitlines():
        key, sep, value = line.partition(' = ')
        assert sep, f'malformed summary line {line!r}'
        pairs[key] = value
    return pairs


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(',')
    data = np.array([[float(v) for v in line.split(',')]
                     for line in lines[1:]])
    return header, data


GEO_CFG = """
    metric.name = euclidean
    metric.params.dim = 2
    initial.x0 = 0,0
    initial.y0 = 1,0
    integrator.s_span = 0,1
    integrator.n_samples = 11
"""

INV_CFG = """
    metric.name = mink3
    metric.params.b = 0.5
    initial.x0 = 0,0,0
    initial.y0 = 0,1,0
    initial.kappa1 = 0.005
    initial.e2_hint = 1,0,0
    integrator.s_span = 0,0.3
    integrator.n_samples = 61
"""


def test_parse_config_rejects_malformed(tmp_path):
    no_eq = tmp_path / 'a.cfg'
    no_eq.write_text('metric.name euclidean\n')
    with pytest.raises(ConfigError, match='expected key = value'):
        parse_config(str(no_eq))

    dup = tmp_path / 'b.cfg'
    dup.write_text('k = 1\nk = 2\n')
    with pytest.raises(ConfigError, match='duplicate'):
        parse_config(str(dup))

    empty = tmp_path / 'c.cfg'
    empty.write_text(' = 1\n')
    with pytest.raises(ConfigError, match='empty'):
        parse_config(str(empty))

    # comments and blank lines are fine
    ok = tmp_path / 'd.cfg'
    ok.write_text('# comment\n\nmetric.name = euclidean\n')
    assert parse_config(str(ok)) == {'metric.name': 'euclidean'}


def test_config_errors_exit_2(tmp_path, capsys):
    stray = write_cfg(tmp_path / 'stray.cfg', GEO_CFG + 'initial.kappa1 = 1')
    assert main(['geodesic', '--config', stray]) == 2
    assert 'initial.kappa1' in capsys.readouterr().err

    mismatch = write_cfg(tmp_path / 'mm.cfg', 'command = invariants\n' +
                         GEO_CFG)
    assert main(['geodesic', '--config', mismatch]) == 2
    assert 'invariants' in capsys.readouterr().err

    # report commands never produce CSV
    fmt = write_cfg(tmp_path / 'fmt.cfg', INV_CFG + 'output.format = csv')
    assert main(['invariants', '--config', fmt]) == 2
    assert 'structured-text' in capsys.readouterr().err

    # 3-vector seed on a 2-dimensional metric
    wrong = write_cfg(tmp_path / 'dim.cfg', """
        metric.name = euclidean
        metric.params.dim = 2
        initial.x0 = 0,0,0
        initial.y0 = 1,0,0
    """)
    assert main(['geodesic', '--config', wrong]) == 2
    assert 'dimension' in capsys.readouterr().err

    bad_tol = write_cfg(tmp_path / 'tol.cfg', GEO_CFG +
                        'integrator.rel_tol = -1')
    assert main(['geodesic', '--config', bad_tol]) == 2
    assert 'integrator' in capsys.readouterr().err


def test_geodesic_straight_line_csv(tmp_path):
    cfg = write_cfg(tmp_path / 'geo.cfg', GEO_CFG)
    out = tmp_path / 'geo.csv'
    assert main(['geodesic', '--config', cfg, '--out', str(out)]) == 0

    header, data = read_csv(out)
    assert header == ['s', 'x1', 'x2', 'y1', 'y2', 'u1', 'u2',
                      'w1', 'w2', 'F', 'kappa1', 'tau2_norm']
    assert data.shape == (11, 12)
    assert np.allclose(data[:, 0], np.linspace(0.0, 1.0, 11))
    # unit-speed straight line: x = (s, 0), y = (1, 0), u = w = 0, F = 1
    assert np.allclose(data[:, 1], data[:, 0], atol=1e-12)
    assert np.allclose(data[:, 2], 0.0, atol=1e-12)
    assert np.allclose(data[:, 3], 1.0, atol=1e-12)
    assert np.allclose(data[:, 4:9], 0.0, atol=1e-12)
    assert np.allclose(data[:, 9], 1.0, atol=1e-12)
    assert np.max(data[:, 10:]) < 1e-10


def test_repeat_runs_identical_bytes(tmp_path):
    cfg = write_cfg(tmp_path / 'geo.cfg', INV_CFG.replace(
        'initial.kappa1 = 0.005', 'initial.kappa1 = 0.05'))
    a, b = tmp_path / 'a.csv', tmp_path / 'b.csv'
    assert main(['biharmonic', '--config', cfg, '--out', str(a)]) == 0
    assert main(['biharmonic', '--config', cfg, '--out', str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()

    # the console script is the same code path, byte for byte
    c = tmp_path / 'c.csv'
    proc = subprocess.run(['finsler', 'biharmonic', '--config', cfg,
                           '--out', str(c)], capture_output=True)
    assert proc.returncode == 0, proc.stderr
    assert c.read_bytes() == a.read_bytes()


def test_nonunit_seed_needs_renormalize(tmp_path, capsys):
    cfg = write_cfg(tmp_path / 'nu.cfg', GEO_CFG.replace(
        'initial.y0 = 1,0', 'initial.y0 = 2,0'))
    assert main(['geodesic', '--config', cfg]) == 2
    assert 'renormalize' in capsys.readouterr().err

    fixed = write_cfg(tmp_path / 'nu2.cfg', GEO_CFG.replace(
        'initial.y0 = 1,0', 'initial.y0 = 2,0\ninitial.renormalize = true'))
    out = tmp_path / 'nu.csv'
    assert main(['geodesic', '--config', fixed, '--out', str(out)]) == 0
    _, data = read_csv(out)
    assert np.allclose(data[:, 9], 1.0, atol=1e-12)


def test_domain_exit_partial_csv_and_failure(tmp_path, capsys):
    # straight shot at the rim of the disk: flow stops before s = 2
    cfg = write_cfg(tmp_path / 'de.cfg', """
        metric.name = numata_disk
        initial.x0 = 0.7,0
        initial.y0 = 0.58823529411764708,0
        integrator.s_span = 0,2
        integrator.n_samples = 41
    """)
    out = tmp_path / 'de.csv'
    assert main(['geodesic', '--config', cfg, '--out', str(out)]) == 3
    assert 'stopped early' in capsys.readouterr().err

    _, data = read_csv(out)
    assert 0 < data.shape[0] < 41
    assert np.max(np.abs(data[:, 1])) < 1.0

    record = read_summary(tmp_path / 'de.csv.failure')
    assert record['error'] == 'early_stop'
    assert record['status'] == 'domain_exit'
    assert int(record['samples_completed']) == data.shape[0]
    assert 0.4 < float(record['s_reached']) < 0.7


def test_invariants_summary(tmp_path):
    cfg = write_cfg(tmp_path / 'inv.cfg', INV_CFG)
    out = tmp_path / 'inv.txt'
    assert main(['invariants', '--config', cfg, '--out', str(out)]) == 0

    rep = read_summary(out)
    assert rep['command'] == 'invariants'
    assert rep['metric'] == 'mink3'
    assert rep['status'] == 'ok'
    assert int(rep['samples']) == 61
    assert abs(float(rep['kappa1_mean']) - 0.005) < 1e-6
    assert float(rep['kappa1_spread_rel']) < 1e-4
    assert float(rep['F_drift']) < 1e-10
    assert float(rep['tau2_interior_max']) < 1e-12
    for j in (1, 2, 3):
        assert float(rep[f'lambda_range_{j}']) < 1e-12
    assert float(rep['lambda_y_plus_kappa1sq_max']) < 1e-8


def test_bienergy_summary(tmp_path):
    cfg = write_cfg(tmp_path / 'bn.cfg', INV_CFG.replace(
        'initial.kappa1 = 0.005', 'initial.kappa1 = 0.05').replace(
        'integrator.s_span = 0,0.3', 'integrator.s_span = 0,1'))
    out = tmp_path / 'bn.txt'
    assert main(['bienergy', '--config', cfg, '--out', str(out)]) == 0

    rep = read_summary(out)
    # unit speed: energy = span / 2; |u| = kappa1: bienergy = kappa1^2 / 2
    assert abs(float(rep['energy']) - 0.5) < 1e-5
    assert abs(float(rep['bienergy']) - 0.5 * 0.05 ** 2) < 1e-5


def test_example_numata_summary(tmp_path):
    cfg = write_cfg(tmp_path / 'num.cfg', """
        initial.kappa1 = 0.1
        numata.nu = 1
        integrator.s_span = 0,1
        integrator.n_samples = 101
        output.format = structured-text
    """)
    out = tmp_path / 'num.txt'
    assert main(['example-numata', '--config', cfg, '--out', str(out)]) == 0

    rep = read_summary(out)
    assert rep['metric'] == 'numata_disk'
    assert rep['status'] == 'ok'
    # the closed-form profile bends at nearly unit rate and its norm decays;
    # these bands pin the measured behaviour of the reconstruction
    assert 0.9 < float(rep['kappa1_mean']) < 1.05
    assert 0.9 < float(rep['F_drift']) < 1.0
    assert 0.01 < float(rep['tau2_interior_max']) < 0.05


def test_example_mink3_summary(tmp_path):
    cfg = write_cfg(tmp_path / 'prof.cfg', """
        initial.kappa1 = 0.002
        metric.params.b = 0.5
        mink3.gamma_const = -4.5e-6
        mink3.alpha0 = 1.0
        mink3.dalpha0 = 4e-4
        integrator.s_span = 0,2
        integrator.n_samples = 201
        output.format = structured-text
    """)
    out = tmp_path / 'prof.txt'
    assert main(['example-mink3', '--config', cfg, '--out', str(out)]) == 0

    rep = read_summary(out)
    assert rep['status'] == 'ok'
    assert float(rep['F_drift']) == 0.0
    assert abs(float(rep['kappa1_mean']) - 0.002) < 1e-4
    assert float(rep['tau2_interior_max']) < 1e-5
    for j in (1, 2, 3):
        assert float(rep[f'lambda_range_{j}']) < 1e-6
    assert float(rep['lambda_y_plus_kappa1sq_max']) < 1e-7
    # alpha really varies over the window
    assert float(rep['alpha_max']) - float(rep['alpha_min']) > 1e-4


def test_audit_summary(tmp_path):
    cfg = write_cfg(tmp_path / 'aud.cfg', """
        audit.samples = 40
        audit.seed = 3
    """)
    out = tmp_path / 'aud.txt'
    assert main(['audit', '--config', cfg, '--out', str(out)]) == 0

    rep = read_summary(out)
    assert rep['command'] == 'audit'
    assert int(rep['samples']) == 40
    checks = {key: float(value) for key, value in rep.items()
              if key not in ('command', 'samples', 'runtime_seconds')}
    assert len(checks) >= 5
    assert all(value < 1e-7 for value in checks.values()), checks


def test_sweep_manifest_and_error_isolation(tmp_path):
    base = write_cfg(tmp_path / 'base.cfg', """
        initial.kappa1 = 0.002
        metric.params.b = 0.5
        mink3.alpha0 = 1.0
        mink3.dalpha0 = 4e-4
        integrator.s_span = 0,1
        integrator.n_samples = 41
        output.format = structured-text
    """)
    # second value has no consistent momentum: that run fails, the rest go on
    grid = write_cfg(tmp_path / 'grid.cfg',
                     'mink3.gamma_const = -4.5e-6 1e-3')
    out = tmp_path / 'sw.txt'
    code = main(['example-mink3', '--config', base, '--sweep', grid,
                 '--out', str(out)])
    assert code == 2

    manifest = read_summary(tmp_path / 'sw.sweep-manifest.txt')
    assert set(manifest) == {'run_000', 'run_001'}
    assert manifest['run_000'].startswith('exit=0')
    assert 'mink3.gamma_const=-4.5e-6' in manifest['run_000']
    assert manifest['run_001'].startswith('exit=2')
    assert 'error=' in manifest['run_001']

    good = read_summary(tmp_path / 'sw.sweep000.txt')
    assert good['status'] == 'ok'
    assert not (tmp_path / 'sw.sweep001.txt').exists()


def test_sweep_rejects_unsweepable_keys(tmp_path, capsys):
    base = write_cfg(tmp_path / 'base.cfg', GEO_CFG)
    grid = write_cfg(tmp_path / 'grid.cfg', 'output.path = a b')
    assert main(['geodesic', '--config', base, '--sweep', grid]) == 2
    assert 'not sweepable' in capsys.readouterr().err


def test_out_dir_env_prefixes_relative_paths(tmp_path, monkeypatch):
    monkeypatch.setenv('FINSLER_OUT_DIR', str(tmp_path / 'results'))
    cfg = write_cfg(tmp_path / 'aud.cfg', 'audit.samples = 5')
    assert main(['audit', '--config', cfg, '--out', 'deep/aud.txt']) == 0
    assert (tmp_path / 'results' / 'deep' / 'aud.txt').exists()

    # absolute paths are left alone
    out = tmp_path / 'abs.txt'
    assert main(['audit', '--config', cfg, '--out', str(out)]) == 0
    assert out.exists()


def test_default_output_name_is_command(tmp_path, monkeypatch):
    monkeypatch.setenv('FINSLER_OUT_DIR', str(tmp_path))
    cfg = write_cfg(tmp_path / 'geo.cfg', GEO_CFG)
    assert main(['geodesic', '--config', cfg]) == 0
    assert (tmp_path / 'geodesic.csv').exists()
