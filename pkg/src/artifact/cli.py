"""Command-line front end: integrations, audits, and example runs.

A run is described by a flat ``key = value`` config file; the command is
given on the command line:

    finsler geodesic --config run.cfg
    finsler biharmonic --config run.cfg --out /tmp/curve.csv
    finsler invariants --config run.cfg
    finsler example-mink3 --config profile.cfg
    finsler audit --config audit.cfg

Trajectory commands write CSV with the fixed header
``s,x1..xn,y1..yn,u1..un,w1..wn,F,kappa1,tau2_norm`` (tau2_norm holds
the measured tension norm on geodesic runs, the measured bitension norm
on biharmonic ones).  Report commands write a structured-text summary
of ``key = value`` lines.  Numbers are printed in fixed 17-significant-
digit scientific notation, so identical configs give bit-identical CSV.

Exit status: 0 success, 2 configuration error, 3 integration failure.
On 3 the partial trajectory is still written, plus a ``<out>.failure``
record.  ``--sweep <grid-file>`` fans a config out over a parameter
grid; each run writes its own suffixed output file.
"""

import argparse
import itertools
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .curves import bienergy
from .errors import (ArtifactError, ConfigError, IntegrationError,
                     IntervalExhausted, ReconstructionFailure)
from .flows import (OK, IntegratorConfig, integrate_biharmonic,
                    integrate_geodesic, make_biharmonic_initial,
                    monitor_invariants)
from .library import (Mink3ProfileParams, NumataClosedFormParams, builtin,
                      mink3_profile, numata_closed_form,
                      numata_identity_audit)

COMMANDS = ('geodesic', 'biharmonic', 'invariants', 'example-numata',
            'example-mink3', 'bienergy', 'audit')

_TRAJECTORY_COMMANDS = ('geodesic', 'biharmonic', 'example-numata',
                        'example-mink3')

# keys every command understands
_COMMON_KEYS = {
    'command', 'metric.name', 'output.path', 'output.format',
    'integrator.rel_tol', 'integrator.abs_tol', 'integrator.max_step',
    'integrator.min_step', 'integrator.s_span', 'integrator.n_samples',
}

_METRIC_PARAM_KEYS = {
    'metric.params.dim', 'metric.params.b', 'metric.params.a',
    'metric.params.b0', 'metric.params.B', 'metric.params.matrix',
}

_KEYS_BY_COMMAND = {
    'geodesic': {'initial.x0', 'initial.y0', 'initial.renormalize'},
    'biharmonic': {'initial.x0', 'initial.y0', 'initial.kappa1',
                   'initial.e2_hint', 'initial.kappa2', 'initial.e3_hint'},
    'invariants': {'initial.x0', 'initial.y0', 'initial.kappa1',
                   'initial.e2_hint', 'initial.kappa2', 'initial.e3_hint'},
    'bienergy': {'initial.x0', 'initial.y0', 'initial.kappa1',
                 'initial.e2_hint', 'initial.kappa2', 'initial.e3_hint'},
    'example-numata': {'initial.kappa1', 'numata.nu', 'numata.gamma_phase',
                       'numata.sign', 'numata.x0', 'numata.project_x0'},
    'example-mink3': {'initial.kappa1', 'mink3.gamma_const', 'mink3.alpha0',
                      'mink3.dalpha0'},
    'audit': {'audit.samples', 'audit.seed'},
}


# ---------------------------------------------------------------------------
# config file handling


def parse_config(path):
    """Flat key = value file; full-line # comments and blanks ignored."""
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    cfg = {}
    for ln, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith('#'):
            continue
        if '=' not in text:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, _, value = text.partition('=')
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{ln}: empty key")
        if key in cfg:
            raise ConfigError(f"{path}:{ln}: duplicate key {key}")
        cfg[key] = value
    return cfg


def _check_keys(cfg, command):
    allowed = _COMMON_KEYS | _METRIC_PARAM_KEYS | _KEYS_BY_COMMAND[command]
    for key in cfg:
        if key not in allowed:
            raise ConfigError(
                f"unknown config key {key!r} for command {command}")
    if 'command' in cfg and cfg['command'] != command:
        raise ConfigError(
            f"config says command = {cfg['command']!r} but "
            f"{command!r} was requested")


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: {cfg[key]!r} is not a number")


def _int(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key}")
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: {cfg[key]!r} is not an integer")


def _bool(cfg, key, default=False):
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ('true', '1', 'yes'):
        return True
    if value in ('false', '0', 'no'):
        return False
    raise ConfigError(f"{key}: {cfg[key]!r} is not a boolean")


def _vector(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key}")
        return np.asarray(default, float)
    try:
        return np.array([float(p) for p in cfg[key].split(',')])
    except ValueError:
        raise ConfigError(f"{key}: {cfg[key]!r} is not a comma-separated "
                          f"vector")


def _matrix(cfg, key):
    flat = _vector(cfg, key)
    dim = math.isqrt(len(flat))
    if dim * dim != len(flat):
        raise ConfigError(f"{key}: {len(flat)} entries do not form a square "
                          f"row-major matrix")
    return flat.reshape(dim, dim)


def build_metric(cfg, implied=None):
    name = cfg.get('metric.name', implied)
    if name is None:
        raise ConfigError("missing required key metric.name")
    if implied is not None and name != implied:
        raise ConfigError(f"this command runs on metric {implied!r}, "
                          f"config says {name!r}")
    if name == 'euclidean':
        return builtin('euclidean', {'n': _int(cfg, 'metric.params.dim')})
    if name == 'mink3':
        return builtin('mink3', {'b': _float(cfg, 'metric.params.b')})
    if name == 'numata_disk':
        return builtin('numata_disk')
    if name == 'randers':
        params = {'a': _matrix(cfg, 'metric.params.a'),
                  'b0': _vector(cfg, 'metric.params.b0')}
        if 'metric.params.B' in cfg:
            params['B'] = _matrix(cfg, 'metric.params.B')
        return builtin('randers', params)
    if name == 'riemannian':
        return builtin('riemannian',
                       {'matrix': _matrix(cfg, 'metric.params.matrix')})
    raise ConfigError(f"unknown metric name {name!r}")


def integrator_config(cfg):
    span = _vector(cfg, 'integrator.s_span', default=(0.0, 1.0))
    if len(span) != 2:
        raise ConfigError("integrator.s_span needs exactly two entries")
    kwargs = dict(s_span=(float(span[0]), float(span[1])))
    for field in ('rel_tol', 'abs_tol', 'max_step', 'min_step'):
        key = f'integrator.{field}'
        if key in cfg:
            kwargs[field] = _float(cfg, key)
    try:
        config = IntegratorConfig(**kwargs)
    except ArtifactError as exc:
        raise ConfigError(f"bad integrator settings: {exc}")
    return config, _int(cfg, 'integrator.n_samples', default=201)


# ---------------------------------------------------------------------------
# output files


def _fmt(value):
    return '%.16e' % float(value)


def _resolve_out(cfg, cli_out, command, want_csv):
    ext = '.csv' if want_csv else '.txt'
    path = cli_out or cfg.get('output.path') or (command + ext)
    base = os.environ.get('FINSLER_OUT_DIR', '')
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def write_trajectory_csv(path, traj, dim):
    cols = ['s']
    for tag in ('x', 'y', 'u', 'w'):
        cols += [f'{tag}{i + 1}' for i in range(dim)]
    cols += ['F', 'kappa1', 'tau2_norm']
    lines = [','.join(cols)]
    for k, st in enumerate(traj.states):
        row = [traj.s[k]]
        row += list(st.x) + list(st.y) + list(st.u) + list(st.w)
        row += [traj.F_series[k], traj.kappa1_series[k],
                traj.residual_series[k]]
        lines.append(','.join(_fmt(v) for v in row))
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write('\n'.join(lines) + '\n')


def write_summary(path, pairs):
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        for key, value in pairs:
            if isinstance(value, float):
                value = _fmt(value)
            fh.write(f'{key} = {value}\n')


def _write_failure(out_path, record):
    write_summary(out_path + '.failure', sorted(record.items()))


def _invariant_pairs(metric, traj, rep):
    """(key, value) diagnostics for the structured-text summary."""
    m = len(traj.states)
    k1 = rep.kappa1_series
    resid = rep.residual_series
    interior = slice(3, m - 3) if m > 12 else slice(0, m)
    mean = float(np.mean(k1))
    spread = float(np.ptp(k1) / mean) if mean > 0.0 else 0.0
    pairs = [
        ('status', traj.status),
        ('detail', traj.detail or 'none'),
        ('samples', str(m)),
        ('s_start', float(traj.s[0])),
        ('s_end', float(traj.s[-1])),
        ('F_drift', rep.F_drift),
        ('kappa1_mean', mean),
        ('kappa1_spread_rel', spread),
        ('tau2_max', float(np.max(resid))),
        ('tau2_interior_max', float(np.max(resid[interior]))),
    ]
    if traj.kind == 'biharmonic':
        lam = rep.lambda_series
        for j in range(metric.dim):
            pairs.append((f'lambda_range_{j + 1}', float(np.ptp(lam[:, j]))))
        ys = traj.array('y')
        first_integral = np.einsum('kj,kj->k', lam, ys) + k1 ** 2
        pairs.append(('lambda_y_plus_kappa1sq_max',
                      float(np.max(np.abs(first_integral)))))
    return pairs


# ---------------------------------------------------------------------------
# command runners


def _initial_vectors(cfg, metric):
    x0 = _vector(cfg, 'initial.x0')
    y0 = _vector(cfg, 'initial.y0')
    if len(x0) != metric.dim or len(y0) != metric.dim:
        raise ConfigError(
            f"initial data has dimension {len(x0)}/{len(y0)}, metric "
            f"expects {metric.dim}")
    return x0, y0


def _run_geodesic(cfg):
    metric = build_metric(cfg)
    icfg, n = integrator_config(cfg)
    x0, y0 = _initial_vectors(cfg, metric)
    traj = integrate_geodesic(metric, x0, y0, icfg, n,
                              renormalize=_bool(cfg, 'initial.renormalize'))
    rep = monitor_invariants(metric, traj)
    return metric, traj, rep, []


def _run_biharmonic(cfg):
    metric = build_metric(cfg)
    icfg, n = integrator_config(cfg)
    x0, y0 = _initial_vectors(cfg, metric)
    e3 = (_vector(cfg, 'initial.e3_hint') if 'initial.e3_hint' in cfg
          else None)
    state0 = make_biharmonic_initial(
        metric, x0, y0, _float(cfg, 'initial.kappa1'),
        _vector(cfg, 'initial.e2_hint'),
        kappa2=_float(cfg, 'initial.kappa2', default=0.0), e3_hint=e3)
    traj, rep = integrate_biharmonic(metric, state0, icfg, n)
    return metric, traj, rep, []


def _run_example_numata(cfg):
    metric = builtin('numata_disk')
    icfg, n = integrator_config(cfg)
    params = NumataClosedFormParams(
        kappa1=_float(cfg, 'initial.kappa1'),
        nu=_float(cfg, 'numata.nu', default=1.0),
        gamma_phase=_float(cfg, 'numata.gamma_phase', default=0.0),
        sign=_int(cfg, 'numata.sign', default=1),
        x0=tuple(_vector(cfg, 'numata.x0', default=(0.0, 0.0))),
        project_x0=_bool(cfg, 'numata.project_x0'))
    traj = numata_closed_form(params, n_samples=n, s_span=icfg.s_span)
    rep = monitor_invariants(metric, traj)
    return metric, traj, rep, []


def _run_example_mink3(cfg):
    metric = build_metric(cfg, implied='mink3')
    icfg, n = integrator_config(cfg)
    params = Mink3ProfileParams(
        kappa1=_float(cfg, 'initial.kappa1'),
        gamma_const=_float(cfg, 'mink3.gamma_const'),
        alpha0=_float(cfg, 'mink3.alpha0'),
        dalpha0=_float(cfg, 'mink3.dalpha0'),
        b=_float(cfg, 'metric.params.b'))
    alpha, traj = mink3_profile(params, icfg.s_span, n_samples=n)
    rep = monitor_invariants(metric, traj)
    extra = [('alpha_min', float(np.min(alpha))),
             ('alpha_max', float(np.max(alpha)))]
    return metric, traj, rep, extra


def _run_audit(cfg):
    metric = build_metric(cfg, implied='numata_disk')
    n = _int(cfg, 'audit.samples', default=100)
    rng = np.random.default_rng(_int(cfg, 'audit.seed', default=0))
    samples = []
    for _ in range(n):
        r = 0.85 * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        y = rng.normal(size=2)
        y *= rng.uniform(0.5, 2.0) / np.linalg.norm(y)
        samples.append((np.array([r * math.cos(phi), r * math.sin(phi)]), y))
    report = numata_identity_audit(metric, samples)
    pairs = [(key, float(value)) for key, value in sorted(report.items())
             if key != 'n_samples']
    pairs.insert(0, ('samples', str(report['n_samples'])))
    return pairs


# ---------------------------------------------------------------------------
# run driver


def _execute(command, cfg, cli_out):
    t0 = time.perf_counter()
    want_csv = command in _TRAJECTORY_COMMANDS
    fmt = cfg.get('output.format',
                  'csv' if want_csv else 'structured-text')
    if fmt not in ('csv', 'structured-text'):
        raise ConfigError(f"output.format must be csv or structured-text, "
                          f"got {fmt!r}")
    if fmt == 'csv' and not want_csv:
        raise ConfigError(f"command {command} writes structured-text only")
    want_csv = fmt == 'csv'
    out = _resolve_out(cfg, cli_out, command, want_csv)

    if command == 'audit':
        pairs = _run_audit(cfg)
        pairs.insert(0, ('command', command))
        pairs.append(('runtime_seconds', time.perf_counter() - t0))
        write_summary(out, pairs)
        return 0

    runner = {'geodesic': _run_geodesic,
              'biharmonic': _run_biharmonic,
              'invariants': _run_biharmonic,
              'bienergy': _run_biharmonic,
              'example-numata': _run_example_numata,
              'example-mink3': _run_example_mink3}[command]
    try:
        metric, traj, rep, extra = runner(cfg)
    except IntervalExhausted as exc:
        _write_failure(out, {'error': 'interval_exhausted',
                             'message': str(exc),
                             's_max': _fmt(exc.s_max)
                             if exc.s_max is not None else 'unknown'})
        print(f"integration failure: {exc}", file=sys.stderr)
        return 3
    except ReconstructionFailure as exc:
        record = {'error': 'reconstruction_failure', 'message': str(exc)}
        if exc.s is not None:
            record['s'] = _fmt(exc.s)
        for key, value in (exc.state or {}).items():
            record[f'state_{key}'] = _fmt(value)
        _write_failure(out, record)
        print(f"integration failure: {exc}", file=sys.stderr)
        return 3

    if want_csv:
        write_trajectory_csv(out, traj, metric.dim)
    else:
        pairs = [('command', command), ('metric', metric.label)]
        pairs += _invariant_pairs(metric, traj, rep)
        pairs += extra
        if command == 'bienergy':
            e1, e2 = bienergy(metric, traj)
            pairs.append(('energy', float(e1)))
            pairs.append(('bienergy', float(e2)))
        pairs.append(('runtime_seconds', time.perf_counter() - t0))
        write_summary(out, pairs)

    if traj.status != OK:
        _write_failure(out, {
            'error': 'early_stop', 'status': traj.status,
            'detail': traj.detail or 'none',
            'samples_completed': str(len(traj.states)),
            's_reached': _fmt(traj.s[-1])})
        print(f"integration stopped early: {traj.status} ({traj.detail})",
              file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# parameter sweeps


def _run_sweep(command, base_cfg, sweep_path, cli_out):
    grid = parse_config(sweep_path)
    banned = {'command', 'output.path', 'output.format'}
    allowed = _COMMON_KEYS | _METRIC_PARAM_KEYS | _KEYS_BY_COMMAND[command]
    lists = []
    for key, raw in grid.items():
        if key in banned or key not in allowed:
            raise ConfigError(f"sweep key {key!r} is not sweepable "
                              f"for command {command}")
        values = raw.split()
        if not values:
            raise ConfigError(f"sweep key {key!r} has no values")
        lists.append((key, values))
    combos = list(itertools.product(*(values for _, values in lists)))
    keys = [key for key, _ in lists]

    want_csv = command in _TRAJECTORY_COMMANDS and base_cfg.get(
        'output.format', 'csv') == 'csv'
    stem, ext = os.path.splitext(
        _resolve_out(base_cfg, cli_out, command, want_csv))

    def one(index_combo):
        index, combo = index_combo
        cfg = dict(base_cfg)
        cfg.update(zip(keys, combo))
        out = f'{stem}.sweep{index:03d}{ext}'
        try:
            return _execute(command, cfg, out), out, None
        except (IntervalExhausted, ReconstructionFailure) as exc:
            return 3, out, str(exc)
        except ArtifactError as exc:
            return 2, out, str(exc)

    workers = min(len(combos), os.cpu_count() or 4) or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, enumerate(combos)))

    manifest = []
    for index, ((code, out, err), combo) in enumerate(zip(results, combos)):
        settings = ' '.join(f'{k}={v}' for k, v in zip(keys, combo))
        line = f'exit={code} out={out}'
        if settings:
            line += f' {settings}'
        if err:
            line += f' error={err!r}'
        manifest.append((f'run_{index:03d}', line))
    write_summary(f'{stem}.sweep-manifest.txt', manifest)
    return max((code for code, _, _ in results), default=0)


# ---------------------------------------------------------------------------
# entry point


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog='finsler',
        description='Finsler geodesic and biharmonic curve toolkit')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', required=True,
                        help='flat key = value run description')
    parser.add_argument('--out', default=None,
                        help='output path (overrides output.path)')
    parser.add_argument('--sweep', default=None,
                        help='parameter grid file; fans out one run per '
                             'combination')
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        _check_keys(cfg, args.command)
        if args.sweep:
            return _run_sweep(args.command, cfg, args.sweep, args.out)
        return _execute(args.command, cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntervalExhausted, ReconstructionFailure, IntegrationError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return 3
    except ArtifactError as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return 2


if __name__ == '__main__':
    raise SystemExit(main())
