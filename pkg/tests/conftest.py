import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one PASS/FAIL line per acceptance criterion, collected while the
    # acceptance module runs
    mod = sys.modules.get('test_acceptance')
    lines = getattr(mod, 'REPORT', None) if mod else None
    if lines:
        terminalreporter.section('acceptance criteria')
        for line in lines:
            terminalreporter.write_line(line)
