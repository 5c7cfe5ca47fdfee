import json
import math

import numpy as np
import pytest

from summinglab.__main__ import EXIT_INPUT, EXIT_OK, EXIT_USAGE, main
from summinglab.files import OperatorFile, digest
from summinglab.operators import LinearOp
from summinglab.spaces import SpaceSpec

SMALL = ['--m-max', '2', '--atoms', '90', '--grid', '90', '--budget', '16']


@pytest.fixture(autouse=True)
def _workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def _write(path, obj):
    path.write_text(json.dumps(obj), encoding='utf-8')
    return str(path)


@pytest.fixture
def identity_file(tmp_path):
    space = SpaceSpec(dim=2, exponent=2)
    T = LinearOp(domain=space, codomain=space, matrix=np.eye(2))
    stored = OperatorFile.of(T).model_dump(mode='json', by_alias=True)
    return _write(tmp_path / 'identity2.json', stored)


def _payload(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_usage_errors():
    assert main([]) == EXIT_USAGE
    assert main(['bogus']) == EXIT_USAGE
    assert main(['holder-check', '--p', '2']) == EXIT_USAGE


def test_holder_check(capsys):
    code = main(['holder-check', '--p', '2', '--q0', '4/3', '--q1', '4', '--trials', '50',
                 '--max-length', '500', '--seed', '1'])
    assert code == EXIT_OK
    payload = _payload(capsys)
    assert payload['experiment'] == 'holder-check'
    assert payload['verdict'] == 'consistent'
    assert payload['metrics']['max_ratio'] <= 1.0 + 1e-9


def test_holder_check_bad_identity():
    argv = ['holder-check', '--p', '2', '--q0', '1', '--q1', '3', '--trials', '5']
    assert main(argv) == EXIT_INPUT


def test_runs_are_deterministic(capsys):
    argv = ['holder-check', '--p', '3', '--q0', '1', '--q1', '3', '--trials', '20',
            '--max-length', '100']
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_out_writes_envelope(tmp_path, capsys):
    out = tmp_path / 'reports'
    code = main(['holder-check', '--p', '2', '--q0', '1', '--q1', '2', '--trials', '10',
                 '--max-length', '50', '--out', str(out)])
    assert code == EXIT_OK
    payload = _payload(capsys)
    files = list((out / 'holder-check').glob('*.json'))
    assert len(files) == 1
    envelope = json.loads(files[0].read_text())
    assert envelope['payload'] == payload
    assert envelope['digest'] == digest(payload)


def test_norm(tmp_path, capsys):
    path = _write(tmp_path / 'basis.json', {'schema': '1', 'space': {'dim': 2, 'exponent': '2'},
                                             'items': [[1.0, 0.0], [0.0, 1.0]]})
    assert main(['norm', 'weak', path, '--p', '2']) == EXIT_OK
    assert _payload(capsys)['metrics']['value'] == pytest.approx(1.0)
    assert main(['norm', 'strong', path, '--p', '2']) == EXIT_OK
    assert _payload(capsys)['metrics']['value'] == pytest.approx(math.sqrt(2.0))


def test_constant_rejects_non_gamma_pair(identity_file):
    assert main(['constant', identity_file, '--p', '2', '--q0', '1', '--q1', '3']) == EXIT_INPUT


def test_constant_rejects_bad_files(tmp_path):
    broken = tmp_path / 'broken.json'
    broken.write_text('[')
    assert main(['constant', str(broken), '--p', '2']) == EXIT_INPUT
    short = _write(tmp_path / 'short.json', {
        'schema': '1', 'kind': 'linear', 'codomain': {'dim': 2, 'exponent': '2'},
        'domains': [{'dim': 2, 'exponent': '2'}], 'entries': [1.0],
    })
    assert main(['constant', short, '--p', '2']) == EXIT_INPUT


def test_constant_identity(identity_file, capsys):
    assert main(['constant', identity_file, '--p', '2', *SMALL]) == EXIT_OK
    bracket = _payload(capsys)['brackets'][0]
    assert bracket['label'] == 'C(1,2;2)'
    assert bracket['lower'] >= math.sqrt(2.0) - 1e-6
    assert bracket['upper'] == pytest.approx(math.sqrt(2.0), rel=0.05)


def test_dominate_and_check(identity_file, tmp_path, capsys):
    cert = tmp_path / 'cert.json'
    argv = ['dominate', identity_file, '--p', '2', '--certificate', str(cert), *SMALL]
    assert main(argv) == EXIT_OK
    fitted = _payload(capsys)['metrics']['constant']
    assert cert.exists()
    assert main(['dominate', identity_file, '--p', '2', '--check', str(cert), *SMALL]) == EXIT_OK
    checked = _payload(capsys)['metrics']['validated']
    assert checked == pytest.approx(fitted, rel=0.05)


def test_reports_default_directory(tmp_path, capsys):
    code = main(['holder-check', '--p', '2', '--q0', '1', '--q1', '2', '--trials', '10',
                 '--max-length', '50'])
    assert code == EXIT_OK
    payload = _payload(capsys)
    files = list((tmp_path / 'reports' / 'holder-check').glob('*.json'))
    assert len(files) == 1
    assert json.loads(files[0].read_text())['payload'] == payload


def test_empty_out_skips_writing(tmp_path):
    code = main(['holder-check', '--p', '2', '--q0', '1', '--q1', '2', '--trials', '10',
                 '--max-length', '50', '--out', ''])
    assert code == EXIT_OK
    assert not (tmp_path / 'reports').exists()


def test_constant_is_deterministic(identity_file, capsys):
    argv = ['constant', identity_file, '--p', '2', '--q0', '4/3', '--q1', '4', *SMALL]
    assert main(argv) == EXIT_OK
    first = _payload(capsys)
    assert main(argv) == EXIT_OK
    assert _payload(capsys) == first
