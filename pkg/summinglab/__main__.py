"""Command-line frontend.

    python -m summinglab constant --p 2 --q0 1 --q1 2 identity2.json
    python -m summinglab holder-check --p 2 --q0 4/3 --q1 4 --trials 100 --seed 1

Exit codes: 0 ok, 1 usage, 2 invalid input, 3 inconsistent verdict,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from pydantic import ValidationError

from .config import SETTINGS, Settings
from .domination import refine, validate_certificate
from .errors import InputError, NumericalError
from .experiments import (
    Bracket,
    Budgets,
    Report,
    Verdict,
    coincidence,
    cross_verdict,
    holder_factor_check,
    multi_equivalence,
    triviality_trend,
)
from .files import (
    CertificateFile,
    OperatorFile,
    SequenceFile,
    canonical_json,
    load_model,
    operator_digest,
    write_envelope,
)
from .operators import MultilinearOp, Operator
from .seqnorms import WeakConfig, cohen_norm, strong_norm, weak_norm
from .spaces import format_exponent, parse_exponent
from .utils import log_error, log_info, set_log_level
from .witness import ExponentScheme

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INCONSISTENT = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    """Raised instead of argparse's own exit so usage errors map to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _file_digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise InputError(f'Cannot read {path}: {e}') from e


def _label(path: str | None, fallback: str) -> str:
    raw = Path(path).stem if path else fallback
    return re.sub(r'[^A-Za-z0-9_.-]+', '_', raw)


def _budgets(args: argparse.Namespace) -> Budgets:
    overrides = {
        name: getattr(args, name)
        for name in ('seed', 'budget', 'm_max', 'atoms', 'grid', 'tol')
        if getattr(args, name) is not None
    }
    settings = Settings.model_validate({**SETTINGS.model_dump(), **overrides})
    return Budgets.from_settings(settings)


def _scheme(args: argparse.Namespace, T: Operator | None) -> ExponentScheme:
    if args.p is None:
        raise UsageError('--p is required')
    arity = T.arity if T is not None else 1
    if args.joint:
        return ExponentScheme.multi_joint(args.p, arity)
    if args.separate:
        return ExponentScheme.multi_separate(args.p, arity)
    if args.q_tuple:
        q0, *qs = args.q_tuple[0].split(',')
        return ExponentScheme.multi_general(args.p, q0, qs)
    if arity != 1:
        raise UsageError('A multilinear operator needs --joint, --separate or --q-tuple')
    q0 = args.q0 if args.q0 is not None else '1'
    q1 = args.q1 if args.q1 is not None else args.p
    return ExponentScheme.linear_scheme(args.p, q0, q1)


def _operator(path: str) -> tuple[Operator, dict[str, str]]:
    model = load_model(OperatorFile, path)
    T = model.to_operator()
    return T, {'operator_file': _file_digest(path), 'operator_digest': operator_digest(T)}


def run_norm(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    seq = load_model(SequenceFile, args.sequence).to_sequence()
    p = parse_exponent(args.p)
    cfg = WeakConfig(budget=budgets.witness.weak.budget, seed=budgets.seed)
    estimate = {
        'strong': lambda: strong_norm(seq, p),
        'weak': lambda: weak_norm(seq, p, config=cfg),
        'cohen': lambda: cohen_norm(seq, p, config=cfg),
    }[args.kind]()
    log_info(f'{args.kind} norm: {estimate.value:.12g} ({estimate.method.value})')
    report = Report(
        experiment='norm',
        inputs={
            'sequence_file': _file_digest(args.sequence),
            'kind': args.kind,
            'p': format_exponent(p),
            'seed': budgets.seed,
        },
        verdict=Verdict.CONSISTENT,
        metrics={'value': estimate.value},
        notes=[f'method {estimate.method.value}', f'lower_bound_only={estimate.lower_bound_only}'],
    )
    return report, _label(args.sequence, 'sequence')


def run_constant(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    T, digests = _operator(args.operator)
    scheme = _scheme(args, T)
    estimate = refine(T, scheme, budgets.refine)
    cert = estimate.certificate
    bracket = Bracket(
        label=scheme.label,
        lower=estimate.lower,
        upper=cert.constant if cert is not None else estimate.upper,
        lower_rigorous=estimate.lower_rigorous,
        upper_rigorous=estimate.upper_rigorous,
        converged=estimate.converged,
    )
    verdict, notes = cross_verdict([bracket], budgets.tol)
    if estimate.advisory_best is not None:
        notes.append(f'best advisory ratio {estimate.advisory_best:.9g}')
    report = Report(
        experiment='constant',
        inputs={**digests, 'scheme': scheme.label, 'budgets': budgets.describe()},
        brackets=[bracket],
        verdict=verdict,
        notes=notes,
    )
    return report, _label(args.operator, 'operator')


def run_dominate(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    T, digests = _operator(args.operator)
    scheme = _scheme(args, T)
    label = _label(args.operator, 'operator')
    if args.check:
        cert = load_model(CertificateFile, args.check)
        if cert.operator_digest != digests['operator_digest']:
            raise InputError('Certificate was fitted for a different operator')
        result = validate_certificate(T, cert.to_certificate(), budgets.refine.budget, budgets.seed)
        report = Report(
            experiment='dominate',
            inputs={**digests, 'certificate_file': _file_digest(args.check)},
            verdict=Verdict.CONSISTENT,
            metrics={'validated': result.value, 'stored_constant': cert.constant},
            notes=[f'heuristic={result.heuristic}'],
        )
        return report, label
    estimate = refine(T, scheme, budgets.refine)
    cert_file = CertificateFile.of(estimate.certificate, T)
    target = Path(args.certificate or f'{label}.certificate.json')
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps(cert_file.model_dump(mode='json', by_alias=True), indent=2) + '\n',
        encoding='utf-8',
    )
    log_info(f'certificate written to {target}')
    report = Report(
        experiment='dominate',
        inputs={**digests, 'scheme': scheme.label, 'budgets': budgets.describe()},
        verdict=Verdict.CONSISTENT,
        metrics={'constant': estimate.certificate.constant, 'lower': estimate.lower},
        notes=[f'converged={estimate.converged}', f'rigorous={estimate.upper_rigorous}'],
    )
    return report, label


def run_coincidence(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    T, digests = _operator(args.operator)
    pairs = [tuple(text.split(',', 1)) for text in args.pairs]
    if any(len(pair) != 2 for pair in pairs):
        raise UsageError('--pairs takes Q0,Q1 items')
    report = coincidence(T, args.p, pairs, budgets)
    report.inputs.update(digests)
    return report, _label(args.operator, 'operator')


def run_multi(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    T, digests = _operator(args.operator)
    if not isinstance(T, MultilinearOp):
        raise InputError('multi-equivalence needs a multilinear operator file')
    schemes = [
        ExponentScheme.multi_joint(args.p, T.arity),
        ExponentScheme.multi_separate(args.p, T.arity),
    ]
    for text in args.q_tuple or []:
        q0, *qs = text.split(',')
        schemes.append(ExponentScheme.multi_general(args.p, q0, qs))
    report = multi_equivalence(T, args.p, schemes, budgets)
    report.inputs.update(digests)
    return report, _label(args.operator, 'operator')


def run_triviality(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    T, digests = _operator(args.operator)
    if args.schedule:
        try:
            schedule = tuple(int(v) for v in args.schedule.split(','))
        except ValueError as e:
            raise UsageError(f'Bad --schedule {args.schedule!r}') from e
        budgets = budgets.model_copy(update={'m_schedule': schedule})
    report = triviality_trend(T, args.p, args.q0, args.q1, budgets)
    report.inputs.update(digests)
    return report, _label(args.operator, 'operator')


def run_holder(args: argparse.Namespace, budgets: Budgets) -> tuple[Report, str]:
    report = holder_factor_check(
        args.p, args.q0, args.q1, trials=args.trials, seed=budgets.seed, max_length=args.max_length
    )
    return report, _label(None, f'p{args.p}_q0{args.q0}_q1{args.q1}')


def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--seed', type=int, help='Master seed.')
    common.add_argument('--budget', type=int, help='Ball sample size for heuristic sweeps.')
    common.add_argument('--m-max', type=int, help='Largest witness length.')
    common.add_argument('--atoms', type=int, help='Certificate atoms on the codomain sphere.')
    common.add_argument('--grid', type=int, help='Oracle grid resolution (dim 2).')
    common.add_argument('--tol', type=float, help='Relative cross-consistency tolerance.')
    common.add_argument(
        '--out',
        default='reports',
        help='Write the report to OUT/<experiment>/<label>.json (default: reports; "" skips).',
    )
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR.')
    return common


def _scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--p', required=True)
    parser.add_argument('--q0')
    parser.add_argument('--q1')
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--joint', action='store_true', help='Joint multilinear scheme.')
    group.add_argument('--separate', action='store_true', help='Separate np scheme.')
    group.add_argument('--q-tuple', action='append', help='Q0,Q1,...,QN general scheme.')


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog='summinglab', description='Summing-constant laboratory.')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    norm = sub.add_parser('norm', parents=[common], help='Sequence norms.')
    norm.add_argument('kind', choices=['strong', 'weak', 'cohen'])
    norm.add_argument('sequence')
    norm.add_argument('--p', required=True)
    norm.set_defaults(handler=run_norm)

    constant = sub.add_parser('constant', parents=[common], help='Bracket a best constant.')
    constant.add_argument('operator')
    _scheme_flags(constant)
    constant.set_defaults(handler=run_constant)

    dominate = sub.add_parser('dominate', parents=[common], help='Fit or check a certificate.')
    dominate.add_argument('operator')
    _scheme_flags(dominate)
    dominate.add_argument('--certificate', help='Where to write the fitted certificate.')
    dominate.add_argument('--check', help='Validate this certificate file instead of fitting.')
    dominate.set_defaults(handler=run_dominate)

    coin = sub.add_parser('verify-coincidence', parents=[common], help='Gamma-pair coincidence.')
    coin.add_argument('operator')
    coin.add_argument('--p', required=True)
    coin.add_argument('--pairs', nargs='+', default=[], help='Q0,Q1 items, e.g. 4/3,4.')
    coin.set_defaults(handler=run_coincidence)

    multi = sub.add_parser('multi-equivalence', parents=[common], help='Multilinear schemes.')
    multi.add_argument('operator')
    multi.add_argument('--p', required=True)
    multi.add_argument('--q-tuple', action='append', help='Q0,Q1,...,QN general scheme.')
    multi.set_defaults(handler=run_multi)

    triv = sub.add_parser('adjudicate-triviality', parents=[common], help='Triviality trend.')
    triv.add_argument('operator')
    triv.add_argument('--p', required=True)
    triv.add_argument('--q0', required=True)
    triv.add_argument('--q1', required=True)
    triv.add_argument('--schedule', help='Comma separated m values.')
    triv.set_defaults(handler=run_triviality)

    holder = sub.add_parser('holder-check', parents=[common], help='Sampled Hoelder check.')
    holder.add_argument('--p', required=True)
    holder.add_argument('--q0', required=True)
    holder.add_argument('--q1', required=True)
    holder.add_argument('--trials', type=int, default=1000)
    holder.add_argument('--max-length', type=int, default=10_000)
    holder.set_defaults(handler=run_holder)
    return parser


def _emit(report: Report, label: str, out: str | None) -> None:
    payload = report.payload()
    if out:
        path = Path(out) / report.experiment / f'{label}.json'
        envelope = write_envelope(path, payload)
        log_info(f'report written to {path} (digest {envelope.digest[:12]})')
    print(canonical_json(payload))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        log_error(f'usage: {e}')
        return EXIT_USAGE
    if args.log_level:
        set_log_level(args.log_level.upper())
    handler: Callable[[argparse.Namespace, Budgets], tuple[Report, str]] = args.handler
    try:
        budgets = _budgets(args)
        report, label = handler(args, budgets)
        report.inputs['argv'] = list(argv if argv is not None else sys.argv[1:])
        _emit(report, label, args.out)
    except UsageError as e:
        log_error(f'usage: {e}')
        return EXIT_USAGE
    except (InputError, ValidationError) as e:
        log_error(f'invalid input: {e}')
        return EXIT_INPUT
    except NumericalError as e:
        log_error(f'numerical failure: {e}')
        return EXIT_NUMERICAL
    if report.verdict is Verdict.INCONSISTENT:
        log_error(f'{report.experiment}: verdict inconsistent')
        return EXIT_INCONSISTENT
    return EXIT_OK


def run(argv: Sequence[str] | None = None) -> int:
    return main(argv)


if __name__ == '__main__':
    sys.exit(main())
