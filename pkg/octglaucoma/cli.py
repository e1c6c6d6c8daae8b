"""
Command-Line Interface Module

This module is the entry point of the ``octglaucoma`` command.

Commands:
- synth:    write a seeded synthetic dataset
- extract:  compute the hand-crafted feature matrix of a dataset
- select:   run statistical feature selection on the training split
- train:    fit the final model on the training split
- eval:     evaluate a saved model on the test split
- run:      run the complete hdl / hybrid / deep protocol
- describe: per-class feature statistics and thickness correlations

Every command accepts --config, --seed, --workers and --log-level. Errors are
reported as one ``error: <category>: <message>`` line on stderr and mapped to
exit codes (usage 2, data 3, numeric 4, anything else 1).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .classifier import load_model, save_model
from .config import ExperimentConfig, Settings, load_experiment_config, save_experiment_config
from .dataset_io import load_dataset, read_feature_matrix, write_dataset, write_feature_matrix
from .errors import ConfigError, OctGlaucomaError, UsageError
from .extraction import extract_all
from .metrics import evaluate
from .models import FeatureMatrix
from .partition import patient_split
from .pipeline import Cohort, ExperimentMode, build_matrix, derive_seed, fit_on_patients, run_experiment
from .reports import (
    confusion_csv,
    correlation_csv,
    description_csv,
    folds_table_csv,
    loss_trace_csv,
    metrics_table_csv,
    provenance_line,
    roc_points_csv,
    selection_table_csv,
    split_table_csv,
    write_report,
)
from .selection import select_features
from .synthetic import SynthParams, generate

logger = logging.getLogger(__name__)

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    parent = ArgumentParser(add_help=False)
    parent.add_argument('--config', help='experiment configuration file (key=value lines)')
    parent.add_argument('--seed', type=int, help='master seed; derives the four named seeds')
    parent.add_argument('--workers', type=int, help='worker processes (default: config or OCTG_WORKERS)')
    parent.add_argument('--log-level', type=str.upper, choices=LOG_LEVELS,
                        help='logging level (default: OCTG_LOG_LEVEL)')
    return parent


def _embedding_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--mode', default='hdl', choices=[m.value for m in ExperimentMode])
    parser.add_argument('--embeddings', help='embedding table for hybrid/deep modes')
    parser.add_argument('--standin-embedder', action='store_true',
                        help='use the seeded stand-in embedder for hybrid/deep modes')


def build_parser() -> ArgumentParser:
    common = _common_options()
    parser = ArgumentParser(prog='octglaucoma', description='Glaucoma detection from OCT B-scans.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', parents=[common], help='write a synthetic dataset')
    synth.add_argument('--out', required=True, help='output directory')
    synth.add_argument('--patients', type=int, default=50, help='patients per class')
    synth.add_argument('--scans-per-patient', type=int, default=2)
    synth.add_argument('--height', type=int, default=248)
    synth.add_argument('--width', type=int, default=384)
    synth.add_argument('--ablate', action='store_true', help='remove every class signal')
    synth.set_defaults(handler=cmd_synth)

    extract = commands.add_parser('extract', parents=[common], help='extract hand-crafted features')
    extract.add_argument('--data', required=True, help='manifest, its directory, or its path without .csv')
    extract.add_argument('--out', required=True, help='output feature matrix file')
    extract.set_defaults(handler=cmd_extract)

    select = commands.add_parser('select', parents=[common], help='select features on the training split')
    select.add_argument('--data', required=True)
    select.add_argument('--features', required=True, help='feature matrix written by extract')
    select.add_argument('--out', required=True, help='output directory')
    select.set_defaults(handler=cmd_select)

    train = commands.add_parser('train', parents=[common], help='train the final model')
    train.add_argument('--data', required=True)
    train.add_argument('--features', help='precomputed hand-crafted features')
    train.add_argument('--out', required=True, help='output directory')
    _embedding_options(train)
    train.set_defaults(handler=cmd_train)

    evaluate_cmd = commands.add_parser('eval', parents=[common], help='evaluate a saved model')
    evaluate_cmd.add_argument('--data', required=True)
    evaluate_cmd.add_argument('--model', required=True, help='model file written by train or run')
    evaluate_cmd.add_argument('--features', help='precomputed hand-crafted features')
    evaluate_cmd.add_argument('--split', default='test', choices=['test', 'train', 'all'])
    evaluate_cmd.add_argument('--out', required=True, help='output directory')
    _embedding_options(evaluate_cmd)
    evaluate_cmd.set_defaults(handler=cmd_eval)

    run = commands.add_parser('run', parents=[common], help='run the complete protocol')
    run.add_argument('--data', required=True)
    run.add_argument('--features', help='precomputed hand-crafted features')
    run.add_argument('--out', required=True, help='output directory')
    _embedding_options(run)
    run.set_defaults(handler=cmd_run)

    describe = commands.add_parser('describe', parents=[common], help='describe the feature matrix')
    describe.add_argument('--data', required=True)
    describe.add_argument('--features', help='precomputed hand-crafted features')
    describe.add_argument('--out', required=True, help='output directory')
    describe.set_defaults(handler=cmd_describe)

    return parser


def _load_config(args) -> ExperimentConfig:
    overrides: Dict[str, Any] = {}
    if getattr(args, 'embeddings', None):
        overrides['embedding_path'] = args.embeddings
    if getattr(args, 'standin_embedder', False):
        overrides['standin_embedder'] = True
    config = load_experiment_config(args.config, overrides)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _workers(args, config: ExperimentConfig) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError('--workers must be at least 1')
        return args.workers
    return config.workers if config.workers > 1 else Settings.WORKERS


def _features(args, dataset, config: ExperimentConfig, workers: int) -> FeatureMatrix:
    if getattr(args, 'features', None):
        return read_feature_matrix(args.features).select_instances(dataset.scan_ids)
    return extract_all(dataset, config, workers)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    config = _load_config(args)
    try:
        params = SynthParams(
            n_patients=args.patients,
            scans_per_patient=args.scans_per_patient,
            height=args.height,
            width=args.width,
            seed=0 if args.seed is None else args.seed,
        )
    except ValidationError as e:
        raise ConfigError(f"invalid synthetic parameters: {e.errors()[0]['msg']}") from e
    if args.ablate:
        params = params.ablated()
    manifest = write_dataset(generate(params), args.out, provenance_line('synth', config, params.seed))
    print(manifest)
    return 0


def cmd_extract(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(args.data)
    matrix = extract_all(dataset, config, _workers(args, config))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_feature_matrix(matrix, out, provenance_line('extract', config, args.seed))
    print(out)
    return 0


def cmd_select(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(args.data)
    matrix = read_feature_matrix(args.features)
    cohort = Cohort.from_dataset(dataset)
    split = patient_split(dataset, config.train_ratio, config.split_seed)
    train = matrix.select_instances(cohort.scan_ids(split.train_patients))
    selected, report = select_features(train, cohort.scan_labels(split.train_patients),
                                       config.alpha, config.redundancy_r)
    provenance = provenance_line('select', config, args.seed)
    out = _out_dir(args)
    write_report(selection_table_csv(report, provenance), out)
    write_feature_matrix(selected, out / 'selected_features.csv', provenance)
    for family, (kept, total) in report.family_summary().items():
        logger.info(f"{family}: kept {kept} of {total}")
    print(out)
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    workers = _workers(args, config)
    dataset = load_dataset(args.data)
    mode = ExperimentMode(args.mode)
    features = read_feature_matrix(args.features) if args.features else None
    matrix = build_matrix(dataset, mode, config, features, workers=workers)
    cohort = Cohort.from_dataset(dataset)
    split = patient_split(dataset, config.train_ratio, config.split_seed)
    fit = fit_on_patients(matrix, cohort, split.train_patients, config,
                          derive_seed(config.train_seed, config.k_folds))

    provenance = provenance_line('train', config, args.seed)
    out = _out_dir(args)
    save_model(fit.model, out / 'model.txt', provenance)
    write_report(selection_table_csv(fit.selection, provenance), out)
    write_report(loss_trace_csv(fit.trace, provenance), out)
    save_experiment_config(config, out / 'config.txt', provenance)
    print(out)
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    workers = _workers(args, config)
    dataset = load_dataset(args.data)
    model = load_model(args.model)
    split = patient_split(dataset, config.train_ratio, config.split_seed)
    if args.split == 'test':
        dataset = split.test_dataset(dataset)
    elif args.split == 'train':
        dataset = split.train_dataset(dataset)

    mode = ExperimentMode(args.mode)
    features = read_feature_matrix(args.features) if args.features else None
    matrix = build_matrix(dataset, mode, config, features, workers=workers)
    report = evaluate(model, matrix, dataset.labels, config.threshold, strict=False)

    provenance = provenance_line('eval', config, args.seed)
    out = _out_dir(args)
    write_report(metrics_table_csv(report, provenance=provenance), out)
    write_report(confusion_csv(report, provenance), out)
    write_report(roc_points_csv(report, provenance), out)
    print(out)
    return 0


def cmd_run(args) -> int:
    config = _load_config(args)
    workers = _workers(args, config)
    dataset = load_dataset(args.data)
    features = read_feature_matrix(args.features) if args.features else None
    result = run_experiment(dataset, args.mode, config, features=features, workers=workers)

    provenance = provenance_line(f'run --mode {result.mode.value}', config, args.seed)
    out = _out_dir(args)
    write_report(metrics_table_csv(result.test_report, result.cv.mean, result.cv.std, provenance), out)
    write_report(folds_table_csv(result.fold_results, provenance), out)
    write_report(selection_table_csv(result.selection, provenance), out)
    write_report(roc_points_csv(result.test_report, provenance), out)
    write_report(confusion_csv(result.test_report, provenance), out)
    write_report(split_table_csv(result.split, result.folds, dataset.patient_labels(), provenance), out)
    write_feature_matrix(result.features, out / 'features.csv', provenance)
    save_model(result.model, out / 'model.txt', provenance)
    save_experiment_config(config, out / 'config.txt', provenance)
    print(out)
    return 0


def cmd_describe(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(args.data)
    matrix = _features(args, dataset, config, _workers(args, config))
    provenance = provenance_line('describe', config, args.seed)
    out = _out_dir(args)
    write_report(description_csv(matrix, dataset.labels, provenance), out)
    write_report(correlation_csv(matrix, provenance), out)
    print(out)
    return 0


def _configure_logging(level: Optional[str]) -> None:
    level = (level or Settings.LOG_LEVEL).upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"unknown log level {level!r}")
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and return the process exit code.

    Example:
        >>> main(['synth', '--out', 'data', '--patients', '10'])
        0
    """
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.log_level)
        return args.handler(args)
    except OctGlaucomaError as e:
        logger.debug('Command failed', exc_info=True)
        print(f"error: {e.category}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error: {str(e)}")
        print(f"error: internal: {e}", file=sys.stderr)
        return 1
