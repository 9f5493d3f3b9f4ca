import argparse
import os
import sys
import typing
from pathlib import Path

import dotenv
import pandas as pd
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from attacks import AttackBudget, AttackMethod, default_target, run_attack
from errors import ConfigError, PerturbEvalError, StageError
from harness.config import ExperimentConfig, load_config
from harness.datasets import load_datasets, split_dataset
from harness.pipeline import analyze_scores, run_pipeline
from harness.reports import read_scores, safe_name, write_curves, write_json, write_matrix, write_rankings
from imaging.image_io import map_preview, read_pnm, write_map_grid, write_pnm
from method_executor import build_default_executor
from methods.maps import normalize_map
from metrics.curves import DEFAULT_STEPS, auc
from metrics.metric_registry import METRICS, compute_curve, is_curve_metric, metric_spec
from nn.architectures import build_architecture
from nn.serialization import load_model, save_model
from nn.tensors import TargetClass
from nn.training import TrainConfig, train

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3

console = Console()


def configure_logging() -> None:
    logger.remove()
    logger.add(sys.stderr, level=os.getenv("PERTURB_EVAL_LOG_LEVEL", "WARNING"))
    logger.add(os.getenv("PERTURB_EVAL_LOG_FILE", "perturb_eval.log"), rotation="10 MB", level="DEBUG")


# --- config flags ---

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Experiment config file (key=value lines).")
    for name, field in ExperimentConfig.model_fields.items():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, help=field.description)


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {name: getattr(args, name) for name in ExperimentConfig.model_fields}
    defaults = {}
    if os.getenv("PERTURB_EVAL_WORKERS"):
        defaults["workers"] = os.getenv("PERTURB_EVAL_WORKERS")
    return load_config(args.config, overrides, defaults)


def _target_class(model, image, class_id: typing.Optional[int]) -> TargetClass:
    return TargetClass(class_id=class_id) if class_id is not None else default_target(model, image)


# --- subcommands ---

def cmd_methods(args: argparse.Namespace) -> int:
    table = Table(title="Attribution methods")
    table.add_column("name", style="bold cyan")
    table.add_column("description")
    for schema in build_default_executor().get_all_method_schemas():
        table.add_row(schema["name"], schema["description"])
    console.print(table)
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    out = Path(config.output_dir) / "models"
    table = Table(title="Trained models")
    for column in ("model", "train acc", "test acc", "file"):
        table.add_column(column)
    for dataset in load_datasets(config):
        train_set, test_set = split_dataset(dataset, config.train_fraction)
        num_classes = max(2, max(dataset.labels) + 1)
        for architecture in config.architectures:
            for seed in config.seeds:
                model = build_architecture(architecture, train_set.images[0].shape, num_classes, seed=seed)
                train_config = TrainConfig(learning_rate=config.learning_rate, epochs=config.epochs, batch_size=config.batch_size,
                                           seed=seed, optimizer=config.optimizer)
                trained = train(model, train_set, train_config, test_set)
                label = f"{dataset.name}/{architecture}/seed{seed}"
                path = save_model(trained, out / f"{safe_name(label)}.pevm")
                table.add_row(label, f"{trained.report.train_accuracy:.3f}", f"{trained.report.test_accuracy:.3f}", str(path))
    console.print(table)
    return EXIT_OK


def cmd_attribute(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    image = read_pnm(args.image)
    target_class = _target_class(model, image, args.class_id)
    executor = build_default_executor()
    params = {"seed": args.seed} if "seed" in executor.get(args.method).params_schema.model_fields else {}
    attribution = normalize_map(executor.execute_method(args.method, model, image.to_tensor(), target_class, **params))
    grid = write_map_grid(args.output, attribution.values)
    preview = write_pnm(Path(args.output).with_suffix(".pgm"), map_preview(attribution.values))
    console.print(Panel(f"{args.method} map for class {target_class.class_id}\n{grid}\n{preview}", title="[bold green]Attribution[/bold green]"))
    return EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    image = read_pnm(args.image)
    method = AttackMethod(args.method)
    iterations = 1 if method is AttackMethod.FGSM else args.iterations
    budget = AttackBudget(eps_steps=args.eps_steps, iterations=iterations, target=_target_class(model, image, args.class_id))
    result = run_attack(model, image, budget, method)
    write_pnm(args.output, result.adversarial)
    sidecar = write_json(Path(args.output).with_suffix(".json"), {
        "method": method.value,
        "eps_steps": args.eps_steps,
        "iterations": iterations,
        "iterations_used": result.iterations_used,
        "target_class": budget.target.class_id,
        "success": result.success,
        "probability_drop": result.probability_drop,
    })
    style = "green" if result.success else "yellow"
    console.print(Panel(
        f"success: {result.success}\nprobability drop: {result.probability_drop:.4f}\niterations: {result.iterations_used}\n{args.output}\n{sidecar}",
        title=f"[bold {style}]{method.value.upper()} k={args.eps_steps}[/bold {style}]",
    ))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    if not is_curve_metric(args.metric):
        raise ConfigError(f"evaluate draws curves; '{args.metric}' is a scalar metric")
    model = load_model(args.model)
    image = read_pnm(args.image)
    target_class = _target_class(model, image, args.class_id)
    executor = build_default_executor()
    params = {"seed": args.seed} if "seed" in executor.get(args.method).params_schema.model_fields else {}
    attribution = normalize_map(executor.execute_method(args.method, model, image.to_tensor(), target_class, **params))
    attack = None
    if args.metric == "perturbation":
        attack = run_attack(model, image, AttackBudget(eps_steps=args.eps_steps, iterations=1, target=target_class))
    curve = compute_curve(args.metric, model, image, attribution, min(args.steps, image.height * image.width), target_class, attack=attack)
    score = auc(curve, metric_spec(args.metric).direction)
    if args.output:
        write_curves(args.output, {(0, args.method): curve})
        write_json(Path(args.output).with_suffix(".json"), [{"image_id": 0, "method": args.method, "metric": args.metric,
                                                            "auc": score.auc, "direction": score.direction.value}])
    console.print(Panel(f"AUC = {score.auc:.4f} ({score.direction.value})", title=f"[bold green]{args.metric} / {args.method}[/bold green]"))
    return EXIT_OK


def _print_rankings(rankings: pd.DataFrame) -> None:
    for metric, group in rankings.groupby("metric", sort=True):
        pivot = group.pivot(index="method", columns="combo", values="rank").sort_index()
        table = Table(title=f"{metric} ({metric_spec(metric).direction.value}) ranks")
        table.add_column("method", style="bold cyan")
        for combo in pivot.columns:
            table.add_column(str(combo), justify="right")
        for method, row in pivot.iterrows():
            table.add_row(str(method), *[str(int(v)) for v in row.tolist()])
        console.print(table)


def cmd_analyze(args: argparse.Namespace) -> int:
    report = analyze_scores(read_scores(args.scores), args.top_k)
    out = Path(args.output)
    write_rankings(out / "rankings.csv", report.rankings)
    write_json(out / "rankings.json", report.rankings)
    for metric, matrix in sorted(report.consistency.items()):
        write_matrix(out / "consistency" / f"{metric}.csv", matrix)
    write_json(out / "sanity.json", report.sanity)
    write_json(out / "top_k.json", report.top_k)
    _print_rankings(pd.read_csv(out / "rankings.csv"))
    for metric, matrix in sorted(report.consistency.items()):
        console.print(f"[bold]{metric}[/bold] consistency: {matrix.mean:.3f} +- {matrix.std:.3f}")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    console.print(Panel(f"{len(config.dataset_seeds)} dataset(s) x {len(config.architectures)} architecture(s) x {len(config.seeds)} seed(s)\n"
                        f"methods: {', '.join(config.methods)}\nmetrics: {', '.join(config.metrics)}",
                        title="[bold]Pipeline[/bold]"))
    manifest = run_pipeline(config)
    out = Path(config.output_dir)
    if (out / "rankings.csv").exists():
        rankings = pd.read_csv(out / "rankings.csv")
        if not rankings.empty:
            _print_rankings(rankings)
    evaluated = sum(record.evaluated for record in manifest.images)
    console.print(Panel(f"config hash: {manifest.config_hash[:16]}\ncombos: {len(manifest.combos)}\n"
                        f"images evaluated: {evaluated}/{len(manifest.images)}\nartifacts: {len(manifest.artifacts)} in {out}",
                        title="[bold green]Done[/bold green]"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perturb-eval", description="Evaluate attribution maps with adversarial perturbations.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("methods", help="List registered attribution methods.").set_defaults(func=cmd_methods)

    p = sub.add_parser("train", help="Train one model per (dataset, architecture, seed).")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    def single_image(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help="Model file written by `train`.")
        p.add_argument("--image", required=True, help="PGM/PPM input image.")
        p.add_argument("--class", dest="class_id", type=int, default=None, help="Target class; defaults to the prediction.")
        return p

    p = single_image("attribute", "Compute one attribution map.")
    p.add_argument("--method", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="Map grid file (a .pgm preview is written next to it).")
    p.set_defaults(func=cmd_attribute)

    p = single_image("attack", "Run FGSM or PGD.")
    p.add_argument("--method", choices=[m.value for m in AttackMethod], default=AttackMethod.FGSM.value)
    p.add_argument("--eps-steps", type=int, default=1)
    p.add_argument("--iters", "--iterations", dest="iterations", type=int, default=10, help="PGD iterations; FGSM always takes one step.")
    p.add_argument("--output", required=True, help="Adversarial image (PGM/PPM); a .json sidecar holds the outcome.")
    p.set_defaults(func=cmd_attack)

    p = single_image("evaluate", "Draw one score-function curve and report its AUC.")
    p.add_argument("--method", required=True)
    p.add_argument("--metric", required=True, choices=sorted(METRICS))
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--eps-steps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="Curve CSV; a .json record with the AUC is written next to it.")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="Rankings, consistency and sanity counts from a scores.csv.")
    p.add_argument("--scores", required=True)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pipeline", help="Run the full experiment described by a config.")
    _add_config_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: typing.Optional[typing.List[str]] = None) -> int:
    dotenv.load_dotenv()
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError, FileNotFoundError) as e:
        logger.error(f"Configuration error: {e}")
        console.print(Panel(f"[bold red]{e}[/bold red]", title="[bold red]Config Error[/bold red]"))
        return EXIT_CONFIG
    except StageError as e:
        logger.error(f"Stage failure: {e}")
        console.print(Panel(f"[bold red]{e}[/bold red]\npartial outputs are flagged in manifest.json", title="[bold red]Stage Failure[/bold red]"))
        return EXIT_STAGE
    except PerturbEvalError as e:
        logger.error(f"{args.command} failed: {e}")
        console.print(Panel(f"[bold red]{e}[/bold red]", title="[bold red]Error[/bold red]"))
        return EXIT_STAGE
    except (KeyError, ValueError) as e:
        # Unknown method names and out-of-range arguments.
        logger.error(f"Invalid arguments to {args.command}: {e}")
        console.print(Panel(f"[bold red]{e}[/bold red]", title="[bold red]Config Error[/bold red]"))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
