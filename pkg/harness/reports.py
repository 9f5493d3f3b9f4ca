"""Report writers. Every file has a fixed column order and sorted rows so reruns are byte-identical.

scores.csv       combo, dataset, architecture, seed, image_id, method, metric, value
scores.json      records {combo, image_id, method, metric, auc, direction} for curve metrics
rankings.csv     combo, metric, direction, rank, method, mean, std, count
curves/*.csv     image_id, method, point, x, y
matrix CSVs      first column and header row carry the matrix labels
JSON             sorted keys, two-space indent
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from analysis.rankings import RankingTable, SquareMatrix
from metrics.metric_registry import is_curve_metric, metric_spec

PathLike = Union[str, Path]
SCORE_COLUMNS = ["combo", "dataset", "architecture", "seed", "image_id", "method", "metric", "value"]
RANKING_COLUMNS = ["combo", "metric", "direction", "rank", "method", "mean", "std", "count"]
CURVE_COLUMNS = ["image_id", "method", "point", "x", "y"]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _to_jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {str(k): _to_jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_to_jsonable(v) for v in payload]
    return payload


def write_json(path: PathLike, payload: Any) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(_to_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_frame(path: PathLike, frame: pd.DataFrame) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_scores(path: PathLike, rows: Iterable[Dict[str, Any]]) -> Path:
    frame = pd.DataFrame(list(rows), columns=SCORE_COLUMNS)
    frame = frame.sort_values(["combo", "metric", "method", "image_id"], kind="mergesort").reset_index(drop=True)
    return write_frame(path, frame)


def score_records(rows: Iterable[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Curve-metric AUC rows as JSON records; scalar metrics have no AUC and are left out."""
    records = [
        {
            "combo": str(row["combo"]),
            "image_id": int(row["image_id"]),
            "method": str(row["method"]),
            "metric": str(row["metric"]),
            "auc": float(row["value"]),
            "direction": metric_spec(row["metric"]).direction.value,
        }
        for row in rows
        if is_curve_metric(row["metric"])
    ]
    return sorted(records, key=lambda r: (r["combo"], r["metric"], r["method"], r["image_id"]))


def write_score_records(path: PathLike, rows: Iterable[Dict[str, Any]]) -> Path:
    return write_json(path, score_records(rows))


def read_scores(path: PathLike) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = sorted(set(SCORE_COLUMNS) - set(frame.columns))
    if missing:
        raise ValueError(f"{path}: score file lacks columns {missing}")
    return frame


def ranking_frame(tables: Sequence[RankingTable]) -> pd.DataFrame:
    rows = [
        {
            "combo": table.label,
            "metric": table.metric,
            "direction": table.direction.value,
            "rank": row.rank,
            "method": row.method,
            "mean": row.mean,
            "std": row.std,
            "count": row.count,
        }
        for table in tables
        for row in table.rows
    ]
    frame = pd.DataFrame(rows, columns=RANKING_COLUMNS)
    return frame.sort_values(["metric", "combo", "rank"], kind="mergesort").reset_index(drop=True)


def write_rankings(path: PathLike, tables: Sequence[RankingTable]) -> Path:
    return write_frame(path, ranking_frame(tables))


def write_matrix(path: PathLike, matrix: SquareMatrix) -> Path:
    frame = pd.DataFrame(matrix.matrix, index=matrix.labels, columns=matrix.labels)
    frame.index.name = "label"
    path = _prepare(path)
    frame.to_csv(path, lineterminator="\n")
    return path


def write_curves(path: PathLike, curves: Dict[tuple, Any]) -> Path:
    """`curves[(image_id, method)]` is a ProbabilityCurve."""
    rows: List[Dict[str, Any]] = []
    for (image_id, method) in sorted(curves):
        curve = curves[(image_id, method)]
        for point, (x, y) in enumerate(zip(curve.x, curve.y)):
            rows.append({"image_id": image_id, "method": method, "point": point, "x": float(x), "y": float(y)})
    return write_frame(path, pd.DataFrame(rows, columns=CURVE_COLUMNS))


def safe_name(label: str) -> str:
    return label.replace("/", "_")
