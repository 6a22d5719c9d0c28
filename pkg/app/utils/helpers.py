import math
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np


def format_timestamp(dt: datetime = None) -> str:
    """格式化时间戳（UTC, ISO 8601）"""
    if not dt:
        dt = datetime.now(timezone.utc)
    return dt.astimezone(timezone.utc).replace(tzinfo=None).isoformat() + "Z"


def pairwise_sum(values: Sequence[np.ndarray]) -> np.ndarray:
    """
    按顺序做两两求和，结果只依赖输入顺序，与并行方式无关

    Args:
        values: 形状相同的数组序列

    Returns:
        np.ndarray: 求和结果
    """
    if len(values) == 0:
        raise ValueError("pairwise_sum 需要至少一个元素")
    items = list(values)
    while len(items) > 1:
        merged = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return np.asarray(items[0], dtype=float)


def geometric_grid(start: float, stop: float, count: int) -> np.ndarray:
    """从 start 到 stop 的几何网格（包含两端）"""
    if count < 1 or start <= 0 or stop <= 0:
        raise ValueError("几何网格要求 count >= 1 且端点为正")
    if count == 1:
        return np.array([start], dtype=float)
    return np.geomspace(start, stop, count)


def unit_vector(v: Iterable[float]) -> np.ndarray:
    """归一化向量，零向量抛出异常"""
    arr = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError("无法归一化零向量")
    return arr / norm


def parse_vector(text: str) -> np.ndarray:
    """解析 "x,y[,z]" 形式的命令行向量"""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"无法解析向量: {text}") from e
    if not values:
        raise ValueError(f"空向量: {text}")
    return np.asarray(values, dtype=float)


def parse_float_list(text: str) -> list:
    """解析逗号分隔的浮点数列表"""
    return [float(v) for v in parse_vector(text)]


def as_float_list(values) -> list:
    """numpy 数组转为普通 float 列表，便于 JSON 序列化"""
    return [float(v) for v in np.atleast_1d(np.asarray(values, dtype=float))]
