import json
import logging
from pathlib import Path
from typing import Generic, Type, TypeVar, Union

from pydantic import BaseModel

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)

PathLike = Union[str, Path]


class BaseFileRepository(Generic[T]):
    """基础文件 Repository，提供 UTF-8 JSON 的读写"""

    def __init__(self, model_class: Type[T]):
        self.model_class = model_class

    @staticmethod
    def ensure_parent(path: PathLike) -> Path:
        """确保父目录存在"""
        target = Path(path)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def read(self, path: PathLike) -> T:
        """读取并校验 JSON 文件"""
        text = Path(path).read_text(encoding="utf-8")
        return self.model_class.model_validate(json.loads(text))

    def write(self, instance: T, path: PathLike) -> Path:
        """写出 JSON 文件"""
        target = self.ensure_parent(path)
        target.write_text(instance.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"已写出 {self.model_class.__name__}: {target}")
        return target

    def write_text(self, text: str, path: PathLike) -> Path:
        target = self.ensure_parent(path)
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return target
