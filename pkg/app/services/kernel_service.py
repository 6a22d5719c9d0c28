import logging
from typing import Any, Dict, List, Optional

import numpy as np

from app.models.kernel import KERNEL_NAMES, Kernel, make_kernel
from app.utils.exceptions import ConfigurationError, KernelDomainError

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
_CHUNK = 100_000


class KernelService:
    """核函数服务：构造内置核并数值检查 Calderón-Zygmund 条件"""

    def __init__(self):
        logger.info("核函数服务初始化完成")

    def get_kernel(self, name: str, n: Optional[int] = None, j: Optional[int] = None) -> Kernel:
        kernel = make_kernel(name, n=n, j=j)
        logger.debug(f"构造核函数: {kernel.describe()}")
        return kernel

    def list_kernels(self) -> List[Dict[str, Any]]:
        """内置核及其默认参数"""
        return [make_kernel(name).describe() for name in KERNEL_NAMES]

    @staticmethod
    def _unit_samples(kernel: Kernel, count: int, rng: np.random.Generator) -> np.ndarray:
        x = rng.standard_normal((count, kernel.ambient_dim))
        return x / np.linalg.norm(x, axis=1)[:, None]

    def check_cz_bounds(self, kernel: Kernel, sample_count: int, j: int, seed: int = 0) -> float:
        """
        估计 sup |∇^j K(x)|·|x|^{n+j}

        Args:
            kernel: 待检查的核
            sample_count: 随机样本数
            j: 导数阶数 0, 1, 2
            seed: 随机种子

        Returns:
            float: 样本上的最大值（中心差分，步长 1e-5，Frobenius 范数）
        """
        if sample_count < 1:
            raise ConfigurationError("sample_count 必须 >= 1")
        if j not in (0, 1, 2):
            raise ConfigurationError(f"导数阶数只支持 0, 1, 2: j={j}")
        rng = np.random.default_rng(seed)
        d = kernel.ambient_dim
        points = self._unit_samples(kernel, sample_count, rng) * rng.uniform(0.5, 2.0, sample_count)[:, None]
        radii = np.linalg.norm(points, axis=1)
        h = FD_STEP
        eye = np.eye(d) * h

        if j == 0:
            values = kernel.evaluate(points)
            norms = np.linalg.norm(values, axis=1)
        elif j == 1:
            cols = [(kernel.evaluate(points + e) - kernel.evaluate(points - e)) / (2.0 * h) for e in eye]
            grad = np.stack(cols, axis=2)
            norms = np.sqrt(np.sum(grad ** 2, axis=(1, 2)))
        else:
            entries = []
            for ei in eye:
                for el in eye:
                    entries.append((
                        kernel.evaluate(points + ei + el) - kernel.evaluate(points + ei - el)
                        - kernel.evaluate(points - ei + el) + kernel.evaluate(points - ei - el)
                    ) / (4.0 * h * h))
            hess = np.stack(entries, axis=2)
            norms = np.sqrt(np.sum(hess ** 2, axis=(1, 2)))

        scaled = norms * radii ** (kernel.n + j)
        if not np.all(np.isfinite(scaled)):
            raise KernelDomainError(f"核 {kernel.name} 在样本点上取到非有限值")
        return float(scaled.max())

    def check_oddness(self, kernel: Kernel, sample_count: int, seed: int = 0) -> float:
        """max |K(-x) + K(x)| / |K(x)|"""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for start in range(0, sample_count, _CHUNK):
            m = min(_CHUNK, sample_count - start)
            x = rng.standard_normal((m, kernel.ambient_dim)) * np.exp(rng.uniform(-3.0, 3.0, m))[:, None]
            k = kernel.evaluate(x)
            dev = np.linalg.norm(kernel.evaluate(-x) + k, axis=1) / np.linalg.norm(k, axis=1)
            worst = max(worst, float(dev.max()))
        return worst

    def check_homogeneity(self, kernel: Kernel, sample_count: int, seed: int = 0) -> float:
        """max |K(λx) - λ^{-n} K(x)| / |λ^{-n} K(x)|"""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for start in range(0, sample_count, _CHUNK):
            m = min(_CHUNK, sample_count - start)
            x = rng.standard_normal((m, kernel.ambient_dim))
            lam = np.exp(rng.uniform(np.log(0.1), np.log(10.0), m))
            expected = kernel.evaluate(x) * (lam ** (-kernel.n))[:, None]
            dev = np.linalg.norm(kernel.evaluate(x * lam[:, None]) - expected, axis=1)
            dev = dev / np.linalg.norm(expected, axis=1)
            worst = max(worst, float(dev.max()))
        return worst

    def check_report(self, kernel: Kernel, sample_count: int = 10_000, seed: int = 0) -> Dict[str, Any]:
        """奇性、齐次性与 j = 0, 1, 2 的 CZ 常数"""
        report = {
            "kernel": kernel.describe(),
            "samples": sample_count,
            "oddness": self.check_oddness(kernel, sample_count, seed),
            "homogeneity": self.check_homogeneity(kernel, sample_count, seed),
            "cz_constants": {
                str(j): self.check_cz_bounds(kernel, min(sample_count, 2_000), j, seed) for j in (0, 1, 2)
            },
        }
        logger.info(f"核函数检查完成: {kernel.name}, 奇性偏差={report['oddness']:.2e}")
        return report
