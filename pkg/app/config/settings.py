from typing import List

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置"""

    # 应用配置
    APP_NAME: str = "jumplab 奇异积分跳跃公式验证工具"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # 日志配置
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"
    LOG_DIR: str = "logs"
    LOG_FILE: str = "jumplab.log"

    # 并行配置
    JUMPLAB_THREADS: int = 1
    JUMPLAB_PARALLEL_BACKEND: str = "threading"

    # 求积配置
    QUAD_ORDER: int = 5
    QUAD_ABS_TOL: float = 1e-10
    QUAD_REL_TOL: float = 1e-10
    QUAD_MAX_CELLS: int = 1_000_000
    QUAD_INITIAL_CELLS: int = 8
    QUAD_EXCLUSION_REFINE: float = 1e-2
    QUAD_LINE_SAMPLES: int = 9
    QUAD_MAX_ROUNDS: int = 400

    # 极限外推配置
    LIMIT_RATIO: float = 0.5
    LIMIT_MAX_STEPS: int = 24
    LIMIT_TOL: float = 1e-6
    LIMIT_EPS0_FACTOR: float = 0.1
    LIMIT_RICHARDSON_ORDER: int = 0

    # 锥与截断参数
    CONE_APERTURE: float = 0.5
    CONE_TRUNCATION: float = 0.25

    # 跳跃常数配置
    JUMP_RADIUS: float = 1e4
    JUMP_TAIL_TOL: float = 1e-8
    JUMP_RADIAL_ORDER: int = 20
    JUMP_ANGULAR_NODES: int = 64
    JUMP_TAIL_CORRECTION: bool = True

    # 测度配置
    MAXIMAL_RADII: int = 40

    # 实验配置
    RESIDUAL_TOL: float = 1e-3
    DIAGNOSTIC_SAMPLES: int = 60          # 每个评估点的锥内采样点数
    # 圆周上 S_δ 约为 πδ，末项落在 1e-2 以下
    DIAGNOSTIC_DELTA_LADDER: List[float] = [0.02, 0.01, 0.005, 0.0025, 0.00125]
    FAR_FIELD_CORRECTION: bool = False

    # 服务配置
    API_HOST: str = "0.0.0.0"
    API_PORT: int = 8000

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


# 创建全局配置实例
settings = Settings()
