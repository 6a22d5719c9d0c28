"""
jumplab - FastAPI 主应用入口
Description: 提供核函数检查、跳跃常数与跳跃公式验证实验的 REST 接口
"""

import logging
import platform
from contextlib import asynccontextmanager

import psutil
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.routes import constants, experiments, kernels, scenes
from app.config.settings import settings
from app.utils.exceptions import JumpLabError
from app.utils.helpers import format_timestamp
from app.utils.logger import setup_logging

# 设置日志
setup_logging()
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    应用生命周期管理
    """
    logger.info(f"{settings.APP_NAME} 启动, 并行线程数={settings.JUMPLAB_THREADS}")
    yield
    logger.info(f"{settings.APP_NAME} 已关闭")


def create_application() -> FastAPI:
    """创建并配置FastAPI应用实例"""

    app = FastAPI(
        title=settings.APP_NAME,
        description="奇异积分主值、非切向极限与跳跃公式的数值验证",
        version=settings.APP_VERSION,
        docs_url="/docs",
        redoc_url="/redoc",
        lifespan=lifespan,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["http://localhost:3000"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # 全局异常处理
    @app.exception_handler(HTTPException)
    async def http_exception_handler(request, exc):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": exc.detail}
        )

    @app.exception_handler(JumpLabError)
    async def jumplab_exception_handler(request, exc):
        logger.warning(f"请求参数或计算错误: {exc}")
        return JSONResponse(
            status_code=422,
            content={"error": str(exc), "type": type(exc).__name__}
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(request, exc):
        logger.error(f"未处理的异常: {exc}", exc_info=True)
        return JSONResponse(
            status_code=500,
            content={"error": "内部服务器错误"}
        )

    app.include_router(kernels.router, prefix="/api/v1/kernels", tags=["核函数"])
    app.include_router(constants.router, prefix="/api/v1/constants", tags=["跳跃常数"])
    app.include_router(scenes.router, prefix="/api/v1/scenes", tags=["场景"])
    app.include_router(experiments.router, prefix="/api/v1/experiments", tags=["验证实验"])

    @app.get("/")
    async def root():
        """根端点 - 服务状态检查"""
        return {
            "status": "running",
            "service": settings.APP_NAME,
            "version": settings.APP_VERSION,
            "timestamp": format_timestamp(),
        }

    @app.get("/health")
    async def health_check():
        """健康检查端点"""
        return {"status": "healthy", "timestamp": format_timestamp()}

    @app.get("/api/v1/system/info")
    async def system_info():
        """系统信息端点"""
        return {
            "python_version": platform.python_version(),
            "platform": platform.platform(),
            "cpu_count": psutil.cpu_count(),
            "cpu_usage": psutil.cpu_percent(),
            "memory_usage": psutil.virtual_memory().percent,
            "threads": settings.JUMPLAB_THREADS,
            "parallel_backend": settings.JUMPLAB_PARALLEL_BACKEND,
        }

    return app


# 创建应用实例
app = create_application()
