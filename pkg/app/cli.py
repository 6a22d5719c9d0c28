"""
jumplab 命令行入口

    jumplab verify --scene unit-circle --kernel riesz --points 8 --out report.json --csv table.csv
    jumplab constants --kernel cauchy-power --j 3 --direction 0,1 --numeric
    jumplab diagnose --scene unit-circle --delta-ladder 0.1,0.05,0.025
    jumplab check-kernel --kernel riesz --n 2
    jumplab serve

退出码：0 全部收敛且残差小于阈值；1 残差或收敛不满足；2 场景、核或配置错误。
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.api.schemas.experiment_schemas import ExperimentConfig
from app.config.settings import settings
from app.services.experiment_service import ExperimentService
from app.services.jump_service import JumpService
from app.services.kernel_service import KernelService
from app.utils.exceptions import JumpLabError
from app.utils.helpers import parse_float_list, unit_vector
from app.utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_SETUP = 2


def _add_kernel_args(parser: argparse.ArgumentParser, default: str = "riesz") -> None:
    parser.add_argument("--kernel", default=default, help="riesz | cauchy-power | double-layer")
    parser.add_argument("--n", type=int, default=None, help="Riesz/双层核的维数 n")
    parser.add_argument("--j", type=int, default=None, help="Cauchy 幂核的奇数幂 j")


def _add_experiment_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="ExperimentConfig JSON 文件，命令行参数覆盖其中的字段")
    parser.add_argument("--scene", default=None, help="内置场景名或场景 JSON 文件")
    _add_kernel_args(parser, default=None)
    parser.add_argument("--points", type=int, default=None)
    parser.add_argument("--a", type=float, default=None, help="锥开口参数 a")
    parser.add_argument("--b", type=float, default=None, help="截断参数 b")
    parser.add_argument("--tol", type=float, default=None, help="极限判据容差")
    parser.add_argument("--residual-tol", type=float, default=None)
    parser.add_argument("--out", default=None, help="JSON 输出路径")
    parser.add_argument("--csv", default=None, help="CSV 输出路径")
    parser.add_argument("--plot", default=None, help="SVG 输出路径")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumplab", description="奇异积分跳跃公式的数值验证")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="在评估点上验证跳跃公式")
    _add_experiment_args(verify)
    verify.add_argument("--reflection-checks", action="store_true")

    constants = sub.add_parser("constants", help="计算跳跃常数 C_K(N)")
    _add_kernel_args(constants)
    constants.add_argument("--direction", required=True, help="x,y[,z]，自动归一化")
    constants.add_argument("--numeric", action="store_true", help="忽略闭式，走数值积分")

    diagnose = sub.add_parser("diagnose", help="S_δ / S̃_δ 诊断扫描")
    _add_experiment_args(diagnose)
    diagnose.add_argument("--delta-ladder", default=None, help="逗号分隔的 δ 序列，缺省取 DIAGNOSTIC_DELTA_LADDER")

    check = sub.add_parser("check-kernel", help="检查核的奇性、齐次性与 CZ 常数")
    _add_kernel_args(check)
    check.add_argument("--samples", type=int, default=10_000)
    check.add_argument("--seed", type=int, default=0)

    serve = sub.add_parser("serve", help="启动 HTTP 服务")
    serve.add_argument("--host", default=settings.API_HOST)
    serve.add_argument("--port", type=int, default=settings.API_PORT)
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """由命令行参数（以及可选的配置文件）构造实验配置"""
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    if args.scene is not None:
        data["scene"] = args.scene
    kernel = dict(data.get("kernel") or {})
    for key in ("kernel", "n", "j"):
        value = getattr(args, key)
        if value is not None:
            kernel["name" if key == "kernel" else key] = value
    if kernel:
        data["kernel"] = kernel
    for key in ("points", "a", "b"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.tol is not None:
        data["extrapolation"] = {**(data.get("extrapolation") or {}), "tol": args.tol}
    if args.residual_tol is not None:
        data["residual_tol"] = args.residual_tol
    for key, attr in (("output", "out"), ("csv", "csv"), ("plot", "plot")):
        value = getattr(args, attr)
        if value is not None:
            data[key] = value
    if getattr(args, "reflection_checks", False):
        data["reflection_checks"] = True
    if getattr(args, "delta_ladder", None):
        data["delta_ladder"] = parse_float_list(args.delta_ladder)
    return ExperimentConfig.model_validate(data)


def _print_json(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def cmd_verify(args: argparse.Namespace) -> int:
    config = build_config(args)
    service = ExperimentService()
    if config.kernel.name.strip().lower() == "double-layer":
        report = service.run_double_layer(config)
    else:
        report = service.run_experiment(config)
    _print_json({
        "scene": report.scene.get("name"),
        "kernel": report.kernel.get("name"),
        "mode": report.mode,
        "points": len(report.points),
        "all_converged": report.all_converged,
        "passed": report.passed,
        "max_residual_avg": report.max_residual_avg,
        "max_residual_jump": report.max_residual_jump,
    })
    return service.exit_code(report)


def cmd_constants(args: argparse.Namespace) -> int:
    kernel = KernelService().get_kernel(args.kernel, n=args.n, j=args.j)
    direction = unit_vector(parse_float_list(args.direction))
    _print_json(JumpService().describe_constant(kernel, direction, numeric=args.numeric))
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    config = build_config(args)
    table = ExperimentService().diagnostic_sweep(config)
    _print_json([row.model_dump() for row in table.rows])
    return EXIT_OK


def cmd_check_kernel(args: argparse.Namespace) -> int:
    service = KernelService()
    kernel = service.get_kernel(args.kernel, n=args.n, j=args.j)
    _print_json(service.check_report(kernel, sample_count=args.samples, seed=args.seed))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, reload=False)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "constants": cmd_constants,
    "diagnose": cmd_diagnose,
    "check-kernel": cmd_check_kernel,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (JumpLabError, ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command} 失败: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SETUP


if __name__ == "__main__":
    sys.exit(main())
