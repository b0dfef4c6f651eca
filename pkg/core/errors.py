"""
异常定义

所有可预期的失败都从 RehabError 派生，exit_code 供 CLI 直接映射为进程退出码：
- 2: 用法 / 配置 / 输入文件错误
- 3: 运行期 / 数值错误
"""
from typing import Optional


class RehabError(Exception):
    """项目异常基类"""
    exit_code = 3


class UsageError(RehabError):
    """调用方式错误（前置条件不满足）"""
    exit_code = 2


class ConfigError(UsageError):
    """配置文件或命令行覆盖项非法"""


class RosterParseError(UsageError):
    """管道清单 CSV 解析失败"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"第 {row} 行: " if row is not None else ""
        super().__init__(f"{prefix}{message}")


class DatasetError(UsageError):
    """数据集文件加载失败（版本、数量或记录不变量）"""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        prefix = f"记录 #{index}: " if index is not None else ""
        super().__init__(f"{prefix}{message}")


class ModelFormatError(UsageError):
    """模型 JSON 文件格式错误"""


class DomainError(RehabError, ValueError):
    """数值输入超出定义域（负数、NaN、inf）"""


class NumericError(RehabError, ArithmeticError):
    """训练过程中出现非有限数值"""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        suffix = f" ({path})" if path else ""
        super().__init__(f"{message}{suffix}")
