"""
核心模块

包含基础组件：
- environment: 管道退化模拟器（状态、动作、奖励、转移）
- gym_env: gymnasium 适配器
- roster: 管道清单 CSV 加载
- dataset: 转移数据集（JSON-Lines 读写、划分、流式写入）
- rng: 随机数流派生
- errors: 异常定义

config.py 依赖 core.errors，因此本包不在导入时预加载子模块，请直接从子模块导入。
"""
