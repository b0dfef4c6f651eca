"""
端到端学习效果测试（耗时数十分钟，设置 REHAB_SLOW_TESTS=1 后运行）
"""
