"""
core 模块的单元测试
"""
