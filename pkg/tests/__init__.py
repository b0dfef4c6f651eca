"""
单元测试模块

基于 Python unittest 框架的单元测试
"""
