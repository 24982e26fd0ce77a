"""多目标跟踪功能"""
