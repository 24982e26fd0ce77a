"""闭环仿真功能"""
