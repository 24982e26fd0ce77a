"""雷达信号模型功能"""
