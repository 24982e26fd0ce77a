"""速度障碍避障功能"""
