"""雷达感知与速度障碍避障闭环仿真"""
