"""距离-多普勒检测功能"""
