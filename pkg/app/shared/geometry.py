"""平面几何工具

角度归一化、二维旋转以及极坐标/笛卡尔坐标转换
"""

import math

import numpy as np


def wrap_angle(angle: float) -> float:
    """将角度归一化到 (-π, π]"""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def rotate(vector: np.ndarray, angle: float) -> np.ndarray:
    """将二维向量逆时针旋转 angle 弧度"""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * vector[0] - s * vector[1], s * vector[0] + c * vector[1]])


def world_to_body(vector: np.ndarray, heading: float) -> np.ndarray:
    return rotate(vector, -heading)


def body_to_world(vector: np.ndarray, heading: float) -> np.ndarray:
    return rotate(vector, heading)


def unit(vector: np.ndarray) -> np.ndarray:
    """单位向量，零向量返回零向量"""
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        return np.zeros(2)
    return np.asarray(vector, dtype=float) / norm


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """两个二维向量之间的无符号夹角 [0, π]"""
    cross = a[0] * b[1] - a[1] * b[0]
    dot = a[0] * b[0] + a[1] * b[1]
    return abs(math.atan2(cross, dot))


def polar_to_cartesian(r: float, theta: float) -> np.ndarray:
    return np.array([r * math.cos(theta), r * math.sin(theta)])
