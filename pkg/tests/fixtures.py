"""Banana delivery example: ten stores, seven features"""

from pathlib import Path

import numpy as np

from evodata.dataset import FitnessMatrix

DATA = Path(__file__).parent / "data"
SUPERMARKET_CSV = DATA / "supermarket.csv"
SUPERMARKET_SCHEMA = DATA / "supermarket.schema"

STORES = tuple("ABCDEFGHIJ")
FEATURES = (
    "distance",
    "store space",
    "storage space left",
    "monthly revenue",
    "bananas sold",
    "A/C grade",
    "flagship",
)

RAW = np.array([
    [20, 400, 80, 2.0, 100, 1, 0],
    [20, 250, 110, 1.2, 90, 2, 0],
    [20, 300, 70, 2.3, 115, 2, 0],
    [40, 250, 130, 1.0, 50, 1, 1],
    [50, 400, 30, 1.4, 80, 3, 1],
    [70, 300, 100, 2.4, 90, 2, 0],
    [100, 250, 120, 1.3, 100, 2, 0],
    [150, 350, 70, 2.7, 110, 1, 1],
    [200, 650, 40, 0.8, 140, 2, 1],
    [200, 500, 60, 2.3, 120, 3, 0],
])

# Normalized by hand: distance is smaller-is-better
PHI = RAW / RAW.max(axis=0)
PHI[:, 0] = 1.0 - RAW[:, 0] / RAW[:, 0].max()

# Printed with two decimals
PHI_PRINTED = np.array([
    [0.90, 0.62, 0.62, 0.74, 0.71, 0.33, 0.00],
    [0.90, 0.38, 0.85, 0.44, 0.64, 0.67, 0.00],
    [0.90, 0.46, 0.54, 0.85, 0.82, 0.67, 0.00],
    [0.80, 0.38, 1.00, 0.37, 0.36, 0.33, 1.00],
    [0.75, 0.62, 0.23, 0.52, 0.57, 1.00, 1.00],
    [0.65, 0.46, 0.77, 0.89, 0.64, 0.67, 0.00],
    [0.50, 0.38, 0.92, 0.48, 0.71, 0.67, 0.00],
    [0.25, 0.54, 0.54, 1.00, 0.79, 0.33, 1.00],
    [0.00, 1.00, 0.31, 0.30, 1.00, 0.67, 1.00],
    [0.00, 0.77, 0.46, 0.85, 0.86, 1.00, 0.00],
])

MEANS_PRINTED = np.array([0.57, 0.56, 0.62, 0.64, 0.71, 0.63, 0.40])
MEANS = np.array([
    0.565, 0.5615385, 0.6230769, 0.6444444, 0.7107143, 0.6333333, 0.4,
])

GENE_DISPERSION = {"full": 0.0952071964, "distinct": 0.1110750625}
ORGANISM_DISPERSION = {"full": 0.0454511309, "distinct": 0.0505012565}

DOMBAL_DELTA_UNIFORM = np.array([
    0.0167594877, 0.0172539932, 0.0084627844, 0.0054102813,
    -0.0040568389, 0.0069975829, 0.0403309162,
])
ALTSEL_DELTA_UNIFORM = np.array([
    -0.1241350315, -0.0440836977, -0.0482534723, -0.0730939949,
    -0.0559168121, -0.0693703107, -0.3226136219,
])

DOMBAL_REST_PRINTED = np.array([0.15, 0.15, 0.14, 0.14, 0.13, 0.14, 0.17])
DOMBAL_REST = np.array([
    0.1452471579, 0.1457207899, 0.1377360891, 0.1351644668,
    0.1277660840, 0.1364896087, 0.1718758035,
])

# The printed vector disagrees with the rest point of the printed D
ALTSEL_REST_PRINTED = np.array([0.09, 0.21, 0.19, 0.13, 0.16, 0.14, 0.07])
ALTSEL_REST = np.array([
    0.0966, 0.2323, 0.1956, 0.1324, 0.1608, 0.1394, 0.0428,
])

DW_PRINTED = np.array([
    [-3.81, 1.46, -1.09, 0.19, 1.18, 0.69, 1.45],
    [1.46, -1.14, 1.15, 0.15, -0.69, -0.43, -0.91],
    [-1.09, 1.15, -1.94, 0.30, 0.75, 0.90, 1.32],
    [0.19, 0.15, 0.30, -1.85, -0.30, 0.11, 1.23],
    [1.18, -0.69, 0.75, -0.30, -0.89, -0.30, 0.43],
    [0.69, -0.43, 0.90, 0.11, -0.30, -1.79, 0.64],
    [1.45, -0.91, 1.32, 1.23, 0.43, 0.64, -7.69],
])

D_PRINTED = np.array([
    [-3.81, 0.22, -1.72, -0.72, 0.07, -0.34, 0.22],
    [0.84, -1.14, 0.62, -0.14, -0.73, -0.58, -1.04],
    [-1.35, 0.34, -1.94, -0.22, 0.18, 0.23, 0.41],
    [-0.37, -0.44, -0.24, -1.85, -0.61, -0.37, 0.30],
    [0.45, -1.01, 0.20, -0.57, -0.89, -0.58, -0.33],
    [0.04, -0.85, 0.25, -0.34, -0.58, -1.79, -0.12],
    [-0.68, -2.64, -0.84, -0.93, -1.62, -1.41, -7.69],
])

# Organism fitness at the rest points
DOMBAL_R = np.array([
    0.5420, 0.5365, 0.5832, 0.6230, 0.6819,
    0.5609, 0.5031, 0.6419, 0.6188, 0.5368,
])
ALTSEL_R = np.array([
    0.6097, 0.5970, 0.6373, 0.5581, 0.6033,
    0.6345, 0.5898, 0.6026, 0.6283, 0.6590,
])


def supermarket() -> FitnessMatrix:
    return FitnessMatrix(PHI, FEATURES, STORES)


def random_phi(rng: np.random.Generator, n: int, m: int) -> FitnessMatrix:
    return FitnessMatrix.from_array(rng.uniform(0.0, 1.0, size=(n, m)))
