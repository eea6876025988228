"""Confusion matrix and classification report as printed in the paper's results table.

Rows are actual DJs, columns predicted DJs. Four report cells are printed
without a leading "0." (585, 760, 731, 364) and are read as decimals.
"""
CLASSES = ["Martin Garrix", "D. Vegas & L. Mike", "Hardwell", "Armin van Buuren",
           "David Guetta", "Dj Tiësto", "Don Diablo", "Afrojack", "Oliver Heldens", "Marshmello"]

COUNTS = [
    [10, 0, 0, 1, 2, 3, 0, 0, 0, 0],
    [0, 6, 0, 1, 0, 0, 0, 1, 1, 1],
    [0, 1, 0, 1, 0, 1, 0, 0, 0, 0],
    [0, 2, 1, 2, 0, 5, 0, 0, 0, 1],
    [1, 0, 0, 0, 5, 0, 2, 2, 0, 0],
    [1, 0, 1, 0, 0, 12, 2, 0, 0, 0],
    [0, 0, 1, 1, 0, 2, 19, 0, 1, 1],
    [0, 0, 1, 0, 0, 1, 1, 2, 0, 0],
    [0, 0, 0, 0, 1, 0, 3, 1, 6, 0],
    [0, 0, 0, 1, 1, 0, 0, 0, 1, 17],
]

# (precision, recall, f1) per class
PRINTED = [
    (0.833, 0.625, 0.714),
    (0.667, 0.600, 0.632),
    (0.0, 0.0, 0.0),
    (0.333, 0.182, 0.235),
    (0.556, 0.500, 0.526),
    (0.480, 0.750, 0.585),
    (0.704, 0.760, 0.731),
    (0.333, 0.400, 0.364),
    (0.667, 0.545, 0.600),
    (0.850, 0.850, 0.850),
]

SUPPORT = [16, 10, 3, 11, 11, 16, 25, 5, 11, 20]
AVERAGE = (0.634, 0.622, 0.619)


def label_sequences():
    """Actual and predicted label lists that reproduce COUNTS exactly."""
    actual, predicted = [], []
    for i, row in enumerate(COUNTS):
        for j, n in enumerate(row):
            actual += [CLASSES[i]] * n
            predicted += [CLASSES[j]] * n
    return actual, predicted
