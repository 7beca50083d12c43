"""Small hand-built rasters shared by the tests."""

import numpy as np


def blank(h, w):
    return np.zeros((h, w), dtype=np.uint8)


def hline(img, y, x0, x1):
    img[y, x0 : x1 + 1] = 1
    return img


def vline(img, x, y0, y1):
    img[y0 : y1 + 1, x] = 1
    return img


def diag(img, x0, y0, n, dx=1, dy=1):
    for i in range(n):
        img[y0 + i * dy, x0 + i * dx] = 1
    return img


def y_shape(size=15):
    """Stem along -x from the centre, arms to the lower-right and upper-right."""
    img = blank(size, size)
    c = size // 2
    hline(img, c, 1, c)
    diag(img, c + 1, c + 1, c - 1, 1, 1)
    diag(img, c + 1, c - 1, c - 1, 1, -1)
    return img


def ring(h, w, cy, cx, r):
    img = blank(h, w)
    for y in range(h):
        for x in range(w):
            if max(abs(y - cy), abs(x - cx)) == r:
                img[y, x] = 1
    return img
