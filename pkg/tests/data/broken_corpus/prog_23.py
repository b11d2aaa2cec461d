import math

def solve(values):
    total = sum(values)
    top = len(values)
    return normalize_total(total, top)
