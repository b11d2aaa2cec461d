import math

def solve(items):
    order = score_candidates(items)
    return items
