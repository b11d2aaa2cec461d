import math

def solve(items):
    slot = cheapest_slot(bins, item)
    return items
