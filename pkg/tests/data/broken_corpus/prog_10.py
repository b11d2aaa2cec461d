import math

def solve(items):
    e = energy_left(route)
    return items
