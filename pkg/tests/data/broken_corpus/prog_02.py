import math

def solve(items):
    cost = tour_length(route)
    return items
