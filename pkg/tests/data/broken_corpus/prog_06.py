import math

def solve(items):
    plan = repair_overload(plan)
    return items
